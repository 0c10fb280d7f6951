//! Electrode subsets used for comparing array configurations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::emg::EmgRecording;
use crate::error::{Error, Result};

/// Rows run proximo-distally (row 0 proximal), columns around the forearm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridSelection {
    #[serde(rename = "32x2")]
    Full32x2,
    #[serde(rename = "16x4")]
    Gel16x4,
    #[serde(rename = "16x2")]
    Alternate16x2,
    #[serde(rename = "32x1-proximal")]
    Proximal32x1,
    #[serde(rename = "32x1-distal")]
    Distal32x1,
}

impl GridSelection {
    pub const ALL: [GridSelection; 5] =
        [Self::Full32x2, Self::Gel16x4, Self::Alternate16x2, Self::Proximal32x1, Self::Distal32x1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full32x2 => "32x2",
            Self::Gel16x4 => "16x4",
            Self::Alternate16x2 => "16x2",
            Self::Proximal32x1 => "32x1-proximal",
            Self::Distal32x1 => "32x1-distal",
        }
    }

    /// `(row, col)` cells kept from a source grid, in row-major order of the result, and the result grid.
    pub fn cells(self, grid: (usize, usize)) -> Result<(Vec<(usize, usize)>, (usize, usize))> {
        let bad = || Error::Config(format!("selection {} does not apply to a {}x{} grid", self.name(), grid.0, grid.1));
        let (rows, cols): (Vec<usize>, Vec<usize>) = match (self, grid) {
            (Self::Full32x2, (2, 32)) => ((0..2).collect(), (0..32).collect()),
            (Self::Gel16x4, (r, 16)) if r >= 4 => ((0..4).collect(), (0..16).collect()),
            (Self::Alternate16x2, (2, 32)) => ((0..2).collect(), (0..32).step_by(2).collect()),
            (Self::Alternate16x2, (4, 16)) => ((0..4).step_by(2).collect(), (0..16).collect()),
            (Self::Proximal32x1, (2, 32)) => (vec![0], (0..32).collect()),
            (Self::Distal32x1, (2, 32)) => (vec![1], (0..32).collect()),
            _ => return Err(bad()),
        };
        let shape = (rows.len(), cols.len());
        Ok((rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect(), shape))
    }

    pub fn apply(self, rec: &EmgRecording) -> Result<EmgRecording> {
        let (cells, shape) = self.cells(rec.grid)?;
        let channels: Vec<usize> = cells
            .iter()
            .map(|&(r, c)| rec.channel_at(r, c).ok_or_else(|| Error::Config(format!("no channel at row {r}, column {c}"))))
            .collect::<Result<_>>()?;
        let map = (0..shape.0).flat_map(|r| (0..shape.1).map(move |c| (r, c))).collect();
        rec.select_channels(&channels, shape, map)
    }
}

impl fmt::Display for GridSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GridSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown grid selection {s:?}; expected one of 32x2, 16x4, 16x2, 32x1-proximal, 32x1-distal")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::EmgMeta;
    use ndarray::Array2;

    fn rec(rows: usize, cols: usize) -> EmgRecording {
        let n = rows * cols;
        let samples = Array2::from_shape_fn((4, n), |(_, c)| c as i32);
        EmgRecording::new(samples, &EmgMeta::standard(rows, cols)).unwrap()
    }

    #[test]
    fn alternate_columns() {
        let r = GridSelection::Alternate16x2.apply(&rec(2, 32)).unwrap();
        assert_eq!(r.n_channels(), 32);
        assert_eq!(r.grid, (2, 16));
        let kept: Vec<i32> = r.samples.row(0).to_vec();
        let want: Vec<i32> = (0..2).flat_map(|row| (0..32).step_by(2).map(move |c| (row * 32 + c) as i32)).collect();
        assert_eq!(kept, want);
    }

    #[test]
    fn single_rows() {
        let p = GridSelection::Proximal32x1.apply(&rec(2, 32)).unwrap();
        let d = GridSelection::Distal32x1.apply(&rec(2, 32)).unwrap();
        assert_eq!(p.samples.row(0).to_vec(), (0..32).collect::<Vec<i32>>());
        assert_eq!(d.samples.row(0).to_vec(), (32..64).collect::<Vec<i32>>());
    }

    #[test]
    fn four_proximal_rows_of_six() {
        let g = GridSelection::Gel16x4.apply(&rec(6, 16)).unwrap();
        assert_eq!((g.n_channels(), g.grid), (64, (4, 16)));
        assert_eq!(*g.samples.row(0).last().unwrap(), 63);
    }

    #[test]
    fn mismatched_grid_and_names() {
        assert!(GridSelection::Proximal32x1.apply(&rec(4, 16)).is_err());
        for g in GridSelection::ALL {
            assert_eq!(g.name().parse::<GridSelection>().unwrap(), g);
            assert_eq!(serde_json::to_string(&g).unwrap(), format!("\"{}\"", g.name()));
        }
        assert!("8x8".parse::<GridSelection>().is_err());
    }
}
