//! Normalized dimensional variance of RMS maps along the two grid axes.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::{self, Alternative, TestReport};

/// Proximo-distal rows of the variance grid.
pub const NDV_ROWS: usize = 6;
/// Circumferential columns of the variance grid.
pub const NDV_COLS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdvResult<T> {
    /// Variance across rows, one value per column.
    pub proximo_distal: Vec<T>,
    /// Variance across columns, one value per row.
    pub circumferential: Vec<T>,
    /// Channels left out for having a zero temporal mean.
    pub excluded: Vec<usize>,
}

/// `rms` is `n x C` with `C = rows * cols`; `map[c]` is the `(row, col)` of
/// channel `c` (row-major when `None`). Rows run proximo-distally.
pub fn ndv<T: Real>(
    rms: ArrayView2<T>,
    rows: usize,
    cols: usize,
    map: Option<&[(usize, usize)]>,
) -> Result<NdvResult<T>> {
    let (n, c) = rms.dim();
    if rows * cols != c {
        return Err(Error::Shape(format!("grid {rows}x{cols} for {c} channels")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty RMS matrix".into()));
    }
    let pos: Vec<(usize, usize)> = match map {
        Some(m) if m.len() == c => m.to_vec(),
        Some(_) => return Err(Error::Shape("channel map length differs from channel count".into())),
        None => (0..c).map(|k| (k / cols, k % cols)).collect(),
    };
    let mut slot = vec![None; c];
    for (ch, &(r, q)) in pos.iter().enumerate() {
        if r >= rows || q >= cols || slot[r * cols + q].is_some() {
            return Err(Error::Config(format!("channel map entry ({r}, {q}) is invalid or repeated")));
        }
        slot[r * cols + q] = Some(ch);
    }

    let means: Vec<T> = (0..c)
        .map(|ch| rms.column(ch).iter().fold(T::zero(), |a, &v| a + v) / T::of_usize(n))
        .collect();
    let excluded: Vec<usize> = (0..c).filter(|&ch| !(means[ch].abs() > T::zero())).collect();
    if !excluded.is_empty() {
        log::warn!("channels with zero temporal mean excluded from NDV: {excluded:?}");
    }
    let usable = |ch: usize| !excluded.contains(&ch);

    // lines[k] lists the channels sharing one column (pd) or one row (circ)
    let pd_lines: Vec<Vec<usize>> = (0..cols)
        .map(|q| (0..rows).filter_map(|r| slot[r * cols + q]).filter(|&ch| usable(ch)).collect())
        .collect();
    let circ_lines: Vec<Vec<usize>> = (0..rows)
        .map(|r| (0..cols).filter_map(|q| slot[r * cols + q]).filter(|&ch| usable(ch)).collect())
        .collect();
    if pd_lines.iter().chain(&circ_lines).any(|l| l.len() < 2) {
        return Err(Error::Degenerate(
            "a grid row or column has fewer than two usable channels".into(),
        ));
    }

    let line_mean = |lines: &[Vec<usize>]| -> Vec<T> {
        let mut acc = vec![T::zero(); lines.len()];
        let mut buf = Vec::new();
        for t in 0..n {
            for (k, line) in lines.iter().enumerate() {
                buf.clear();
                buf.extend(line.iter().map(|&ch| rms[[t, ch]] / means[ch]));
                acc[k] += stats::variance(&buf);
            }
        }
        acc.into_iter().map(|v| v / T::of_usize(n)).collect()
    };

    Ok(NdvResult {
        proximo_distal: line_mean(&pd_lines),
        circumferential: line_mean(&circ_lines),
        excluded,
    })
}

/// Pool NDV results, e.g. across subjects.
pub fn pool<T: Real>(results: &[NdvResult<T>]) -> (Vec<T>, Vec<T>) {
    let pd = results.iter().flat_map(|r| r.proximo_distal.iter().copied()).collect();
    let circ = results.iter().flat_map(|r| r.circumferential.iter().copied()).collect();
    (pd, circ)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub median: f64,
    pub iqr: f64,
    /// Normality test, when the group is large enough.
    pub shapiro_wilk: Option<TestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdvComparison {
    pub test: TestReport,
    pub proximo_distal: GroupSummary,
    pub circumferential: GroupSummary,
}

fn summarize<T: Real>(x: &[T]) -> Result<GroupSummary> {
    let q = stats::quartiles(x)?;
    Ok(GroupSummary {
        n: x.len(),
        median: q.median.as_f64(),
        iqr: q.iqr().as_f64(),
        shapiro_wilk: stats::shapiro_wilk(x).ok(),
    })
}

/// One-tailed U test of `pd < circ` with group summaries.
pub fn ndv_compare<T: Real>(pd: &[T], circ: &[T]) -> Result<NdvComparison> {
    let test = stats::mann_whitney_u(pd, circ, Alternative::Less)?;
    Ok(NdvComparison {
        test,
        proximo_distal: summarize(pd)?,
        circumferential: summarize(circ)?,
    })
}
