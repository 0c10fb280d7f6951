//! Movement segmentation and cross-joint summaries of SPM curves.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::spm::{spm_one_sample_t, SpmResult};
use crate::dataio::PromptEvent;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats;

/// Nodes per resampled movement.
pub const MOVEMENT_NODES: usize = 256;

/// Linear resampling of the rows of `x` onto `nodes` evenly spaced points.
pub fn resample_rows<T: Real>(x: ArrayView2<T>, nodes: usize) -> Result<Array2<T>> {
    let n = x.nrows();
    if n < 2 || nodes < 2 {
        return Err(Error::InvalidInput("resampling needs at least two rows and two nodes".into()));
    }
    let mut out = Array2::<T>::zeros((nodes, x.ncols()));
    for i in 0..nodes {
        let pos = i as f64 * (n - 1) as f64 / (nodes - 1) as f64;
        let i0 = (pos.floor() as usize).min(n - 2);
        let w = T::lit(pos - i0 as f64);
        for c in 0..x.ncols() {
            out[[i, c]] = x[[i0, c]] + (x[[i0 + 1, c]] - x[[i0, c]]) * w;
        }
    }
    Ok(out)
}

/// Slice `series` (rows at `timestamps`) by prompt and resample each slice.
pub fn segment_movements<T: Real>(
    series: ArrayView2<T>,
    timestamps: &[f64],
    schedule: &[PromptEvent],
    nodes: usize,
) -> Result<Vec<Array2<T>>> {
    if timestamps.len() != series.nrows() {
        return Err(Error::Shape("one timestamp per row required".into()));
    }
    for w in schedule.windows(2) {
        if w[1].start_s < w[0].end_s() - 1e-9 {
            return Err(Error::InvalidInput(format!(
                "prompts {} and {} overlap",
                w[0].pose_id, w[1].pose_id
            )));
        }
    }
    schedule
        .iter()
        .map(|p| {
            let rows: Vec<usize> = timestamps
                .iter()
                .enumerate()
                .filter(|(_, &t)| t >= p.start_s && t < p.end_s())
                .map(|(i, _)| i)
                .collect();
            if rows.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "prompt {} at {} s has no data in the recording",
                    p.pose_id, p.start_s
                )));
            }
            let slice = series.slice(ndarray::s![rows[0]..rows[rows.len() - 1] + 1, ..]);
            resample_rows(slice, nodes)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CjdResult {
    pub movement_id: usize,
    pub mean_series: Vec<f64>,
    pub iqr_series: Vec<f64>,
}

/// Node-wise mean and IQR across joints of `tCrit - t` curves.
pub fn cjd(f_signals: &[Vec<f64>], movement_id: usize) -> Result<CjdResult> {
    let n = f_signals.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no signals".into()))?;
    if f_signals.iter().any(|f| f.len() != n) {
        return Err(Error::Shape("signals differ in length".into()));
    }
    let mut mean_series = Vec::with_capacity(n);
    let mut iqr_series = Vec::with_capacity(n);
    let mut col = Vec::with_capacity(f_signals.len());
    for i in 0..n {
        col.clear();
        col.extend(f_signals.iter().map(|f| f[i]));
        mean_series.push(stats::mean(&col));
        iqr_series.push(stats::iqr(&col)?);
    }
    Ok(CjdResult { movement_id, mean_series, iqr_series })
}

/// SPM of each joint's difference fields for one movement, then the cross-joint summary.
/// `per_joint[j]` is `nodes x subjects`.
pub fn movement_cjd<T: Real>(
    per_joint: &[Array2<T>],
    movement_id: usize,
    alpha: f64,
) -> Result<(CjdResult, Vec<SpmResult>)> {
    let spm: Vec<SpmResult> = per_joint
        .iter()
        .map(|d| spm_one_sample_t(d.view(), alpha))
        .collect::<Result<_>>()?;
    let f: Vec<Vec<f64>> = spm.iter().map(|s| s.f_series.clone()).collect();
    Ok((cjd(&f, movement_id)?, spm))
}

/// Mean over movements of the RMS difference between mean CJD curves.
pub fn cmcjd(a: &[CjdResult], b: &[CjdResult]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Shape("CJD sets must be non-empty and matched".into()));
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.movement_id != y.movement_id || x.mean_series.len() != y.mean_series.len() || x.mean_series.is_empty() {
            return Err(Error::Shape(format!("movement {} does not match {}", x.movement_id, y.movement_id)));
        }
        let ms = x
            .mean_series
            .iter()
            .zip(&y.mean_series)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            / x.mean_series.len() as f64;
        total += ms.sqrt();
    }
    Ok(total / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::uniform_schedule;

    #[test]
    fn equal_slices_for_uniform_schedule() {
        let fs = 10.0;
        let n = 1280;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / fs).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, c)| (i + c) as f64);
        let seg = segment_movements(x.view(), &t, &uniform_schedule(16, 8.0), MOVEMENT_NODES).unwrap();
        assert_eq!(seg.len(), 16);
        for (k, s) in seg.iter().enumerate() {
            assert_eq!(s.dim(), (256, 2));
            assert_eq!(s[[0, 0]], (k * 80) as f64);
            assert_eq!(s[[255, 0]], (k * 80 + 79) as f64);
        }
    }

    #[test]
    fn overlap_rejected() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let x = Array2::<f64>::zeros((100, 1));
        let mut s = uniform_schedule(2, 10.0);
        s[1].start_s = 5.0;
        assert!(segment_movements(x.view(), &t, &s, 16).is_err());
        let far = vec![PromptEvent { pose_id: 0, start_s: 500.0, duration_s: 8.0 }];
        assert!(segment_movements(x.view(), &t, &far, 16).is_err());
    }

    #[test]
    fn short_final_movement_interpolates() {
        let t: Vec<f64> = (0..14).map(|i| i as f64).collect();
        let x = Array2::from_shape_fn((14, 1), |(i, _)| 2.0 * i as f64);
        let seg = segment_movements(x.view(), &t, &uniform_schedule(2, 8.0), 7).unwrap();
        // second slice holds rows 8..=13: five intervals onto six gaps
        let want: Vec<f64> = (0..7).map(|i| 16.0 + 10.0 * i as f64 / 6.0).collect();
        for (a, b) in seg[1].column(0).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cjd_identical_and_indexed() {
        let s: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let r = cjd(&vec![s.clone(); 29], 0).unwrap();
        assert!(r.iqr_series.iter().all(|&v| v == 0.0));
        for (a, b) in r.mean_series.iter().zip(&s) {
            assert!((a - b).abs() < 1e-12);
        }
        let idx: Vec<Vec<f64>> = (1..=29).map(|j| vec![j as f64; 5]).collect();
        let r = cjd(&idx, 0).unwrap();
        let vals: Vec<f64> = (1..=29).map(|j| j as f64).collect();
        let q = crate::stats::quartiles(&vals).unwrap();
        assert!(r.mean_series.iter().all(|&v| v == 15.0));
        assert!(r.iqr_series.iter().all(|&v| v == q.q3 - q.q1));
        // permutation invariance
        let mut rev = idx.clone();
        rev.reverse();
        assert_eq!(cjd(&rev, 0).unwrap(), r);
    }

    #[test]
    fn cmcjd_shift() {
        let a: Vec<CjdResult> = (0..16)
            .map(|m| CjdResult {
                movement_id: m,
                mean_series: (0..20).map(|i| (i * m) as f64 * 0.01).collect(),
                iqr_series: vec![0.0; 20],
            })
            .collect();
        assert_eq!(cmcjd(&a, &a).unwrap(), 0.0);
        let b: Vec<CjdResult> = a
            .iter()
            .map(|c| CjdResult { mean_series: c.mean_series.iter().map(|v| v - 0.7).collect(), ..c.clone() })
            .collect();
        assert!((cmcjd(&a, &b).unwrap() - 0.7).abs() < 1e-12);
        assert!(cmcjd(&a, &b[..3]).is_err());
    }

    #[test]
    fn larger_effect_lowers_cjd() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let noise = super::super::spm::smooth_gaussian_fields(50, 8, 10.0, &mut rng);
        let small = vec![&noise + 0.1; 3];
        let big = vec![&noise + 1.0; 3];
        let (a, _) = movement_cjd(&small, 0, 0.05).unwrap();
        let (b, _) = movement_cjd(&big, 0, 0.05).unwrap();
        assert!(a.mean_series.iter().zip(&b.mean_series).all(|(x, y)| x > y));
    }
}
