//! One-sample t statistic over 1-D fields with a random-field critical threshold.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::student_t_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpmResult {
    pub t_series: Vec<f64>,
    pub t_crit: f64,
    /// `t_crit - t`, node by node.
    pub f_series: Vec<f64>,
    pub dof: usize,
    /// Estimated smoothness in nodes; infinite for perfectly flat residuals.
    pub fwhm: f64,
    /// Nodes whose standard deviation was zero.
    pub zero_variance_nodes: Vec<usize>,
}

/// Default family-wise error rate.
pub const SPM_ALPHA: f64 = 0.05;

/// Smoothness from residual gradients. `r` is `n nodes x k curves`; node spacing is one.
pub fn estimate_fwhm(r: ArrayView2<f64>) -> f64 {
    let (n, k) = r.dim();
    if n < 2 {
        return f64::INFINITY;
    }
    let mut rpn = 0.0;
    for i in 0..n {
        let mut ssq = 0.0;
        let mut gsq = 0.0;
        for c in 0..k {
            let g = if i == 0 {
                r[[1, c]] - r[[0, c]]
            } else if i == n - 1 {
                r[[n - 1, c]] - r[[n - 2, c]]
            } else {
                0.5 * (r[[i + 1, c]] - r[[i - 1, c]])
            };
            ssq += r[[i, c]] * r[[i, c]];
            gsq += g * g;
        }
        let v = gsq / (ssq + f64::EPSILON);
        rpn += (v / (4.0 * std::f64::consts::LN_2)).sqrt();
    }
    let mean = rpn / n as f64;
    if mean > 0.0 {
        1.0 / mean
    } else {
        f64::INFINITY
    }
}

/// Expected Euler characteristic of the excursion set of a 1-D t field above `u`.
pub fn expected_ec(u: f64, dof: f64, nodes: usize, fwhm: f64) -> f64 {
    let p0 = 1.0 - student_t_cdf(u, dof);
    let resels = if fwhm.is_finite() && fwhm > 0.0 { (nodes as f64 - 1.0) / fwhm } else { 0.0 };
    let rho1 = (4.0 * std::f64::consts::LN_2).sqrt() / std::f64::consts::TAU * (1.0 + u * u / dof).powf(-(dof - 1.0) / 2.0);
    p0 + resels * rho1
}

/// Threshold at which the expected Euler characteristic equals `alpha`.
pub fn rft_threshold(alpha: f64, dof: f64, nodes: usize, fwhm: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) || !(dof > 0.0) {
        return Err(Error::Config("alpha must lie in (0, 0.5) and dof be positive".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while expected_ec(hi, dof, nodes, fwhm) > alpha {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Numerical("critical threshold search diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected_ec(mid, dof, nodes, fwhm) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One-sample t test at every node of `d` (`n nodes x k curves`) against zero.
pub fn spm_one_sample_t<T: Real>(d: ArrayView2<T>, alpha: f64) -> Result<SpmResult> {
    let (n, k) = d.dim();
    // one degree of freedom leaves the expected Euler characteristic above any alpha
    if k < 3 || n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 nodes and 3 curves, got {n}x{k}")));
    }
    let x: Array2<f64> = d.mapv(|v| v.as_f64());
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite values in the difference fields".into()));
    }
    let kf = k as f64;
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let guard = 1e-12 * scale;
    let mut t = Vec::with_capacity(n);
    let mut resid = Array2::<f64>::zeros((n, k));
    let mut zero_var = Vec::new();
    for i in 0..n {
        let row = x.row(i);
        let m = row.sum() / kf;
        let ss = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        let mut sd = (ss / (kf - 1.0)).sqrt();
        if !(sd > guard) {
            zero_var.push(i);
            sd = guard;
        }
        t.push(m / (sd / kf.sqrt()));
        for c in 0..k {
            resid[[i, c]] = row[c] - m;
        }
    }
    if !zero_var.is_empty() {
        log::warn!("{} nodes with zero variance; t uses a guarded denominator", zero_var.len());
    }
    let fwhm = estimate_fwhm(resid.view());
    let dof = k - 1;
    let t_crit = rft_threshold(alpha, dof as f64, n, fwhm)?;
    Ok(SpmResult {
        f_series: t.iter().map(|v| t_crit - v).collect(),
        t_series: t,
        t_crit,
        dof,
        fwhm,
        zero_variance_nodes: zero_var,
    })
}

/// `k` curves of `n` nodes: white noise smoothed by a Gaussian kernel of the given FWHM.
pub fn smooth_gaussian_fields<R: rand::Rng + ?Sized>(n: usize, k: usize, fwhm: f64, rng: &mut R) -> Array2<f64> {
    let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let half = (4.0 * sigma).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = i as f64 - half as f64;
            (-0.5 * x * x / (sigma * sigma)).exp()
        })
        .collect();
    let norm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Array2::zeros((n, k));
    for c in 0..k {
        let w: Vec<f64> = (0..n + 2 * half).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        for i in 0..n {
            out[[i, c]] = kernel.iter().enumerate().map(|(j, kv)| kv * w[i + j]).sum::<f64>() / norm;
        }
    }
    out
}
