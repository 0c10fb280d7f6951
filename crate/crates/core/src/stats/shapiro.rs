//! Shapiro-Wilk W test using Royston's (1995) approximation for the
//! coefficients and the p-value, valid for 3 <= n <= 5000.

use super::special::{normal_cdf, normal_quantile};
use super::{Alternative, PMethod, TestReport};
use crate::error::{Error, Result};
use crate::scalar::Real;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Half-vector of antisymmetric weights, largest first.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let m: Vec<f64> = (1..=half)
        .map(|i| normal_quantile((i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

pub fn shapiro_wilk<T: Real>(x: &[T]) -> Result<TestReport> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "Shapiro-Wilk requires 3 <= n <= 5000, got {n}"
        )));
    }
    let mut v: Vec<f64> = x.iter().map(|s| s.as_f64()).collect();
    if v.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("Shapiro-Wilk: non-finite sample".into()));
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let range = v[n - 1] - v[0];
    if range <= 1e-19 * v[n - 1].abs().max(1.0) {
        return Err(Error::InvalidInput("Shapiro-Wilk: zero variance sample".into()));
    }

    let half = coefficients(n);
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let j = n - 1 - i;
            if i < j {
                -half[i]
            } else if i > j {
                half[j]
            } else {
                0.0
            }
        })
        .collect();
    let xs: Vec<f64> = v.iter().map(|s| s / range).collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let am = weights.iter().sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (w, s) in weights.iter().zip(&xs) {
        let (da, dx) = (w - am, s - xm);
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let root = (ssa * ssx).sqrt();
    // 1 - W computed without cancellation
    let w1 = (root - sax) * (root + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p = if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        p.max(0.0)
    } else {
        let an = n as f64;
        let mut y = w1.ln();
        let (m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return Ok(report(w, 1e-99, n));
            }
            y = -(gamma - y).ln();
            (poly(&C3, an), poly(&C4, an).exp())
        } else {
            let lx = an.ln();
            (poly(&C5, lx), poly(&C6, lx).exp())
        };
        1.0 - normal_cdf((y - m) / s)
    };
    Ok(report(w, p, n))
}

fn report(w: f64, p: f64, n: usize) -> TestReport {
    TestReport::new("shapiro-wilk", w, p, Alternative::TwoSided, PMethod::Royston, vec![n])
}
