use super::special::student_t_cdf;
use super::{Alternative, PMethod, TestReport};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// p-value of a t statistic with `nu` degrees of freedom.
pub(crate) fn t_p_value(t: f64, nu: f64, alt: Alternative) -> f64 {
    match alt {
        Alternative::Less => student_t_cdf(t, nu),
        Alternative::Greater => student_t_cdf(-t, nu),
        Alternative::TwoSided => 2.0 * student_t_cdf(-t.abs(), nu),
    }
}

/// Paired t-test on `d = a - b` with `n - 1` degrees of freedom.
pub fn paired_t<T: Real>(a: &[T], b: &[T], alt: Alternative) -> Result<TestReport> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired t-test: lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.as_f64() - y.as_f64()).collect();
    let m = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        if m == 0.0 {
            // identical samples: no evidence either way
            return Ok(TestReport::new("paired-t", 0.0, t_p_value(0.0, (n - 1) as f64, alt), alt, PMethod::StudentT, vec![n]));
        }
        return Err(Error::InvalidInput("paired t-test: zero-variance differences".into()));
    }
    let t = m / (var.sqrt() / (n as f64).sqrt());
    let p = t_p_value(t, (n - 1) as f64, alt);
    Ok(TestReport::new("paired-t", t, p, alt, PMethod::StudentT, vec![n]))
}
