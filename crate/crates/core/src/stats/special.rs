use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};

/// Standard normal CDF, accurate far into the lower tail.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse of [`normal_cdf`] for `p` in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Student t CDF with `nu` degrees of freedom, through the regularized
/// incomplete beta function.
pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = nu / (nu + t * t);
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
