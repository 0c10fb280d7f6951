//! Statistical kernel: rank and normality tests, t-tests, correlation and
//! order statistics.
//!
//! Test statistics and p-values are always reported in `f64` regardless of
//! the scalar type of the samples.

mod describe;
mod rank;
mod shapiro;
mod special;
mod ttest;

use serde::{Deserialize, Serialize};

pub use describe::{iqr, mean, median, pearson, quantile, quartiles, std_dev, variance, Quartiles};
pub use rank::{mann_whitney_u, mann_whitney_normal_p, midranks, EXACT_MAX_TOTAL};
pub use shapiro::shapiro_wilk;
pub use special::{normal_cdf, normal_quantile, student_t_cdf};
pub use ttest::paired_t;

/// Direction of the alternative hypothesis, stated for the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// First sample tends to be smaller.
    Less,
    /// First sample tends to be larger.
    Greater,
    TwoSided,
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PMethod {
    Exact,
    NormalApprox,
    StudentT,
    Royston,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub alternative: Alternative,
    pub method: PMethod,
    pub n: Vec<usize>,
}

impl TestReport {
    pub(crate) fn new(
        test: &str,
        statistic: f64,
        p_value: f64,
        alternative: Alternative,
        method: PMethod,
        n: Vec<usize>,
    ) -> Self {
        Self {
            test: test.to_string(),
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            alternative,
            method,
            n,
        }
    }
}
