use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles<T> {
    pub q1: T,
    pub median: T,
    pub q3: T,
}

impl<T: Real> Quartiles<T> {
    pub fn iqr(&self) -> T {
        self.q3 - self.q1
    }
}

pub fn mean<T: Real>(x: &[T]) -> T {
    let n = T::of_usize(x.len());
    x.iter().fold(T::zero(), |acc, &v| acc + v) / n
}

/// Unbiased sample variance (n - 1 denominator).
pub fn variance<T: Real>(x: &[T]) -> T {
    if x.len() < 2 {
        return T::zero();
    }
    let m = mean(x);
    let ss = x.iter().fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
    ss / T::of_usize(x.len() - 1)
}

pub fn std_dev<T: Real>(x: &[T]) -> T {
    variance(x).sqrt()
}

/// Quantile with linear interpolation between closest ranks:
/// position `h = (n - 1) p` on the sorted sample.
pub fn quantile<T: Real>(x: &[T], p: f64) -> Result<T> {
    if x.is_empty() {
        return Err(Error::InvalidInput("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("quantile level {p} outside [0, 1]")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    Ok(sorted_quantile(&sorted, p))
}

fn sorted_quantile<T: Real>(sorted: &[T], p: f64) -> T {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::lit(h - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn quartiles<T: Real>(x: &[T]) -> Result<Quartiles<T>> {
    if x.is_empty() {
        return Err(Error::InvalidInput("quartiles of an empty sample".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quartile input"));
    Ok(Quartiles {
        q1: sorted_quantile(&sorted, 0.25),
        median: sorted_quantile(&sorted, 0.5),
        q3: sorted_quantile(&sorted, 0.75),
    })
}

pub fn median<T: Real>(x: &[T]) -> Result<T> {
    quantile(x, 0.5)
}

pub fn iqr<T: Real>(x: &[T]) -> Result<T> {
    quartiles(x).map(|q| q.iqr())
}

/// Sample Pearson correlation coefficient.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "pearson: lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("pearson needs at least two points".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Err(Error::InvalidInput("pearson: zero variance input".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn quartiles_of_one_to_five() {
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
    }

    #[test]
    fn quartiles_interpolate() {
        // h = 0.75 between 1 and 2 for p = 0.25 on four points
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_abs_diff_eq!(q.q1, 1.75);
        assert_abs_diff_eq!(q.median, 2.5);
        assert_abs_diff_eq!(q.q3, 3.25);
    }

    #[test]
    fn singleton_quartiles() {
        let q = quartiles(&[7.5f32]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (7.5, 7.5, 7.5));
    }

    #[test]
    fn empty_quartiles_error() {
        assert!(quartiles::<f64>(&[]).is_err());
    }

    #[test]
    fn pearson_identities() {
        let x = [0.3, -1.2, 2.2, 0.9, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let aff: Vec<f64> = x.iter().map(|v| 3.0 * v + 11.0).collect();
        assert_abs_diff_eq!(pearson(&x, &x).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&x, &neg).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&aff, &x).unwrap(), 1.0, epsilon = 1e-15);
        assert!(pearson(&x, &[1.0; 5]).is_err());
    }

    proptest! {
        #[test]
        fn quartiles_permutation_invariant(mut v in prop::collection::vec(-1e3f64..1e3, 1..40), seed in any::<u64>()) {
            let q = quartiles(&v).unwrap();
            // deterministic shuffle
            let n = v.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                v.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(q, quartiles(&v).unwrap());
        }
    }
}
