//! Butterworth IIR filters as cascades of second-order sections, designed
//! from the analog prototype through the bilinear transform with frequency
//! pre-warping.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandType {
    Lowpass,
    Highpass,
}

/// One biquad, normalized so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter<T> {
    pub sections: Vec<Biquad<T>>,
}

impl<T: Real> SosFilter<T> {
    pub fn butterworth(order: usize, cutoff_hz: f64, fs_hz: f64, band: BandType) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("Butterworth order must be at least 1".into()));
        }
        if !(fs_hz > 0.0) || !(cutoff_hz > 0.0) || cutoff_hz >= fs_hz / 2.0 {
            return Err(Error::Config(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {}) for fs = {fs_hz} Hz",
                fs_hz / 2.0
            )));
        }
        let k = 2.0 * fs_hz;
        let wc = k * (std::f64::consts::PI * cutoff_hz / fs_hz).tan();
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        let n = order as f64;
        // conjugate pole pairs from the upper half of the left half-plane
        for i in 0..order / 2 {
            let theta = std::f64::consts::PI * (2.0 * i as f64 + n + 1.0) / (2.0 * n);
            let re = wc * theta.cos();
            let mag2 = wc * wc;
            let a0 = k * k - 2.0 * re * k + mag2;
            let a1 = 2.0 * mag2 - 2.0 * k * k;
            let a2 = k * k + 2.0 * re * k + mag2;
            let b = match band {
                BandType::Lowpass => [mag2, 2.0 * mag2, mag2],
                BandType::Highpass => [k * k, -2.0 * k * k, k * k],
            };
            sections.push(Biquad {
                b: b.map(|v| T::lit(v / a0)),
                a: [T::lit(a1 / a0), T::lit(a2 / a0)],
            });
        }
        if order % 2 == 1 {
            let a0 = k + wc;
            let a1 = wc - k;
            let b = match band {
                BandType::Lowpass => [wc, wc, 0.0],
                BandType::Highpass => [k, -k, 0.0],
            };
            sections.push(Biquad {
                b: b.map(|v| T::lit(v / a0)),
                a: [T::lit(a1 / a0), T::zero()],
            });
        }
        Ok(Self { sections })
    }

    /// Causal single pass from zero initial state (direct form II transposed).
    pub fn filter(&self, x: &[T]) -> Vec<T> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (T::zero(), T::zero());
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }

    /// Causal pass started in the steady state of a constant input equal to `x[0]`.
    pub fn filter_steady(&self, x: &[T]) -> Vec<T> {
        let Some(&x0) = x.first() else {
            return Vec::new();
        };
        let dc = T::lit(self.response(0.0, 1.0).re);
        let shifted: Vec<T> = x.iter().map(|&v| v - x0).collect();
        self.filter(&shifted).into_iter().map(|v| v + dc * x0).collect()
    }

    /// Forward-backward pass: zero phase, squared magnitude response.
    /// Each pass starts at the steady state of its first sample.
    pub fn filtfilt(&self, x: &[T]) -> Vec<T> {
        let mut y = self.filter_steady(x);
        y.reverse();
        let mut y = self.filter_steady(&y);
        y.reverse();
        y
    }

    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64, fs_hz: f64) -> Complex<f64> {
        let w = 2.0 * std::f64::consts::PI * f_hz / fs_hz;
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = z1 * z1;
        self.sections.iter().fold(Complex::new(1.0, 0.0), |acc, s| {
            let num = s.b[0].as_f64() + z1 * s.b[1].as_f64() + z2 * s.b[2].as_f64();
            let den = 1.0 + z1 * s.a[0].as_f64() + z2 * s.a[1].as_f64();
            acc * num / den
        })
    }
}
