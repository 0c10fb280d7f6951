use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dataio::fmt_real;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats;

pub const GRID_POINTS: usize = 50;
pub const GRID_F_MIN_HZ: f64 = 1.0;
pub const GRID_F_MAX_HZ: f64 = 10_000.0;

/// `n` geometrically spaced frequencies from `f_min` to `f_max` inclusive.
pub fn log_frequency_grid<T: Real>(n: usize, f_min: f64, f_max: f64) -> Result<Vec<T>> {
    if n < 2 || !(f_min > 0.0) || !(f_max > f_min) {
        return Err(Error::Config(format!("bad frequency grid: {n} points over [{f_min}, {f_max}] Hz")));
    }
    let (a, b) = (f_min.log10(), f_max.log10());
    Ok((0..n)
        .map(|i| match i {
            0 => T::lit(f_min),
            _ if i == n - 1 => T::lit(f_max),
            _ => T::lit(10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)),
        })
        .collect())
}

/// Fifty points from 1 Hz to 10 kHz.
pub fn standard_grid<T: Real>() -> Vec<T> {
    log_frequency_grid(GRID_POINTS, GRID_F_MIN_HZ, GRID_F_MAX_HZ).expect("valid constant grid")
}

/// Impedance of one electrode pair over frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceSpectrum<T> {
    pub pair: usize,
    pub freqs_hz: Vec<T>,
    pub z: Vec<Complex<T>>,
}

impl<T: Real> ImpedanceSpectrum<T> {
    pub fn validate(&self) -> Result<()> {
        if self.freqs_hz.len() != self.z.len() {
            return Err(Error::Shape(format!(
                "pair {}: {} frequencies but {} values",
                self.pair,
                self.freqs_hz.len(),
                self.z.len()
            )));
        }
        if self.freqs_hz.windows(2).any(|w| !(w[1] >= w[0])) || self.freqs_hz.iter().any(|f| !(*f >= T::zero())) {
            return Err(Error::InvalidInput(format!("pair {}: frequencies must be non-negative and sorted", self.pair)));
        }
        if let Some(z) = self.z.iter().find(|z| !(z.norm() > T::zero()) || !z.norm().is_finite()) {
            return Err(Error::InvalidInput(format!("pair {}: impedance {z} is not finite and non-zero", self.pair)));
        }
        Ok(())
    }

    /// Per-interface impedance of a pair of identical electrodes measured in series.
    pub fn per_interface(&self) -> Self {
        let half = T::lit(0.5);
        Self { z: self.z.iter().map(|z| z * half).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodeSummary {
    pub freqs_hz: Vec<f64>,
    pub magnitude_median_ohm: Vec<f64>,
    pub magnitude_iqr_ohm: Vec<f64>,
    pub phase_median_deg: Vec<f64>,
    pub phase_iqr_deg: Vec<f64>,
    pub n_pairs: usize,
}

impl BodeSummary {
    /// Median magnitude and IQR interpolated linearly in log-frequency at `f_hz`.
    pub fn magnitude_at(&self, f_hz: f64) -> Option<(f64, f64)> {
        let f = &self.freqs_hz;
        let i = f.iter().position(|&v| v >= f_hz)?;
        if f[i] == f_hz || i == 0 {
            return (f[i] == f_hz).then(|| (self.magnitude_median_ohm[i], self.magnitude_iqr_ohm[i]));
        }
        let w = (f_hz.ln() - f[i - 1].ln()) / (f[i].ln() - f[i - 1].ln());
        let lerp = |v: &[f64]| v[i - 1] * (1.0 - w) + v[i] * w;
        Some((lerp(&self.magnitude_median_ohm), lerp(&self.magnitude_iqr_ohm)))
    }
}

/// Median and IQR of magnitude and phase over pairs at every frequency.
pub fn aggregate_bode<T: Real>(spectra: &[ImpedanceSpectrum<T>]) -> Result<BodeSummary> {
    let first = spectra.first().ok_or_else(|| Error::InvalidInput("no impedance spectra".into()))?;
    for s in spectra {
        s.validate()?;
        if s.freqs_hz != first.freqs_hz {
            return Err(Error::Shape(format!("pair {} uses a different frequency grid from pair {}", s.pair, first.pair)));
        }
    }
    let n = first.freqs_hz.len();
    let mut out = BodeSummary {
        freqs_hz: first.freqs_hz.iter().map(|f| f.as_f64()).collect(),
        magnitude_median_ohm: Vec::with_capacity(n),
        magnitude_iqr_ohm: Vec::with_capacity(n),
        phase_median_deg: Vec::with_capacity(n),
        phase_iqr_deg: Vec::with_capacity(n),
        n_pairs: spectra.len(),
    };
    for i in 0..n {
        let mag: Vec<f64> = spectra.iter().map(|s| s.z[i].norm().as_f64()).collect();
        let ph: Vec<f64> = spectra.iter().map(|s| s.z[i].arg().as_f64().to_degrees()).collect();
        let (qm, qp) = (stats::quartiles(&mag)?, stats::quartiles(&ph)?);
        out.magnitude_median_ohm.push(qm.median);
        out.magnitude_iqr_ohm.push(qm.iqr());
        out.phase_median_deg.push(qp.median);
        out.phase_iqr_deg.push(qp.iqr());
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    pair: usize,
    frequency_hz: f64,
    magnitude_ohm: f64,
    phase_deg: f64,
}

/// Reads `pair,frequency_hz,magnitude_ohm,phase_deg` rows, grouped by pair.
pub fn read_impedance_csv<T: Real>(path: &Path) -> Result<Vec<ImpedanceSpectrum<T>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let mut pairs: BTreeMap<usize, ImpedanceSpectrum<T>> = BTreeMap::new();
    for (line, rec) in rdr.deserialize::<Row>().enumerate() {
        let r = rec.map_err(|e| Error::format(path, format!("row {}: {e}", line + 1)))?;
        if !r.frequency_hz.is_finite() || !r.magnitude_ohm.is_finite() || !r.phase_deg.is_finite() {
            return Err(Error::format(path, format!("row {}: non-finite value", line + 1)));
        }
        let s = pairs.entry(r.pair).or_insert_with(|| ImpedanceSpectrum { pair: r.pair, freqs_hz: vec![], z: vec![] });
        s.freqs_hz.push(T::lit(r.frequency_hz));
        s.z.push(Complex::from_polar(T::lit(r.magnitude_ohm), T::lit(r.phase_deg.to_radians())));
    }
    if pairs.is_empty() {
        return Err(Error::format(path, "no impedance rows"));
    }
    let out: Vec<_> = pairs.into_values().collect();
    for s in &out {
        s.validate().map_err(|e| Error::format(path, e.to_string()))?;
    }
    Ok(out)
}

pub fn write_impedance_csv<T: Real>(path: &Path, spectra: &[ImpedanceSpectrum<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_record(["pair", "frequency_hz", "magnitude_ohm", "phase_deg"])?;
    for s in spectra {
        s.validate()?;
        for (f, z) in s.freqs_hz.iter().zip(&s.z) {
            w.write_record([
                s.pair.to_string(),
                fmt_real(*f),
                fmt_real(z.norm()),
                fmt_real(z.arg().to_degrees()),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
