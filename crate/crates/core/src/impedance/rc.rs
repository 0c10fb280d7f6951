use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::bode::ImpedanceSpectrum;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Input impedance of the acquisition front end near 50 Hz, ohm.
pub const AMPLIFIER_INPUT_OHM: f64 = 80e6;
/// Contact area of a 4 mm disc electrode, cm^2.
pub const ELECTRODE_AREA_CM2: f64 = 0.1257;
/// RMS fit residual (natural-log magnitude and radians) above which a fit is flagged.
pub const FIT_RESIDUAL_WARN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcModel<T> {
    pub r_ohm: T,
    pub c_farad: T,
}

impl<T: Real> RcModel<T> {
    pub fn new(r_ohm: T, c_farad: T) -> Result<Self> {
        let m = Self { r_ohm, c_farad };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_ohm > T::zero()) || !self.r_ohm.is_finite() {
            return Err(Error::InvalidInput(format!("resistance must be positive, got {}", self.r_ohm)));
        }
        if !(self.c_farad >= T::zero()) || !self.c_farad.is_finite() {
            return Err(Error::InvalidInput(format!("capacitance must be non-negative, got {}", self.c_farad)));
        }
        Ok(())
    }

    /// Corner frequency `1 / (2 pi R C)`; infinite for a pure resistor.
    pub fn corner_hz(&self) -> T {
        T::one() / (T::TAU() * self.r_ohm * self.c_farad)
    }

    pub fn spectrum(&self, pair: usize, freqs_hz: &[T]) -> ImpedanceSpectrum<T> {
        ImpedanceSpectrum { pair, freqs_hz: freqs_hz.to_vec(), z: freqs_hz.iter().map(|&f| rc_impedance(self, f)).collect() }
    }
}

/// `Z = R / (1 + j 2 pi f R C)`.
pub fn rc_impedance<T: Real>(m: &RcModel<T>, f_hz: T) -> Complex<T> {
    let den = Complex::new(T::one(), T::TAU() * f_hz * m.r_ohm * m.c_farad);
    Complex::new(m.r_ohm, T::zero()) / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcFit<T> {
    pub model: RcModel<T>,
    /// RMS of the log-magnitude and phase residuals.
    pub residual: f64,
    pub flagged: bool,
}

struct Points {
    w: Vec<f64>,
    logmag: Vec<f64>,
    phase: Vec<f64>,
}

impl Points {
    /// Log-resistance minimizing the magnitude residual for a given time constant.
    fn log_r(&self, tau: f64) -> f64 {
        let s: f64 = self.w.iter().zip(&self.logmag).map(|(w, l)| l + 0.5 * (w * tau).powi(2).ln_1p()).sum();
        s / self.w.len() as f64
    }

    fn cost(&self, tau: f64) -> f64 {
        let lr = self.log_r(tau);
        self.w
            .iter()
            .zip(self.logmag.iter().zip(&self.phase))
            .map(|(w, (l, p))| {
                let wt = w * tau;
                let rm = l - lr + 0.5 * (wt * wt).ln_1p();
                let rp = p + wt.atan();
                rm * rm + rp * rp
            })
            .sum()
    }
}

/// Least-squares fit of the parallel R-C model over log-magnitude and phase.
///
/// The resistance is eliminated in closed form; the time constant `RC` is
/// found by a log-spaced scan refined with golden-section search.
pub fn fit_rc<T: Real>(spectrum: &ImpedanceSpectrum<T>) -> Result<RcFit<T>> {
    spectrum.validate()?;
    let mut distinct: Vec<f64> = spectrum.freqs_hz.iter().map(|f| f.as_f64()).collect();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("an R-C fit needs at least two distinct frequencies".into()));
    }
    let pts = Points {
        w: spectrum.freqs_hz.iter().map(|f| std::f64::consts::TAU * f.as_f64()).collect(),
        logmag: spectrum.z.iter().map(|z| z.norm().as_f64().ln()).collect(),
        phase: spectrum.z.iter().map(|z| z.arg().as_f64()).collect(),
    };
    let w_max = pts.w.iter().cloned().fold(0.0, f64::max);
    let w_min = pts.w.iter().cloned().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
    let (lo, hi) = ((1e-3 / w_max).ln(), (1e3 / w_min).ln());
    const SCAN: usize = 600;
    let grid: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let costs: Vec<f64> = grid.iter().map(|&s| pts.cost(s.exp())).collect();
    let best = (0..costs.len()).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).expect("non-empty scan");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(SCAN)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (pts.cost(c.exp()), pts.cost(d.exp()));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = pts.cost(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = pts.cost(d.exp());
        }
        if b - a < 1e-13 {
            break;
        }
    }
    let s = 0.5 * (a + b);
    let (mut tau, mut cost) = (s.exp(), pts.cost(s.exp()));
    let c0 = pts.cost(0.0);
    if c0 <= cost {
        tau = 0.0;
        cost = c0;
    }
    let r = pts.log_r(tau).exp();
    let residual = (cost / (2 * pts.w.len()) as f64).sqrt();
    if !residual.is_finite() {
        return Err(Error::Numerical("R-C fit produced a non-finite residual".into()));
    }
    let flagged = residual > FIT_RESIDUAL_WARN;
    if flagged {
        log::warn!("pair {}: R-C fit residual {residual:.3} exceeds {FIT_RESIDUAL_WARN}", spectrum.pair);
    }
    Ok(RcFit { model: RcModel { r_ohm: T::lit(r), c_farad: T::lit(tau / r) }, residual, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divider<T> {
    pub gain: Complex<T>,
    pub gain_db: T,
}

/// Voltage divider formed by the electrode and the amplifier input: `zIn / (zIn + zE)`.
pub fn divider_attenuation<T: Real>(z_e: Complex<T>, z_in: Complex<T>) -> Result<Divider<T>> {
    if !(z_in.norm() > T::zero()) {
        return Err(Error::InvalidInput("amplifier input impedance must be non-zero".into()));
    }
    let gain = z_in / (z_in + z_e);
    Ok(Divider { gain, gain_db: T::lit(20.0) * gain.norm().log10() })
}

/// Impedance magnitude times contact area, ohm cm^2.
pub fn normalize_by_area<T: Real>(z_ohm: T, area_cm2: T) -> Result<T> {
    if !(area_cm2 > T::zero()) {
        return Err(Error::InvalidInput(format!("electrode area must be positive, got {area_cm2}")));
    }
    Ok(z_ohm * area_cm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impedance::standard_grid;

    fn model(r: f64, c: f64) -> RcModel<f64> {
        RcModel::new(r, c).unwrap()
    }

    #[test]
    fn dc_and_corner() {
        let m = model(661e3, 4.8e-9);
        assert_eq!(rc_impedance(&m, 0.0), Complex::new(661e3, 0.0));
        let z = rc_impedance(&m, m.corner_hz());
        assert!((z.norm() - 661e3 / 2f64.sqrt()).abs() < 1e-9 * 661e3);
        assert!((z.arg().to_degrees() + 45.0).abs() < 1e-9);
    }

    #[test]
    fn dry_electrode_at_mains() {
        // 661e3 / sqrt(1 + (2 pi 50 * 661e3 * 4.8e-9)^2)
        let z = rc_impedance(&model(661e3, 4.8e-9), 50.0);
        assert!((z.norm() - 468_154.321_415).abs() < 1e-3, "{}", z.norm());
    }

    #[test]
    fn magnitude_monotone_phase_bounded() {
        let m = model(2e5, 3e-8);
        let zs: Vec<_> = standard_grid::<f64>().iter().map(|&f| rc_impedance(&m, f)).collect();
        for w in zs.windows(2) {
            assert!(w[1].norm() <= w[0].norm());
        }
        assert!(zs.iter().all(|z| z.arg() <= 0.0 && z.arg() > -std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn fit_recovers_parameters() {
        let grid = standard_grid::<f64>();
        for &r in &[1e4, 2.5e5, 661e3, 1e7] {
            for &c in &[1e-10, 4.8e-9, 1e-7] {
                let fit = fit_rc(&model(r, c).spectrum(0, &grid)).unwrap();
                assert!((fit.model.r_ohm / r - 1.0).abs() < 1e-6, "R {r} C {c}: {:?}", fit.model);
                assert!((fit.model.c_farad / c - 1.0).abs() < 1e-6, "R {r} C {c}: {:?}", fit.model);
                assert!(!fit.flagged);
            }
        }
    }

    #[test]
    fn resistive_fit() {
        let fit = fit_rc(&model(3.3e4, 0.0).spectrum(1, &standard_grid())).unwrap();
        assert_eq!(fit.model.c_farad, 0.0);
        assert!((fit.model.r_ohm - 3.3e4).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_points_flagged() {
        let s = ImpedanceSpectrum {
            pair: 0,
            freqs_hz: vec![10.0, 1000.0],
            z: vec![Complex::new(1e3, 0.0), Complex::new(1e4, 0.0)],
        };
        let fit = fit_rc(&s).unwrap();
        assert!(fit.flagged && fit.residual > 0.5);
        let one = ImpedanceSpectrum { pair: 0, freqs_hz: vec![50.0; 3], z: vec![Complex::new(1e3, 0.0); 3] };
        assert!(matches!(fit_rc(&one), Err(Error::Degenerate(_))));
    }

    #[test]
    fn divider_values() {
        let c = |r: f64| Complex::new(r, 0.0);
        let d = divider_attenuation(c(0.0), c(80e6)).unwrap();
        assert_eq!((d.gain, d.gain_db), (c(1.0), 0.0));
        let d = divider_attenuation(c(5e3), c(5e3)).unwrap();
        assert_eq!(d.gain, c(0.5));
        assert!((d.gain_db + 6.0206).abs() < 1e-4);
        let d = divider_attenuation(c(661e3), c(AMPLIFIER_INPUT_OHM)).unwrap();
        assert!((d.gain.norm() - 0.99180).abs() < 1e-5);
        assert!((d.gain_db + 0.0716).abs() < 1e-3);
        assert!(divider_attenuation(c(1.0), c(0.0)).is_err());
    }

    #[test]
    fn divider_gain_in_unit_interval() {
        let g = standard_grid::<f64>();
        for &f in &g {
            let d = divider_attenuation(rc_impedance(&model(1e6, 1e-8), f), Complex::new(1e5, 0.0)).unwrap();
            assert!(d.gain.norm() > 0.0 && d.gain.norm() <= 1.0);
        }
    }

    #[test]
    fn area_normalization() {
        let v = normalize_by_area(661e3, ELECTRODE_AREA_CM2).unwrap();
        assert!((v / 83.1e3 - 1.0).abs() < 1e-3);
        assert_eq!(normalize_by_area(5.0, 1.0).unwrap(), 5.0);
        assert_eq!(normalize_by_area(0.0, 0.3).unwrap(), 0.0);
        assert!(normalize_by_area(1.0, 0.0).is_err());
    }
}
