//! Seeded synthetic recordings with a known EMG-to-pose relationship.
//!
//! Joint trajectories are sums of slow sinusoids; markers follow from the
//! forward kinematic model; channel activations mix rectified joint
//! displacement and speed; EMG is the activation times band-limited noise,
//! plus a noise floor and mains hum, quantized to ADC counts.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::align::{uniform_schedule, PromptEvent};
use super::emg::{EmgMeta, EmgRecording, EMG_BITS, EMG_FS_HZ, EMG_GAIN, EMG_V_RANGE};
use super::markers::{AngleSeries, MarkerTrajectory, MARKER_FS_HZ};
use crate::error::{Error, Result};
use crate::filter::{BandType, SosFilter};
use crate::kinematics::{HandModel, HandSkeleton, JointAngles, N_JOINTS};
use crate::scalar::Real;

/// One sinusoidal component, angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude_deg: f64,
    pub freq_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

/// Replaces the random trajectory of one joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointOverride {
    pub joint: usize,
    #[serde(default)]
    pub offset_deg: f64,
    pub components: Vec<Sinusoid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub n_channels: usize,
    pub n_joints: usize,
    /// `C x 29` muscle-to-channel weights; drawn from the seed when absent.
    pub mixing: Option<Vec<Vec<f64>>>,
    /// Noise floor, relative to `amplitude_v`.
    pub noise_std: f64,
    /// Mains interference amplitude, V.
    pub line_hum_50hz_ampl: f64,
    /// EMG amplitude at unit activation, V.
    pub amplitude_v: f64,
    /// Weight of angular speed relative to displacement, s.
    pub speed_weight_s: f64,
    /// Electrode grid `(rows, cols)`; must multiply to `n_channels`.
    pub grid: (usize, usize),
    /// EMG recorded before the marker sync event, s.
    pub sync_lead_s: f64,
    pub prompt_duration_s: f64,
    pub max_components: usize,
    pub min_freq_hz: f64,
    pub max_freq_hz: f64,
    pub overrides: Vec<JointOverride>,
    /// When false, joints without an override stay at rest.
    pub animate_all: bool,
    pub carrier_band_hz: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            duration_s: 128.0,
            n_channels: 64,
            n_joints: N_JOINTS,
            mixing: None,
            noise_std: 0.05,
            line_hum_50hz_ampl: 5e-6,
            amplitude_v: 2e-4,
            speed_weight_s: 0.1,
            grid: (2, 32),
            sync_lead_s: 0.5,
            prompt_duration_s: 8.0,
            max_components: 5,
            min_freq_hz: 0.1,
            max_freq_hz: 1.0,
            overrides: Vec::new(),
            animate_all: true,
            carrier_band_hz: (10.0, 500.0),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Config("duration must be positive".into()));
        }
        if self.n_joints != N_JOINTS {
            return Err(Error::Config(format!("the hand model has {N_JOINTS} joints, not {}", self.n_joints)));
        }
        if self.n_channels == 0 || self.grid.0 * self.grid.1 != self.n_channels {
            return Err(Error::Config(format!(
                "grid {}x{} does not hold {} channels",
                self.grid.0, self.grid.1, self.n_channels
            )));
        }
        if let Some(m) = &self.mixing {
            if m.len() != self.n_channels || m.iter().any(|r| r.len() != N_JOINTS) {
                return Err(Error::Shape(format!("mixing must be {}x{N_JOINTS}", self.n_channels)));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Config("mixing entries must be finite".into()));
            }
        }
        if self.max_components == 0
            || !(self.min_freq_hz > 0.0)
            || self.max_freq_hz < self.min_freq_hz
        {
            return Err(Error::Config("invalid trajectory frequency settings".into()));
        }
        if self.overrides.iter().any(|o| o.joint >= N_JOINTS) {
            return Err(Error::Config("override joint index out of range".into()));
        }
        if !(self.sync_lead_s >= 0.0) || !(self.prompt_duration_s > 0.0) || !(self.amplitude_v >= 0.0) {
            return Err(Error::Config("negative timing or amplitude setting".into()));
        }
        Ok(())
    }
}

/// Generated triple plus the prompt schedule and the mixing actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData<T> {
    pub emg: EmgRecording,
    pub markers: MarkerTrajectory<T>,
    pub angles: AngleSeries<T>,
    pub schedule: Vec<PromptEvent>,
    pub mixing: Vec<Vec<f64>>,
}

/// Clamped sum of sinusoids around a centre, radians.
#[derive(Debug, Clone)]
struct JointTrajectory {
    centre: f64,
    comps: Vec<(f64, f64, f64)>,
    lo: f64,
    hi: f64,
}

impl JointTrajectory {
    fn raw(&self, t: f64) -> f64 {
        self.centre
            + self
                .comps
                .iter()
                .map(|&(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin())
                .sum::<f64>()
    }

    fn value(&self, t: f64) -> f64 {
        self.raw(t).clamp(self.lo, self.hi)
    }

    fn speed(&self, t: f64) -> f64 {
        let r = self.raw(t);
        if r < self.lo || r > self.hi {
            return 0.0;
        }
        self.comps
            .iter()
            .map(|&(a, f, p)| a * std::f64::consts::TAU * f * (std::f64::consts::TAU * f * t + p).cos())
            .sum()
    }
}

fn trajectories(cfg: &SynthConfig, skel: &HandSkeleton, rng: &mut ChaCha8Rng) -> Vec<JointTrajectory> {
    let rom = skel.range_of_motion();
    let rest = skel.rest_pose::<f64>();
    (0..N_JOINTS)
        .map(|j| {
            let [lo, hi] = rom[j];
            // draws happen for every joint so overrides do not shift the stream
            let k = rng.random_range(1..=cfg.max_components);
            let mut comps: Vec<(f64, f64, f64)> = (0..k)
                .map(|_| {
                    let f = rng.random_range(cfg.min_freq_hz..=cfg.max_freq_hz);
                    let w = rng.random_range(0.5..1.0) / f;
                    let p = rng.random_range(0.0..std::f64::consts::TAU);
                    (w, f, p)
                })
                .collect();
            if let Some(o) = cfg.overrides.iter().rev().find(|o| o.joint == j) {
                return JointTrajectory {
                    centre: o.offset_deg.to_radians(),
                    comps: o
                        .components
                        .iter()
                        .map(|s| (s.amplitude_deg.to_radians(), s.freq_hz, s.phase_rad))
                        .collect(),
                    lo,
                    hi,
                };
            }
            if !cfg.animate_all {
                return JointTrajectory { centre: rest[j], comps: Vec::new(), lo, hi };
            }
            // move within the larger side of the range so displacement keeps its sign
            let side = if (hi - rest[j]).abs() >= (lo - rest[j]).abs() { hi - rest[j] } else { lo - rest[j] };
            let budget = 0.95 * side.abs() / 2.0;
            let total: f64 = comps.iter().map(|c| c.0).sum();
            for c in &mut comps {
                c.0 *= budget / total;
            }
            JointTrajectory { centre: rest[j] + side / 2.0, comps, lo, hi }
        })
        .collect()
}

fn default_mixing(cfg: &SynthConfig, skel: &HandSkeleton, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let rom = skel.range_of_motion();
    let rest = skel.rest_pose::<f64>();
    // unit activation at the far end of each joint's travel
    let span: Vec<f64> = (0..N_JOINTS)
        .map(|j| (rom[j][1] - rest[j]).abs().max((rom[j][0] - rest[j]).abs()))
        .collect();
    (0..cfg.n_channels)
        .map(|c| {
            let mut row = vec![0.0; N_JOINTS];
            let primary = c % N_JOINTS;
            row[primary] = 1.0 / span[primary];
            for _ in 0..2 {
                let j = rng.random_range(0..N_JOINTS);
                if j != primary {
                    row[j] += rng.random_range(0.0..0.2) / span[j];
                }
            }
            row
        })
        .collect()
}

/// Zero-mean, unit-variance noise band-limited by Butterworth high- and low-pass stages.
fn band_noise(n: usize, fs: f64, band: (f64, f64), seed: u64, stream: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let warm = fs as usize;
    let mut sos = SosFilter::<f64>::butterworth(4, band.0, fs, BandType::Highpass)?;
    if band.1 < fs / 2.0 {
        sos.sections
            .extend(SosFilter::<f64>::butterworth(4, band.1, fs, BandType::Lowpass)?.sections);
    }
    let white: Vec<f64> = (0..n + warm).map(|_| rng.sample(StandardNormal)).collect();
    let mut y = sos.filter(&white);
    y.drain(..warm);
    let m = y.iter().sum::<f64>() / n as f64;
    let sd = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
    Ok(y.into_iter().map(|v| (v - m) / sd).collect())
}

/// Synthetic EMG, markers and angles; a pure function of `cfg`.
pub fn generate_synthetic<T: Real>(cfg: &SynthConfig, skel: &HandSkeleton) -> Result<SyntheticData<T>> {
    cfg.validate()?;
    let model = HandModel::<T>::new(skel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let traj = trajectories(cfg, skel, &mut rng);
    let mixing = match &cfg.mixing {
        Some(m) => m.clone(),
        None => default_mixing(cfg, skel, &mut rng),
    };
    let rest = skel.rest_pose::<f64>();

    // marker-rate angles and markers
    let m = (cfg.duration_s * MARKER_FS_HZ).floor() as usize + 1;
    let poses: Vec<JointAngles<T>> = (0..m)
        .map(|i| {
            let t = i as f64 / MARKER_FS_HZ;
            JointAngles(std::array::from_fn(|j| T::lit(traj[j].value(t))))
        })
        .collect();
    let frames: Vec<_> = poses.iter().map(|a| model.fka(a)).collect();
    let markers = MarkerTrajectory::from_model_frames(&frames, skel, MARKER_FS_HZ)?;
    let angles = AngleSeries::from_poses(&poses, MARKER_FS_HZ)?;

    // EMG-rate activations
    let fs = EMG_FS_HZ;
    let sync_start = (cfg.sync_lead_s * fs).round() as usize;
    let n = sync_start + (cfg.duration_s * fs).floor() as usize + 1;
    let tau = cfg.speed_weight_s;
    let drive: Vec<[f64; N_JOINTS]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 - sync_start as f64) / fs;
            std::array::from_fn(|j| tau * traj[j].speed(t).abs() + (traj[j].value(t) - rest[j]).abs())
        })
        .collect();

    let counts_per_volt = EMG_GAIN * 2f64.powi(EMG_BITS as i32) / EMG_V_RANGE;
    let lim = (1i64 << (EMG_BITS - 1)) as f64;
    let seed = cfg.seed;
    let columns: Vec<Vec<i32>> = (0..cfg.n_channels)
        .into_par_iter()
        .map(|c| -> Result<Vec<i32>> {
            let carrier = band_noise(n, fs, cfg.carrier_band_hz, seed, 1 + 2 * c as u64)?;
            let floor = band_noise(n, fs, cfg.carrier_band_hz, seed, 2 + 2 * c as u64)?;
            let w = &mixing[c];
            Ok((0..n)
                .map(|i| {
                    let a = w.iter().zip(drive[i].iter()).map(|(w, d)| w * d).sum::<f64>().max(0.0);
                    let t = i as f64 / fs;
                    let v = cfg.amplitude_v * (a * carrier[i] + cfg.noise_std * floor[i])
                        + cfg.line_hum_50hz_ampl * (std::f64::consts::TAU * 50.0 * t).sin();
                    (v * counts_per_volt).round().clamp(-lim, lim - 1.0) as i32
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let samples = Array2::from_shape_fn((n, cfg.n_channels), |(i, c)| columns[c][i]);
    let mut meta = EmgMeta::standard(cfg.grid.0, cfg.grid.1);
    meta.sync_start = sync_start;
    let emg = EmgRecording::new(samples, &meta)?;

    let n_prompts = (cfg.duration_s / cfg.prompt_duration_s).floor() as usize;
    Ok(SyntheticData {
        emg,
        markers,
        angles,
        schedule: uniform_schedule(n_prompts, cfg.prompt_duration_s),
        mixing,
    })
}
