//! Time alignment of the EMG envelope with marker-rate joint angles.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::emg::EmgRecording;
use super::markers::{AngleSeries, MarkerTrajectory};
use super::table::{read_table, write_table};
use crate::emgproc::{preprocess, ChannelStats, EmgEnvelope, DOCUMENTED_SLIDES};
use crate::error::{Error, Result};
use crate::kinematics::{normalize_angles, JointAngles, JOINT_NAMES, N_JOINTS};
use crate::scalar::Real;

/// One visual prompt: pose shown from `start_s` for `duration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptEvent {
    pub pose_id: usize,
    pub start_s: f64,
    pub duration_s: f64,
}

impl PromptEvent {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

/// Back-to-back prompts of equal duration.
pub fn uniform_schedule(n_poses: usize, duration_s: f64) -> Vec<PromptEvent> {
    (0..n_poses)
        .map(|k| PromptEvent {
            pose_id: k,
            start_s: k as f64 * duration_s,
            duration_s,
        })
        .collect()
}

/// Window slide matching a prompt duration: 8 s -> 25, 7 s -> 29, 6 s -> 33.
pub fn slide_for_prompt(duration_s: f64) -> Option<usize> {
    [(8.0, 25), (7.0, 29), (6.0, 33)]
        .iter()
        .find(|(d, _)| (duration_s - d).abs() < 1e-9)
        .map(|&(_, s)| s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset<T> {
    pub envelope: EmgEnvelope<T>,
    /// Normalized joint angles at the window centres, `n x 29`.
    pub angles_norm: Array2<T>,
    /// Window centre times, seconds from the synchronization event.
    pub timestamps: Vec<f64>,
    pub prompt_schedule: Vec<PromptEvent>,
}

#[derive(Debug, Clone)]
pub struct AlignOptions<T> {
    pub window_len: usize,
    pub slide: usize,
    /// Standardization statistics from a training split.
    pub stats: Option<ChannelStats<T>>,
    pub rest: JointAngles<T>,
    pub prompt_schedule: Vec<PromptEvent>,
}

impl<T: Real> AlignOptions<T> {
    pub fn new(window_len: usize, slide: usize) -> Self {
        Self {
            window_len,
            slide,
            stats: None,
            rest: JointAngles::zeros(),
            prompt_schedule: Vec::new(),
        }
    }
}

/// Linear interpolation of the columns of `y` (rate `fs`) at times `t`.
/// Times outside `[0, last frame]` are rejected.
pub fn interp_rows<T: Real>(y: &Array2<T>, fs_hz: f64, t: &[f64]) -> Result<Array2<T>> {
    let m = y.nrows();
    if m == 0 {
        return Err(Error::InvalidInput("cannot interpolate an empty series".into()));
    }
    let last = (m - 1) as f64;
    let mut out = Array2::<T>::zeros((t.len(), y.ncols()));
    for (r, &ti) in t.iter().enumerate() {
        let x = ti * fs_hz;
        if !(x >= -1e-9 && x <= last + 1e-9) {
            return Err(Error::InvalidInput(format!("time {ti} s lies outside the angle series")));
        }
        let x = x.clamp(0.0, last);
        let i0 = (x.floor() as usize).min(m - 1);
        let i1 = (i0 + 1).min(m - 1);
        let w = T::lit(x - i0 as f64);
        for c in 0..y.ncols() {
            let (a, b) = (y[[i0, c]], y[[i1, c]]);
            out[[r, c]] = if i0 == i1 { a } else { a + (b - a) * w };
        }
    }
    Ok(out)
}

/// Crop the EMG to the marker span starting at the sync sample, compute the
/// envelope and interpolate normalized angles onto the window centres.
pub fn align<T: Real>(
    emg: &EmgRecording,
    markers: &MarkerTrajectory<T>,
    angles: &AngleSeries<T>,
    opts: &AlignOptions<T>,
) -> Result<AlignedDataset<T>> {
    if !DOCUMENTED_SLIDES.contains(&opts.slide) {
        log::warn!("slide {} is not one of the documented values {:?}", opts.slide, DOCUMENTED_SLIDES);
    }
    if angles.n_frames() != markers.n_frames() || (angles.fs_hz - markers.fs_hz).abs() > 1e-9 {
        return Err(Error::Shape("angle series and marker trajectory differ in length or rate".into()));
    }
    let span_s = angles.n_frames().saturating_sub(1) as f64 / angles.fs_hz;
    let start = emg.sync_start;
    if start >= emg.n_samples() || angles.n_frames() < 2 {
        return Err(Error::InvalidInput("EMG and marker time ranges do not overlap".into()));
    }
    let end = (start + (span_s * emg.fs_hz).floor() as usize + 1).min(emg.n_samples());
    if end - start < opts.window_len {
        return Err(Error::InvalidInput(format!(
            "overlap of {} samples is shorter than one window",
            end - start
        )));
    }
    let cropped = emg.slice_samples(start, end);
    let envelope = preprocess(&cropped, opts.window_len, opts.slide, opts.stats.as_ref())?;
    let timestamps = envelope.timestamps();
    let raw = interp_rows(&angles.angles, angles.fs_hz, &timestamps)?;
    let mut angles_norm = Array2::<T>::zeros(raw.raw_dim());
    for (i, row) in raw.rows().into_iter().enumerate() {
        let a = JointAngles(std::array::from_fn(|j| row[j]));
        let nrm = normalize_angles(&a, &opts.rest);
        for j in 0..N_JOINTS {
            angles_norm[[i, j]] = nrm[j];
        }
    }
    Ok(AlignedDataset {
        envelope,
        angles_norm,
        timestamps,
        prompt_schedule: opts.prompt_schedule.clone(),
    })
}

impl<T: Real> AlignedDataset<T> {
    pub fn n_rows(&self) -> usize {
        self.angles_norm.nrows()
    }

    /// Writes `envelope.csv`, `angles_norm.csv` and `schedule.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.envelope.save(&dir.join("envelope.csv"))?;
        let mut table = Array2::<T>::zeros((self.n_rows(), N_JOINTS + 1));
        for (i, &t) in self.timestamps.iter().enumerate() {
            table[[i, 0]] = T::lit(t);
        }
        table.slice_mut(ndarray::s![.., 1..]).assign(&self.angles_norm);
        let mut header = vec!["t_s".to_string()];
        header.extend(JOINT_NAMES.iter().map(|s| s.to_string()));
        write_table(&dir.join("angles_norm.csv"), &header, &table)?;
        let sp = dir.join("schedule.json");
        let text = serde_json::to_string_pretty(&self.prompt_schedule)? + "\n";
        std::fs::write(&sp, text).map_err(|e| Error::io(&sp, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let envelope = EmgEnvelope::load(&dir.join("envelope.csv"))?;
        let ap = dir.join("angles_norm.csv");
        let (header, table) = read_table::<T>(&ap)?;
        if header.len() != N_JOINTS + 1 || table.nrows() != envelope.n_windows() {
            return Err(Error::format(&ap, "angle table does not match the envelope"));
        }
        let sp = dir.join("schedule.json");
        let prompt_schedule = if sp.exists() {
            let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
            serde_json::from_str(&text)?
        } else {
            Vec::new()
        };
        let timestamps = table.column(0).iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::format(&ap, "timestamps must increase strictly"));
        }
        Ok(Self {
            timestamps,
            envelope,
            angles_norm: table.slice(ndarray::s![.., 1..]).to_owned(),
            prompt_schedule,
        })
    }
}
