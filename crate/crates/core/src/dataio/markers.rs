//! Marker trajectories and joint-angle series as CSV with a small JSON sidecar.

use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::emg::sidecar_path;
use super::table::{read_table, write_table};
use crate::error::{Error, Result};
use crate::kinematics::{
    all_marker_labels, geom::Vec3, HandSkeleton, JointAngles, MarkerFrame, BODY_MARKERS, JOINT_NAMES, KINEMATIC_MARKERS,
    N_HAND_MARKERS, N_JOINTS,
};
use crate::scalar::Real;

/// Motion-capture frame rate, Hz.
pub const MARKER_FS_HZ: f64 = 100.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RateSidecar {
    fs_hz: f64,
}

fn write_rate(path: &Path, fs_hz: f64) -> Result<()> {
    let sp = sidecar_path(path);
    let text = serde_json::to_string_pretty(&RateSidecar { fs_hz })? + "\n";
    std::fs::write(&sp, text).map_err(|e| Error::io(&sp, e))
}

/// Frame rate from the sidecar, else from the time column.
fn read_rate<T: Real>(path: &Path, table: &Array2<T>) -> Result<f64> {
    let sp = sidecar_path(path);
    if sp.exists() {
        let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let side: RateSidecar = serde_json::from_str(&text)?;
        return Ok(side.fs_hz);
    }
    let n = table.nrows();
    if n < 2 {
        return Err(Error::format(path, "cannot infer frame rate from fewer than two rows"));
    }
    let span = table[[n - 1, 0]].as_f64() - table[[0, 0]].as_f64();
    if !(span > 0.0) {
        return Err(Error::format(path, "time column is not increasing"));
    }
    Ok((n - 1) as f64 / span)
}

/// Marker positions, `m x M x 3` in mm. Missing samples are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerTrajectory<T> {
    pub frames: Array3<T>,
    pub fs_hz: f64,
    pub labels: Vec<String>,
}

impl<T: Real> MarkerTrajectory<T> {
    pub fn new(frames: Array3<T>, fs_hz: f64, labels: Vec<String>) -> Result<Self> {
        let t = Self { frames, fs_hz, labels };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs_hz > 0.0) || !self.fs_hz.is_finite() {
            return Err(Error::Config("marker frame rate must be positive".into()));
        }
        let (_, m, d) = self.frames.dim();
        if d != 3 || m != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} labels for a frame tensor of shape {:?}",
                self.labels.len(),
                self.frames.dim()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Config(format!("duplicate marker label `{dup}`")));
        }
        if self.frames.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidInput("infinite marker coordinate".into()));
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        self.frames.dim().0
    }

    /// Seconds from the first frame.
    pub fn times(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|i| i as f64 / self.fs_hz).collect()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_frames().saturating_sub(1) as f64 / self.fs_hz
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn point(&self, frame: usize, marker: usize) -> Vec3<T> {
        Vec3::new(
            self.frames[[frame, marker, 0]],
            self.frames[[frame, marker, 1]],
            self.frames[[frame, marker, 2]],
        )
    }

    /// Markers used by the kinematic model at one frame.
    pub fn kinematic_frame(&self, frame: usize) -> Result<MarkerFrame<T>> {
        let mut idx = [0usize; KINEMATIC_MARKERS.len()];
        for (k, l) in KINEMATIC_MARKERS.iter().enumerate() {
            idx[k] = self.label_index(l).ok_or_else(|| Error::MissingMarker(l.to_string()))?;
        }
        Ok(MarkerFrame {
            points: idx.map(|i| self.point(frame, i)),
        })
    }

    /// Full marker set from model frames; static body markers come from the skeleton.
    pub fn from_model_frames(frames: &[MarkerFrame<T>], skeleton: &HandSkeleton, fs_hz: f64) -> Result<Self> {
        let labels = all_marker_labels();
        let mut out = Array3::<T>::zeros((frames.len(), labels.len(), 3));
        for (i, f) in frames.iter().enumerate() {
            for k in 0..N_HAND_MARKERS + 3 {
                let p = f.points[k];
                out[[i, k, 0]] = p.x;
                out[[i, k, 1]] = p.y;
                out[[i, k, 2]] = p.z;
            }
            for (k, p) in skeleton.body_markers.iter().enumerate() {
                for d in 0..3 {
                    out[[i, N_HAND_MARKERS + 3 + k, d]] = T::lit(p[d]);
                }
            }
        }
        debug_assert_eq!(labels[N_HAND_MARKERS + 3], BODY_MARKERS[3]);
        Self::new(out, fs_hz, labels)
    }

    /// CSV `t_s, <label>_x, <label>_y, <label>_z, ...`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let (n, m, _) = self.frames.dim();
        let mut table = Array2::<T>::zeros((n, 1 + 3 * m));
        for (i, t) in self.times().into_iter().enumerate() {
            table[[i, 0]] = T::lit(t);
            for k in 0..m {
                for d in 0..3 {
                    table[[i, 1 + 3 * k + d]] = self.frames[[i, k, d]];
                }
            }
        }
        let mut header = vec!["t_s".to_string()];
        for l in &self.labels {
            header.extend(["x", "y", "z"].iter().map(|a| format!("{l}_{a}")));
        }
        write_table(path, &header, &table)?;
        write_rate(path, self.fs_hz)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, table) = read_table::<T>(path)?;
        if header.first().map(String::as_str) != Some("t_s") || (header.len() - 1) % 3 != 0 {
            return Err(Error::format(path, "expected `t_s` then x/y/z triples"));
        }
        let m = (header.len() - 1) / 3;
        let mut labels = Vec::with_capacity(m);
        for k in 0..m {
            let h = &header[1 + 3 * k];
            let label = h
                .strip_suffix("_x")
                .ok_or_else(|| Error::format(path, format!("column `{h}` is not an x coordinate")))?;
            for (d, a) in ["y", "z"].iter().enumerate() {
                if header[2 + 3 * k + d] != format!("{label}_{a}") {
                    return Err(Error::format(path, format!("coordinates of `{label}` are not grouped")));
                }
            }
            labels.push(label.to_string());
        }
        let fs = read_rate(path, &table)?;
        let n = table.nrows();
        let frames = Array3::from_shape_fn((n, m, 3), |(i, k, d)| table[[i, 1 + 3 * k + d]]);
        Self::new(frames, fs, labels)
    }
}

/// Joint angles sampled at the marker rate, radians, `m x 29`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries<T> {
    pub angles: Array2<T>,
    pub fs_hz: f64,
}

impl<T: Real> AngleSeries<T> {
    pub fn new(angles: Array2<T>, fs_hz: f64) -> Result<Self> {
        if angles.ncols() != N_JOINTS {
            return Err(Error::Shape(format!("angle series has {} columns, expected {N_JOINTS}", angles.ncols())));
        }
        if !(fs_hz > 0.0) {
            return Err(Error::Config("angle series rate must be positive".into()));
        }
        Ok(Self { angles, fs_hz })
    }

    pub fn from_poses(poses: &[JointAngles<T>], fs_hz: f64) -> Result<Self> {
        let a = Array2::from_shape_fn((poses.len(), N_JOINTS), |(i, j)| poses[i][j]);
        Self::new(a, fs_hz)
    }

    pub fn n_frames(&self) -> usize {
        self.angles.nrows()
    }

    pub fn pose(&self, i: usize) -> JointAngles<T> {
        JointAngles(std::array::from_fn(|j| self.angles[[i, j]]))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|i| i as f64 / self.fs_hz).collect()
    }

    /// CSV `t_s, <joint>...` in degrees.
    pub fn save(&self, path: &Path) -> Result<()> {
        let n = self.n_frames();
        let mut table = Array2::<f64>::zeros((n, 1 + N_JOINTS));
        for (i, t) in self.times().into_iter().enumerate() {
            table[[i, 0]] = t;
            for j in 0..N_JOINTS {
                table[[i, 1 + j]] = self.angles[[i, j]].as_f64().to_degrees();
            }
        }
        let mut header = vec!["t_s".to_string()];
        header.extend(JOINT_NAMES.iter().map(|s| format!("{s}_deg")));
        write_table(path, &header, &table)?;
        write_rate(path, self.fs_hz)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, table) = read_table::<f64>(path)?;
        if header.len() != 1 + N_JOINTS || header[0] != "t_s" {
            return Err(Error::format(path, format!("expected `t_s` and {N_JOINTS} joint columns")));
        }
        for (j, name) in JOINT_NAMES.iter().enumerate() {
            if header[1 + j] != format!("{name}_deg") {
                return Err(Error::format(path, format!("column {} should be `{name}_deg`", j + 2)));
            }
        }
        let fs = read_rate(path, &table)?;
        let a = Array2::from_shape_fn((table.nrows(), N_JOINTS), |(i, j)| T::lit(table[[i, 1 + j]].to_radians()));
        Self::new(a, fs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::HandModel;

    fn sample_trajectory() -> (MarkerTrajectory<f64>, AngleSeries<f64>) {
        let skel = HandSkeleton::default();
        let model = HandModel::<f64>::new(&skel).unwrap();
        let poses: Vec<JointAngles<f64>> = (0..5)
            .map(|i| {
                let mut a = JointAngles::zeros();
                a[5] = 0.1 * i as f64;
                a[0] = -0.05 * i as f64;
                a
            })
            .collect();
        let frames: Vec<_> = poses.iter().map(|a| model.fka(a)).collect();
        (
            MarkerTrajectory::from_model_frames(&frames, &skel, MARKER_FS_HZ).unwrap(),
            AngleSeries::from_poses(&poses, MARKER_FS_HZ).unwrap(),
        )
    }

    #[test]
    fn marker_round_trip_is_exact() {
        let (traj, _) = sample_trajectory();
        assert_eq!(traj.labels.len(), 33);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        traj.save(&p).unwrap();
        let back = MarkerTrajectory::<f64>::load(&p).unwrap();
        assert_eq!(back, traj);
        // rate inferred from the time column when the sidecar is absent
        std::fs::remove_file(sidecar_path(&p)).unwrap();
        assert!((MarkerTrajectory::<f64>::load(&p).unwrap().fs_hz - MARKER_FS_HZ).abs() < 1e-9);
    }

    #[test]
    fn kinematic_frame_matches_model() {
        let skel = HandSkeleton::default();
        let model = HandModel::<f64>::new(&skel).unwrap();
        let (traj, angles) = sample_trajectory();
        let f = traj.kinematic_frame(3).unwrap();
        assert_eq!(f, model.fka(&angles.pose(3)));
    }

    #[test]
    fn missing_label_reported() {
        let (mut traj, _) = sample_trajectory();
        traj.labels[7] = "XXXX".into();
        match traj.kinematic_frame(0) {
            Err(Error::MissingMarker(l)) => assert_eq!(l, "MDIP"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_labels_rejected() {
        let (traj, _) = sample_trajectory();
        let mut labels = traj.labels.clone();
        labels[1] = labels[0].clone();
        assert!(MarkerTrajectory::new(traj.frames.clone(), 100.0, labels).is_err());
    }

    #[test]
    fn angle_round_trip() {
        let (_, angles) = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        angles.save(&p).unwrap();
        let back = AngleSeries::<f64>::load(&p).unwrap();
        assert_eq!(back.fs_hz, angles.fs_hz);
        for (a, b) in back.angles.iter().zip(angles.angles.iter()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }
}
