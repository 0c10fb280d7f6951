//! Angle correlation and fingertip distance metrics.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataio::MarkerTrajectory;
use crate::error::{Error, Result};
use crate::kinematics::{MarkerFrame, FINGERTIP_MARKERS};
use crate::scalar::Real;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles3 {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles3 {
    fn of(x: &[f64]) -> Result<Self> {
        let q = stats::quartiles(x)?;
        Ok(Self { q1: q.q1, median: q.median, q3: q.q3 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub mpcc: f64,
    pub pcc_quartiles: Quartiles3,
    /// `None` for joints without variance in either series.
    pub per_joint_pcc: Vec<Option<f64>>,
}

/// Per-joint Pearson correlation and its mean over joints with variance.
pub fn mpcc<T: Real>(actual: ArrayView2<T>, predicted: ArrayView2<T>) -> Result<CorrelationReport> {
    if actual.dim() != predicted.dim() {
        return Err(Error::Shape(format!("{:?} vs {:?}", actual.dim(), predicted.dim())));
    }
    if actual.nrows() < 2 {
        return Err(Error::InvalidInput("correlation needs at least two rows".into()));
    }
    let per_joint: Vec<Option<f64>> = (0..actual.ncols())
        .map(|j| {
            let a: Vec<f64> = actual.column(j).iter().map(|v| v.as_f64()).collect();
            let p: Vec<f64> = predicted.column(j).iter().map(|v| v.as_f64()).collect();
            stats::pearson(&a, &p).ok()
        })
        .collect();
    let skipped: Vec<usize> = per_joint.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(j, _)| j).collect();
    if !skipped.is_empty() {
        log::warn!("joints without variance excluded from the correlation: {skipped:?}");
    }
    let valid: Vec<f64> = per_joint.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Degenerate("no joint has variance in both series".into()));
    }
    Ok(CorrelationReport {
        mpcc: stats::mean(&valid),
        pcc_quartiles: Quartiles3::of(&valid)?,
        per_joint_pcc: per_joint,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// Mean fingertip distance per frame, mm.
    pub series: Vec<f64>,
    pub md: f64,
    pub quartiles: Quartiles3,
}

fn distance_report(series: Vec<f64>) -> Result<DistanceReport> {
    if series.is_empty() {
        return Err(Error::InvalidInput("no frames to compare".into()));
    }
    Ok(DistanceReport { md: stats::mean(&series), quartiles: Quartiles3::of(&series)?, series })
}

/// Fingertip distance between model frames.
pub fn wfd_frames<T: Real>(actual: &[MarkerFrame<T>], predicted: &[MarkerFrame<T>]) -> Result<DistanceReport> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape("marker streams differ in length".into()));
    }
    let series = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| {
            FINGERTIP_MARKERS
                .iter()
                .map(|l| {
                    let (x, y) = (a.get(l).expect("model marker"), p.get(l).expect("model marker"));
                    (x - y).norm().as_f64()
                })
                .sum::<f64>()
                / FINGERTIP_MARKERS.len() as f64
        })
        .collect();
    distance_report(series)
}

/// Fingertip distance between recorded trajectories.
pub fn wfd<T: Real>(actual: &MarkerTrajectory<T>, predicted: &MarkerTrajectory<T>) -> Result<DistanceReport> {
    if actual.n_frames() != predicted.n_frames() {
        return Err(Error::Shape("marker streams differ in length".into()));
    }
    let idx = |t: &MarkerTrajectory<T>| -> Result<Vec<usize>> {
        FINGERTIP_MARKERS
            .iter()
            .map(|l| t.label_index(l).ok_or_else(|| Error::MissingMarker(l.to_string())))
            .collect()
    };
    let (ia, ip) = (idx(actual)?, idx(predicted)?);
    let series = (0..actual.n_frames())
        .map(|f| {
            ia.iter()
                .zip(&ip)
                .map(|(&a, &p)| (actual.point(f, a) - predicted.point(f, p)).norm().as_f64())
                .sum::<f64>()
                / FINGERTIP_MARKERS.len() as f64
        })
        .collect();
    distance_report(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    #[serde(flatten)]
    pub correlation: CorrelationReport,
    pub md_mm: f64,
    pub wfd_quartiles: Quartiles3,
}

impl PerformanceReport {
    pub fn new(correlation: CorrelationReport, distance: &DistanceReport) -> Self {
        Self { correlation, md_mm: distance.md, wfd_quartiles: distance.quartiles }
    }
}
