//! Estimation metrics and 1-D statistical parametric mapping.

mod cjd;
mod metrics;
mod spm;

pub use cjd::{cjd, cmcjd, movement_cjd, resample_rows, segment_movements, CjdResult, MOVEMENT_NODES};
pub use metrics::{mpcc, wfd, wfd_frames, CorrelationReport, DistanceReport, PerformanceReport, Quartiles3};
pub use spm::{
    estimate_fwhm, expected_ec, rft_threshold, smooth_gaussian_fields, spm_one_sample_t, SpmResult, SPM_ALPHA,
};
