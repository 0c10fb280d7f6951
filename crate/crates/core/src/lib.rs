//! High-density surface EMG toolkit: envelope extraction, hand kinematics,
//! recursive per-joint pose estimation, statistical parametric mapping and
//! skin-electrode impedance analysis.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod dataio;
pub mod emgproc;
pub mod error;
pub mod estimator;
pub mod evalspm;
pub mod filter;
pub mod impedance;
pub mod kinematics;
pub mod plot;
pub mod scalar;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

pub type Envelope = emgproc::EmgEnvelope<f64>;
pub type Envelope32 = emgproc::EmgEnvelope<f32>;
pub type Dataset = dataio::AlignedDataset<f64>;
pub type Dataset32 = dataio::AlignedDataset<f32>;
pub type Markers = dataio::MarkerTrajectory<f64>;
pub type Angles = kinematics::JointAngles<f64>;
pub type Hand = kinematics::HandModel<f64>;
pub type Model = estimator::ModelWeights<f64>;
pub type Model32 = estimator::ModelWeights<f32>;
pub type Spectrum = impedance::ImpedanceSpectrum<f64>;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
