//! Recursive per-joint pose estimator: network, optimizer, training and
//! post-processing.

mod adam;
mod network;
mod train;

pub use adam::{adam_step, AdamState, TrainHyper};
pub use network::{
    subnet_input, Activation, Checkpoint, Dense, ModelWeights, NetworkConfig, Subnet, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
pub use train::{
    butterworth_lowpass, butterworth_lowpass_zero_phase, evaluate_loss, infer, postprocess, split_last_trial, split_rows, train, write_loss_log,
    EpochLoss, Latency, TeacherForced, TrainOutcome,
};

/// Post-filter settings applied to inferred angles.
pub const POSTFILTER_ORDER: usize = 6;
pub const POSTFILTER_CUTOFF_HZ: f64 = 1.0;
