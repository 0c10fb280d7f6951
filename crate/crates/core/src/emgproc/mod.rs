//! EMG envelope extraction and spatial variance analysis.

mod envelope;
mod ndv;

pub use envelope::{
    column_means, n_windows, preprocess, rectified_volts, rms_envelope, sliding_rms, window_centers, ChannelStats,
    EmgEnvelope, DEFAULT_WINDOW, DOCUMENTED_SLIDES, ENVELOPE_SCALE,
};
pub use ndv::{ndv, ndv_compare, pool, GroupSummary, NdvComparison, NdvResult, NDV_COLS, NDV_ROWS};
