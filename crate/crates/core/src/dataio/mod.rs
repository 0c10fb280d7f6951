//! Recording, marker and angle-series I/O, alignment and synthetic data.

pub mod align;
pub mod convert;
pub mod emg;
pub mod grids;
pub mod markers;
pub mod synth;
pub mod table;

pub use emg::{
    load_emg, load_emg_with_sidecar, save_emg, sidecar_path, EmgMeta, EmgRecording, SampleFormat,
    CHANNELS_PER_UNIT, EMG_BITS, EMG_FS_HZ, EMG_GAIN, EMG_V_RANGE,
};
pub use table::{fmt_real, read_table, write_table};
pub use markers::{AngleSeries, MarkerTrajectory, MARKER_FS_HZ};
pub use align::{align, interp_rows, slide_for_prompt, uniform_schedule, AlignOptions, AlignedDataset, PromptEvent};
pub use synth::{generate_synthetic, JointOverride, Sinusoid, SynthConfig, SyntheticData};
pub use convert::{convert_directory, convert_text_emg, data_cache_dir, ConvertReport, DATA_DIR_ENV};
pub use grids::GridSelection;
