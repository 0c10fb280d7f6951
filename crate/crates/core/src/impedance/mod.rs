//! Skin-electrode impedance: parallel R-C model, Bode summaries, divider
//! attenuation and signal-quality comparison of recordings.

mod bode;
mod rc;
mod spectrogram;

pub use bode::{
    aggregate_bode, log_frequency_grid, read_impedance_csv, standard_grid, write_impedance_csv, BodeSummary,
    ImpedanceSpectrum, GRID_F_MAX_HZ, GRID_F_MIN_HZ, GRID_POINTS,
};
pub use rc::{
    divider_attenuation, fit_rc, normalize_by_area, rc_impedance, Divider, RcFit, RcModel, AMPLIFIER_INPUT_OHM,
    ELECTRODE_AREA_CM2, FIT_RESIDUAL_WARN,
};
pub use spectrogram::{compare_emg, spectrogram, CompareOptions, EmgComparison, Spectrogram, SPEC_FLOOR_DB};
