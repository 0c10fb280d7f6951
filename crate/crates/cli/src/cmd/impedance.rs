//! Electrode impedance summaries and recording-quality comparison.

use std::path::{Path, PathBuf};

use hdemg::dataio::{load_emg_with_sidecar, EmgRecording};
use hdemg::emgproc::sliding_rms;
use hdemg::impedance::{
    aggregate_bode, compare_emg, divider_attenuation, fit_rc, normalize_by_area, read_impedance_csv, CompareOptions,
    AMPLIFIER_INPUT_OHM, ELECTRODE_AREA_CM2,
};
use hdemg::plot::{LinePlot, Series};
use hdemg::{Error, Result};
use ndarray::ArrayView2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::common::{ensure_dir, load_config, write_json, write_text, Manifest};
use crate::Common;

pub fn parse_named(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected name=path, got {s:?}"))?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(format!("name {name:?} must be non-empty and use letters, digits, '-' or '_'"));
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpedanceConfig {
    /// Measurements are two identical electrodes in series; halve to get one interface.
    pub equal_split: bool,
    pub input_impedance_ohm: f64,
    pub area_cm2: f64,
    pub reference_hz: f64,
    pub channel: usize,
    pub compare: CompareOptions,
}

impl Default for ImpedanceConfig {
    fn default() -> Self {
        Self {
            equal_split: true,
            input_impedance_ohm: AMPLIFIER_INPUT_OHM,
            area_cm2: ELECTRODE_AREA_CM2,
            reference_hz: 50.0,
            channel: 0,
            compare: CompareOptions::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct InputSummary {
    name: String,
    n_pairs: usize,
    reference_hz: f64,
    median_ohm: f64,
    iqr_ohm: f64,
    normalized_ohm_cm2: f64,
    divider_gain: f64,
    divider_db: f64,
    flagged_fits: usize,
}

/// Offset-free volts of one channel.
fn channel_volts(rec: &EmgRecording, ch: usize) -> Result<Vec<f64>> {
    if ch >= rec.n_channels() {
        return Err(Error::Config(format!("channel {ch} out of range for {} channels", rec.n_channels())));
    }
    let col = rec.samples.column(ch);
    let m = col.iter().map(|&v| v as i64).sum::<i64>() as f64 / col.len().max(1) as f64;
    let k = rec.volts_per_count();
    Ok(col.iter().map(|&v| (v as f64 - m) * k).collect())
}

pub fn run(common: &Common, inputs: &[(String, PathBuf)], no_split: bool, compare: &[PathBuf], channel: Option<usize>) -> Result<()> {
    let mut cfg: ImpedanceConfig = load_config(common.config.as_deref())?;
    if no_split {
        cfg.equal_split = false;
    }
    cfg.channel = channel.unwrap_or(cfg.channel);
    if inputs.is_empty() && compare.is_empty() {
        return Err(Error::Config("give at least one --input name=path or --compare a b".into()));
    }
    let mut manifest = Manifest::new("impedance", &cfg, None)?;
    let out = &common.out;
    ensure_dir(out)?;
    let mut summaries = Vec::new();
    let mut mag_series = Vec::new();
    let mut phase_series = Vec::new();
    for (name, path) in inputs {
        manifest.input(path)?;
        let mut spectra = read_impedance_csv::<f64>(path)?;
        if cfg.equal_split {
            spectra = spectra.iter().map(|s| s.per_interface()).collect();
        }
        let bode = aggregate_bode(&spectra)?;
        let mut fits = String::from("pair,r_ohm,c_farad,residual,flagged\n");
        let mut flagged = 0;
        for s in &spectra {
            let f = fit_rc(s)?;
            flagged += usize::from(f.flagged);
            fits.push_str(&format!("{},{},{},{},{}\n", s.pair, f.model.r_ohm, f.model.c_farad, f.residual, f.flagged));
        }
        write_text(&out.join(format!("fits_{name}.csv")), &fits)?;
        let mut csv = String::from("frequency_hz,magnitude_median_ohm,magnitude_iqr_ohm,phase_median_deg,phase_iqr_deg\n");
        for i in 0..bode.freqs_hz.len() {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                bode.freqs_hz[i], bode.magnitude_median_ohm[i], bode.magnitude_iqr_ohm[i], bode.phase_median_deg[i], bode.phase_iqr_deg[i]
            ));
        }
        write_text(&out.join(format!("bode_{name}.csv")), &csv)?;
        let (median, iqr) = bode.magnitude_at(cfg.reference_hz).ok_or_else(|| {
            Error::Config(format!("reference frequency {} Hz lies outside the measured grid", cfg.reference_hz))
        })?;
        let div = divider_attenuation(Complex::new(median, 0.0), Complex::new(cfg.input_impedance_ohm, 0.0))?;
        summaries.push(InputSummary {
            name: name.clone(),
            n_pairs: spectra.len(),
            reference_hz: cfg.reference_hz,
            median_ohm: median,
            iqr_ohm: iqr,
            normalized_ohm_cm2: normalize_by_area(median, cfg.area_cm2)?,
            divider_gain: div.gain.norm(),
            divider_db: div.gain_db,
            flagged_fits: flagged,
        });
        let band = |m: &[f64], q: &[f64]| -> (Vec<f64>, Vec<f64>) {
            (m.iter().zip(q).map(|(a, b)| a - b / 2.0).collect(), m.iter().zip(q).map(|(a, b)| a + b / 2.0).collect())
        };
        let kohm = |v: &[f64]| v.iter().map(|x| x / 1e3).collect::<Vec<_>>();
        let (mm, mq) = (kohm(&bode.magnitude_median_ohm), kohm(&bode.magnitude_iqr_ohm));
        mag_series.push(Series { name: name.clone(), x: bode.freqs_hz.clone(), band: Some(band(&mm, &mq)), y: mm });
        phase_series.push(Series {
            name: name.clone(),
            x: bode.freqs_hz.clone(),
            band: Some(band(&bode.phase_median_deg, &bode.phase_iqr_deg)),
            y: bode.phase_median_deg.clone(),
        });
    }
    if !inputs.is_empty() {
        write_json(&out.join("impedance_summary.json"), &summaries)?;
        for (file, label, series) in [("bode_magnitude.svg", "|Z| (kOhm)", mag_series), ("bode_phase.svg", "phase (deg)", phase_series)] {
            let plot = LinePlot { title: "Electrode impedance".into(), x_label: "frequency (Hz)".into(), y_label: label.into(), log_x: true, series, hlines: vec![] };
            write_text(&out.join(file), &plot.render())?;
        }
    }
    if !compare.is_empty() {
        compare_recordings(&cfg, compare, out, &mut manifest)?;
    }
    manifest.finish(out)
}

fn compare_recordings(cfg: &ImpedanceConfig, paths: &[PathBuf], out: &Path, manifest: &mut Manifest) -> Result<()> {
    let mut sig = Vec::with_capacity(2);
    let mut fs = 0.0;
    for p in paths {
        manifest.input(p)?;
        let rec = load_emg_with_sidecar(p)?;
        fs = rec.fs_hz;
        sig.push(channel_volts(&rec, cfg.channel)?);
    }
    let n = sig[0].len().min(sig[1].len());
    if sig[0].len() != sig[1].len() {
        log::warn!("recordings differ in length; comparing the first {n} samples");
    }
    let (a, b) = (&sig[0][..n], &sig[1][..n]);
    let cmp = compare_emg(a, b, fs, &cfg.compare)?;
    write_json(&out.join("comparison.json"), &cmp)?;
    let trace = |x: &[f64]| -> Result<Vec<f64>> {
        let rect: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let view = ArrayView2::from_shape((rect.len(), 1), &rect).expect("column");
        Ok(sliding_rms(view, cfg.compare.rms_window, cfg.compare.rms_slide)?.iter().map(|v| v * 1e3).collect())
    };
    let (ra, rb) = (trace(a)?, trace(b)?);
    let t: Vec<f64> = (0..ra.len()).map(|k| (k * cfg.compare.rms_slide) as f64 / fs).collect();
    let names = paths.iter().map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let series = names.zip([ra, rb]).map(|(name, y)| Series { name, x: t.clone(), y, band: None }).collect();
    let plot = LinePlot {
        title: format!("RMS, channel {} (RMSE {:.3} mV)", cfg.channel, cmp.rmse_rms_mv),
        x_label: "time (s)".into(),
        y_label: "RMS (mV)".into(),
        series,
        ..Default::default()
    };
    write_text(&out.join("rms_comparison.svg"), &plot.render())
}
