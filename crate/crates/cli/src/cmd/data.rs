//! Synthetic data, preprocessing, variance analysis and conversion.

use std::path::{Path, PathBuf};

use hdemg::dataio::{
    align, convert_directory, data_cache_dir, generate_synthetic, load_emg_with_sidecar, save_emg, slide_for_prompt,
    write_table, AlignOptions, AngleSeries, EmgMeta, GridSelection, MarkerTrajectory, PromptEvent, SynthConfig,
    DATA_DIR_ENV,
};
use hdemg::emgproc::{ndv, ndv_compare, pool, rms_envelope, ChannelStats, DEFAULT_WINDOW};
use hdemg::kinematics::{HandModel, HandSkeleton, JOINT_NAMES};
use hdemg::plot::BoxPlot;
use hdemg::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::common::{ensure_dir, load_config, skeleton, write_json, write_text, Manifest};
use crate::Common;

pub fn synth(
    common: &Common,
    seed: Option<u64>,
    duration_s: Option<f64>,
    channels: Option<usize>,
    noise_std: Option<f64>,
) -> Result<()> {
    let mut cfg: SynthConfig = load_config(common.config.as_deref())?;
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = duration_s {
        cfg.duration_s = v;
    }
    if let Some(v) = channels {
        cfg.n_channels = v;
        if cfg.grid.0 * cfg.grid.1 != v {
            cfg.grid = (1, v);
        }
    }
    if let Some(v) = noise_std {
        cfg.noise_std = v;
    }
    cfg.validate()?;
    let out = &common.out;
    ensure_dir(out)?;
    let d = generate_synthetic::<f64>(&cfg, &HandSkeleton::default())?;
    save_emg(&out.join("emg.bin"), &d.emg)?;
    d.markers.save(&out.join("markers.csv"))?;
    d.angles.save(&out.join("angles.csv"))?;
    write_json(&out.join("schedule.json"), &d.schedule)?;
    let mix = Array2::from_shape_fn((d.mixing.len(), JOINT_NAMES.len()), |(c, j)| d.mixing[c][j]);
    write_table(&out.join("mixing.csv"), &JOINT_NAMES.iter().map(|s| s.to_string()).collect::<Vec<_>>(), &mix)?;
    Manifest::new("synth", &cfg, Some(cfg.seed))?.finish(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub window_len: usize,
    /// Window slide in samples; chosen from the prompt duration when absent.
    pub slide: Option<usize>,
    pub grid: Option<GridSelection>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { window_len: DEFAULT_WINDOW, slide: None, grid: None }
    }
}

fn read_schedule(path: &Path) -> Result<Vec<PromptEvent>> {
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn preprocess(
    common: &Common,
    data: &Path,
    window: Option<usize>,
    slide: Option<usize>,
    grid: Option<GridSelection>,
    stats: Option<&Path>,
    skeleton_path: Option<&Path>,
) -> Result<()> {
    let mut cfg: PreprocessConfig = load_config(common.config.as_deref())?;
    cfg.window_len = window.unwrap_or(cfg.window_len);
    cfg.slide = slide.or(cfg.slide);
    cfg.grid = grid.or(cfg.grid);
    let skel = skeleton(skeleton_path)?;
    let mut emg = load_emg_with_sidecar(&data.join("emg.bin"))?;
    if let Some(g) = cfg.grid {
        emg = g.apply(&emg)?;
    }
    let markers = MarkerTrajectory::<f64>::load(&data.join("markers.csv"))?;
    let angles = AngleSeries::<f64>::load(&data.join("angles.csv"))?;
    let schedule = read_schedule(&data.join("schedule.json"))?;
    let slide = cfg
        .slide
        .or_else(|| schedule.first().and_then(|p| slide_for_prompt(p.duration_s)))
        .unwrap_or(25);
    cfg.slide = Some(slide);
    let mut opts = AlignOptions::new(cfg.window_len, slide);
    opts.rest = HandModel::<f64>::new(&skel)?.rest_pose();
    opts.prompt_schedule = schedule;
    let mut manifest = Manifest::new("preprocess", &cfg, None)?;
    manifest.input(data)?;
    if let Some(p) = stats {
        let text = std::fs::read_to_string(p).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
        let s: ChannelStats<f64> = serde_json::from_str(&text)?;
        s.validate()?;
        opts.stats = Some(s);
        manifest.input(p)?;
    }
    let ds = align(&emg, &markers, &angles, &opts)?;
    let out = &common.out;
    ensure_dir(out)?;
    ds.save(out)?;
    write_json(&out.join("channel_stats.json"), &ds.envelope.stats)?;
    manifest.finish(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceConfig {
    pub window_len: usize,
    pub slide: usize,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self { window_len: DEFAULT_WINDOW, slide: 25 }
    }
}

pub fn variance(common: &Common, emg: &[PathBuf], window: Option<usize>, slide: Option<usize>) -> Result<()> {
    let mut cfg: VarianceConfig = load_config(common.config.as_deref())?;
    cfg.window_len = window.unwrap_or(cfg.window_len);
    cfg.slide = slide.unwrap_or(cfg.slide);
    let mut manifest = Manifest::new("variance", &cfg, None)?;
    let mut sessions = Vec::with_capacity(emg.len());
    for p in emg {
        manifest.input(p)?;
        let rec = load_emg_with_sidecar(p)?;
        let rms = rms_envelope::<f64>(&rec, cfg.window_len, cfg.slide)?;
        sessions.push(ndv(rms.view(), rec.grid.0, rec.grid.1, Some(rec.channel_map.as_slice()))?);
    }
    let (pd, circ) = pool(&sessions);
    let cmp = ndv_compare(&pd, &circ)?;
    let out = &common.out;
    ensure_dir(out)?;
    write_json(&out.join("ndv.json"), &serde_json::json!({ "sessions": sessions, "comparison": cmp }))?;
    let mut csv = String::from("direction,session,index,ndv\n");
    for (s, r) in sessions.iter().enumerate() {
        for (i, v) in r.proximo_distal.iter().enumerate() {
            csv.push_str(&format!("proximo_distal,{s},{i},{v}\n"));
        }
        for (i, v) in r.circumferential.iter().enumerate() {
            csv.push_str(&format!("circumferential,{s},{i},{v}\n"));
        }
    }
    write_text(&out.join("ndv.csv"), &csv)?;
    let plot = BoxPlot {
        title: format!("NDV (one-tailed U test p = {:.3e})", cmp.test.p_value),
        y_label: "normalized dimensional variance".into(),
        groups: vec![("proximo-distal".into(), pd), ("circumferential".into(), circ)],
    };
    write_text(&out.join("ndv.svg"), &plot.render())?;
    manifest.finish(out)
}

pub fn convert(src: Option<&Path>, out: &Path, meta_path: &Path, delimiter: char) -> Result<()> {
    let src = match src {
        Some(s) => s.to_path_buf(),
        None => data_cache_dir()
            .ok_or_else(|| Error::Config(format!("no --src given and {DATA_DIR_ENV} is not set to a directory")))?,
    };
    if !delimiter.is_ascii() {
        return Err(Error::Config("delimiter must be a single ASCII character".into()));
    }
    let text = std::fs::read_to_string(meta_path).map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let meta: EmgMeta = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    ensure_dir(out)?;
    let report = convert_directory(&src, out, &meta, delimiter as u8)?;
    let names = |v: Vec<PathBuf>| -> Vec<String> {
        v.iter().map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()).collect()
    };
    let skipped: Vec<_> = report
        .skipped
        .iter()
        .map(|(p, why)| serde_json::json!({ "file": p.file_name().map(|n| n.to_string_lossy().into_owned()), "reason": why }))
        .collect();
    write_json(&out.join("convert_report.json"), &serde_json::json!({ "converted": names(report.converted), "skipped": skipped }))?;
    Manifest::new("convert", &meta, None)?.finish(out)
}
