//! Estimator training and recursive inference.

use std::path::{Path, PathBuf};

use hdemg::dataio::AlignedDataset;
use hdemg::estimator::{
    butterworth_lowpass, butterworth_lowpass_zero_phase, infer as run_infer, split_last_trial, train as run_train,
    write_loss_log, Checkpoint, ModelWeights, NetworkConfig, TeacherForced, TrainHyper, POSTFILTER_CUTOFF_HZ,
    POSTFILTER_ORDER,
};
use hdemg::plot::{LinePlot, Series};
use hdemg::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::common::{ensure_dir, load_config, write_angle_table, write_json, write_text, Manifest};
use crate::Common;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// `n_emg_inputs` is taken from the data.
    pub network: NetworkConfig,
    pub hyper: TrainHyper,
    /// Seed for weight initialization.
    pub init_seed: u64,
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    train_rows: usize,
    heldout_rows: usize,
    n_params: usize,
    final_train_loss: f64,
    final_heldout_loss: Option<f64>,
}

pub fn train(
    common: &Common,
    data: &[PathBuf],
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    hidden: Option<Vec<usize>>,
    seed: Option<u64>,
) -> Result<()> {
    let mut cfg: TrainConfig = load_config(common.config.as_deref())?;
    cfg.hyper.epochs = epochs.unwrap_or(cfg.hyper.epochs);
    cfg.hyper.learning_rate = learning_rate.unwrap_or(cfg.hyper.learning_rate);
    cfg.hyper.batch_size = batch_size.unwrap_or(cfg.hyper.batch_size);
    if let Some(h) = hidden {
        cfg.network.hidden_layers = h;
    }
    if let Some(s) = seed {
        cfg.hyper.seed = s;
        cfg.init_seed = s;
    }
    let mut manifest = Manifest::new("train", &cfg, Some(cfg.hyper.seed))?;
    let trials = data
        .iter()
        .map(|d| {
            manifest.input(d)?;
            AlignedDataset::<f64>::load(d)
        })
        .collect::<Result<Vec<_>>>()?;
    cfg.network.n_emg_inputs = trials[0].envelope.n_channels();
    let (train_set, heldout) = split_last_trial(&trials)?;
    let refs: Vec<&AlignedDataset<f64>> = train_set.iter().collect();
    let tf = TeacherForced::from_trials(&refs)?;
    let val = TeacherForced::from_trials(&[&heldout])?;
    let mut model = ModelWeights::<f64>::init(&cfg.network, cfg.init_seed)?;
    let outcome = run_train(&mut model, &tf, Some(&val), &cfg.hyper, |e| {
        log::info!("epoch {}: train {:.6} held-out {:?}", e.epoch, e.train_loss, e.val_loss);
    })?;
    let out = &common.out;
    ensure_dir(out)?;
    let mut ckpt = Checkpoint::new(model);
    ckpt.input_stats = Some(train_set[0].envelope.stats.clone());
    let n_params = ckpt.weights.n_params();
    ckpt.save(&out.join("model.json"))?;
    write_loss_log(&out.join("loss.csv"), &outcome.history)?;
    heldout.save(&out.join("heldout"))?;
    let last = outcome.history.last();
    write_json(
        &out.join("train_summary.json"),
        &TrainSummary {
            train_rows: tf.n_rows(),
            heldout_rows: val.n_rows(),
            n_params,
            final_train_loss: last.map_or(f64::NAN, |h| h.train_loss),
            final_heldout_loss: last.and_then(|h| h.val_loss),
        },
    )?;
    let epochs: Vec<f64> = outcome.history.iter().map(|h| h.epoch as f64).collect();
    let plot = LinePlot {
        title: "Training loss".into(),
        x_label: "epoch".into(),
        y_label: "mean squared error".into(),
        series: vec![
            Series { name: "train".into(), x: epochs.clone(), y: outcome.history.iter().map(|h| h.train_loss).collect(), band: None },
            Series {
                name: "held-out".into(),
                x: epochs,
                y: outcome.history.iter().map(|h| h.val_loss.unwrap_or(f64::NAN)).collect(),
                band: None,
            },
        ],
        ..Default::default()
    };
    write_text(&out.join("loss.svg"), &plot.render())?;
    manifest.finish(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PostFilter {
    /// Forward-only, as in real-time use.
    #[default]
    Causal,
    ZeroPhase,
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitAngles {
    /// True angles of the first row.
    #[default]
    FirstRow,
    /// The rest pose (all-zero normalized angles).
    Rest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferConfig {
    pub postfilter: PostFilter,
    pub cutoff_hz: f64,
    pub order: usize,
    pub init: InitAngles,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self { postfilter: PostFilter::Causal, cutoff_hz: POSTFILTER_CUTOFF_HZ, order: POSTFILTER_ORDER, init: InitAngles::FirstRow }
    }
}

pub fn infer(common: &Common, model_path: &Path, data: &Path, postfilter: Option<PostFilter>) -> Result<()> {
    let mut cfg: InferConfig = load_config(common.config.as_deref())?;
    cfg.postfilter = postfilter.unwrap_or(cfg.postfilter);
    let mut manifest = Manifest::new("infer", &cfg, None)?;
    manifest.input(model_path)?;
    manifest.input(data)?;
    let ckpt = Checkpoint::<f64>::load(model_path)?;
    let ds = AlignedDataset::<f64>::load(data)?;
    let model = &ckpt.weights;
    if ds.envelope.n_channels() != model.config.n_emg_inputs {
        return Err(Error::Shape(format!(
            "model expects {} channels, dataset has {}",
            model.config.n_emg_inputs,
            ds.envelope.n_channels()
        )));
    }
    if ds.n_rows() == 0 {
        return Err(Error::InvalidInput("dataset has no rows".into()));
    }
    let init: Vec<f64> = match cfg.init {
        InitAngles::FirstRow => ds.angles_norm.row(0).to_vec(),
        InitAngles::Rest => vec![0.0; model.config.n_joints],
    };
    let (raw, latency) = run_infer(model, ds.envelope.values.view(), &init)?;
    eprintln!(
        "inference latency: mean {:.4} ms, max {:.4} ms over {} steps",
        latency.mean_ms, latency.max_ms, latency.steps
    );
    let fs = ds.envelope.fs_hz / ds.envelope.slide as f64;
    let filtered = match cfg.postfilter {
        PostFilter::Causal => butterworth_lowpass(raw.view(), cfg.order, cfg.cutoff_hz, fs)?,
        PostFilter::ZeroPhase => butterworth_lowpass_zero_phase(raw.view(), cfg.order, cfg.cutoff_hz, fs)?,
        PostFilter::None => raw.clone(),
    };
    let out = &common.out;
    ensure_dir(out)?;
    write_angle_table(&out.join("predicted_raw.csv"), &ds.timestamps, &raw)?;
    write_angle_table(&out.join("predicted.csv"), &ds.timestamps, &filtered)?;
    manifest.finish(out)
}
