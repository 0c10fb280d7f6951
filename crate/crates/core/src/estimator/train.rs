//! Teacher-forced minibatch training and recursive inference.

use std::path::Path;
use std::time::Instant;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, TrainHyper};
use super::network::ModelWeights;
use crate::dataio::{write_table, AlignedDataset};
use crate::error::{Error, Result};
use crate::filter::{BandType, SosFilter};
use crate::kinematics::{denormalize_angles, HandModel, JointAngles, MarkerFrame};
use crate::scalar::Real;

/// Rows for one-step-ahead training: EMG at `t`, true angles at `t-1`, target at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherForced<T> {
    pub emg: Array2<T>,
    pub prev: Array2<T>,
    pub target: Array2<T>,
}

impl<T: Real> TeacherForced<T> {
    pub fn from_trials(trials: &[&AlignedDataset<T>]) -> Result<Self> {
        let mut emg = Vec::new();
        let mut prev = Vec::new();
        let mut target = Vec::new();
        for d in trials {
            let n = d.n_rows();
            if n < 2 {
                continue;
            }
            emg.push(d.envelope.values.slice(s![1.., ..]));
            prev.push(d.angles_norm.slice(s![..n - 1, ..]));
            target.push(d.angles_norm.slice(s![1.., ..]));
        }
        if emg.is_empty() {
            return Err(Error::InvalidInput("no trial has two or more rows".into()));
        }
        let cat = |v: &[ArrayView2<T>]| {
            ndarray::concatenate(Axis(0), v).map_err(|e| Error::Shape(format!("trials differ in width: {e}")))
        };
        Ok(Self { emg: cat(&emg)?, prev: cat(&prev)?, target: cat(&target)? })
    }

    pub fn n_rows(&self) -> usize {
        self.emg.nrows()
    }

    fn rows(&self, idx: &[usize]) -> (Array2<T>, Array2<T>, Array2<T>) {
        (self.emg.select(Axis(0), idx), self.prev.select(Axis(0), idx), self.target.select(Axis(0), idx))
    }
}

/// Hold out the last trial, or the final sixth of the rows when there is only one.
pub fn split_last_trial<T: Real>(trials: &[AlignedDataset<T>]) -> Result<(Vec<AlignedDataset<T>>, AlignedDataset<T>)> {
    match trials.len() {
        0 => Err(Error::InvalidInput("no trials to split".into())),
        1 => {
            let (a, b) = split_rows(&trials[0], 5.0 / 6.0)?;
            Ok((vec![a], b))
        }
        n => Ok((trials[..n - 1].to_vec(), trials[n - 1].clone())),
    }
}

/// Split one dataset in time at `frac` of its rows.
pub fn split_rows<T: Real>(d: &AlignedDataset<T>, frac: f64) -> Result<(AlignedDataset<T>, AlignedDataset<T>)> {
    let n = d.n_rows();
    let k = (n as f64 * frac).floor() as usize;
    if k < 2 || n - k < 2 {
        return Err(Error::InvalidInput(format!("{n} rows are too few to split")));
    }
    let part = |a: usize, b: usize| {
        let mut env = d.envelope.clone();
        env.values = d.envelope.values.slice(s![a..b, ..]).to_owned();
        AlignedDataset {
            envelope: env,
            angles_norm: d.angles_norm.slice(s![a..b, ..]).to_owned(),
            timestamps: d.timestamps[a..b].to_vec(),
            prompt_schedule: d.prompt_schedule.clone(),
        }
    };
    Ok((part(0, k), part(k, n)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T> {
    pub history: Vec<EpochLoss>,
    pub adam: AdamState<T>,
}

/// Mean squared one-step error without updating anything.
pub fn evaluate_loss<T: Real>(model: &ModelWeights<T>, data: &TeacherForced<T>) -> Result<f64> {
    let y = model.forward_batch(data.emg.view(), data.prev.view())?;
    let n = y.len().max(1);
    let sse = (&y - &data.target).iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>();
    Ok(sse / n as f64)
}

/// Minibatch Adam on the mean squared error; deterministic given the inputs.
pub fn train<T: Real>(
    model: &mut ModelWeights<T>,
    data: &TeacherForced<T>,
    validation: Option<&TeacherForced<T>>,
    hyper: &TrainHyper,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainOutcome<T>> {
    hyper.validate()?;
    let n = data.n_rows();
    if n < hyper.batch_size {
        return Err(Error::Config(format!(
            "{n} training rows is fewer than the batch size {}",
            hyper.batch_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut adam = AdamState::new(model);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(hyper.epochs);
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (bi, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let (e, p, t) = data.rows(chunk);
            let (loss, grads) = model.backprop(e.view(), p.view(), t.view()).map_err(|err| match err {
                Error::Numerical(m) => Error::Numerical(format!("epoch {epoch}, batch {bi}: {m}")),
                other => other,
            })?;
            adam_step(model, &grads, &mut adam, hyper)?;
            sum += loss.as_f64() * chunk.len() as f64;
        }
        if !model.is_finite() {
            return Err(Error::Numerical(format!("weights diverged in epoch {epoch}")));
        }
        let rec = EpochLoss {
            epoch,
            train_loss: sum / n as f64,
            val_loss: validation.map(|v| evaluate_loss(model, v)).transpose()?,
        };
        on_epoch(&rec);
        history.push(rec);
    }
    Ok(TrainOutcome { history, adam })
}

/// CSV `epoch,train_loss,val_loss`.
pub fn write_loss_log(path: &Path, history: &[EpochLoss]) -> Result<()> {
    let mut t = Array2::<f64>::zeros((history.len(), 3));
    for (i, h) in history.iter().enumerate() {
        t[[i, 0]] = h.epoch as f64;
        t[[i, 1]] = h.train_loss;
        t[[i, 2]] = h.val_loss.unwrap_or(f64::NAN);
    }
    write_table(path, &["epoch".into(), "train_loss".into(), "val_loss".into()], &t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub mean_ms: f64,
    pub max_ms: f64,
    pub steps: usize,
}

/// Recursive inference: each estimate becomes the next step's previous angles.
pub fn infer<T: Real>(model: &ModelWeights<T>, envelope: ArrayView2<T>, init: &[T]) -> Result<(Array2<T>, Latency)> {
    let nj = model.config.n_joints;
    if init.len() != nj {
        return Err(Error::Shape(format!("{} initial angles for {nj} joints", init.len())));
    }
    let mut out = Array2::<T>::zeros((envelope.nrows(), nj));
    let mut prev = init.to_vec();
    let mut total = 0.0;
    let mut max_ms: f64 = 0.0;
    let mut row = Vec::with_capacity(envelope.ncols());
    for (t, e) in envelope.rows().into_iter().enumerate() {
        row.clear();
        row.extend(e.iter().copied());
        let start = Instant::now();
        let y = model.forward(&row, &prev)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        total += ms;
        max_ms = max_ms.max(ms);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite estimate at step {t}")));
        }
        out.row_mut(t).assign(&ndarray::ArrayView1::from(&y));
        prev = y;
    }
    let steps = envelope.nrows();
    Ok((out, Latency { mean_ms: if steps > 0 { total / steps as f64 } else { 0.0 }, max_ms, steps }))
}

/// Causal Butterworth low-pass applied to every column, started at steady state.
pub fn butterworth_lowpass<T: Real>(x: ArrayView2<T>, order: usize, cutoff_hz: f64, fs_hz: f64) -> Result<Array2<T>> {
    let f = SosFilter::<T>::butterworth(order, cutoff_hz, fs_hz, BandType::Lowpass)?;
    let mut out = Array2::<T>::zeros(x.raw_dim());
    for (c, col) in x.axis_iter(Axis(1)).enumerate() {
        let y = f.filter_steady(&col.to_vec());
        out.column_mut(c).assign(&ndarray::ArrayView1::from(&y));
    }
    Ok(out)
}

/// Forward-backward variant of [`butterworth_lowpass`]; offline use only.
pub fn butterworth_lowpass_zero_phase<T: Real>(
    x: ArrayView2<T>,
    order: usize,
    cutoff_hz: f64,
    fs_hz: f64,
) -> Result<Array2<T>> {
    let f = SosFilter::<T>::butterworth(order, cutoff_hz, fs_hz, BandType::Lowpass)?;
    let mut out = Array2::<T>::zeros(x.raw_dim());
    for (c, col) in x.axis_iter(Axis(1)).enumerate() {
        let y = f.filtfilt(&col.to_vec());
        out.column_mut(c).assign(&ndarray::ArrayView1::from(&y));
    }
    Ok(out)
}

/// Normalized angle rows to marker frames via the forward model.
pub fn postprocess<T: Real>(
    angles_norm: ArrayView2<T>,
    rest: &JointAngles<T>,
    model: &HandModel<T>,
) -> Result<Vec<MarkerFrame<T>>> {
    angles_norm
        .rows()
        .into_iter()
        .map(|r| {
            let v = r.to_vec();
            if v.len() != crate::kinematics::N_JOINTS {
                return Err(Error::Shape("normalized angle rows must have 29 entries".into()));
            }
            Ok(model.fka(&denormalize_angles(&v, rest)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emgproc::{ChannelStats, EmgEnvelope};
    use crate::estimator::{Activation, NetworkConfig};
    use crate::kinematics::{normalize_angles, HandSkeleton};
    use rand::Rng;

    fn dataset(n: usize, e: usize, nj: usize, seed: u64) -> AlignedDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = Array2::from_shape_fn((n, e), |_| rng.random_range(-1.0..1.0));
        // targets: fixed linear function of the EMG row
        let angles = Array2::from_shape_fn((n, nj), |(i, j)| 0.3 * env[[i, j % e]] - 0.2 * env[[i, (j + 1) % e]] + 0.1);
        AlignedDataset {
            envelope: EmgEnvelope {
                values: env,
                window_len: 200,
                slide: 25,
                fs_hz: 2048.0,
                scale: 1e-4,
                stats: ChannelStats { mean: vec![0.0; e], std: vec![1.0; e], dead: vec![] },
            },
            angles_norm: angles,
            timestamps: (0..n).map(|i| i as f64).collect(),
            prompt_schedule: vec![],
        }
    }

    fn linear_cfg(e: usize, nj: usize) -> NetworkConfig {
        NetworkConfig { n_emg_inputs: e, n_joints: nj, hidden_layers: vec![], activation: Activation::Identity }
    }

    #[test]
    fn realizable_linear_target() {
        let d = dataset(400, 4, 3, 1);
        let data = TeacherForced::from_trials(&[&d]).unwrap();
        let mut m = ModelWeights::<f64>::init(&linear_cfg(4, 3), 2).unwrap();
        let hyper = TrainHyper { learning_rate: 1e-2, batch_size: 50, epochs: 300, ..Default::default() };
        let out = train(&mut m, &data, None, &hyper, |_| {}).unwrap();
        let last = out.history.last().unwrap().train_loss;
        assert!(last < 1e-6, "final loss {last}");
        assert!(last < out.history[0].train_loss);
    }

    #[test]
    fn shuffling_is_reproducible() {
        let d = dataset(120, 3, 3, 5);
        let data = TeacherForced::from_trials(&[&d]).unwrap();
        let cfg = NetworkConfig { n_emg_inputs: 3, n_joints: 3, hidden_layers: vec![5], activation: Activation::Softplus };
        let hyper = TrainHyper { learning_rate: 1e-3, batch_size: 16, epochs: 4, seed: 9, ..Default::default() };
        let run = || {
            let mut m = ModelWeights::<f64>::init(&cfg, 1).unwrap();
            let h = train(&mut m, &data, Some(&data), &hyper, |_| {}).unwrap().history;
            (m, h)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn too_few_rows_for_batch() {
        let d = dataset(10, 3, 3, 5);
        let data = TeacherForced::from_trials(&[&d]).unwrap();
        let mut m = ModelWeights::<f64>::init(&linear_cfg(3, 3), 1).unwrap();
        assert!(train(&mut m, &data, None, &TrainHyper::default(), |_| {}).is_err());
    }

    #[test]
    fn divergence_aborts() {
        let mut d = dataset(40, 3, 3, 5);
        d.angles_norm[[7, 1]] = f64::NAN;
        let data = TeacherForced::from_trials(&[&d]).unwrap();
        let mut m = ModelWeights::<f64>::init(&linear_cfg(3, 3), 1).unwrap();
        let hyper = TrainHyper { batch_size: 8, epochs: 2, ..Default::default() };
        assert!(matches!(train(&mut m, &data, None, &hyper, |_| {}), Err(Error::Numerical(_))));
    }

    #[test]
    fn teacher_forced_first_step_equals_inference() {
        let d = dataset(30, 3, 3, 2);
        let cfg = NetworkConfig { n_emg_inputs: 3, n_joints: 3, hidden_layers: vec![4], activation: Activation::Softplus };
        let m = ModelWeights::<f64>::init(&cfg, 3).unwrap();
        let data = TeacherForced::from_trials(&[&d]).unwrap();
        let tf = m.forward_batch(data.emg.view(), data.prev.view()).unwrap();
        let init = d.angles_norm.row(0).to_vec();
        let (y, lat) = infer(&m, d.envelope.values.slice(s![1.., ..]), &init).unwrap();
        assert_eq!(y.row(0), tf.row(0));
        assert_eq!(lat.steps, 29);
    }

    #[test]
    fn fixed_point_gives_constant_output() {
        // a model that ignores everything and outputs its biases
        let cfg = linear_cfg(2, 3);
        let mut m = ModelWeights::<f64>::zeros(&cfg).unwrap();
        for (j, net) in m.subnets.iter_mut().enumerate() {
            net.layers[0].b[0] = j as f64 * 0.1;
        }
        let env = Array2::from_elem((10, 2), 0.7);
        let (y, _) = infer(&m, env.view(), &[0.0, 0.1, 0.2]).unwrap();
        for r in y.rows() {
            assert_eq!(r.to_vec(), vec![0.0, 0.1, 0.2]);
        }
    }

    #[test]
    fn lowpass_is_linear() {
        let n = 500;
        let x = Array2::from_shape_fn((n, 2), |(i, c)| ((i * (3 + c)) as f64 * 0.07).sin());
        let y = Array2::from_shape_fn((n, 2), |(i, c)| ((i + c) % 17) as f64);
        let (a, b) = (1.7, -0.4);
        let lhs = butterworth_lowpass((&x * a + &y * b).view(), 6, 1.0, 82.0).unwrap();
        let fx = butterworth_lowpass(x.view(), 6, 1.0, 82.0).unwrap();
        let fy = butterworth_lowpass(y.view(), 6, 1.0, 82.0).unwrap();
        let rhs = fx * a + fy * b;
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).abs() < 1e-9);
        }
        assert!(butterworth_lowpass(x.view(), 6, 50.0, 82.0).is_err());
    }

    #[test]
    fn postprocess_zero_is_rest_layout() {
        let skel = HandSkeleton::default();
        let model = HandModel::<f64>::new(&skel).unwrap();
        let rest = model.rest_pose();
        let frames = postprocess(Array2::<f64>::zeros((3, 29)).view(), &rest, &model).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0], model.fka(&rest));
        // round trip with normalize
        let mut a = JointAngles::<f64>::zeros();
        a[7] = 0.4;
        let nrm = normalize_angles(&a, &rest);
        let back = postprocess(Array2::from_shape_vec((1, 29), nrm.to_vec()).unwrap().view(), &rest, &model).unwrap();
        let want = model.fka(&a);
        for (p, q) in back[0].points.iter().zip(want.points.iter()) {
            assert!((*p - *q).norm() < 1e-12);
        }
    }

    #[test]
    fn splits() {
        let d = dataset(60, 3, 3, 1);
        let (tr, te) = split_last_trial(std::slice::from_ref(&d)).unwrap();
        assert_eq!(tr[0].n_rows(), 50);
        assert_eq!(te.n_rows(), 10);
        let (tr, te) = split_last_trial(&[d.clone(), d.clone(), d.clone()]).unwrap();
        assert_eq!((tr.len(), te.n_rows()), (2, 60));
    }
}
