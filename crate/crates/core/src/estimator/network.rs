//! Per-joint recursive regression network: one small MLP per joint, fed with
//! the EMG row and the previous angles of every other joint.

use std::path::Path;

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::N_JOINTS;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Softplus,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Softplus => x.max(T::zero()) + (-x.abs()).exp().ln_1p(),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`.
    #[inline]
    pub fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Activation::Softplus => T::one() / (T::one() + (-x).exp()),
            Activation::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_emg_inputs: usize,
    pub n_joints: usize,
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_emg_inputs: 64,
            n_joints: N_JOINTS,
            hidden_layers: vec![128, 128],
            activation: Activation::Softplus,
        }
    }
}

impl NetworkConfig {
    /// Input width of every sub-network: EMG plus the other joints.
    pub fn subnet_input_width(&self) -> usize {
        self.n_emg_inputs + self.n_joints - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_emg_inputs == 0 || self.n_joints < 2 {
            return Err(Error::Config("network needs EMG inputs and at least two joints".into()));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.subnet_input_width()];
        w.extend(&self.hidden_layers);
        w.push(1);
        w
    }
}

/// Fully connected layer, `y = W x + b` with `W` stored row-major `n_out x n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { n_in, n_out, w: vec![T::zero(); n_in * n_out], b: vec![T::zero(); n_out] }
    }

    pub fn w_view(&self) -> ArrayView2<'_, T> {
        ArrayView2::from_shape((self.n_out, self.n_in), &self.w).expect("dense shape")
    }

    fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subnet<T> {
    pub layers: Vec<Dense<T>>,
}

/// Trainable parameters of all sub-networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights<T> {
    pub config: NetworkConfig,
    pub subnets: Vec<Subnet<T>>,
}

/// Saved activations of one sub-network over a batch.
pub(crate) struct Trace<T> {
    /// Layer inputs; `inputs[0]` is the sub-network input.
    inputs: Vec<Array2<T>>,
    /// Pre-activations of each layer.
    pre: Vec<Array2<T>>,
}

/// Sub-network input: EMG row followed by the previous angles minus joint `j`.
pub fn subnet_input<T: Real>(emg: ArrayView2<T>, prev: ArrayView2<T>, j: usize) -> Array2<T> {
    let (b, e) = emg.dim();
    let nj = prev.ncols();
    let mut x = Array2::<T>::zeros((b, e + nj - 1));
    x.slice_mut(s![.., ..e]).assign(&emg);
    x.slice_mut(s![.., e..e + j]).assign(&prev.slice(s![.., ..j]));
    x.slice_mut(s![.., e + j..]).assign(&prev.slice(s![.., j + 1..]));
    x
}

impl<T: Real> ModelWeights<T> {
    pub fn zeros(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let w = config.widths();
        let subnets = (0..config.n_joints)
            .map(|_| Subnet { layers: w.windows(2).map(|p| Dense::zeros(p[0], p[1])).collect() })
            .collect();
        Ok(Self { config: config.clone(), subnets })
    }

    /// Symmetric uniform weights with bound `1/sqrt(fan_in)`, zero biases.
    pub fn init(config: &NetworkConfig, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for net in &mut m.subnets {
            for layer in &mut net.layers {
                let bound = 1.0 / (layer.n_in as f64).sqrt();
                for w in &mut layer.w {
                    *w = T::lit(rng.random_range(-bound..bound));
                }
            }
        }
        Ok(m)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config).expect("validated config")
    }

    pub fn n_params(&self) -> usize {
        self.subnets.iter().flat_map(|n| &n.layers).map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.subnets.iter().flat_map(|n| &n.layers).all(Dense::is_finite)
    }

    /// Every parameter, subnet by subnet, weights before biases.
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.subnets
            .iter()
            .flat_map(|n| &n.layers)
            .flat_map(|l| l.w.iter().chain(l.b.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.subnets
            .iter_mut()
            .flat_map(|n| &mut n.layers)
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// Structural agreement with another parameter set.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.subnets.len() == other.subnets.len()
            && self.subnets.iter().zip(&other.subnets).all(|(a, b)| {
                a.layers.len() == b.layers.len()
                    && a.layers.iter().zip(&b.layers).all(|(x, y)| x.n_in == y.n_in && x.n_out == y.n_out)
            })
    }

    fn check_inputs(&self, emg: ArrayView2<T>, prev: ArrayView2<T>) -> Result<()> {
        let c = &self.config;
        if emg.ncols() != c.n_emg_inputs || prev.ncols() != c.n_joints || emg.nrows() != prev.nrows() {
            return Err(Error::Shape(format!(
                "expected EMG width {} and {} previous angles per row, got {}x{} and {}x{}",
                c.n_emg_inputs,
                c.n_joints,
                emg.nrows(),
                emg.ncols(),
                prev.nrows(),
                prev.ncols()
            )));
        }
        Ok(())
    }

    pub(crate) fn subnet_trace(&self, j: usize, x: Array2<T>) -> Trace<T> {
        let act = self.config.activation;
        let net = &self.subnets[j];
        let mut inputs = vec![x];
        let mut pre = Vec::with_capacity(net.layers.len());
        for (l, layer) in net.layers.iter().enumerate() {
            let b = ArrayView1::from(&layer.b);
            let z = inputs[l].dot(&layer.w_view().t()) + &b;
            if l + 1 < net.layers.len() {
                inputs.push(z.mapv(|v| act.apply(v)));
            }
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    /// Batched forward pass, `B x E` EMG and `B x J` previous angles to `B x J`.
    pub fn forward_batch(&self, emg: ArrayView2<T>, prev: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_inputs(emg, prev)?;
        let cols: Vec<Array2<T>> = (0..self.config.n_joints)
            .into_par_iter()
            .map(|j| {
                let mut tr = self.subnet_trace(j, subnet_input(emg, prev, j));
                tr.pre.pop().expect("output layer")
            })
            .collect();
        let mut y = Array2::<T>::zeros((emg.nrows(), self.config.n_joints));
        for (j, c) in cols.into_iter().enumerate() {
            y.column_mut(j).assign(&c.column(0));
        }
        Ok(y)
    }

    /// Single-row forward pass.
    pub fn forward(&self, emg_row: &[T], prev: &[T]) -> Result<Vec<T>> {
        let e = ArrayView2::from_shape((1, emg_row.len()), emg_row).map_err(|e| Error::Shape(e.to_string()))?;
        let p = ArrayView2::from_shape((1, prev.len()), prev).map_err(|e| Error::Shape(e.to_string()))?;
        self.check_inputs(e, p)?;
        let act = self.config.activation;
        let e_len = emg_row.len();
        let width = self.config.subnet_input_width();
        let mut x = vec![T::zero(); width];
        let mut out = Vec::with_capacity(self.config.n_joints);
        for (j, net) in self.subnets.iter().enumerate() {
            x[..e_len].copy_from_slice(emg_row);
            x[e_len..e_len + j].copy_from_slice(&prev[..j]);
            x[e_len + j..].copy_from_slice(&prev[j + 1..]);
            let mut cur = x.clone();
            for (l, layer) in net.layers.iter().enumerate() {
                let last = l + 1 == net.layers.len();
                cur = (0..layer.n_out)
                    .map(|o| {
                        let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                        let z = row.iter().zip(&cur).fold(layer.b[o], |a, (&w, &v)| a + w * v);
                        if last {
                            z
                        } else {
                            act.apply(z)
                        }
                    })
                    .collect();
            }
            out.push(cur[0]);
        }
        Ok(out)
    }

    /// Mean squared error over all rows and joints, and its exact gradient.
    pub fn backprop(
        &self,
        emg: ArrayView2<T>,
        prev: ArrayView2<T>,
        target: ArrayView2<T>,
    ) -> Result<(T, ModelWeights<T>)> {
        self.check_inputs(emg, prev)?;
        let (b, nj) = (emg.nrows(), self.config.n_joints);
        if b == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if target.dim() != (b, nj) {
            return Err(Error::Shape("target shape differs from output shape".into()));
        }
        let scale = T::lit(2.0) / T::of_usize(b * nj);
        let act = self.config.activation;
        let per_joint: Vec<(T, Subnet<T>)> = (0..nj)
            .into_par_iter()
            .map(|j| {
                let tr = self.subnet_trace(j, subnet_input(emg, prev, j));
                let y = tr.pre.last().expect("output layer");
                let err = &y.column(0) - &target.column(j);
                let sse = err.iter().fold(T::zero(), |a, &e| a + e * e);
                let mut delta = err.insert_axis(Axis(1)).mapv(|e| e * scale);
                let net = &self.subnets[j];
                let mut grads: Vec<Dense<T>> = Vec::with_capacity(net.layers.len());
                for l in (0..net.layers.len()).rev() {
                    let layer = &net.layers[l];
                    let gw = delta.t().dot(&tr.inputs[l]);
                    let gb = delta.sum_axis(Axis(0));
                    grads.push(Dense {
                        n_in: layer.n_in,
                        n_out: layer.n_out,
                        w: gw.iter().copied().collect(),
                        b: gb.to_vec(),
                    });
                    if l > 0 {
                        let mut d = delta.dot(&layer.w_view());
                        d.zip_mut_with(&tr.pre[l - 1], |g, &z| *g *= act.derivative(z));
                        delta = d;
                    }
                }
                grads.reverse();
                (sse, Subnet { layers: grads })
            })
            .collect();
        let mut sse = T::zero();
        let mut subnets = Vec::with_capacity(nj);
        for (e, g) in per_joint {
            sse += e;
            subnets.push(g);
        }
        let loss = sse / T::of_usize(b * nj);
        if !loss.is_finite() {
            return Err(Error::Numerical("non-finite loss during backpropagation".into()));
        }
        Ok((loss, ModelWeights { config: self.config.clone(), subnets }))
    }

    pub fn cast<U: Real>(&self) -> ModelWeights<U> {
        ModelWeights {
            config: self.config.clone(),
            subnets: self
                .subnets
                .iter()
                .map(|n| Subnet {
                    layers: n
                        .layers
                        .iter()
                        .map(|l| Dense {
                            n_in: l.n_in,
                            n_out: l.n_out,
                            w: l.w.iter().map(|v| U::lit(v.as_f64())).collect(),
                            b: l.b.iter().map(|v| U::lit(v.as_f64())).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expect = Self::zeros(&self.config)?;
        if !self.same_shape(&expect) {
            return Err(Error::Shape("weights do not match the network configuration".into()));
        }
        for l in self.subnets.iter().flat_map(|n| &n.layers) {
            if l.w.len() != l.n_in * l.n_out || l.b.len() != l.n_out {
                return Err(Error::Shape("layer buffer sizes are inconsistent".into()));
            }
        }
        if !self.is_finite() {
            return Err(Error::Numerical("non-finite weights".into()));
        }
        Ok(())
    }
}

pub const CHECKPOINT_FORMAT: &str = "hdemg-model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format: String,
    pub version: u32,
    pub weights: ModelWeights<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam: Option<super::adam::AdamState<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_stats: Option<crate::emgproc::ChannelStats<T>>,
}

impl<T: Real> Checkpoint<T> {
    pub fn new(weights: ModelWeights<T>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            weights,
            adam: None,
            input_stats: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Self = serde_json::from_str(&text)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::format(path, format!("unsupported checkpoint {} v{}", c.format, c.version)));
        }
        c.weights.validate()?;
        Ok(c)
    }
}
