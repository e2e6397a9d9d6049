//! Binary MLP classifier with hand-written backpropagation.
//!
//! Parameters live in a single flat [`ParamVector`]; that vector is the only
//! thing data centers and the server ever exchange. Layout is canonical: for
//! each layer, the weights row-major `[out x in]`, then the biases.

mod checkpoint;
pub(crate) mod local;
mod loss;
mod optimizer;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use checkpoint::{
    deserialize_checkpoint, serialize_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use local::{data_center_update, LocalOutcome, LocalTrainer};
pub use loss::{bce_loss, loss_and_gradient, loss_gradient, SCORE_CLIP};
pub use optimizer::{optimizer_step, OptimizerKind, OptimizerState};

/// Flat vector of every model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Short digest of the exact bit pattern, used in round logs.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.0 {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        ParamVector(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation and the activation.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Layer widths `[d_in, h_1, ..., h_m, 1]` plus the hidden nonlinearity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    widths: Vec<usize>,
    #[serde(default)]
    activation: Activation,
}

/// One dense layer's position inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlot {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub biases: usize,
}

impl LayerSlot {
    pub fn len(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ArchSpec {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Architecture(format!(
                "need at least input and output widths, got {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Architecture(format!("zero width in {widths:?}")));
        }
        if *widths.last().unwrap() != 1 {
            return Err(Error::Architecture(format!(
                "output width must be 1, got {widths:?}"
            )));
        }
        Ok(ArchSpec { widths, activation })
    }

    pub fn relu(widths: Vec<usize>) -> Result<Self> {
        Self::new(widths, Activation::Relu)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layers(&self) -> Vec<LayerSlot> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let slot = LayerSlot {
                    fan_in: w[0],
                    fan_out: w[1],
                    weights: offset,
                    biases: offset + w[0] * w[1],
                };
                offset += slot.len();
                slot
            })
            .collect()
    }
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec {
            widths: vec![8, 16, 8, 1],
            activation: Activation::Relu,
        }
    }
}

/// Per-layer values kept from a forward pass for backpropagation.
pub(crate) struct Trace {
    /// `pre[l]` are the pre-activations of layer `l`.
    pub pre: Vec<Vec<f64>>,
    /// `post[0]` is the input; `post[l + 1]` the output of layer `l`.
    pub post: Vec<Vec<f64>>,
}

/// Anything that maps a feature vector to a realness score.
pub trait Scorer {
    fn score(&self, x: &[f64]) -> Result<f64>;

    fn score_all<'a, I>(&self, xs: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        xs.into_iter().map(|x| self.score(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    arch: ArchSpec,
    params: ParamVector,
}

impl MlpModel {
    pub fn new(arch: ArchSpec, params: ParamVector) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::shape(format!(
                "architecture {:?} needs {} parameters, got {}",
                arch.widths(),
                arch.param_count(),
                params.len()
            )));
        }
        Ok(MlpModel { arch, params })
    }

    pub fn zeros(arch: ArchSpec) -> Self {
        let params = ParamVector::zeros(arch.param_count());
        MlpModel { arch, params }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: ArchSpec, rng: &mut R) -> Self {
        let mut params = vec![0.0; arch.param_count()];
        for slot in arch.layers() {
            let limit = (6.0 / (slot.fan_in + slot.fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            for w in &mut params[slot.weights..slot.biases] {
                *w = dist.sample(rng);
            }
        }
        MlpModel {
            arch,
            params: ParamVector(params),
        }
    }

    /// Initial global model for a run.
    pub fn init_from_seed(arch: ArchSpec, master_seed: u64) -> Self {
        Self::init(arch, &mut crate::rng::init_stream(master_seed))
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn into_params(self) -> ParamVector {
        self.params
    }

    pub fn with_params(&self, params: ParamVector) -> Result<Self> {
        MlpModel::new(self.arch.clone(), params)
    }

    pub(crate) fn set_params(&mut self, params: ParamVector) {
        debug_assert_eq!(params.len(), self.arch.param_count());
        self.params = params;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim() {
            return Err(Error::InputShape {
                expected: self.arch.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Score in (0, 1); higher means more likely real.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(logistic(self.logit_unchecked(x)))
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.logit_unchecked(x))
    }

    fn logit_unchecked(&self, x: &[f64]) -> f64 {
        let p = self.params.as_slice();
        let layers = self.arch.layers();
        let last = layers.len() - 1;
        let mut input = x.to_vec();
        for (l, slot) in layers.iter().enumerate() {
            let out = affine(p, slot, &input);
            input = if l == last {
                out
            } else {
                out.into_iter()
                    .map(|z| self.arch.activation.apply(z))
                    .collect()
            };
        }
        input[0]
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let p = self.params.as_slice();
        let layers = self.arch.layers();
        let last = layers.len() - 1;
        let mut pre = Vec::with_capacity(layers.len());
        let mut post = Vec::with_capacity(layers.len() + 1);
        post.push(x.to_vec());
        for (l, slot) in layers.iter().enumerate() {
            let z = affine(p, slot, &post[l]);
            let a = if l == last {
                z.iter().map(|&v| logistic(v)).collect()
            } else {
                z.iter().map(|&v| self.arch.activation.apply(v)).collect()
            };
            pre.push(z);
            post.push(a);
        }
        Trace { pre, post }
    }
}

impl Scorer for MlpModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }
}

fn affine(p: &[f64], slot: &LayerSlot, input: &[f64]) -> Vec<f64> {
    (0..slot.fan_out)
        .map(|j| {
            let row = &p[slot.weights + j * slot.fan_in..slot.weights + (j + 1) * slot.fan_in];
            let dot: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            dot + p[slot.biases + j]
        })
        .collect()
}
