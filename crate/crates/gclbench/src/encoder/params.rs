//! Encoder parameter containers and their deterministic initialization.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EncoderConfig, EncoderVariant, Result};
use crate::autodiff::{RunningStats, Tensor};
use crate::rng::RngFactory;

/// A dense affine map `x W + b` with `W: [in x out]`, `b: [out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running: RunningStats,
}

impl BatchNormParams {
    fn identity(dim: usize) -> Self {
        Self {
            gamma: Tensor::vector(vec![1.0; dim]),
            beta: Tensor::vector(vec![0.0; dim]),
            running: RunningStats::new(dim),
        }
    }
}

/// One message-passing layer: 2-layer MLP then batch norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinLayerParams {
    pub lin1: LinearParams,
    pub lin2: LinearParams,
    pub bn: BatchNormParams,
}

/// Input-feature handling, varying by encoder family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputParams {
    /// GIN: dense features through one linear map into the hidden width.
    Linear(LinearParams),
    /// GINE: one embedding table per categorical column, summed; node
    /// tables feed the initial state, edge tables feed every layer's
    /// messages.
    Embeddings { node_tables: Vec<Tensor>, edge_tables: Vec<Tensor> },
    /// MolFingerprint: the whole model is this two-layer MLP.
    MolMlp { lin1: LinearParams, lin2: LinearParams },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub input: InputParams,
    pub layers: Vec<GinLayerParams>,
}

impl EncoderParams {
    /// Trainable tensors in a stable order (running stats excluded).
    ///
    /// The order matches [`init_encoder`]'s draw order and the tape ids
    /// returned by the encode functions, so optimizer state stays aligned.
    pub fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        match &self.input {
            InputParams::Linear(l) => {
                out.push(&l.weight);
                out.push(&l.bias);
            }
            InputParams::Embeddings { node_tables, edge_tables } => {
                out.extend(node_tables.iter());
                out.extend(edge_tables.iter());
            }
            InputParams::MolMlp { lin1, lin2 } => {
                out.extend([&lin1.weight, &lin1.bias, &lin2.weight, &lin2.bias]);
            }
        }
        for layer in &self.layers {
            out.extend([
                &layer.lin1.weight,
                &layer.lin1.bias,
                &layer.lin2.weight,
                &layer.lin2.bias,
                &layer.bn.gamma,
                &layer.bn.beta,
            ]);
        }
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        match &mut self.input {
            InputParams::Linear(l) => {
                out.push(&mut l.weight);
                out.push(&mut l.bias);
            }
            InputParams::Embeddings { node_tables, edge_tables } => {
                out.extend(node_tables.iter_mut());
                out.extend(edge_tables.iter_mut());
            }
            InputParams::MolMlp { lin1, lin2 } => {
                out.extend([&mut lin1.weight, &mut lin1.bias, &mut lin2.weight, &mut lin2.bias]);
            }
        }
        for layer in &mut self.layers {
            out.extend([
                &mut layer.lin1.weight,
                &mut layer.lin1.bias,
                &mut layer.lin2.weight,
                &mut layer.lin2.bias,
                &mut layer.bn.gamma,
                &mut layer.bn.beta,
            ]);
        }
        out
    }
}

fn uniform_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, bound: f64) -> Tensor {
    let len: usize = shape.iter().product();
    let vals = (0..len).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::new(shape, vals).expect("shape/len agree")
}

pub(crate) fn init_linear(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> LinearParams {
    // uniform fan-in: U(-1/sqrt(in), 1/sqrt(in)) for weight and bias
    let bound = 1.0 / (fan_in as f64).sqrt();
    LinearParams {
        weight: uniform_tensor(rng, vec![fan_in, fan_out], bound),
        bias: uniform_tensor(rng, vec![fan_out], bound),
    }
}

/// Fresh parameters for `config`, drawn from the `"init"` stream of the
/// config's seed; batch-norm starts at the identity (scale 1, shift 0,
/// running mean 0, running var 1).
pub fn init_encoder(config: &EncoderConfig) -> Result<EncoderParams> {
    config.validate()?;
    let factory = RngFactory::new(config.init_seed, "encoder-init");
    let mut rng = factory.stream("init");
    let h = config.hidden_dim;

    let input = match &config.variant {
        EncoderVariant::Gin { node_input_dim } => {
            InputParams::Linear(init_linear(&mut rng, *node_input_dim, h))
        }
        EncoderVariant::Gine { node_vocab, edge_vocab } => {
            // embedding rows live at the hidden width; scale like a linear
            // map receiving one active row, i.e. bound 1/sqrt(hidden)
            let bound = 1.0 / (h as f64).sqrt();
            let table = |rng: &mut ChaCha8Rng, vocab: usize| uniform_tensor(rng, vec![vocab, h], bound);
            InputParams::Embeddings {
                node_tables: node_vocab.iter().map(|&v| table(&mut rng, v)).collect(),
                edge_tables: edge_vocab.iter().map(|&v| table(&mut rng, v)).collect(),
            }
        }
        EncoderVariant::MolFingerprint { node_input_dim } => InputParams::MolMlp {
            lin1: init_linear(&mut rng, *node_input_dim, h),
            lin2: init_linear(&mut rng, h, h),
        },
    };

    let layers = match config.variant {
        EncoderVariant::MolFingerprint { .. } => Vec::new(),
        _ => (0..config.layers)
            .map(|_| GinLayerParams {
                lin1: init_linear(&mut rng, h, h),
                lin2: init_linear(&mut rng, h, h),
                bn: BatchNormParams::identity(h),
            })
            .collect(),
    };

    Ok(EncoderParams { input, layers })
}
