//! Graph encoders: GIN, edge-aware GINE, and the MolFingerprint MLP.
//!
//! All encoders share the readout of the reference architecture: sum-pool
//! the node states after every message-passing layer and concatenate the
//! pooled vectors, so 3 layers of width 32 yield a 96-dimensional graph
//! embedding. Encoders run identically in trained and frozen-random
//! ("untrained") mode; freezing is simply never applying an update.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod batch;
mod checkpoint;
mod encode;
mod params;

pub use batch::GraphBatch;
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use encode::{encode_graphs_eval, encode_on_tape, molfingerprint_embed, TapedEncoder};
pub use params::{init_encoder, BatchNormParams, EncoderParams, GinLayerParams, InputParams, LinearParams};
pub(crate) use params::init_linear;

use crate::autodiff::AutodiffError;
use crate::data::GraphDataset;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("encoder shape problem: {0}")]
    Shape(String),
    #[error("feature column {column} holds {value}, not a code below {vocab}")]
    BadCode { column: usize, value: f64, vocab: usize },
    #[error("operation requires the {expected} variant, got {actual}")]
    VariantMismatch { expected: &'static str, actual: &'static str },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("checkpoint problem: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, EncoderError>;

/// Which encoder family to build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderVariant {
    /// Dense node features through an input linear map, then GIN layers.
    Gin { node_input_dim: usize },
    /// Categorical node/edge codes through per-column embedding tables,
    /// then GINE layers whose neighbor messages add the edge embedding.
    Gine { node_vocab: Vec<usize>, edge_vocab: Vec<usize> },
    /// Two-layer per-node MLP with sum pooling; no message passing.
    MolFingerprint { node_input_dim: usize },
}

impl EncoderVariant {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderVariant::Gin { .. } => "GIN",
            EncoderVariant::Gine { .. } => "GINE",
            EncoderVariant::MolFingerprint { .. } => "MolFingerprint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub variant: EncoderVariant,
    /// GIN self-loop weight in `(1 + eps) * h_v`; fixed, not learned.
    pub eps: f64,
    pub init_seed: u64,
}

impl EncoderConfig {
    pub fn gin(node_input_dim: usize, init_seed: u64) -> Self {
        Self {
            layers: 3,
            hidden_dim: 32,
            variant: EncoderVariant::Gin { node_input_dim },
            eps: 0.0,
            init_seed,
        }
    }

    pub fn gine(node_vocab: Vec<usize>, edge_vocab: Vec<usize>, init_seed: u64) -> Self {
        Self {
            layers: 3,
            hidden_dim: 32,
            variant: EncoderVariant::Gine { node_vocab, edge_vocab },
            eps: 0.0,
            init_seed,
        }
    }

    pub fn mol_fingerprint(node_input_dim: usize, init_seed: u64) -> Self {
        Self {
            layers: 2,
            hidden_dim: 256,
            variant: EncoderVariant::MolFingerprint { node_input_dim },
            eps: 0.0,
            init_seed,
        }
    }

    /// Output width of the graph embedding.
    pub fn embedding_dim(&self) -> usize {
        match self.variant {
            EncoderVariant::MolFingerprint { .. } => self.hidden_dim,
            _ => self.layers * self.hidden_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden_dim == 0 {
            return Err(EncoderError::Shape("layers and hidden dim must be >= 1".into()));
        }
        match &self.variant {
            EncoderVariant::Gin { node_input_dim } | EncoderVariant::MolFingerprint { node_input_dim } => {
                if *node_input_dim == 0 {
                    return Err(EncoderError::Shape("node input dim must be >= 1".into()));
                }
            }
            EncoderVariant::Gine { node_vocab, edge_vocab } => {
                if node_vocab.is_empty() {
                    return Err(EncoderError::Shape("GINE needs at least one node column".into()));
                }
                if node_vocab.iter().chain(edge_vocab).any(|&v| v == 0) {
                    return Err(EncoderError::Shape("vocabulary sizes must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Per-column vocabulary sizes (`max code + 1`) for categorical datasets,
/// as needed by the GINE variant.
pub fn vocab_from_dataset(dataset: &GraphDataset) -> Result<(Vec<usize>, Vec<usize>)> {
    let node_dim = dataset.node_feature_dim();
    let mut node_vocab = vec![1usize; node_dim];
    let mut edge_vocab = vec![1usize; dataset.edge_feature_dim().unwrap_or(0)];
    let scan = |t: &crate::autodiff::Tensor, vocab: &mut [usize]| -> Result<()> {
        for r in 0..t.rows() {
            for (c, &v) in t.row(r).iter().enumerate() {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(EncoderError::Shape(format!(
                        "feature column {} holds non-categorical value {}",
                        c, v
                    )));
                }
                vocab[c] = vocab[c].max(v as usize + 1);
            }
        }
        Ok(())
    };
    for g in &dataset.graphs {
        scan(&g.node_features, &mut node_vocab)?;
        if let Some(ef) = &g.edge_features {
            scan(ef, &mut edge_vocab)?;
        }
    }
    Ok((node_vocab, edge_vocab))
}
