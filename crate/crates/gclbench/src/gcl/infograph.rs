//! Local–global mutual-information objective with a bilinear discriminator.

use serde::{Deserialize, Serialize};

use super::{GclError, Result};
use crate::autodiff::{Tape, Tensor, TensorId};
use crate::encoder::{init_linear, LinearParams};
use crate::rng::RngFactory;

/// Discriminator: two small MLPs whose outputs are scored by inner product,
/// `T(g, l) = <MLP_g(g), MLP_l(l)>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorParams {
    pub global1: LinearParams,
    pub global2: LinearParams,
    pub local1: LinearParams,
    pub local2: LinearParams,
}

impl DiscriminatorParams {
    pub fn param_tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.global1.weight,
            &self.global1.bias,
            &self.global2.weight,
            &self.global2.bias,
            &self.local1.weight,
            &self.local1.bias,
            &self.local2.weight,
            &self.local2.bias,
        ]
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.global1.weight,
            &mut self.global1.bias,
            &mut self.global2.weight,
            &mut self.global2.bias,
            &mut self.local1.weight,
            &mut self.local1.bias,
            &mut self.local2.weight,
            &mut self.local2.bias,
        ]
    }
}

/// Discriminator weights plus the score-space width they project into.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoGraphConfig {
    pub disc: DiscriminatorParams,
    pub proj_dim: usize,
}

/// Fresh discriminator MLPs (hidden width `hidden`, output `proj_dim`) from
/// the `"init-head"` stream of `seed`.
pub fn init_discriminator(
    global_dim: usize,
    local_dim: usize,
    hidden: usize,
    proj_dim: usize,
    seed: u64,
) -> DiscriminatorParams {
    let factory = RngFactory::new(seed, "encoder-init");
    let mut rng = factory.stream("init-head");
    DiscriminatorParams {
        global1: init_linear(&mut rng, global_dim, hidden),
        global2: init_linear(&mut rng, hidden, proj_dim),
        local1: init_linear(&mut rng, local_dim, hidden),
        local2: init_linear(&mut rng, hidden, proj_dim),
    }
}

pub(super) fn mlp(tape: &mut Tape, x: TensorId, w1: TensorId, b1: TensorId, w2: TensorId, b2: TensorId) -> crate::autodiff::Result<TensorId> {
    let z1 = tape.matmul(x, w1)?;
    let z1 = tape.add_bias(z1, b1)?;
    let a1 = tape.relu(z1)?;
    let z2 = tape.matmul(a1, w2)?;
    tape.add_bias(z2, b2)
}

/// Record the Jensen–Shannon local–global objective on `tape`.
///
/// `global` is `[G x d_g]`, `local` is `[N x d_l]`, and `graph_index` maps
/// each local row to its graph. `disc_ids` must hold the eight tape ids of
/// [`DiscriminatorParams::param_tensors`] in order. The loss averages
/// `softplus(-T)` over the positive (node, own graph) pairs and
/// `softplus(T)` over the negative pairs.
pub fn infograph_loss_on_tape(
    tape: &mut Tape,
    global: TensorId,
    local: TensorId,
    graph_index: &[usize],
    disc_ids: &[TensorId],
) -> Result<TensorId> {
    let g = tape.value(global).rows();
    let n = tape.value(local).rows();
    if g < 2 {
        return Err(GclError::SmallBatch(g));
    }
    if graph_index.len() != n {
        return Err(GclError::BadConfig(format!(
            "{} local rows but {} membership entries",
            n,
            graph_index.len()
        )));
    }
    if let Some(&bad) = graph_index.iter().find(|&&i| i >= g) {
        return Err(GclError::BadConfig(format!("membership {} outside {} graphs", bad, g)));
    }
    if disc_ids.len() != 8 {
        return Err(GclError::BadConfig(format!("expected 8 discriminator ids, got {}", disc_ids.len())));
    }

    let u = mlp(tape, global, disc_ids[0], disc_ids[1], disc_ids[2], disc_ids[3])?;
    let v = mlp(tape, local, disc_ids[4], disc_ids[5], disc_ids[6], disc_ids[7])?;
    let ut = tape.transpose(u)?;
    let scores = tape.matmul(v, ut)?; // [N x G]

    let mut pos = vec![0.0; n * g];
    for (i, &gi) in graph_index.iter().enumerate() {
        pos[i * g + gi] = 1.0;
    }
    let pos_mask = tape.constant(Tensor::matrix(n, g, pos.clone())?)?;
    let neg_mask = tape.constant(Tensor::matrix(n, g, pos.iter().map(|&x| 1.0 - x).collect())?)?;

    let neg_scores = tape.scale(scores, -1.0)?;
    let sp_pos = tape.softplus(neg_scores)?;
    let pos_terms = tape.mul(sp_pos, pos_mask)?;
    let pos_sum = tape.sum_reduce(pos_terms)?;
    let pos_mean = tape.scale(pos_sum, 1.0 / n as f64)?;

    let sp_neg = tape.softplus(scores)?;
    let neg_terms = tape.mul(sp_neg, neg_mask)?;
    let neg_sum = tape.sum_reduce(neg_terms)?;
    let neg_mean = tape.scale(neg_sum, 1.0 / (n as f64 * (g as f64 - 1.0)))?;

    Ok(tape.add(pos_mean, neg_mean)?)
}

/// Evaluate the objective for given embeddings and discriminator weights.
pub fn infograph_loss(
    global: &Tensor,
    local: &Tensor,
    graph_index: &[usize],
    disc: &DiscriminatorParams,
) -> Result<f64> {
    let mut tape = Tape::new();
    let g = tape.constant(global.clone())?;
    let l = tape.constant(local.clone())?;
    let ids: Vec<TensorId> = {
        let tensors = disc.param_tensors();
        let mut ids = Vec::with_capacity(tensors.len());
        for t in tensors {
            ids.push(tape.param(t)?);
        }
        ids
    };
    let loss = infograph_loss_on_tape(&mut tape, g, l, graph_index, &ids)?;
    Ok(tape.value(loss).scalar_value())
}
