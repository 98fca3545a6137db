//! Temperature-scaled contrastive loss over two views of a batch.

use super::{GclError, Result};
use crate::autodiff::{Tape, Tensor, TensorId};

/// Contrastive objective settings: temperature and expected batch size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoNceConfig {
    pub temperature: f64,
    pub batch_size: usize,
}

impl InfoNceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(GclError::BadTemperature(self.temperature));
        }
        if self.batch_size < 2 {
            return Err(GclError::SmallBatch(self.batch_size));
        }
        Ok(())
    }
}

/// Record the contrastive loss of two `[N x d]` view batches on `tape`.
///
/// Per anchor `n` the loss is
/// `-log( exp(sim_nn / t) / sum_{n' != n} exp(sim_nn' / t) )`
/// with cosine similarity `sim`; the denominator runs over the negatives
/// only, so the value can drop below zero once positives dominate every
/// negative by a margin. Both view directions are averaged.
pub fn info_nce_on_tape(
    tape: &mut Tape,
    z1: TensorId,
    z2: TensorId,
    temperature: f64,
) -> Result<TensorId> {
    let n = tape.value(z1).rows();
    InfoNceConfig { temperature, batch_size: n }.validate()?;
    if tape.value(z1).shape() != tape.value(z2).shape() {
        return Err(GclError::BadConfig(format!(
            "view shapes differ: {:?} vs {:?}",
            tape.value(z1).shape(),
            tape.value(z2).shape()
        )));
    }

    let mut eye = vec![0.0; n * n];
    for i in 0..n {
        eye[i * n + i] = 1.0;
    }
    let diag_mask = tape.constant(Tensor::matrix(n, n, eye.clone())?)?;
    let off_mask = tape.constant(Tensor::matrix(
        n,
        n,
        eye.iter().map(|&v| 1.0 - v).collect(),
    )?)?;

    // scaled similarities; the second direction is the transpose
    let sim = tape.cosine_similarity(z1, z2)?;
    let scaled = tape.scale(sim, 1.0 / temperature)?;
    let scaled_t = tape.transpose(scaled)?;

    let mut direction_means = Vec::with_capacity(2);
    for s in [scaled, scaled_t] {
        let exp = tape.exp(s)?;
        let negatives = tape.mul(exp, off_mask)?;
        let neg_sum = tape.row_sum(negatives)?;
        let log_neg = tape.log(neg_sum)?;
        let pos = tape.mul(s, diag_mask)?;
        let pos_diag = tape.row_sum(pos)?;
        let neg_pos = tape.scale(pos_diag, -1.0)?;
        let per_anchor = tape.add(log_neg, neg_pos)?;
        direction_means.push(tape.mean_reduce(per_anchor)?);
    }
    let total = tape.add(direction_means[0], direction_means[1])?;
    Ok(tape.scale(total, 0.5)?)
}

/// Evaluate the contrastive loss of two view batches.
pub fn info_nce_loss(z1: &Tensor, z2: &Tensor, temperature: f64) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.constant(z1.clone())?;
    let b = tape.constant(z2.clone())?;
    let loss = info_nce_on_tape(&mut tape, a, b, temperature)?;
    Ok(tape.value(loss).scalar_value())
}
