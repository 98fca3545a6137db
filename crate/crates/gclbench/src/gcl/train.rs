//! Minibatch training loops for the contrastive methods.

use log::debug;

use super::augment::{augment, AugmentationKind, AugmentationSpec};
use super::infograph::{infograph_loss_on_tape, init_discriminator, mlp};
use super::infonce::info_nce_on_tape;
use super::{GclError, Result};
use crate::autodiff::{AdamConfig, AdamState, AutodiffError, BnMode, Tape, Tensor, TensorId};
use crate::data::{Graph, GraphDataset};
use crate::encoder::{encode_on_tape, init_encoder, init_linear, EncoderConfig, EncoderParams, GraphBatch, LinearParams};
use crate::rng::RngFactory;

/// Hyperparameters shared by both training loops.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub temperature: f64,
    pub proj_dim: usize,
    pub augmentation: AugmentationSpec,
    pub seed: u64,
}

impl TrainConfig {
    /// Molecular-benchmark settings: 100 epochs, batch 256, lr 1e-3, weight
    /// decay 1e-5, temperature 0.2, 64-wide projection, edge-drop 0.10.
    pub fn molhiv_defaults(seed: u64) -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            lr: 1e-3,
            weight_decay: 1e-5,
            temperature: 0.2,
            proj_dim: 64,
            augmentation: AugmentationSpec::new(AugmentationKind::EdgeDrop, 0.10)
                .expect("probability in range"),
            seed,
        }
    }

    /// Synthetic-benchmark settings: 50 epochs, batch 256, lr 1e-3, no weight
    /// decay, 32-wide projection, combined node+edge dropping at 0.15.
    pub fn synthetic_defaults(seed: u64) -> Self {
        Self {
            epochs: 50,
            batch_size: 256,
            lr: 1e-3,
            weight_decay: 0.0,
            temperature: 0.2,
            proj_dim: 32,
            augmentation: AugmentationSpec::new(AugmentationKind::NodeAndEdge, 0.15)
                .expect("probability in range"),
            seed,
        }
    }

    /// InfoGraph settings: augmentation-free, 2-wide discriminator output.
    pub fn infograph_defaults(seed: u64) -> Self {
        Self {
            proj_dim: 2,
            ..Self::synthetic_defaults(seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(GclError::BadConfig(format!("batch size {} < 2", self.batch_size)));
        }
        if !(self.lr > 0.0) || !(self.temperature > 0.0) || self.weight_decay < 0.0 {
            return Err(GclError::BadConfig(
                "lr and temperature must be positive, weight decay non-negative".into(),
            ));
        }
        if self.proj_dim == 0 {
            return Err(GclError::BadConfig("projection dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Final encoder parameters plus the mean training loss per epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub loss_trace: Vec<f64>,
}

fn check_subset(dataset: &GraphDataset, subset: &[usize]) -> Result<()> {
    if subset.len() < 2 {
        return Err(GclError::SmallBatch(subset.len()));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= dataset.len()) {
        return Err(GclError::BadConfig(format!(
            "subset index {} outside dataset of {} graphs",
            bad,
            dataset.len()
        )));
    }
    Ok(())
}

fn diverged(e: GclError, epoch: usize, batch: usize) -> GclError {
    match e {
        GclError::Autodiff(AutodiffError::NonFinite { op })
        | GclError::Encoder(crate::encoder::EncoderError::Autodiff(AutodiffError::NonFinite { op })) => {
            GclError::Diverged { epoch, batch, detail: format!("non-finite value in {}", op) }
        }
        other => other,
    }
}

fn record_linears(tape: &mut Tape, linears: &[&LinearParams]) -> Result<Vec<TensorId>> {
    let mut ids = Vec::with_capacity(linears.len() * 2);
    for l in linears {
        ids.push(tape.param(&l.weight).map_err(GclError::Autodiff)?);
        ids.push(tape.param(&l.bias).map_err(GclError::Autodiff)?);
    }
    Ok(ids)
}

/// Sum the per-view gradients for tensors recorded more than once.
fn combined_grad(
    grads: &crate::autodiff::Gradients,
    ids: &[&[TensorId]],
    k: usize,
) -> Option<Tensor> {
    let mut acc: Option<Tensor> = None;
    for id_set in ids {
        if let Some(g) = grads.get(id_set[k]) {
            acc = Some(match acc {
                None => g.clone(),
                Some(mut a) => {
                    for (x, y) in a.values_mut().iter_mut().zip(g.values()) {
                        *x += y;
                    }
                    a
                }
            });
        }
    }
    acc
}

fn epoch_order(factory: &RngFactory, subset: &[usize], epoch: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order = subset.to_vec();
    let mut rng = factory.stream_indexed("batch-order", epoch as u64);
    order.shuffle(&mut rng);
    order
}

/// Pretrain with the two-view contrastive objective.
///
/// Per epoch the subset is reshuffled (stream `"batch-order"`), cut into
/// minibatches (a trailing minibatch smaller than 2 is dropped since the
/// loss needs a negative), and every graph is augmented twice (streams
/// `"aug-1"`, `"aug-2"`); both views pass through the encoder in train mode
/// and a linear–relu–linear projection head, and Adam minimizes the
/// contrastive loss. The head is discarded: probes consume encoder output.
pub fn train_graphcl(
    dataset: &GraphDataset,
    subset: &[usize],
    encoder_config: &EncoderConfig,
    config: &TrainConfig,
    run: &str,
) -> Result<TrainOutcome> {
    check_subset(dataset, subset)?;
    config.validate()?;
    let mut params = init_encoder(encoder_config)?;
    let emb_dim = encoder_config.embedding_dim();

    let head_factory = RngFactory::new(config.seed, "encoder-init");
    let mut head_rng = head_factory.stream("init-head");
    let mut head1 = init_linear(&mut head_rng, emb_dim, config.proj_dim);
    let mut head2 = init_linear(&mut head_rng, config.proj_dim, config.proj_dim);

    let mut adam = {
        let mut ps = params.param_tensors();
        ps.extend([&head1.weight, &head1.bias, &head2.weight, &head2.bias]);
        AdamState::new(&ps)
    };
    let adam_cfg = AdamConfig::new(config.lr, config.weight_decay);
    let factory = RngFactory::new(config.seed, run);
    let num_enc = params.param_tensors().len();

    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let order = epoch_order(&factory, subset, epoch);
        let mut aug1 = factory.stream_indexed("aug-1", epoch as u64);
        let mut aug2 = factory.stream_indexed("aug-2", epoch as u64);
        let mut epoch_losses = Vec::new();
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            if chunk.len() < 2 {
                debug!("dropping trailing minibatch of size {}", chunk.len());
                continue;
            }
            let graphs: Vec<&Graph> = chunk.iter().map(|&i| &dataset.graphs[i]).collect();
            let view1: Vec<Graph> =
                graphs.iter().map(|g| augment(g, &config.augmentation, &mut aug1)).collect();
            let view2: Vec<Graph> =
                graphs.iter().map(|g| augment(g, &config.augmentation, &mut aug2)).collect();
            let batch1 = GraphBatch::from_graphs(&view1.iter().collect::<Vec<_>>())
                .map_err(GclError::Encoder)?;
            let batch2 = GraphBatch::from_graphs(&view2.iter().collect::<Vec<_>>())
                .map_err(GclError::Encoder)?;

            let step = (|| -> Result<(Tape, Vec<TensorId>, Vec<TensorId>, Vec<TensorId>, TensorId)> {
                let mut tape = Tape::new();
                let t1 = encode_on_tape(&mut tape, &mut params, encoder_config, &batch1, BnMode::Train)?;
                let t2 = encode_on_tape(&mut tape, &mut params, encoder_config, &batch2, BnMode::Train)?;
                let head_ids = record_linears(&mut tape, &[&head1, &head2])?;
                let z1 = mlp(&mut tape, t1.output, head_ids[0], head_ids[1], head_ids[2], head_ids[3])?;
                let z2 = mlp(&mut tape, t2.output, head_ids[0], head_ids[1], head_ids[2], head_ids[3])?;
                let loss = info_nce_on_tape(&mut tape, z1, z2, config.temperature)?;
                Ok((tape, t1.param_ids, t2.param_ids, head_ids, loss))
            })();
            let (tape, ids1, ids2, head_ids, loss_id) = step.map_err(|e| diverged(e, epoch, bi))?;

            let loss = tape.value(loss_id).scalar_value();
            epoch_losses.push(loss);
            let grads = tape.backward(loss_id).map_err(GclError::Autodiff)?;

            let mut owned: Vec<Option<Tensor>> = Vec::with_capacity(num_enc + 4);
            for k in 0..num_enc {
                owned.push(combined_grad(&grads, &[&ids1, &ids2], k));
            }
            for k in 0..4 {
                owned.push(grads.get(head_ids[k]).cloned());
            }
            let grad_refs: Vec<Option<&Tensor>> = owned.iter().map(Option::as_ref).collect();
            let mut ps = params.param_tensors_mut();
            ps.extend([&mut head1.weight, &mut head1.bias, &mut head2.weight, &mut head2.bias]);
            adam.step(&adam_cfg, &mut ps, &grad_refs).map_err(GclError::Autodiff)?;
        }
        let mean = epoch_losses.iter().sum::<f64>() / epoch_losses.len().max(1) as f64;
        debug!("{}: epoch {} mean loss {:.6}", run, epoch, mean);
        loss_trace.push(mean);
    }
    Ok(TrainOutcome { params, loss_trace })
}

/// Pretrain with the local–global objective; augmentation-free.
///
/// Each minibatch is encoded once in train mode; the per-node states and the
/// pooled embeddings feed the discriminator, and Adam updates encoder and
/// discriminator jointly. Only the encoder parameters are returned.
pub fn train_infograph(
    dataset: &GraphDataset,
    subset: &[usize],
    encoder_config: &EncoderConfig,
    config: &TrainConfig,
    run: &str,
) -> Result<TrainOutcome> {
    check_subset(dataset, subset)?;
    config.validate()?;
    let mut params = init_encoder(encoder_config)?;
    let emb_dim = encoder_config.embedding_dim();
    let mut disc = init_discriminator(
        emb_dim,
        emb_dim,
        encoder_config.hidden_dim,
        config.proj_dim,
        config.seed,
    );

    let mut adam = {
        let mut ps = params.param_tensors();
        ps.extend(disc.param_tensors());
        AdamState::new(&ps)
    };
    let adam_cfg = AdamConfig::new(config.lr, config.weight_decay);
    let factory = RngFactory::new(config.seed, run);
    let num_enc = params.param_tensors().len();

    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let order = epoch_order(&factory, subset, epoch);
        let mut epoch_losses = Vec::new();
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let graphs: Vec<&Graph> = chunk.iter().map(|&i| &dataset.graphs[i]).collect();
            let batch = GraphBatch::from_graphs(&graphs).map_err(GclError::Encoder)?;

            let step = (|| -> Result<(Tape, Vec<TensorId>, Vec<TensorId>, TensorId)> {
                let mut tape = Tape::new();
                let t = encode_on_tape(&mut tape, &mut params, encoder_config, &batch, BnMode::Train)?;
                let local = t.node_states.ok_or_else(|| {
                    GclError::BadConfig("encoder variant provides no per-node states".into())
                })?;
                let disc_ids = record_linears(
                    &mut tape,
                    &[&disc.global1, &disc.global2, &disc.local1, &disc.local2],
                )?;
                let loss = infograph_loss_on_tape(&mut tape, t.output, local, &batch.graph_index, &disc_ids)?;
                Ok((tape, t.param_ids, disc_ids, loss))
            })();
            let (tape, enc_ids, disc_ids, loss_id) = step.map_err(|e| diverged(e, epoch, bi))?;

            let loss = tape.value(loss_id).scalar_value();
            epoch_losses.push(loss);
            let grads = tape.backward(loss_id).map_err(GclError::Autodiff)?;

            let mut owned: Vec<Option<Tensor>> = Vec::with_capacity(num_enc + 8);
            for k in 0..num_enc {
                owned.push(grads.get(enc_ids[k]).cloned());
            }
            for k in 0..8 {
                owned.push(grads.get(disc_ids[k]).cloned());
            }
            let grad_refs: Vec<Option<&Tensor>> = owned.iter().map(Option::as_ref).collect();
            let mut ps = params.param_tensors_mut();
            ps.extend(disc.param_tensors_mut());
            adam.step(&adam_cfg, &mut ps, &grad_refs).map_err(GclError::Autodiff)?;
        }
        let mean = epoch_losses.iter().sum::<f64>() / epoch_losses.len().max(1) as f64;
        debug!("{}: epoch {} mean loss {:.6}", run, epoch, mean);
        loss_trace.push(mean);
    }
    Ok(TrainOutcome { params, loss_trace })
}
