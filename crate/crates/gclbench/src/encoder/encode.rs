//! Forward passes for all encoder variants, on the autodiff tape.

use super::{EncoderConfig, EncoderError, EncoderVariant, GraphBatch, Result};
use super::params::{EncoderParams, InputParams};
use crate::autodiff::{BnMode, Tape, Tensor, TensorId};
use crate::data::Graph;

/// Handles into a tape holding one encoder forward pass.
pub struct TapedEncoder {
    /// `[num_graphs x embedding_dim]`
    pub output: TensorId,
    /// Per-node states concatenated across layers, `[num_nodes x embedding_dim]`;
    /// absent for MolFingerprint (no message passing).
    pub node_states: Option<TensorId>,
    /// Parameter tape ids, aligned with `EncoderParams::param_tensors()`.
    pub param_ids: Vec<TensorId>,
}

fn integer_codes(features: &Tensor, column: usize, vocab: usize) -> Result<Vec<usize>> {
    let d = features.cols();
    let mut codes = Vec::with_capacity(features.rows());
    for r in 0..features.rows() {
        let v = features.values()[r * d + column];
        if v < 0.0 || v.fract() != 0.0 || v as usize >= vocab {
            return Err(EncoderError::BadCode { column, value: v, vocab });
        }
        codes.push(v as usize);
    }
    Ok(codes)
}

/// Embed categorical columns through per-column tables and sum.
fn embed_tables(
    tape: &mut Tape,
    table_ids: &[TensorId],
    tables: &[Tensor],
    features: &Tensor,
) -> Result<TensorId> {
    let mut acc: Option<TensorId> = None;
    for (c, (&tid, table)) in table_ids.iter().zip(tables).enumerate() {
        let codes = integer_codes(features, c, table.rows())?;
        let looked = tape.row_gather(tid, &codes)?;
        acc = Some(match acc {
            None => looked,
            Some(a) => tape.add(a, looked)?,
        });
    }
    acc.ok_or_else(|| EncoderError::Shape("no embedding tables".into()))
}

/// Record one encoder forward pass over `batch` on `tape`.
///
/// In train mode the batch-norm running statistics inside `params` are
/// updated; eval mode leaves `params` untouched. The returned parameter ids
/// let callers map `Tape::backward` output onto the parameter list.
pub fn encode_on_tape(
    tape: &mut Tape,
    params: &mut EncoderParams,
    config: &EncoderConfig,
    batch: &GraphBatch,
    mode: BnMode,
) -> Result<TapedEncoder> {
    config.validate()?;
    if batch.num_graphs == 0 {
        return Err(EncoderError::EmptyBatch);
    }
    let param_ids: Vec<TensorId> = {
        let tensors = params.param_tensors();
        let mut ids = Vec::with_capacity(tensors.len());
        for t in tensors {
            ids.push(tape.param(t)?);
        }
        ids
    };

    // input transform to the hidden width
    let (mut h, edge_embed, input_count) = match (&params.input, &config.variant) {
        (InputParams::Linear(_), EncoderVariant::Gin { node_input_dim }) => {
            if batch.node_features.cols() != *node_input_dim {
                return Err(EncoderError::Shape(format!(
                    "batch features have width {}, encoder expects {}",
                    batch.node_features.cols(),
                    node_input_dim
                )));
            }
            let x = tape.constant(batch.node_features.clone())?;
            let xw = tape.matmul(x, param_ids[0])?;
            (tape.add_bias(xw, param_ids[1])?, None, 2)
        }
        (
            InputParams::Embeddings { node_tables, edge_tables },
            EncoderVariant::Gine { node_vocab, edge_vocab },
        ) => {
            if batch.node_features.cols() != node_vocab.len() {
                return Err(EncoderError::Shape(format!(
                    "batch has {} node columns, encoder expects {}",
                    batch.node_features.cols(),
                    node_vocab.len()
                )));
            }
            let node_ids = &param_ids[..node_tables.len()];
            let h0 = embed_tables(tape, node_ids, node_tables, &batch.node_features)?;
            let edge_embed = if edge_tables.is_empty() {
                None
            } else {
                let ef = batch.edge_features.as_ref().ok_or_else(|| {
                    EncoderError::Shape("encoder expects edge features, batch has none".into())
                })?;
                if ef.cols() != edge_vocab.len() {
                    return Err(EncoderError::Shape(format!(
                        "batch has {} edge columns, encoder expects {}",
                        ef.cols(),
                        edge_vocab.len()
                    )));
                }
                let edge_ids = &param_ids[node_tables.len()..node_tables.len() + edge_tables.len()];
                Some(embed_tables(tape, edge_ids, edge_tables, ef)?)
            };
            (h0, edge_embed, node_tables.len() + edge_tables.len())
        }
        (InputParams::MolMlp { .. }, EncoderVariant::MolFingerprint { node_input_dim }) => {
            if batch.node_features.cols() != *node_input_dim {
                return Err(EncoderError::Shape(format!(
                    "batch features have width {}, encoder expects {}",
                    batch.node_features.cols(),
                    node_input_dim
                )));
            }
            let x = tape.constant(batch.node_features.clone())?;
            let z1 = tape.matmul(x, param_ids[0])?;
            let z1 = tape.add_bias(z1, param_ids[1])?;
            let a1 = tape.relu(z1)?;
            let z2 = tape.matmul(a1, param_ids[2])?;
            let z2 = tape.add_bias(z2, param_ids[3])?;
            let pooled = tape.scatter_sum(z2, &batch.graph_index, batch.num_graphs)?;
            return Ok(TapedEncoder { output: pooled, node_states: None, param_ids });
        }
        _ => {
            return Err(EncoderError::VariantMismatch {
                expected: config.variant.name(),
                actual: "mismatched parameter container",
            })
        }
    };

    let mut pooled = Vec::with_capacity(config.layers);
    let mut per_layer_states = Vec::with_capacity(config.layers);
    for (l, layer) in params.layers.iter_mut().enumerate() {
        let base = input_count + l * 6;
        let (w1, b1, w2, b2, gamma, beta) = (
            param_ids[base],
            param_ids[base + 1],
            param_ids[base + 2],
            param_ids[base + 3],
            param_ids[base + 4],
            param_ids[base + 5],
        );
        let msg_h = tape.row_gather(h, &batch.msg_src)?;
        let msg = match edge_embed {
            Some(e) => {
                let s = tape.add(msg_h, e)?;
                tape.relu(s)?
            }
            None => msg_h,
        };
        let neigh = tape.scatter_sum(msg, &batch.msg_dst, batch.num_nodes)?;
        let self_part = tape.scale(h, 1.0 + config.eps)?;
        let agg = tape.add(self_part, neigh)?;
        let z1 = tape.matmul(agg, w1)?;
        let z1 = tape.add_bias(z1, b1)?;
        let a1 = tape.relu(z1)?;
        let z2 = tape.matmul(a1, w2)?;
        let z2 = tape.add_bias(z2, b2)?;
        let bn = tape.batch_norm(z2, gamma, beta, &mut layer.bn.running, mode)?;
        h = tape.relu(bn)?;
        per_layer_states.push(h);
        pooled.push(tape.scatter_sum(h, &batch.graph_index, batch.num_graphs)?);
    }
    let output = tape.concat_cols(&pooled)?;
    let node_states = Some(tape.concat_cols(&per_layer_states)?);
    Ok(TapedEncoder { output, node_states, param_ids })
}

/// Embed `graphs` in eval mode, leaving `params` untouched.
///
/// Graphs are processed in fixed-size chunks; eval-mode batch norm uses only
/// the running statistics, so chunking cannot change the result.
pub fn encode_graphs_eval(
    params: &EncoderParams,
    config: &EncoderConfig,
    graphs: &[&Graph],
) -> Result<Tensor> {
    if graphs.is_empty() {
        return Err(EncoderError::EmptyBatch);
    }
    let dim = config.embedding_dim();
    let mut out = Vec::with_capacity(graphs.len() * dim);
    for chunk in graphs.chunks(256) {
        let mut tape = Tape::new();
        let batch = GraphBatch::from_graphs(chunk)?;
        let mut scratch = params.clone();
        let taped = encode_on_tape(&mut tape, &mut scratch, config, &batch, BnMode::Eval)?;
        out.extend_from_slice(tape.value(taped.output).values());
    }
    Tensor::matrix(graphs.len(), dim, out).map_err(|e| EncoderError::Shape(e.to_string()))
}

/// MolFingerprint embedding: per-node two-layer MLP, sum-pooled per graph.
pub fn molfingerprint_embed(
    params: &EncoderParams,
    config: &EncoderConfig,
    graphs: &[&Graph],
) -> Result<Tensor> {
    if !matches!(config.variant, EncoderVariant::MolFingerprint { .. }) {
        return Err(EncoderError::VariantMismatch {
            expected: "MolFingerprint",
            actual: config.variant.name(),
        });
    }
    encode_graphs_eval(params, config, graphs)
}
