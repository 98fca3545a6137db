//! Disjoint-union batching of graphs for message passing.

use super::{EncoderError, Result};
use crate::autodiff::Tensor;
use crate::data::Graph;

/// A batch of graphs merged into one disjoint union.
///
/// Messages are directed: every undirected edge contributes the two rows
/// `u -> v` and `v -> u` to `msg_src` / `msg_dst` (with edge features
/// duplicated alongside), and `graph_index` maps each node to its graph for
/// the pooling scatter.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub num_nodes: usize,
    pub num_graphs: usize,
    /// `[num_nodes x d_node]`
    pub node_features: Tensor,
    pub msg_src: Vec<usize>,
    pub msg_dst: Vec<usize>,
    /// `[len(msg_src) x d_edge]`, aligned with the message arrays
    pub edge_features: Option<Tensor>,
    pub graph_index: Vec<usize>,
}

impl GraphBatch {
    pub fn from_graphs(graphs: &[&Graph]) -> Result<Self> {
        if graphs.is_empty() {
            return Err(EncoderError::EmptyBatch);
        }
        let d_node = graphs[0].feature_dim();
        let has_edge_feat = graphs[0].edge_features.is_some();
        let d_edge = graphs[0].edge_features.as_ref().map_or(0, |t| t.cols());

        let total_nodes: usize = graphs.iter().map(|g| g.num_nodes).sum();
        let total_msgs: usize = graphs.iter().map(|g| 2 * g.num_edges()).sum();

        let mut feats = Vec::with_capacity(total_nodes * d_node);
        let mut msg_src = Vec::with_capacity(total_msgs);
        let mut msg_dst = Vec::with_capacity(total_msgs);
        let mut efeat = Vec::with_capacity(total_msgs * d_edge);
        let mut graph_index = Vec::with_capacity(total_nodes);

        let mut offset = 0usize;
        for (gi, g) in graphs.iter().enumerate() {
            if g.feature_dim() != d_node {
                return Err(EncoderError::Shape(format!(
                    "node feature widths differ in batch: {} vs {}",
                    d_node,
                    g.feature_dim()
                )));
            }
            if g.edge_features.is_some() != has_edge_feat {
                return Err(EncoderError::Shape(
                    "edge features present on some batch graphs but not others".into(),
                ));
            }
            feats.extend_from_slice(g.node_features.values());
            for (ei, &(u, v)) in g.edges.iter().enumerate() {
                msg_src.push(offset + u);
                msg_dst.push(offset + v);
                msg_src.push(offset + v);
                msg_dst.push(offset + u);
                if let Some(ef) = &g.edge_features {
                    if ef.cols() != d_edge {
                        return Err(EncoderError::Shape(format!(
                            "edge feature widths differ in batch: {} vs {}",
                            d_edge,
                            ef.cols()
                        )));
                    }
                    efeat.extend_from_slice(ef.row(ei));
                    efeat.extend_from_slice(ef.row(ei));
                }
            }
            graph_index.extend(std::iter::repeat(gi).take(g.num_nodes));
            offset += g.num_nodes;
        }

        let node_features = Tensor::matrix(total_nodes, d_node, feats)
            .map_err(|e| EncoderError::Shape(e.to_string()))?;
        let edge_features = if has_edge_feat {
            Some(
                Tensor::matrix(msg_src.len(), d_edge, efeat)
                    .map_err(|e| EncoderError::Shape(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            num_nodes: total_nodes,
            num_graphs: graphs.len(),
            node_features,
            msg_src,
            msg_dst,
            edge_features,
            graph_index,
        })
    }
}
