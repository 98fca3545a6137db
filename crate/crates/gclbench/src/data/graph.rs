//! Core dataset containers and their invariants.

use serde::{Deserialize, Serialize};

use super::{DataError, Result};
use crate::autodiff::Tensor;

/// One undirected attributed graph.
///
/// Edges are stored once per pair as `(u, v)` with `u < v`, sorted
/// lexicographically; this canonical order makes serialization stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub num_nodes: usize,
    /// `[num_nodes x d_node]`
    pub node_features: Tensor,
    pub edges: Vec<(usize, usize)>,
    /// `[num_edges x d_edge]`, aligned with `edges`
    pub edge_features: Option<Tensor>,
    pub label: usize,
}

impl Graph {
    pub fn new(
        num_nodes: usize,
        node_features: Tensor,
        edges: Vec<(usize, usize)>,
        edge_features: Option<Tensor>,
        label: usize,
    ) -> Result<Self> {
        let g = Self { num_nodes, node_features, edges, edge_features, label };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(DataError::InvalidGraph("graph must have at least one node".into()));
        }
        if self.node_features.shape().len() != 2 || self.node_features.rows() != self.num_nodes {
            return Err(DataError::InvalidGraph(format!(
                "node feature shape {:?} does not match {} nodes",
                self.node_features.shape(),
                self.num_nodes
            )));
        }
        let mut prev: Option<(usize, usize)> = None;
        for &(u, v) in &self.edges {
            if u >= v {
                return Err(DataError::InvalidGraph(format!(
                    "edge ({}, {}) is not stored with u < v",
                    u, v
                )));
            }
            if v >= self.num_nodes {
                return Err(DataError::InvalidGraph(format!(
                    "edge ({}, {}) exceeds node count {}",
                    u, v, self.num_nodes
                )));
            }
            if let Some(p) = prev {
                if p == (u, v) {
                    return Err(DataError::InvalidGraph(format!("duplicate edge ({}, {})", u, v)));
                }
                if p > (u, v) {
                    return Err(DataError::InvalidGraph(format!(
                        "edges not in canonical order at ({}, {})",
                        u, v
                    )));
                }
            }
            prev = Some((u, v));
        }
        if let Some(ef) = &self.edge_features {
            if ef.shape().len() != 2 || ef.rows() != self.edges.len() {
                return Err(DataError::InvalidGraph(format!(
                    "edge feature shape {:?} does not match {} edges",
                    ef.shape(),
                    self.edges.len()
                )));
            }
        }
        Ok(())
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.cols()
    }

    /// Adjacency lists (both directions), sorted per node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    stack.push(v);
                }
            }
        }
        visited == self.num_nodes
    }
}

/// Normalize an edge list to the canonical undirected form: each pair once,
/// `u < v`, sorted. Self-loops are dropped; the count removed is returned.
pub(crate) fn canonicalize_edges(edges: impl IntoIterator<Item = (usize, usize)>) -> (Vec<(usize, usize)>, usize) {
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut self_loops = 0;
    for (a, b) in edges {
        if a == b {
            self_loops += 1;
            continue;
        }
        out.push(if a < b { (a, b) } else { (b, a) });
    }
    out.sort_unstable();
    out.dedup();
    (out, self_loops)
}

/// Train/valid/test index lists over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, num_graphs: usize) -> Result<()> {
        let mut seen = vec![false; num_graphs];
        for (part, list) in
            [("train", &self.train), ("valid", &self.valid), ("test", &self.test)]
        {
            for &i in list {
                if i >= num_graphs {
                    return Err(DataError::InvalidSplit(format!(
                        "{} index {} out of range for {} graphs",
                        part, i, num_graphs
                    )));
                }
                if seen[i] {
                    return Err(DataError::InvalidSplit(format!(
                        "index {} appears in more than one split",
                        i
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// An ordered collection of graphs with a shared label space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub graphs: Vec<Graph>,
    pub name: String,
    pub num_classes: usize,
    pub split: Option<SplitSpec>,
}

impl GraphDataset {
    pub fn validate(&self) -> Result<()> {
        let mut node_dim: Option<usize> = None;
        let mut edge_present: Option<bool> = None;
        let mut edge_dim: Option<usize> = None;
        for g in &self.graphs {
            g.validate()?;
            if g.label >= self.num_classes {
                return Err(DataError::InvalidGraph(format!(
                    "label {} outside the {} declared classes",
                    g.label, self.num_classes
                )));
            }
            let nd = g.feature_dim();
            match node_dim {
                None => node_dim = Some(nd),
                Some(d) if d != nd => {
                    return Err(DataError::InvalidGraph(format!(
                        "node feature widths differ across graphs ({} vs {})",
                        d, nd
                    )))
                }
                _ => {}
            }
            let present = g.edge_features.is_some();
            match edge_present {
                None => edge_present = Some(present),
                Some(p) if p != present => {
                    return Err(DataError::InvalidGraph(
                        "edge features present on some graphs but not others".into(),
                    ))
                }
                _ => {}
            }
            // width comparison only makes sense on graphs that have edges
            if let Some(ef) = &g.edge_features {
                if !g.edges.is_empty() {
                    match edge_dim {
                        None => edge_dim = Some(ef.cols()),
                        Some(d) if d != ef.cols() => {
                            return Err(DataError::InvalidGraph(format!(
                                "edge feature widths differ across graphs ({} vs {})",
                                d,
                                ef.cols()
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        if let Some(split) = &self.split {
            split.validate(self.graphs.len())?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label).collect()
    }

    pub fn node_feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }

    pub fn edge_feature_dim(&self) -> Option<usize> {
        self.graphs.first().and_then(|g| g.edge_features.as_ref().map(|t| t.cols()))
    }

    /// Clone the selected graphs, preserving order of `indices`.
    ///
    /// The split is dropped: its indices would dangle in the subset.
    pub fn subset(&self, indices: &[usize]) -> GraphDataset {
        GraphDataset {
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            name: self.name.clone(),
            num_classes: self.num_classes,
            split: None,
        }
    }
}

/// K held-out index lists produced by stratified fold assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldAssignment {
    pub(crate) fn new(folds: Vec<Vec<usize>>, seed: u64) -> Self {
        Self { folds, seed }
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn held_out(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// All indices not held out in `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}
