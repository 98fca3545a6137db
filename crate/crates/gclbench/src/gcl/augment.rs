//! Stochastic graph augmentations: node dropping and edge dropping.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GclError, Result};
use crate::autodiff::Tensor;
use crate::data::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentationKind {
    NodeDrop,
    EdgeDrop,
    NodeAndEdge,
}

/// A view-generating augmentation with drop probability `p_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationSpec {
    kind: AugmentationKind,
    p: f64,
}

impl AugmentationSpec {
    pub fn new(kind: AugmentationKind, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(GclError::BadProbability(p));
        }
        Ok(Self { kind, p })
    }

    pub fn kind(&self) -> AugmentationKind {
        self.kind
    }

    pub fn probability(&self) -> f64 {
        self.p
    }
}

fn drop_edges(graph: &Graph, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let keep: Vec<bool> = graph.edges.iter().map(|_| rng.random::<f64>() >= p).collect();
    let edges: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(&e, _)| e)
        .collect();
    let edge_features = graph.edge_features.as_ref().map(|ef| {
        let d = ef.cols();
        let mut vals = Vec::with_capacity(edges.len() * d);
        for (i, &k) in keep.iter().enumerate() {
            if k {
                vals.extend_from_slice(ef.row(i));
            }
        }
        Tensor::matrix(edges.len(), d, vals).expect("filtered rows")
    });
    Graph {
        num_nodes: graph.num_nodes,
        node_features: graph.node_features.clone(),
        edges,
        edge_features,
        label: graph.label,
    }
}

fn drop_nodes(graph: &Graph, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let n = graph.num_nodes;
    let mut keep: Vec<bool> = (0..n).map(|_| rng.random::<f64>() >= p).collect();
    if keep.iter().all(|&k| !k) {
        // an empty graph is undefined downstream; retain one node uniformly
        keep[rng.random_range(0..n)] = true;
    }
    let mut new_id = vec![usize::MAX; n];
    let mut kept = 0usize;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            new_id[i] = kept;
            kept += 1;
        }
    }
    let d = graph.node_features.cols();
    let mut feats = Vec::with_capacity(kept * d);
    for (i, &k) in keep.iter().enumerate() {
        if k {
            feats.extend_from_slice(graph.node_features.row(i));
        }
    }
    let survives: Vec<bool> = graph.edges.iter().map(|&(u, v)| keep[u] && keep[v]).collect();
    let edges: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .zip(&survives)
        .filter(|(_, &s)| s)
        .map(|(&(u, v), _)| (new_id[u], new_id[v]))
        .collect();
    let edge_features = graph.edge_features.as_ref().map(|ef| {
        let de = ef.cols();
        let mut vals = Vec::with_capacity(edges.len() * de);
        for (i, &s) in survives.iter().enumerate() {
            if s {
                vals.extend_from_slice(ef.row(i));
            }
        }
        Tensor::matrix(edges.len(), de, vals).expect("filtered rows")
    });
    Graph {
        num_nodes: kept,
        node_features: Tensor::matrix(kept, d, feats).expect("gathered rows"),
        edges,
        edge_features,
        label: graph.label,
    }
}

/// Draw one stochastic view of `graph`.
///
/// Edge-drop removes each undirected edge independently with probability
/// `p_r`; node-drop removes each node (with incident edges) independently,
/// compacting ids in ascending order of the survivors, and retains one
/// uniformly chosen node if all would vanish; the combined kind applies
/// node-drop then edge-drop. The stream is consumed in that fixed order.
pub fn augment(graph: &Graph, spec: &AugmentationSpec, rng: &mut ChaCha8Rng) -> Graph {
    match spec.kind {
        AugmentationKind::EdgeDrop => drop_edges(graph, spec.p, rng),
        AugmentationKind::NodeDrop => drop_nodes(graph, spec.p, rng),
        AugmentationKind::NodeAndEdge => {
            let dropped = drop_nodes(graph, spec.p, rng);
            drop_edges(&dropped, spec.p, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngFactory;

    fn rng(seed: u64) -> ChaCha8Rng {
        RngFactory::new(seed, "aug-test").stream("aug-1")
    }

    fn path_graph(n: usize) -> Graph {
        Graph::new(
            n,
            Tensor::matrix(n, 2, (0..2 * n).map(|x| x as f64).collect()).unwrap(),
            (0..n - 1).map(|i| (i, i + 1)).collect(),
            None,
            0,
        )
        .unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let g = path_graph(6);
        for kind in [AugmentationKind::NodeDrop, AugmentationKind::EdgeDrop, AugmentationKind::NodeAndEdge] {
            let spec = AugmentationSpec::new(kind, 0.0).unwrap();
            assert_eq!(augment(&g, &spec, &mut rng(0)), g);
        }
    }

    #[test]
    fn certain_edge_drop_keeps_nodes() {
        let g = path_graph(5);
        let spec = AugmentationSpec::new(AugmentationKind::EdgeDrop, 1.0).unwrap();
        let out = augment(&g, &spec, &mut rng(1));
        assert_eq!(out.num_nodes, 5);
        assert!(out.edges.is_empty());
        assert_eq!(out.node_features, g.node_features);
    }

    #[test]
    fn certain_node_drop_retains_one_node() {
        let g = path_graph(4);
        let spec = AugmentationSpec::new(AugmentationKind::NodeDrop, 1.0).unwrap();
        let out = augment(&g, &spec, &mut rng(2));
        assert_eq!(out.num_nodes, 1);
        assert!(out.edges.is_empty());
        assert!(out.validate().is_ok());
    }

    #[test]
    fn edge_survival_matches_binomial_mean() {
        let g = path_graph(101); // 100 edges
        let spec = AugmentationSpec::new(AugmentationKind::EdgeDrop, 0.1).unwrap();
        let mut total = 0usize;
        let mut r = rng(3);
        for _ in 0..10_000 {
            total += augment(&g, &spec, &mut r).num_edges();
        }
        let mean = total as f64 / 10_000.0;
        assert!((mean - 90.0).abs() < 1.0, "mean surviving edges {}", mean);
    }

    #[test]
    fn node_drop_keeps_feature_alignment() {
        let g = path_graph(8);
        let spec = AugmentationSpec::new(AugmentationKind::NodeDrop, 0.4).unwrap();
        let mut r = rng(4);
        for _ in 0..200 {
            let out = augment(&g, &spec, &mut r);
            assert!(out.validate().is_ok());
            // surviving features must be a subsequence of the original rows
            let mut cursor = 0usize;
            for i in 0..out.num_nodes {
                let row = out.node_features.row(i);
                let mut found = false;
                while cursor < g.num_nodes {
                    if g.node_features.row(cursor) == row {
                        found = true;
                        cursor += 1;
                        break;
                    }
                    cursor += 1;
                }
                assert!(found, "row {} not in original order", i);
            }
        }
    }

    #[test]
    fn edge_features_filtered_in_sync() {
        let g = Graph::new(
            4,
            Tensor::matrix(4, 1, vec![1.0; 4]).unwrap(),
            vec![(0, 1), (1, 2), (2, 3)],
            Some(Tensor::matrix(3, 1, vec![10.0, 20.0, 30.0]).unwrap()),
            0,
        )
        .unwrap();
        let spec = AugmentationSpec::new(AugmentationKind::EdgeDrop, 0.5).unwrap();
        let mut r = rng(5);
        for _ in 0..100 {
            let out = augment(&g, &spec, &mut r);
            let ef = out.edge_features.as_ref().unwrap();
            assert_eq!(ef.rows(), out.num_edges());
            for (i, &(u, v)) in out.edges.iter().enumerate() {
                let orig = g.edges.iter().position(|&e| e == (u, v)).unwrap();
                assert_eq!(ef.row(i), g.edge_features.as_ref().unwrap().row(orig));
            }
        }
    }

    #[test]
    fn out_of_range_probability_rejected() {
        assert!(AugmentationSpec::new(AugmentationKind::EdgeDrop, -0.1).is_err());
        assert!(AugmentationSpec::new(AugmentationKind::EdgeDrop, 1.1).is_err());
    }
}
