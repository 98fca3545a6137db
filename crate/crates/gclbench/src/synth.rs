//! Synthetic graph classification with a controllable size/complexity dial.
//!
//! Each graph is a class-defining motif attached to a class-agnostic random
//! background tree by a single bridge edge. The style multiplier `S` sets the
//! background size to `S * m` nodes for a motif of `m` nodes, so every graph
//! of a class has exactly `m * (S + 1)` nodes. All nodes carry the same
//! constant feature vector (value 1), leaving structure as the only signal.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::data::{DataError, Graph, GraphDataset};
use crate::rng::RngFactory;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("dataset size {size} is not divisible by {classes} classes")]
    SizeNotDivisible { size: usize, classes: usize },
    #[error("style multiplier S must be >= 1")]
    ZeroMultiplier,
    #[error("random tree needs at least one node")]
    EmptyTree,
    #[error("{requested} classes requested but only {available} motifs are defined")]
    TooManyClasses { requested: usize, available: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A class-defining motif: a small connected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifSpec {
    pub class_id: usize,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl MotifSpec {
    pub fn name(&self) -> &'static str {
        match self.class_id {
            0 => "triangle",
            1 => "four-cycle",
            2 => "four-clique",
            3 => "five-cycle",
            4 => "four-star",
            5 => "five-path",
            _ => "custom",
        }
    }
}

/// The six shipped motifs, pairwise non-isomorphic and connected:
/// triangle, 4-cycle, 4-clique, 5-cycle, 4-star (5 nodes), 5-path.
pub fn standard_motifs() -> Vec<MotifSpec> {
    let m = |class_id, num_nodes, edges: Vec<(usize, usize)>| MotifSpec { class_id, num_nodes, edges };
    vec![
        m(0, 3, vec![(0, 1), (0, 2), (1, 2)]),
        m(1, 4, vec![(0, 1), (0, 3), (1, 2), (2, 3)]),
        m(2, 4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        m(3, 5, vec![(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]),
        m(4, 5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]),
        m(5, 5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticConfig {
    /// Style multiplier `S >= 1`; the background tree has `S * m` nodes.
    pub s: usize,
    pub total_size: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(s: usize, total_size: usize, seed: u64) -> Self {
        Self { s, total_size, num_classes: 6, feature_dim: 10, seed }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.s == 0 {
            return Err(SynthError::ZeroMultiplier);
        }
        let motifs = standard_motifs().len();
        if self.num_classes == 0 || self.num_classes > motifs {
            return Err(SynthError::TooManyClasses {
                requested: self.num_classes,
                available: motifs,
            });
        }
        if self.total_size % self.num_classes != 0 {
            return Err(SynthError::SizeNotDivisible {
                size: self.total_size,
                classes: self.num_classes,
            });
        }
        Ok(())
    }
}

/// Uniform random recursive-attachment tree on `n` nodes: node `i` (for
/// `i >= 1`) attaches to a parent drawn uniformly from `[0, i)`. Returns the
/// `n - 1` edges as `(parent, child)` pairs.
pub fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, SynthError> {
    if n == 0 {
        return Err(SynthError::EmptyTree);
    }
    let mut edges = Vec::with_capacity(n - 1);
    for i in 1..n {
        let parent = rng.random_range(0..i);
        edges.push((parent, i));
    }
    Ok(edges)
}

/// One motif-plus-background graph.
///
/// Layout: motif nodes occupy ids `0..m`, background-tree nodes `m..m(S+1)`.
/// The stream is consumed in a fixed order (tree parents, then the bridge's
/// motif endpoint, then its tree endpoint), so output is reproducible.
pub fn generate_graph(
    motif: &MotifSpec,
    s: usize,
    feature_dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Graph, SynthError> {
    if s == 0 {
        return Err(SynthError::ZeroMultiplier);
    }
    let m = motif.num_nodes;
    let tree_nodes = s * m;
    let n = m + tree_nodes;

    let mut edges = motif.edges.clone();
    for (p, c) in random_tree(tree_nodes, rng)? {
        edges.push((p + m, c + m));
    }
    let bridge_motif = rng.random_range(0..m);
    let bridge_tree = rng.random_range(0..tree_nodes) + m;
    edges.push((bridge_motif, bridge_tree));
    edges.sort_unstable();

    let features = Tensor::matrix(n, feature_dim, vec![1.0; n * feature_dim])
        .map_err(|e| DataError::InvalidGraph(e.to_string()))?;
    Ok(Graph::new(n, features, edges, None, motif.class_id)?)
}

/// A balanced dataset of `total_size` graphs.
///
/// Graph `j` of class `c` draws from the indexed stream
/// `("synth", c * per_class + j)`; the final order is a `"synth-shuffle"`
/// permutation of the class-major ordering. Both streams hang off a run
/// label that bakes in `S` and the size, so configs never share randomness.
pub fn generate_dataset(config: &SyntheticConfig) -> Result<GraphDataset, SynthError> {
    config.validate()?;
    let run = format!("synth-S{}-{}", config.s, config.total_size);
    let factory = RngFactory::new(config.seed, &run);
    let motifs = standard_motifs();
    let per_class = config.total_size / config.num_classes;

    let mut graphs = Vec::with_capacity(config.total_size);
    for c in 0..config.num_classes {
        for j in 0..per_class {
            let idx = (c * per_class + j) as u64;
            let mut rng = factory.stream_indexed("synth", idx);
            graphs.push(generate_graph(&motifs[c], config.s, config.feature_dim, &mut rng)?);
        }
    }

    let mut order: Vec<usize> = (0..graphs.len()).collect();
    {
        use rand::seq::SliceRandom;
        let mut rng = factory.stream("synth-shuffle");
        order.shuffle(&mut rng);
    }
    let mut shuffled = Vec::with_capacity(graphs.len());
    let mut slots: Vec<Option<Graph>> = graphs.into_iter().map(Some).collect();
    for &i in &order {
        shuffled.push(slots[i].take().expect("each slot moved once"));
    }

    let dataset = GraphDataset {
        graphs: shuffled,
        name: run,
        num_classes: config.num_classes,
        split: None,
    };
    dataset.validate().map_err(SynthError::Data)?;
    Ok(dataset)
}
