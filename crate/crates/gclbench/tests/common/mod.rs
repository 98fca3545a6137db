//! Helpers shared by the integration suites: a central finite-difference
//! gradient oracle (independent of the tape's own backward pass) and a
//! backtracking subgraph-isomorphism search used to audit the synthetic
//! generator.

#![allow(dead_code)]

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gclbench::autodiff::{BnMode, RunningStats, Tape, Tensor, TensorId};
use gclbench::data::Graph;
use gclbench::encoder::{encode_graphs_eval, encode_on_tape, init_encoder, EncoderConfig, GraphBatch};
use gclbench::gcl::{augment, info_nce_on_tape, AugmentationKind, AugmentationSpec};
use gclbench::rng::RngFactory;
use gclbench::synth::{generate_dataset, SyntheticConfig};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// Disagreement between analytic and numeric derivatives, scaled by the
/// larger magnitude but floored at one so near-zero gradients are compared
/// absolutely instead of amplifying finite-difference noise.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

pub fn randn_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn randn_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, randn_vec(rng, rows * cols)).expect("shape")
}

fn scalar_loss(tape: &mut Tape, out: TensorId) -> TensorId {
    if tape.value(out).shape().is_empty() {
        out
    } else {
        tape.mean_reduce(out).expect("reduce to scalar")
    }
}

fn loss_value(work: &[Tensor], forward: &mut dyn FnMut(&mut Tape, &[TensorId]) -> TensorId) -> f64 {
    let mut tape = Tape::new();
    let ids: Vec<TensorId> = work.iter().map(|t| tape.param(t).expect("record param")).collect();
    let out = forward(&mut tape, &ids);
    let loss = scalar_loss(&mut tape, out);
    tape.value(loss).scalar_value()
}

/// Compare the tape's gradients against central differences for every
/// coordinate of every input; inputs are recorded as parameters and the
/// forward result is mean-reduced to a scalar when necessary. Returns the
/// number of coordinates checked.
pub fn check_gradients(
    name: &str,
    inputs: &[Tensor],
    forward: &mut dyn FnMut(&mut Tape, &[TensorId]) -> TensorId,
) -> usize {
    let (grads, ids) = {
        let mut tape = Tape::new();
        let ids: Vec<TensorId> =
            inputs.iter().map(|t| tape.param(t).expect("record param")).collect();
        let out = forward(&mut tape, &ids);
        let loss = scalar_loss(&mut tape, out);
        (tape.backward(loss).expect("backward"), ids)
    };

    let mut work: Vec<Tensor> = inputs.to_vec();
    let mut checked = 0;
    for k in 0..inputs.len() {
        let analytic = grads.get_or_zeros(ids[k], inputs[k].shape());
        for j in 0..inputs[k].values().len() {
            work[k].values_mut()[j] += FD_STEP;
            let plus = loss_value(&work, forward);
            work[k].values_mut()[j] -= 2.0 * FD_STEP;
            let minus = loss_value(&work, forward);
            work[k].values_mut()[j] += FD_STEP;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic.values()[j];
            let e = rel_err(a, fd);
            assert!(
                e < FD_TOL,
                "{}: input {} coordinate {}: analytic {} vs central difference {} (err {})",
                name,
                k,
                j,
                a,
                fd,
                e
            );
            checked += 1;
        }
    }
    checked
}

/// One finite-difference check per differentiable tape operation, each on
/// small seeded random inputs. Leaf recording (`constant`, `param`) has no
/// gradient path of its own and is exercised by every entry.
pub fn op_gradchecks() -> Vec<(&'static str, Box<dyn Fn() -> usize>)> {
    let stream = |tag: &str| RngFactory::new(11, "gradcheck").stream(tag);
    let mut suite: Vec<(&'static str, Box<dyn Fn() -> usize>)> = Vec::new();

    let mut rng = stream("matmul");
    let (a, b) = (randn_matrix(&mut rng, 3, 4), randn_matrix(&mut rng, 4, 2));
    suite.push((
        "matmul",
        Box::new(move || {
            check_gradients("matmul", &[a.clone(), b.clone()], &mut |t, ids| {
                t.matmul(ids[0], ids[1]).unwrap()
            })
        }),
    ));

    let mut rng = stream("transpose");
    let a = randn_matrix(&mut rng, 3, 5);
    suite.push((
        "transpose",
        Box::new(move || {
            check_gradients("transpose", &[a.clone()], &mut |t, ids| {
                // compose with matmul so the transposed value feeds arithmetic
                let at = t.transpose(ids[0]).unwrap();
                t.matmul(at, ids[0]).unwrap()
            })
        }),
    ));

    let mut rng = stream("add");
    let (a, b) = (randn_matrix(&mut rng, 3, 4), randn_matrix(&mut rng, 3, 4));
    suite.push((
        "add",
        Box::new(move || {
            check_gradients("add", &[a.clone(), b.clone()], &mut |t, ids| {
                t.add(ids[0], ids[1]).unwrap()
            })
        }),
    ));

    let mut rng = stream("add-bias");
    let a = randn_matrix(&mut rng, 4, 3);
    let b = Tensor::vector(randn_vec(&mut rng, 3));
    suite.push((
        "add-bias",
        Box::new(move || {
            check_gradients("add-bias", &[a.clone(), b.clone()], &mut |t, ids| {
                t.add_bias(ids[0], ids[1]).unwrap()
            })
        }),
    ));

    let mut rng = stream("multiply");
    let (a, b) = (randn_matrix(&mut rng, 2, 5), randn_matrix(&mut rng, 2, 5));
    suite.push((
        "multiply",
        Box::new(move || {
            check_gradients("multiply", &[a.clone(), b.clone()], &mut |t, ids| {
                t.mul(ids[0], ids[1]).unwrap()
            })
        }),
    ));

    let mut rng = stream("scale");
    let a = randn_matrix(&mut rng, 3, 3);
    suite.push((
        "scale",
        Box::new(move || {
            check_gradients("scale", &[a.clone()], &mut |t, ids| t.scale(ids[0], -1.7).unwrap())
        }),
    ));

    let mut rng = stream("relu");
    let mut v = randn_vec(&mut rng, 12);
    for x in &mut v {
        // keep inputs away from the kink where the derivative jumps
        *x += 0.3 * x.signum();
    }
    let a = Tensor::matrix(3, 4, v).unwrap();
    suite.push((
        "relu",
        Box::new(move || check_gradients("relu", &[a.clone()], &mut |t, ids| t.relu(ids[0]).unwrap())),
    ));

    let mut rng = stream("softplus");
    let a = randn_matrix(&mut rng, 3, 4);
    suite.push((
        "softplus",
        Box::new(move || {
            check_gradients("softplus", &[a.clone()], &mut |t, ids| t.softplus(ids[0]).unwrap())
        }),
    ));

    let mut rng = stream("exp");
    let a = randn_matrix(&mut rng, 3, 3);
    suite.push((
        "exp",
        Box::new(move || check_gradients("exp", &[a.clone()], &mut |t, ids| t.exp(ids[0]).unwrap())),
    ));

    let mut rng = stream("log");
    let v: Vec<f64> = randn_vec(&mut rng, 9).into_iter().map(|x| 0.3 + x.abs()).collect();
    let a = Tensor::matrix(3, 3, v).unwrap();
    suite.push((
        "log",
        Box::new(move || check_gradients("log", &[a.clone()], &mut |t, ids| t.log(ids[0]).unwrap())),
    ));

    let mut rng = stream("sum-reduce");
    let a = randn_matrix(&mut rng, 3, 4);
    suite.push((
        "sum-reduce",
        Box::new(move || {
            check_gradients("sum-reduce", &[a.clone()], &mut |t, ids| {
                // square first so the gradient is input-dependent
                let sq = t.mul(ids[0], ids[0]).unwrap();
                t.sum_reduce(sq).unwrap()
            })
        }),
    ));

    let mut rng = stream("mean-reduce");
    let a = randn_matrix(&mut rng, 4, 3);
    suite.push((
        "mean-reduce",
        Box::new(move || {
            check_gradients("mean-reduce", &[a.clone()], &mut |t, ids| {
                let sq = t.mul(ids[0], ids[0]).unwrap();
                t.mean_reduce(sq).unwrap()
            })
        }),
    ));

    let mut rng = stream("row-sum");
    let a = randn_matrix(&mut rng, 4, 3);
    suite.push((
        "row-sum",
        Box::new(move || {
            check_gradients("row-sum", &[a.clone()], &mut |t, ids| {
                let sq = t.mul(ids[0], ids[0]).unwrap();
                t.row_sum(sq).unwrap()
            })
        }),
    ));

    let mut rng = stream("concatenate");
    let (a, b) = (randn_matrix(&mut rng, 3, 2), randn_matrix(&mut rng, 3, 4));
    suite.push((
        "concatenate",
        Box::new(move || {
            check_gradients("concatenate", &[a.clone(), b.clone()], &mut |t, ids| {
                let c = t.concat_cols(&[ids[0], ids[1]]).unwrap();
                let sq = t.mul(c, c).unwrap();
                t.mean_reduce(sq).unwrap()
            })
        }),
    ));

    let mut rng = stream("row-gather");
    let a = randn_matrix(&mut rng, 5, 3);
    suite.push((
        "row-gather",
        Box::new(move || {
            check_gradients("row-gather", &[a.clone()], &mut |t, ids| {
                // a repeated row checks gradient accumulation
                let g = t.row_gather(ids[0], &[4, 0, 2, 2]).unwrap();
                let sq = t.mul(g, g).unwrap();
                t.mean_reduce(sq).unwrap()
            })
        }),
    ));

    let mut rng = stream("scatter-sum");
    let a = randn_matrix(&mut rng, 6, 2);
    suite.push((
        "scatter-sum",
        Box::new(move || {
            check_gradients("scatter-sum", &[a.clone()], &mut |t, ids| {
                let s = t.scatter_sum(ids[0], &[0, 1, 0, 2, 1, 0], 3).unwrap();
                let sq = t.mul(s, s).unwrap();
                t.mean_reduce(sq).unwrap()
            })
        }),
    ));

    let mut rng = stream("cosine-similarity");
    let (a, b) = (randn_matrix(&mut rng, 3, 4), randn_matrix(&mut rng, 2, 4));
    suite.push((
        "cosine-similarity",
        Box::new(move || {
            check_gradients("cosine-similarity", &[a.clone(), b.clone()], &mut |t, ids| {
                t.cosine_similarity(ids[0], ids[1]).unwrap()
            })
        }),
    ));

    let mut rng = stream("batch-norm");
    let x = randn_matrix(&mut rng, 5, 3);
    let gamma = Tensor::vector(randn_vec(&mut rng, 3).into_iter().map(|v| 1.0 + 0.2 * v).collect());
    let beta = Tensor::vector(randn_vec(&mut rng, 3));
    suite.push((
        "batch-norm",
        Box::new(move || {
            check_gradients("batch-norm", &[x.clone(), gamma.clone(), beta.clone()], &mut |t, ids| {
                let mut rs = RunningStats::new(3);
                let y = t.batch_norm(ids[0], ids[1], ids[2], &mut rs, BnMode::Train).unwrap();
                let sq = t.mul(y, y).unwrap();
                t.mean_reduce(sq).unwrap()
            })
        }),
    ));

    suite
}

/// Everything needed to evaluate the full contrastive forward pass as a
/// plain function of its parameters.
pub struct EndToEnd {
    config: EncoderConfig,
    batch1: GraphBatch,
    batch2: GraphBatch,
    head: [Tensor; 4],
    temperature: f64,
}

pub struct E2eReport {
    pub coords_checked: usize,
    pub max_rel_err: f64,
}

impl EndToEnd {
    /// Four synthetic graphs, two augmented views each, a GIN encoder of the
    /// given width, and a linear-relu-linear head feeding the contrastive
    /// loss.
    pub fn new(layers: usize, hidden: usize, proj: usize) -> Self {
        let dataset = generate_dataset(&SyntheticConfig::new(2, 12, 41)).expect("synthetic batch");
        let graphs: Vec<&Graph> = dataset.graphs.iter().take(4).collect();
        let spec = AugmentationSpec::new(AugmentationKind::NodeAndEdge, 0.2).expect("probability");
        let factory = RngFactory::new(7, "fd-end-to-end");
        let mut r1 = factory.stream("aug-1");
        let mut r2 = factory.stream("aug-2");
        let view1: Vec<Graph> = graphs.iter().map(|g| augment(g, &spec, &mut r1)).collect();
        let view2: Vec<Graph> = graphs.iter().map(|g| augment(g, &spec, &mut r2)).collect();
        let batch1 = GraphBatch::from_graphs(&view1.iter().collect::<Vec<_>>()).expect("batch");
        let batch2 = GraphBatch::from_graphs(&view2.iter().collect::<Vec<_>>()).expect("batch");

        let mut config = EncoderConfig::gin(dataset.node_feature_dim(), 17);
        config.layers = layers;
        config.hidden_dim = hidden;
        let emb = config.embedding_dim();

        let mut hrng = factory.stream("head-init");
        let scaled = |rng: &mut ChaCha8Rng, n: usize, s: f64| -> Vec<f64> {
            randn_vec(rng, n).into_iter().map(|v| s * v).collect()
        };
        let head = [
            Tensor::matrix(emb, proj, scaled(&mut hrng, emb * proj, 1.0 / (emb as f64).sqrt()))
                .unwrap(),
            Tensor::vector(scaled(&mut hrng, proj, 0.1)),
            Tensor::matrix(proj, proj, scaled(&mut hrng, proj * proj, 1.0 / (proj as f64).sqrt()))
                .unwrap(),
            Tensor::vector(scaled(&mut hrng, proj, 0.1)),
        ];
        Self { config, batch1, batch2, head, temperature: 0.2 }
    }

    fn forward(
        &self,
        params: &mut gclbench::encoder::EncoderParams,
    ) -> (Tape, Vec<TensorId>, Vec<TensorId>, [TensorId; 4], TensorId) {
        let mut tape = Tape::new();
        let e1 = encode_on_tape(&mut tape, params, &self.config, &self.batch1, BnMode::Train)
            .expect("view 1");
        let e2 = encode_on_tape(&mut tape, params, &self.config, &self.batch2, BnMode::Train)
            .expect("view 2");
        let w1 = tape.param(&self.head[0]).unwrap();
        let b1 = tape.param(&self.head[1]).unwrap();
        let w2 = tape.param(&self.head[2]).unwrap();
        let b2 = tape.param(&self.head[3]).unwrap();
        let project = |tape: &mut Tape, x: TensorId| {
            let a = tape.matmul(x, w1).unwrap();
            let a = tape.add_bias(a, b1).unwrap();
            let a = tape.relu(a).unwrap();
            let a = tape.matmul(a, w2).unwrap();
            tape.add_bias(a, b2).unwrap()
        };
        let z1 = project(&mut tape, e1.output);
        let z2 = project(&mut tape, e2.output);
        let loss =
            info_nce_on_tape(&mut tape, z1, z2, self.temperature).expect("contrastive loss");
        (tape, e1.param_ids, e2.param_ids, [w1, b1, w2, b2], loss)
    }

    /// Check `budget` parameter coordinates (all of them when `None`)
    /// against central differences.
    pub fn run(mut self, budget: Option<usize>) -> E2eReport {
        let mut params = init_encoder(&self.config).expect("init");
        let (tape, ids1, ids2, head_ids, loss) = self.forward(&mut params);
        let grads = tape.backward(loss).expect("backward");

        // per-tensor analytic gradients; encoder tensors appear in both
        // views, so their two contributions add
        let enc_shapes: Vec<Vec<usize>> =
            params.param_tensors().iter().map(|t| t.shape().to_vec()).collect();
        let mut analytic: Vec<Tensor> = Vec::new();
        for (k, shape) in enc_shapes.iter().enumerate() {
            let mut g = grads.get_or_zeros(ids1[k], shape);
            let g2 = grads.get_or_zeros(ids2[k], shape);
            for (a, b) in g.values_mut().iter_mut().zip(g2.values()) {
                *a += b;
            }
            analytic.push(g);
        }
        for (h, id) in head_ids.iter().enumerate() {
            analytic.push(grads.get_or_zeros(*id, self.head[h].shape()));
        }

        let num_enc = enc_shapes.len();
        let mut coords: Vec<(usize, usize)> = Vec::new();
        for (k, g) in analytic.iter().enumerate() {
            for j in 0..g.values().len() {
                coords.push((k, j));
            }
        }
        if let Some(b) = budget {
            let mut rng = RngFactory::new(13, "fd-end-to-end").stream("coord-sample");
            let total = coords.len();
            coords = (0..b.min(total)).map(|_| coords[rng.random_range(0..total)]).collect();
        }

        let poke = |params: &mut gclbench::encoder::EncoderParams,
                        head: &mut [Tensor; 4],
                        k: usize,
                        j: usize,
                        delta: f64| {
            if k < num_enc {
                params.param_tensors_mut()[k].values_mut()[j] += delta;
            } else {
                head[k - num_enc].values_mut()[j] += delta;
            }
        };

        let mut max_err = 0.0f64;
        let total = coords.len();
        for (k, j) in coords {
            let mut head = self.head.clone();
            poke(&mut params, &mut head, k, j, FD_STEP);
            self.head = head.clone();
            let plus = {
                let (tape, _, _, _, loss) = self.forward(&mut params);
                tape.value(loss).scalar_value()
            };
            poke(&mut params, &mut head, k, j, -2.0 * FD_STEP);
            self.head = head.clone();
            let minus = {
                let (tape, _, _, _, loss) = self.forward(&mut params);
                tape.value(loss).scalar_value()
            };
            poke(&mut params, &mut head, k, j, FD_STEP);
            self.head = head;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[k].values()[j];
            let e = rel_err(a, fd);
            assert!(
                e < FD_TOL,
                "end-to-end: tensor {} coordinate {}: analytic {} vs central difference {} (err {})",
                k,
                j,
                a,
                fd,
                e
            );
            max_err = max_err.max(e);
        }
        E2eReport { coords_checked: total, max_rel_err: max_err }
    }
}

/// Relabel nodes by `perm` (new id `perm[old]`), restoring canonical edge
/// order and carrying edge features along with their edges.
pub fn permute_graph(g: &Graph, perm: &[usize]) -> Graph {
    assert_eq!(perm.len(), g.num_nodes);
    let d = g.feature_dim();
    let mut feats = vec![0.0; g.num_nodes * d];
    for old in 0..g.num_nodes {
        feats[perm[old] * d..(perm[old] + 1) * d].copy_from_slice(g.node_features.row(old));
    }
    let mut edges: Vec<((usize, usize), usize)> = g
        .edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| {
            let (a, b) = (perm[u], perm[v]);
            (if a < b { (a, b) } else { (b, a) }, i)
        })
        .collect();
    edges.sort_unstable();
    let edge_features = g.edge_features.as_ref().map(|ef| {
        let w = ef.cols();
        let mut rows = vec![0.0; edges.len() * w];
        for (new_i, &(_, old_i)) in edges.iter().enumerate() {
            rows[new_i * w..(new_i + 1) * w].copy_from_slice(ef.row(old_i));
        }
        Tensor::matrix(edges.len(), w, rows).expect("edge feature shape")
    });
    Graph::new(
        g.num_nodes,
        Tensor::matrix(g.num_nodes, d, feats).expect("node feature shape"),
        edges.into_iter().map(|(e, _)| e).collect(),
        edge_features,
        g.label,
    )
    .expect("permuted graph is valid")
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    perm
}

/// A connected graph with varied node features: a random tree plus a few
/// chords, features standard normal.
pub fn random_connected_graph(n: usize, extra: usize, dim: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    for i in 1..n {
        edge_set.insert((rng.random_range(0..i), i));
    }
    let mut added = 0;
    while added < extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if edge_set.insert(e) {
            added += 1;
        }
    }
    let mut edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
    edges.sort_unstable();
    let feats = Tensor::matrix(n, dim, randn_vec(rng, n * dim)).unwrap();
    Graph::new(n, feats, edges, None, 0).unwrap()
}

/// Largest absolute embedding deviation under node relabeling, across
/// `num_graphs * perms_each` random permutations of random graphs.
pub fn encoder_isomorphism_max_dev(num_graphs: usize, perms_each: usize) -> f64 {
    let mut rng = RngFactory::new(23, "invariance").stream("graphs");
    let config = EncoderConfig::gin(6, 99);
    let params = init_encoder(&config).expect("init");
    let mut worst = 0.0f64;
    for gi in 0..num_graphs {
        let n = 8 + 3 * gi;
        let g = random_connected_graph(n, 4, 6, &mut rng);
        let base = encode_graphs_eval(&params, &config, &[&g]).expect("encode");
        for _ in 0..perms_each {
            let perm = random_permutation(n, &mut rng);
            let pg = permute_graph(&g, &perm);
            let alt = encode_graphs_eval(&params, &config, &[&pg]).expect("encode permuted");
            for (a, b) in base.values().iter().zip(alt.values()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

/// Panics with a description if the graph's cyclic-motif signature is
/// inconsistent with its class. The background tree and single bridge edge
/// keep every cycle inside the motif, so the signature over
/// {triangle, 4-cycle, 4-clique, 5-cycle} pins classes 0-3 down exactly,
/// and the star/path classes must be acyclic while containing their own
/// motif.
pub fn assert_motif_signature(g: &Graph, context: &str) {
    let motifs = gclbench::synth::standard_motifs();
    let adj = g.adjacency();
    let own = &motifs[g.label];
    assert!(
        motif_embeds(own.num_nodes, &own.edges, &adj),
        "{}: class {} graph does not contain its own motif",
        context,
        g.label
    );
    let hit = |class: usize| {
        let m = &motifs[class];
        motif_embeds(m.num_nodes, &m.edges, &adj)
    };
    let sig = (hit(0), hit(1), hit(2), hit(3));
    let expect = match g.label {
        0 => (true, false, false, false),
        1 => (false, true, false, false),
        2 => (true, true, true, false),
        3 => (false, false, false, true),
        4 | 5 => (false, false, false, false),
        other => panic!("{}: unexpected class {}", context, other),
    };
    assert_eq!(sig, expect, "{}: cyclic signature for class {}", context, g.label);
    if g.label >= 4 {
        assert_eq!(g.num_edges(), g.num_nodes - 1, "{}: class {} should be a tree", context, g.label);
    }
}

/// Does the motif (nodes `0..m`, undirected edge list) embed injectively
/// into the graph given by `adj`, preserving adjacency? Plain backtracking
/// over a breadth-first motif ordering; fine for motifs of a handful of
/// nodes.
pub fn motif_embeds(m: usize, motif_edges: &[(usize, usize)], adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if m == 0 {
        return true;
    }
    if m > n {
        return false;
    }
    let mut madj = vec![Vec::new(); m];
    for &(u, v) in motif_edges {
        madj[u].push(v);
        madj[v].push(u);
    }

    // breadth-first order so every vertex after the first has a placed
    // neighbor, keeping the branching factor near the graph degree
    let mut order = vec![0usize];
    let mut seen = vec![false; m];
    seen[0] = true;
    let mut q = 0;
    while q < order.len() {
        for &nb in &madj[order[q]] {
            if !seen[nb] {
                seen[nb] = true;
                order.push(nb);
            }
        }
        q += 1;
    }
    assert_eq!(order.len(), m, "motifs must be connected");

    let sets: Vec<HashSet<usize>> = adj.iter().map(|v| v.iter().copied().collect()).collect();
    let mut assign = vec![usize::MAX; m];
    let mut used = vec![false; n];

    fn place(
        step: usize,
        order: &[usize],
        madj: &[Vec<usize>],
        adj: &[Vec<usize>],
        sets: &[HashSet<usize>],
        assign: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if step == order.len() {
            return true;
        }
        let v = order[step];
        // candidates: whole graph for the anchor, else neighbors of an
        // already-placed motif neighbor
        let anchor = madj[v].iter().find(|&&u| assign[u] != usize::MAX);
        let candidates: Vec<usize> = match anchor {
            Some(&u) => adj[assign[u]].clone(),
            None => (0..adj.len()).collect(),
        };
        for t in candidates {
            if used[t] || adj[t].len() < madj[v].len() {
                continue;
            }
            if madj[v]
                .iter()
                .any(|&u| assign[u] != usize::MAX && !sets[t].contains(&assign[u]))
            {
                continue;
            }
            assign[v] = t;
            used[t] = true;
            if place(step + 1, order, madj, adj, sets, assign, used) {
                return true;
            }
            assign[v] = usize::MAX;
            used[t] = false;
        }
        false
    }

    place(0, &order, &madj, adj, &sets, &mut assign, &mut used)
}
