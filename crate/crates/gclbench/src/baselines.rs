//! Non-neural baseline feature maps: handcrafted graph statistics, their
//! ablations, a random-Gaussian control, and per-fold standardization.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::Graph;
use crate::rng::RngFactory;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, BaselineError>;

/// Six ascending boundaries defining five degree bins; the first five bins
/// are right-open and the last is closed at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    edges: [f64; 6],
}

impl BinEdges {
    pub fn edges(&self) -> &[f64; 6] {
        &self.edges
    }

    fn bin_of(&self, degree: usize) -> usize {
        let d = degree as f64;
        for i in 0..4 {
            if d < self.edges[i + 1] {
                return i;
            }
        }
        4
    }
}

/// Fit five equal-width bins over `[0, max training degree]`; a degenerate
/// all-isolated training fold falls back to unit-width edges.
pub fn compute_bin_edges(graphs: &[&Graph]) -> Result<BinEdges> {
    if graphs.is_empty() {
        return Err(BaselineError::EmptyInput("no training graphs for bin edges"));
    }
    let max_degree = graphs
        .iter()
        .flat_map(|g| g.degrees())
        .max()
        .expect("graphs are nonempty");
    let edges = if max_degree == 0 {
        [0.0, 1.0, 2.0, 3.0, 4.0, f64::INFINITY]
    } else {
        let w = max_degree as f64 / 5.0;
        [0.0, w, 2.0 * w, 3.0 * w, 4.0 * w, f64::INFINITY]
    };
    Ok(BinEdges { edges })
}

/// Node count, mean degree, and a five-bin degree histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct StatDescriptor {
    pub node_count: f64,
    pub mean_degree: f64,
    pub histogram: [f64; 5],
}

impl StatDescriptor {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.node_count, self.mean_degree];
        v.extend_from_slice(&self.histogram);
        v
    }
}

/// Seven-dimensional statistics descriptor of an undirected graph: mean
/// degree is `2|E|/|V|`, and the histogram counts node degrees into the
/// bins then normalizes by `|V|`.
pub fn handcrafted_features(graph: &Graph, edges: &BinEdges) -> StatDescriptor {
    let n = graph.num_nodes as f64;
    let mut histogram = [0.0; 5];
    for d in graph.degrees() {
        histogram[edges.bin_of(d)] += 1.0;
    }
    for b in &mut histogram {
        *b /= n;
    }
    StatDescriptor {
        node_count: n,
        mean_degree: 2.0 * graph.edges.len() as f64 / n,
        histogram,
    }
}

/// Sub-vector selectors for the handcrafted descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationKind {
    NodeCount,
    AvgDegree,
    DegHistogram,
    All,
}

impl AblationKind {
    pub fn name(&self) -> &'static str {
        match self {
            AblationKind::NodeCount => "node-count",
            AblationKind::AvgDegree => "avg-degree",
            AblationKind::DegHistogram => "deg-histogram",
            AblationKind::All => "all",
        }
    }
}

/// Project the descriptor onto one of its components (or keep all seven).
pub fn ablation_features(graph: &Graph, edges: &BinEdges, which: AblationKind) -> Vec<f64> {
    let d = handcrafted_features(graph, edges);
    match which {
        AblationKind::NodeCount => vec![d.node_count],
        AblationKind::AvgDegree => vec![d.mean_degree],
        AblationKind::DegHistogram => d.histogram.to_vec(),
        AblationKind::All => d.to_vec(),
    }
}

/// Standard-normal control vector, fixed per `(graph id, seed)`.
pub fn random_features(dim: usize, graph_id: u64, seed: u64) -> Vec<f64> {
    assert!(dim >= 1, "random feature dimension must be >= 1");
    let factory = RngFactory::new(seed, "random-baseline");
    let mut rng = factory.stream_indexed("random-baseline", graph_id);
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Per-feature training-fold mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Fit a per-feature z-scaler on the training fold (population std).
pub fn standardize_fit(rows: &[Vec<f64>]) -> Result<ScalerParams> {
    if rows.is_empty() {
        return Err(BaselineError::EmptyInput("no rows to fit a scaler on"));
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(BaselineError::Shape(format!(
            "row of width {} in a matrix of width {}",
            bad.len(),
            dim
        )));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(ScalerParams { mean, std })
}

/// Apply a fitted scaler; zero-variance features pass through untouched.
pub fn standardize_apply(params: &ScalerParams, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(&params.mean)
                .zip(&params.std)
                .map(|((x, m), s)| if *s == 0.0 { *x } else { (x - m) / s })
                .collect()
        })
        .collect()
}

/// Write one feature row per graph as CSV with header `graph_id,f0,...`.
pub fn write_feature_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() {
        return Err(BaselineError::EmptyInput("no feature rows to write"));
    }
    let dim = rows[0].len();
    let mut out = String::new();
    out.push_str("graph_id");
    for j in 0..dim {
        out.push_str(&format!(",f{}", j));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(BaselineError::Shape(format!(
                "row {} has width {}, expected {}",
                i,
                r.len(),
                dim
            )));
        }
        out.push_str(&i.to_string());
        for x in r {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Read a feature CSV produced by [`write_feature_csv`]; rows must appear in
/// graph-id order starting at zero.
pub fn read_feature_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(BaselineError::EmptyInput("feature csv"))?;
    if !header.starts_with("graph_id") {
        return Err(BaselineError::Parse {
            line: 1,
            detail: format!("expected graph_id header, found {:?}", header),
        });
    }
    let dim = header.split(',').count() - 1;
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id: usize = fields
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|e| BaselineError::Parse { line: idx + 1, detail: format!("graph id: {}", e) })?;
        if id != rows.len() {
            return Err(BaselineError::Parse {
                line: idx + 1,
                detail: format!("expected graph id {}, found {}", rows.len(), id),
            });
        }
        let row: Vec<f64> = fields
            .map(|f| {
                f.trim().parse().map_err(|e| BaselineError::Parse {
                    line: idx + 1,
                    detail: format!("feature value: {}", e),
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(BaselineError::Parse {
                line: idx + 1,
                detail: format!("{} features, header promises {}", row.len(), dim),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
