//! Parser and serializer for the TU-Dortmund graph dataset format.
//!
//! A dataset `NAME` in directory `dir` consists of:
//!
//! - `NAME_A.txt`: comma-separated 1-based `row, col` edge lines,
//! - `NAME_graph_indicator.txt`: 1-based graph id for every node line,
//! - `NAME_graph_labels.txt`: one integer label per graph,
//! - `NAME_node_labels.txt` (optional): one integer node label per node.
//!
//! Node labels are one-hot encoded with dimension `max label + 1`; datasets
//! without node labels get a single constant feature of value 1 per node.
//! Graph labels are remapped to contiguous 0-based ids in ascending order of
//! the raw values. Self-loops are dropped with a warning; duplicate edge
//! directions collapse into one undirected pair.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::graph::{canonicalize_edges, Graph, GraphDataset};
use super::{DataError, Result};
use crate::autodiff::Tensor;

struct NumberedLines {
    path: PathBuf,
    /// (1-based line number, trimmed content)
    lines: Vec<(usize, String)>,
}

fn read_lines(path: &Path) -> Result<NumberedLines> {
    let text = fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    Ok(NumberedLines { path: path.to_path_buf(), lines })
}

impl NumberedLines {
    fn parse_ints(&self) -> Result<Vec<i64>> {
        self.lines
            .iter()
            .map(|(n, l)| {
                l.parse::<i64>().map_err(|_| DataError::Parse {
                    path: self.path.clone(),
                    line: *n,
                    detail: format!("expected integer, got {:?}", l),
                })
            })
            .collect()
    }

    fn parse_pairs(&self) -> Result<Vec<(usize, i64, i64)>> {
        self.lines
            .iter()
            .map(|(n, l)| {
                let mut it = l.split(',').map(str::trim);
                let bad = || DataError::Parse {
                    path: self.path.clone(),
                    line: *n,
                    detail: format!("expected \"row, col\", got {:?}", l),
                };
                let a = it.next().ok_or_else(bad)?.parse::<i64>().map_err(|_| bad())?;
                let b = it.next().ok_or_else(bad)?.parse::<i64>().map_err(|_| bad())?;
                if it.next().is_some() {
                    return Err(bad());
                }
                Ok((*n, a, b))
            })
            .collect()
    }
}

/// Load the dataset `name` from `dir`.
pub fn parse_tu_dataset(dir: &Path, name: &str) -> Result<GraphDataset> {
    let file = |suffix: &str| dir.join(format!("{}_{}.txt", name, suffix));

    let indicator = read_lines(&file("graph_indicator"))?;
    let indicator_ids = indicator.parse_ints()?;
    let total_nodes = indicator_ids.len();
    let mut num_graphs = 0usize;
    let mut graph_of_node = Vec::with_capacity(total_nodes);
    for (&id, (line, _)) in indicator_ids.iter().zip(&indicator.lines) {
        if id < 1 {
            return Err(DataError::Parse {
                path: indicator.path.clone(),
                line: *line,
                detail: format!("graph indicator must be >= 1, got {}", id),
            });
        }
        let g = (id - 1) as usize;
        num_graphs = num_graphs.max(g + 1);
        graph_of_node.push(g);
    }

    let labels_file = read_lines(&file("graph_labels"))?;
    let raw_labels = labels_file.parse_ints()?;
    if raw_labels.len() != num_graphs {
        return Err(DataError::CountMismatch {
            detail: format!(
                "{} graph labels for {} graphs in the indicator",
                raw_labels.len(),
                num_graphs
            ),
        });
    }

    let node_labels_path = file("node_labels");
    let node_labels: Option<Vec<i64>> = if node_labels_path.exists() {
        let nl = read_lines(&node_labels_path)?;
        let vals = nl.parse_ints()?;
        if vals.len() != total_nodes {
            return Err(DataError::NodeCountMismatch {
                detail: format!(
                    "{} node labels but {} indicator lines",
                    vals.len(),
                    total_nodes
                ),
            });
        }
        if let Some(&bad) = vals.iter().find(|&&v| v < 0) {
            return Err(DataError::Parse {
                path: node_labels_path.clone(),
                line: 0,
                detail: format!("node labels must be non-negative, got {}", bad),
            });
        }
        Some(vals)
    } else {
        None
    };

    // local (within-graph) node ids, assigned in file order
    let mut node_count = vec![0usize; num_graphs];
    let mut local_id = Vec::with_capacity(total_nodes);
    for &g in &graph_of_node {
        local_id.push(node_count[g]);
        node_count[g] += 1;
    }
    if let Some(idx) = node_count.iter().position(|&c| c == 0) {
        // an indicator gap: some graph id in 1..=max never appears
        return Err(DataError::CountMismatch {
            detail: format!("graph {} has no nodes in the indicator", idx + 1),
        });
    }

    let edges_file = read_lines(&file("A"))?;
    let mut per_graph_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let mut self_loops = 0usize;
    for (line, a, b) in edges_file.parse_pairs()? {
        for &e in &[a, b] {
            if e < 1 || e as usize > total_nodes {
                return Err(DataError::UnknownNode { path: edges_file.path.clone(), line, node: e });
            }
        }
        let (ga, gb) = (graph_of_node[(a - 1) as usize], graph_of_node[(b - 1) as usize]);
        if ga != gb {
            return Err(DataError::Parse {
                path: edges_file.path.clone(),
                line,
                detail: format!("edge ({}, {}) connects nodes of graphs {} and {}", a, b, ga + 1, gb + 1),
            });
        }
        if a == b {
            self_loops += 1;
            continue;
        }
        per_graph_edges[ga].push((local_id[(a - 1) as usize], local_id[(b - 1) as usize]));
    }
    if self_loops > 0 {
        warn!("{}: dropped {} self-loop edge line(s)", name, self_loops);
    }

    // contiguous class ids in ascending raw-label order
    let mut distinct: Vec<i64> = raw_labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let class_of = |raw: i64| distinct.binary_search(&raw).expect("label present") as usize;

    let feat_dim = match &node_labels {
        Some(vals) => vals.iter().copied().max().unwrap_or(0) as usize + 1,
        None => 1,
    };

    // node labels grouped per graph, in local-id order
    let mut per_graph_nl: Vec<Vec<i64>> = vec![Vec::new(); num_graphs];
    if let Some(vals) = &node_labels {
        for (i, &g) in graph_of_node.iter().enumerate() {
            per_graph_nl[g].push(vals[i]);
        }
    }

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let n = node_count[g];
        let mut feats = vec![0.0; n * feat_dim];
        match &node_labels {
            Some(_) => {
                for (i, &lab) in per_graph_nl[g].iter().enumerate() {
                    feats[i * feat_dim + lab as usize] = 1.0;
                }
            }
            None => feats.fill(1.0),
        }
        let (edges, _) = canonicalize_edges(per_graph_edges[g].iter().copied());
        graphs.push(Graph::new(
            n,
            Tensor::matrix(n, feat_dim, feats).map_err(|e| DataError::InvalidGraph(e.to_string()))?,
            edges,
            None,
            class_of(raw_labels[g]),
        )?);
    }

    let dataset = GraphDataset {
        graphs,
        name: name.to_string(),
        num_classes: distinct.len(),
        split: None,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Serialize `dataset` into `dir` in the TU layout under `name`.
///
/// Intended for datasets whose node features are either one-hot node labels
/// or the constant scalar 1 (the two forms [`parse_tu_dataset`] produces);
/// one-hot rows are written back as their argmax label, and constant-1
/// single-column features are written featureless.
pub fn write_tu_dataset(dataset: &GraphDataset, dir: &Path, name: &str) -> Result<()> {
    let io_err = |path: &Path, source: std::io::Error| DataError::Io { path: path.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let featureless = dataset
        .graphs
        .iter()
        .all(|g| g.feature_dim() == 1 && g.node_features.values().iter().all(|&v| v == 1.0));

    let mut a = String::new();
    let mut indicator = String::new();
    let mut labels = String::new();
    let mut node_labels = String::new();
    let mut offset = 0usize; // global 1-based ids start at offset + 1
    for (gi, g) in dataset.graphs.iter().enumerate() {
        for &(u, v) in &g.edges {
            // both directions, as the common released datasets do
            writeln!(a, "{}, {}", offset + u + 1, offset + v + 1).unwrap();
            writeln!(a, "{}, {}", offset + v + 1, offset + u + 1).unwrap();
        }
        for i in 0..g.num_nodes {
            writeln!(indicator, "{}", gi + 1).unwrap();
            if !featureless {
                let row = g.node_features.row(i);
                let argmax = row
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).expect("finite features"))
                    .map(|(j, _)| j)
                    .unwrap_or(0);
                writeln!(node_labels, "{}", argmax).unwrap();
            }
        }
        writeln!(labels, "{}", g.label).unwrap();
        offset += g.num_nodes;
    }

    let write = |suffix: &str, body: &str| -> Result<()> {
        let path = dir.join(format!("{}_{}.txt", name, suffix));
        fs::write(&path, body).map_err(|e| io_err(&path, e))
    };
    write("A", &a)?;
    write("graph_indicator", &indicator)?;
    write("graph_labels", &labels)?;
    if !featureless {
        write("node_labels", &node_labels)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, name: &str, files: &[(&str, &str)]) {
        for (suffix, body) in files {
            fs::write(dir.join(format!("{}_{}.txt", name, suffix)), body).unwrap();
        }
    }

    #[test]
    fn two_graph_example() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(
            tmp.path(),
            "T",
            &[("A", "1, 2\n2, 1"), ("graph_indicator", "1\n1\n2"), ("graph_labels", "1\n-1")],
        );
        let ds = parse_tu_dataset(tmp.path(), "T").unwrap();
        assert_eq!(ds.graphs.len(), 2);
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.graphs[0].num_nodes, 2);
        assert_eq!(ds.graphs[0].edges, vec![(0, 1)]);
        assert_eq!(ds.graphs[1].num_nodes, 1);
        assert!(ds.graphs[1].edges.is_empty());
        // raw labels {-1, 1} remap ascending: -1 -> 0, 1 -> 1
        assert_eq!(ds.graphs[0].label, 1);
        assert_eq!(ds.graphs[1].label, 0);
        // featureless: constant scalar 1
        assert_eq!(ds.graphs[0].node_features.values(), &[1.0, 1.0]);
    }

    #[test]
    fn node_label_count_mismatch_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(
            tmp.path(),
            "T",
            &[
                ("A", ""),
                ("graph_indicator", "1\n1\n1"),
                ("graph_labels", "0"),
                ("node_labels", "0\n1"),
            ],
        );
        let err = parse_tu_dataset(tmp.path(), "T").unwrap_err();
        assert!(err.to_string().contains("node count mismatch"), "{}", err);
    }

    #[test]
    fn missing_file_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(parse_tu_dataset(tmp.path(), "T"), Err(DataError::Io { .. })));
    }

    #[test]
    fn non_integer_token_is_parse_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(tmp.path(), "T", &[("A", ""), ("graph_indicator", "x"), ("graph_labels", "0")]);
        assert!(matches!(parse_tu_dataset(tmp.path(), "T"), Err(DataError::Parse { .. })));
    }

    #[test]
    fn unknown_node_in_edge_file() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(
            tmp.path(),
            "T",
            &[("A", "1, 9"), ("graph_indicator", "1\n1"), ("graph_labels", "0")],
        );
        assert!(matches!(parse_tu_dataset(tmp.path(), "T"), Err(DataError::UnknownNode { node: 9, .. })));
    }

    #[test]
    fn self_loops_dropped_node_labels_one_hot() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(
            tmp.path(),
            "T",
            &[
                ("A", "1, 1\n1, 2\n2, 1"),
                ("graph_indicator", "1\n1"),
                ("graph_labels", "4"),
                ("node_labels", "0\n2"),
            ],
        );
        let ds = parse_tu_dataset(tmp.path(), "T").unwrap();
        assert_eq!(ds.graphs[0].edges, vec![(0, 1)]);
        // one-hot width = max label + 1 = 3
        assert_eq!(ds.graphs[0].node_features.shape(), &[2, 3]);
        assert_eq!(ds.graphs[0].node_features.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(ds.graphs[0].node_features.row(1), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn roundtrip_through_serializer() {
        let tmp = tempfile::tempdir().unwrap();
        write_files(
            tmp.path(),
            "T",
            &[
                ("A", "1, 2\n2, 1\n2, 3\n3, 2\n4, 5"),
                ("graph_indicator", "1\n1\n1\n2\n2"),
                ("graph_labels", "7\n3"),
                ("node_labels", "1\n0\n2\n2\n1"),
            ],
        );
        let ds = parse_tu_dataset(tmp.path(), "T").unwrap();
        let out = tempfile::tempdir().unwrap();
        write_tu_dataset(&ds, out.path(), "T").unwrap();
        let again = parse_tu_dataset(out.path(), "T").unwrap();
        assert_eq!(ds, again);
    }
}
