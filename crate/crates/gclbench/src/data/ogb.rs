//! Loader for the OGB CSV graph-property-prediction layout.
//!
//! The directory holds flat CSV tables: `num-node-list.csv` and
//! `num-edge-list.csv` give per-graph counts, `edge.csv` holds 0-based
//! `src,dst` rows (directed, concatenated over graphs), `node-feat.csv` /
//! `edge-feat.csv` hold the feature rows aligned with those tables,
//! `graph-label.csv` one label per graph, and `train.csv` / `valid.csv` /
//! `test.csv` one graph index per line. Directed duplicate edges collapse to
//! one undirected pair keeping the first feature row encountered.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::graph::{Graph, GraphDataset, SplitSpec};
use super::{DataError, Result};
use crate::autodiff::Tensor;

fn read_rows(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_counts(path: &Path) -> Result<Vec<usize>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, l)| {
            l.parse::<usize>().map_err(|_| DataError::Parse {
                path: path.to_path_buf(),
                line,
                detail: format!("expected non-negative integer, got {:?}", l),
            })
        })
        .collect()
}

fn parse_float_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, l)| {
            l.split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| DataError::Parse {
                        path: path.to_path_buf(),
                        line,
                        detail: format!("expected number, got {:?}", tok),
                    })
                })
                .collect()
        })
        .collect()
}

fn uniform_width(path: &Path, rows: &[Vec<f64>]) -> Result<usize> {
    let w = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != w) {
        return Err(DataError::Parse {
            path: path.to_path_buf(),
            line: bad + 1,
            detail: format!("row width {} differs from first row width {}", rows[bad].len(), w),
        });
    }
    Ok(w)
}

fn parse_index_list(path: &Path) -> Result<Vec<usize>> {
    parse_counts(path)
}

/// Load an OGB-style CSV directory into a dataset with its split.
pub fn load_ogb_csv(dir: &Path) -> Result<GraphDataset> {
    let p = |f: &str| -> PathBuf { dir.join(f) };

    let num_nodes = parse_counts(&p("num-node-list.csv"))?;
    let num_edges = parse_counts(&p("num-edge-list.csv"))?;
    let labels_raw = parse_float_rows(&p("graph-label.csv"))?;
    let node_feat = parse_float_rows(&p("node-feat.csv"))?;
    let edge_feat = parse_float_rows(&p("edge-feat.csv"))?;
    let edge_rows = read_rows(&p("edge.csv"))?;

    let g = num_nodes.len();
    if num_edges.len() != g || labels_raw.len() != g {
        return Err(DataError::CountMismatch {
            detail: format!(
                "{} node counts, {} edge counts, {} labels",
                g,
                num_edges.len(),
                labels_raw.len()
            ),
        });
    }
    let total_nodes: usize = num_nodes.iter().sum();
    if node_feat.len() != total_nodes {
        return Err(DataError::CountMismatch {
            detail: format!(
                "node-feat has {} rows but counts sum to {}",
                node_feat.len(),
                total_nodes
            ),
        });
    }
    let total_edges: usize = num_edges.iter().sum();
    if edge_rows.len() != total_edges || edge_feat.len() != total_edges {
        return Err(DataError::CountMismatch {
            detail: format!(
                "edge table has {} rows, edge-feat {} rows, counts sum to {}",
                edge_rows.len(),
                edge_feat.len(),
                total_edges
            ),
        });
    }

    let node_dim = uniform_width(&p("node-feat.csv"), &node_feat)?;
    let edge_dim = uniform_width(&p("edge-feat.csv"), &edge_feat)?;

    let edge_path = p("edge.csv");
    let mut endpoints = Vec::with_capacity(total_edges);
    for (line, row) in &edge_rows {
        let mut it = row.split(',').map(str::trim);
        let bad = || DataError::Parse {
            path: edge_path.clone(),
            line: *line,
            detail: format!("expected \"src,dst\", got {:?}", row),
        };
        let s = it.next().ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?;
        let d = it.next().ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?;
        if it.next().is_some() {
            return Err(bad());
        }
        endpoints.push((s, d));
    }

    // integer class ids remapped to contiguous 0-based ascending
    let mut label_ints = Vec::with_capacity(g);
    let label_path = p("graph-label.csv");
    for (i, row) in labels_raw.iter().enumerate() {
        if row.len() != 1 || row[0].fract() != 0.0 {
            return Err(DataError::Parse {
                path: label_path.clone(),
                line: i + 1,
                detail: format!("expected one integer label, got {:?}", row),
            });
        }
        label_ints.push(row[0] as i64);
    }
    let mut distinct = label_ints.clone();
    distinct.sort_unstable();
    distinct.dedup();

    let mut graphs = Vec::with_capacity(g);
    let mut node_off = 0usize;
    let mut edge_off = 0usize;
    let mut self_loops = 0usize;
    for gi in 0..g {
        let n = num_nodes[gi];
        let e = num_edges[gi];
        let mut feats = Vec::with_capacity(n * node_dim);
        for row in &node_feat[node_off..node_off + n] {
            feats.extend_from_slice(row);
        }
        // collapse directed rows to undirected pairs, keeping the first
        // feature row seen for each pair
        let mut pairs: Vec<((usize, usize), usize)> = Vec::with_capacity(e);
        for (k, &(s, d)) in endpoints[edge_off..edge_off + e].iter().enumerate() {
            if s >= n || d >= n {
                return Err(DataError::UnknownNode {
                    path: edge_path.clone(),
                    line: edge_off + k + 1,
                    node: s.max(d) as i64,
                });
            }
            if s == d {
                self_loops += 1;
                continue;
            }
            let key = if s < d { (s, d) } else { (d, s) };
            pairs.push((key, edge_off + k));
        }
        pairs.sort_by_key(|&(key, first_row)| (key, first_row));
        pairs.dedup_by_key(|&mut (key, _)| key);
        let mut efeat = Vec::with_capacity(pairs.len() * edge_dim);
        let mut edges = Vec::with_capacity(pairs.len());
        for (key, row) in pairs {
            edges.push(key);
            efeat.extend_from_slice(&edge_feat[row]);
        }
        let num_und = edges.len();
        graphs.push(Graph::new(
            n,
            Tensor::matrix(n, node_dim, feats).map_err(|err| DataError::InvalidGraph(err.to_string()))?,
            edges,
            Some(
                Tensor::matrix(num_und, edge_dim, efeat)
                    .map_err(|err| DataError::InvalidGraph(err.to_string()))?,
            ),
            distinct.binary_search(&label_ints[gi]).expect("label present") as usize,
        )?);
        node_off += n;
        edge_off += e;
    }
    if self_loops > 0 {
        warn!("{}: dropped {} self-loop edge row(s)", dir.display(), self_loops);
    }

    let split = SplitSpec {
        train: parse_index_list(&p("train.csv"))?,
        valid: parse_index_list(&p("valid.csv"))?,
        test: parse_index_list(&p("test.csv"))?,
    };
    split.validate(graphs.len())?;

    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ogb".to_string());
    let dataset = GraphDataset { graphs, name, num_classes: distinct.len(), split: Some(split) };
    dataset.validate()?;
    Ok(dataset)
}
