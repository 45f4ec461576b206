//! Clustering quality metrics and the average-rank comparison of methods.
//!
//! External metrics (NMI, Rand index, F-measure, accuracy) compare two
//! labelings and never look at the graph. Internal metrics (conductance,
//! normalized cut, average out-degree fraction, modularity) score one
//! partition against the graph it was built on.

use std::collections::HashMap;

use itertools::Itertools;
use pathfinding::prelude::{kuhn_munkres, Matrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sbm::Partition;
use crate::selection::mismatch_r2;

/// Dense contingency table between two labelings.
struct Contingency {
    n: usize,
    rows: usize,
    cols: usize,
    counts: Vec<usize>,
}

impl Contingency {
    fn new(x: &[usize], y: &[usize]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::SizeMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let (xs, rows) = densify(x);
        let (ys, cols) = densify(y);
        let mut counts = vec![0usize; rows * cols];
        for (a, b) in xs.into_iter().zip(ys) {
            counts[a * cols + b] += 1;
        }
        Ok(Contingency {
            n: x.len(),
            rows,
            cols,
            counts,
        })
    }

    fn row_sums(&self) -> Vec<usize> {
        self.counts
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.counts[r * self.cols + c]).sum())
            .collect()
    }

    /// (pairs together in both, together in x, together in y, all pairs)
    fn pair_counts(&self) -> (f64, f64, f64, f64) {
        let c2 = |v: usize| (v as f64) * (v as f64 - 1.0) / 2.0;
        let both = self.counts.iter().map(|&v| c2(v)).sum();
        let in_x = self.row_sums().into_iter().map(c2).sum();
        let in_y = self.col_sums().into_iter().map(c2).sum();
        (both, in_x, in_y, c2(self.n))
    }
}

fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut index: HashMap<usize, usize> = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = index.len();
            *index.entry(*l).or_insert(next)
        })
        .collect();
    (dense, index.len())
}

fn entropy(sums: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    /// `sqrt(H(X) H(Y))`
    #[default]
    Geometric,
    /// `(H(X) + H(Y)) / 2`
    Arithmetic,
    /// `max(H(X), H(Y))`
    Max,
}

/// Normalized mutual information with the geometric-mean normalization.
pub fn nmi(x: &[usize], y: &[usize]) -> Result<f64> {
    nmi_with(x, y, NmiNormalization::Geometric)
}

/// Normalized mutual information in nats. Two single-cluster labelings score 1.
pub fn nmi_with(x: &[usize], y: &[usize], normalization: NmiNormalization) -> Result<f64> {
    let table = Contingency::new(x, y)?;
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let hx = entropy(&rows, table.n);
    let hy = entropy(&cols, table.n);
    if hx == 0.0 && hy == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (r, &row) in rows.iter().enumerate() {
        for (c, &col) in cols.iter().enumerate() {
            let nij = table.counts[r * table.cols + c];
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (row as f64 * col as f64)).ln();
            }
        }
    }
    let denom = match normalization {
        NmiNormalization::Geometric => (hx * hy).sqrt(),
        NmiNormalization::Arithmetic => 0.5 * (hx + hy),
        NmiNormalization::Max => hx.max(hy),
    };
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn require_pairs(x: &[usize]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "pair-counting metrics need at least two nodes".into(),
        ));
    }
    Ok(())
}

/// Fraction of node pairs on which both labelings agree (together in both or apart in both).
pub fn rand_index(x: &[usize], y: &[usize]) -> Result<f64> {
    let table = Contingency::new(x, y)?;
    require_pairs(x)?;
    let (both, in_x, in_y, total) = table.pair_counts();
    let apart_both = total - in_x - in_y + both;
    Ok((both + apart_both) / total)
}

/// Pairwise F1 of `predicted` against `truth`; 0 when no pair is correctly co-clustered.
pub fn f_measure(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::new(predicted, truth)?;
    require_pairs(predicted)?;
    let (tp, in_pred, in_truth, _) = table.pair_counts();
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / in_pred;
    let recall = tp / in_truth;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Largest permutation size searched exhaustively by [`accuracy`].
pub const EXHAUSTIVE_MATCHING_MAX: usize = 8;

/// Fraction of nodes whose labels agree under the best one-to-one matching of labels.
///
/// The confusion matrix is padded to square when the label counts differ.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::new(predicted, truth)?;
    if table.n == 0 {
        return Err(Error::InvalidArgument("empty labelings".into()));
    }
    let size = table.rows.max(table.cols);
    let weight = |r: usize, c: usize| -> usize {
        if r < table.rows && c < table.cols {
            table.counts[r * table.cols + c]
        } else {
            0
        }
    };
    let matched = if size <= EXHAUSTIVE_MATCHING_MAX {
        (0..size)
            .permutations(size)
            .map(|perm| {
                perm.iter()
                    .enumerate()
                    .map(|(r, &c)| weight(r, c))
                    .sum::<usize>()
            })
            .max()
            .unwrap_or(0)
    } else {
        let weights = Matrix::from_fn(size, size, |(r, c)| weight(r, c) as i64);
        kuhn_munkres(&weights).0 as usize
    };
    Ok(matched as f64 / table.n as f64)
}

/// Per-community cut and volume.
fn cuts_and_volumes(graph: &Graph, partition: &Partition) -> Result<(Vec<usize>, Vec<usize>)> {
    if partition.n() != graph.n() {
        return Err(Error::InconsistentPartition(format!(
            "partition covers {} nodes, graph has {}",
            partition.n(),
            graph.n()
        )));
    }
    let k = partition.k();
    let labels = partition.labels();
    let mut cut = vec![0usize; k];
    let mut vol = vec![0usize; k];
    for i in 0..graph.n() {
        vol[labels[i]] += graph.degree(i);
        cut[labels[i]] += graph
            .neighbors(i)
            .iter()
            .filter(|&&j| labels[j] != labels[i])
            .count();
    }
    let total = graph.total_degree();
    if let Some(c) = (0..k).find(|&c| vol[c] == 0 || total - vol[c] == 0) {
        return Err(Error::InconsistentPartition(format!(
            "community {c} or its complement has zero volume"
        )));
    }
    Ok((cut, vol))
}

/// Conductance `cut(S) / min(vol S, vol V\S)`, averaged over communities.
pub fn conductance(graph: &Graph, partition: &Partition) -> Result<f64> {
    let (cut, vol) = cuts_and_volumes(graph, partition)?;
    let total = graph.total_degree();
    let sum: f64 = cut
        .iter()
        .zip(&vol)
        .map(|(&c, &v)| c as f64 / v.min(total - v) as f64)
        .sum();
    Ok(sum / cut.len() as f64)
}

/// Normalized cut `cut(S)/vol S + cut(S)/vol V\S`, averaged over communities.
pub fn normalized_cut(graph: &Graph, partition: &Partition) -> Result<f64> {
    let (cut, vol) = cuts_and_volumes(graph, partition)?;
    let total = graph.total_degree();
    let sum: f64 = cut
        .iter()
        .zip(&vol)
        .map(|(&c, &v)| c as f64 / v as f64 + c as f64 / (total - v) as f64)
        .sum();
    Ok(sum / cut.len() as f64)
}

/// Mean over nodes of a community of the fraction of edges leaving it, averaged over communities.
pub fn avg_odf(graph: &Graph, partition: &Partition) -> Result<f64> {
    cuts_and_volumes(graph, partition)?;
    let labels = partition.labels();
    let mut per_community = vec![0.0; partition.k()];
    for i in 0..graph.n() {
        let d = graph.degree(i);
        if d == 0 {
            continue;
        }
        let out = graph
            .neighbors(i)
            .iter()
            .filter(|&&j| labels[j] != labels[i])
            .count();
        per_community[labels[i]] += out as f64 / d as f64;
    }
    let sum: f64 = per_community
        .iter()
        .zip(partition.sizes())
        .map(|(s, &size)| s / size as f64)
        .sum();
    Ok(sum / partition.k() as f64)
}

/// Newman modularity; the negation of the modularity mismatch score.
pub fn modularity(graph: &Graph, partition: &Partition) -> Result<f64> {
    Ok(-mismatch_r2(graph, partition)?)
}

/// All seven metrics; external ones are `None` without ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricVector {
    pub nmi: Option<f64>,
    pub ri: Option<f64>,
    pub fm: Option<f64>,
    pub cond: f64,
    pub nc: f64,
    pub avg_odf: f64,
    #[serde(rename = "mod")]
    pub modularity: f64,
}

impl MetricVector {
    pub fn evaluate(graph: &Graph, predicted: &Partition, truth: Option<&[usize]>) -> Result<Self> {
        let external = match truth {
            Some(t) => Some((
                nmi(predicted.labels(), t)?,
                rand_index(predicted.labels(), t)?,
                f_measure(predicted.labels(), t)?,
            )),
            None => None,
        };
        Ok(MetricVector {
            nmi: external.map(|e| e.0),
            ri: external.map(|e| e.1),
            fm: external.map(|e| e.2),
            cond: conductance(graph, predicted)?,
            nc: normalized_cut(graph, predicted)?,
            avg_odf: avg_odf(graph, predicted)?,
            modularity: modularity(graph, predicted)?,
        })
    }

    /// `(metric name, value)` for every present metric, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::with_capacity(7);
        for (name, v) in [("nmi", self.nmi), ("ri", self.ri), ("fm", self.fm)] {
            if let Some(v) = v {
                out.push((name, v));
            }
        }
        out.extend([
            ("cond", self.cond),
            ("nc", self.nc),
            ("avg_odf", self.avg_odf),
            ("mod", self.modularity),
        ]);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl Orientation {
    /// Orientation of the built-in metric names.
    pub fn for_metric(name: &str) -> Option<Orientation> {
        match name {
            "nmi" | "ri" | "fm" | "mod" | "accuracy" => Some(Orientation::HigherBetter),
            "cond" | "nc" | "avg_odf" => Some(Orientation::LowerBetter),
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Option<Orientation> {
        match text.trim().to_ascii_lowercase().as_str() {
            "higher" | "higher-better" | "max" | "+" => Some(Orientation::HigherBetter),
            "lower" | "lower-better" | "min" | "-" => Some(Orientation::LowerBetter),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub metrics: Vec<(String, Orientation)>,
    /// `values[method][metric]`
    pub values: Vec<Vec<Option<f64>>>,
    /// Competition ranks, `None` where the value is missing.
    pub ranks: Vec<Vec<Option<usize>>>,
    /// Mean rank over each method's present metrics.
    pub avg_rank: Vec<Option<f64>>,
}

/// Ranks methods per metric with competition ranking ("1224") and averages the ranks.
pub fn average_rank(
    methods: Vec<String>,
    metrics: Vec<(String, Orientation)>,
    values: Vec<Vec<Option<f64>>>,
) -> Result<RankTable> {
    if methods.len() < 2 {
        return Err(Error::InvalidArgument(
            "ranking needs at least two methods".into(),
        ));
    }
    if metrics.is_empty() {
        return Err(Error::InvalidArgument(
            "ranking needs at least one metric".into(),
        ));
    }
    if values.len() != methods.len() || values.iter().any(|row| row.len() != metrics.len()) {
        return Err(Error::InvalidArgument(
            "value table does not match methods x metrics".into(),
        ));
    }
    let mut ranks = vec![vec![None; metrics.len()]; methods.len()];
    for (c, (name, orientation)) in metrics.iter().enumerate() {
        let column: Vec<Option<f64>> = values.iter().map(|row| row[c]).collect();
        if column.iter().all(Option::is_none) {
            return Err(Error::InvalidArgument(format!(
                "metric {name} has no values"
            )));
        }
        for (m, v) in column.iter().enumerate() {
            let Some(v) = v else { continue };
            let better = column
                .iter()
                .flatten()
                .filter(|&&o| match orientation {
                    Orientation::HigherBetter => o > *v,
                    Orientation::LowerBetter => o < *v,
                })
                .count();
            ranks[m][c] = Some(better + 1);
        }
    }
    let avg_rank = ranks
        .iter()
        .map(|row| {
            let present: Vec<usize> = row.iter().flatten().copied().collect();
            (!present.is_empty())
                .then(|| present.iter().sum::<usize>() as f64 / present.len() as f64)
        })
        .collect();
    Ok(RankTable {
        methods,
        metrics,
        values,
        ranks,
        avg_rank,
    })
}
