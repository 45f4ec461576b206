//! Stochastic block model: parameters, sampling and block-probability estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Community sizes and a symmetric matrix of edge probabilities.
///
/// The text form stores `k`, `sizes` and `p` (row-major, `k * k` entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub p: Vec<f64>,
}

impl SbmParams {
    pub fn new(sizes: Vec<usize>, p: Vec<f64>) -> Result<Self> {
        let params = SbmParams {
            k: sizes.len(),
            sizes,
            p,
        };
        params.validate()?;
        Ok(params)
    }

    /// Two communities with within probabilities `p1`, `p2` and between probability `q`.
    pub fn two_block(n1: usize, n2: usize, p1: f64, p2: f64, q: f64) -> Result<Self> {
        Self::new(vec![n1, n2], vec![p1, q, q, p2])
    }

    /// `sizes.len()` communities, `within` on the diagonal and `between` elsewhere.
    pub fn planted(sizes: Vec<usize>, within: f64, between: f64) -> Result<Self> {
        let k = sizes.len();
        let p = (0..k * k)
            .map(|idx| if idx / k == idx % k { within } else { between })
            .collect();
        Self::new(sizes, p)
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.k + b]
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if k < 2 {
            return Err(Error::InvalidParams(format!("need K >= 2, got {k}")));
        }
        if self.sizes.len() != k {
            return Err(Error::InvalidParams(format!(
                "K = {k} but {} sizes given",
                self.sizes.len()
            )));
        }
        if let Some(pos) = self.sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParams(format!("community {pos} has size 0")));
        }
        if self.p.len() != k * k {
            return Err(Error::InvalidParams(format!(
                "P must have {} entries, got {}",
                k * k,
                self.p.len()
            )));
        }
        for a in 0..k {
            for b in 0..k {
                let v = self.prob(a, b);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParams(format!(
                        "P[{a}][{b}] = {v} is outside [0, 1]"
                    )));
                }
                if v != self.prob(b, a) {
                    return Err(Error::InvalidParams(format!(
                        "P is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        if self.n() < 2 {
            return Err(Error::InvalidParams("need at least two nodes".into()));
        }
        Ok(())
    }

    /// Planted labels: nodes are laid out community by community.
    pub fn planted_labels(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("SbmParams always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let params: SbmParams =
            toml::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

/// Node-to-community assignment with cached community sizes and block edge counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
    // Row-major K x K; the diagonal counts within-community edges once.
    block_edges: Vec<usize>,
}

impl Partition {
    /// Labels must be `0..K` with every community used at least once.
    pub fn new(graph: &Graph, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != graph.n() {
            return Err(Error::InconsistentPartition(format!(
                "{} labels for {} nodes",
                labels.len(),
                graph.n()
            )));
        }
        let k = labels.iter().max().map_or(0, |&l| l + 1);
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InconsistentPartition(format!(
                "community {empty} is empty"
            )));
        }
        let block_edges = count_block_edges(graph, &labels, k);
        Ok(Partition {
            labels,
            sizes,
            block_edges,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `m_{ab}`: edges between communities `a` and `b` (within-edges once when `a == b`).
    pub fn block_edges(&self, a: usize, b: usize) -> usize {
        self.block_edges[a * self.k() + b]
    }

    /// Members of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }

    /// Errors unless this partition's cached counts match `graph`.
    pub fn check_against(&self, graph: &Graph) -> Result<()> {
        if self.n() != graph.n() {
            return Err(Error::InconsistentPartition(format!(
                "partition covers {} nodes, graph has {}",
                self.n(),
                graph.n()
            )));
        }
        if count_block_edges(graph, &self.labels, self.k()) != self.block_edges {
            return Err(Error::InconsistentPartition(
                "block edge counts do not match the graph".into(),
            ));
        }
        Ok(())
    }
}

fn count_block_edges(graph: &Graph, labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k * k];
    for (u, v) in graph.edges() {
        let (a, b) = (labels[u], labels[v]);
        counts[a * k + b] += 1;
        if a != b {
            counts[b * k + a] += 1;
        }
    }
    counts
}

/// Number of node pairs available to block `(a, b)`: `n_a n_b`, or `C(n_a, 2)` on the diagonal.
pub fn block_pairs(sizes: &[usize], a: usize, b: usize) -> usize {
    if a == b {
        sizes[a] * sizes[a].saturating_sub(1) / 2
    } else {
        sizes[a] * sizes[b]
    }
}

/// Samples a graph from the model with its planted partition.
///
/// Every block `(a, b)` with `a <= b` draws from its own ChaCha8 stream: the
/// generator is seeded with `seed` and switched to stream `a * K + b`. Blocks
/// are sampled in parallel and the result does not depend on scheduling.
/// Within a block, gaps between successive edges are geometric, so the cost
/// is proportional to the number of edges produced.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<(Graph, Partition)> {
    params.validate()?;
    let k = params.k;
    let mut starts = Vec::with_capacity(k);
    let mut acc = 0;
    for &s in &params.sizes {
        starts.push(acc);
        acc += s;
    }
    let n = acc;

    let blocks: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let edge_lists: Vec<Vec<(usize, usize)>> = blocks
        .par_iter()
        .map(|&(a, b)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((a * k + b) as u64);
            let pairs = block_pairs(&params.sizes, a, b);
            let (sa, sb) = (starts[a], starts[b]);
            let width = params.sizes[b];
            sample_indices(&mut rng, pairs, params.prob(a, b))
                .into_iter()
                .map(|t| {
                    if a == b {
                        let (i, j) = triangular_pair(t);
                        (sa + i, sa + j)
                    } else {
                        (sa + t / width, sb + t % width)
                    }
                })
                .collect()
        })
        .collect();

    let graph = Graph::from_edges(n, edge_lists.into_iter().flatten())?;
    let partition = Partition::new(&graph, params.planted_labels())?;
    Ok((graph, partition))
}

/// Indices in `0..count` each kept independently with probability `p`.
fn sample_indices<R: Rng>(rng: &mut R, count: usize, p: f64) -> Vec<usize> {
    if p <= 0.0 || count == 0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..count).collect();
    }
    let mut out = Vec::with_capacity((count as f64 * p * 1.1) as usize + 8);
    let log_q = (1.0 - p).ln();
    let mut next = 0usize;
    loop {
        // u in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (count - next) as f64 {
            break;
        }
        next += skip as usize;
        out.push(next);
        next += 1;
        if next >= count {
            break;
        }
    }
    out
}

/// Maps a linear index over pairs `j < i` to `(i, j)`, enumerating rows `i = 1, 2, ...`.
fn triangular_pair(t: usize) -> (usize, usize) {
    // Row i holds indices i(i-1)/2 .. i(i+1)/2.
    let mut i = ((1.0 + (1.0 + 8.0 * t as f64).sqrt()) / 2.0).floor() as usize;
    while i * (i - 1) / 2 > t {
        i -= 1;
    }
    while (i + 1) * i / 2 <= t {
        i += 1;
    }
    (i, t - i * (i - 1) / 2)
}

/// Maximum-likelihood block probabilities, row-major `K x K`.
///
/// Off-diagonal entries are `m_ab / (n_a n_b)`; diagonal entries are
/// `m_aa / C(n_a, 2)`, defined as 0 for a singleton community.
pub fn mle_block_probabilities(graph: &Graph, partition: &Partition) -> Result<Vec<f64>> {
    partition.check_against(graph)?;
    Ok(block_probabilities(partition))
}

pub(crate) fn block_probabilities(partition: &Partition) -> Vec<f64> {
    let k = partition.k();
    let sizes = partition.sizes();
    let mut p = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let pairs = block_pairs(sizes, a, b);
            if pairs > 0 {
                p[a * k + b] = partition.block_edges(a, b) as f64 / pairs as f64;
            }
        }
    }
    p
}
