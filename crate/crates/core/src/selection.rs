//! Choosing the number of communities: detection loss plus a weighted model-mismatch penalty.
//!
//! For every candidate `K` the objective is `exp(-theta / (K - 1)) + alpha * R`,
//! where `theta` comes from the `K` smallest Laplacian eigenvalues and `R` scores
//! how badly the candidate partition fits a block model. One eigendecomposition
//! at `K_max` serves every candidate.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::json;

use crate::eigen::{smallest_eigenpairs, EigenConfig, Negated, SymmetricOperator};
use crate::error::{Error, Result};
use crate::format::{json_num, json_opt};
use crate::graph::Graph;
use crate::kmeans::KMeansConfig;
use crate::sbm::{block_pairs, block_probabilities, Partition};
use crate::spectral::{
    cluster_embedding, smallest_basis, theta, LaplacianMode, LaplacianOperator, SpectralBasis,
};

/// `exp(-theta / (K - 1))`: above 1 exactly when `theta < 0`.
pub fn detection_loss(theta: f64, k: usize) -> f64 {
    assert!(k >= 2, "detection loss needs K >= 2");
    (-theta / (k - 1) as f64).exp()
}

/// `x -> A x - Pbar x` where `Pbar` has the fitted block probabilities off the diagonal.
struct ModularOperator<'g> {
    graph: &'g Graph,
    labels: &'g [usize],
    k: usize,
    p: Vec<f64>,
}

impl SymmetricOperator for ModularOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut sums = vec![0.0; self.k];
        for (&l, &xi) in self.labels.iter().zip(x) {
            sums[l] += xi;
        }
        let k = self.k;
        // Block mixing of the community sums, one row per community.
        let mixed: Vec<f64> = (0..k)
            .map(|a| (0..k).map(|b| self.p[a * k + b] * sums[b]).sum())
            .collect();
        self.graph.adjacency_matvec(x, y);
        for (i, yi) in y.iter_mut().enumerate() {
            let g = self.labels[i];
            *yi += self.p[g * k + g] * x[i] - mixed[g];
        }
    }
}

/// Spectral radius of `A - Pbar` with zero diagonal, `Pbar_ij` the fitted probability of block `(g_i, g_j)`.
///
/// Both ends of the spectrum are resolved at relative residual tolerance `tol`.
pub fn mismatch_r1(graph: &Graph, partition: &Partition, tol: f64, seed: u64) -> Result<f64> {
    let config = EigenConfig {
        tol,
        seed,
        ..EigenConfig::default()
    };
    mismatch_r1_with(graph, partition, &config)
}

/// [`mismatch_r1`] with full control over the eigensolver.
pub fn mismatch_r1_with(graph: &Graph, partition: &Partition, config: &EigenConfig) -> Result<f64> {
    partition.check_against(graph)?;
    let op = ModularOperator {
        graph,
        labels: partition.labels(),
        k: partition.k(),
        p: block_probabilities(partition),
    };
    let lowest = smallest_eigenpairs(&op, 1, config)?.values[0];
    let highest = -smallest_eigenpairs(&Negated(&op), 1, config)?.values[0];
    Ok(lowest.abs().max(highest.abs()))
}

/// Negative Newman modularity, `-sum_k (e_kk - b_k^2)`.
pub fn mismatch_r2(graph: &Graph, partition: &Partition) -> Result<f64> {
    partition.check_against(graph)?;
    if graph.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    let m = graph.m() as f64;
    let k = partition.k();
    let mut q = 0.0;
    for a in 0..k {
        let e_aa = partition.block_edges(a, a) as f64 / m;
        let b_a: f64 = (0..k)
            .map(|b| {
                let e = partition.block_edges(a, b) as f64;
                if a == b {
                    e / m
                } else {
                    e / (2.0 * m)
                }
            })
            .sum();
        q += e_aa - b_a * b_a;
    }
    Ok(-q)
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Bernoulli log-likelihood of the graph under the block model fitted to `partition`.
pub fn sbm_log_likelihood(graph: &Graph, partition: &Partition) -> Result<f64> {
    partition.check_against(graph)?;
    let k = partition.k();
    let p = block_probabilities(partition);
    let mut phi = 0.0;
    for a in 0..k {
        for b in a..k {
            let edges = partition.block_edges(a, b) as f64;
            let pairs = block_pairs(partition.sizes(), a, b) as f64;
            let pab = p[a * k + b];
            phi += xlogy(edges, pab) + xlogy(pairs - edges, 1.0 - pab);
        }
    }
    Ok(phi)
}

/// Akaike-style score `K(K-1) - 2 phi`.
pub fn mismatch_r3(graph: &Graph, partition: &Partition) -> Result<f64> {
    let k = partition.k() as f64;
    Ok(k * (k - 1.0) - 2.0 * sbm_log_likelihood(graph, partition)?)
}

/// Bayesian-style score `(ln m / 2) K(K-1) - 2 phi`.
pub fn mismatch_r4(graph: &Graph, partition: &Partition) -> Result<f64> {
    if graph.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    let k = partition.k() as f64;
    let penalty = (graph.m() as f64).ln() / 2.0 * k * (k - 1.0);
    Ok(penalty - 2.0 * sbm_log_likelihood(graph, partition)?)
}

/// Spectral clustering variant: `sgc` on the standard Laplacian, `regsgc` on the degree-regularized one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Sgc,
    RegSgc,
}

impl Method {
    pub fn mode(self) -> LaplacianMode {
        match self {
            Method::Sgc => LaplacianMode::Standard,
            Method::RegSgc => LaplacianMode::Regularized,
        }
    }

    pub fn default_alpha(self) -> f64 {
        match self {
            Method::Sgc => 1e-4,
            Method::RegSgc => 1e-6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgc => "sgc",
            Method::RegSgc => "regsgc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgc" | "f1" => Ok(Method::Sgc),
            "regsgc" | "f2" => Ok(Method::RegSgc),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mismatch {
    /// Spectral radius of the modular matrix.
    Eig,
    /// Negative modularity.
    #[default]
    Mod,
    Aic,
    Bic,
}

impl Mismatch {
    pub const ALL: [Mismatch; 4] = [Mismatch::Eig, Mismatch::Mod, Mismatch::Aic, Mismatch::Bic];

    pub fn name(self) -> &'static str {
        match self {
            Mismatch::Eig => "eig",
            Mismatch::Mod => "mod",
            Mismatch::Aic => "aic",
            Mismatch::Bic => "bic",
        }
    }

    pub fn evaluate(
        self,
        graph: &Graph,
        partition: &Partition,
        r1_tol: f64,
        seed: u64,
    ) -> Result<f64> {
        match self {
            Mismatch::Eig => mismatch_r1(graph, partition, r1_tol, seed),
            Mismatch::Mod => mismatch_r2(graph, partition),
            Mismatch::Aic => mismatch_r3(graph, partition),
            Mismatch::Bic => mismatch_r4(graph, partition),
        }
    }
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mismatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eig" | "r1" => Ok(Mismatch::Eig),
            "mod" | "r2" => Ok(Mismatch::Mod),
            "aic" | "r3" => Ok(Mismatch::Aic),
            "bic" | "r4" => Ok(Mismatch::Bic),
            _ => Err(Error::InvalidArgument(format!("unknown mismatch {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionConfig {
    pub method: Method,
    pub mismatch: Mismatch,
    pub alpha: f64,
    pub k_max: usize,
    pub seed: u64,
    pub eigen: EigenConfig,
    pub kmeans: KMeansConfig,
    /// Relative tolerance of the spectral-radius solve.
    pub r1_tol: f64,
}

impl SelectionConfig {
    /// Defaults: the method's own `alpha` and `K_max = 50`.
    pub fn new(method: Method, mismatch: Mismatch) -> Self {
        SelectionConfig {
            method,
            mismatch,
            alpha: method.default_alpha(),
            k_max: 50,
            seed: 0,
            eigen: EigenConfig::default(),
            kmeans: KMeansConfig::default(),
            r1_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if self.k_max < 2 {
            return Err(Error::InvalidArgument(format!(
                "k_max must be >= 2, got {}",
                self.k_max
            )));
        }
        Ok(())
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig::new(Method::default(), Mismatch::default())
    }
}

/// One candidate partition per `K`, all cut from a shared eigendecomposition.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub method: Method,
    pub seed: u64,
    pub basis: SpectralBasis,
    pub entries: Vec<Candidate>,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub k: usize,
    pub theta: f64,
    pub loss: f64,
    /// The clustering, or why it could not be produced.
    pub partition: std::result::Result<Partition, String>,
    pub zero_rows: usize,
}

/// Step 1: eigenpairs at `K_max`, then k-means on the first `K` columns for every `K`.
pub fn compute_candidates(graph: &Graph, config: &SelectionConfig) -> Result<Candidates> {
    config.validate()?;
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    if config.k_max > graph.n() {
        return Err(Error::InvalidArgument(format!(
            "k_max = {} exceeds n = {}",
            config.k_max,
            graph.n()
        )));
    }
    let op = LaplacianOperator::new(graph, config.method.mode())?;
    let eigen = EigenConfig {
        seed: config.seed,
        ..config.eigen.clone()
    };
    let basis = smallest_basis(&op, config.k_max, &eigen)?;
    let entries = (2..=config.k_max)
        .into_par_iter()
        .map(|k| {
            let t = theta(&basis.eigenvalues[..k]);
            let clustered = cluster_embedding(graph, &basis, k, &config.kmeans, config.seed);
            let (partition, zero_rows) = match clustered {
                Ok((p, z)) => (Ok(p), z.len()),
                Err(e) => (Err(e.to_string()), 0),
            };
            Candidate {
                k,
                theta: t,
                loss: detection_loss(t, k),
                partition,
                zero_rows,
            }
        })
        .collect();
    Ok(Candidates {
        method: config.method,
        seed: config.seed,
        basis,
        entries,
    })
}

impl Candidates {
    /// The mismatch score of every candidate, in candidate order.
    pub fn mismatch_values(
        &self,
        graph: &Graph,
        mismatch: Mismatch,
        r1_tol: f64,
    ) -> Vec<std::result::Result<f64, String>> {
        self.entries
            .par_iter()
            .map(|c| match &c.partition {
                Ok(p) => mismatch
                    .evaluate(graph, p, r1_tol, self.seed)
                    .map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            })
            .collect()
    }

    /// Step 2: scores candidates with precomputed mismatch values and picks the minimizer.
    pub fn select_with(
        &self,
        mismatch: Mismatch,
        alpha: f64,
        values: &[std::result::Result<f64, String>],
    ) -> Result<SelectionReport> {
        if values.len() != self.entries.len() {
            return Err(Error::SizeMismatch {
                left: values.len(),
                right: self.entries.len(),
            });
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        let mut records = Vec::with_capacity(values.len());
        let mut best: Option<(usize, f64)> = None;
        for (idx, (c, value)) in self.entries.iter().zip(values).enumerate() {
            let mut note = None;
            let r = match value {
                Ok(v) => Some(*v),
                Err(e) => {
                    note = Some(e.clone());
                    None
                }
            };
            let objective = match (&c.partition, r) {
                (Err(_), _) => None,
                (Ok(_), Some(r)) => Some(c.loss + alpha * r),
                // With no penalty weight the missing mismatch does not matter.
                (Ok(_), None) if alpha == 0.0 => Some(c.loss),
                (Ok(_), None) => None,
            };
            let objective = objective.filter(|o| !o.is_nan());
            if let Some(o) = objective {
                if best.is_none_or(|(_, b)| o < b) {
                    best = Some((idx, o));
                }
            }
            records.push(KRecord {
                k: c.k,
                theta: c.theta,
                loss: c.loss,
                mismatch: r,
                objective,
                zero_rows: c.zero_rows,
                note,
            });
        }
        let (best_idx, _) = best.ok_or(Error::AllCandidatesFailed)?;
        let chosen = self.entries[best_idx]
            .partition
            .clone()
            .expect("chosen candidate has a partition");
        let mut diagnostics = Vec::new();
        if self.method == Method::RegSgc {
            diagnostics
                .push("theta is computed from the regularized Laplacian's eigenvalues".to_string());
        }
        let zero: usize = self.entries[best_idx].zero_rows;
        if zero > 0 {
            diagnostics.push(format!(
                "{zero} embedding rows had zero norm at the chosen K"
            ));
        }
        Ok(SelectionReport {
            method: self.method,
            mismatch,
            alpha,
            k_max: self.basis.k(),
            seed: self.seed,
            eigenvalues: self.basis.eigenvalues.clone(),
            max_residual: self.basis.residuals.iter().copied().fold(0.0, f64::max),
            records,
            k_star: self.entries[best_idx].k,
            partition: chosen,
            diagnostics,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KRecord {
    pub k: usize,
    pub theta: f64,
    pub loss: f64,
    pub mismatch: Option<f64>,
    pub objective: Option<f64>,
    pub zero_rows: usize,
    /// Why this `K` could not be scored.
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SelectionReport {
    pub method: Method,
    pub mismatch: Mismatch,
    pub alpha: f64,
    pub k_max: usize,
    pub seed: u64,
    /// The `K_max` smallest Laplacian eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
    /// One record per `K = 2..=K_max`.
    pub records: Vec<KRecord>,
    pub k_star: usize,
    pub partition: Partition,
    pub diagnostics: Vec<String>,
}

impl SelectionReport {
    pub fn record(&self, k: usize) -> Option<&KRecord> {
        self.records.iter().find(|r| r.k == k)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let records: Vec<_> = self
            .records
            .iter()
            .map(|r| {
                let mut v = json!({
                    "K": r.k,
                    "theta": json_num(r.theta),
                    "f": json_num(r.loss),
                    "R": json_opt(r.mismatch),
                    "objective": json_opt(r.objective),
                });
                if r.zero_rows > 0 {
                    v["zero_rows"] = json!(r.zero_rows);
                }
                if let Some(note) = &r.note {
                    v["note"] = json!(note);
                }
                v
            })
            .collect();
        json!({
            "config": {
                "method": self.method.name(),
                "mismatch": self.mismatch.name(),
                "alpha": json_num(self.alpha),
                "k_max": self.k_max,
                "seed": self.seed,
            },
            "eigenvalues": self.eigenvalues.iter().map(|&l| json_num(l)).collect::<Vec<_>>(),
            "max_residual": json_num(self.max_residual),
            "records": records,
            "k_star": self.k_star,
            "labels": self.partition.labels(),
            "diagnostics": self.diagnostics,
        })
    }
}

/// Runs the full sweep over `K = 2..=K_max` and returns the minimizer of `f + alpha R`.
pub fn select(graph: &Graph, config: &SelectionConfig) -> Result<SelectionReport> {
    let candidates = compute_candidates(graph, config)?;
    let values = if config.alpha == 0.0 {
        // The penalty has no weight; skip the potentially costly scores.
        vec![Err("mismatch not evaluated at alpha = 0".to_string()); candidates.entries.len()]
    } else {
        candidates.mismatch_values(graph, config.mismatch, config.r1_tol)
    };
    let mut report = candidates.select_with(config.mismatch, config.alpha, &values)?;
    if config.alpha == 0.0 {
        for r in &mut report.records {
            r.note = None;
        }
    }
    Ok(report)
}
