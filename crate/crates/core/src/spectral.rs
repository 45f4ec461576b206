//! Normalized graph Laplacians and spectral clustering on their smallest eigenvectors.

use serde::Serialize;

use crate::eigen::{smallest_eigenpairs, EigenConfig, SymmetricOperator};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kmeans::{kmeans, KMeansConfig, Points};
use crate::sbm::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianMode {
    /// `I - D^{-1/2} A D^{-1/2}`.
    #[default]
    Standard,
    /// `I - (D + dI)^{-1/2} A (D + dI)^{-1/2}` with `d` the average degree.
    Regularized,
}

/// Matrix-free `x -> x - S A S x` with `S = diag(s)`.
#[derive(Debug, Clone)]
pub struct LaplacianOperator<'g> {
    graph: &'g Graph,
    mode: LaplacianMode,
    scale: Vec<f64>,
}

impl<'g> LaplacianOperator<'g> {
    pub fn new(graph: &'g Graph, mode: LaplacianMode) -> Result<Self> {
        if graph.n() < 2 {
            return Err(Error::InvalidArgument(
                "Laplacian needs at least two nodes".into(),
            ));
        }
        let scale = match mode {
            LaplacianMode::Standard => {
                if let Some(node) = (0..graph.n()).find(|&i| graph.degree(i) == 0) {
                    return Err(Error::IsolatedNode { node });
                }
                (0..graph.n())
                    .map(|i| (graph.degree(i) as f64).sqrt().recip())
                    .collect()
            }
            LaplacianMode::Regularized => {
                let tau = graph.average_degree();
                if tau == 0.0 {
                    return Err(Error::EmptyGraph);
                }
                (0..graph.n())
                    .map(|i| (graph.degree(i) as f64 + tau).sqrt().recip())
                    .collect()
            }
        };
        Ok(LaplacianOperator { graph, mode, scale })
    }

    pub fn mode(&self) -> LaplacianMode {
        self.mode
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Diagonal scaling `s_i`.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }
}

impl SymmetricOperator for LaplacianOperator<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = &self.scale;
        for (i, yi) in y.iter_mut().enumerate() {
            let acc: f64 = self.graph.neighbors(i).iter().map(|&j| s[j] * x[j]).sum();
            *yi = x[i] - s[i] * acc;
        }
    }
}

/// The `K` smallest eigenpairs of a Laplacian.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub mode: LaplacianMode,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, one per eigenvalue.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl SpectralBasis {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    /// Sum of `1 - l_k` over eigenvalues `2..=K`.
    pub fn theta(&self) -> f64 {
        theta(&self.eigenvalues)
    }

    /// The first `k` pairs.
    pub fn truncated(&self, k: usize) -> SpectralBasis {
        let k = k.min(self.k());
        SpectralBasis {
            mode: self.mode,
            eigenvalues: self.eigenvalues[..k].to_vec(),
            vectors: self.vectors[..k].to_vec(),
            residuals: self.residuals[..k].to_vec(),
        }
    }

    /// Row-major `n x k` embedding from the first `k` eigenvectors.
    pub fn embedding(&self, k: usize) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * k];
        for (c, v) in self.vectors.iter().take(k).enumerate() {
            for (i, &x) in v.iter().enumerate() {
                out[i * k + c] = x;
            }
        }
        out
    }

    /// Eigenvalues, and the eigenvector matrix when `include_vectors` and `n <= 10^4`, as JSON.
    pub fn to_json(&self, include_vectors: bool) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "mode": self.mode,
            "k": self.k(),
            "n": self.n(),
            "theta": self.theta(),
            "eigenvalues": self.eigenvalues,
            "residuals": self.residuals,
        });
        if include_vectors && self.n() <= 10_000 {
            doc["vectors"] = serde_json::json!(self.vectors);
        }
        doc
    }
}

/// `sum_{k=2}^{K} (1 - l_k)` over ascending eigenvalues; zero when fewer than two are given.
pub fn theta(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().skip(1).map(|l| 1.0 - l).sum()
}

/// Computes the `k` smallest eigenpairs of `op`.
pub fn smallest_basis(
    op: &LaplacianOperator<'_>,
    k: usize,
    config: &EigenConfig,
) -> Result<SpectralBasis> {
    if k < 2 || k > op.dim() {
        return Err(Error::InvalidArgument(format!(
            "basis size {k} must lie in 2..={}",
            op.dim()
        )));
    }
    let pairs = smallest_eigenpairs(op, k, config)?;
    Ok(SpectralBasis {
        mode: op.mode(),
        eigenvalues: pairs.values,
        vectors: pairs.vectors,
        residuals: pairs.residuals,
    })
}

/// Row-normalized copy of a row-major `n x dim` matrix.
///
/// Rows with norm below `1e-12` are set to zero; their indices are returned.
pub fn row_normalize(rows: &[f64], dim: usize) -> (Vec<f64>, Vec<usize>) {
    let mut out = rows.to_vec();
    let mut zero_rows = Vec::new();
    for (i, row) in out.chunks_mut(dim).enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            row.iter_mut().for_each(|x| *x = 0.0);
            zero_rows.push(i);
        } else {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    (out, zero_rows)
}

#[derive(Debug, Clone, Default)]
pub struct SgcConfig {
    pub mode: LaplacianMode,
    pub eigen: EigenConfig,
    pub kmeans: KMeansConfig,
}

#[derive(Debug, Clone)]
pub struct SgcOutcome {
    pub partition: Partition,
    pub basis: SpectralBasis,
    /// Nodes whose embedding row vanished before normalization.
    pub zero_rows: Vec<usize>,
}

/// Clusters the first `k` columns of `basis` into a partition of `graph`.
pub fn cluster_embedding(
    graph: &Graph,
    basis: &SpectralBasis,
    k: usize,
    kmeans_config: &KMeansConfig,
    seed: u64,
) -> Result<(Partition, Vec<usize>)> {
    let (rows, zero_rows) = row_normalize(&basis.embedding(k), k);
    let result = kmeans(Points::new(&rows, k)?, k, kmeans_config, seed)?;
    Ok((Partition::new(graph, result.labels)?, zero_rows))
}

/// Spectral clustering: build the Laplacian, take its `k` smallest
/// eigenvectors, normalize rows, and run k-means on them.
pub fn sgc_detect(graph: &Graph, k: usize, config: &SgcConfig, seed: u64) -> Result<SgcOutcome> {
    if config.mode == LaplacianMode::Standard && !graph.is_connected() {
        if let Some(node) = (0..graph.n()).find(|&i| graph.degree(i) == 0) {
            return Err(Error::IsolatedNode { node });
        }
        return Err(Error::Disconnected);
    }
    if k < 2 || k > graph.n() {
        return Err(Error::InvalidArgument(format!(
            "K = {k} must lie in 2..={}",
            graph.n()
        )));
    }
    let op = LaplacianOperator::new(graph, config.mode)?;
    let eigen = EigenConfig {
        seed,
        ..config.eigen.clone()
    };
    let basis = smallest_basis(&op, k, &eigen)?;
    let (partition, zero_rows) = cluster_embedding(graph, &basis, k, &config.kmeans, seed)?;
    Ok(SgcOutcome {
        partition,
        basis,
        zero_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::Strategy;

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
    }

    fn basis_of(graph: &Graph, mode: LaplacianMode, k: usize, strategy: Strategy) -> SpectralBasis {
        let op = LaplacianOperator::new(graph, mode).unwrap();
        let config = EigenConfig {
            strategy,
            ..Default::default()
        };
        smallest_basis(&op, k, &config).unwrap()
    }

    #[test]
    fn complete_graph_spectrum() {
        let basis = basis_of(&complete(4), LaplacianMode::Standard, 4, Strategy::Dense);
        assert!(basis.eigenvalues[0].abs() < 1e-12);
        for l in &basis.eigenvalues[1..] {
            assert!((l - 4.0 / 3.0).abs() < 1e-12);
        }
        let two = basis.truncated(2);
        assert!((two.theta() + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_spectrum() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let basis = basis_of(&g, LaplacianMode::Standard, 3, Strategy::Dense);
        for (got, want) in basis.eigenvalues.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn regularized_single_edge() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let op = LaplacianOperator::new(&g, LaplacianMode::Regularized).unwrap();
        assert!((op.scale()[0] - 0.5f64.sqrt()).abs() < 1e-15);
        let basis = basis_of(&g, LaplacianMode::Regularized, 2, Strategy::Dense);
        assert!((basis.eigenvalues[0] - 0.5).abs() < 1e-12);
        assert!((basis.eigenvalues[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn isolated_node_needs_lcc() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(matches!(
            LaplacianOperator::new(&g, LaplacianMode::Standard),
            Err(Error::IsolatedNode { node: 2 })
        ));
        assert!(LaplacianOperator::new(&g, LaplacianMode::Regularized).is_ok());
    }

    #[test]
    fn theta_arithmetic() {
        assert_eq!(theta(&[0.0, 0.0]), 1.0);
        assert!((theta(&[0.0, 0.3, 0.8]) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn row_normalization() {
        let (rows, zero) = row_normalize(&[3.0, 4.0, 0.6, 0.8, 0.0, 0.0], 2);
        assert_eq!(&rows[..4], &[0.6, 0.8, 0.6, 0.8]);
        assert_eq!(&rows[4..], &[0.0, 0.0]);
        assert_eq!(zero, vec![2]);
    }

    #[test]
    fn bridged_triangles_split_at_bridge() {
        let g =
            Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let out = sgc_detect(&g, 2, &SgcConfig::default(), 5).unwrap();
        let l = out.partition.labels();
        assert!(l[0] == l[1] && l[1] == l[2] && l[3] == l[4] && l[4] == l[5] && l[0] != l[3]);
    }

    #[test]
    fn disconnected_graph_is_rejected_in_standard_mode() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            sgc_detect(&g, 2, &SgcConfig::default(), 0),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn embedding_layout() {
        let basis = SpectralBasis {
            mode: LaplacianMode::Standard,
            eigenvalues: vec![0.0, 1.0],
            vectors: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            residuals: vec![0.0, 0.0],
        };
        assert_eq!(basis.embedding(2), vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(basis.embedding(1), vec![1.0, 2.0, 3.0]);
        assert!(basis.to_json(true)["vectors"].is_array());
    }
}
