//! Library results checked against independent brute-force computations.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgcgen::eigen::{EigenConfig, Strategy};
use sgcgen::metrics::normalized_cut;
use sgcgen::selection::sbm_log_likelihood;
use sgcgen::spectral::{smallest_basis, LaplacianOperator};
use sgcgen::*;

fn bridged_triangles() -> Graph {
    Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap()
}

fn dense_laplacian(g: &Graph, mode: LaplacianMode) -> DMatrix<f64> {
    let n = g.n();
    let shift = match mode {
        LaplacianMode::Standard => 0.0,
        LaplacianMode::Regularized => g.average_degree(),
    };
    let s: Vec<f64> = (0..n)
        .map(|i| (g.degree(i) as f64 + shift).powf(-0.5))
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let a = if g.has_edge(i, j) { s[i] * s[j] } else { 0.0 };
        if i == j {
            1.0 - a
        } else {
            -a
        }
    })
}

#[test]
fn sbm_edge_count_matches_binomial_mean() {
    let params = SbmParams::two_block(500, 500, 0.1, 0.1, 0.01).unwrap();
    // 2 * C(500, 2) within pairs and 500^2 between pairs.
    let (within, between) = (249_500.0, 250_000.0);
    let mean = within * 0.1 + between * 0.01;
    let var = within * 0.1 * 0.9 + between * 0.01 * 0.99;
    let seeds = 50;
    let total: usize = (0..seeds)
        .map(|s| generate_sbm(&params, s).unwrap().0.m())
        .sum();
    let observed = total as f64 / seeds as f64;
    let sd = (var / seeds as f64).sqrt();
    assert!(
        (observed - mean).abs() <= 3.0 * sd,
        "mean m {observed}, expected {mean} +- {sd}"
    );
}

#[test]
fn bridged_triangles_split_minimizes_normalized_cut() {
    let g = bridged_triangles();
    let mut best = (f64::INFINITY, Vec::new());
    // Node 0 stays in community 0, so each split is visited once.
    for mask in 0u32..(1 << 5) {
        let labels: Vec<usize> = (0..6)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    ((mask >> (i - 1)) & 1) as usize
                }
            })
            .collect();
        if labels.iter().all(|&l| l == 0) {
            continue;
        }
        let nc = normalized_cut(&g, &Partition::new(&g, labels.clone()).unwrap()).unwrap();
        if nc < best.0 {
            best = (nc, labels);
        }
    }
    let found = sgc_detect(&g, 2, &SgcConfig::default(), 0).unwrap();
    assert_eq!(accuracy(found.partition.labels(), &best.1).unwrap(), 1.0);
}

#[test]
fn log_likelihood_matches_pairwise_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let n = rng.random_range(4..=12);
        let p = rng.random_range(0.2..0.8);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        let g = Graph::from_edges(n, edges).unwrap();
        let k = rng.random_range(1..=3usize.min(n));
        let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let part = Partition::new(&g, labels.clone()).unwrap();
        // Block densities from raw pair counts, then the log of the Bernoulli product.
        let mut edges_ab = vec![0.0; k * k];
        let mut pairs_ab = vec![0.0; k * k];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
                pairs_ab[a * k + b] += 1.0;
                if g.has_edge(i, j) {
                    edges_ab[a * k + b] += 1.0;
                }
            }
        }
        let mut phi = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
                let p_hat: f64 = edges_ab[a * k + b] / pairs_ab[a * k + b];
                let prob = if g.has_edge(i, j) { p_hat } else { 1.0 - p_hat };
                phi += prob.ln();
            }
        }
        let got = sbm_log_likelihood(&g, &part).unwrap();
        assert!(
            (got - phi).abs() <= 1e-10 * phi.abs().max(1.0),
            "{got} vs {phi}"
        );
    }
}

#[test]
fn standard_basis_starts_with_degree_vector() {
    let params = SbmParams::planted(vec![150, 150], 0.1, 0.02).unwrap();
    let (g, _) = generate_sbm(&params, 3).unwrap();
    let (g, _) = g.largest_connected_component();
    let op = LaplacianOperator::new(&g, LaplacianMode::Standard).unwrap();
    let config = EigenConfig {
        strategy: Strategy::Iterative,
        ..EigenConfig::default()
    };
    let basis = smallest_basis(&op, 2, &config).unwrap();
    assert!(basis.eigenvalues[0].abs() <= 1e-8);
    let root: Vec<f64> = (0..g.n()).map(|i| (g.degree(i) as f64).sqrt()).collect();
    let norm = root.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cosine: f64 = root
        .iter()
        .zip(&basis.vectors[0])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / norm;
    assert!(cosine.abs() >= 1.0 - 1e-8, "cosine {cosine}");
}

#[test]
fn sbm_spectrum_matches_dense_solver() {
    let params = SbmParams::planted(vec![70, 70, 60], 0.15, 0.02).unwrap();
    let (g, _) = generate_sbm(&params, 8).unwrap();
    let (g, _) = g.largest_connected_component();
    for mode in [LaplacianMode::Standard, LaplacianMode::Regularized] {
        let op = LaplacianOperator::new(&g, mode).unwrap();
        let config = EigenConfig {
            strategy: Strategy::Iterative,
            ..EigenConfig::default()
        };
        let basis = smallest_basis(&op, 6, &config).unwrap();
        let mut dense: Vec<f64> = dense_laplacian(&g, mode)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        dense.sort_by(|a, b| a.total_cmp(b));
        for (got, want) in basis.eigenvalues.iter().zip(&dense) {
            assert!((got - want).abs() <= 1e-6, "{mode:?}: {got} vs {want}");
        }
    }
}
