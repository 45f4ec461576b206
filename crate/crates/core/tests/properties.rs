use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;
use sgcgen::eigen::{self, smallest_eigenpairs, EigenConfig, SymmetricOperator};
use sgcgen::kmeans::{kmeans, KMeansConfig, Points};
use sgcgen::metrics::{f_measure, nmi, rand_index, Orientation};
use sgcgen::selection::{mismatch_r1, mismatch_r2, mismatch_r3, mismatch_r4, sbm_log_likelihood};
use sgcgen::spectral::LaplacianOperator;
use sgcgen::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 1..3 * n)
            .prop_map(move |edges| Graph::from_edges(n, edges).unwrap())
    })
}

/// Labels on `0..K` by first appearance.
fn compact(raw: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    raw.iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn graph_and_labels(max_n: usize) -> impl Strategy<Value = (Graph, Vec<usize>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.n();
        prop::collection::vec(0..4usize, n).prop_map(move |raw| (g.clone(), compact(&raw)))
    })
}

fn label_pair(max_n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0..4usize, n),
            prop::collection::vec(0..4usize, n),
        )
            .prop_map(|(a, b)| (compact(&a), compact(&b)))
    })
}

fn relabel(labels: &[usize], shift: usize) -> Vec<usize> {
    let k = labels.iter().max().unwrap() + 1;
    labels.iter().map(|&l| (l + shift) % k).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_is_simple_and_symmetric(g in graph_strategy(30)) {
        let mut degree_sum = 0;
        for i in 0..g.n() {
            let nb = g.neighbors(i);
            prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!nb.contains(&i));
            for &j in nb {
                prop_assert!(g.has_edge(j, i));
            }
            degree_sum += nb.len();
        }
        prop_assert_eq!(degree_sum, 2 * g.m());
    }

    #[test]
    fn edge_list_round_trips(g in graph_strategy(30)) {
        let parsed = parse_edge_list(
            &g.to_edge_list(),
            &ParseOptions { ids: IdMapping::ZeroIndexed, ..ParseOptions::default() },
        );
        if g.m() == 0 {
            prop_assert!(parsed.is_err());
        } else {
            let parsed = parsed.unwrap();
            let mut a: Vec<_> = g.edges().collect();
            // Trailing isolated nodes have no line to come back from.
            let mut b: Vec<_> = parsed.graph.edges().collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn partition_counts_are_consistent((g, labels) in graph_and_labels(25)) {
        let p = Partition::new(&g, labels).unwrap();
        prop_assert_eq!(p.sizes().iter().sum::<usize>(), g.n());
        prop_assert!(p.sizes().iter().all(|&s| s > 0));
        let mut total = 0;
        for a in 0..p.k() {
            for b in a..p.k() {
                prop_assert_eq!(p.block_edges(a, b), p.block_edges(b, a));
                total += p.block_edges(a, b);
            }
        }
        prop_assert_eq!(total, g.m());
        prop_assert!(p.check_against(&g).is_ok());
    }

    #[test]
    fn external_metrics_ignore_label_names((x, y) in label_pair(20), shift in 1..4usize) {
        let y2 = relabel(&y, shift);
        prop_assert!((nmi(&x, &y).unwrap() - nmi(&x, &y2).unwrap()).abs() < 1e-12);
        prop_assert!((rand_index(&x, &y).unwrap() - rand_index(&x, &y2).unwrap()).abs() < 1e-12);
        prop_assert!((f_measure(&x, &y).unwrap() - f_measure(&x, &y2).unwrap()).abs() < 1e-12);
        prop_assert!((accuracy(&x, &y).unwrap() - accuracy(&x, &y2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn external_metrics_are_bounded((x, y) in label_pair(20)) {
        for v in [
            nmi(&x, &y).unwrap(),
            rand_index(&x, &y).unwrap(),
            f_measure(&x, &y).unwrap(),
            accuracy(&x, &y).unwrap(),
        ] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
        prop_assert!((nmi(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(accuracy(&x, &x).unwrap(), 1.0);
        // Symmetric measures.
        prop_assert!((nmi(&x, &y).unwrap() - nmi(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((rand_index(&x, &y).unwrap() - rand_index(&y, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mismatch_scores_are_well_formed((g, labels) in graph_and_labels(20)) {
        prop_assume!(g.m() > 0);
        let p = Partition::new(&g, labels).unwrap();
        let q = -mismatch_r2(&g, &p).unwrap();
        prop_assert!((-1.0..=1.0).contains(&q));
        let phi = sbm_log_likelihood(&g, &p).unwrap();
        prop_assert!(phi <= 1e-12);
        let r1 = mismatch_r1(&g, &p, 1e-6, 0).unwrap();
        prop_assert!(r1 >= 0.0);
        let k = p.k() as f64;
        let gap = mismatch_r4(&g, &p).unwrap() - mismatch_r3(&g, &p).unwrap();
        let expected = ((g.m() as f64).ln() / 2.0 - 1.0) * k * (k - 1.0);
        prop_assert!((gap - expected).abs() < 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn laplacian_is_symmetric_psd(g in graph_strategy(16), regularized in any::<bool>()) {
        let mode = if regularized { LaplacianMode::Regularized } else { LaplacianMode::Standard };
        prop_assume!(g.m() > 0);
        prop_assume!(regularized || (0..g.n()).all(|i| g.degree(i) > 0));
        let op = LaplacianOperator::new(&g, mode).unwrap();
        let n = g.n();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            op.apply(&e, &mut y);
            for i in 0..n {
                m[(i, j)] = y[i];
            }
        }
        prop_assert!((&m - m.transpose()).amax() < 1e-12);
        let smallest = m.symmetric_eigen().eigenvalues.min();
        prop_assert!(smallest > -1e-10);
    }

    #[test]
    fn iterative_eigenpairs_are_orthonormal(g in graph_strategy(40), seed in any::<u64>()) {
        prop_assume!(g.m() > 0);
        let op = LaplacianOperator::new(&g, LaplacianMode::Regularized).unwrap();
        let k = 3.min(g.n());
        let config = EigenConfig { strategy: eigen::Strategy::Iterative, seed, ..EigenConfig::default() };
        let pairs = smallest_eigenpairs(&op, k, &config).unwrap();
        prop_assert!(pairs.values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        for a in 0..k {
            for b in 0..k {
                let d: f64 = pairs.vectors[a].iter().zip(&pairs.vectors[b]).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                prop_assert!((d - target).abs() < 1e-8);
            }
        }
        for (r, l) in pairs.residuals.iter().zip(&pairs.values) {
            prop_assert!(*r <= 1e-8 * l.abs().max(1.0));
        }
    }

    #[test]
    fn kmeans_objective_never_increases(
        data in prop::collection::vec(-5.0..5.0f64, 20..80),
        k in 2..5usize,
        seed in any::<u64>(),
    ) {
        let data = &data[..data.len() / 2 * 2];
        let result = kmeans(Points::new(data, 2).unwrap(), k, &KMeansConfig::default(), seed).unwrap();
        prop_assert!(result.trace.windows(2).all(|w| w[1] <= w[0]));
        let mut used = vec![false; k];
        result.labels.iter().for_each(|&l| used[l] = true);
        prop_assert!(used.iter().all(|&u| u));
    }

    #[test]
    fn sbm_sampling_is_deterministic(seed in any::<u64>(), p in 0.0..1.0f64, q in 0.0..1.0f64) {
        let params = SbmParams::two_block(12, 9, p, 1.0 - p, q).unwrap();
        let (a, la) = generate_sbm(&params, seed).unwrap();
        let (b, lb) = generate_sbm(&params, seed).unwrap();
        prop_assert_eq!(a.to_edge_list(), b.to_edge_list());
        prop_assert_eq!(la, lb);
    }

    #[test]
    fn average_rank_stays_in_range(
        values in prop::collection::vec(prop::collection::vec(-3i32..3, 4), 2..6),
    ) {
        let methods: Vec<String> = (0..values.len()).map(|i| format!("m{i}")).collect();
        let metrics: Vec<(String, Orientation)> = (0..4)
            .map(|j| (format!("c{j}"), if j % 2 == 0 { Orientation::HigherBetter } else { Orientation::LowerBetter }))
            .collect();
        let table: Vec<Vec<Option<f64>>> = values
            .iter()
            .map(|row| row.iter().map(|&v| Some(v as f64)).collect())
            .collect();
        let count = methods.len() as f64;
        let ranks = average_rank(methods, metrics, table).unwrap();
        for r in &ranks.avg_rank {
            prop_assert!((1.0..=count).contains(&r.unwrap()));
        }
        // Competition ranks in each column: the best value always has rank 1.
        for j in 0..4 {
            prop_assert!(ranks.ranks.iter().any(|row| row[j] == Some(1)));
        }
    }
}
