//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once an iteration improves the objective by less than this.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

/// Row-major points, `n` rows of `dim` coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Points<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        Ok(Points { data, dim })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    /// Within-cluster sum of squared distances.
    pub objective: f64,
    /// Objective after seeding and after each Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
    /// Index of the restart that won.
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters `points` into exactly `k` non-empty groups.
///
/// Restart `r` draws from ChaCha8 stream `r` of `seed`; the lowest objective
/// wins, with ties going to the earlier restart.
pub fn kmeans(
    points: Points<'_>,
    k: usize,
    config: &KMeansConfig,
    seed: u64,
) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { n, k });
    }
    let restarts = config.restarts.max(1);
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut run = lloyd(points, k, config, &mut rng);
            run.restart = r;
            run
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| {
            if run.objective < best.objective {
                run
            } else {
                best
            }
        })
        .expect("at least one restart");
    Ok(best)
}

fn plus_plus_seeds(points: Points<'_>, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k * points.dim);
    centroids.extend_from_slice(points.row(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), &centroids[..points.dim]))
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.extend_from_slice(points.row(pick));
        let new = &centroids[c * points.dim..];
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), new));
        }
    }
    centroids
}

fn assign(points: Points<'_>, centroids: &[f64], labels: &mut [usize], dist: &mut [f64]) -> f64 {
    let dim = points.dim;
    let k = centroids.len() / dim;
    let mut objective = 0.0;
    for i in 0..points.len() {
        let row = points.row(i);
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for c in 0..k {
            let d = sq_dist(row, &centroids[c * dim..(c + 1) * dim]);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        labels[i] = best;
        dist[i] = best_d;
        objective += best_d;
    }
    objective
}

/// Moves, for each empty cluster, the point farthest from its own centroid into it.
fn repair_empty(k: usize, labels: &mut [usize], dist: &mut [f64]) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let donor = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dist[b] >= dist[i] => Some(b),
                _ => Some(i),
            })
            .expect("n >= k guarantees a cluster with two members");
        sizes[labels[donor]] -= 1;
        labels[donor] = c;
        sizes[c] = 1;
        dist[donor] = 0.0;
    }
}

fn update_centroids(points: Points<'_>, labels: &[usize], k: usize) -> Vec<f64> {
    let dim = points.dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        sums[l * dim..(l + 1) * dim]
            .iter_mut()
            .zip(points.row(i))
            .for_each(|(s, x)| *s += x);
    }
    for c in 0..k {
        let count = counts[c].max(1) as f64;
        sums[c * dim..(c + 1) * dim]
            .iter_mut()
            .for_each(|s| *s /= count);
    }
    sums
}

fn objective_of(points: Points<'_>, labels: &[usize], centroids: &[f64]) -> f64 {
    let dim = points.dim;
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), &centroids[l * dim..(l + 1) * dim]))
        .sum()
}

fn lloyd(
    points: Points<'_>,
    k: usize,
    config: &KMeansConfig,
    rng: &mut ChaCha8Rng,
) -> KMeansResult {
    let n = points.len();
    let mut centroids = plus_plus_seeds(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut dist = vec![0.0; n];

    assign(points, &centroids, &mut labels, &mut dist);
    repair_empty(k, &mut labels, &mut dist);
    centroids = update_centroids(points, &labels, k);
    let mut objective = objective_of(points, &labels, &centroids);
    let mut trace = vec![objective];

    for _ in 0..config.max_iter {
        let mut next_labels = labels.clone();
        assign(points, &centroids, &mut next_labels, &mut dist);
        repair_empty(k, &mut next_labels, &mut dist);
        let next_centroids = update_centroids(points, &next_labels, k);
        let next_objective = objective_of(points, &next_labels, &next_centroids);
        // Guard against rounding noise making the objective creep upward.
        if next_objective > objective {
            break;
        }
        let improvement = objective - next_objective;
        let unchanged = next_labels == labels;
        labels = next_labels;
        centroids = next_centroids;
        objective = next_objective;
        trace.push(objective);
        if unchanged || improvement < config.tol {
            break;
        }
    }

    KMeansResult {
        labels,
        centroids,
        objective,
        trace,
        restart: 0,
    }
}
