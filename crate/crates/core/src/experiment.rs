//! Two-community phase diagram: accuracy and the detectability statistic over a `(p1, q)` grid.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::num;
use crate::metrics::accuracy;
use crate::sbm::{generate_sbm, SbmParams};
use crate::spectral::{sgc_detect, SgcConfig};

/// Fresh sub-seeds tried per run before the whole cell is marked failed.
pub const MAX_ATTEMPTS: usize = 5;

#[derive(Debug, Clone)]
pub struct PhaseConfig {
    pub p1: Vec<f64>,
    pub q: Vec<f64>,
    pub p2: f64,
    pub sizes: (usize, usize),
    pub seeds_per_cell: usize,
    pub seed: u64,
    pub sgc: SgcConfig,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            p1: grid(0.02, 0.20, 0.02),
            q: grid(0.01, 0.15, 0.01),
            p2: 0.1,
            sizes: (250, 250),
            seeds_per_cell: 10,
            seed: 0,
            sgc: SgcConfig::default(),
        }
    }
}

/// Inclusive arithmetic grid `start, start + step, ..., stop`, rounded to 12 significant digits.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| crate::format::round_sig(start + i as f64 * step))
        .collect()
}

/// Parses `start:stop:step` or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad grid {text:?}; use start:stop:step or a,b,c"));
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        grid(start, stop, step)
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?
    };
    if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument(format!(
            "grid {text:?} must be non-empty with values in [0, 1]"
        )));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub p1: f64,
    pub q: f64,
    pub p2: f64,
    /// `sqrt(p1 p2)`.
    pub q_star: f64,
    pub mean_accuracy: f64,
    pub mean_theta: f64,
    /// Runs averaged into the means.
    pub runs: usize,
    /// Draws discarded because the sampled graph was disconnected.
    pub retries: usize,
    pub failure: Option<String>,
}

impl CellResult {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

struct Run {
    accuracy: f64,
    theta: f64,
    retries: usize,
}

fn run_once(params: &SbmParams, config: &PhaseConfig, seeds: &[u64]) -> Result<Run> {
    for (attempt, &seed) in seeds.iter().enumerate() {
        let (graph, planted) = generate_sbm(params, seed)?;
        if !graph.is_connected() {
            continue;
        }
        let outcome = sgc_detect(&graph, 2, &config.sgc, seed)?;
        return Ok(Run {
            accuracy: accuracy(outcome.partition.labels(), planted.labels())?,
            theta: outcome.basis.theta(),
            retries: attempt,
        });
    }
    Err(Error::Disconnected)
}

fn run_cell(config: &PhaseConfig, index: usize, p1: f64, q: f64) -> CellResult {
    let mut result = CellResult {
        p1,
        q,
        p2: config.p2,
        q_star: (p1 * config.p2).sqrt(),
        mean_accuracy: f64::NAN,
        mean_theta: f64::NAN,
        runs: 0,
        retries: 0,
        failure: None,
    };
    let params = match SbmParams::two_block(config.sizes.0, config.sizes.1, p1, config.p2, q) {
        Ok(p) => p,
        Err(e) => {
            result.failure = Some(e.to_string());
            return result;
        }
    };
    // Each cell owns one ChaCha8 stream; run r uses draws r*MAX_ATTEMPTS.. of it.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let seeds: Vec<u64> = (0..config.seeds_per_cell * MAX_ATTEMPTS)
        .map(|_| rng.next_u64())
        .collect();
    let (mut acc, mut theta) = (0.0, 0.0);
    for chunk in seeds.chunks(MAX_ATTEMPTS) {
        match run_once(&params, config, chunk) {
            Ok(run) => {
                acc += run.accuracy;
                theta += run.theta;
                result.retries += run.retries;
                result.runs += 1;
            }
            Err(Error::Disconnected) => {
                result.retries += MAX_ATTEMPTS;
                result.failure = Some(format!(
                    "graph disconnected in {MAX_ATTEMPTS} consecutive draws"
                ));
                return result;
            }
            Err(e) => {
                result.failure = Some(e.to_string());
                return result;
            }
        }
    }
    result.mean_accuracy = acc / result.runs as f64;
    result.mean_theta = theta / result.runs as f64;
    result
}

/// Evaluates every `(p1, q)` cell; output is in row-major grid order (`p1` outer).
pub fn phase_diagram(config: &PhaseConfig) -> Result<Vec<CellResult>> {
    if config.p1.is_empty() || config.q.is_empty() {
        return Err(Error::InvalidArgument("phase-diagram grid is empty".into()));
    }
    if config.seeds_per_cell == 0 {
        return Err(Error::InvalidArgument(
            "seeds_per_cell must be positive".into(),
        ));
    }
    let cells: Vec<(f64, f64)> = config
        .p1
        .iter()
        .flat_map(|&p1| config.q.iter().map(move |&q| (p1, q)))
        .collect();
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(i, &(p1, q))| run_cell(config, i, p1, q))
        .collect())
}

pub const CSV_HEADER: &str = "p1,q,p2,q_star,mean_accuracy,mean_theta,runs,retries,status";

pub fn to_csv(cells: &[CellResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in cells {
        let status = match &c.failure {
            None => "ok".to_string(),
            Some(f) => format!("\"failed: {}\"", f.replace('"', "'")),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            num(c.p1),
            num(c.q),
            num(c.p2),
            num(c.q_star),
            num(c.mean_accuracy),
            num(c.mean_theta),
            c.runs,
            c.retries,
            status
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = grid(0.02, 0.20, 0.02);
        assert_eq!(g.len(), 10);
        assert_eq!(g[2], 0.06);
        assert_eq!(*g.last().unwrap(), 0.2);
        assert_eq!(grid(0.01, 0.15, 0.01).len(), 15);
    }

    #[test]
    fn parses_grids() {
        assert_eq!(parse_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(parse_grid("0.3:0.1:0.1").is_err());
        assert!(parse_grid("0.1:0.3").is_err());
        assert!(parse_grid("1.5").is_err());
        assert!(parse_grid("").is_err());
    }

    fn small(p1: f64, q: f64) -> PhaseConfig {
        PhaseConfig {
            p1: vec![p1],
            q: vec![q],
            sizes: (60, 60),
            seeds_per_cell: 3,
            seed: 5,
            ..PhaseConfig::default()
        }
    }

    #[test]
    fn single_cell_csv_shape() {
        let cells = phase_diagram(&small(0.5, 0.02)).unwrap();
        let csv = to_csv(&cells);
        assert_eq!(csv.lines().count(), 2);
        assert!(cells[0].ok());
        assert!(cells[0].mean_accuracy > 0.95);
    }

    #[test]
    fn deterministic() {
        let a = phase_diagram(&small(0.3, 0.05)).unwrap();
        let b = phase_diagram(&small(0.3, 0.05)).unwrap();
        assert_eq!(to_csv(&a), to_csv(&b));
    }

    #[test]
    fn hopeless_cells_fail_after_retries() {
        let cells = phase_diagram(&small(0.0, 0.0)).unwrap();
        assert!(!cells[0].ok());
        assert_eq!(cells[0].retries, MAX_ATTEMPTS);
        assert!(to_csv(&cells).contains("failed"));
    }
}
