//! Smallest eigenpairs of symmetric operators that are only available through matvecs.
//!
//! The iterative path is a block Krylov method with thick restarts. Each
//! cycle grows an orthonormal basis `V` block by block, where the next block
//! is `Op` applied to the previous one and orthogonalized against everything
//! so far. `Op V` is stored alongside `V`, so the Rayleigh-Ritz projection
//! `V^T Op V` costs no extra matvecs. A restart keeps the lowest Ritz vectors
//! and continues from their images under `Op`. Working with a block rather than a
//! single vector lets the method resolve repeated eigenvalues up to the block
//! size.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A real symmetric linear map on `R^dim`.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = Op x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Operators of size at most this use the dense path under [`Strategy::Auto`].
pub const DENSE_CUTOFF: usize = 128;

// Krylov basis capacity: this many blocks, and never fewer than `MIN_BASIS` vectors.
const BASIS_BLOCKS: usize = 12;
const MIN_BASIS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Dense for `dim <= DENSE_CUTOFF`, iterative otherwise.
    #[default]
    Auto,
    Iterative,
    Dense,
}

#[derive(Debug, Clone)]
pub struct EigenConfig {
    /// Target relative residual `||Op y - l y|| <= tol * max(1, |l|)`.
    pub tol: f64,
    /// Cap on block expansion steps.
    pub max_iter: usize,
    /// Extra Ritz pairs carried in the block beyond those requested.
    pub extra: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-8,
            max_iter: 5000,
            extra: 2,
            strategy: Strategy::Auto,
            seed: 0,
        }
    }
}

/// Ascending eigenvalues with unit eigenvectors (stored as columns).
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `||Op y - l y||_2` for each pair.
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

pub fn smallest_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    config: &EigenConfig,
) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot compute {k} eigenpairs of a {n}-dimensional operator"
        )));
    }
    let dense = match config.strategy {
        Strategy::Dense => true,
        Strategy::Iterative => false,
        Strategy::Auto => n <= DENSE_CUTOFF,
    };
    if dense {
        Ok(dense_smallest(op, k))
    } else {
        block_krylov(op, k, config)
    }
}

/// Materializes the operator and diagonalizes it.
pub fn dense_smallest<O: SymmetricOperator + ?Sized>(op: &O, k: usize) -> EigenPairs {
    let n = op.dim();
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            matrix[(i, j)] = col[i];
        }
    }
    let (values, vectors) = sorted_symmetric_eigen(&symmetrize(matrix));
    let vectors: Vec<Vec<f64>> = (0..k)
        .map(|j| vectors.column(j).iter().copied().collect())
        .collect();
    let values = values[..k].to_vec();
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(v, &l)| residual_norm(op, v, l))
        .collect();
    EigenPairs {
        values,
        vectors,
        residuals,
        matvecs: n + k,
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Eigen-decomposition with eigenvalues ascending and vectors permuted to match.
pub fn sorted_symmetric_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn residual_norm<O: SymmetricOperator + ?Sized>(op: &O, v: &[f64], lambda: f64) -> f64 {
    let mut w = vec![0.0; v.len()];
    op.apply(v, &mut w);
    w.iter()
        .zip(v)
        .map(|(wi, vi)| (wi - lambda * vi).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis `V` and `W = Op V`, both `n x cap`, first `len` columns in use.
struct Krylov<'o, O: ?Sized> {
    op: &'o O,
    n: usize,
    v: DMatrix<f64>,
    w: DMatrix<f64>,
    len: usize,
    rng: ChaCha8Rng,
    matvecs: usize,
}

impl<'o, O: SymmetricOperator + ?Sized> Krylov<'o, O> {
    fn column(m: &DMatrix<f64>, j: usize) -> &[f64] {
        let n = m.nrows();
        &m.as_slice()[j * n..(j + 1) * n]
    }

    fn random_block(&mut self, b: usize) -> DMatrix<f64> {
        let rng = &mut self.rng;
        DMatrix::from_fn(self.n, b, |_, _| rng.random::<f64>() - 0.5)
    }

    /// Two passes of block Gram-Schmidt of `c` against the basis.
    fn project_out(&self, c: &mut DMatrix<f64>) {
        if self.len == 0 {
            return;
        }
        let v = self.v.columns(0, self.len);
        for _ in 0..2 {
            let h = v.tr_mul(c);
            c.gemm(-1.0, &v, &h, 1.0);
        }
    }

    /// Orthonormalizes `c` against the basis and itself, applies the operator
    /// and appends. Columns that collapse are replaced by random directions.
    /// Returns the number of columns added.
    fn append(&mut self, mut c: DMatrix<f64>) -> usize {
        let room = (self.v.ncols() - self.len).min(self.n - self.len);
        if c.ncols() > room {
            c = c.columns(0, room).into_owned();
        }
        let original: Vec<f64> = c.column_iter().map(|col| col.norm()).collect();
        self.project_out(&mut c);
        let mut accepted = 0;
        for (j, &norm) in original.iter().enumerate() {
            let mut col = c.column(j).into_owned();
            let mut scale = norm;
            let mut ok = false;
            for attempt in 0..9 {
                if attempt > 0 {
                    let mut r = self.random_block(1);
                    self.project_out(&mut r);
                    scale = r.norm();
                    col = r.column(0).into_owned();
                }
                for _ in 0..2 {
                    for i in 0..accepted {
                        let prev = Self::column(&self.v, self.len + i);
                        let h: f64 = dot(prev, col.as_slice());
                        col.iter_mut().zip(prev).for_each(|(x, p)| *x -= h * p);
                    }
                }
                let remaining = col.norm();
                if scale > 0.0 && scale.is_finite() && remaining > 1e-10 * scale {
                    col /= remaining;
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let slot = self.len + accepted;
            self.v.column_mut(slot).copy_from(&col);
            let n = self.n;
            let w = &mut self.w.as_mut_slice()[slot * n..(slot + 1) * n];
            self.op.apply(col.as_slice(), w);
            self.matvecs += 1;
            accepted += 1;
        }
        self.len += accepted;
        accepted
    }
}

fn block_krylov<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    config: &EigenConfig,
) -> Result<EigenPairs> {
    let n = op.dim();
    let block = (k + config.extra).min(n);
    let max_basis = (BASIS_BLOCKS * block).max(MIN_BASIS).min(n);
    let keep = (max_basis / 2)
        .max(block)
        .min(max_basis.saturating_sub(block).max(k));

    let mut kry = Krylov {
        op,
        n,
        v: DMatrix::zeros(n, max_basis),
        w: DMatrix::zeros(n, max_basis),
        len: 0,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        matvecs: 0,
    };
    let start = kry.random_block(block);
    kry.append(start);
    let mut frontier = 0;

    let mut steps = 0;
    let mut last_residuals = vec![f64::INFINITY; k];
    loop {
        // Grow the basis block by block until full.
        while kry.len < max_basis {
            let before = kry.len;
            let width = block.min(before - frontier);
            let next = if width == 0 {
                kry.random_block(block)
            } else {
                kry.w.columns(frontier, width).into_owned()
            };
            kry.append(next);
            frontier = before;
            steps += 1;
            if kry.len == before {
                break;
            }
        }

        // Rayleigh-Ritz on the current basis.
        let d = kry.len;
        let v = kry.v.columns(0, d);
        let w = kry.w.columns(0, d);
        let h = v.tr_mul(&w);
        let (theta, s) = sorted_symmetric_eigen(&symmetrize(h));
        let retain = keep.min(d);
        let s = s.columns(0, retain);
        let ritz = v * s;
        let op_ritz = w * s;

        let residuals: Vec<f64> = (0..k)
            .map(|j| (op_ritz.column(j) - ritz.column(j) * theta[j]).norm())
            .collect();
        let converged = residuals
            .iter()
            .zip(&theta)
            .all(|(&r, &l)| r <= config.tol * l.abs().max(1.0));
        if converged || d == n {
            let vectors: Vec<Vec<f64>> = (0..k)
                .map(|j| ritz.column(j).iter().copied().collect())
                .collect();
            // Report true residuals rather than the ones carried through restarts.
            let residuals = vectors
                .iter()
                .zip(&theta)
                .map(|(y, &l)| residual_norm(op, y, l))
                .collect();
            return Ok(EigenPairs {
                values: theta[..k].to_vec(),
                vectors,
                residuals,
                matvecs: kry.matvecs + k,
            });
        }
        last_residuals = residuals;
        if steps >= config.max_iter {
            break;
        }

        // Thick restart: keep the lowest Ritz vectors, expand from their images.
        kry.v.columns_mut(0, retain).copy_from(&ritz);
        kry.w.columns_mut(0, retain).copy_from(&op_ritz);
        kry.len = retain;
        let next = op_ritz.columns(0, block.min(retain)).into_owned();
        kry.append(next);
        frontier = retain;
        steps += 1;
    }

    let worst = last_residuals.iter().copied().fold(0.0, f64::max);
    Err(Error::NotConverged {
        iterations: steps,
        worst,
        residuals: last_residuals,
    })
}

/// Dense symmetric matrix as an operator; used by tests and small fallbacks.
pub struct DenseOperator(pub DMatrix<f64>);

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..n).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }
}

/// `-Op`, for reaching the top of a spectrum with a smallest-eigenvalue solver.
pub struct Negated<'a, O: ?Sized>(pub &'a O);

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for Negated<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal(values: &[f64]) -> DenseOperator {
        DenseOperator(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            values,
        )))
    }

    fn iterative() -> EigenConfig {
        EigenConfig {
            strategy: Strategy::Iterative,
            ..Default::default()
        }
    }

    #[test]
    fn finds_smallest_of_a_diagonal() {
        let values: Vec<f64> = (0..300).map(|i| ((i * 37) % 300) as f64 / 10.0).collect();
        let pairs = smallest_eigenpairs(&diagonal(&values), 4, &iterative()).unwrap();
        for (got, want) in pairs.values.iter().zip([0.0, 0.1, 0.2, 0.3]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn resolves_repeated_eigenvalues_within_block() {
        let mut values = vec![1.0; 3];
        values.extend((0..250).map(|i| 2.0 + i as f64 * 0.01));
        let pairs = smallest_eigenpairs(&diagonal(&values), 3, &iterative()).unwrap();
        for v in &pairs.values {
            assert!((v - 1.0).abs() < 1e-9);
        }
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&pairs.vectors[i], &pairs.vectors[j]) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_k() {
        let op = diagonal(&[1.0, 2.0]);
        assert!(smallest_eigenpairs(&op, 0, &iterative()).is_err());
        assert!(smallest_eigenpairs(&op, 3, &iterative()).is_err());
    }

    #[test]
    fn tiny_operator_uses_whole_space() {
        let op = diagonal(&[3.0, -1.0, 2.0]);
        let pairs = smallest_eigenpairs(&op, 3, &iterative()).unwrap();
        assert_eq!(pairs.values.len(), 3);
        assert!((pairs.values[0] + 1.0).abs() < 1e-12);
        assert!((pairs.values[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let values: Vec<f64> = (0..500).map(|i| 1.0 + 1e-7 * i as f64).collect();
        let config = EigenConfig {
            max_iter: 1,
            tol: 1e-15,
            ..iterative()
        };
        match smallest_eigenpairs(&diagonal(&values), 2, &config) {
            Err(Error::NotConverged { residuals, .. }) => assert_eq!(residuals.len(), 2),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn negation_flips_spectrum() {
        let op = diagonal(&[1.0, 5.0, 3.0]);
        let top = dense_smallest(&Negated(&op), 1);
        assert!((top.values[0] + 5.0).abs() < 1e-12);
    }
}
