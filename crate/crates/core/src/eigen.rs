//! Lowest eigenpairs of large real symmetric operators.
//!
//! Thick-restart Lanczos with full reorthogonalization: the Krylov basis is
//! grown to a fixed size, the projected matrix is diagonalized, and the
//! lowest Ritz vectors are kept as the start of the next cycle together with
//! the residual direction. A Ritz pair is accepted once
//! `||A u - theta u|| <= tol`.
//!
//! A single Krylov sequence only sees one direction per eigenspace, so exact
//! multiplicities (the spectrum of `H(0)` is all multiplicity) are handled by
//! continuing with a fresh random vector whenever the recurrence breaks
//! down. Nearly degenerate clusters can still hide an eigenvalue behind a
//! converged one; with `verify` set, the solver repeats a one-eigenvalue
//! search in the orthogonal complement of the accepted vectors and swaps in
//! anything lower.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use thiserror::Error;

use crate::rng::{rng_from_seed, Rng};

pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("requested {k} eigenvalues of a {dim}-dimensional operator")]
    InvalidRequest { k: usize, dim: usize },
    #[error("no convergence after {matvecs} products; residuals {residuals:?}")]
    NoConvergence { matvecs: usize, residuals: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    /// Residual-norm acceptance threshold.
    pub tol: f64,
    /// Krylov basis size per cycle; `None` picks `max(2k + 16, 32)`.
    pub max_basis: Option<usize>,
    pub max_matvecs: usize,
    pub seed: u64,
    pub verify: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-10, max_basis: None, max_matvecs: 500_000, seed: 0x5EED_1A2C_205, verify: true }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// True residual norms `||A u - theta u||`.
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

const BREAKDOWN: f64 = 1e-10;

/// Eight independent partial sums so the loop vectorizes; the summation
/// order is fixed, so results do not depend on the thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (xa, xb) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += xa[i] * xb[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Classical Gram-Schmidt against `locked` and `basis`, with a second
/// round only when the first removed most of the vector (DGKS criterion).
/// Returns the accumulated coefficients against `basis`.
fn orthogonalize(w: &mut [f64], locked: &[Vec<f64>], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    let mut before = norm(w);
    for _ in 0..2 {
        let hl: Vec<f64> = locked.iter().map(|v| dot(v, w)).collect();
        for (v, h) in locked.iter().zip(hl) {
            axpy(-h, v, w);
        }
        let hb: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for ((v, h), c) in basis.iter().zip(hb).zip(coeffs.iter_mut()) {
            axpy(-h, v, w);
            *c += h;
        }
        let after = norm(w);
        if after > std::f64::consts::FRAC_1_SQRT_2 * before {
            break;
        }
        before = after;
    }
    coeffs
}

fn random_orthogonal(
    rng: &mut Rng,
    dim: usize,
    locked: &[Vec<f64>],
    basis: &[Vec<f64>],
) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let before = norm(&v);
        orthogonalize(&mut v, locked, basis);
        let nv = norm(&v);
        if nv > 1e-6 * before {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

fn exhausted(matvecs: usize) -> EigenError {
    EigenError::NoConvergence { matvecs, residuals: vec![] }
}

struct Ritz {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>, dim: usize) -> Vec<f64> {
    let mut u = vec![0.0; dim];
    for (v, c) in basis.iter().zip(coeffs) {
        axpy(c, v, &mut u);
    }
    u
}

/// Lowest `nev` eigenpairs of `op` restricted to the complement of `locked`.
fn thick_restart<O: SymmetricOperator + ?Sized>(
    op: &O,
    nev: usize,
    locked: &[Vec<f64>],
    opts: &EigenOptions,
    start: Option<&[f64]>,
    rng: &mut Rng,
    matvecs: &mut usize,
) -> Result<Ritz, EigenError> {
    let dim = op.dim();
    let avail = dim - locked.len();
    let m_max = opts.max_basis.unwrap_or((2 * nev + 16).max(32)).max(nev + 2).min(avail);
    let keep = ((nev + m_max) / 2).clamp(nev.min(m_max - 1), m_max - 1);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let first = start.and_then(|x| {
        let mut v = x.to_vec();
        let before = norm(&v);
        orthogonalize(&mut v, locked, &[]);
        let nv = norm(&v);
        (nv > 1e-6 * before).then(|| v.into_iter().map(|a| a / nv).collect())
    });
    match first {
        Some(v) => basis.push(v),
        None => basis.push(random_orthogonal(rng, dim, locked, &basis).ok_or_else(|| exhausted(*matvecs))?),
    }
    let mut t = DMatrix::<f64>::zeros(m_max, m_max);
    let mut w = vec![0.0; dim];
    let mut scale = f64::MIN_POSITIVE;
    let mut j = 0;

    loop {
        let mut last_beta = 0.0;
        while j < m_max {
            op.apply(&basis[j], &mut w);
            *matvecs += 1;
            let coeffs = orthogonalize(&mut w, locked, &basis);
            let alpha = coeffs[j];
            t[(j, j)] = alpha;
            let beta = norm(&w);
            scale = scale.max(alpha.abs()).max(beta);
            if j + 1 < m_max {
                let next = if beta > BREAKDOWN * scale {
                    t[(j + 1, j)] = beta;
                    t[(j, j + 1)] = beta;
                    w.iter().map(|x| x / beta).collect()
                } else {
                    t[(j + 1, j)] = 0.0;
                    t[(j, j + 1)] = 0.0;
                    random_orthogonal(rng, dim, locked, &basis).ok_or_else(|| exhausted(*matvecs))?
                };
                basis.push(next);
            } else {
                last_beta = if beta > BREAKDOWN * scale { beta } else { 0.0 };
            }
            j += 1;
        }

        let eig = SymmetricEigen::new(t.clone());
        let mut order: Vec<usize> = (0..m_max).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let estimates: Vec<f64> =
            order.iter().map(|&i| (last_beta * eig.eigenvectors[(m_max - 1, i)]).abs()).collect();

        if estimates[..nev].iter().all(|&r| r <= opts.tol) {
            let vectors = order[..nev]
                .iter()
                .map(|&i| combine(&basis, eig.eigenvectors.column(i).iter().copied(), dim))
                .collect();
            let values = order[..nev].iter().map(|&i| eig.eigenvalues[i]).collect();
            return Ok(Ritz { values, vectors });
        }
        if *matvecs >= opts.max_matvecs {
            return Err(EigenError::NoConvergence { matvecs: *matvecs, residuals: estimates[..nev].to_vec() });
        }

        // restart from the `keep` lowest Ritz vectors plus the residual direction
        let mut kept: Vec<Vec<f64>> = order[..keep]
            .iter()
            .map(|&i| combine(&basis, eig.eigenvectors.column(i).iter().copied(), dim))
            .collect();
        let next = if last_beta > 0.0 {
            w.iter().map(|x| x / last_beta).collect()
        } else {
            random_orthogonal(rng, dim, locked, &kept).ok_or_else(|| exhausted(*matvecs))?
        };
        t.fill(0.0);
        for (r, &i) in order[..keep].iter().enumerate() {
            t[(r, r)] = eig.eigenvalues[i];
            let s = last_beta * eig.eigenvectors[(m_max - 1, i)];
            t[(r, keep)] = s;
            t[(keep, r)] = s;
        }
        kept.push(next);
        basis = kept;
        j = keep;
    }
}

fn residual_norm<O: SymmetricOperator + ?Sized>(op: &O, value: f64, v: &[f64], scratch: &mut [f64]) -> f64 {
    op.apply(v, scratch);
    scratch.iter().zip(v).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt()
}

/// The `k` lowest eigenpairs of `op`.
pub fn lowest_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs, EigenError> {
    lowest_eigenpairs_from(op, k, opts, None)
}

/// As [`lowest_eigenpairs`], with the Krylov space grown from `start`
/// (typically eigenvectors of a nearby operator) instead of a random vector.
pub fn lowest_eigenpairs_from<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &EigenOptions,
    start: Option<&[f64]>,
) -> Result<EigenPairs, EigenError> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(EigenError::InvalidRequest { k, dim });
    }
    let mut rng = rng_from_seed(opts.seed);
    let mut matvecs = 0;
    let Ritz { mut values, mut vectors } = thick_restart(op, k, &[], opts, start, &mut rng, &mut matvecs)?;

    if opts.verify && k < dim {
        let margin = 2.0 * opts.tol;
        for _ in 0..=2 * k {
            let probe = thick_restart(op, 1, &vectors, opts, None, &mut rng, &mut matvecs)?;
            let candidate = probe.values[0];
            if candidate >= values[k - 1] - margin {
                break;
            }
            let pos = values.partition_point(|&v| v <= candidate);
            values.insert(pos, candidate);
            vectors.insert(pos, probe.vectors.into_iter().next().expect("one vector"));
            values.pop();
            vectors.pop();
        }
    }

    let mut scratch = vec![0.0; dim];
    let residuals = values.iter().zip(&vectors).map(|(&l, v)| residual_norm(op, l, v, &mut scratch)).collect();
    matvecs += k;
    Ok(EigenPairs { values, vectors, residuals, matvecs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dense_eigenvalues;

    fn random_symmetric(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn matches_dense_on_random_matrices() {
        for (dim, k, seed) in [(30usize, 3usize, 1u64), (120, 6, 2), (200, 10, 3)] {
            let a = random_symmetric(dim, seed);
            let want = dense_eigenvalues(&a);
            let got = lowest_eigenpairs(&a, k, &EigenOptions::default()).unwrap();
            for i in 0..k {
                assert!((got.values[i] - want[i]).abs() < 1e-9, "dim {dim} i {i}");
                assert!(got.residuals[i] < 1e-8);
            }
        }
    }

    #[test]
    fn resolves_exact_multiplicities() {
        // diag(0, 1, 1, 1, 2, 2, ...) rotated is still degenerate
        let dim = 60;
        let mut d = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            d[(i, i)] = match i {
                0 => 0.0,
                1..=3 => 1.0,
                4..=8 => 2.0,
                _ => 3.0 + i as f64 * 0.01,
            };
        }
        let q = random_symmetric(dim, 9).symmetric_eigen().eigenvectors;
        let a = &q * d * q.transpose();
        let got = lowest_eigenpairs(&a, 7, &EigenOptions::default()).unwrap();
        let want = [0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        for (g, w) in got.values.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{:?}", got.values);
        }
    }

    #[test]
    fn whole_space() {
        let a = random_symmetric(8, 4);
        let got = lowest_eigenpairs(&a, 8, &EigenOptions::default()).unwrap();
        let want = dense_eigenvalues(&a);
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_requests() {
        let a = random_symmetric(5, 1);
        assert_eq!(
            lowest_eigenpairs(&a, 0, &EigenOptions::default()).unwrap_err(),
            EigenError::InvalidRequest { k: 0, dim: 5 }
        );
        assert!(lowest_eigenpairs(&a, 6, &EigenOptions::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_residuals() {
        let a = random_symmetric(400, 5);
        let opts = EigenOptions { max_matvecs: 30, max_basis: Some(20), ..Default::default() };
        match lowest_eigenpairs(&a, 4, &opts) {
            Err(EigenError::NoConvergence { residuals, .. }) => assert_eq!(residuals.len(), 4),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = random_symmetric(150, 6);
        let x = lowest_eigenpairs(&a, 4, &EigenOptions::default()).unwrap();
        let y = lowest_eigenpairs(&a, 4, &EigenOptions::default()).unwrap();
        assert_eq!(x.values, y.values);
    }
}
