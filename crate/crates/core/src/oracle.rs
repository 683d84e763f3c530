//! Dense reference constructions for cross-checking the implicit operators
//! at small `n`.
//!
//! Matrices are assembled entry by entry from the definitions: the `1/2`,
//! `-1/2` pattern of each one-qubit term and a per-literal clause check. No
//! code from the implicit path is reused.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::sat::Formula;

/// Largest `n` for which dense matrices are built.
pub const MAX_DENSE_VARS: usize = 12;

fn violated(formula: &Formula, a: usize) -> f64 {
    formula
        .clauses()
        .iter()
        .filter(|c| {
            c.literals().iter().all(|l| {
                let bit = (a >> l.var) & 1 == 1;
                // literal false
                bit == l.negated
            })
        })
        .count() as f64
}

fn dense_parts(formula: &Formula) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let n = formula.num_vars();
    if n > MAX_DENSE_VARS {
        return None;
    }
    let dim = 1usize << n;
    let mut h0 = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for a in 0..dim {
            h0[(a, a)] += 0.5;
            h0[(a, a ^ (1 << i))] -= 0.5;
        }
    }
    let h1 = DMatrix::from_fn(dim, dim, |r, c| if r == c { violated(formula, r) } else { 0.0 });
    Some((h0, h1))
}

pub fn dense_hamiltonian(formula: &Formula, s: f64) -> Option<DMatrix<f64>> {
    dense_parts(formula).map(|(h0, h1)| h0 * (1.0 - s) + h1 * s)
}

/// `H(1) - H(0)`.
pub fn dense_dh_ds(formula: &Formula) -> Option<DMatrix<f64>> {
    dense_parts(formula).map(|(h0, h1)| h1 - h0)
}

/// All eigenvalues, ascending.
pub fn dense_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `exp(-i H dt)` through the eigendecomposition of `H`.
pub fn dense_propagator(matrix: &DMatrix<f64>, dt: f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(matrix.clone());
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues.map(|lambda| Complex64::from_polar(1.0, -lambda * dt)),
    );
    &v * phases * v.transpose()
}

pub fn apply_dense(matrix: &DMatrix<Complex64>, psi: &[Complex64]) -> Vec<Complex64> {
    let v = nalgebra::DVector::from_column_slice(psi);
    (matrix * v).iter().copied().collect()
}
