//! Implicit operators for the interpolating Hamiltonian
//! `H(s) = (1 - s) H(0) + s H(1)`.
//!
//! `H(0) = 1/2 sum_i (1 - X_i)` is applied by pairing every amplitude with its
//! partner across bit `i`; `H(1)` is diagonal in the computational basis with
//! entry equal to the number of violated clauses. The diagonal is computed
//! once per formula and stored as one byte per basis state, which is the
//! dominant memory cost (`2^n` bytes) besides the vectors themselves.

use std::ops::{AddAssign, Mul, SubAssign};

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::eigen::{lowest_eigenpairs, EigenError, EigenOptions, SymmetricOperator};
use crate::sat::{violated_clauses, Assignment, Formula, MAX_ENUMERATION_VARS};

/// Largest `n` for which a Hamiltonian (diagonal table plus state vectors)
/// is built.
pub const MAX_HAMILTONIAN_VARS: usize = 24;

/// Byte-wide diagonal entries.
pub const MAX_CLAUSES: usize = u8::MAX as usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("n = {n} exceeds the capacity of {cap} variables")]
    Capacity { n: usize, cap: usize },
    #[error("{m} clauses exceed the byte-wide diagonal table ({MAX_CLAUSES} max)")]
    TooManyClauses { m: usize },
    #[error("vector of length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Scalar types the operators can act on.
pub trait Amplitude:
    Copy + Send + Sync + Zero + Mul<f64, Output = Self> + AddAssign + SubAssign
{
}

impl<T> Amplitude for T where T: Copy + Send + Sync + Zero + Mul<f64, Output = T> + AddAssign + SubAssign {}

const CHUNK_BITS: usize = 12;
const PAR_MIN_DIM: usize = 1 << 14;

/// `H(0)` and `H(1)` for one formula.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n: usize,
    m: usize,
    diagonal: Vec<u8>,
}

impl Hamiltonian {
    pub fn new(formula: &Formula) -> Result<Self, HamiltonianError> {
        let n = formula.num_vars();
        if n > MAX_HAMILTONIAN_VARS {
            return Err(HamiltonianError::Capacity { n, cap: MAX_HAMILTONIAN_VARS });
        }
        let m = formula.num_clauses();
        if m > MAX_CLAUSES {
            return Err(HamiltonianError::TooManyClauses { m });
        }
        let mut diagonal = vec![0u8; 1 << n];
        accumulate_violations(formula, 0, &mut diagonal);
        Ok(Hamiltonian { n, m, diagonal })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Violated-clause counts indexed by assignment.
    pub fn diagonal(&self) -> &[u8] {
        &self.diagonal
    }

    pub fn max_energy(&self) -> u8 {
        self.diagonal.iter().copied().max().unwrap_or(0)
    }

    fn check_dim(&self, len: usize) -> Result<(), HamiltonianError> {
        if len != self.dim() {
            Err(HamiltonianError::DimensionMismatch { expected: self.dim(), got: len })
        } else {
            Ok(())
        }
    }

    /// `y = c0 H(0) x + c1 H(1) x`.
    ///
    /// Work is split into fixed blocks of `2^12` output amplitudes; every
    /// output entry sees the same sequence of floating-point operations
    /// whatever the thread count.
    pub fn apply_combination<T: Amplitude>(
        &self,
        c0: f64,
        c1: f64,
        x: &[T],
        y: &mut [T],
    ) -> Result<(), HamiltonianError> {
        self.check_dim(x.len())?;
        self.check_dim(y.len())?;
        let dim = self.dim();
        let chunk_bits = CHUNK_BITS.min(self.n);
        let chunk = 1usize << chunk_bits;
        let on_site = 0.5 * c0 * self.n as f64;
        let hop = 0.5 * c0;
        let kernel = |(ci, yc): (usize, &mut [T])| {
            let base = ci * chunk;
            let xc = &x[base..base + chunk];
            let dc = &self.diagonal[base..base + chunk];
            for ((yo, &xi), &d) in yc.iter_mut().zip(xc).zip(dc) {
                *yo = xi * (on_site + c1 * f64::from(d));
            }
            if hop == 0.0 {
                return;
            }
            // partners inside the block
            for bit in 0..chunk_bits {
                let h = 1usize << bit;
                for start in (0..chunk).step_by(2 * h) {
                    let (ylo, yhi) = yc[start..start + 2 * h].split_at_mut(h);
                    let (xlo, xhi) = xc[start..start + 2 * h].split_at(h);
                    for j in 0..h {
                        ylo[j] -= xhi[j] * hop;
                        yhi[j] -= xlo[j] * hop;
                    }
                }
            }
            // partners in other blocks
            for bit in chunk_bits..self.n {
                let pb = base ^ (1usize << bit);
                let xp = &x[pb..pb + chunk];
                for (yo, &xi) in yc.iter_mut().zip(xp) {
                    *yo -= xi * hop;
                }
            }
        };
        if dim >= PAR_MIN_DIM {
            y.par_chunks_mut(chunk).enumerate().for_each(kernel);
        } else {
            y.chunks_mut(chunk).enumerate().for_each(kernel);
        }
        Ok(())
    }

    /// `y = H(s) x`.
    pub fn apply_into<T: Amplitude>(&self, s: f64, x: &[T], y: &mut [T]) -> Result<(), HamiltonianError> {
        self.apply_combination(1.0 - s, s, x, y)
    }

    pub fn apply_h<T: Amplitude>(&self, s: f64, x: &[T]) -> Result<Vec<T>, HamiltonianError> {
        let mut y = vec![T::zero(); x.len()];
        self.apply_into(s, x, &mut y)?;
        Ok(y)
    }

    /// `<x|H(s)|x>` for a complex state.
    pub fn expectation(&self, s: f64, x: &[Complex64]) -> Result<f64, HamiltonianError> {
        let hx = self.apply_h(s, x)?;
        Ok(x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// `H(s)` as a real symmetric operator for the eigensolver.
    pub fn at(&self, s: f64) -> ScheduledOperator<'_> {
        ScheduledOperator { ham: self, c0: 1.0 - s, c1: s }
    }

    pub fn combination(&self, c0: f64, c1: f64) -> ScheduledOperator<'_> {
        ScheduledOperator { ham: self, c0, c1 }
    }

    pub fn degeneracy(&self) -> DegeneracyTable {
        let mut counts = vec![0u64; self.m + 1];
        for &d in &self.diagonal {
            counts[usize::from(d)] += 1;
        }
        DegeneracyTable::trimmed(counts)
    }

    /// Triangle-inequality bound `m + n` on `||H(1) - H(0)||`.
    pub fn dh_ds_norm_bound(&self) -> f64 {
        (self.m + self.n) as f64
    }

    /// `||H(1) - H(0)||` from its two extremal eigenvalues.
    pub fn dh_ds_norm(&self, opts: &EigenOptions) -> Result<f64, HamiltonianError> {
        let low = lowest_eigenpairs(&self.combination(-1.0, 1.0), 1, opts)?.values[0];
        let high = -lowest_eigenpairs(&self.combination(1.0, -1.0), 1, opts)?.values[0];
        Ok(low.abs().max(high.abs()))
    }
}

/// `c0 H(0) + c1 H(1)` borrowed from a [`Hamiltonian`].
#[derive(Debug, Clone, Copy)]
pub struct ScheduledOperator<'a> {
    ham: &'a Hamiltonian,
    c0: f64,
    c1: f64,
}

impl SymmetricOperator for ScheduledOperator<'_> {
    fn dim(&self) -> usize {
        self.ham.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.ham
            .apply_combination(self.c0, self.c1, x, y)
            .expect("eigensolver vectors have the operator dimension");
    }
}

/// For every assignment `base + j`, add the number of violated clauses to
/// `out[j]`. `out.len()` must be a power of two dividing `base`.
fn accumulate_violations(formula: &Formula, base: u64, out: &mut [u8]) {
    let span = out.len() as u64;
    let low_mask = span - 1;
    for (mask, pattern) in formula.violation_masks() {
        if (base & mask & !low_mask) != (pattern & !low_mask) {
            continue;
        }
        let fixed = mask & low_mask;
        let lp = pattern & low_mask;
        let free = low_mask & !fixed;
        // walk every subset of the free low bits
        let mut sub = 0u64;
        loop {
            out[(lp | sub) as usize] += 1;
            sub = sub.wrapping_sub(free) & free;
            if sub == 0 {
                break;
            }
        }
    }
}

/// Number of basis states at each integer energy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegeneracyTable {
    counts: Vec<u64>,
}

impl DegeneracyTable {
    fn trimmed(mut counts: Vec<u64>) -> Self {
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        DegeneracyTable { counts }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self::trimmed(counts)
    }

    pub fn count(&self, energy: usize) -> u64 {
        self.counts.get(energy).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn max_energy(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Energies in ascending order, each repeated by its degeneracy, up to
    /// `k` values.
    pub fn lowest_levels(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(k);
        for (e, &c) in self.counts.iter().enumerate() {
            for _ in 0..c {
                if out.len() == k {
                    return out;
                }
                out.push(e as f64);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("energy,count\n");
        for (e, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{e},{c}\n"));
        }
        s
    }
}

/// Energy of basis state `a` under `H(1)`.
pub fn diagonal_energy(formula: &Formula, a: Assignment) -> usize {
    violated_clauses(formula, a)
}

/// Histogram of `H(1)` energies over all `2^n` basis states.
pub fn degeneracy_histogram(formula: &Formula) -> Result<DegeneracyTable, HamiltonianError> {
    let n = formula.num_vars();
    if n > MAX_ENUMERATION_VARS {
        return Err(HamiltonianError::Capacity { n, cap: MAX_ENUMERATION_VARS });
    }
    let m = formula.num_clauses();
    if m > MAX_CLAUSES {
        return Err(HamiltonianError::TooManyClauses { m });
    }
    let span_bits = n.min(20);
    let blocks = 1u64 << (n - span_bits);
    let block_hist = |b: u64| {
        let mut buf = vec![0u8; 1 << span_bits];
        accumulate_violations(formula, b << span_bits, &mut buf);
        let mut h = vec![0u64; m + 1];
        for &d in &buf {
            h[usize::from(d)] += 1;
        }
        h
    };
    let counts = (0..blocks)
        .into_par_iter()
        .map(block_hist)
        .reduce(|| vec![0u64; m + 1], |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });
    Ok(DegeneracyTable::trimmed(counts))
}

/// Binomial coefficient, exact for the sizes used here.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Spectrum of `H(0)`: energy `i` with degeneracy `C(n, i)`.
pub fn h0_spectrum(n: usize) -> DegeneracyTable {
    DegeneracyTable { counts: (0..=n as u64).map(|i| binomial(n as u64, i)).collect() }
}

/// Normalized complex amplitude vector over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn basis(n: usize, a: Assignment) -> Self {
        let mut amplitudes = vec![Complex64::zero(); 1 << n];
        amplitudes[a.index()] = Complex64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// `|<a|psi>|^2`.
    pub fn probability(&self, a: Assignment) -> f64 {
        self.amplitudes[a.index()].norm_sqr()
    }
}

/// Ground state of `H(0)`: the uniform superposition.
pub fn initial_ground_state(n: usize) -> Result<StateVector, HamiltonianError> {
    if n > MAX_HAMILTONIAN_VARS {
        return Err(HamiltonianError::Capacity { n, cap: MAX_HAMILTONIAN_VARS });
    }
    let dim = 1usize << n;
    let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(StateVector { amplitudes: vec![amp; dim] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::rng::rng_from_seed;
    use crate::sat::{generate_random_3sat, Clause, Literal};
    use rand::Rng as _;

    fn two_clause_example() -> Formula {
        Formula::new(
            4,
            vec![
                Clause::new([Literal::pos(1), Literal::neg(2), Literal::pos(3)]),
                Clause::new([Literal::pos(0), Literal::pos(1), Literal::neg(2)]),
            ],
        )
        .unwrap()
    }

    fn random_real(dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn random_complex(dim: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rng_from_seed(seed);
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn uniform_state() {
        let psi = initial_ground_state(2).unwrap();
        for a in psi.amplitudes() {
            assert!((a.re - 0.5).abs() < 1e-15 && a.im == 0.0);
        }
        let f = generate_random_3sat(6, 18, 3).unwrap();
        let psi = initial_ground_state(6).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((psi.amplitudes()[17].norm() - 2f64.powf(-3.0)).abs() < 1e-15);
        let h = Hamiltonian::new(&f).unwrap();
        let out = h.apply_h(0.0, psi.amplitudes()).unwrap();
        assert!(out.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn two_clause_histogram_and_basis_states() {
        let f = two_clause_example();
        let table = degeneracy_histogram(&f).unwrap();
        assert_eq!(table.counts(), &[13, 2, 1]);
        let h = Hamiltonian::new(&f).unwrap();
        assert_eq!(h.degeneracy(), table);

        let sol = StateVector::basis(4, Assignment(0b1101));
        let out = h.apply_h(1.0, sol.amplitudes()).unwrap();
        assert!(out.iter().all(|z| *z == Complex64::zero()));
        let v = StateVector::basis(4, Assignment(0b0100));
        let out = h.apply_h(1.0, v.amplitudes()).unwrap();
        for (o, x) in out.iter().zip(v.amplitudes()) {
            assert_eq!(*o, x * 2.0);
        }
        assert!(h.dh_ds_norm_bound() <= 6.0);
    }

    #[test]
    fn h0_binomials() {
        assert_eq!(h0_spectrum(3).counts(), &[1, 3, 3, 1]);
        assert_eq!(h0_spectrum(14).count(1), 14);
        for n in 1..=20 {
            assert_eq!(h0_spectrum(n).total(), 1 << n);
        }
    }

    #[test]
    fn histogram_matches_naive_and_table() {
        for (n, seed) in [(5usize, 1u64), (8, 2), (11, 3)] {
            let f = generate_random_3sat(n, 3 * n, seed).unwrap();
            let table = degeneracy_histogram(&f).unwrap();
            assert_eq!(table.total(), 1 << n);
            let mut naive = vec![0u64; 3 * n + 1];
            for a in 0..1u64 << n {
                naive[violated_clauses(&f, Assignment(a))] += 1;
            }
            assert_eq!(table, DegeneracyTable::from_counts(naive));
            let h = Hamiltonian::new(&f).unwrap();
            for a in 0..1u64 << n {
                assert_eq!(usize::from(h.diagonal()[a as usize]), diagonal_energy(&f, Assignment(a)));
            }
        }
    }

    #[test]
    fn histogram_with_multiple_blocks() {
        let f = generate_random_3sat(22, 66, 5).unwrap();
        let table = degeneracy_histogram(&f).unwrap();
        assert_eq!(table.total(), 1 << 22);
        let h = Hamiltonian::new(&f).unwrap();
        assert_eq!(h.degeneracy(), table);
    }

    #[test]
    fn matches_dense_matrix() {
        for seed in 0..4 {
            let f = generate_random_3sat(4, 6, seed).unwrap();
            let h = Hamiltonian::new(&f).unwrap();
            let dense = oracle::dense_hamiltonian(&f, 0.5).unwrap();
            let v = random_real(16, seed + 10);
            let got = h.apply_h(0.5, &v).unwrap();
            let want = &dense * nalgebra::DVector::from_vec(v.clone());
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chunked_and_unchunked_sizes_agree_with_dense() {
        // n = 12 uses a single block, n = 13 crosses block boundaries
        for n in [12usize, 13] {
            let f = generate_random_3sat(n, 3 * n, 17).unwrap();
            let h = Hamiltonian::new(&f).unwrap();
            let x = random_real(1 << n, 3);
            let y = h.apply_h(0.3, &x).unwrap();
            for idx in [0usize, 1, 4095, 4096 % (1 << n), (1 << n) - 1] {
                let mut want = (0.7 * 0.5 * n as f64 + 0.3 * f64::from(h.diagonal()[idx])) * x[idx];
                for b in 0..n {
                    want -= 0.35 * x[idx ^ (1 << b)];
                }
                assert!((y[idx] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_in_schedule_and_symmetric() {
        let f = generate_random_3sat(9, 27, 4).unwrap();
        let h = Hamiltonian::new(&f).unwrap();
        let v = random_complex(512, 1);
        let u = random_complex(512, 2);
        let h0v = h.apply_h(0.0, &v).unwrap();
        let h1v = h.apply_h(1.0, &v).unwrap();
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let hv = h.apply_h(s, &v).unwrap();
            for i in 0..512 {
                let want = h0v[i] * (1.0 - s) + h1v[i] * s;
                assert!((hv[i] - want).norm() < 1e-12);
            }
            let ur: Vec<f64> = u.iter().map(|z| z.re).collect();
            let vr: Vec<f64> = v.iter().map(|z| z.re).collect();
            let hu = h.apply_h(s, &ur).unwrap();
            let hvr = h.apply_h(s, &vr).unwrap();
            let a: f64 = ur.iter().zip(&hvr).map(|(x, y)| x * y).sum();
            let b: f64 = hu.iter().zip(&vr).map(|(x, y)| x * y).sum();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let h = Hamiltonian::new(&two_clause_example()).unwrap();
        assert_eq!(
            h.apply_h(0.5, &[0.0f64; 8]),
            Err(HamiltonianError::DimensionMismatch { expected: 16, got: 8 })
        );
    }

    #[test]
    fn sharpened_norm() {
        for seed in 0..3 {
            let f = generate_random_3sat(4, 5, seed).unwrap();
            let h = Hamiltonian::new(&f).unwrap();
            let sharp = h.dh_ds_norm(&EigenOptions::default()).unwrap();
            assert!(sharp <= h.dh_ds_norm_bound() + 1e-12);
            let dense = oracle::dense_dh_ds(&f).unwrap();
            let ev = oracle::dense_eigenvalues(&dense);
            let want = ev[0].abs().max(ev[ev.len() - 1].abs());
            assert!((sharp - want).abs() < 1e-10, "{sharp} vs {want}");
        }
    }

    #[test]
    fn capacity_errors() {
        let f = generate_random_3sat(25, 10, 0).unwrap();
        assert!(matches!(Hamiltonian::new(&f), Err(HamiltonianError::Capacity { .. })));
        assert!(initial_ground_state(25).is_err());
    }
}
