//! Direct integration of `i d/dt psi = H(t/T) psi` from the uniform state.
//!
//! Each step freezes `H` at the midpoint of its interval in `s` and applies
//! the truncated power series of `exp(-i H dt)`. The state is never
//! renormalized; the accumulated norm drift is reported instead.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::hamiltonian::{initial_ground_state, Hamiltonian, HamiltonianError, StateVector};
use crate::sat::Assignment;
use crate::spectra::lz_transition_probability;

/// Hard cap on the number of series terms per step.
pub const MAX_SERIES_TERMS: usize = 128;

/// Largest accepted `dt (m + n)`.
pub const MAX_STEP_NORM: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("series did not reach {tol:e} within {terms} terms at dt = {dt}; use a smaller dt")]
    StepSize { dt: f64, tol: f64, terms: usize },
    #[error("norm drift {drift:e} exceeds {bound:e}; use a smaller dt or a tighter series_tol")]
    NormDrift { drift: f64, bound: f64 },
    #[error("solution index {index} outside a {dim}-dimensional space")]
    SolutionOutOfRange { index: usize, dim: usize },
    #[error("run with T = {total_time}: {source}")]
    AtTime { total_time: f64, source: Box<DynamicsError> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub total_time: f64,
    pub dt: f64,
    pub series_tol: f64,
    /// Largest tolerated `|1 - ||psi(T)|| |`.
    pub max_norm_drift: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { total_time: 0.0, dt: 0.1, series_tol: 1e-12, max_norm_drift: 1e-6 }
    }
}

impl EvolutionConfig {
    pub fn with_time(total_time: f64) -> Self {
        EvolutionConfig { total_time, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::InvalidConfig(msg.to_string()));
        if !(self.total_time >= 0.0 && self.total_time.is_finite()) {
            return bad("T must be finite and non-negative");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.total_time > 0.0 && self.dt > self.total_time {
            return bad("dt must not exceed T");
        }
        if !(self.series_tol > 0.0) {
            return bad("series_tol must be positive");
        }
        if !(self.max_norm_drift > 0.0) {
            return bad("max_norm_drift must be positive");
        }
        Ok(())
    }

    /// Number of steps; the actual step is `T / steps <= dt`.
    pub fn steps(&self) -> usize {
        if self.total_time == 0.0 {
            0
        } else {
            // tolerate rounding in T / dt
            ((self.total_time / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessRecord {
    pub total_time: f64,
    pub p_ground: f64,
    /// `exp(-T / tau_LZ)` when a Landau-Zener time was supplied.
    pub lz_prediction: Option<f64>,
    pub norm_drift: f64,
}

/// Reusable buffers for [`propagate_step_with`].
#[derive(Debug, Clone)]
pub struct SeriesWorkspace {
    term: Vec<Complex64>,
    next: Vec<Complex64>,
}

impl SeriesWorkspace {
    pub fn new(dim: usize) -> Self {
        SeriesWorkspace { term: vec![Complex64::default(); dim], next: vec![Complex64::default(); dim] }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Advance `psi` by `dt` under `H(s_mid)`, reusing `work`. Returns the
/// number of series terms applied.
pub fn propagate_step_with(
    ham: &Hamiltonian,
    s_mid: f64,
    psi: &mut [Complex64],
    dt: f64,
    series_tol: f64,
    work: &mut SeriesWorkspace,
) -> Result<usize, DynamicsError> {
    if dt * ham.dh_ds_norm_bound() > MAX_STEP_NORM {
        return Err(DynamicsError::InvalidConfig(format!(
            "dt (m + n) = {} exceeds {MAX_STEP_NORM}",
            dt * ham.dh_ds_norm_bound()
        )));
    }
    if work.term.len() != psi.len() {
        *work = SeriesWorkspace::new(psi.len());
    }
    if dt == 0.0 {
        return Ok(0);
    }
    let (c0, c1) = (1.0 - s_mid, s_mid);
    work.term.copy_from_slice(psi);
    for j in 1..=MAX_SERIES_TERMS {
        ham.apply_combination(c0, c1, &work.term, &mut work.next)?;
        // term_j = (-i dt / j) H term_{j-1}
        let f = dt / j as f64;
        for (t, h) in work.term.iter_mut().zip(&work.next) {
            *t = Complex64::new(h.im * f, -h.re * f);
        }
        for (p, t) in psi.iter_mut().zip(&work.term) {
            *p += t;
        }
        if norm(&work.term) <= series_tol {
            return Ok(j);
        }
    }
    Err(DynamicsError::StepSize { dt, tol: series_tol, terms: MAX_SERIES_TERMS })
}

/// One step of `psi' = sum_j (-i H(s_mid) dt)^j / j! psi`, truncated once a
/// term's norm falls to `series_tol`.
pub fn propagate_step(
    ham: &Hamiltonian,
    s_mid: f64,
    psi: &StateVector,
    dt: f64,
    series_tol: f64,
) -> Result<StateVector, DynamicsError> {
    let mut out = psi.amplitudes().to_vec();
    let mut work = SeriesWorkspace::new(out.len());
    propagate_step_with(ham, s_mid, &mut out, dt, series_tol, &mut work)?;
    Ok(StateVector::from_amplitudes(out))
}

/// The state at `t = T` after evolving from the uniform superposition.
pub fn evolve(ham: &Hamiltonian, config: &EvolutionConfig) -> Result<StateVector, DynamicsError> {
    config.validate()?;
    let mut psi = initial_ground_state(ham.num_vars())?.into_amplitudes();
    let steps = config.steps();
    let mut work = SeriesWorkspace::new(psi.len());
    if steps > 0 {
        let dt = config.total_time / steps as f64;
        for k in 0..steps {
            let s_mid = (k as f64 + 0.5) / steps as f64;
            propagate_step_with(ham, s_mid, &mut psi, dt, config.series_tol, &mut work)?;
        }
    }
    Ok(StateVector::from_amplitudes(psi))
}

/// Evolve and record the probability of ending on `solution`.
pub fn run_adiabatic(
    ham: &Hamiltonian,
    solution: Assignment,
    config: &EvolutionConfig,
    tau_lz: Option<f64>,
) -> Result<SuccessRecord, DynamicsError> {
    if solution.index() >= ham.dim() {
        return Err(DynamicsError::SolutionOutOfRange { index: solution.index(), dim: ham.dim() });
    }
    let psi = evolve(ham, config)?;
    let norm_drift = (1.0 - psi.norm()).abs();
    if norm_drift > config.max_norm_drift {
        return Err(DynamicsError::NormDrift { drift: norm_drift, bound: config.max_norm_drift });
    }
    Ok(SuccessRecord {
        total_time: config.total_time,
        p_ground: psi.probability(solution),
        lz_prediction: tau_lz.map(|tau| lz_transition_probability(tau, config.total_time)),
        norm_drift,
    })
}

/// One record per entry of `times`, in order. Runs are independent and
/// execute in parallel.
pub fn success_probability_curve(
    ham: &Hamiltonian,
    solution: Assignment,
    times: &[f64],
    config: &EvolutionConfig,
    tau_lz: Option<f64>,
) -> Result<Vec<SuccessRecord>, DynamicsError> {
    times
        .par_iter()
        .map(|&t| {
            let cfg = EvolutionConfig { total_time: t, ..config.clone() };
            run_adiabatic(ham, solution, &cfg, tau_lz)
                .map_err(|e| DynamicsError::AtTime { total_time: t, source: Box::new(e) })
        })
        .collect()
}

pub fn curve_to_csv(records: &[SuccessRecord]) -> String {
    let mut out = String::from("T,p_ground,lz_prediction,norm_drift\n");
    for r in records {
        let lz = r.lz_prediction.map(|p| format!("{p:.12}")).unwrap_or_default();
        out.push_str(&format!("{},{:.12},{},{:.3e}\n", r.total_time, r.p_ground, lz, r.norm_drift));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::sat::{find_solutions, generate_random_3sat, generate_unique_solution_instance};

    fn instance(n: usize, m: usize, seed: u64) -> Hamiltonian {
        Hamiltonian::new(&generate_random_3sat(n, m, seed).unwrap()).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> StateVector {
        use rand::Rng as _;
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut v: Vec<Complex64> =
            (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        StateVector::from_amplitudes(v)
    }

    #[test]
    fn zero_step_is_identity() {
        let h = instance(6, 12, 3);
        let psi = random_state(h.dim(), 1);
        assert_eq!(propagate_step(&h, 0.4, &psi, 0.0, 1e-12).unwrap(), psi);
    }

    #[test]
    fn zero_energy_solution_is_stationary() {
        let formula = generate_random_3sat(8, 20, 5).unwrap();
        let sol = find_solutions(&formula, 1).unwrap()[0];
        let h = Hamiltonian::new(&formula).unwrap();
        let psi = StateVector::basis(8, sol);
        assert_eq!(propagate_step(&h, 1.0, &psi, 0.1, 1e-12).unwrap(), psi);
        assert!(h.expectation(1.0, psi.amplitudes()).unwrap().abs() < 1e-10);
        let uniform = initial_ground_state(8).unwrap();
        assert!(h.expectation(0.0, uniform.amplitudes()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn step_matches_dense_exponential() {
        for n in 3..=4 {
            let formula = generate_random_3sat(n, 2 * n, n as u64).unwrap();
            let h = Hamiltonian::new(&formula).unwrap();
            for s in [0.0, 0.37, 1.0] {
                let dense = oracle::dense_hamiltonian(&formula, s).unwrap();
                let u = oracle::dense_propagator(&dense, 0.1);
                let psi = random_state(h.dim(), 7);
                let expect = oracle::apply_dense(&u, psi.amplitudes());
                let got = propagate_step(&h, s, &psi, 0.1, 1e-14).unwrap();
                let err = got.amplitudes().iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(err < 1e-10, "n={n} s={s} err={err}");
            }
        }
    }

    #[test]
    fn full_schedule_matches_dense() {
        let formula = generate_random_3sat(4, 6, 11).unwrap();
        let h = Hamiltonian::new(&formula).unwrap();
        let cfg = EvolutionConfig::with_time(7.0);
        let got = evolve(&h, &cfg).unwrap();
        let steps = cfg.steps();
        let dt = cfg.total_time / steps as f64;
        let mut psi = initial_ground_state(4).unwrap().into_amplitudes();
        for k in 0..steps {
            let s = (k as f64 + 0.5) / steps as f64;
            let u = oracle::dense_propagator(&oracle::dense_hamiltonian(&formula, s).unwrap(), dt);
            psi = oracle::apply_dense(&u, &psi);
        }
        let err = got.amplitudes().iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err={err}");
    }

    #[test]
    fn sudden_and_adiabatic_limits() {
        let rec = generate_unique_solution_instance(6, 18, 2, 1_000_000).unwrap();
        let h = Hamiltonian::new(&rec.formula).unwrap();
        let sol = rec.solution.unwrap();
        let sudden = run_adiabatic(&h, sol, &EvolutionConfig::with_time(0.0), Some(5.0)).unwrap();
        assert!((sudden.p_ground - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(sudden.lz_prediction, Some(1.0));
        let slow = run_adiabatic(&h, sol, &EvolutionConfig::with_time(400.0), None).unwrap();
        assert!(slow.p_ground > 0.99, "{}", slow.p_ground);
        assert!(slow.norm_drift < 1e-8);
    }

    #[test]
    fn curve_is_ordered_and_monotone() {
        let rec = generate_unique_solution_instance(6, 18, 4, 1_000_000).unwrap();
        let h = Hamiltonian::new(&rec.formula).unwrap();
        let times = [0.5, 2.0, 8.0, 32.0, 128.0];
        let curve = success_probability_curve(&h, rec.solution.unwrap(), &times, &EvolutionConfig::default(), Some(10.0))
            .unwrap();
        assert_eq!(curve.iter().map(|r| r.total_time).collect::<Vec<_>>(), times);
        assert!(curve.windows(2).all(|w| w[0].p_ground - w[1].p_ground <= 0.05));
        let csv = curve_to_csv(&curve);
        assert!(csv.starts_with("T,p_ground,lz_prediction,norm_drift\n"));
        assert_eq!(csv.lines().count(), times.len() + 1);
    }

    #[test]
    fn config_errors() {
        let h = instance(5, 10, 1);
        let sol = Assignment(0);
        let bad = [
            EvolutionConfig { total_time: -1.0, ..Default::default() },
            EvolutionConfig { total_time: 1.0, dt: 0.0, ..Default::default() },
            EvolutionConfig { total_time: 0.05, dt: 0.1, ..Default::default() },
            EvolutionConfig { total_time: 1.0, series_tol: 0.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(run_adiabatic(&h, sol, &cfg, None), Err(DynamicsError::InvalidConfig(_))));
        }
        assert!(matches!(
            run_adiabatic(&h, Assignment(32), &EvolutionConfig::with_time(1.0), None),
            Err(DynamicsError::SolutionOutOfRange { .. })
        ));
        let psi = initial_ground_state(5).unwrap();
        assert!(propagate_step(&h, 0.5, &psi, 2.0, 1e-12).is_err());
        assert!(matches!(
            propagate_step(&h, 0.5, &psi, 1.2, 1e-300),
            Err(DynamicsError::StepSize { .. })
        ));
        let err = success_probability_curve(&h, sol, &[1.0, 0.01], &EvolutionConfig::default(), None).unwrap_err();
        assert!(matches!(err, DynamicsError::AtTime { total_time, .. } if total_time == 0.01));
    }
}
