//! Low-lying spectrum of `H(s)`, the minimum gap, and the avoided-crossing
//! fit that feeds the Landau-Zener time.
//!
//! Near an isolated crossing the two lowest levels follow
//! `E_{0,1}(s) = c(s) -/+ 1/2 sqrt(Delta^2 + A^2 (s - s*)^2)`, so the squared
//! gap is exactly a parabola in `s`. The fit works on `gamma^2` over the
//! samples with `gamma <= 2 gamma_min` and is linear least squares.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::eigen::{lowest_eigenpairs, lowest_eigenpairs_from, EigenError, EigenOptions, EigenPairs};
use crate::hamiltonian::{Hamiltonian, HamiltonianError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("eigensolver failed at s = {s}: {source}")]
    Eigen { s: f64, source: EigenError },
    #[error("schedule grid must be ascending and inside [0, 1]")]
    InvalidGrid,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("avoided-crossing fit failed ({reason}); residual {residual:.3e}")]
    FitFailure { reason: &'static str, residual: f64 },
    #[error("gap vanishes at s = {s}; adiabatic bound diverges")]
    ZeroGap { s: f64 },
}

/// The `k` lowest levels of `H(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub s: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl SpectrumSample {
    /// `E_1(s) - E_0(s)`.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

pub fn lowest_eigenpairs_at(
    ham: &Hamiltonian,
    s: f64,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs, SpectraError> {
    lowest_eigenpairs(&ham.at(s), k, opts).map_err(|source| SpectraError::Eigen { s, source })
}

pub fn lowest_eigenvalues(
    ham: &Hamiltonian,
    s: f64,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumSample, SpectraError> {
    let pairs = lowest_eigenpairs_at(ham, s, k, opts)?;
    Ok(SpectrumSample { s, eigenvalues: pairs.values })
}

fn check_grid(grid: &[f64]) -> Result<(), SpectraError> {
    let in_range = grid.iter().all(|s| (0.0..=1.0).contains(s));
    let ascending = grid.windows(2).all(|w| w[0] < w[1]);
    if in_range && ascending {
        Ok(())
    } else {
        Err(SpectraError::InvalidGrid)
    }
}

/// `points` evenly spaced values from 0 to 1 inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}

/// One sample per grid point, in grid order. Points are solved in parallel,
/// each with the same eigensolver seed.
pub fn spectrum_sweep(
    ham: &Hamiltonian,
    grid: &[f64],
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<SpectrumSample>, SpectraError> {
    check_grid(grid)?;
    grid.par_iter().map(|&s| lowest_eigenvalues(ham, s, k, opts)).collect()
}

pub fn sweep_to_csv(samples: &[SpectrumSample]) -> String {
    let k = samples.iter().map(|s| s.eigenvalues.len()).max().unwrap_or(0);
    let mut out = String::from("s");
    for i in 0..k {
        out.push_str(&format!(",E_{i}"));
    }
    out.push('\n');
    for sample in samples {
        out.push_str(&format!("{}", sample.s));
        for e in &sample.eigenvalues {
            out.push_str(&format!(",{e:.12}"));
        }
        out.push('\n');
    }
    out
}

/// Number of strict interior local minima of a sampled curve.
pub fn count_local_minima(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] < w[0] && w[1] < w[2]).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapOptions {
    pub coarse_points: usize,
    pub refine_tol: f64,
    /// Levels requested beyond the two that define the gap.
    pub extra_levels: usize,
    /// Points sampled across the crossing for the fit.
    pub fit_samples: usize,
    pub eigen: EigenOptions,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            coarse_points: 32,
            refine_tol: 1e-4,
            extra_levels: 2,
            fit_samples: 13,
            eigen: EigenOptions { tol: 1e-9, verify: false, ..EigenOptions::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinGap {
    pub s_star: f64,
    pub gamma_min: f64,
    /// The coarse minimum sat on an end of the grid.
    pub boundary: bool,
    /// Interior local minima in the coarse scan.
    pub local_minima: usize,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Coarse uniform scan of `gamma` followed by golden-section refinement of
/// the lowest bracket until it is narrower than `refine_tol`.
pub fn find_min_gap_by<E, F>(gamma: F, coarse_points: usize, refine_tol: f64) -> Result<MinGap, E>
where
    F: Fn(f64) -> Result<f64, E> + Sync,
    E: Send,
{
    find_min_gap_with(&gamma, |s| gamma(s), coarse_points, refine_tol)
}

/// As [`find_min_gap_by`], with separate evaluators for the parallel coarse
/// scan and the sequential refinement, which may carry state between calls.
pub fn find_min_gap_with<E, F, G>(scan: F, mut refine: G, coarse_points: usize, refine_tol: f64) -> Result<MinGap, E>
where
    F: Fn(f64) -> Result<f64, E> + Sync,
    G: FnMut(f64) -> Result<f64, E>,
    E: Send,
{
    let coarse_points = coarse_points.max(8);
    let grid = uniform_grid(coarse_points);
    let values: Vec<f64> = grid.par_iter().map(|&s| scan(s)).collect::<Result<_, E>>()?;
    let mut evaluations = values.len();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let boundary = best == 0 || best == coarse_points - 1;
    let lo_i = best.saturating_sub(1);
    let hi_i = (best + 1).min(coarse_points - 1);
    let (mut a, mut b) = (grid[lo_i], grid[hi_i]);

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = refine(c)?;
    let mut fd = refine(d)?;
    evaluations += 2;
    while b - a >= refine_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = refine(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = refine(d)?;
        }
        evaluations += 1;
    }
    let s_star = 0.5 * (a + b);
    let gamma_min = refine(s_star)?;
    evaluations += 1;
    Ok(MinGap { s_star, gamma_min, boundary, local_minima: count_local_minima(&values), evaluations })
}

/// `gamma(s)` from the lowest `2 + extra_levels` eigenvalues.
pub fn gap_at(ham: &Hamiltonian, s: f64, opts: &GapOptions) -> Result<f64, SpectraError> {
    let k = (2 + opts.extra_levels).min(ham.dim());
    lowest_eigenvalues(ham, s, k, &opts.eigen).map(|sample| sample.gap())
}

/// Gap evaluator for a sequence of nearby `s` values: each solve starts
/// from the sum of the previous eigenvectors.
struct WarmGap<'a> {
    ham: &'a Hamiltonian,
    opts: &'a GapOptions,
    start: Option<Vec<f64>>,
}

impl<'a> WarmGap<'a> {
    fn new(ham: &'a Hamiltonian, opts: &'a GapOptions) -> Self {
        WarmGap { ham, opts, start: None }
    }

    fn gap(&mut self, s: f64) -> Result<f64, SpectraError> {
        let k = (2 + self.opts.extra_levels).min(self.ham.dim());
        let pairs = lowest_eigenpairs_from(&self.ham.at(s), k, &self.opts.eigen, self.start.as_deref())
            .map_err(|source| SpectraError::Eigen { s, source })?;
        let mut start = vec![0.0; self.ham.dim()];
        for v in &pairs.vectors {
            start.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        self.start = Some(start);
        Ok(pairs.values[1] - pairs.values[0])
    }
}

pub fn find_min_gap(ham: &Hamiltonian, opts: &GapOptions) -> Result<MinGap, SpectraError> {
    let mut warm = WarmGap::new(ham, opts);
    find_min_gap_with(|s| gap_at(ham, s, opts), |s| warm.gap(s), opts.coarse_points, opts.refine_tol)
}

/// Parameters of the avoided crossing and the resulting Landau-Zener time.
#[derive(Debug, Clone, PartialEq)]
pub struct GapFit {
    pub s_star: f64,
    /// Minimum gap.
    pub delta: f64,
    /// Asymptotic slope of the gap away from the crossing.
    pub slope: f64,
    pub tau_lz: f64,
    pub fit_window: (f64, f64),
    /// RMS of `gamma` residuals over the window.
    pub residual: f64,
    pub samples_used: usize,
}

impl GapFit {
    pub fn new(s_star: f64, delta: f64, slope: f64, fit_window: (f64, f64), residual: f64, samples_used: usize) -> Self {
        GapFit { s_star, delta, slope, tau_lz: landau_zener_time(delta, slope), fit_window, residual, samples_used }
    }

    pub fn to_record(&self) -> String {
        format!(
            "{{s_star: {}, delta: {}, slope: {}, tau_lz: {}, residual: {}, window: [{}, {}]}}",
            self.s_star, self.delta, self.slope, self.tau_lz, self.residual, self.fit_window.0, self.fit_window.1
        )
    }
}

/// Minimum samples accepted by [`fit_avoided_crossing`].
pub const MIN_FIT_SAMPLES: usize = 7;

/// Least-squares fit of `gamma^2 = Delta^2 + A^2 (s - s*)^2` to `(s, gamma)`
/// samples, restricted to `gamma <= 2 min(gamma)`.
pub fn fit_avoided_crossing(samples: &[(f64, f64)]) -> Result<GapFit, SpectraError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(SpectraError::TooFewSamples { need: MIN_FIT_SAMPLES, got: samples.len() });
    }
    let &(s_min, g_min) = samples.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let window: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, g)| g <= 2.0 * g_min).collect();
    if window.len() < 3 {
        return Err(SpectraError::TooFewSamples { need: 3, got: window.len() });
    }
    let lo = window.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = window.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * (hi - lo);
    if half <= 0.0 {
        return Err(SpectraError::FitFailure { reason: "window has zero width", residual: f64::NAN });
    }

    // centre and scale the abscissa before forming the Vandermonde system
    let rows = window.len();
    let design = DMatrix::from_fn(rows, 3, |r, c| ((window[r].0 - s_min) / half).powi(c as i32));
    let rhs = DVector::from_iterator(rows, window.iter().map(|p| p.1 * p.1));
    let coeffs = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| SpectraError::FitFailure { reason: "singular design", residual: f64::NAN })?;
    let (c0, c1, c2) = (coeffs[0], coeffs[1] / half, coeffs[2] / (half * half));

    let model = |s: f64| c0 + c1 * (s - s_min) + c2 * (s - s_min).powi(2);
    let residual = (window.iter().map(|&(s, g)| (model(s).max(0.0).sqrt() - g).powi(2)).sum::<f64>()
        / rows as f64)
        .sqrt();
    if c2 <= 0.0 {
        return Err(SpectraError::FitFailure { reason: "non-convex parabola", residual });
    }
    let s_star = s_min - c1 / (2.0 * c2);
    let delta_sq = c0 - c1 * c1 / (4.0 * c2);
    if delta_sq <= 0.0 {
        return Err(SpectraError::FitFailure { reason: "negative squared gap", residual });
    }
    Ok(GapFit::new(s_star, delta_sq.sqrt(), c2.sqrt(), (lo, hi), residual, rows))
}

/// Fit from level samples; only the gap `E_1 - E_0` enters.
pub fn fit_from_levels(samples: &[SpectrumSample]) -> Result<GapFit, SpectraError> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|x| (x.s, x.gap())).collect();
    fit_avoided_crossing(&pts)
}

/// `2 A / (pi Delta^2)` with `hbar = 1`.
pub fn landau_zener_time(delta: f64, slope: f64) -> f64 {
    2.0 * slope / (std::f64::consts::PI * delta * delta)
}

/// Landau-Zener transition (failure) probability `exp(-T / tau)`.
pub fn lz_transition_probability(tau_lz: f64, total_time: f64) -> f64 {
    (-total_time / tau_lz).exp()
}

/// Probability of ending in the ground state, `1 - exp(-T / tau)`.
pub fn lz_success_probability(tau_lz: f64, total_time: f64) -> f64 {
    -(-total_time / tau_lz).exp_m1()
}

/// Gap samples across the crossing found by a [`MinGap`] search, solved in
/// ascending order with warm starts.
///
/// The slope is first estimated from one probe beside the minimum; the
/// samples then span `+/- 1.6 Delta / A`, where the hyperbola reaches about
/// 1.9 times its minimum.
pub fn sample_crossing(ham: &Hamiltonian, min: &MinGap, opts: &GapOptions) -> Result<Vec<(f64, f64)>, SpectraError> {
    let (s0, g0) = (min.s_star, min.gamma_min);
    let mut warm = WarmGap::new(ham, opts);
    let mut step = g0.max(1e-5);
    let mut slope = None;
    for _ in 0..8 {
        let s1 = if s0 + step <= 1.0 { s0 + step } else { s0 - step };
        let g1 = warm.gap(s1)?;
        let rise = g1 * g1 - g0 * g0;
        if rise > 0.25 * g0 * g0 {
            slope = Some(rise.sqrt() / step);
            break;
        }
        step *= 4.0;
        if step > 0.5 {
            break;
        }
    }
    let half = slope.map_or(0.25, |a| (1.6 * g0 / a).min(0.25));
    let lo = (s0 - half).max(0.0);
    let hi = (s0 + half).min(1.0);
    let count = opts.fit_samples.max(MIN_FIT_SAMPLES);
    (0..count)
        .map(|i| {
            let s = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            warm.gap(s).map(|g| (s, g))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GapAnalysis {
    pub min_gap: MinGap,
    pub fit: GapFit,
    pub samples: Vec<(f64, f64)>,
}

/// Minimum-gap search, crossing samples and fit for one Hamiltonian.
pub fn analyze_gap(ham: &Hamiltonian, opts: &GapOptions) -> Result<GapAnalysis, SpectraError> {
    let min_gap = find_min_gap(ham, opts)?;
    let samples = sample_crossing(ham, &min_gap, opts)?;
    let fit = fit_avoided_crossing(&samples)?;
    Ok(GapAnalysis { min_gap, fit, samples })
}

/// Trapezoid rule for `int norm / gamma(s)^2 ds` over sampled gaps.
pub fn adiabatic_integral(norm: f64, grid: &[f64], gaps: &[f64]) -> Result<f64, SpectraError> {
    if grid.len() != gaps.len() || grid.len() < 2 {
        return Err(SpectraError::TooFewSamples { need: 2, got: grid.len().min(gaps.len()) });
    }
    check_grid(grid)?;
    if let Some(i) = gaps.iter().position(|&g| g <= 0.0) {
        return Err(SpectraError::ZeroGap { s: grid[i] });
    }
    let f: Vec<f64> = gaps.iter().map(|g| norm / (g * g)).collect();
    Ok(grid.windows(2).zip(f.windows(2)).map(|(s, y)| 0.5 * (s[1] - s[0]) * (y[0] + y[1])).sum())
}

/// Diagnostic adiabatic time scale using the `m + n` norm bound.
pub fn adiabatic_time_bound(ham: &Hamiltonian, grid: &[f64], opts: &GapOptions) -> Result<f64, SpectraError> {
    check_grid(grid)?;
    let gaps: Vec<f64> = grid.par_iter().map(|&s| gap_at(ham, s, opts)).collect::<Result<_, _>>()?;
    adiabatic_integral(ham.dh_ds_norm_bound(), grid, &gaps)
}
