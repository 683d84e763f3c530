//! Seeded experiment pipelines and their CSV output.
//!
//! Every instance of a run is generated from
//! `derive_seed(master, "<kind>/n<n>/r<ratio>", index)`, so any row can be
//! reproduced on its own and the output does not depend on scheduling.
//! Pipelines build their files in memory ([`execute`]); [`run_experiment`]
//! writes them together with a `manifest.txt`.

pub mod config;
pub mod fit;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dimacs::{serialize_dimacs, DimacsMeta};
use crate::dynamics::{curve_to_csv, success_probability_curve, DynamicsError};
use crate::gsat::{gsat_rows_to_csv, gsat_statistics, GsatParams, GsatRow, InstanceClass};
use crate::hamiltonian::{degeneracy_histogram, Hamiltonian, HamiltonianError};
use crate::rng::derive_seed;
use crate::sat::{
    generate_random_3sat, generate_satisfiable_instance, generate_unique_solution_instance, InstanceRecord, SatError,
};
use crate::spectra::{analyze_gap, spectrum_sweep, sweep_to_csv, uniform_grid, GapAnalysis, SpectraError};

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, GsatClasses};
pub use fit::{fit_exponential, ExpFit, FitError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{failed} of {total} instances failed (limit 10%); first: {first}")]
    TooManyFailures { failed: usize, total: usize, first: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Everything a run produces apart from its manifest.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub files: Vec<OutputFile>,
    /// Named exponential fits, also written to `fits.csv`.
    pub fits: Vec<(String, ExpFit)>,
    pub instances: usize,
    pub failures: Vec<String>,
}

impl ExperimentOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }

    pub fn fit(&self, name: &str) -> Option<&ExpFit> {
        self.fits.iter().find(|(k, _)| k == name).map(|(_, f)| f)
    }

    fn push(&mut self, name: impl Into<String>, contents: String) {
        self.files.push(OutputFile { name: name.into(), contents });
    }

    /// Fit `points` if there are enough of them; fewer than three is not an
    /// error since short scans are legitimate.
    fn try_fit(&mut self, name: &str, points: &[(f64, f64)]) -> Result<(), HarnessError> {
        if points.len() >= 3 {
            self.fits.push((name.to_string(), fit_exponential(points)?));
        }
        Ok(())
    }

    fn finish(&mut self) {
        if !self.fits.is_empty() {
            let mut csv = String::from("name,a,b,log_rms,points\n");
            for (name, f) in &self.fits {
                let _ = writeln!(csv, "{name},{:.12e},{:.12},{:.6e},{}", f.a, f.b, f.log_rms, f.points);
            }
            self.push("fits.csv", csv);
        }
    }
}

/// Seed of instance `index` at `(n, ratio)` for stream `tag`.
pub fn instance_seed(master: u64, tag: &str, n: usize, ratio: f64, index: usize) -> u64 {
    derive_seed(master, &format!("{tag}/n{n}/r{ratio}"), index as u64)
}

/// Outcome of per-instance work, keeping failures alongside successes.
struct Batch<T> {
    ok: Vec<T>,
    failures: Vec<String>,
}

fn run_batch<T, F>(count: usize, label: &str, work: F) -> Batch<T>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync,
{
    let results: Vec<Result<T, HarnessError>> = (0..count).into_par_iter().map(&work).collect();
    let mut batch = Batch { ok: Vec::new(), failures: Vec::new() };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => batch.ok.push(v),
            Err(e) => batch.failures.push(format!("{label} index {i}: {e}")),
        }
    }
    batch
}

fn check_failures(out: &ExperimentOutput) -> Result<(), HarnessError> {
    let failed = out.failures.len();
    if failed * 10 > out.instances {
        return Err(HarnessError::TooManyFailures {
            failed,
            total: out.instances,
            first: out.failures[0].clone(),
        });
    }
    Ok(())
}

fn unique(cfg: &ExperimentConfig, n: usize, ratio: f64, index: usize) -> Result<InstanceRecord, HarnessError> {
    let seed = instance_seed(cfg.seed, cfg.kind.name(), n, ratio, index);
    Ok(generate_unique_solution_instance(n, ExperimentConfig::clauses(n, ratio), seed, cfg.max_trials)?)
}

/// Run the configured pipeline without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let mut out = ExperimentOutput::default();
    match cfg.kind {
        ExperimentKind::Degeneracy => degeneracy(cfg, &mut out)?,
        ExperimentKind::ExcitedScaling => excited_scaling(cfg, &mut out)?,
        ExperimentKind::Rarity => rarity(cfg, &mut out)?,
        ExperimentKind::Spectrum => spectrum(cfg, &mut out)?,
        ExperimentKind::LzCheck => lz_check(cfg, &mut out)?,
        ExperimentKind::GapScaling => gap_scaling(cfg, &mut out)?,
        ExperimentKind::GsatCompare => gsat_compare(cfg, &mut out)?,
    }
    check_failures(&out)?;
    out.finish();
    Ok(out)
}

/// Summary of a run written to disk.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: ExperimentOutput,
    pub out_dir: PathBuf,
    pub manifest: String,
}

/// Run the pipeline and write its files plus `manifest.txt` to `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let start = Instant::now();
    let output = execute(cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let dir = cfg.out.clone();
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
    for f in &output.files {
        write_file(&dir.join(&f.name), &f.contents)?;
    }
    let manifest = manifest(cfg, &output, elapsed);
    write_file(&dir.join("manifest.txt"), &manifest)?;
    Ok(RunSummary { output, out_dir: dir, manifest })
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn manifest(cfg: &ExperimentConfig, output: &ExperimentOutput, elapsed: f64) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.to_pairs() {
        let _ = writeln!(m, "config.{k} = {v}");
    }
    let _ = writeln!(m, "seed_derivation = derive_seed(seed, \"{}/n<n>/r<ratio>\", index)", cfg.kind);
    let _ = writeln!(m, "instances = {}", output.instances);
    let _ = writeln!(m, "failures = {}", output.failures.len());
    for (i, f) in output.failures.iter().enumerate() {
        let _ = writeln!(m, "failure.{i} = {f}");
    }
    let names: Vec<&str> = output.files.iter().map(|f| f.name.as_str()).collect();
    let _ = writeln!(m, "files = {}", names.join(","));
    let _ = writeln!(m, "threads = {}", rayon::current_num_threads());
    let _ = writeln!(m, "wall_time_s = {elapsed:.3}");
    m
}

fn degeneracy(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let mut csv = String::from("n,m_over_n,energy,mean_count\n");
    for &n in &cfg.n_values {
        for &ratio in &cfg.ratios {
            let m = ExperimentConfig::clauses(n, ratio);
            let batch = run_batch(cfg.instances, &format!("n={n} ratio={ratio}"), |i| {
                let formula = if cfg.unique {
                    unique(cfg, n, ratio, i)?.formula
                } else {
                    generate_random_3sat(n, m, instance_seed(cfg.seed, cfg.kind.name(), n, ratio, i))?
                };
                Ok(degeneracy_histogram(&formula)?)
            });
            out.instances += cfg.instances;
            out.failures.extend(batch.failures);
            if batch.ok.is_empty() {
                continue;
            }
            let top = batch.ok.iter().map(|t| t.max_energy()).max().unwrap_or(0);
            for e in 0..=top {
                let mean = batch.ok.iter().map(|t| t.count(e) as f64).sum::<f64>() / batch.ok.len() as f64;
                let _ = writeln!(csv, "{n},{ratio},{e},{mean:.6}");
            }
        }
    }
    out.push("degeneracy.csv", csv);
    Ok(())
}

fn excited_scaling(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let mut csv = String::from("n,m_over_n,mean_first_excited_count\n");
    for &ratio in &cfg.ratios {
        let mut points = Vec::new();
        for &n in &cfg.n_values {
            let batch = run_batch(cfg.instances, &format!("n={n} ratio={ratio}"), |i| {
                Ok(degeneracy_histogram(&unique(cfg, n, ratio, i)?.formula)?.count(1) as f64)
            });
            out.instances += cfg.instances;
            out.failures.extend(batch.failures);
            if batch.ok.is_empty() {
                continue;
            }
            let mean = fit::mean(&batch.ok);
            let _ = writeln!(csv, "{n},{ratio},{mean:.6}");
            points.push((n as f64, mean));
        }
        out.try_fit(&format!("first_excited_r{ratio}"), &points)?;
    }
    out.push("excited_degeneracy.csv", csv);
    Ok(())
}

fn rarity(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let ratio = cfg.ratios[0];
    let mut csv = String::from("n,mean_trials,std_trials\n");
    let mut points = Vec::new();
    for &n in &cfg.n_values {
        let batch = run_batch(cfg.instances, &format!("n={n}"), |i| Ok(unique(cfg, n, ratio, i)?.trials as f64));
        out.instances += cfg.instances;
        out.failures.extend(batch.failures);
        if batch.ok.is_empty() {
            continue;
        }
        let mean = fit::mean(&batch.ok);
        let _ = writeln!(csv, "{n},{mean:.6},{:.6}", fit::std_dev(&batch.ok));
        points.push((n as f64, mean));
    }
    out.try_fit("mean_trials", &points)?;
    out.push("rarity.csv", csv);
    Ok(())
}

fn spectrum(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let (n, ratio) = (cfg.n_values[0], cfg.ratios[0]);
    out.instances = 1;
    let rec = unique(cfg, n, ratio, 0)?;
    let ham = Hamiltonian::new(&rec.formula)?;
    let levels = cfg.levels.min(ham.dim());
    let sweep = spectrum_sweep(&ham, &uniform_grid(cfg.s_points), levels, &cfg.gap.eigen)?;
    out.push("spectrum.csv", sweep_to_csv(&sweep));
    out.push("instance.cnf", serialize_dimacs(&rec.formula, &DimacsMeta::from(&rec)));
    Ok(())
}

/// `points` values from `lo` to `hi`, evenly spaced in `ln T`.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            let f = i as f64 / (points - 1) as f64;
            (lo.ln() * (1.0 - f) + hi.ln() * f).exp()
        })
        .collect()
}

fn lz_check(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let mut summary = String::from("n,index,seed,delta,slope,tau_lz,mean_abs_deviation,max_norm_drift\n");
    for &n in &cfg.n_values {
        for &ratio in &cfg.ratios {
            let batch = run_batch(cfg.instances, &format!("n={n} ratio={ratio}"), |i| {
                let rec = unique(cfg, n, ratio, i)?;
                let ham = Hamiltonian::new(&rec.formula)?;
                let gap = analyze_gap(&ham, &cfg.gap)?;
                let tau = gap.fit.tau_lz;
                let times = geometric_grid(cfg.t_min * tau, cfg.t_max * tau, cfg.t_points);
                let sol = rec.solution.expect("unique instances carry their solution");
                let curve = success_probability_curve(&ham, sol, &times, &cfg.evolution, Some(tau))?;
                Ok((i, rec.seed, gap, curve))
            });
            out.instances += cfg.instances;
            out.failures.extend(batch.failures);
            for (i, seed, gap, curve) in batch.ok {
                let dev: Vec<f64> =
                    curve.iter().map(|r| (r.p_ground - (1.0 - r.lz_prediction.unwrap_or(f64::NAN))).abs()).collect();
                let drift = curve.iter().map(|r| r.norm_drift).fold(0.0, f64::max);
                let _ = writeln!(
                    summary,
                    "{n},{i},{seed},{:.12},{:.12},{:.12},{:.12},{drift:.3e}",
                    gap.fit.delta,
                    gap.fit.slope,
                    gap.fit.tau_lz,
                    fit::mean(&dev)
                );
                out.push(format!("lz_curve_n{n}_r{ratio}_{i}.csv"), curve_to_csv(&curve));
            }
        }
    }
    out.push("lz_summary.csv", summary);
    Ok(())
}

/// Per-instance gap-scaling record.
struct GapRow {
    index: usize,
    seed: u64,
    m: usize,
    trials: u64,
    analysis: GapAnalysis,
}

fn gap_scaling(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let mut rows_csv = String::from("n,seed,m,s_star,delta,slope,tau_lz,residual\n");
    let mut diag = String::from("n,index,seed,trials,gamma_min,s_min,local_minima,boundary,evaluations\n");
    let mut summary = String::from(
        "n,m,count,failures,mean_delta,min_delta,max_delta,median_delta,mean_tau,min_tau,max_tau,median_tau\n",
    );
    for &ratio in &cfg.ratios {
        let suffix = if cfg.ratios.len() > 1 { format!("_r{ratio}") } else { String::new() };
        let mut series: [Vec<(f64, f64)>; 6] = Default::default();
        for &n in &cfg.n_values {
            let m = ExperimentConfig::clauses(n, ratio);
            let batch = run_batch(cfg.instances, &format!("n={n} ratio={ratio}"), |i| {
                let rec = unique(cfg, n, ratio, i)?;
                let ham = Hamiltonian::new(&rec.formula)?;
                let analysis = analyze_gap(&ham, &cfg.gap)?;
                Ok(GapRow { index: i, seed: rec.seed, m, trials: rec.trials, analysis })
            });
            out.instances += cfg.instances;
            let failed = batch.failures.len();
            out.failures.extend(batch.failures);
            if batch.ok.is_empty() {
                continue;
            }
            for r in &batch.ok {
                let (f, g) = (&r.analysis.fit, &r.analysis.min_gap);
                let _ = writeln!(
                    rows_csv,
                    "{n},{},{},{:.12},{:.12},{:.12},{:.12},{:.6e}",
                    r.seed, r.m, f.s_star, f.delta, f.slope, f.tau_lz, f.residual
                );
                let _ = writeln!(
                    diag,
                    "{n},{},{},{},{:.12},{:.12},{},{},{}",
                    r.index, r.seed, r.trials, g.gamma_min, g.s_star, g.local_minima, g.boundary, g.evaluations
                );
            }
            let deltas: Vec<f64> = batch.ok.iter().map(|r| r.analysis.fit.delta).collect();
            let taus: Vec<f64> = batch.ok.iter().map(|r| r.analysis.fit.tau_lz).collect();
            let stats = [
                fit::mean(&deltas),
                fit::min(&deltas),
                fit::max(&deltas),
                fit::lower_median(&deltas),
                fit::mean(&taus),
                fit::min(&taus),
                fit::max(&taus),
                fit::lower_median(&taus),
            ];
            let _ = writeln!(
                summary,
                "{n},{m},{},{failed},{}",
                batch.ok.len(),
                stats.iter().map(|v| format!("{v:.12}")).collect::<Vec<_>>().join(",")
            );
            let x = n as f64;
            for (s, v) in series.iter_mut().zip([stats[0], stats[3], stats[4], stats[7], stats[6], stats[5]]) {
                s.push((x, v));
            }
        }
        let names = ["mean_delta", "median_delta", "mean_tau", "median_tau", "max_tau", "min_tau"];
        for (name, pts) in names.iter().zip(&series) {
            out.try_fit(&format!("{name}{suffix}"), pts)?;
        }
    }
    out.push("gap_scaling.csv", rows_csv);
    out.push("gap_diagnostics.csv", diag);
    out.push("gap_summary.csv", summary);
    Ok(())
}

fn gsat_compare(cfg: &ExperimentConfig, out: &mut ExperimentOutput) -> Result<(), HarnessError> {
    let classes: &[InstanceClass] = match cfg.classes {
        GsatClasses::Both => &[InstanceClass::Satisfiable, InstanceClass::Unique],
        GsatClasses::Unique => &[InstanceClass::Unique],
        GsatClasses::Satisfiable => &[InstanceClass::Satisfiable],
    };
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        for &ratio in &cfg.ratios {
            let m = ExperimentConfig::clauses(n, ratio);
            for &class in classes {
                let tag = match class {
                    InstanceClass::Unique => "gsat-compare/unique",
                    InstanceClass::Satisfiable => "gsat-compare/satisfiable",
                };
                let batch = run_batch(cfg.instances, &format!("{class} n={n} ratio={ratio}"), |i| {
                    let seed = instance_seed(cfg.seed, tag, n, ratio, i);
                    let rec = match class {
                        InstanceClass::Unique => generate_unique_solution_instance(n, m, seed, cfg.max_trials)?,
                        InstanceClass::Satisfiable => generate_satisfiable_instance(n, m, seed, cfg.max_trials)?,
                    };
                    Ok(rec.formula)
                });
                out.instances += cfg.instances;
                out.failures.extend(batch.failures);
                if batch.ok.is_empty() {
                    continue;
                }
                let mut params = GsatParams::for_vars(n, instance_seed(cfg.seed, &format!("{tag}/search"), n, ratio, 0));
                params.max_restarts = cfg.max_restarts;
                params.p_walk = cfg.p_walk;
                if let Some(f) = cfg.max_flips {
                    params.max_flips = f;
                }
                let stats = gsat_statistics(&batch.ok, &params);
                rows.push(GsatRow { m_over_n: m as f64 / n as f64, n, class, stats });
            }
        }
    }
    out.push("gsat.csv", gsat_rows_to_csv(&rows));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ExperimentKind, n: &[usize], instances: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.n_values = n.to_vec();
        cfg.instances = instances;
        cfg.seed = 3;
        cfg
    }

    fn column(csv: &str, name: &str) -> Vec<f64> {
        let mut lines = csv.lines();
        let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
        lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
    }

    #[test]
    fn degeneracy_rows_sum_to_dimension() {
        let out = execute(&config(ExperimentKind::Degeneracy, &[6, 7], 4)).unwrap();
        let csv = out.file("degeneracy.csv").unwrap();
        let counts = column(csv, "mean_count");
        let ns = column(csv, "n");
        for n in [6.0, 7.0] {
            let total: f64 = counts.iter().zip(&ns).filter(|(_, &x)| x == n).map(|(c, _)| c).sum();
            assert!((total - 2f64.powf(n)).abs() < 1e-9);
        }
        let first = counts[0];
        assert_eq!(first, 1.0, "unique instances have one zero-energy state");
    }

    #[test]
    fn rarity_and_excited_fits() {
        let out = execute(&config(ExperimentKind::Rarity, &[6, 7, 8], 10)).unwrap();
        assert_eq!(column(out.file("rarity.csv").unwrap(), "n"), vec![6.0, 7.0, 8.0]);
        assert!(out.fit("mean_trials").is_some());
        assert!(out.file("fits.csv").unwrap().starts_with("name,a,b,log_rms,points\n"));
        let out = execute(&config(ExperimentKind::ExcitedScaling, &[6, 7, 8], 10)).unwrap();
        assert!(out.fit("first_excited_r3").unwrap().b.is_finite());
    }

    #[test]
    fn gap_scaling_summary_matches_rows() {
        let out = execute(&config(ExperimentKind::GapScaling, &[6, 7, 8], 5)).unwrap();
        let rows = out.file("gap_scaling.csv").unwrap();
        let summary = out.file("gap_summary.csv").unwrap();
        let ns = column(rows, "n");
        let deltas = column(rows, "delta");
        let taus = column(rows, "tau_lz");
        for (k, n) in column(summary, "n").iter().enumerate() {
            let d: Vec<f64> = deltas.iter().zip(&ns).filter(|(_, x)| *x == n).map(|(d, _)| *d).collect();
            let t: Vec<f64> = taus.iter().zip(&ns).filter(|(_, x)| *x == n).map(|(d, _)| *d).collect();
            let parse = |s: f64| format!("{s:.12}").parse::<f64>().unwrap();
            assert_eq!(column(summary, "mean_delta")[k], parse(fit::mean(&d)));
            assert_eq!(column(summary, "median_tau")[k], parse(fit::lower_median(&t)));
            assert_eq!(column(summary, "max_delta")[k], parse(fit::max(&d)));
        }
        assert!(out.fit("mean_delta").is_some() && out.fit("median_tau").is_some());
    }

    #[test]
    fn spectrum_and_lz_outputs() {
        let mut cfg = config(ExperimentKind::Spectrum, &[6], 1);
        cfg.levels = 4;
        cfg.s_points = 11;
        let out = execute(&cfg).unwrap();
        let csv = out.file("spectrum.csv").unwrap();
        assert_eq!(csv.lines().next().unwrap(), "s,E_0,E_1,E_2,E_3");
        assert_eq!(csv.lines().count(), 12);
        assert!(out.file("instance.cnf").unwrap().contains("c solutions 1"));

        let mut cfg = config(ExperimentKind::LzCheck, &[6], 2);
        cfg.t_points = 4;
        let out = execute(&cfg).unwrap();
        assert_eq!(out.file("lz_summary.csv").unwrap().lines().count(), 3);
        let curve = out.file("lz_curve_n6_r3_0.csv").unwrap();
        assert_eq!(curve.lines().count(), 5);
    }

    #[test]
    fn gsat_compare_rows() {
        let mut cfg = config(ExperimentKind::GsatCompare, &[10], 5);
        cfg.ratios = vec![3.0, 4.2];
        let out = execute(&cfg).unwrap();
        let csv = out.file("gsat.csv").unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains(",10,r=1,") && csv.contains(",10,r>=1,"));
    }

    #[test]
    fn failures_abort_the_run() {
        let mut cfg = config(ExperimentKind::Rarity, &[8], 5);
        cfg.max_trials = 1;
        assert!(matches!(execute(&cfg), Err(HarnessError::TooManyFailures { .. })));
    }

    #[test]
    fn run_writes_files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(ExperimentKind::Rarity, &[6, 7, 8], 3);
        cfg.out = dir.path().join("rarity");
        let run = run_experiment(&cfg).unwrap();
        let on_disk = std::fs::read_to_string(cfg.out.join("rarity.csv")).unwrap();
        assert_eq!(on_disk, run.output.file("rarity.csv").unwrap());
        let manifest = std::fs::read_to_string(cfg.out.join("manifest.txt")).unwrap();
        assert!(manifest.contains("config.kind = rarity"));
        assert!(manifest.contains("failures = 0"));
        assert_eq!(execute(&cfg).unwrap().files, run.output.files);
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(2.0, 50.0, 5);
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[4] - 50.0).abs() < 1e-12);
        assert!((g[2] - 10.0).abs() < 1e-12);
    }
}
