//! `qaa`: command-line access to instance generation, spectra, gap fits,
//! time evolution, GSAT and the experiment pipelines.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when the command
//! itself fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qaa_core::dimacs::{parse_dimacs_with_meta, serialize_dimacs, DimacsMeta};
use qaa_core::dynamics::{curve_to_csv, success_probability_curve, EvolutionConfig};
use qaa_core::gsat::{gsat_solve, GsatParams};
use qaa_core::hamiltonian::{degeneracy_histogram, Hamiltonian};
use qaa_core::harness::{fit_exponential, run_experiment, ExperimentConfig};
use qaa_core::sat::{
    count_solutions, find_solutions, generate_random_3sat, generate_satisfiable_instance,
    generate_unique_solution_instance, Assignment, Formula,
};
use qaa_core::spectra::{analyze_gap, spectrum_sweep, sweep_to_csv, uniform_grid, GapOptions};

#[derive(Parser, Debug)]
#[command(name = "qaa", version, about = "Quantum adiabatic algorithm simulator for random 3-SAT")]
struct Cli {
    /// Master seed for random choices.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or, for `experiment`, output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Eigensolver residual tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random 3-SAT formula and write it as DIMACS CNF.
    Generate(GenerateArgs),
    /// Count satisfying assignments of a CNF file.
    Count(CountArgs),
    /// Lowest levels of H(s) on a uniform grid in s.
    Spectrum(SpectrumArgs),
    /// Minimum gap, avoided-crossing fit and Landau-Zener time.
    Gap(CnfArg),
    /// Integrate the Schrodinger equation and report p(ground).
    Evolve(EvolveArgs),
    /// Run GSAT with random walk on a CNF file.
    Gsat(GsatArgs),
    /// Run an experiment pipeline from a key = value config.
    Experiment(ExperimentArgs),
    /// Fit y = a exp(b x) to two columns of a CSV file.
    Fit(FitArgs),
}

#[derive(Args, Debug)]
struct CnfArg {
    #[arg(long)]
    cnf: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Reject formulas until exactly one solution remains.
    #[arg(long, conflicts_with = "satisfiable")]
    unique: bool,
    /// Reject unsatisfiable formulas.
    #[arg(long)]
    satisfiable: bool,
    #[arg(long, default_value_t = 10_000_000)]
    max_trials: u64,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long)]
    cnf: PathBuf,
    /// Also print the H(1) degeneracy table.
    #[arg(long)]
    histogram: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long, default_value_t = 6)]
    levels: usize,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long)]
    cnf: PathBuf,
    /// Total times, comma separated.
    #[arg(long = "T", value_delimiter = ',', required = true)]
    times: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value_t = 1e-12)]
    series_tol: f64,
    /// Landau-Zener time for the prediction column.
    #[arg(long)]
    tau: Option<f64>,
    /// Target assignment as a bitstring b1 b2 ...; defaults to the unique
    /// solution.
    #[arg(long)]
    solution: Option<String>,
}

#[derive(Args, Debug)]
struct GsatArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long)]
    max_flips: Option<u64>,
    #[arg(long, default_value_t = 100)]
    max_restarts: u64,
    #[arg(long, default_value_t = 0.5)]
    p_walk: f64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set n=8..12`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "n")]
    x: String,
    #[arg(long)]
    y: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_cnf(path: &Path) -> Result<(Formula, DimacsMeta)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dimacs_with_meta(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Write to `--out` when given, otherwise print.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gap_options(tolerance: Option<f64>) -> GapOptions {
    let mut opts = GapOptions::default();
    if let Some(t) = tolerance {
        opts.eigen.tol = t;
    }
    opts
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring threads")?;
    }
    let seed = cli.seed.unwrap_or(1);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate(a) => {
            let (formula, meta) = if a.unique {
                let rec = generate_unique_solution_instance(a.n, a.m, seed, a.max_trials)?;
                let meta = DimacsMeta::from(&rec);
                (rec.formula, meta)
            } else if a.satisfiable {
                let rec = generate_satisfiable_instance(a.n, a.m, seed, a.max_trials)?;
                let meta = DimacsMeta::from(&rec);
                (rec.formula, meta)
            } else {
                let f = generate_random_3sat(a.n, a.m, seed)?;
                let meta = DimacsMeta { seed: Some(seed), ..DimacsMeta::default() };
                (f, meta)
            };
            emit(out, &serialize_dimacs(&formula, &meta))
        }
        Command::Count(a) => {
            let (formula, _) = read_cnf(&a.cnf)?;
            let mut text = format!("solutions {}\n", count_solutions(&formula)?);
            if a.histogram {
                text.push_str(&degeneracy_histogram(&formula)?.to_csv());
            }
            emit(out, &text)
        }
        Command::Spectrum(a) => {
            let (formula, _) = read_cnf(&a.cnf)?;
            let ham = Hamiltonian::new(&formula)?;
            let opts = gap_options(cli.tolerance).eigen;
            let levels = a.levels.min(ham.dim());
            let sweep = spectrum_sweep(&ham, &uniform_grid(a.points), levels, &opts)?;
            emit(out, &sweep_to_csv(&sweep))
        }
        Command::Gap(a) => {
            let (formula, _) = read_cnf(&a.cnf)?;
            let ham = Hamiltonian::new(&formula)?;
            let analysis = analyze_gap(&ham, &gap_options(cli.tolerance))?;
            let mg = &analysis.min_gap;
            let record = format!(
                "{}\ngamma_min = {}\ns_min = {}\nlocal_minima = {}\nboundary = {}\n",
                analysis.fit.to_record(),
                mg.gamma_min,
                mg.s_star,
                mg.local_minima,
                mg.boundary
            );
            print!("{record}");
            let path = out.map(Path::to_path_buf).unwrap_or_else(|| a.cnf.with_extension("gap"));
            std::fs::write(&path, &record).with_context(|| format!("writing {}", path.display()))
        }
        Command::Evolve(a) => {
            let (formula, meta) = read_cnf(&a.cnf)?;
            let solution = match (&a.solution, meta.solution) {
                (Some(bits), _) => {
                    if bits.len() != formula.num_vars() {
                        bail!("--solution needs {} bits", formula.num_vars());
                    }
                    Assignment::from_bitstring(bits).ok_or_else(|| anyhow!("--solution must be a 0/1 string"))?
                }
                (None, Some(s)) => s,
                (None, None) => {
                    let sols = find_solutions(&formula, 2)?;
                    if sols.len() != 1 {
                        bail!("formula has {} solutions; pass --solution", count_solutions(&formula)?);
                    }
                    sols[0]
                }
            };
            let ham = Hamiltonian::new(&formula)?;
            let cfg = EvolutionConfig { dt: a.dt, series_tol: a.series_tol, ..EvolutionConfig::default() };
            let curve = success_probability_curve(&ham, solution, &a.times, &cfg, a.tau)?;
            emit(out, &curve_to_csv(&curve))
        }
        Command::Gsat(a) => {
            let (formula, _) = read_cnf(&a.cnf)?;
            let mut params = GsatParams::for_vars(formula.num_vars(), seed);
            params.max_restarts = a.max_restarts;
            params.p_walk = a.p_walk;
            if let Some(f) = a.max_flips {
                params.max_flips = f;
            }
            if params.max_flips == 0 || !(0.0..=1.0).contains(&params.p_walk) {
                bail!("need max_flips >= 1 and p_walk in [0, 1]");
            }
            let r = gsat_solve(&formula, &params);
            emit(
                out,
                &format!(
                    "solved = {}\nflips = {}\nrestarts = {}\nassignment = {}\n",
                    r.solved,
                    r.flips,
                    r.restarts,
                    r.assignment.to_bitstring(formula.num_vars())
                ),
            )
        }
        Command::Experiment(a) => {
            let mut cfg = match &a.config {
                Some(p) => ExperimentConfig::from_file(p)?,
                None => {
                    let kind = a
                        .overrides
                        .iter()
                        .find_map(|o| o.strip_prefix("kind="))
                        .ok_or_else(|| anyhow!("give --config or --set kind=<experiment>"))?;
                    ExperimentConfig::new(kind.parse().map_err(|e: String| anyhow!(e))?)
                }
            };
            for o in &a.overrides {
                let (k, v) = o.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{o}`"))?;
                cfg.set(k.trim(), v.trim())?;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out = o.to_path_buf();
            }
            if let Some(t) = cli.tolerance {
                cfg.gap.eigen.tol = t;
            }
            let run = run_experiment(&cfg)?;
            for (name, f) in &run.output.fits {
                println!("{name}: a = {:.6e}, b = {:.6}, log_rms = {:.3e}", f.a, f.b, f.log_rms);
            }
            println!(
                "{} instances, {} failures; wrote {} files to {}",
                run.output.instances,
                run.output.failures.len(),
                run.output.files.len() + 1,
                run.out_dir.display()
            );
            Ok(())
        }
        Command::Fit(a) => {
            let text = std::fs::read_to_string(&a.csv).with_context(|| format!("reading {}", a.csv.display()))?;
            let points = read_columns(&text, &a.x, &a.y)?;
            let f = fit_exponential(&points)?;
            emit(out, &format!("a = {:.12e}\nb = {:.12}\nlog_rms = {:.6e}\npoints = {}\n", f.a, f.b, f.log_rms, f.points))
        }
    }
}

fn read_columns(text: &str, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| anyhow!("empty CSV"))?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| h.trim() == name).ok_or_else(|| anyhow!("no column `{name}`"));
    let (ix, iy) = (col(x)?, col(y)?);
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            let get = |j: usize| -> Result<f64> {
                cells.get(j).ok_or_else(|| anyhow!("row {} is short", i + 2))?.trim().parse().context("bad number")
            };
            Ok((get(ix)?, get(iy)?))
        })
        .collect()
}
