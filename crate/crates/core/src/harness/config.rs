//! Experiment configuration and its plain-text `key = value` format.
//!
//! ```text
//! # gap scaling at m/n = 3
//! kind = gap-scaling
//! n = 8..14
//! ratio = 3
//! instances = 50
//! seed = 1
//! out = results/gap
//! ```
//!
//! `n` takes an inclusive range `a..b` or a comma list; `ratio` a comma list.
//! Blank lines and `#` comments are ignored. Unknown keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::dynamics::EvolutionConfig;
use crate::eigen::EigenOptions;
use crate::hamiltonian::{MAX_CLAUSES, MAX_HAMILTONIAN_VARS};
use crate::sat::{max_distinct_clauses, MAX_ENUMERATION_VARS};
use crate::spectra::GapOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Degeneracy,
    ExcitedScaling,
    Rarity,
    Spectrum,
    LzCheck,
    GapScaling,
    GsatCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Degeneracy,
        ExperimentKind::ExcitedScaling,
        ExperimentKind::Rarity,
        ExperimentKind::Spectrum,
        ExperimentKind::LzCheck,
        ExperimentKind::GapScaling,
        ExperimentKind::GsatCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Degeneracy => "degeneracy",
            ExperimentKind::ExcitedScaling => "excited-scaling",
            ExperimentKind::Rarity => "rarity",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::LzCheck => "lz-check",
            ExperimentKind::GapScaling => "gap-scaling",
            ExperimentKind::GsatCompare => "gsat-compare",
        }
    }

    /// Whether the pipeline builds Hamiltonians.
    fn needs_hamiltonian(self) -> bool {
        matches!(
            self,
            ExperimentKind::Degeneracy
                | ExperimentKind::ExcitedScaling
                | ExperimentKind::Spectrum
                | ExperimentKind::LzCheck
                | ExperimentKind::GapScaling
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("expected one of {}", ExperimentKind::ALL.map(|k| k.name()).join(", ")))
    }
}

/// Which instance classes a GSAT comparison covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsatClasses {
    Both,
    Unique,
    Satisfiable,
}

impl GsatClasses {
    fn name(self) -> &'static str {
        match self {
            GsatClasses::Both => "both",
            GsatClasses::Unique => "unique",
            GsatClasses::Satisfiable => "satisfiable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_values: Vec<usize>,
    pub ratios: Vec<f64>,
    /// Instances per `(n, ratio)` point.
    pub instances: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Restrict degeneracy histograms to unique-solution instances.
    pub unique: bool,
    pub max_trials: u64,
    pub gap: GapOptions,
    pub evolution: EvolutionConfig,
    /// Lowest levels written by a spectrum sweep.
    pub levels: usize,
    pub s_points: usize,
    /// Points on the `T` grid of an lz-check, spaced geometrically.
    pub t_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// `None` uses `10 n^2`.
    pub max_flips: Option<u64>,
    pub max_restarts: u64,
    pub p_walk: f64,
    pub classes: GsatClasses,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n_values: vec![],
            ratios: vec![3.0],
            instances: 50,
            seed: 1,
            out: PathBuf::from("results"),
            unique: true,
            max_trials: 10_000_000,
            gap: GapOptions::default(),
            evolution: EvolutionConfig::default(),
            levels: 18,
            s_points: 101,
            t_points: 9,
            t_min: 0.2,
            t_max: 5.0,
            max_flips: None,
            max_restarts: 100,
            p_walk: 0.5,
            classes: GsatClasses::Both,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let kind_value = pairs.iter().find(|(k, _)| k == "kind").ok_or(ConfigError::Missing("kind"))?;
        let kind = kind_value.1.parse().map_err(|reason| value_error("kind", &kind_value.1, reason))?;
        let mut cfg = ExperimentConfig::new(kind);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text)
    }

    /// Set one key from its text form, as in a config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "kind" => self.kind = value.parse().map_err(|r| value_error(key, value, r))?,
            "n" => self.n_values = parse_n_values(value).map_err(|r| value_error(key, value, r))?,
            "ratio" | "ratios" => self.ratios = parse_list(key, value)?,
            "instances" => self.instances = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "unique" => self.unique = parse_one(key, value)?,
            "max_trials" => self.max_trials = parse_one(key, value)?,
            "eig_tol" => self.gap.eigen.tol = parse_one(key, value)?,
            "coarse_points" => self.gap.coarse_points = parse_one(key, value)?,
            "refine_tol" => self.gap.refine_tol = parse_one(key, value)?,
            "fit_samples" => self.gap.fit_samples = parse_one(key, value)?,
            "extra_levels" => self.gap.extra_levels = parse_one(key, value)?,
            "dt" => self.evolution.dt = parse_one(key, value)?,
            "series_tol" => self.evolution.series_tol = parse_one(key, value)?,
            "max_norm_drift" => self.evolution.max_norm_drift = parse_one(key, value)?,
            "levels" => self.levels = parse_one(key, value)?,
            "s_points" => self.s_points = parse_one(key, value)?,
            "t_points" => self.t_points = parse_one(key, value)?,
            "t_min" => self.t_min = parse_one(key, value)?,
            "t_max" => self.t_max = parse_one(key, value)?,
            "max_flips" => {
                self.max_flips = if value == "auto" { None } else { Some(parse_one(key, value)?) };
            }
            "max_restarts" => self.max_restarts = parse_one(key, value)?,
            "p_walk" => self.p_walk = parse_one(key, value)?,
            "classes" => {
                self.classes = match value {
                    "both" => GsatClasses::Both,
                    "unique" => GsatClasses::Unique,
                    "satisfiable" => GsatClasses::Satisfiable,
                    _ => return Err(value_error(key, value, "expected both, unique or satisfiable".into())),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Clause count for ratio `r` at `n` variables.
    pub fn clauses(n: usize, ratio: f64) -> usize {
        (ratio * n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n_values.is_empty() {
            return Err(ConfigError::Missing("n"));
        }
        if self.instances == 0 {
            return bad("instances must be at least 1".into());
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("ratios must be positive".into());
        }
        let cap = if self.kind.needs_hamiltonian() { MAX_HAMILTONIAN_VARS } else { MAX_ENUMERATION_VARS };
        for &n in &self.n_values {
            if !(3..=cap).contains(&n) {
                return bad(format!("n = {n} outside 3..={cap} for {}", self.kind));
            }
            for &r in &self.ratios {
                let m = Self::clauses(n, r);
                if m as u64 > max_distinct_clauses(n) || (self.kind.needs_hamiltonian() && m > MAX_CLAUSES) {
                    return bad(format!("m = {m} clauses is too many for n = {n}"));
                }
            }
        }
        if !(self.gap.eigen.tol > 0.0 && self.gap.refine_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.kind == ExperimentKind::LzCheck && !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_points >= 2)
        {
            return bad("lz-check needs 0 < t_min < t_max and t_points >= 2".into());
        }
        if self.kind == ExperimentKind::Rarity && self.ratios.len() != 1 {
            return bad("rarity takes a single ratio".into());
        }
        if self.kind == ExperimentKind::Spectrum && (self.levels < 2 || self.s_points < 2) {
            return bad("spectrum needs levels >= 2 and s_points >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.p_walk) || self.max_flips == Some(0) {
            return bad("p_walk must lie in [0, 1] and max_flips must be positive".into());
        }
        if !(self.evolution.dt > 0.0 && self.evolution.series_tol > 0.0) {
            return bad("dt and series_tol must be positive".into());
        }
        Ok(())
    }

    /// Every setting as `key = value` pairs, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let n = self.n_values.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        let ratios = self.ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        let eigen: &EigenOptions = &self.gap.eigen;
        [
            ("kind", self.kind.to_string()),
            ("n", n),
            ("ratio", ratios),
            ("instances", self.instances.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("unique", self.unique.to_string()),
            ("max_trials", self.max_trials.to_string()),
            ("eig_tol", eigen.tol.to_string()),
            ("coarse_points", self.gap.coarse_points.to_string()),
            ("refine_tol", self.gap.refine_tol.to_string()),
            ("fit_samples", self.gap.fit_samples.to_string()),
            ("extra_levels", self.gap.extra_levels.to_string()),
            ("dt", self.evolution.dt.to_string()),
            ("series_tol", self.evolution.series_tol.to_string()),
            ("max_norm_drift", self.evolution.max_norm_drift.to_string()),
            ("levels", self.levels.to_string()),
            ("s_points", self.s_points.to_string()),
            ("t_points", self.t_points.to_string()),
            ("t_min", self.t_min.to_string()),
            ("t_max", self.t_max.to_string()),
            ("max_flips", self.max_flips.map_or("auto".to_string(), |f| f.to_string())),
            ("max_restarts", self.max_restarts.to_string()),
            ("p_walk", self.p_walk.to_string()),
            ("classes", self.classes.name().to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn value_error(key: &str, value: &str, reason: String) -> ConfigError {
    ConfigError::Value { key: key.to_string(), value: value.to_string(), reason }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| value_error(key, value, e.to_string()))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    value.split(',').map(|p| parse_one(key, p.trim())).collect()
}

/// `a..b` (inclusive) or a comma list.
pub fn parse_n_values(value: &str) -> Result<Vec<usize>, String> {
    if let Some((a, b)) = value.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{e}"))?;
        if a > b {
            return Err("empty range".into());
        }
        return Ok((a..=b).collect());
    }
    value.split(',').map(|p| p.trim().parse().map_err(|e| format!("{e}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let cfg = ExperimentConfig::parse(
            "# gap scaling\nkind = gap-scaling\nn = 8..14\nratio = 3\ninstances = 50\nseed = 1\nout = results/gap\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::GapScaling);
        assert_eq!(cfg.n_values, (8..=14).collect::<Vec<_>>());
        assert_eq!(cfg.ratios, vec![3.0]);
        assert_eq!(cfg.instances, 50);
        assert_eq!(cfg.out, PathBuf::from("results/gap"));
        cfg.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::GsatCompare);
        cfg.n_values = vec![20];
        cfg.ratios = vec![3.0, 4.2, 5.5];
        cfg.max_flips = Some(1234);
        cfg.gap.eigen.tol = 1e-7;
        cfg.classes = GsatClasses::Unique;
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        for kind in ExperimentKind::ALL {
            assert_eq!(kind.name().parse::<ExperimentKind>(), Ok(kind));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ExperimentConfig::parse("n = 8\n"), Err(ConfigError::Missing("kind")));
        assert!(matches!(ExperimentConfig::parse("kind = rarity\nbogus = 1\n"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ExperimentConfig::parse("kind = rarity\njunk\n"), Err(ConfigError::Syntax { line: 2 })));
        assert!(matches!(ExperimentConfig::parse("kind = nope\n"), Err(ConfigError::Value { .. })));
        assert!(matches!(ExperimentConfig::parse("kind = rarity\ninstances = x\n"), Err(ConfigError::Value { .. })));
        let invalid = [
            "kind = rarity\n",
            "kind = rarity\nn = 8\ninstances = 0\n",
            "kind = rarity\nn = 8\nratio = -1\n",
            "kind = gap-scaling\nn = 25\n",
            "kind = rarity\nn = 31\n",
            "kind = rarity\nn = 4\nratio = 9\n",
        ];
        for text in invalid {
            let cfg = ExperimentConfig::parse(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert_eq!(parse_n_values("10..8"), Err("empty range".into()));
        assert_eq!(parse_n_values("8, 10,12"), Ok(vec![8, 10, 12]));
    }
}
