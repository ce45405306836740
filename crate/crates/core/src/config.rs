//! Run configuration: a flat `key = value` text format with `[section]` headers.
//!
//! ```text
//! [solver]
//! steps = 1000
//! schedule = constant
//!
//! [lse]
//! lambda = 5000
//! ```
//!
//! Keys may also be written as `section.key` anywhere. Lines starting with
//! `#` or `;` are comments. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dual::{AcceptanceDelta, AscentConfig, StepSchedule};
use crate::error::{Result, SfpError};
use crate::quadrature::Rule;
use crate::spectral::CenterRule;

/// Which ascent drives the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Approximate,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub steps: usize,
    pub eta0: f64,
    pub schedule: StepSchedule,
    pub cells: usize,
    pub rule: Rule,
    pub acceptance: AcceptanceDelta,
    pub early_stop_tol: Option<f64>,
    pub max_backtracks: usize,
    pub mode: SolverMode,
    /// Nodes per stochastic step.
    pub mc_batch: usize,
    pub output_grid: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            eta0: 1.0,
            schedule: StepSchedule::Constant,
            cells: 256,
            rule: Rule::Gauss5,
            acceptance: AcceptanceDelta::Live,
            early_stop_tol: None,
            max_backtracks: 30,
            mode: SolverMode::Approximate,
            mc_batch: 8,
            output_grid: 2001,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn ascent(&self) -> AscentConfig {
        AscentConfig {
            steps: self.steps,
            eta0: self.eta0,
            schedule: self.schedule,
            early_stop_tol: self.early_stop_tol,
            max_backtracks: self.max_backtracks,
            acceptance: self.acceptance,
            output_grid: self.output_grid,
        }
    }
}

/// Line spectral estimation problem and synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct LseConfig {
    pub b: f64,
    pub lambda: f64,
    /// Defaults to `p·noise_var`.
    pub epsilon: Option<f64>,
    pub r: f64,
    pub center: CenterRule,
    /// Two-column sample CSV; a synthetic scene is drawn when absent.
    pub input: Option<PathBuf>,
    pub t0: i64,
    pub t1: i64,
    pub k: usize,
    /// Defaults to `4/p`.
    pub min_spacing: Option<f64>,
    pub amp_min: f64,
    pub amp_max: f64,
    pub noise_var: f64,
    /// Fixed frequencies; drawn at random when absent.
    pub freqs: Option<Vec<f64>>,
    pub amps: Option<Vec<f64>>,
}

impl Default for LseConfig {
    fn default() -> Self {
        Self {
            b: 1.0,
            lambda: 5000.0,
            epsilon: None,
            r: f64::INFINITY,
            center: CenterRule::Centroid,
            input: None,
            t0: -30,
            t1: 30,
            k: 5,
            min_spacing: None,
            amp_min: 0.5,
            amp_max: 3.0,
            noise_var: 0.1,
            freqs: None,
            amps: None,
        }
    }
}

/// Robust functional logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RfdaConfig {
    pub lambda: f64,
    pub r: f64,
    /// Defaults to `eps_per_sample · n`.
    pub eps_tilde: Option<f64>,
    pub eps_per_sample: f64,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Synthetic set used when no files are given.
    pub n_train: usize,
    pub n_test: usize,
    pub knots: usize,
    pub noise: f64,
    pub corrupt_fraction: f64,
    pub corrupt_magnitude: f64,
    /// Ascent step size for training; replaces `solver.eta0`.
    pub eta0: f64,
}

impl Default for RfdaConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            r: 4.0,
            eps_tilde: None,
            eps_per_sample: 0.46,
            train: None,
            test: None,
            n_train: 40,
            n_test: 100,
            knots: 33,
            noise: 0.3,
            corrupt_fraction: 0.1,
            corrupt_magnitude: 20.0,
            eta0: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Config {
    pub gamma: f64,
    pub y1: f64,
    pub y2: f64,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            y1: 0.3,
            y2: -0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub noise_levels: Vec<f64>,
    pub realizations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            noise_levels: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            realizations: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Lse,
    Rfda,
}

/// Everything a run needs; every field has a default.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ProblemKind,
    pub solver: SolverConfig,
    pub lse: LseConfig,
    pub rfda: RfdaConfig,
    pub example1: Example1Config,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Lse,
            solver: SolverConfig::default(),
            lse: LseConfig::default(),
            rfda: RfdaConfig::default(),
            example1: Example1Config::default(),
            bench: BenchConfig::default(),
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> SfpError {
    SfpError::Config(format!("`{key}`: expected {what}, got `{value}`"))
}

fn real(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => v.parse::<f64>().ok().filter(|x| !x.is_nan()).ok_or_else(|| bad(key, v, "a number")),
    }
}

fn opt_real(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        real(key, v).map(Some)
    }
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad(key, v, "a nonnegative integer"))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|c| real(key, c.trim())).collect()
}

fn opt_list(key: &str, v: &str) -> Result<Option<Vec<f64>>> {
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        list(key, v).map(Some)
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    if v.is_empty() || v == "none" {
        None
    } else {
        Some(PathBuf::from(v))
    }
}

fn show_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".into(), |x| x.to_string())
}

fn show_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn show_path(v: &Option<PathBuf>) -> String {
    v.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string())
}

impl RunConfig {
    /// Applies one `section.key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let s = &mut self.solver;
        let l = &mut self.lse;
        let f = &mut self.rfda;
        match key {
            "problem.kind" => {
                self.kind = match v {
                    "lse" => ProblemKind::Lse,
                    "rfda" => ProblemKind::Rfda,
                    _ => return Err(bad(key, v, "`lse` or `rfda`")),
                }
            }
            "solver.steps" => s.steps = count(key, v)?,
            "solver.eta0" => s.eta0 = real(key, v)?,
            "solver.schedule" => s.schedule = v.parse().map_err(|_| bad(key, v, "`constant` or `inv-sqrt`"))?,
            "solver.cells" => s.cells = count(key, v)?,
            "solver.rule" => s.rule = v.parse().map_err(|_| bad(key, v, "`midpoint` or `gauss5`"))?,
            "solver.acceptance" => {
                s.acceptance = match v {
                    "live" => AcceptanceDelta::Live,
                    _ => AcceptanceDelta::Fixed(real(key, v)?),
                }
            }
            "solver.early_stop_tol" => s.early_stop_tol = opt_real(key, v)?,
            "solver.max_backtracks" => s.max_backtracks = count(key, v)?,
            "solver.mode" => {
                s.mode = match v {
                    "approximate" => SolverMode::Approximate,
                    "stochastic" => SolverMode::Stochastic,
                    _ => return Err(bad(key, v, "`approximate` or `stochastic`")),
                }
            }
            "solver.mc_batch" => s.mc_batch = count(key, v)?,
            "solver.output_grid" => s.output_grid = count(key, v)?,
            "solver.seed" => s.seed = v.parse().map_err(|_| bad(key, v, "an unsigned integer"))?,
            "lse.b" => l.b = real(key, v)?,
            "lse.lambda" => l.lambda = real(key, v)?,
            "lse.epsilon" => l.epsilon = opt_real(key, v)?,
            "lse.r" => l.r = real(key, v)?,
            "lse.center" => {
                l.center = match v {
                    "centroid" => CenterRule::Centroid,
                    "midpoint" => CenterRule::Midpoint,
                    _ => return Err(bad(key, v, "`centroid` or `midpoint`")),
                }
            }
            "lse.input" => l.input = opt_path(v),
            "lse.t0" => l.t0 = v.parse().map_err(|_| bad(key, v, "an integer"))?,
            "lse.t1" => l.t1 = v.parse().map_err(|_| bad(key, v, "an integer"))?,
            "lse.k" => l.k = count(key, v)?,
            "lse.min_spacing" => l.min_spacing = opt_real(key, v)?,
            "lse.amp_min" => l.amp_min = real(key, v)?,
            "lse.amp_max" => l.amp_max = real(key, v)?,
            "lse.noise_var" => l.noise_var = real(key, v)?,
            "lse.freqs" => l.freqs = opt_list(key, v)?,
            "lse.amps" => l.amps = opt_list(key, v)?,
            "rfda.lambda" => f.lambda = real(key, v)?,
            "rfda.r" => f.r = real(key, v)?,
            "rfda.eps_tilde" => f.eps_tilde = opt_real(key, v)?,
            "rfda.eps_per_sample" => f.eps_per_sample = real(key, v)?,
            "rfda.train" => f.train = opt_path(v),
            "rfda.test" => f.test = opt_path(v),
            "rfda.n_train" => f.n_train = count(key, v)?,
            "rfda.n_test" => f.n_test = count(key, v)?,
            "rfda.knots" => f.knots = count(key, v)?,
            "rfda.noise" => f.noise = real(key, v)?,
            "rfda.corrupt_fraction" => f.corrupt_fraction = real(key, v)?,
            "rfda.corrupt_magnitude" => f.corrupt_magnitude = real(key, v)?,
            "rfda.eta0" => f.eta0 = real(key, v)?,
            "example1.gamma" => self.example1.gamma = real(key, v)?,
            "example1.y1" => self.example1.y1 = real(key, v)?,
            "example1.y2" => self.example1.y2 = real(key, v)?,
            "bench.noise_levels" => self.bench.noise_levels = list(key, v)?,
            "bench.realizations" => self.bench.realizations = count(key, v)?,
            _ => return Err(SfpError::UnknownConfigKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| SfpError::Config(format!("override `{assignment}` is not of the form key=value")))?;
        self.set(k.trim(), v)
    }

    /// Parses `text` on top of the defaults; `origin` names the source in errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge(text, origin)?;
        Ok(cfg)
    }

    /// Parses `text` on top of the current values.
    pub fn merge(&mut self, text: &str, origin: &Path) -> Result<()> {
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let located = |e: SfpError| SfpError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(located(SfpError::Config(format!("expected `key = value`, got `{line}`"))));
            };
            let k = k.trim();
            let key = if k.contains('.') || section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            self.set(&key, v).map_err(located)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SfpError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Serializes every field; parsing the output reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let s = &self.solver;
        let l = &self.lse;
        let f = &self.rfda;
        let mut o = String::new();
        let kind = match self.kind {
            ProblemKind::Lse => "lse",
            ProblemKind::Rfda => "rfda",
        };
        let _ = writeln!(o, "[problem]\nkind = {kind}\n");
        let _ = writeln!(o, "[solver]");
        let _ = writeln!(o, "steps = {}", s.steps);
        let _ = writeln!(o, "eta0 = {}", s.eta0);
        let _ = writeln!(o, "schedule = {}", s.schedule);
        let _ = writeln!(o, "cells = {}", s.cells);
        let _ = writeln!(o, "rule = {}", s.rule);
        let acceptance = match s.acceptance {
            AcceptanceDelta::Live => "live".to_string(),
            AcceptanceDelta::Fixed(d) => d.to_string(),
        };
        let _ = writeln!(o, "acceptance = {acceptance}");
        let _ = writeln!(o, "early_stop_tol = {}", s.early_stop_tol.map_or_else(|| "none".into(), |x| x.to_string()));
        let _ = writeln!(o, "max_backtracks = {}", s.max_backtracks);
        let mode = match s.mode {
            SolverMode::Approximate => "approximate",
            SolverMode::Stochastic => "stochastic",
        };
        let _ = writeln!(o, "mode = {mode}");
        let _ = writeln!(o, "mc_batch = {}", s.mc_batch);
        let _ = writeln!(o, "output_grid = {}", s.output_grid);
        let _ = writeln!(o, "seed = {}\n", s.seed);
        let _ = writeln!(o, "[lse]");
        let _ = writeln!(o, "b = {}", l.b);
        let _ = writeln!(o, "lambda = {}", l.lambda);
        let _ = writeln!(o, "epsilon = {}", show_opt(l.epsilon));
        let _ = writeln!(o, "r = {}", l.r);
        let center = match l.center {
            CenterRule::Centroid => "centroid",
            CenterRule::Midpoint => "midpoint",
        };
        let _ = writeln!(o, "center = {center}");
        let _ = writeln!(o, "input = {}", show_path(&l.input));
        let _ = writeln!(o, "t0 = {}", l.t0);
        let _ = writeln!(o, "t1 = {}", l.t1);
        let _ = writeln!(o, "k = {}", l.k);
        let _ = writeln!(o, "min_spacing = {}", show_opt(l.min_spacing));
        let _ = writeln!(o, "amp_min = {}", l.amp_min);
        let _ = writeln!(o, "amp_max = {}", l.amp_max);
        let _ = writeln!(o, "noise_var = {}", l.noise_var);
        let _ = writeln!(o, "freqs = {}", l.freqs.as_deref().map_or_else(|| "auto".into(), show_list));
        let _ = writeln!(o, "amps = {}\n", l.amps.as_deref().map_or_else(|| "auto".into(), show_list));
        let _ = writeln!(o, "[rfda]");
        let _ = writeln!(o, "lambda = {}", f.lambda);
        let _ = writeln!(o, "r = {}", f.r);
        let _ = writeln!(o, "eps_tilde = {}", show_opt(f.eps_tilde));
        let _ = writeln!(o, "eps_per_sample = {}", f.eps_per_sample);
        let _ = writeln!(o, "train = {}", show_path(&f.train));
        let _ = writeln!(o, "test = {}", show_path(&f.test));
        let _ = writeln!(o, "n_train = {}", f.n_train);
        let _ = writeln!(o, "n_test = {}", f.n_test);
        let _ = writeln!(o, "knots = {}", f.knots);
        let _ = writeln!(o, "noise = {}", f.noise);
        let _ = writeln!(o, "corrupt_fraction = {}", f.corrupt_fraction);
        let _ = writeln!(o, "corrupt_magnitude = {}", f.corrupt_magnitude);
        let _ = writeln!(o, "eta0 = {}\n", f.eta0);
        let _ = writeln!(o, "[example1]");
        let _ = writeln!(o, "gamma = {}", self.example1.gamma);
        let _ = writeln!(o, "y1 = {}", self.example1.y1);
        let _ = writeln!(o, "y2 = {}\n", self.example1.y2);
        let _ = writeln!(o, "[bench]");
        let _ = writeln!(o, "noise_levels = {}", show_list(&self.bench.noise_levels));
        let _ = writeln!(o, "realizations = {}", self.bench.realizations);
        o
    }
}
