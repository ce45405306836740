//! Command line front end.
//!
//! Exit codes: 0 success, 1 usage, configuration or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::desk::{example1, example1_config, example1_l1, Example1Constraint};
use crate::dual::{solve_approximate, SolveReport};
use crate::error::{Result, SfpError};
use crate::experiments::{derive_seed, lse_samples, rfda_compare, rfda_synthetic, run_lse, score_lse, ClassifierRun};
use crate::fda::FunctionalSample;
use crate::io;
use crate::properties::Suite;
use crate::quadrature::build_composite;

#[derive(Debug, Parser)]
#[command(name = "sfp", version, about = "Sparse functional programs solved through their Lagrangian duals")]
pub struct Cli {
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override one key, e.g. `--set solver.steps=2000`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Output directory.
    #[arg(long, default_value = "sfp-out", global = true)]
    pub out: PathBuf,

    /// Seed for every random draw; overrides `solver.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one line spectral problem from `lse.input` or a synthetic scene.
    SolveLse,
    /// Train plain and robust functional classifiers and score them.
    SolveRfda,
    /// Solve both forms of the two-cell instance and compare their optima.
    DemoExample1 {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y2: Option<f64>,
    },
    /// Line spectral recovery over the `bench.noise_levels` sweep.
    BenchLse,
    /// Classifier accuracy over the `bench.noise_levels` sweep of series noise.
    BenchRfda,
    /// Run an invariant suite: duality, scaling, mc, perturbation or all.
    CheckProperties {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<SfpError> for Failure {
    fn from(e: SfpError) -> Self {
        let code = match e {
            SfpError::NonFiniteObjective { .. }
            | SfpError::NonFiniteIntegrand { .. }
            | SfpError::OutsideDualDomain
            | SfpError::SaturationViolated { .. }
            | SfpError::NonFiniteConstraint { .. }
            | SfpError::NoAcceptedIterate => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Progress goes to `stdout`, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Builds the effective configuration: defaults, then the file, then the
/// overrides, then `--seed`.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = cli.seed {
        cfg.solver.seed = s;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> std::result::Result<i32, Failure> {
    let cfg = effective_config(cli)?;
    if !matches!(cli.command, Command::CheckProperties { .. }) {
        io::write_text(&cli.out.join("config.txt"), &cfg.to_text())?;
    }
    match &cli.command {
        Command::SolveLse => solve_lse(&cfg, &cli.out),
        Command::SolveRfda => solve_rfda(&cfg, &cli.out),
        Command::DemoExample1 { gamma, y1, y2 } => {
            let g = gamma.unwrap_or(cfg.example1.gamma);
            let y = [y1.unwrap_or(cfg.example1.y1), y2.unwrap_or(cfg.example1.y2)];
            demo_example1(g, y, &cli.out)
        }
        Command::BenchLse => bench_lse(&cfg, &cli.out),
        Command::BenchRfda => bench_rfda(&cfg, &cli.out),
        Command::CheckProperties { suite } => check_properties(suite),
    }
}

fn status(report: &SolveReport) -> i32 {
    if report.backtrack_exhausted {
        2
    } else {
        0
    }
}

fn solve_lse(cfg: &RunConfig, out: &Path) -> std::result::Result<i32, Failure> {
    let seed = cfg.solver.seed;
    let (times, y, scene) = match &cfg.lse.input {
        Some(path) => {
            let (t, y) = io::load_samples_csv(path)?;
            (t, y, None)
        }
        None => {
            let (scene, y) = lse_samples(&cfg.lse, seed)?;
            io::write_samples_csv(&out.join("samples.csv"), &scene.times, &y)?;
            let rows: Vec<Vec<f64>> = scene.freqs.iter().zip(&scene.amps).map(|(f, a)| vec![*f, *a]).collect();
            io::write_table_csv(&out.join("truth.csv"), &["f", "a"], &rows)?;
            (scene.times.clone(), y, Some(scene))
        }
    };
    let run = run_lse(&cfg.lse, &cfg.solver, &y, &times)?;
    io::write_solution_csv(&out.join("solution.csv"), &run.solution, cfg.solver.output_grid)?;
    io::write_components_csv(&out.join("components.csv"), &run.components)?;
    io::write_trace_csv(&out.join("trace.csv"), &run.report)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "primal,{}", run.solution.objective_value);
    let _ = writeln!(summary, "dual_best,{}", run.report.best_value());
    let _ = writeln!(summary, "gap,{}", run.report.final_gap_estimate);
    let _ = writeln!(summary, "delta,{}", run.report.delta_used);
    let _ = writeln!(summary, "l0,{}", run.solution.l0);
    let _ = writeln!(summary, "components,{}", run.components.len());
    let _ = writeln!(summary, "reconstruction_mse,{}", run.reconstruction.mse);
    let _ = writeln!(summary, "reconstruction_used,{}", run.reconstruction.used);
    if let Some(scene) = &scene {
        let s = score_lse(scene, &run.components);
        let _ = writeln!(summary, "matched,{}", s.matched);
    }
    io::write_text(&out.join("summary.csv"), &summary)?;
    println!(
        "P = {:.6}  d_best = {:.6}  gap = {:.3e}  components = {}  mse = {:.4}",
        run.solution.objective_value,
        run.report.best_value(),
        run.report.final_gap_estimate,
        run.components.len(),
        run.reconstruction.mse
    );
    for c in run.components.iter().take(cfg.lse.k.max(1)) {
        println!("  f = {:.5}  a = {:.4}", c.f_hat, c.a_hat);
    }
    if run.reconstruction.short_count {
        println!("  fewer than {} components were recovered", cfg.lse.k);
    }
    Ok(status(&run.report))
}

fn rfda_data(cfg: &RunConfig) -> Result<(Vec<FunctionalSample>, Vec<FunctionalSample>)> {
    match (&cfg.rfda.train, &cfg.rfda.test) {
        (Some(tr), Some(te)) => Ok((io::load_ucr_tsv(tr)?, io::load_ucr_tsv(te)?)),
        (None, None) => rfda_synthetic(&cfg.rfda, cfg.solver.seed),
        _ => Err(SfpError::Config("rfda.train and rfda.test must be given together".into())),
    }
}

fn write_classifier(out: &Path, name: &str, run: &ClassifierRun) -> Result<()> {
    io::write_classifier_csv(&out.join(format!("weights_{name}.csv")), &run.classifier, &run.scheme)?;
    io::write_trace_csv(&out.join(format!("trace_{name}.csv")), &run.report)?;
    for (tag, e) in [("clean", &run.clean), ("corrupted", &run.corrupted)] {
        if let Some(roc) = &e.roc {
            let rows: Vec<Vec<f64>> = roc.iter().map(|(f, t)| vec![*f, *t]).collect();
            io::write_table_csv(&out.join(format!("roc_{name}_{tag}.csv")), &["fpr", "tpr"], &rows)?;
        }
    }
    Ok(())
}

fn solve_rfda(cfg: &RunConfig, out: &Path) -> std::result::Result<i32, Failure> {
    let (train, test) = rfda_data(cfg)?;
    let cmp = rfda_compare(&cfg.rfda, &cfg.solver, &train, &test, cfg.solver.seed)?;
    write_classifier(out, "plain", &cmp.plain)?;
    write_classifier(out, "robust", &cmp.robust)?;
    let mut rows = Vec::new();
    for (name, run) in [("plain", &cmp.plain), ("robust", &cmp.robust)] {
        println!(
            "{name:>6}: clean accuracy {:.3} (AUC {}), corrupted {:.3}, gap {:.3e}",
            run.clean.accuracy,
            run.clean.auc.map_or_else(|| "n/a".into(), |a| format!("{a:.3}")),
            run.corrupted.accuracy,
            run.report.final_gap_estimate
        );
        rows.push(vec![
            run.clean.accuracy,
            run.corrupted.accuracy,
            run.clean.auc.unwrap_or(f64::NAN),
            run.corrupted.auc.unwrap_or(f64::NAN),
            run.report.final_gap_estimate,
        ]);
    }
    io::write_table_csv(
        &out.join("accuracy.csv"),
        &["clean_accuracy", "corrupted_accuracy", "clean_auc", "corrupted_auc", "gap"],
        &rows,
    )?;
    Ok(status(&cmp.plain.report).max(status(&cmp.robust.report)))
}

fn demo_example1(gamma: f64, y: [f64; 2], out: &Path) -> std::result::Result<i32, Failure> {
    let p0 = example1(gamma, y, Example1Constraint::Equality)?;
    let p1 = example1_l1(gamma, y, Example1Constraint::Equality)?;
    let scheme = build_composite(&p0.domain, 64, crate::quadrature::Rule::Gauss5)?;
    let cfg = example1_config();
    let (s0, r0) = solve_approximate(&p0, &scheme, &cfg)?;
    let (s1, r1) = solve_approximate(&p1, &scheme, &cfg)?;
    let (d0, d1) = (r0.best_value(), r1.best_value());
    let residual = (d0 - d1 / gamma).abs();
    let delta = r0.delta_used.max(r1.delta_used);
    io::write_solution_csv(&out.join("x_p0.csv"), &s0, cfg.output_grid)?;
    io::write_solution_csv(&out.join("x_p1.csv"), &s1, cfg.output_grid)?;
    println!("P0* = {d0:.6}  (recovered P = {:.6}, support measure {:.6})", s0.objective_value, s0.l0);
    println!("P1* = {d1:.6}  (recovered P = {:.6})", s1.objective_value);
    println!("|P0* - P1*/gamma| = {residual:.3e}  (2 delta = {:.3e})", 2.0 * delta);
    Ok(status(&r0).max(status(&r1)))
}

fn bench_lse(cfg: &RunConfig, out: &Path) -> std::result::Result<i32, Failure> {
    let mut rows = Vec::new();
    let mut code = 0;
    for (i, noise) in cfg.bench.noise_levels.iter().enumerate() {
        for j in 0..cfg.bench.realizations {
            let mut c = cfg.clone();
            c.lse.noise_var = *noise;
            let seed = derive_seed(cfg.solver.seed, (i * 1000 + j) as u64);
            let (scene, y) = lse_samples(&c.lse, seed)?;
            let run = run_lse(&c.lse, &c.solver, &y, &scene.times)?;
            code = code.max(status(&run.report));
            let s = score_lse(&scene, &run.components);
            io::write_components_csv(&out.join(format!("components_noise{i}_run{j}.csv")), &run.components)?;
            let mean_amp_err = {
                let errs: Vec<f64> = s.amp_errors.iter().flatten().copied().collect();
                if errs.is_empty() {
                    f64::NAN
                } else {
                    errs.iter().sum::<f64>() / errs.len() as f64
                }
            };
            println!(
                "noise {noise}: run {j}: {} components, {}/{} matched, mse {:.4}",
                s.count,
                s.matched,
                scene.freqs.len(),
                run.reconstruction.mse
            );
            rows.push(vec![
                *noise,
                j as f64,
                seed as f64,
                s.count as f64,
                s.matched as f64,
                mean_amp_err,
                run.reconstruction.mse,
                run.report.final_gap_estimate,
            ]);
        }
    }
    io::write_table_csv(
        &out.join("bench_lse.csv"),
        &["noise_var", "run", "seed", "count", "matched", "mean_amp_rel_error", "mse", "gap"],
        &rows,
    )?;
    Ok(code)
}

fn bench_rfda(cfg: &RunConfig, out: &Path) -> std::result::Result<i32, Failure> {
    let mut rows = Vec::new();
    let mut code = 0;
    for (i, noise) in cfg.bench.noise_levels.iter().enumerate() {
        for j in 0..cfg.bench.realizations {
            let mut c = cfg.clone();
            c.rfda.noise = *noise;
            let seed = derive_seed(cfg.solver.seed, (i * 1000 + j) as u64);
            let (train, test) = rfda_synthetic(&c.rfda, seed)?;
            let cmp = rfda_compare(&c.rfda, &c.solver, &train, &test, seed)?;
            code = code.max(status(&cmp.plain.report)).max(status(&cmp.robust.report));
            println!(
                "noise {noise}: run {j}: plain {:.3} -> {:.3}, robust {:.3} -> {:.3}",
                cmp.plain.clean.accuracy,
                cmp.plain.corrupted.accuracy,
                cmp.robust.clean.accuracy,
                cmp.robust.corrupted.accuracy
            );
            rows.push(vec![
                *noise,
                j as f64,
                seed as f64,
                cmp.plain.clean.accuracy,
                cmp.plain.corrupted.accuracy,
                cmp.robust.clean.accuracy,
                cmp.robust.corrupted.accuracy,
            ]);
        }
    }
    io::write_table_csv(
        &out.join("bench_rfda.csv"),
        &["noise", "run", "seed", "plain_clean", "plain_corrupted", "robust_clean", "robust_corrupted"],
        &rows,
    )?;
    Ok(code)
}

fn check_properties(suite: &str) -> std::result::Result<i32, Failure> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse()?]
    };
    let mut all_pass = true;
    for s in suites {
        println!("[{}]", s.name());
        match s.run() {
            Ok(checks) => {
                for c in checks {
                    all_pass &= c.passed;
                    println!("{c}");
                }
            }
            Err(e) => {
                all_pass = false;
                println!("FAIL {}: {e}", s.name());
            }
        }
    }
    Ok(if all_pass { 0 } else { 2 })
}
