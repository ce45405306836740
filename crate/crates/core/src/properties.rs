//! Invariant suites run on the built-in instances.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::desk::{self, example1, example1_config, example1_l1, DeskInstance, Example1Constraint};
use crate::domain::{total_measure, ComplexVec, DualPoint};
use crate::dual::{
    ascend, check_l0_l1_scaling, error_bound_constant, eval_dual, solve_approximate, stochastic_supergradient, supergradients,
    AcceptanceDelta, PrimalSolution, SolveReport,
};
use crate::error::{Result, SfpError};
use crate::quadrature::{build_composite, McSampler, QuadratureScheme, Rule};
use crate::spectral::build_lse;

/// Outcome of one property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for PropertyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Duality,
    Scaling,
    Mc,
    Perturbation,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Duality, Suite::Scaling, Suite::Mc, Suite::Perturbation];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Duality => "duality",
            Suite::Scaling => "scaling",
            Suite::Mc => "mc",
            Suite::Perturbation => "perturbation",
        }
    }

    pub fn run(self) -> Result<Vec<PropertyCheck>> {
        match self {
            Suite::Duality => duality_suite(),
            Suite::Scaling => scaling_suite(),
            Suite::Mc => mc_suite(),
            Suite::Perturbation => perturbation_suite().map(|p| p.checks),
        }
    }
}

impl FromStr for Suite {
    type Err = SfpError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SfpError::InvalidArgument(format!("unknown suite `{s}` (duality, scaling, mc, perturbation)")))
    }
}

/// Solves a desk instance on its Gauss–Legendre scheme.
pub fn solve_desk(desk: &DeskInstance) -> Result<(PrimalSolution, SolveReport, QuadratureScheme)> {
    let scheme = build_composite(&desk.problem.domain, desk.cells, Rule::Gauss5)?;
    let (sol, report) = solve_approximate(&desk.problem, &scheme, &desk.config)?;
    Ok((sol, report, scheme))
}

/// `|P(X*) − d_best| ≤ 2δ + 1e−3` with `δ ≤ 1e−4` on every desk instance.
pub fn duality_suite() -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    for desk in desk::all()? {
        let start = Instant::now();
        let (sol, report, _) = solve_desk(&desk)?;
        let gap = report.final_gap_estimate;
        let delta = report.delta_used;
        out.push(PropertyCheck::new(
            format!("strong-duality/{}", desk.name),
            gap <= 2.0 * delta + 1e-3 && delta <= 1e-4,
            format!(
                "P = {:.6}, d_best = {:.6}, gap = {gap:.3e}, delta = {delta:.3e}, {:.1} s",
                sol.objective_value,
                report.best_value(),
                start.elapsed().as_secs_f64()
            ),
        ));
    }
    Ok(out)
}

/// Solved `P_0` and `P_1` optima of the two-cell instance on 64 Gauss–Legendre cells.
pub fn example1_optima(gamma: f64, y: [f64; 2]) -> Result<(PrimalSolution, SolveReport, PrimalSolution, SolveReport)> {
    let p0 = example1(gamma, y, Example1Constraint::Equality)?;
    let p1 = example1_l1(gamma, y, Example1Constraint::Equality)?;
    let scheme = build_composite(&p0.domain, 64, Rule::Gauss5)?;
    let (s0, r0) = solve_approximate(&p0, &scheme, &example1_config())?;
    let (s1, r1) = solve_approximate(&p1, &scheme, &example1_config())?;
    Ok((s0, r0, s1, r1))
}

/// Largest scaling residual over `n` random dual points, and how many of them
/// stayed within `2δ`.
pub fn scaling_residuals(gamma: f64, y: [f64; 2], n: usize, seed: u64) -> Result<(f64, usize)> {
    let problem = example1(gamma, y, Example1Constraint::Equality)?;
    let scheme = build_composite(&problem.domain, 64, Rule::Gauss5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut within = 0;
    for _ in 0..n {
        let mu = ComplexVec::from_real((0..problem.p()).map(|_| rng.random_range(-3.0..3.0)).collect());
        let point = DualPoint::new(mu, vec![0.0; problem.m()])?;
        let (res, delta) = check_l0_l1_scaling(&problem, &point, &scheme)?;
        worst = worst.max(res);
        if res <= 2.0 * delta {
            within += 1;
        }
    }
    Ok((worst, within))
}

/// `P_0* = P_1*/Γ`, the scaling identity on 100 random points, and the shape
/// of the recovered `P_0` solution on the two-cell instance.
pub fn scaling_suite() -> Result<Vec<PropertyCheck>> {
    let (gamma, y): (f64, [f64; 2]) = (1.0, [0.3, -0.2]);
    let expected = y[0].abs() + y[1].abs();
    let (s0, r0, s1, r1) = example1_optima(gamma, y)?;
    let (d0, d1) = (r0.best_value(), r1.best_value());
    let mut out = vec![
        PropertyCheck::new(
            "example1/p0-optimum",
            (d0 - expected / gamma).abs() <= 1e-3 && (s0.objective_value - expected / gamma).abs() <= 1e-3,
            format!("d_best = {d0:.6}, P = {:.6}, expected {:.6}", s0.objective_value, expected / gamma),
        ),
        PropertyCheck::new(
            "example1/p1-optimum",
            (d1 - expected).abs() <= 1e-3 && (s1.objective_value - expected).abs() <= 1e-3,
            format!("d_best = {d1:.6}, P = {:.6}, expected {expected:.6}", s1.objective_value),
        ),
    ];
    let (worst, within) = scaling_residuals(gamma, y, 100, 17)?;
    out.push(PropertyCheck::new(
        "example1/scaling-identity",
        within == 100,
        format!("{within}/100 points within 2 delta, worst residual {worst:.3e}"),
    ));
    let measure = total_measure(&s0.support);
    let off = s0
        .grid
        .iter()
        .filter(|(b, x)| s0.in_support(*b) && (x.abs() - gamma).abs() > 1e-9)
        .count();
    out.push(PropertyCheck::new(
        "example1/support",
        (measure - expected / gamma).abs() <= 1e-3 && off == 0,
        format!("support measure {measure:.6}, expected {:.6}, {off} grid points off +/-gamma", expected / gamma),
    ));
    Ok(out)
}

/// Dual points on the linear desk instance at which the estimator is checked.
pub fn mc_points(desk: &DeskInstance) -> Result<Vec<DualPoint>> {
    let p = desk.problem.p();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..5)
        .map(|_| {
            let mu = ComplexVec::from_real((0..p).map(|_| rng.random_range(-1.5..1.5)).collect());
            DualPoint::new(mu, vec![rng.random_range(0.2..1.5)])
        })
        .collect()
}

/// Per coordinate: `(mean − exact, standard error)` of `runs` stochastic
/// supergradients with `batch` nodes each.
pub fn mc_deviation(desk: &DeskInstance, point: &DualPoint, runs: u64, batch: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let problem = &desk.problem;
    let scheme = build_composite(&problem.domain, desk.cells, Rule::Gauss5)?;
    let eval = eval_dual(problem, point, &scheme)?.finite()?;
    let (exact, _) = supergradients(problem, &eval);
    let sampler = McSampler::new(problem.domain.clone(), batch, seed)?;
    let p = problem.p();
    let mut sum = vec![0.0; p];
    let mut sum_sq = vec![0.0; p];
    for k in 0..runs {
        let (g, _) = stochastic_supergradient(problem, point, &sampler.nodes(k))?.ok_or(SfpError::OutsideDualDomain)?;
        for i in 0..p {
            sum[i] += g.re()[i];
            sum_sq[i] += g.re()[i] * g.re()[i];
        }
    }
    let n = runs as f64;
    Ok((0..p)
        .map(|i| {
            let mean = sum[i] / n;
            let var = (sum_sq[i] / n - mean * mean).max(0.0) * n / (n - 1.0);
            (mean - exact.re()[i], (var / n).sqrt())
        })
        .collect())
}

/// Mean of 1000 Monte Carlo supergradients (`N = 8`) within 4 standard errors
/// of the quadrature supergradient at 5 points.
pub fn mc_suite() -> Result<Vec<PropertyCheck>> {
    let desk = desk::linear_lse()?;
    let mut out = Vec::new();
    for (k, point) in mc_points(&desk)?.iter().enumerate() {
        let dev = mc_deviation(&desk, point, 1000, 8, 100 + k as u64)?;
        let worst = dev.iter().map(|(d, se)| d.abs() / se.max(1e-300)).fold(0.0, f64::max);
        let ok = dev.iter().all(|(d, se)| d.abs() <= 4.0 * se + 1e-12);
        out.push(PropertyCheck::new(
            format!("mc-unbiased/point-{k}"),
            ok,
            format!("largest deviation {worst:.2} standard errors"),
        ));
    }
    Ok(out)
}

/// One resolution of the perturbation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRow {
    pub target: f64,
    pub cells: usize,
    pub delta: f64,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub reference: f64,
    pub constant: f64,
    pub rows: Vec<PerturbationRow>,
    pub slope: f64,
    pub checks: Vec<PropertyCheck>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Midpoint cell count whose error estimate at `point` is closest to `target` on a log scale.
fn cells_for_delta(desk: &DeskInstance, point: &DualPoint, target: f64) -> Result<usize> {
    let delta_at = |cells: usize| -> Result<f64> {
        let scheme = build_composite(&desk.problem.domain, cells, Rule::Midpoint)?;
        Ok(eval_dual(&desk.problem, point, &scheme)?.finite()?.delta)
    };
    let (mut lo, mut hi) = (2usize, 2usize);
    while delta_at(hi)? > target {
        lo = hi;
        hi *= 2;
        if hi > 1 << 20 {
            return Err(SfpError::InvalidArgument(format!("no resolution reaches delta {target}")));
        }
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if delta_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (dl, dh) = (delta_at(lo)?, delta_at(hi)?);
    Ok(if (dl / target).ln().abs() < (dh / target).ln().abs() { lo } else { hi })
}

/// Solves the linear desk instance with midpoint quadrature at resolutions
/// whose error estimate is near `1e−2, 1e−3, 1e−4`, and compares the optima
/// against a fine Gauss–Legendre reference.
pub fn perturbation_suite() -> Result<PerturbationReport> {
    let desk = desk::linear_lse()?;
    let mut config = desk.config.clone();
    config.acceptance = AcceptanceDelta::Fixed(0.0);
    let fine = build_composite(&desk.problem.domain, 1024, Rule::Gauss5)?;
    let (best_point, best, _) = ascend(&desk.problem, &fine, &config)?;
    let p_star = best.value;

    // Slater point: the optimum of the same instance with half the noise budget.
    let (y, times, epsilon) = desk::linear_lse_data()?;
    let tight = build_lse(&y, &times, 1.0, desk.problem.lambda, 0.5 * epsilon, f64::INFINITY)?;
    let (slater, _) = solve_approximate(&tight, &fine, &config)?;
    let f0_bar = slater.objective_value - desk.problem.lambda * slater.l0;
    let constant = error_bound_constant(&desk.problem, 1.0, 0.5 * epsilon, f0_bar)?;

    let mut rows = Vec::new();
    for target in [1e-2, 1e-3, 1e-4] {
        let cells = cells_for_delta(&desk, &best_point, target)?;
        let scheme = build_composite(&desk.problem.domain, cells, Rule::Midpoint)?;
        let (_, report) = solve_approximate(&desk.problem, &scheme, &config)?;
        let value = report.best_value();
        let delta = eval_dual(&desk.problem, &best_point, &scheme)?.finite()?.delta;
        rows.push(PerturbationRow {
            target,
            cells,
            delta,
            value,
            error: (value - p_star).abs(),
        });
    }
    let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.error.max(f64::MIN_POSITIVE)).collect();
    let slope = loglog_slope(&deltas, &errors);
    let mut checks = vec![PropertyCheck::new(
        "perturbation/slope",
        (0.7..=1.3).contains(&slope),
        format!(
            "slope {slope:.3} over {}",
            rows.iter()
                .map(|r| format!("(delta {:.2e}, error {:.2e}, {} cells)", r.delta, r.error, r.cells))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )];
    for r in &rows {
        checks.push(PropertyCheck::new(
            format!("perturbation/bound-{:.0e}", r.target),
            r.error <= constant * r.delta * 1.1,
            format!("error {:.3e} <= c delta = {:.3e} (c = {constant:.3e})", r.error, constant * r.delta),
        ));
    }
    Ok(PerturbationReport {
        reference: p_star,
        constant,
        rows,
        slope,
        checks,
    })
}
