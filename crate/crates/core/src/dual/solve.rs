//! Supergradient ascent loops.

use crate::domain::{ComplexVec, DualPoint, DzOutcome, SfpProblem};
use crate::error::{Result, SfpError};
use crate::quadrature::{McSampler, QuadratureScheme};

use super::recover::{recover_primal, PrimalSolution};
use super::{check_point, eval_dual, point_data, supergradients, DualEvaluation, DualOutcome, Threshold};

/// Step-size rule `η_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSchedule {
    Constant,
    /// `η_t = η_0 / √t`.
    InvSqrt,
}

impl StepSchedule {
    pub fn eta(self, eta0: f64, t: usize) -> f64 {
        match self {
            StepSchedule::Constant => eta0,
            StepSchedule::InvSqrt => eta0 / (t.max(1) as f64).sqrt(),
        }
    }
}

impl std::str::FromStr for StepSchedule {
    type Err = SfpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(StepSchedule::Constant),
            "inv-sqrt" | "inv_sqrt" => Ok(StepSchedule::InvSqrt),
            other => Err(SfpError::Config(format!(
                "unknown step schedule `{other}` (expected constant or inv-sqrt)"
            ))),
        }
    }
}

impl std::fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepSchedule::Constant => "constant",
            StepSchedule::InvSqrt => "inv-sqrt",
        })
    }
}

/// Integration error used by the `2δ` acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcceptanceDelta {
    /// `max(scheme.delta, δ of the current evaluation)`.
    Live,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    pub steps: usize,
    pub eta0: f64,
    pub schedule: StepSchedule,
    /// Stop once `‖p_μ‖ + ‖p_ν‖ ≤ tol` for 10 consecutive steps.
    pub early_stop_tol: Option<f64>,
    pub max_backtracks: usize,
    pub acceptance: AcceptanceDelta,
    pub output_grid: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            eta0: 0.1,
            schedule: StepSchedule::InvSqrt,
            early_stop_tol: None,
            max_backtracks: 30,
            acceptance: AcceptanceDelta::Live,
            output_grid: 1001,
        }
    }
}

impl AscentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(SfpError::InvalidArgument(format!(
                "initial step must be positive, got {}",
                self.eta0
            )));
        }
        if self.output_grid < 2 {
            return Err(SfpError::InvalidArgument("output grid needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// Per-iteration record of an ascent run. Index `t = 0` is the initial point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub dual_trace: Vec<f64>,
    pub eta_trace: Vec<f64>,
    pub support_trace: Vec<f64>,
    /// `|P(X_t) − d_t|` of the thresholded minimizer at each iterate.
    pub gap_trace: Vec<f64>,
    pub accepted_iterations: Vec<usize>,
    pub best_t: usize,
    /// Iterate at which the returned primal solution was extracted.
    pub solution_t: usize,
    /// `|P(X*) − d_best|`.
    pub final_gap_estimate: f64,
    pub delta_used: f64,
    pub wall_iterations: usize,
    pub backtrack_exhausted: bool,
    pub early_stopped: bool,
}

impl SolveReport {
    pub fn best_value(&self) -> f64 {
        self.dual_trace[self.best_t]
    }

    /// Running maximum of the dual trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.dual_trace
            .iter()
            .map(|d| {
                best = best.max(*d);
                best
            })
            .collect()
    }

    fn record(&mut self, eval: &DualEvaluation, eta: f64) {
        let t = self.dual_trace.len();
        self.dual_trace.push(eval.value);
        self.eta_trace.push(eta);
        self.support_trace.push(eval.support_measure);
        self.gap_trace.push((eval.primal_value - eval.value).abs());
        if eval.value > self.dual_trace[self.best_t] {
            self.best_t = t;
        }
    }
}

/// One step with backtracking on leaving the dual domain.
fn step(
    problem: &SfpProblem,
    scheme: &QuadratureScheme,
    point: &DualPoint,
    p_mu: &ComplexVec,
    p_nu: &[f64],
    eta: f64,
    max_backtracks: usize,
) -> Result<Option<(DualPoint, DualEvaluation, f64)>> {
    let mut eta = eta;
    for _ in 0..=max_backtracks {
        let cand = point.stepped(eta, p_mu, p_nu);
        if let DualOutcome::Finite(e) = eval_dual(problem, &cand, scheme)? {
            return Ok(Some((cand, *e, eta)));
        }
        eta *= 0.5;
    }
    Ok(None)
}

fn initial_eval(problem: &SfpProblem, scheme: &QuadratureScheme) -> Result<(DualPoint, DualEvaluation)> {
    let point = problem.initial_point();
    check_point(problem, &point)?;
    let eval = eval_dual(problem, &point, scheme)?.finite()?;
    Ok((point, eval))
}

/// Drives the deterministic ascent; `visit` sees every iterate including `t = 0`.
fn run<V>(problem: &SfpProblem, scheme: &QuadratureScheme, cfg: &AscentConfig, mut visit: V) -> Result<SolveReport>
where
    V: FnMut(usize, &DualEvaluation, &mut SolveReport),
{
    cfg.validate()?;
    let (mut point, mut eval) = initial_eval(problem, scheme)?;
    let mut report = SolveReport::default();
    report.record(&eval, 0.0);
    visit(0, &eval, &mut report);

    let mut small = 0;
    for t in 1..=cfg.steps {
        let (p_mu, p_nu) = supergradients(problem, &eval);
        if let Some(tol) = cfg.early_stop_tol {
            let norm = p_mu.norm() + p_nu.iter().map(|v| v * v).sum::<f64>().sqrt();
            small = if norm <= tol { small + 1 } else { 0 };
            if small >= 10 {
                report.early_stopped = true;
                break;
            }
        }
        let eta = cfg.schedule.eta(cfg.eta0, t);
        match step(problem, scheme, &point, &p_mu, &p_nu, eta, cfg.max_backtracks)? {
            Some((next, next_eval, used)) => {
                point = next;
                eval = next_eval;
                report.record(&eval, used);
                report.wall_iterations = t;
                visit(t, &eval, &mut report);
            }
            None => {
                report.backtrack_exhausted = true;
                break;
            }
        }
    }
    Ok(report)
}

/// Supergradient ascent from the model's initial point; returns the best
/// iterate and its evaluation.
pub fn ascend(
    problem: &SfpProblem,
    scheme: &QuadratureScheme,
    cfg: &AscentConfig,
) -> Result<(DualPoint, DualEvaluation, SolveReport)> {
    let mut best: Option<DualEvaluation> = None;
    let mut report = run(problem, scheme, cfg, |_, eval, _| {
        if best.as_ref().is_none_or(|b| eval.value > b.value) {
            best = Some(eval.clone());
        }
    })?;
    let best = best.expect("initial iterate is always visited");
    report.solution_t = report.best_t;
    report.delta_used = best.delta.max(scheme.delta);
    report.final_gap_estimate = (best.primal_value - best.value).abs();
    Ok((best.point.clone(), best, report))
}

/// Ascent that only replaces the retained primal solution when the dual
/// value improves on the last accepted one by more than `2δ`.
pub fn solve_approximate(
    problem: &SfpProblem,
    scheme: &QuadratureScheme,
    cfg: &AscentConfig,
) -> Result<(PrimalSolution, SolveReport)> {
    let mut accepted: Option<DualEvaluation> = None;
    let mut delta_used = scheme.delta;
    let mut report = run(problem, scheme, cfg, |t, eval, report| {
        let delta = match cfg.acceptance {
            AcceptanceDelta::Live => scheme.delta.max(eval.delta),
            AcceptanceDelta::Fixed(d) => d,
        };
        let take = match &accepted {
            None => true,
            Some(a) => eval.value > a.value + 2.0 * delta,
        };
        if take {
            if t > 0 {
                report.accepted_iterations.push(t);
            }
            delta_used = delta;
            accepted = Some(eval.clone());
        }
    })?;
    let eval = accepted.expect("initial iterate is always accepted");
    report.solution_t = report.accepted_iterations.last().copied().unwrap_or(0);
    report.delta_used = delta_used;
    let sol = recover_primal(problem, &eval, scheme, cfg.output_grid)?;
    report.final_gap_estimate = (sol.objective_value - report.best_value()).abs();
    Ok((sol, report))
}

/// Where the stochastic ascent draws its nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSource {
    /// Fresh uniform draws per step.
    Uniform(McSampler),
    /// The same points every step, weighted `m(Ω)/N`.
    Fixed(Vec<Vec<f64>>),
}

impl NodeSource {
    fn nodes(&self, call_index: u64) -> Vec<Vec<f64>> {
        match self {
            NodeSource::Uniform(s) => s.nodes(call_index),
            NodeSource::Fixed(pts) => pts.clone(),
        }
    }
}

/// `p̂_μ = m(Ω)/N Σ_j F[X_d(β_j), β_j] − z_d` and `p_ν = g(z_d)`.
///
/// Returns `None` when the point lies outside the dual domain.
pub fn stochastic_supergradient(
    problem: &SfpProblem,
    point: &DualPoint,
    nodes: &[Vec<f64>],
) -> Result<Option<(ComplexVec, Vec<f64>)>> {
    check_point(problem, point)?;
    if nodes.is_empty() {
        return Err(SfpError::InvalidArgument("need at least one node".into()));
    }
    let dz = match problem.dz(point)? {
        DzOutcome::Finite(s) => s,
        DzOutcome::Unbounded => return Ok(None),
    };
    let model = problem.model();
    let scale = problem.domain.measure() / nodes.len() as f64;
    let kind = Threshold::L0 { lambda: problem.lambda };
    let mut p_mu = ComplexVec::zeros(problem.p());
    for beta in nodes {
        if beta.len() != 1 {
            return Err(SfpError::UnsupportedDimension(beta.len()));
        }
        let pd = point_data(problem, &point.mu, beta[0], kind)?;
        let x = if pd.margin < 0.0 { pd.sc.x_star } else { 0.0 };
        p_mu.axpy(scale, &model.measure(x, beta));
    }
    p_mu.axpy(-1.0, &dz.z);
    Ok(Some((p_mu, dz.constraint_values)))
}

/// Ascent with Monte Carlo supergradients. Dual values are measured on
/// `reporting`; every iterate whose value improves on its predecessor joins
/// the solution set, and the result is the pointwise average of that set.
pub fn solve_stochastic(
    problem: &SfpProblem,
    nodes: &NodeSource,
    cfg: &AscentConfig,
    reporting: &QuadratureScheme,
) -> Result<(PrimalSolution, SolveReport)> {
    cfg.validate()?;
    let (mut point, eval) = initial_eval(problem, reporting)?;
    let mut report = SolveReport::default();
    report.record(&eval, 0.0);
    let mut prev = eval.value;
    let mut members = Vec::new();
    let mut delta_used = reporting.delta.max(eval.delta);

    for t in 1..=cfg.steps {
        let batch = nodes.nodes(t as u64);
        let Some((p_mu, p_nu)) = stochastic_supergradient(problem, &point, &batch)? else {
            return Err(SfpError::OutsideDualDomain);
        };
        let eta = cfg.schedule.eta(cfg.eta0, t);
        match step(problem, reporting, &point, &p_mu, &p_nu, eta, cfg.max_backtracks)? {
            Some((next, next_eval, used)) => {
                point = next;
                report.record(&next_eval, used);
                report.wall_iterations = t;
                delta_used = delta_used.max(next_eval.delta);
                if next_eval.value > prev {
                    report.accepted_iterations.push(t);
                    members.push(recover_primal(problem, &next_eval, reporting, cfg.output_grid)?);
                }
                prev = next_eval.value;
            }
            None => {
                report.backtrack_exhausted = true;
                break;
            }
        }
    }
    if members.is_empty() {
        return Err(SfpError::NoAcceptedIterate);
    }
    report.solution_t = *report.accepted_iterations.last().expect("nonempty");
    report.delta_used = delta_used;
    let sol = PrimalSolution::average(problem, members, reporting, cfg.output_grid)?;
    report.final_gap_estimate = (sol.objective_value - report.best_value()).abs();
    Ok((sol, report))
}
