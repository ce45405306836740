//! C ABI over `sfp-core`.
//!
//! Every fallible function returns an [`SfpStatus`]; on failure a message is
//! kept per thread and can be read with [`sfp_last_error`]. Objects are
//! opaque handles created by `*_new`/`*_solve`/`*_train` and released with the
//! matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sfp_core::dual::{solve_approximate, AcceptanceDelta, AscentConfig, PrimalSolution, SolveReport, StepSchedule};
use sfp_core::fda::{predict_proba, train, FunctionalSample, RobustClassifier, TrainConfig};
use sfp_core::quadrature::{build_composite, QuadratureScheme, Rule};
use sfp_core::spectral::{build_lse, extract_components, CenterRule};
use sfp_core::domain::SfpProblem;
use sfp_core::SfpError;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OutsideDualDomain = 4,
    NumericalFailure = 5,
    NoAcceptedIterate = 6,
    SingleClass = 7,
    Io = 8,
    Parse = 9,
    IndexOutOfRange = 10,
    Panic = 11,
}

impl From<&SfpError> for SfpStatus {
    fn from(e: &SfpError) -> Self {
        match e {
            SfpError::InvalidDomain(_)
            | SfpError::InvalidArgument(_)
            | SfpError::UnsupportedDimension(_)
            | SfpError::SaturationViolated { .. }
            | SfpError::NonFiniteConstraint { .. }
            | SfpError::Config(_)
            | SfpError::UnknownConfigKey(_) => SfpStatus::InvalidArgument,
            SfpError::DimensionMismatch { .. } => SfpStatus::DimensionMismatch,
            SfpError::OutsideDualDomain => SfpStatus::OutsideDualDomain,
            SfpError::NonFiniteObjective { .. } | SfpError::NonFiniteIntegrand { .. } => SfpStatus::NumericalFailure,
            SfpError::NoAcceptedIterate => SfpStatus::NoAcceptedIterate,
            SfpError::SingleClass => SfpStatus::SingleClass,
            SfpError::Io { .. } => SfpStatus::Io,
            SfpError::Parse { .. } => SfpStatus::Parse,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
}

/// Message of the last failed call on this thread, or an empty string.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sfp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn guard<F>(f: F) -> SfpStatus
where
    F: FnOnce() -> Result<(), SfpStatus>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            SfpStatus::Panic
        }
    }
}

fn fail(e: SfpError) -> SfpStatus {
    set_error(e.to_string());
    SfpStatus::from(&e)
}

fn null(what: &str) -> SfpStatus {
    set_error(format!("null pointer: {what}"));
    SfpStatus::NullPointer
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], SfpStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Step size schedule.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfpSchedule {
    Constant = 0,
    InvSqrt = 1,
}

/// Per-cell quadrature rule.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfpRule {
    Midpoint = 0,
    Gauss5 = 1,
}

/// Solver settings. `acceptance_delta < 0` uses the live integration error estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfpSolverConfig {
    pub steps: usize,
    pub eta0: f64,
    pub schedule: SfpSchedule,
    pub cells: usize,
    pub rule: SfpRule,
    pub acceptance_delta: f64,
    pub output_grid: usize,
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn sfp_solver_config_default() -> SfpSolverConfig {
    let a = AscentConfig::default();
    SfpSolverConfig {
        steps: a.steps,
        eta0: a.eta0,
        schedule: SfpSchedule::InvSqrt,
        cells: 256,
        rule: SfpRule::Gauss5,
        acceptance_delta: -1.0,
        output_grid: a.output_grid,
    }
}

impl SfpSolverConfig {
    fn ascent(&self) -> AscentConfig {
        AscentConfig {
            steps: self.steps,
            eta0: self.eta0,
            schedule: match self.schedule {
                SfpSchedule::Constant => StepSchedule::Constant,
                SfpSchedule::InvSqrt => StepSchedule::InvSqrt,
            },
            acceptance: if self.acceptance_delta < 0.0 {
                AcceptanceDelta::Live
            } else {
                AcceptanceDelta::Fixed(self.acceptance_delta)
            },
            output_grid: self.output_grid,
            ..AscentConfig::default()
        }
    }

    fn rule(&self) -> Rule {
        match self.rule {
            SfpRule::Midpoint => Rule::Midpoint,
            SfpRule::Gauss5 => Rule::Gauss5,
        }
    }
}

/// A line spectral estimation problem.
pub struct SfpLseProblem {
    problem: SfpProblem,
    b: f64,
}

/// A solved problem: primal solution and ascent report.
pub struct SfpSolution {
    solution: PrimalSolution,
    report: SolveReport,
    b: f64,
}

/// A trained functional classifier and its quadrature.
pub struct SfpClassifier {
    classifier: RobustClassifier,
    scheme: QuadratureScheme,
    knots: usize,
}

/// One extracted spectral component.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SfpComponent {
    pub f_hat: f64,
    pub a_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Builds a line spectral problem from `p` samples `y` at `times`.
/// Pass `r = INFINITY` for the linear model.
///
/// # Safety
/// `y` and `times` must point to `p` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfp_lse_new(
    y: *const f64,
    times: *const f64,
    p: usize,
    b: f64,
    lambda: f64,
    epsilon: f64,
    r: f64,
    out: *mut *mut SfpLseProblem,
) -> SfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let y = slice(y, p, "y")?;
        let times = slice(times, p, "times")?;
        let problem = build_lse(y, times, b, lambda, epsilon, r).map_err(fail)?;
        *out = Box::into_raw(Box::new(SfpLseProblem { problem, b }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`sfp_lse_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfp_lse_free(problem: *mut SfpLseProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs the approximate supergradient solver.
///
/// # Safety
/// `problem` must be a live handle, `config` may be null for defaults, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfp_lse_solve(
    problem: *const SfpLseProblem,
    config: *const SfpSolverConfig,
    out: *mut *mut SfpSolution,
) -> SfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let cfg = config.as_ref().copied().unwrap_or_else(|| sfp_solver_config_default());
        let scheme = build_composite(&p.problem.domain, cfg.cells, cfg.rule()).map_err(fail)?;
        let (solution, report) = solve_approximate(&p.problem, &scheme, &cfg.ascent()).map_err(fail)?;
        *out = Box::into_raw(Box::new(SfpSolution { solution, report, b: p.b }));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from a solve call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_free(solution: *mut SfpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Primal objective `P`; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_objective(solution: *const SfpSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.objective_value)
}

/// Best dual value reached; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_dual_value(solution: *const SfpSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.report.best_value())
}

/// `|P − d_best|`; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_gap(solution: *const SfpSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.report.final_gap_estimate)
}

/// Support measure; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_l0(solution: *const SfpSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.l0)
}

/// 1 if the ascent stopped because backtracking was exhausted.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_backtrack_exhausted(solution: *const SfpSolution) -> i32 {
    solution.as_ref().map_or(0, |s| i32::from(s.report.backtrack_exhausted))
}

/// Number of support intervals; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_support_count(solution: *const SfpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.solution.support.len())
}

/// Support interval `index`.
///
/// # Safety
/// `solution` must be a live handle; `lo` and `hi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_support_interval(
    solution: *const SfpSolution,
    index: usize,
    lo: *mut f64,
    hi: *mut f64,
) -> SfpStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if lo.is_null() || hi.is_null() {
            return Err(null("lo/hi"));
        }
        let iv = s.solution.support.get(index).ok_or_else(|| {
            set_error(format!("interval {index} of {}", s.solution.support.len()));
            SfpStatus::IndexOutOfRange
        })?;
        *lo = iv.lo;
        *hi = iv.hi;
        Ok(())
    })
}

/// `X*(beta)`; NaN for a null handle or a failed pointwise solve.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_evaluate(solution: *const SfpSolution, beta: f64) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.solution.evaluate(beta))
}

/// Writes up to `capacity` components, largest `|a_hat|` first, and stores the
/// total number found in `count`. Pass `capacity = 0` to query the count.
///
/// # Safety
/// `solution` must be a live handle; `out` must hold `capacity` entries; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfp_solution_components(
    solution: *const SfpSolution,
    out: *mut SfpComponent,
    capacity: usize,
    count: *mut usize,
) -> SfpStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        let comps = extract_components(&s.solution, s.b, CenterRule::Centroid);
        *count = comps.len();
        if capacity > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (k, c) in comps.iter().take(capacity).enumerate() {
            *out.add(k) = SfpComponent {
                f_hat: c.f_hat,
                a_hat: c.a_hat,
                lo: c.bump_interval.lo,
                hi: c.bump_interval.hi,
                mass: c.mass,
            };
        }
        Ok(())
    })
}

unsafe fn series(values: *const f64, n: usize, knots: usize, labels: Option<&[u8]>) -> Result<Vec<FunctionalSample>, SfpStatus> {
    let flat = slice(values, n * knots, "values")?;
    (0..n)
        .map(|i| {
            let label = labels.map_or(0, |l| l[i]);
            FunctionalSample::uniform(flat[i * knots..(i + 1) * knots].to_vec(), label).map_err(fail)
        })
        .collect()
}

/// Trains a functional classifier on `n` series of `knots` values each
/// (row-major), sampled on uniform knots over `[0, 1]`, with labels in {0, 1}.
/// Pass `r = INFINITY` and `lambda = 0` for the plain model.
///
/// # Safety
/// `values` must hold `n·knots` doubles, `labels` `n` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfp_rfda_train(
    values: *const f64,
    labels: *const u8,
    n: usize,
    knots: usize,
    lambda: f64,
    r: f64,
    eps_tilde: f64,
    config: *const SfpSolverConfig,
    out: *mut *mut SfpClassifier,
) -> SfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if labels.is_null() && n > 0 {
            return Err(null("labels"));
        }
        let labels = if n == 0 { &[][..] } else { std::slice::from_raw_parts(labels, n) };
        let samples = series(values, n, knots, Some(labels))?;
        let cfg = config.as_ref().copied().unwrap_or_else(|| sfp_solver_config_default());
        let tc = TrainConfig {
            lambda,
            r,
            eps_tilde,
            cells: cfg.cells,
            rule: cfg.rule(),
            ascent: cfg.ascent(),
        };
        let (classifier, _) = train(&samples, &tc).map_err(fail)?;
        let scheme = build_composite(classifier.weights.domain(), cfg.cells, cfg.rule()).map_err(fail)?;
        *out = Box::into_raw(Box::new(SfpClassifier { classifier, scheme, knots }));
        Ok(())
    })
}

/// `P(label = 1)` for one series of the training length.
///
/// # Safety
/// `classifier` must be a live handle; `values` must hold `knots` doubles; `prob` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfp_rfda_predict(
    classifier: *const SfpClassifier,
    values: *const f64,
    knots: usize,
    prob: *mut f64,
) -> SfpStatus {
    guard(|| {
        let c = classifier.as_ref().ok_or_else(|| null("classifier"))?;
        if prob.is_null() {
            return Err(null("prob"));
        }
        if knots != c.knots {
            return Err(fail(SfpError::DimensionMismatch {
                expected: c.knots,
                found: knots,
            }));
        }
        let z = series(values, 1, knots, None)?;
        *prob = predict_proba(&c.classifier, &z[0], &c.scheme);
        Ok(())
    })
}

/// Intercept `b` of `σ(∫ρ[Z W] − b)`; NaN for a null handle.
///
/// # Safety
/// `classifier` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sfp_rfda_intercept(classifier: *const SfpClassifier) -> f64 {
    classifier.as_ref().map_or(f64::NAN, |c| c.classifier.b)
}

/// # Safety
/// `classifier` must come from [`sfp_rfda_train`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sfp_rfda_free(classifier: *mut SfpClassifier) {
    if !classifier.is_null() {
        drop(Box::from_raw(classifier));
    }
}
