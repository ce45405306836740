//! Problem-description types shared by the solver and the application layers.
//!
//! A sparse functional program (SFP) asks for a function `X` on a compact box
//! `Ω` minimizing `∫ F0(X(β), β) dβ + λ·m(supp X)` subject to convex
//! constraints `g_i(z) ≤ 0` on the measurements `z = ∫ F(X(β), β) dβ` and a
//! pointwise constraint `X(β) ∈ P`. [`SfpModel`] carries the integrands and
//! the constraint block, [`SfpProblem`] adds the domain, `λ` and `P`.

use std::fmt;
use std::sync::Arc;

use crate::dual::dz_generic;
use crate::error::{Result, SfpError};
use crate::scalar::{solve_generic, GenericScalarConfig, ScalarResult};

/// Compact box `Π_i [lower_i, upper_i]` with positive measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(SfpError::InvalidDomain("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(SfpError::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SfpError::InvalidDomain(format!(
                    "side {i} is [{lo}, {hi}], need finite lower < upper"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Lebesgue measure of the box.
    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn contains(&self, beta: &[f64]) -> bool {
        beta.len() == self.dim()
            && beta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&b, (&lo, &hi))| lo <= b && b <= hi)
    }
}

/// Closed interval of a one-dimensional domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn measure(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Total measure of a list of disjoint intervals.
pub fn total_measure(intervals: &[Interval]) -> f64 {
    intervals.iter().map(Interval::measure).fold(0.0, |a, m| a + m)
}

/// Complex vector stored as separate real and imaginary parts.
///
/// The dual arithmetic only ever needs `Re[a^H b]`, which on the split
/// representation is the ordinary real inner product of `(re, im)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVec {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(SfpError::DimensionMismatch {
                expected: re.len(),
                found: im.len(),
            });
        }
        Ok(Self { re, im })
    }

    pub fn from_real(re: Vec<f64>) -> Self {
        let im = vec![0.0; re.len()];
        Self { re, im }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    /// `Re[self^H other]`.
    pub fn inner(&self, other: &ComplexVec) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        let re: f64 = self.re.iter().zip(&other.re).map(|(a, b)| a * b).sum();
        let im: f64 = self.im.iter().zip(&other.im).map(|(a, b)| a * b).sum();
        re + im
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> ComplexVec {
        ComplexVec {
            re: self.re.iter().map(|v| alpha * v).collect(),
            im: self.im.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &ComplexVec) {
        debug_assert_eq!(self.len(), x.len());
        for (a, b) in self.re.iter_mut().zip(&x.re) {
            *a += alpha * b;
        }
        for (a, b) in self.im.iter_mut().zip(&x.im) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &ComplexVec) -> ComplexVec {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    /// `max_i max(|re_i|, |im_i|)`
    pub fn max_abs(&self) -> f64 {
        self.re
            .iter()
            .chain(&self.im)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// State of the dual solver: complex multipliers for the measurement
/// equalities and nonnegative multipliers for the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub mu: ComplexVec,
    nu: Vec<f64>,
}

impl DualPoint {
    pub fn new(mu: ComplexVec, nu: Vec<f64>) -> Result<Self> {
        if let Some(v) = nu.iter().find(|v| !(**v >= 0.0)) {
            return Err(SfpError::InvalidArgument(format!(
                "constraint multipliers must be nonnegative, got {v}"
            )));
        }
        Ok(Self { mu, nu })
    }

    /// `μ = 0`, `ν_i = 1`.
    pub fn initial(p: usize, m: usize) -> Self {
        Self {
            mu: ComplexVec::zeros(p),
            nu: vec![1.0; m],
        }
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Positive rescaling `(αμ, αν)`.
    pub fn scaled(&self, alpha: f64) -> DualPoint {
        DualPoint {
            mu: self.mu.scaled(alpha),
            nu: self.nu.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Ascent step `μ + η p_μ`, `[ν + η p_ν]_+`.
    pub fn stepped(&self, eta: f64, p_mu: &ComplexVec, p_nu: &[f64]) -> DualPoint {
        let mut mu = self.mu.clone();
        mu.axpy(eta, p_mu);
        let nu = self
            .nu
            .iter()
            .zip(p_nu)
            .map(|(v, g)| (v + eta * g).max(0.0))
            .collect();
        DualPoint { mu, nu }
    }
}

/// Pointwise constraint set `P` for the scalar value `X(β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointwiseSet {
    AllReals,
    MagnitudeBound(f64),
}

impl PointwiseSet {
    pub fn magnitude_bound(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(SfpError::InvalidArgument(format!(
                "magnitude bound must be positive, got {gamma}"
            )));
        }
        Ok(PointwiseSet::MagnitudeBound(gamma))
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            PointwiseSet::AllReals => x.is_finite(),
            PointwiseSet::MagnitudeBound(g) => x.abs() <= g,
        }
    }

    pub fn bound(&self) -> Option<f64> {
        match *self {
            PointwiseSet::AllReals => None,
            PointwiseSet::MagnitudeBound(g) => Some(g),
        }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        match *self {
            PointwiseSet::AllReals => x,
            PointwiseSet::MagnitudeBound(g) => x.clamp(-g, g),
        }
    }
}

/// Minimizer and value of the convex `z`-subproblem
/// `min_z Σ ν_i g_i(z) − Re[μ^H z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DzSolution {
    pub z: ComplexVec,
    pub value: f64,
    /// `g_i(z)` at the minimizer; these are the `ν` supergradients.
    pub constraint_values: Vec<f64>,
    /// Cost carried by auxiliary finite-dimensional variables of the
    /// `z`-block (the logistic intercept's `b²`), zero otherwise.
    pub block_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DzOutcome {
    Finite(DzSolution),
    /// The subproblem is unbounded below (`d = −∞`).
    Unbounded,
}

/// Integrands and constraint block of an SFP.
///
/// The default `pointwise_min` and `dz` fall back to generic numerical
/// solvers; applications override them with closed forms.
pub trait SfpModel: Send + Sync {
    /// Measurement dimension `p`.
    fn measurement_dim(&self) -> usize;

    /// Number of inequality constraints `m`.
    fn constraint_count(&self) -> usize;

    /// `F0(x, β)`.
    fn objective(&self, x: f64, beta: &[f64]) -> f64;

    /// `F(x, β)`, length `p`.
    fn measure(&self, x: f64, beta: &[f64]) -> ComplexVec;

    /// `g_i(z)`. Models whose `z`-block carries auxiliary variables evaluate
    /// them at zero here; the solver itself uses [`DzSolution::constraint_values`].
    fn constraints(&self, z: &ComplexVec) -> Vec<f64>;

    /// `γ°(μ, β) = min_{x ∈ P} F0(x, β) + Re[μ^H F(x, β)]` and its minimizer.
    fn pointwise_min(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        let cfg = GenericScalarConfig::default();
        solve_generic(
            |x| self.objective(x, beta) + mu.inner(&self.measure(x, beta)),
            set,
            cfg.search_radius,
            cfg.grid_points,
            cfg.refine_tol,
        )
    }

    /// Best nonzero candidate at `β`, used when filling tie regions. Defaults
    /// to `pointwise_min`; models whose minimizer is `0` on a tie override it.
    fn support_candidate(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        self.pointwise_min(mu, beta, set)
    }

    /// The `z`-subproblem of the dual function.
    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        dz_generic(self, point)
    }

    /// Starting point of the ascent.
    fn initial_point(&self) -> DualPoint {
        DualPoint::initial(self.measurement_dim(), self.constraint_count())
    }
}

/// How the primal solution is read off the Lagrangian minimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecoveryMode {
    /// Pointwise thresholding; correct when the Lagrangian has a unique
    /// minimizer (e.g. `F0 = |x|²`).
    Threshold,
    /// For objectives without strict convexity: points whose support margin
    /// is within `tolerance` of zero are ties, and the fraction of each tie
    /// region set to its nonzero minimizer is chosen to match the
    /// measurements.
    FillTies { tolerance: f64 },
}

/// A complete sparse functional program.
#[derive(Clone)]
pub struct SfpProblem {
    pub domain: Domain,
    pub lambda: f64,
    pub pointwise_set: PointwiseSet,
    pub recovery: RecoveryMode,
    model: Arc<dyn SfpModel>,
}

impl fmt::Debug for SfpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SfpProblem")
            .field("domain", &self.domain)
            .field("lambda", &self.lambda)
            .field("p", &self.p())
            .field("m", &self.m())
            .field("pointwise_set", &self.pointwise_set)
            .field("recovery", &self.recovery)
            .finish()
    }
}

impl SfpProblem {
    pub fn new(
        domain: Domain,
        lambda: f64,
        pointwise_set: PointwiseSet,
        model: Arc<dyn SfpModel>,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(SfpError::InvalidArgument(format!(
                "sparsity weight must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self {
            domain,
            lambda,
            pointwise_set,
            recovery: RecoveryMode::Threshold,
            model,
        })
    }

    pub fn with_recovery(mut self, recovery: RecoveryMode) -> Self {
        self.recovery = recovery;
        self
    }

    pub fn model(&self) -> &dyn SfpModel {
        self.model.as_ref()
    }

    pub fn p(&self) -> usize {
        self.model.measurement_dim()
    }

    pub fn m(&self) -> usize {
        self.model.constraint_count()
    }

    /// `γ^(0)(μ, β) = F0(0, β) + Re[μ^H F(0, β)]`.
    pub fn gamma_zero(&self, mu: &ComplexVec, beta: &[f64]) -> f64 {
        self.model.objective(0.0, beta) + mu.inner(&self.model.measure(0.0, beta))
    }

    pub fn pointwise_min(&self, mu: &ComplexVec, beta: &[f64]) -> Result<ScalarResult> {
        self.model.pointwise_min(mu, beta, &self.pointwise_set)
    }

    pub fn support_candidate(&self, mu: &ComplexVec, beta: &[f64]) -> Result<ScalarResult> {
        self.model.support_candidate(mu, beta, &self.pointwise_set)
    }

    pub fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        self.model.dz(point)
    }

    pub fn initial_point(&self) -> DualPoint {
        self.model.initial_point()
    }
}

/// `γ^(0)(μ, β)`; see [`SfpProblem::gamma_zero`].
pub fn gamma_zero(problem: &SfpProblem, mu: &ComplexVec, beta: &[f64]) -> f64 {
    problem.gamma_zero(mu, beta)
}

/// Weak duality: a dual value never exceeds the value of a feasible primal
/// candidate, up to the integration tolerance.
pub fn weak_duality_witness(feasible_primal_value: f64, dual_value: f64, tolerance: f64) -> bool {
    dual_value <= feasible_primal_value + tolerance
}
