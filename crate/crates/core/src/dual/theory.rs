//! L0/L1 value equivalence and the perturbation constant.

use crate::domain::{ComplexVec, DualPoint, DzOutcome, PointwiseSet, SfpProblem};
use crate::error::{Result, SfpError};
use crate::quadrature::QuadratureScheme;
use crate::scalar::solve_generic;

use super::{check_point, eval_dual, threshold_integral, Threshold};

fn gamma_bound(problem: &SfpProblem) -> Result<f64> {
    match problem.pointwise_set {
        PointwiseSet::MagnitudeBound(g) => Ok(g),
        PointwiseSet::AllReals => Err(SfpError::InvalidArgument(
            "the L1 dual needs a magnitude-bounded pointwise set".into(),
        )),
    }
}

/// `d_1(μ, ν)` of the L1 relaxation of a problem with `F0 ≡ 0` and `|x| ≤ Γ`.
///
/// The integrand is `Γ + min_{|x| ≤ Γ} Re[μ^H F(x, β)]` where that is below
/// `γ^(0)`, and `γ^(0)` elsewhere; `w(μ, ν)` is the problem's `z`-block value.
/// Returns `None` outside the dual domain.
pub fn eval_dual_l1(problem: &SfpProblem, point: &DualPoint, scheme: &QuadratureScheme) -> Result<Option<(f64, f64)>> {
    check_point(problem, point)?;
    let gamma = gamma_bound(problem)?;
    let w = match problem.dz(point)? {
        DzOutcome::Finite(s) => s.value,
        DzOutcome::Unbounded => return Ok(None),
    };
    let ti = threshold_integral(problem, &point.mu, scheme, Threshold::L1 { gamma })?;
    Ok(Some((ti.value + w, ti.delta)))
}

/// `|d_0(μ, ν) − Γ⁻¹ d_1(Γμ, Γν)|` together with the larger of the two
/// integration error estimates.
///
/// Before comparing, the pointwise minimizers are probed at a subset of the
/// quadrature nodes with a generic scalar search: a nonzero minimizer with
/// magnitude below `Γ` breaks the hypothesis under which the identity holds.
pub fn check_l0_l1_scaling(problem: &SfpProblem, point: &DualPoint, scheme: &QuadratureScheme) -> Result<(f64, f64)> {
    let gamma = gamma_bound(problem)?;
    probe_saturation(problem, &point.mu, scheme, gamma)?;
    let d0 = eval_dual(problem, point, scheme)?.finite()?;
    let scaled = point.scaled(gamma);
    let (d1, delta1) = eval_dual_l1(problem, &scaled, scheme)?.ok_or(SfpError::OutsideDualDomain)?;
    Ok(((d0.value - d1 / gamma).abs(), d0.delta.max(delta1 / gamma)))
}

fn probe_saturation(problem: &SfpProblem, mu: &ComplexVec, scheme: &QuadratureScheme, gamma: f64) -> Result<()> {
    let model = problem.model();
    let stride = (scheme.len() / 32).max(1);
    for j in (0..scheme.len()).step_by(stride) {
        let beta = scheme.node(j);
        let objective = |x: f64| model.objective(x, beta) + mu.inner(&model.measure(x, beta));
        let r = solve_generic(&objective, &problem.pointwise_set, gamma, 401, 1e-12)?;
        let tol = 1e-9 * (1.0 + r.value.abs());
        let edge = objective(gamma).min(objective(-gamma));
        let zero = objective(0.0);
        if r.value < edge.min(zero) - tol {
            return Err(SfpError::SaturationViolated {
                beta: beta[0],
                x: r.x_star,
                bound: gamma,
            });
        }
    }
    Ok(())
}

/// `c = (F0_bar + λ m(Ω)) / (α ε) · max(|Σ_i g_i(−α1)|, |Σ_i g_i(α1)|)`.
///
/// `eps_slater` is the slack `−max_i g_i(z†)` of a strictly feasible point
/// whose objective integral is `f0_bar`.
pub fn error_bound_constant(problem: &SfpProblem, alpha: f64, eps_slater: f64, f0_bar: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(SfpError::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if !(eps_slater > 0.0) {
        return Err(SfpError::InvalidArgument(format!(
            "Slater slack must be positive, got {eps_slater}"
        )));
    }
    let p = problem.p();
    let ones = ComplexVec::from_real(vec![alpha; p]);
    let g_plus: f64 = problem.model().constraints(&ones).iter().sum();
    let g_minus: f64 = problem.model().constraints(&ones.scaled(-1.0)).iter().sum();
    if !(g_plus.is_finite() && g_minus.is_finite()) {
        return Err(SfpError::NonFiniteConstraint { alpha });
    }
    Ok((f0_bar + problem.lambda * problem.domain.measure()) / (alpha * eps_slater) * g_plus.abs().max(g_minus.abs()))
}
