//! Per-point scalar minimization `γ°(μ, β) = min_{x ∈ P} F0(x, β) + Re[μ^H F(x, β)]`.

use crate::domain::{ComplexVec, PointwiseSet};
use crate::error::{Result, SfpError};

/// Minimizer and minimum of a scalar subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarResult {
    pub x_star: f64,
    pub value: f64,
}

/// Knobs for [`solve_generic`] when a model does not supply a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericScalarConfig {
    pub search_radius: f64,
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl Default for GenericScalarConfig {
    fn default() -> Self {
        Self {
            search_radius: 10.0,
            grid_points: 2001,
            refine_tol: 1e-10,
        }
    }
}

/// Hard saturation `ρ(v) = clamp(v, −r, r)`; `r = ∞` is the identity.
#[inline]
pub fn saturate(v: f64, r: f64) -> f64 {
    if v > r {
        r
    } else if v < -r {
        -r
    } else {
        v
    }
}

/// `min_{x ∈ P} x² + c·x` with `c = Re[μ^H h]`.
pub fn solve_quadratic_linear(mu: &ComplexVec, h: &ComplexVec, set: &PointwiseSet) -> ScalarResult {
    quadratic_linear(mu.inner(h), set)
}

pub(crate) fn quadratic_linear(c: f64, set: &PointwiseSet) -> ScalarResult {
    let x = set.clamp(-0.5 * c);
    ScalarResult {
        x_star: x,
        value: x * x + c * x,
    }
}

/// Evaluates `x² + Σ_i μ_i ρ(x·h_i)`.
pub fn saturated_objective(x: f64, mu: &[f64], h: &[f64], r: f64) -> f64 {
    x * x
        + mu
            .iter()
            .zip(h)
            .map(|(m, hi)| m * saturate(x * hi, r))
            .sum::<f64>()
}

/// `min_{x ∈ P} x² + Σ_i μ_i ρ(x·h_i)` by enumerating the pieces on which a
/// fixed set of coordinates is saturated.
///
/// Writing `x = s·y` with `s = ±1` and `y ≥ 0`, coordinate `i` saturates for
/// `y > r/|h_i|`. Between consecutive knots the objective is
/// `y² + s(A·y + C)` with `A` the sum of `μ_i h_i` over unsaturated
/// coordinates and `C` the sum of `μ_i r sign(h_i)` over saturated ones.
pub fn solve_saturated_cosine(mu: &[f64], h: &[f64], r: f64, set: &PointwiseSet) -> ScalarResult {
    debug_assert_eq!(mu.len(), h.len());
    debug_assert!(r > 0.0);
    let cap = set.bound().unwrap_or(f64::INFINITY);

    let mut order: Vec<(f64, f64, f64)> = mu
        .iter()
        .zip(h)
        .filter(|(_, hi)| **hi != 0.0)
        .map(|(&m, &hi)| (r / hi.abs(), m * hi, m * r * hi.signum()))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = ScalarResult {
        x_star: 0.0,
        value: 0.0,
    };
    for s in [1.0, -1.0] {
        let mut a: f64 = order.iter().map(|o| o.1).sum();
        let mut c = 0.0;
        let mut lo = 0.0;
        for j in 0..=order.len() {
            let hi = if j < order.len() { order[j].0 } else { f64::INFINITY };
            let seg_hi = hi.min(cap);
            if seg_hi > lo || (j == 0 && seg_hi >= lo) {
                let y = (-0.5 * s * a).clamp(lo, seg_hi);
                let v = y * y + s * (a * y + c);
                if v < best.value {
                    best = ScalarResult {
                        x_star: s * y,
                        value: v,
                    };
                }
            }
            if hi >= cap || j == order.len() {
                break;
            }
            a -= order[j].1;
            c += order[j].2;
            lo = hi;
        }
    }
    best.value = saturated_objective(best.x_star, mu, h, r);
    best
}

/// Coarse grid scan over `[−Γ, Γ]` (or `[−radius, radius]` for unbounded
/// sets) followed by golden-section refinement inside the winning bracket.
pub fn solve_generic<F>(
    objective: F,
    set: &PointwiseSet,
    search_radius: f64,
    grid_points: usize,
    refine_tol: f64,
) -> Result<ScalarResult>
where
    F: Fn(f64) -> f64,
{
    let radius = set.bound().unwrap_or(search_radius);
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SfpError::InvalidArgument(format!(
            "search radius must be positive and finite, got {radius}"
        )));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = objective(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SfpError::NonFiniteObjective { x })
        }
    };

    let n = grid_points.max(3);
    let step = 2.0 * radius / (n - 1) as f64;
    let mut best = ScalarResult {
        x_star: 0.0,
        value: eval(0.0)?,
    };
    let mut best_idx = None;
    for i in 0..n {
        let x = -radius + step * i as f64;
        let v = eval(x)?;
        if v < best.value {
            best = ScalarResult { x_star: x, value: v };
            best_idx = Some(i);
        }
    }

    let (mut a, mut b) = match best_idx {
        Some(i) => (
            -radius + step * i.saturating_sub(1) as f64,
            (-radius + step * (i + 1).min(n - 1) as f64),
        ),
        None => (-step, step),
    };
    a = a.max(-radius);
    b = b.min(radius);

    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > refine_tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    let v = eval(x)?;
    for (cx, cv) in [(x, v), (x1, f1), (x2, f2)] {
        if cv < best.value {
            best = ScalarResult {
                x_star: cx,
                value: cv,
            };
        }
    }
    Ok(best)
}
