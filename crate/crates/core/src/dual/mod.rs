//! Dual function evaluation, supergradients and the `z`-subproblem.
//!
//! For a dual point `(μ, ν)` the dual function splits as `d = d_X + d_z`.
//! The functional part is a thresholded integral: with the margin
//! `M(β) = γ°(μ, β) − γ^(0)(μ, β) + λ`, points with `M < 0` form the support
//! and contribute `λ + γ°`, all others contribute `γ^(0)`.

mod recover;
mod solve;
mod theory;

pub use recover::{recover_primal, PrimalSolution};
pub use solve::{
    ascend, solve_approximate, solve_stochastic, stochastic_supergradient, AcceptanceDelta,
    AscentConfig, NodeSource, SolveReport, StepSchedule,
};
pub use theory::{check_l0_l1_scaling, error_bound_constant, eval_dual_l1};

use crate::domain::{ComplexVec, DualPoint, DzOutcome, DzSolution, Interval, SfpModel, SfpProblem};
use crate::error::{Result, SfpError};
use crate::quadrature::{QuadratureScheme, Rule};
use crate::scalar::ScalarResult;

/// Relative bisection tolerance for support boundaries.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// One quadrature piece of the thresholded integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSample {
    pub beta: f64,
    pub weight: f64,
    /// `X_d(β)`: the pointwise minimizer on the support, zero elsewhere.
    pub x: f64,
    pub in_support: bool,
}

/// Result of [`eval_dual`] at a point inside the dual domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub point: DualPoint,
    /// `d(μ, ν)`.
    pub value: f64,
    pub dx_value: f64,
    pub dz_value: f64,
    /// `z_d`.
    pub dz_minimizer: ComplexVec,
    /// `g_i(z_d)`.
    pub constraint_values: Vec<f64>,
    pub block_cost: f64,
    pub support: Vec<Interval>,
    pub support_measure: f64,
    /// Integration error estimate for `d_X`.
    pub delta: f64,
    /// `∫F0(X_d) + λ·m(support) + block cost` of the thresholded minimizer.
    pub primal_value: f64,
    pub samples: Vec<NodeSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualOutcome {
    Finite(Box<DualEvaluation>),
    /// `d(μ, ν) = −∞`.
    OutsideDomain,
}

impl DualOutcome {
    pub fn finite(self) -> Result<DualEvaluation> {
        match self {
            DualOutcome::Finite(e) => Ok(*e),
            DualOutcome::OutsideDomain => Err(SfpError::OutsideDualDomain),
        }
    }
}

/// Which thresholded integrand is being integrated.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Threshold {
    /// `λ + γ°` on `{M < 0}`, `γ^(0)` elsewhere.
    L0 { lambda: f64 },
    /// `Γ + min_{|x| ≤ Γ} Re[μ^H F]` on `{Γ + m − γ^(0) < 0}`, `γ^(0)` elsewhere.
    L1 { gamma: f64 },
}

impl Threshold {
    fn margin(self, sc: &ScalarResult, g0: f64) -> f64 {
        match self {
            Threshold::L0 { lambda } => sc.value - g0 + lambda,
            Threshold::L1 { gamma } => gamma + sc.value - g0,
        }
    }

    fn on_value(self, sc: &ScalarResult) -> f64 {
        match self {
            Threshold::L0 { lambda } => lambda + sc.value,
            Threshold::L1 { gamma } => gamma + sc.value,
        }
    }
}

/// Pointwise data at one `β`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointData {
    pub sc: ScalarResult,
    pub g0: f64,
    pub margin: f64,
}

pub(crate) fn point_data(
    problem: &SfpProblem,
    mu: &ComplexVec,
    beta: f64,
    kind: Threshold,
) -> Result<PointData> {
    let b = [beta];
    let sc = problem.pointwise_min(mu, &b)?;
    let g0 = problem.gamma_zero(mu, &b);
    if !(sc.value.is_finite() && g0.is_finite()) {
        return Err(SfpError::NonFiniteIntegrand { node: vec![beta] });
    }
    Ok(PointData {
        sc,
        g0,
        margin: kind.margin(&sc, g0),
    })
}

/// A located change of class between two probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Boundary<C> {
    pub at: f64,
    pub right: C,
    /// Final bracket width times the larger `|margin|` at its ends.
    pub error: f64,
}

/// Splits `[lo, hi]` into class-constant segments.
///
/// `probes` must be sorted by position and include both endpoints; each
/// change of class between neighbours is bisected down to `tol`.
pub(crate) fn locate_boundaries<C, F>(
    probes: &[(f64, C, f64)],
    mut classify: F,
    tol: f64,
) -> Result<Vec<Boundary<C>>>
where
    C: Copy + PartialEq,
    F: FnMut(f64) -> Result<(C, f64)>,
{
    let mut out = Vec::new();
    for pair in probes.windows(2) {
        let (b, cb, mb) = pair[1];
        let (mut cur, mut ccur, mut mcur) = pair[0];
        let mut guard = 0;
        while ccur != cb && guard < 64 {
            guard += 1;
            let (mut xa, mut xb) = (cur, b);
            let (mut ma, mut cx, mut mx) = (mcur, cb, mb);
            while xb - xa > tol {
                let xm = 0.5 * (xa + xb);
                let (cm, mm) = classify(xm)?;
                if cm == ccur {
                    xa = xm;
                    ma = mm;
                } else {
                    xb = xm;
                    cx = cm;
                    mx = mm;
                }
            }
            out.push(Boundary {
                at: 0.5 * (xa + xb),
                right: cx,
                error: (xb - xa) * ma.abs().max(mx.abs()),
            });
            cur = xb;
            ccur = cx;
            mcur = mx;
        }
    }
    Ok(out)
}

/// Searches around every sampled local extremum of the margin for a sign
/// change that falls between probes, and inserts a probe there if found.
///
/// Narrow support intervals (or gaps) can otherwise hide between nodes.
pub(crate) fn insert_dips<F>(probes: &mut Vec<(f64, bool, f64)>, mut margin: F, tol: f64) -> Result<()>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut found = Vec::new();
    for w in probes.windows(3) {
        let ((a, ca, ma), (_, cb, mb), (c, cc, mc)) = (w[0], w[1], w[2]);
        if ca != cb || cb != cc {
            continue;
        }
        // Search for a minimum of the margin when off support, a maximum when on.
        let sign = if cb { -1.0 } else { 1.0 };
        let (fa, fb, fc) = (sign * ma, sign * mb, sign * mc);
        if !(fb <= fa && fb <= fc && (fb < fa || fb < fc)) {
            continue;
        }
        let f = |x: f64, m: &mut F| -> Result<f64> { Ok(sign * m(x)?) };
        let (mut lo, mut hi) = (a, c);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = f(x1, &mut margin)?;
        let mut f2 = f(x2, &mut margin)?;
        while hi - lo > tol {
            if f1 < 0.0 || f2 < 0.0 {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = f(x1, &mut margin)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = f(x2, &mut margin)?;
            }
        }
        let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        // On support the class test is `margin < 0`, so a zero margin flips it.
        let flips = if cb { fx <= 0.0 } else { fx < 0.0 };
        if flips {
            found.push((x, !cb, sign * fx));
        }
    }
    if !found.is_empty() {
        probes.extend(found);
        probes.sort_by(|p, q| p.0.total_cmp(&q.0));
    }
    Ok(())
}

/// Class of the segment containing `x`.
pub(crate) fn class_at<C: Copy>(start: C, boundaries: &[Boundary<C>], x: f64) -> C {
    let k = boundaries.partition_point(|b| b.at <= x);
    if k == 0 {
        start
    } else {
        boundaries[k - 1].right
    }
}

/// Segments `[lo, hi]` with their class.
pub(crate) fn segments<C: Copy>(lo: f64, hi: f64, start: C, boundaries: &[Boundary<C>]) -> Vec<(Interval, C)> {
    let mut out = Vec::with_capacity(boundaries.len() + 1);
    let mut a = lo;
    let mut c = start;
    for b in boundaries {
        out.push((Interval::new(a, b.at), c));
        a = b.at;
        c = b.right;
    }
    out.push((Interval::new(a, hi), c));
    out
}

pub(crate) struct ThresholdIntegral {
    pub value: f64,
    pub support: Vec<Interval>,
    pub samples: Vec<NodeSample>,
    pub delta: f64,
}

fn domain_1d(problem: &SfpProblem) -> Result<(f64, f64)> {
    let d = &problem.domain;
    if d.dim() != 1 {
        return Err(SfpError::UnsupportedDimension(d.dim()));
    }
    Ok((d.lower()[0], d.upper()[0]))
}

/// Integrates the thresholded dual integrand with refined support boundaries.
pub(crate) fn threshold_integral(
    problem: &SfpProblem,
    mu: &ComplexVec,
    scheme: &QuadratureScheme,
    kind: Threshold,
) -> Result<ThresholdIntegral> {
    let (lo, hi) = domain_1d(problem)?;
    if scheme.domain() != &problem.domain {
        return Err(SfpError::InvalidArgument(
            "quadrature scheme was built for a different domain".into(),
        ));
    }
    let tol = BOUNDARY_TOL * (hi - lo);
    let at = |beta: f64| point_data(problem, mu, beta, kind);

    let node_data: Vec<PointData> = (0..scheme.len())
        .map(|j| at(scheme.node(j)[0]))
        .collect::<Result<_>>()?;

    let mut probes = Vec::with_capacity(node_data.len() + 2);
    let first = at(lo)?;
    probes.push((lo, first.margin < 0.0, first.margin));
    for (j, pd) in node_data.iter().enumerate() {
        probes.push((scheme.node(j)[0], pd.margin < 0.0, pd.margin));
    }
    let last = at(hi)?;
    probes.push((hi, last.margin < 0.0, last.margin));
    insert_dips(&mut probes, |beta| at(beta).map(|pd| pd.margin), tol)?;

    let boundaries = locate_boundaries(
        &probes,
        |beta| at(beta).map(|pd| (pd.margin < 0.0, pd.margin)),
        tol,
    )?;
    let start = probes[0].1;
    let support: Vec<Interval> = segments(lo, hi, start, &boundaries)
        .into_iter()
        .filter(|(iv, c)| *c && iv.measure() > 0.0)
        .map(|(iv, _)| iv)
        .collect();

    let integrand = |pd: &PointData, inside: bool| if inside { kind.on_value(&pd.sc) } else { pd.g0 };

    let edges = scheme.cell_edges();
    let rule = scheme.rule();
    let ppc = rule.points_per_cell();
    let mut samples = Vec::with_capacity(scheme.len());
    let mut value = 0.0;
    let mut abs_sum = 0.0;
    // A piece cut out of a cell is integrated by one panel at both
    // resolutions, so its own error is estimated against two half panels.
    let mut piece_error = 0.0;
    let piece = |a: f64, b: f64, samples: &mut Vec<NodeSample>, value: &mut f64, abs_sum: &mut f64, piece_error: &mut f64| -> Result<()> {
        let inside = class_at(start, &boundaries, 0.5 * (a + b));
        let mut one = 0.0;
        for (beta, w) in rule.panel(a, b) {
            let pd = at(beta)?;
            let f = integrand(&pd, inside);
            one += w * f;
            *abs_sum += (w * f).abs();
            samples.push(NodeSample {
                beta,
                weight: w,
                x: if inside { pd.sc.x_star } else { 0.0 },
                in_support: inside,
            });
        }
        let m = 0.5 * (a + b);
        let mut two = 0.0;
        for (beta, w) in rule.panel(a, m).into_iter().chain(rule.panel(m, b)) {
            two += w * integrand(&at(beta)?, inside);
        }
        *value += one;
        *piece_error += (one - two).abs();
        Ok(())
    };
    for c in 0..scheme.cells_per_dim() {
        let (a, b) = (edges[c], edges[c + 1]);
        let k0 = boundaries.partition_point(|bd| bd.at <= a);
        let k1 = boundaries.partition_point(|bd| bd.at < b);
        if k0 == k1 {
            let inside = class_at(start, &boundaries, 0.5 * (a + b));
            for j in c * ppc..(c + 1) * ppc {
                let pd = &node_data[j];
                let w = scheme.weights()[j];
                let f = integrand(pd, inside);
                value += w * f;
                abs_sum += (w * f).abs();
                samples.push(NodeSample {
                    beta: scheme.node(j)[0],
                    weight: w,
                    x: if inside { pd.sc.x_star } else { 0.0 },
                    in_support: inside,
                });
            }
        } else {
            let mut left = a;
            for bd in &boundaries[k0..k1] {
                piece(left, bd.at, &mut samples, &mut value, &mut abs_sum, &mut piece_error)?;
                left = bd.at;
            }
            piece(left, b, &mut samples, &mut value, &mut abs_sum, &mut piece_error)?;
        }
    }

    let coarse = scheme.half_resolution()?;
    let coarse_edges = coarse.cell_edges();
    let mut coarse_value = 0.0;
    for c in 0..coarse.cells_per_dim() {
        let (a, b) = (coarse_edges[c], coarse_edges[c + 1]);
        let k0 = boundaries.partition_point(|bd| bd.at <= a);
        let k1 = boundaries.partition_point(|bd| bd.at < b);
        let mut cuts = vec![a];
        cuts.extend(boundaries[k0..k1].iter().map(|bd| bd.at));
        cuts.push(b);
        for w2 in cuts.windows(2) {
            let inside = class_at(start, &boundaries, 0.5 * (w2[0] + w2[1]));
            for (beta, w) in rule.panel(w2[0], w2[1]) {
                coarse_value += w * integrand(&at(beta)?, inside);
            }
        }
    }

    let bracket: f64 = boundaries.iter().map(|b| b.error).sum();
    let delta = (value - coarse_value).abs() + piece_error + bracket + 64.0 * f64::EPSILON * abs_sum;
    Ok(ThresholdIntegral {
        value,
        support,
        samples,
        delta,
    })
}

/// Evaluates `d(μ, ν)` with support-boundary refinement on a 1-D domain.
pub fn eval_dual(problem: &SfpProblem, point: &DualPoint, scheme: &QuadratureScheme) -> Result<DualOutcome> {
    check_point(problem, point)?;
    let dz = match problem.dz(point)? {
        DzOutcome::Finite(s) => s,
        DzOutcome::Unbounded => return Ok(DualOutcome::OutsideDomain),
    };
    let ti = threshold_integral(problem, &point.mu, scheme, Threshold::L0 { lambda: problem.lambda })?;
    let support_measure = crate::domain::total_measure(&ti.support);
    let model = problem.model();
    let f0: f64 = ti
        .samples
        .iter()
        .map(|s| s.weight * model.objective(s.x, &[s.beta]))
        .sum();
    Ok(DualOutcome::Finite(Box::new(DualEvaluation {
        point: point.clone(),
        value: ti.value + dz.value,
        dx_value: ti.value,
        dz_value: dz.value,
        dz_minimizer: dz.z,
        constraint_values: dz.constraint_values,
        block_cost: dz.block_cost,
        support_measure,
        support: ti.support,
        delta: ti.delta,
        primal_value: f0 + problem.lambda * support_measure + dz.block_cost,
        samples: ti.samples,
    })))
}

pub(crate) fn check_point(problem: &SfpProblem, point: &DualPoint) -> Result<()> {
    if point.mu.len() != problem.p() {
        return Err(SfpError::DimensionMismatch {
            expected: problem.p(),
            found: point.mu.len(),
        });
    }
    if point.nu().len() != problem.m() {
        return Err(SfpError::DimensionMismatch {
            expected: problem.m(),
            found: point.nu().len(),
        });
    }
    Ok(())
}

/// `p_μ = ∫F[X_d(β), β]dβ − z_d`, `p_ν = g(z_d)`.
pub fn supergradients(problem: &SfpProblem, eval: &DualEvaluation) -> (ComplexVec, Vec<f64>) {
    let model = problem.model();
    let mut p_mu = ComplexVec::zeros(problem.p());
    for s in &eval.samples {
        p_mu.axpy(s.weight, &model.measure(s.x, &[s.beta]));
    }
    p_mu.axpy(-1.0, &eval.dz_minimizer);
    (p_mu, eval.constraint_values.clone())
}

/// Closed form of the `z`-subproblem for `g(z) = ‖y − z‖² − ε`.
pub fn dz_quadratic(y: &ComplexVec, epsilon: f64, mu: &ComplexVec, nu: f64) -> DzOutcome {
    if nu == 0.0 {
        if mu.norm_sq() == 0.0 {
            return DzOutcome::Finite(DzSolution {
                z: y.clone(),
                value: 0.0,
                constraint_values: vec![-epsilon],
                block_cost: 0.0,
            });
        }
        return DzOutcome::Unbounded;
    }
    let mut z = y.clone();
    z.axpy(0.5 / nu, mu);
    let m2 = mu.norm_sq();
    DzOutcome::Finite(DzSolution {
        z,
        value: -m2 / (4.0 * nu) - nu * epsilon - mu.inner(y),
        constraint_values: vec![m2 / (4.0 * nu * nu) - epsilon],
        block_cost: 0.0,
    })
}

/// Numerical fallback for the `z`-subproblem: gradient descent with Armijo
/// backtracking on `Σ ν_i g_i(z) − Re[μ^H z]` using central differences.
pub fn dz_generic<M: SfpModel + ?Sized>(model: &M, point: &DualPoint) -> Result<DzOutcome> {
    let p = model.measurement_dim();
    if point.nu().iter().all(|v| *v == 0.0) {
        if point.mu.norm_sq() == 0.0 {
            let z = ComplexVec::zeros(p);
            let constraint_values = model.constraints(&z);
            return Ok(DzOutcome::Finite(DzSolution {
                z,
                value: 0.0,
                constraint_values,
                block_cost: 0.0,
            }));
        }
        return Ok(DzOutcome::Unbounded);
    }
    let to_vec = |x: &[f64]| ComplexVec::new(x[..p].to_vec(), x[p..].to_vec()).expect("split halves");
    let objective = |x: &[f64]| -> f64 {
        let z = to_vec(x);
        let g = model.constraints(&z);
        g.iter().zip(point.nu()).map(|(g, n)| g * n).sum::<f64>() - point.mu.inner(&z)
    };
    let gradient = |x: &[f64]| -> Vec<f64> {
        let mut xx = x.to_vec();
        (0..2 * p)
            .map(|i| {
                let orig = xx[i];
                let h = 1e-6 * (1.0 + orig.abs());
                xx[i] = orig + h;
                let fp = objective(&xx);
                xx[i] = orig - h;
                let fm = objective(&xx);
                xx[i] = orig;
                (fp - fm) / (2.0 * h)
            })
            .collect()
    };

    let mut x = vec![0.0; 2 * p];
    let mut f = objective(&x);
    if !f.is_finite() {
        return Err(SfpError::NonFiniteIntegrand { node: Vec::new() });
    }
    for _ in 0..10_000 {
        let g = gradient(&x);
        let gn: f64 = g.iter().map(|v| v * v).sum();
        if gn.sqrt() < 1e-10 {
            break;
        }
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-20 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let fc = objective(&cand);
            if fc.is_finite() && fc <= f - 1e-4 * step * gn {
                x = cand;
                f = fc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        if f < -1e15 || x.iter().any(|v| v.abs() > 1e12) {
            return Ok(DzOutcome::Unbounded);
        }
    }
    let z = to_vec(&x);
    let constraint_values = model.constraints(&z);
    Ok(DzOutcome::Finite(DzSolution {
        z,
        value: f,
        constraint_values,
        block_cost: 0.0,
    }))
}

/// Gauss5 panel reused by sub-modules that integrate over refined pieces.
pub(crate) fn panel(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    Rule::Gauss5.panel(a, b)
}

#[cfg(test)]
mod tests;
