//! Primal recovery from a dual point.

use std::fmt;

use crate::domain::{total_measure, ComplexVec, Domain, DualPoint, Interval, RecoveryMode, SfpProblem};
use crate::error::{Result, SfpError};
use crate::quadrature::QuadratureScheme;

use super::{class_at, locate_boundaries, panel, segments, DualEvaluation, BOUNDARY_TOL};

#[derive(Clone)]
enum Repr {
    Pointwise(SfpProblem),
    Averaged(Vec<PrimalSolution>),
}

/// Recovered sparse function `X*` together with its summary values.
#[derive(Clone)]
pub struct PrimalSolution {
    domain: Domain,
    /// Disjoint, sorted support intervals.
    pub support: Vec<Interval>,
    /// `P = ∫F0(X*) + λ·l0` (plus the cost of auxiliary `z`-block variables).
    pub objective_value: f64,
    /// `z*`.
    pub measurements: ComplexVec,
    pub l0: f64,
    pub dual_point: DualPoint,
    /// `(β, X*(β))` on a uniform grid over the domain.
    pub grid: Vec<(f64, f64)>,
    repr: Repr,
}

impl fmt::Debug for PrimalSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimalSolution")
            .field("support", &self.support)
            .field("objective_value", &self.objective_value)
            .field("l0", &self.l0)
            .field("measurements", &self.measurements)
            .finish_non_exhaustive()
    }
}

impl PrimalSolution {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn in_support(&self, beta: f64) -> bool {
        let k = self.support.partition_point(|iv| iv.hi < beta);
        k < self.support.len() && self.support[k].contains(beta)
    }

    /// `X*(β)`; zero off the support. Returns NaN if the pointwise solver
    /// fails, which cannot happen for a problem whose dual was evaluated.
    pub fn evaluate(&self, beta: f64) -> f64 {
        if !self.in_support(beta) {
            return 0.0;
        }
        match &self.repr {
            Repr::Pointwise(problem) => problem
                .support_candidate(&self.dual_point.mu, &[beta])
                .map(|s| s.x_star)
                .unwrap_or(f64::NAN),
            Repr::Averaged(members) => {
                members.iter().map(|m| m.evaluate(beta)).sum::<f64>() / members.len() as f64
            }
        }
    }

    /// Number of averaged members, 1 for a pointwise solution.
    pub fn member_count(&self) -> usize {
        match &self.repr {
            Repr::Pointwise(_) => 1,
            Repr::Averaged(m) => m.len(),
        }
    }

    fn sample_grid(&mut self, n: usize) {
        let lo = self.domain.lower()[0];
        let hi = self.domain.upper()[0];
        let h = (hi - lo) / (n - 1) as f64;
        self.grid = (0..n)
            .map(|i| {
                let b = if i + 1 == n { hi } else { lo + h * i as f64 };
                (b, self.evaluate(b))
            })
            .collect();
    }

    /// Pointwise average of solutions from the same problem.
    pub(crate) fn average(
        problem: &SfpProblem,
        members: Vec<PrimalSolution>,
        scheme: &QuadratureScheme,
        output_grid: usize,
    ) -> Result<PrimalSolution> {
        let n = members.len() as f64;
        let support = merge(members.iter().flat_map(|m| m.support.iter().copied()).collect());
        let mut measurements = ComplexVec::zeros(problem.p());
        for m in &members {
            measurements.axpy(1.0 / n, &m.measurements);
        }
        let dual_point = members.last().expect("nonempty").dual_point.clone();
        let mut sol = PrimalSolution {
            domain: problem.domain.clone(),
            l0: total_measure(&support),
            support,
            objective_value: 0.0,
            measurements,
            dual_point,
            grid: Vec::new(),
            repr: Repr::Averaged(members),
        };
        let (f0, _) = integrate_primal(problem, &sol, scheme);
        sol.objective_value = f0 + problem.lambda * sol.l0;
        sol.sample_grid(output_grid);
        Ok(sol)
    }
}

/// Sorts and merges overlapping or touching intervals.
fn merge(mut ivs: Vec<Interval>) -> Vec<Interval> {
    ivs.retain(|iv| iv.measure() > 0.0);
    ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(ivs.len());
    for iv in ivs {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// `(∫F0(X, β), ∫F(X, β))` with Gauss panels split at cell edges and
/// support endpoints.
fn integrate_primal(problem: &SfpProblem, sol: &PrimalSolution, scheme: &QuadratureScheme) -> (f64, ComplexVec) {
    let mut cuts = scheme.cell_edges();
    for iv in &sol.support {
        cuts.push(iv.lo);
        cuts.push(iv.hi);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let model = problem.model();
    let mut f0 = 0.0;
    let mut f = ComplexVec::zeros(problem.p());
    for w in cuts.windows(2) {
        for (beta, wt) in panel(w[0], w[1]) {
            let x = sol.evaluate(beta);
            f0 += wt * model.objective(x, &[beta]);
            f.axpy(wt, &model.measure(x, &[beta]));
        }
    }
    (f0, f)
}

/// Reads `X*` off the Lagrangian minimizers at `eval.point`.
pub fn recover_primal(
    problem: &SfpProblem,
    eval: &DualEvaluation,
    scheme: &QuadratureScheme,
    output_grid: usize,
) -> Result<PrimalSolution> {
    let mut sol = match problem.recovery {
        RecoveryMode::Threshold => PrimalSolution {
            domain: problem.domain.clone(),
            support: eval.support.clone(),
            objective_value: eval.primal_value,
            measurements: eval.dz_minimizer.clone(),
            l0: eval.support_measure,
            dual_point: eval.point.clone(),
            grid: Vec::new(),
            repr: Repr::Pointwise(problem.clone()),
        },
        RecoveryMode::FillTies { tolerance } => fill_ties(problem, eval, scheme, tolerance)?,
    };
    sol.sample_grid(output_grid.max(2));
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tie {
    Off,
    Tie,
    Strict,
}

fn fill_ties(
    problem: &SfpProblem,
    eval: &DualEvaluation,
    scheme: &QuadratureScheme,
    tau: f64,
) -> Result<PrimalSolution> {
    let mu = &eval.point.mu;
    let lo = problem.domain.lower()[0];
    let hi = problem.domain.upper()[0];
    let classify = |beta: f64| -> Result<(Tie, f64)> {
        let b = [beta];
        let m = problem.support_candidate(mu, &b)?.value - problem.gamma_zero(mu, &b) + problem.lambda;
        if !m.is_finite() {
            return Err(SfpError::NonFiniteIntegrand { node: vec![beta] });
        }
        let c = if m < -tau {
            Tie::Strict
        } else if m <= tau {
            Tie::Tie
        } else {
            Tie::Off
        };
        Ok((c, m))
    };
    let mut probes = Vec::with_capacity(scheme.len() + 2);
    for beta in std::iter::once(lo)
        .chain(scheme.nodes().map(|b| b[0]))
        .chain(std::iter::once(hi))
    {
        let (c, m) = classify(beta)?;
        probes.push((beta, c, m));
    }
    let start = probes[0].1;
    let boundaries = locate_boundaries(&probes, classify, BOUNDARY_TOL * (hi - lo))?;
    let segs = segments(lo, hi, start, &boundaries);

    // Contribution of switching a whole segment from 0 to the minimizer.
    let model = problem.model();
    let edges = scheme.cell_edges();
    let segment_gain = |iv: &Interval| -> Result<ComplexVec> {
        let mut cuts = vec![iv.lo];
        cuts.extend(edges.iter().copied().filter(|e| *e > iv.lo && *e < iv.hi));
        cuts.push(iv.hi);
        let mut acc = ComplexVec::zeros(problem.p());
        for w in cuts.windows(2) {
            for (beta, wt) in panel(w[0], w[1]) {
                let x = problem.support_candidate(mu, &[beta])?.x_star;
                acc.axpy(wt, &model.measure(x, &[beta]).sub(&model.measure(0.0, &[beta])));
            }
        }
        Ok(acc)
    };
    let mut base = ComplexVec::zeros(problem.p());
    for w in edges.windows(2) {
        for (beta, wt) in panel(w[0], w[1]) {
            base.axpy(wt, &model.measure(0.0, &[beta]));
        }
    }
    let mut ties = Vec::new();
    let mut cols = Vec::new();
    let mut strict = Vec::new();
    for (iv, c) in &segs {
        match c {
            Tie::Strict => {
                base.axpy(1.0, &segment_gain(iv)?);
                strict.push(*iv);
            }
            Tie::Tie if iv.measure() > 0.0 => {
                // One column per cell so that a change of minimizer inside the
                // segment cannot be averaged away.
                let mut cuts = vec![iv.lo];
                cuts.extend(edges.iter().copied().filter(|e| *e > iv.lo && *e < iv.hi));
                cuts.push(iv.hi);
                for w in cuts.windows(2) {
                    let piece = Interval::new(w[0], w[1]);
                    cols.push(segment_gain(&piece)?);
                    ties.push(piece);
                }
            }
            _ => {}
        }
    }

    let theta = box_least_squares(&cols, &eval.dz_minimizer.sub(&base));
    let mut support = strict;
    // Adjacent pieces with the same gain per unit length are interchangeable:
    // their filled length is packed against the left end of the run.
    let mut k = 0;
    while k < ties.len() {
        let rate = cols[k].scaled(1.0 / ties[k].measure());
        let mut filled = theta[k] * ties[k].measure();
        let mut end = k + 1;
        while end < ties.len() && ties[end].lo == ties[end - 1].hi {
            let r = cols[end].scaled(1.0 / ties[end].measure());
            if r.sub(&rate).norm() > 1e-9 * (1.0 + rate.norm()) {
                break;
            }
            filled += theta[end] * ties[end].measure();
            end += 1;
        }
        if filled > 0.0 {
            support.push(Interval::new(ties[k].lo, ties[k].lo + filled));
        }
        k = end;
    }
    let support = merge(support);
    debug_assert!(support.iter().all(|iv| class_at(start, &boundaries, iv.midpoint()) != Tie::Off));
    let mut sol = PrimalSolution {
        domain: problem.domain.clone(),
        l0: total_measure(&support),
        support,
        objective_value: 0.0,
        measurements: eval.dz_minimizer.clone(),
        dual_point: eval.point.clone(),
        grid: Vec::new(),
        repr: Repr::Pointwise(problem.clone()),
    };
    let (f0, _) = integrate_primal(problem, &sol, scheme);
    sol.objective_value = f0 + problem.lambda * sol.l0 + eval.block_cost;
    Ok(sol)
}

/// `argmin_{θ ∈ [0,1]^K} ‖Σ_k θ_k c_k − target‖²` by projected gradient.
fn box_least_squares(cols: &[ComplexVec], target: &ComplexVec) -> Vec<f64> {
    let k = cols.len();
    if k == 0 {
        return Vec::new();
    }
    let gram: Vec<Vec<f64>> = cols
        .iter()
        .map(|a| cols.iter().map(|b| a.inner(b)).collect())
        .collect();
    let rhs: Vec<f64> = cols.iter().map(|a| a.inner(target)).collect();
    let lip: f64 = gram.iter().enumerate().map(|(i, r)| r[i]).sum();
    if lip <= 0.0 {
        return vec![0.0; k];
    }
    let mut theta = vec![0.0; k];
    for _ in 0..20_000 {
        let mut change = 0.0_f64;
        let grad: Vec<f64> = (0..k)
            .map(|i| gram[i].iter().zip(&theta).map(|(g, t)| g * t).sum::<f64>() - rhs[i])
            .collect();
        for i in 0..k {
            let next = (theta[i] - grad[i] / lip).clamp(0.0, 1.0);
            change = change.max((next - theta[i]).abs());
            theta[i] = next;
        }
        if change < 1e-15 {
            break;
        }
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_joins_touching_intervals() {
        let m = merge(vec![
            Interval::new(0.5, 0.7),
            Interval::new(0.0, 0.2),
            Interval::new(0.2, 0.3),
            Interval::new(0.6, 0.9),
            Interval::new(0.95, 0.95),
        ]);
        assert_eq!(m, vec![Interval::new(0.0, 0.3), Interval::new(0.5, 0.9)]);
    }

    #[test]
    fn box_least_squares_hits_interior_and_clips() {
        let c1 = ComplexVec::from_real(vec![0.5, 0.0]);
        let c2 = ComplexVec::from_real(vec![0.0, -0.5]);
        let th = box_least_squares(&[c1.clone(), c2.clone()], &ComplexVec::from_real(vec![0.3, -0.2]));
        assert!((th[0] - 0.6).abs() < 1e-9 && (th[1] - 0.4).abs() < 1e-9);
        let th = box_least_squares(&[c1, c2], &ComplexVec::from_real(vec![2.0, 0.2]));
        assert_eq!(th, vec![1.0, 0.0]);
    }
}
