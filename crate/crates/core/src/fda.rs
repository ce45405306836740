//! Robust functional logistic regression.
//!
//! Each series `Z_i` on `[0, 1]` scores `∫ ρ[Z_i(τ) W(τ)] dτ`; the weight
//! function `W` is the sparse unknown and the summed logistic loss is the
//! single constraint. The intercept is a finite-dimensional variable of the
//! measurement block.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{ComplexVec, Domain, DualPoint, DzOutcome, DzSolution, Interval, PointwiseSet, SfpModel, SfpProblem};
use crate::dual::{solve_approximate, AscentConfig, PrimalSolution, SolveReport};
use crate::error::{Result, SfpError};
use crate::quadrature::{build_composite, QuadratureScheme, Rule};
use crate::scalar::{quadratic_linear, saturate, solve_saturated_cosine, ScalarResult};

/// A labeled series, linearly interpolated between knots on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    knots: Vec<f64>,
    values: Vec<f64>,
    pub label: u8,
}

impl FunctionalSample {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, label: u8) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(SfpError::DimensionMismatch {
                expected: knots.len(),
                found: values.len(),
            });
        }
        if knots.len() < 2 {
            return Err(SfpError::InvalidArgument("a series needs at least two knots".into()));
        }
        if knots[0] != 0.0 || *knots.last().expect("nonempty") != 1.0 {
            return Err(SfpError::InvalidArgument("knots must span exactly [0, 1]".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SfpError::InvalidArgument("knots must be strictly increasing".into()));
        }
        if label > 1 {
            return Err(SfpError::InvalidArgument(format!("label must be 0 or 1, got {label}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SfpError::InvalidArgument("series values must be finite".into()));
        }
        Ok(Self { knots, values, label })
    }

    /// Values at `n` equally spaced knots `0, 1/(n−1), …, 1`.
    pub fn uniform(values: Vec<f64>, label: u8) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(SfpError::InvalidArgument("a series needs at least two knots".into()));
        }
        let knots = (0..n)
            .map(|j| if j + 1 == n { 1.0 } else { j as f64 / (n - 1) as f64 })
            .collect();
        Self::new(knots, values, label)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation at `tau ∈ [0, 1]`.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(SfpError::InvalidArgument(format!("tau = {tau} outside [0, 1]")));
        }
        Ok(self.interp(tau))
    }

    fn interp(&self, tau: f64) -> f64 {
        let k = self.knots.partition_point(|t| *t <= tau).clamp(1, self.knots.len() - 1);
        let (t0, t1) = (self.knots[k - 1], self.knots[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (tau - t0) / (t1 - t0)
    }
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn logit(q: f64) -> f64 {
    (q / (1.0 - q)).ln()
}

fn binary_entropy(q: f64) -> f64 {
    -(q * q.ln() + (1.0 - q) * (1.0 - q).ln())
}

/// Minimizer of the logistic `z`-subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticDz {
    /// Measurements `z_i = u_i − b`.
    pub z: Vec<f64>,
    /// Fitted intercept; the logit of sample `i` is `z_i + b`.
    pub b: f64,
    pub value: f64,
    /// `Σ_i log(1 + exp(s_i (z_i + b))) − ε̃`.
    pub constraint_value: f64,
}

/// `min_{z, b} ν Σ_i log(1 + exp(s_i (z_i + b))) + b² − Σ_i μ_i z_i − ν ε̃`
/// with `s_i = 1 − 2 y_i`; `None` when it is unbounded below, which happens
/// unless every `μ_i s_i / ν` lies in `(0, 1)`.
pub fn dz_logistic(labels: &[u8], mu: &[f64], nu: f64, eps_tilde: f64) -> Option<LogisticDz> {
    debug_assert_eq!(labels.len(), mu.len());
    if !(nu > 0.0) {
        return None;
    }
    let sum_mu: f64 = mu.iter().sum();
    let b = -0.5 * sum_mu;
    let mut z = Vec::with_capacity(mu.len());
    let mut value = -0.25 * sum_mu * sum_mu - nu * eps_tilde;
    let mut loss = 0.0;
    for (y, m) in labels.iter().zip(mu) {
        let s = 1.0 - 2.0 * f64::from(*y);
        let q = m * s / nu;
        if !(q > 0.0 && q < 1.0) {
            return None;
        }
        let u = s * logit(q);
        value += nu * binary_entropy(q);
        loss += -(1.0 - q).ln();
        z.push(u - b);
    }
    Some(LogisticDz {
        z,
        b,
        value,
        constraint_value: loss - eps_tilde,
    })
}

/// `F0 = w²`, `F_i = ρ[Z_i(τ) w]`, logistic loss constraint.
#[derive(Debug, Clone)]
pub struct RfdaModel {
    samples: Vec<FunctionalSample>,
    labels: Vec<u8>,
    r: f64,
    eps_tilde: f64,
}

impl RfdaModel {
    fn series_at(&self, tau: f64) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| s.interp(tau))
    }
}

impl SfpModel for RfdaModel {
    fn measurement_dim(&self) -> usize {
        self.samples.len()
    }

    fn constraint_count(&self) -> usize {
        1
    }

    fn objective(&self, x: f64, _beta: &[f64]) -> f64 {
        x * x
    }

    fn measure(&self, x: f64, beta: &[f64]) -> ComplexVec {
        ComplexVec::from_real(self.series_at(beta[0]).map(|z| saturate(z * x, self.r)).collect())
    }

    /// Evaluated at intercept `b = 0`.
    fn constraints(&self, z: &ComplexVec) -> Vec<f64> {
        let loss: f64 = self
            .labels
            .iter()
            .zip(z.re())
            .map(|(y, zi)| softplus((1.0 - 2.0 * f64::from(*y)) * zi))
            .sum();
        vec![loss - self.eps_tilde]
    }

    fn pointwise_min(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        if self.r.is_infinite() {
            let c: f64 = mu.re().iter().zip(self.series_at(beta[0])).map(|(m, z)| m * z).sum();
            Ok(quadratic_linear(c, set))
        } else {
            let h: Vec<f64> = self.series_at(beta[0]).collect();
            Ok(solve_saturated_cosine(mu.re(), &h, self.r, set))
        }
    }

    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        if point.mu.im().iter().any(|v| *v != 0.0) {
            return Ok(DzOutcome::Unbounded);
        }
        Ok(match dz_logistic(&self.labels, point.mu.re(), point.nu()[0], self.eps_tilde) {
            Some(d) => DzOutcome::Finite(DzSolution {
                z: ComplexVec::from_real(d.z),
                value: d.value,
                constraint_values: vec![d.constraint_value],
                block_cost: d.b * d.b,
            }),
            None => DzOutcome::Unbounded,
        })
    }

    /// `μ_i = s_i / 2`, `ν = 1`: the center of the dual domain.
    fn initial_point(&self) -> DualPoint {
        let mu = self.labels.iter().map(|y| 0.5 * (1.0 - 2.0 * f64::from(*y))).collect();
        DualPoint::new(ComplexVec::from_real(mu), vec![1.0]).expect("nu is positive")
    }
}

/// Builds the training problem on `Ω = [0, 1]`; `r = ∞` gives the plain model.
pub fn build_rfda(samples: &[FunctionalSample], lambda: f64, r: f64, eps_tilde: f64) -> Result<SfpProblem> {
    if samples.len() < 2 {
        return Err(SfpError::InvalidArgument("need at least two samples".into()));
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    if labels.iter().all(|l| *l == labels[0]) {
        return Err(SfpError::SingleClass);
    }
    if !(r > 0.0) || !(eps_tilde > 0.0) {
        return Err(SfpError::InvalidArgument(format!(
            "need r > 0 and a positive loss budget, got r = {r}, eps = {eps_tilde}"
        )));
    }
    let model = RfdaModel {
        samples: samples.to_vec(),
        labels,
        r,
        eps_tilde,
    };
    SfpProblem::new(Domain::interval(0.0, 1.0)?, lambda, PointwiseSet::AllReals, Arc::new(model))
}

/// Trained classifier. Scores are `σ(∫ρ[Z W] − b)`.
#[derive(Debug, Clone)]
pub struct RobustClassifier {
    pub weights: PrimalSolution,
    /// Intercept in the `σ(∫ρ[Z W] − b)` convention.
    pub b: f64,
    pub r: f64,
    pub lambda: f64,
    pub support: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub r: f64,
    pub eps_tilde: f64,
    pub cells: usize,
    pub rule: Rule,
    pub ascent: AscentConfig,
}

/// Fits `W` and `b` with the approximate supergradient solver.
pub fn train(samples: &[FunctionalSample], cfg: &TrainConfig) -> Result<(RobustClassifier, SolveReport)> {
    let problem = build_rfda(samples, cfg.lambda, cfg.r, cfg.eps_tilde)?;
    let scheme = build_composite(&problem.domain, cfg.cells, cfg.rule)?;
    let (weights, report) = solve_approximate(&problem, &scheme, &cfg.ascent)?;
    let b_fit = -0.5 * weights.dual_point.mu.re().iter().sum::<f64>();
    Ok((
        RobustClassifier {
            support: weights.support.clone(),
            weights,
            b: -b_fit,
            r: cfg.r,
            lambda: cfg.lambda,
        },
        report,
    ))
}

impl RobustClassifier {
    /// `W` at the scheme's nodes.
    pub fn weights_on(&self, scheme: &QuadratureScheme) -> Vec<f64> {
        scheme.nodes().map(|b| self.weights.evaluate(b[0])).collect()
    }

    /// `∫ ρ[Z(τ) W(τ)] dτ` with `W` pre-tabulated on the scheme.
    pub fn inner(&self, z: &FunctionalSample, scheme: &QuadratureScheme, w: &[f64]) -> f64 {
        scheme
            .nodes()
            .zip(scheme.weights())
            .zip(w)
            .map(|((b, q), wj)| q * saturate(z.interp(b[0]) * wj, self.r))
            .sum()
    }

    fn proba_with(&self, z: &FunctionalSample, scheme: &QuadratureScheme, w: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.inner(z, scheme, w) + self.b).exp())
    }
}

/// `P(y = 1 | Z) = 1 / (1 + exp(−∫ρ[Z W] + b))`.
pub fn predict_proba(clf: &RobustClassifier, z: &FunctionalSample, scheme: &QuadratureScheme) -> f64 {
    let w = clf.weights_on(scheme);
    clf.proba_with(z, scheme, &w)
}

/// Scores for a batch, tabulating `W` once.
pub fn predict_batch(clf: &RobustClassifier, samples: &[FunctionalSample], scheme: &QuadratureScheme) -> Vec<f64> {
    let w = clf.weights_on(scheme);
    samples.iter().map(|s| clf.proba_with(s, scheme, &w)).collect()
}

/// Adds `±magnitude` to `⌈fraction · #knots⌉` random knot values of every series.
pub fn corrupt_impulsive(samples: &[FunctionalSample], fraction: f64, magnitude: f64, seed: u64) -> Result<Vec<FunctionalSample>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SfpError::InvalidArgument(format!("fraction must be in [0, 1], got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(samples
        .iter()
        .map(|s| {
            let n = s.values.len();
            let count = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
            let mut out = s.clone();
            for j in sample_indices(&mut rng, n, count.min(n)) {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                out.values[j] += sign * magnitude;
            }
            out
        })
        .collect())
}

/// Accuracy at threshold 1/2 and, when both labels are present, the ROC
/// curve and its area.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub roc: Option<Vec<(f64, f64)>>,
    pub auc: Option<f64>,
}

/// ROC points `(fpr, tpr)` from sweeping thresholds over the unique scores.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Option<(Vec<(f64, f64)>, f64)> {
    let pos = labels.iter().filter(|l| **l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]));
    let mut roc = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        roc.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = roc.windows(2).map(|w| (w[1].0 - w[0].0) * 0.5 * (w[1].1 + w[0].1)).sum();
    Some((roc, auc))
}

pub fn evaluate(clf: &RobustClassifier, test: &[FunctionalSample], scheme: &QuadratureScheme) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(SfpError::InvalidArgument("empty test set".into()));
    }
    let scores = predict_batch(clf, test, scheme);
    Ok(evaluate_scores(&scores, &test.iter().map(|s| s.label).collect::<Vec<_>>()))
}

pub fn evaluate_scores(scores: &[f64], labels: &[u8]) -> Evaluation {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| (**s >= 0.5) == (**l == 1))
        .count();
    let (roc, auc) = match roc_curve(scores, labels) {
        Some((r, a)) => (Some(r), Some(a)),
        None => (None, None),
    };
    Evaluation {
        accuracy: correct as f64 / scores.len() as f64,
        roc,
        auc,
    }
}

fn bump(t: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((t - center) / width).powi(2)).exp()
}

/// Heartbeat-like two-class series on `knots` uniform knots.
///
/// Both classes share an R peak near `τ = 0.2`; class 1 additionally dips
/// on `[0.25, 0.4]` and rises on `[0.4, 0.6]`, class 0 shows a weaker, late
/// rise. Amplitudes are jittered per series and white noise of standard
/// deviation `noise` is added. Labels alternate so both classes are present.
pub fn synthetic_ecg_like(n: usize, knots: usize, noise: f64, seed: u64) -> Result<Vec<FunctionalSample>> {
    if n < 2 || knots < 2 {
        return Err(SfpError::InvalidArgument("need at least two series of two knots".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).map_err(|e| SfpError::InvalidArgument(e.to_string()))?;
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let jitter: f64 = rng.random_range(0.6..1.4);
            let shift: f64 = rng.random_range(-0.02..0.02);
            let values = (0..knots)
                .map(|j| {
                    let t = j as f64 / (knots - 1) as f64;
                    let base = 2.5 * bump(t, 0.2 + shift, 0.025) - 0.4 * (2.0 * PI * t).sin();
                    let class = if label == 1 {
                        -1.0 * bump(t, 0.32 + shift, 0.05) + 1.0 * bump(t, 0.5 + shift, 0.07)
                    } else {
                        0.2 * bump(t, 0.32 + shift, 0.05) + 0.3 * bump(t, 0.62 + shift, 0.07)
                    };
                    base + jitter * class + normal.sample(&mut rng)
                })
                .collect();
            FunctionalSample::uniform(values, label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_linear_between_knots() {
        let s = FunctionalSample::new(vec![0.0, 0.25, 1.0], vec![1.0, 3.0, 0.0], 1).unwrap();
        assert_eq!(s.eval(0.0).unwrap(), 1.0);
        assert_eq!(s.eval(0.125).unwrap(), 2.0);
        assert!((s.eval(0.625).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(s.eval(1.0).unwrap(), 0.0);
        assert!(s.eval(1.0001).is_err() && s.eval(-0.1).is_err());
        assert!(FunctionalSample::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4], 0).is_err());
        assert!(FunctionalSample::new(vec![0.1, 1.0], vec![0.0; 2], 0).is_err());
    }

    #[test]
    fn dz_logistic_domain_and_center() {
        let labels = [0u8, 1, 1, 0];
        let nu = 2.0;
        let mu: Vec<f64> = labels.iter().map(|y| 0.5 * nu * (1.0 - 2.0 * f64::from(*y))).collect();
        let d = dz_logistic(&labels, &mu, nu, 3.0).unwrap();
        for (z, _) in d.z.iter().zip(&labels) {
            assert!((z + d.b).abs() < 1e-15);
        }
        assert!(dz_logistic(&labels, &[0.0, -1.0, -1.0, 1.0], nu, 3.0).is_none());
        assert!(dz_logistic(&labels, &[2.0, -1.0, -1.0, 1.0], nu, 3.0).is_none());
        assert!(dz_logistic(&labels, &mu, 0.0, 3.0).is_none());
    }

    #[test]
    fn build_rfda_rejects_single_class() {
        let a = FunctionalSample::uniform(vec![1.0, 1.0], 1).unwrap();
        assert!(matches!(build_rfda(&[a.clone(), a], 0.0, 4.0, 1.0), Err(SfpError::SingleClass)));
    }

    #[test]
    fn corruption_counts() {
        let s = synthetic_ecg_like(4, 96, 0.1, 1).unwrap();
        assert_eq!(corrupt_impulsive(&s, 0.0, 20.0, 3).unwrap(), s);
        assert_eq!(corrupt_impulsive(&s, 1.0, 0.0, 3).unwrap(), s);
        let c = corrupt_impulsive(&s, 0.1, 20.0, 3).unwrap();
        for (a, b) in s.iter().zip(&c) {
            let diff = a.values().iter().zip(b.values()).filter(|(x, y)| x != y).count();
            assert_eq!(diff, 10);
        }
        assert_eq!(c, corrupt_impulsive(&s, 0.1, 20.0, 3).unwrap());
    }

    #[test]
    fn perfect_scores_give_unit_auc() {
        let e = evaluate_scores(&[1.0, 1.0, 0.0, 0.0], &[1, 1, 0, 0]);
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.auc, Some(1.0));
        let e = evaluate_scores(&[0.7, 0.2], &[1, 1]);
        assert!(e.roc.is_none() && e.auc.is_none());
        assert_eq!(e.accuracy, 0.5);
    }

    #[test]
    fn tied_scores_form_one_roc_step() {
        let (roc, auc) = roc_curve(&[0.5, 0.5, 0.5, 0.5], &[1, 0, 1, 0]).unwrap();
        assert_eq!(roc, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!((auc - 0.5).abs() < 1e-15);
    }
}
