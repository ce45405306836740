use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::desk::{example1, example1_config, linear_lse, Example1Constraint};
use crate::domain::{total_measure, weak_duality_witness, Domain, DzSolution, PointwiseSet, RecoveryMode, SfpModel};
use crate::quadrature::{build_composite, McSampler, Rule};
use crate::scalar::ScalarResult;
use crate::spectral::build_lse;

fn real(v: &[f64]) -> ComplexVec {
    ComplexVec::from_real(v.to_vec())
}

fn point(mu: &[f64], nu: &[f64]) -> DualPoint {
    DualPoint::new(real(mu), nu.to_vec()).unwrap()
}

/// `F0 = x²`, `F = x·(1[β ≤ 1/2], 1[β > 1/2])`, `z = y`.
struct TwoCell {
    y: ComplexVec,
}

impl SfpModel for TwoCell {
    fn measurement_dim(&self) -> usize {
        2
    }
    fn constraint_count(&self) -> usize {
        0
    }
    fn objective(&self, x: f64, _beta: &[f64]) -> f64 {
        x * x
    }
    fn measure(&self, x: f64, beta: &[f64]) -> ComplexVec {
        if beta[0] <= 0.5 {
            real(&[x, 0.0])
        } else {
            real(&[0.0, x])
        }
    }
    fn constraints(&self, _z: &ComplexVec) -> Vec<f64> {
        Vec::new()
    }
    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        Ok(DzOutcome::Finite(DzSolution {
            z: self.y.clone(),
            value: -point.mu.inner(&self.y),
            constraint_values: Vec::new(),
            block_cost: 0.0,
        }))
    }
}

/// `F0 = x²`, `F = x`, `z = y`.
struct Scalar {
    y: f64,
}

impl SfpModel for Scalar {
    fn measurement_dim(&self) -> usize {
        1
    }
    fn constraint_count(&self) -> usize {
        0
    }
    fn objective(&self, x: f64, _beta: &[f64]) -> f64 {
        x * x
    }
    fn measure(&self, x: f64, _beta: &[f64]) -> ComplexVec {
        real(&[x])
    }
    fn constraints(&self, _z: &ComplexVec) -> Vec<f64> {
        Vec::new()
    }
    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        Ok(DzOutcome::Finite(DzSolution {
            z: real(&[self.y]),
            value: -point.mu.re()[0] * self.y,
            constraint_values: Vec::new(),
            block_cost: 0.0,
        }))
    }
}

/// `F0 ≡ 0`, `|x| ≤ Γ`, `F = x·h(β)` with random cosine atoms and a
/// quadratic constraint.
struct Dictionary {
    freqs: Vec<f64>,
    phases: Vec<f64>,
    y: ComplexVec,
    eps: f64,
}

impl Dictionary {
    fn atoms(&self, beta: f64) -> Vec<f64> {
        self.freqs
            .iter()
            .zip(&self.phases)
            .map(|(f, ph)| (f * beta + ph).cos())
            .collect()
    }
}

impl SfpModel for Dictionary {
    fn measurement_dim(&self) -> usize {
        self.freqs.len()
    }
    fn constraint_count(&self) -> usize {
        1
    }
    fn objective(&self, _x: f64, _beta: &[f64]) -> f64 {
        0.0
    }
    fn measure(&self, x: f64, beta: &[f64]) -> ComplexVec {
        ComplexVec::from_real(self.atoms(beta[0]).into_iter().map(|h| x * h).collect())
    }
    fn constraints(&self, z: &ComplexVec) -> Vec<f64> {
        vec![self.y.sub(z).norm_sq() - self.eps]
    }
    fn pointwise_min(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        let c: f64 = self.atoms(beta[0]).iter().zip(mu.re()).map(|(h, m)| h * m).sum();
        let g = set.bound().expect("bounded");
        Ok(if c == 0.0 {
            ScalarResult { x_star: 0.0, value: 0.0 }
        } else {
            ScalarResult {
                x_star: -g * c.signum(),
                value: -g * c.abs(),
            }
        })
    }
    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        Ok(dz_quadratic(&self.y, self.eps, &point.mu, point.nu()[0]))
    }
}

fn dictionary_problem(gamma: f64, seed: u64) -> SfpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = 3;
    let model = Dictionary {
        freqs: (0..p).map(|_| rng.random_range(1.0..12.0)).collect(),
        phases: (0..p).map(|_| rng.random_range(0.0..6.0)).collect(),
        y: ComplexVec::from_real((0..p).map(|_| rng.random_range(-0.3..0.3)).collect()),
        eps: 0.01,
    };
    SfpProblem::new(
        Domain::interval(0.0, 1.0).unwrap(),
        1.0,
        PointwiseSet::magnitude_bound(gamma).unwrap(),
        Arc::new(model),
    )
    .unwrap()
}

fn small_lse() -> SfpProblem {
    let y = [0.9, 0.3, -0.5, -1.0, -0.2, 0.6];
    let times: Vec<f64> = (0..6).map(f64::from).collect();
    build_lse(&y, &times, 1.0, 0.5, 0.1, f64::INFINITY).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, p: usize, m: usize, scale: f64) -> DualPoint {
    let mu = ComplexVec::new(
        (0..p).map(|_| rng.random_range(-scale..scale)).collect(),
        (0..p).map(|_| rng.random_range(-scale..scale)).collect(),
    )
    .unwrap();
    DualPoint::new(mu, (0..m).map(|_| rng.random_range(0.2..2.0)).collect()).unwrap()
}

/// Independent minimizer of `ν(‖y − z‖² − ε) − Re[μ^H z]` by gradient descent.
fn dz_quadratic_oracle(y: &ComplexVec, eps: f64, mu: &ComplexVec, nu: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let mut re = vec![0.0; y.len()];
    let mut im = vec![0.0; y.len()];
    let step = 0.2 / nu;
    for _ in 0..400 {
        for i in 0..y.len() {
            re[i] -= step * (2.0 * nu * (re[i] - y.re()[i]) - mu.re()[i]);
            im[i] -= step * (2.0 * nu * (im[i] - y.im()[i]) - mu.im()[i]);
        }
    }
    let mut value = -nu * eps;
    for i in 0..y.len() {
        let (dr, di) = (y.re()[i] - re[i], y.im()[i] - im[i]);
        value += nu * (dr * dr + di * di) - mu.re()[i] * re[i] - mu.im()[i] * im[i];
    }
    (re, im, value)
}

#[test]
fn origin_has_empty_support_and_value_minus_epsilon() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 32, Rule::Gauss5).unwrap();
    let e = eval_dual(&problem, &problem.initial_point(), &scheme).unwrap().finite().unwrap();
    assert!(e.support.is_empty());
    assert_eq!(e.support_measure, 0.0);
    assert!((e.value + 0.1).abs() < 1e-12, "{}", e.value);
}

#[test]
fn huge_lambda_gives_empty_support() {
    let y = [0.9, 0.3, -0.5, -1.0];
    let times: Vec<f64> = (0..4).map(f64::from).collect();
    let problem = build_lse(&y, &times, 1.0, 1e6, 0.1, f64::INFINITY).unwrap();
    let scheme = build_composite(&problem.domain, 32, Rule::Gauss5).unwrap();
    let pt = point(&[3.0, -2.0, 1.0, 0.5], &[1.0]);
    let e = eval_dual(&problem, &pt, &scheme).unwrap().finite().unwrap();
    assert!(e.support.is_empty());
    // γ^(0) = 0 for this model, so d_X = 0.
    assert!(e.dx_value.abs() < 1e-12);
}

#[test]
fn two_cell_support_is_where_margin_is_negative() {
    let model = TwoCell { y: real(&[0.1, 0.2]) };
    let problem = SfpProblem::new(Domain::interval(0.0, 1.0).unwrap(), 1.0, PointwiseSet::AllReals, Arc::new(model)).unwrap();
    let scheme = build_composite(&problem.domain, 7, Rule::Gauss5).unwrap();
    // (μᵀh)² = 9 > 4λ on [0, 1/2], 1 < 4λ on (1/2, 1].
    let e = eval_dual(&problem, &point(&[3.0, 1.0], &[]), &scheme).unwrap().finite().unwrap();
    assert_eq!(e.support.len(), 1);
    assert!(e.support[0].lo.abs() < 1e-12);
    assert!((e.support[0].hi - 0.5).abs() < 1e-6, "{:?}", e.support);
    // d = ∫_S (λ − 9/4) − μᵀy.
    let expected = 0.5 * (1.0 - 2.25) - (0.3 + 0.2);
    assert!((e.value - expected).abs() < 1e-5, "{} vs {expected}", e.value);
}

#[test]
fn value_decomposes_over_support_and_complement() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 64, Rule::Gauss5).unwrap();
    let pt = point(&[2.0, -1.0, 0.5, 1.5, -0.5, 1.0], &[0.7]);
    let e = eval_dual(&problem, &pt, &scheme).unwrap().finite().unwrap();
    assert!(!e.support.is_empty());
    assert!((e.value - (e.dx_value + e.dz_value)).abs() < 1e-12);
    assert!((total_measure(&e.support) - e.support_measure).abs() < 1e-15);
    // Dense midpoint sum of min(λ + γ°, γ^(0)) as an independent check.
    let n = 200_000;
    let (lo, hi) = (problem.domain.lower()[0], problem.domain.upper()[0]);
    let h = (hi - lo) / n as f64;
    let mut dx = 0.0;
    for j in 0..n {
        let b = [lo + h * (j as f64 + 0.5)];
        let sc = problem.pointwise_min(&pt.mu, &b).unwrap();
        dx += h * (problem.lambda + sc.value).min(problem.gamma_zero(&pt.mu, &b));
    }
    assert!((e.dx_value - dx).abs() < 1e-6, "{} vs {dx}", e.dx_value);
}

#[test]
fn dz_quadratic_examples() {
    let y = real(&[0.4, -0.3]);
    let DzOutcome::Finite(s) = dz_quadratic(&y, 0.2, &real(&[0.0, 0.0]), 1.5) else { panic!() };
    assert_eq!(s.z, y);
    assert!((s.value + 1.5 * 0.2).abs() < 1e-15);

    let DzOutcome::Finite(s) = dz_quadratic(&real(&[0.0, 0.0]), 0.3, &real(&[2.0, 0.0]), 1.0) else { panic!() };
    assert!((s.z.re()[0] - 1.0).abs() < 1e-15 && s.z.re()[1].abs() < 1e-15);
    assert!((s.value + 1.0 + 0.3).abs() < 1e-15);

    assert_eq!(dz_quadratic(&y, 0.2, &real(&[1.0, 0.0]), 0.0), DzOutcome::Unbounded);
    let DzOutcome::Finite(s) = dz_quadratic(&y, 0.2, &real(&[0.0, 0.0]), 0.0) else { panic!() };
    assert_eq!(s.z, y);
    assert_eq!(s.value, 0.0);
}

#[test]
fn dz_quadratic_matches_numeric_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let p = rng.random_range(1..6);
        let y = ComplexVec::new(
            (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
            (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let mu = ComplexVec::new(
            (0..p).map(|_| rng.random_range(-3.0..3.0)).collect(),
            (0..p).map(|_| rng.random_range(-3.0..3.0)).collect(),
        )
        .unwrap();
        let nu = rng.random_range(0.1..5.0);
        let eps = rng.random_range(0.0..1.0);
        let DzOutcome::Finite(s) = dz_quadratic(&y, eps, &mu, nu) else { panic!() };
        let (re, im, value) = dz_quadratic_oracle(&y, eps, &mu, nu);
        assert!((s.value - value).abs() < 1e-8, "{} vs {value}", s.value);
        for i in 0..p {
            assert!((s.z.re()[i] - re[i]).abs() < 1e-8 && (s.z.im()[i] - im[i]).abs() < 1e-8);
        }
        // Reported value equals the objective at the reported z.
        let direct = nu * (y.sub(&s.z).norm_sq() - eps) - mu.inner(&s.z);
        assert!((s.value - direct).abs() < 1e-12 * (1.0 + direct.abs()));
    }
}

#[test]
fn dz_generic_agrees_with_closed_form() {
    let model = Dictionary {
        freqs: vec![1.0, 2.0],
        phases: vec![0.0, 0.0],
        y: real(&[0.3, -0.1]),
        eps: 0.05,
    };
    let pt = point(&[0.4, -0.7], &[1.3]);
    let DzOutcome::Finite(a) = dz_generic(&model, &pt).unwrap() else { panic!() };
    let DzOutcome::Finite(b) = model.dz(&pt).unwrap() else { panic!() };
    assert!((a.value - b.value).abs() < 1e-6, "{} vs {}", a.value, b.value);
}

#[test]
fn empty_support_supergradient_is_minus_z() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 16, Rule::Gauss5).unwrap();
    let e = eval_dual(&problem, &problem.initial_point(), &scheme).unwrap().finite().unwrap();
    let (p_mu, p_nu) = supergradients(&problem, &e);
    assert_eq!(p_mu, e.dz_minimizer.scaled(-1.0));
    assert_eq!(p_nu, e.constraint_values);
}

#[test]
fn supergradient_inequality_and_concavity() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 64, Rule::Gauss5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let eval = |pt: &DualPoint| eval_dual(&problem, pt, &scheme).unwrap().finite().unwrap();
    for _ in 0..100 {
        let a = random_point(&mut rng, 6, 1, 3.0);
        let q = random_point(&mut rng, 6, 1, 3.0);
        let ea = eval(&a);
        let eq = eval(&q);
        let (p_mu, p_nu) = supergradients(&problem, &ea);
        let lin = p_mu.inner(&q.mu.sub(&a.mu)) + p_nu[0] * (q.nu()[0] - a.nu()[0]);
        let tol = 4.0 * ea.delta.max(eq.delta) + 1e-9;
        assert!(eq.value <= ea.value + lin + tol, "{} > {} + {lin}", eq.value, ea.value);
    }
    for _ in 0..500 {
        let a = random_point(&mut rng, 6, 1, 3.0);
        let b = random_point(&mut rng, 6, 1, 3.0);
        let mut mid_mu = a.mu.scaled(0.5);
        mid_mu.axpy(0.5, &b.mu);
        let mid = DualPoint::new(mid_mu, vec![0.5 * (a.nu()[0] + b.nu()[0])]).unwrap();
        let (ea, eb, em) = (eval(&a), eval(&b), eval(&mid));
        let tol = 4.0 * ea.delta.max(eb.delta).max(em.delta) + 1e-9;
        assert!(em.value >= 0.5 * (ea.value + eb.value) - tol);
    }
}

#[test]
fn weak_duality_against_zero_candidate() {
    // ‖y‖² < ε, so X ≡ 0 is feasible with value 0.
    let y = [0.1, -0.05, 0.08, 0.02];
    let times: Vec<f64> = (0..4).map(f64::from).collect();
    let problem = build_lse(&y, &times, 1.0, 0.5, 0.1, f64::INFINITY).unwrap();
    let scheme = build_composite(&problem.domain, 64, Rule::Gauss5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let q = random_point(&mut rng, 4, 1, 3.0);
        let e = eval_dual(&problem, &q, &scheme).unwrap().finite().unwrap();
        assert!(weak_duality_witness(0.0, e.value, 2.0 * e.delta), "{}", e.value);
    }
}

#[test]
fn ascend_converges_on_concave_quadratic() {
    let problem = SfpProblem::new(
        Domain::interval(0.0, 4.0).unwrap(),
        0.0,
        PointwiseSet::AllReals,
        Arc::new(Scalar { y: 0.7 }),
    )
    .unwrap();
    let scheme = build_composite(&problem.domain, 8, Rule::Gauss5).unwrap();
    let cfg = AscentConfig { steps: 2000, eta0: 0.1, schedule: StepSchedule::InvSqrt, ..AscentConfig::default() };
    let (pt, e, report) = ascend(&problem, &scheme, &cfg).unwrap();
    // d(μ) = −m(Ω)μ²/4 − μy, maximized at μ = −2y/m(Ω).
    assert!((pt.mu.re()[0] + 0.35).abs() < 1e-3, "{:?}", pt.mu);
    assert!((e.value - 0.1225).abs() < 1e-6);
    let best = report.best_so_far();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(report.dual_trace[report.best_t], report.best_value());
    assert!(report.dual_trace.iter().all(|d| *d <= report.best_value()));
}

#[test]
fn zero_supergradient_is_a_fixed_point() {
    let problem = SfpProblem::new(
        Domain::interval(0.0, 1.0).unwrap(),
        0.0,
        PointwiseSet::AllReals,
        Arc::new(Scalar { y: 0.0 }),
    )
    .unwrap();
    let scheme = build_composite(&problem.domain, 8, Rule::Gauss5).unwrap();
    let cfg = AscentConfig { steps: 50, eta0: 0.5, schedule: StepSchedule::Constant, ..AscentConfig::default() };
    let (pt, _, report) = ascend(&problem, &scheme, &cfg).unwrap();
    assert_eq!(pt.mu.re(), &[0.0]);
    assert!(report.dual_trace.iter().all(|d| *d == 0.0));
}

#[test]
fn early_stop_fires_at_stationary_point() {
    let problem = SfpProblem::new(
        Domain::interval(0.0, 1.0).unwrap(),
        0.0,
        PointwiseSet::AllReals,
        Arc::new(Scalar { y: 0.0 }),
    )
    .unwrap();
    let scheme = build_composite(&problem.domain, 8, Rule::Gauss5).unwrap();
    let cfg = AscentConfig { steps: 500, early_stop_tol: Some(1e-12), ..AscentConfig::default() };
    let (_, _, report) = ascend(&problem, &scheme, &cfg).unwrap();
    assert!(report.early_stopped);
    assert!(report.wall_iterations <= 11, "{}", report.wall_iterations);
}

#[test]
fn zero_delta_accepts_every_improvement() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 32, Rule::Gauss5).unwrap();
    let cfg = AscentConfig {
        steps: 60,
        eta0: 0.5,
        schedule: StepSchedule::Constant,
        acceptance: AcceptanceDelta::Fixed(0.0),
        ..AscentConfig::default()
    };
    let (pt, e, report) = ascend(&problem, &scheme, &cfg).unwrap();
    let (sol, sreport) = solve_approximate(&problem, &scheme, &cfg).unwrap();
    assert_eq!(sreport.solution_t, report.best_t);
    assert_eq!(sol.dual_point, pt);
    let direct = recover_primal(&problem, &e, &scheme, cfg.output_grid).unwrap();
    assert_eq!(sol.support, direct.support);
    assert_eq!(sol.objective_value, direct.objective_value);
    // Accepted iterations are exactly the strict running-max records after t = 0.
    let mut best = sreport.dual_trace[0];
    let records: Vec<usize> = sreport
        .dual_trace
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(t, d)| {
            if *d > best {
                best = *d;
                Some(t)
            } else {
                None
            }
        })
        .collect();
    assert_eq!(sreport.accepted_iterations, records);
}

#[test]
fn inflated_delta_freezes_solution_at_start() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 32, Rule::Gauss5).unwrap();
    let cfg = AscentConfig {
        steps: 40,
        eta0: 0.5,
        schedule: StepSchedule::Constant,
        acceptance: AcceptanceDelta::Fixed(1e6),
        ..AscentConfig::default()
    };
    let (sol, report) = solve_approximate(&problem, &scheme, &cfg).unwrap();
    assert!(report.accepted_iterations.is_empty());
    assert_eq!(report.solution_t, 0);
    assert_eq!(sol.dual_point, problem.initial_point());
    assert!(sol.support.is_empty());
    assert_eq!(sol.l0, 0.0);
    assert_eq!(sol.objective_value, 0.0);
    assert!(sol.grid.iter().all(|(_, x)| *x == 0.0));
}

#[test]
fn stochastic_with_no_steps_has_no_accepted_iterate() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 16, Rule::Gauss5).unwrap();
    let sampler = McSampler::new(problem.domain.clone(), 1, 0).unwrap();
    let cfg = AscentConfig { steps: 0, ..AscentConfig::default() };
    let err = solve_stochastic(&problem, &NodeSource::Uniform(sampler), &cfg, &scheme).unwrap_err();
    assert!(matches!(err, SfpError::NoAcceptedIterate));
}

#[test]
fn stochastic_on_midpoint_nodes_tracks_deterministic_ascent() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 400, Rule::Midpoint).unwrap();
    let cfg = AscentConfig { steps: 30, eta0: 0.5, schedule: StepSchedule::Constant, ..AscentConfig::default() };
    let (_, _, det) = ascend(&problem, &scheme, &cfg).unwrap();
    let nodes = NodeSource::Fixed(scheme.nodes().map(|b| b.to_vec()).collect());
    let (_, sto) = solve_stochastic(&problem, &nodes, &cfg, &scheme).unwrap();
    for (a, b) in det.dual_trace.iter().zip(&sto.dual_trace) {
        assert!((a - b).abs() < 1e-3 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

#[test]
fn stochastic_supergradient_is_unbiased() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 256, Rule::Gauss5).unwrap();
    let pt = point(&[2.0, -1.0, 0.5, 1.5, -0.5, 1.0], &[0.7]);
    let e = eval_dual(&problem, &pt, &scheme).unwrap().finite().unwrap();
    let (exact, _) = supergradients(&problem, &e);
    let sampler = McSampler::new(problem.domain.clone(), 8, 99).unwrap();
    let runs: u64 = 200;
    let p = problem.p();
    let mut sum = vec![0.0; p];
    let mut sum_sq = vec![0.0; p];
    for k in 0..runs {
        let (g, _) = stochastic_supergradient(&problem, &pt, &sampler.nodes(k)).unwrap().unwrap();
        for i in 0..p {
            sum[i] += g.re()[i];
            sum_sq[i] += g.re()[i] * g.re()[i];
        }
    }
    for i in 0..p {
        let mean = sum[i] / runs as f64;
        let var = (sum_sq[i] / runs as f64 - mean * mean) * runs as f64 / (runs - 1) as f64;
        let se = (var / runs as f64).sqrt();
        assert!((mean - exact.re()[i]).abs() <= 4.0 * se + 1e-9, "coord {i}: {mean} vs {}", exact.re()[i]);
    }
}

#[test]
fn empty_support_recovers_zero() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 16, Rule::Gauss5).unwrap();
    let e = eval_dual(&problem, &problem.initial_point(), &scheme).unwrap().finite().unwrap();
    let sol = recover_primal(&problem, &e, &scheme, 11).unwrap();
    assert_eq!(sol.l0, 0.0);
    assert_eq!(sol.objective_value, 0.0);
    assert_eq!(sol.grid.len(), 11);
    assert!(sol.grid.iter().all(|(_, x)| *x == 0.0));
}

#[test]
fn recovered_support_matches_evaluation() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 64, Rule::Gauss5).unwrap();
    let pt = point(&[2.0, -1.0, 0.5, 1.5, -0.5, 1.0], &[0.7]);
    let e = eval_dual(&problem, &pt, &scheme).unwrap().finite().unwrap();
    let sol = recover_primal(&problem, &e, &scheme, 501).unwrap();
    assert_eq!(sol.support, e.support);
    assert_eq!(sol.l0, e.support_measure);
    for (b, x) in &sol.grid {
        if !sol.in_support(*b) {
            assert_eq!(*x, 0.0);
        }
        assert!(problem.pointwise_set.contains(*x));
    }
}

#[test]
fn example1_recovers_saturated_intervals() {
    let (gamma, y) = (1.0, [0.3, -0.2]);
    let problem = example1(gamma, y, Example1Constraint::Equality).unwrap();
    let scheme = build_composite(&problem.domain, 64, Rule::Gauss5).unwrap();
    let (sol, report) = solve_approximate(&problem, &scheme, &example1_config()).unwrap();
    assert!((report.best_value() - 0.5).abs() < 1e-3);
    let left: f64 = sol.support.iter().map(|iv| (iv.hi.min(0.5) - iv.lo.min(0.5)).max(0.0)).sum();
    let right: f64 = sol.support.iter().map(|iv| (iv.hi.max(0.5) - iv.lo.max(0.5)).max(0.0)).sum();
    assert!((left - y[0].abs() / gamma).abs() < 1e-3, "{:?}", sol.support);
    assert!((right - y[1].abs() / gamma).abs() < 1e-3, "{:?}", sol.support);
    for (b, x) in &sol.grid {
        if sol.in_support(*b) {
            let want = if *b <= 0.5 { gamma * y[0].signum() } else { gamma * y[1].signum() };
            assert_eq!(*x, want);
        }
    }
    assert!(matches!(problem.recovery, RecoveryMode::FillTies { .. }));
}

#[test]
fn lse_optimum_satisfies_complementary_slackness() {
    let desk = linear_lse().unwrap();
    let scheme = build_composite(&desk.problem.domain, desk.cells, Rule::Gauss5).unwrap();
    let (pt, e, _) = ascend(&desk.problem, &scheme, &desk.config).unwrap();
    let (p_mu, p_nu) = supergradients(&desk.problem, &e);
    assert!(p_mu.norm() < 1e-3, "{}", p_mu.norm());
    assert!((p_nu[0] * pt.nu()[0]).abs() < 1e-3);
}

#[test]
fn l1_dual_at_origin_is_w() {
    let problem = dictionary_problem(2.0, 1);
    let scheme = build_composite(&problem.domain, 32, Rule::Gauss5).unwrap();
    let pt = point(&[0.0, 0.0, 0.0], &[1.3]);
    let (d1, _) = eval_dual_l1(&problem, &pt, &scheme).unwrap().unwrap();
    let DzOutcome::Finite(w) = problem.dz(&pt).unwrap() else { panic!() };
    assert!((d1 - w.value).abs() < 1e-15);
    let (res, _) = check_l0_l1_scaling(&problem, &pt, &scheme).unwrap();
    assert!(res < 1e-15);
}

#[test]
fn scaling_identity_on_random_dictionary() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for seed in 0..4 {
        let gamma = rng.random_range(0.5..3.0);
        let problem = dictionary_problem(gamma, seed);
        let scheme = build_composite(&problem.domain, 48, Rule::Gauss5).unwrap();
        for _ in 0..25 {
            let mut pt = random_point(&mut rng, 3, 1, 1.5);
            pt.mu = ComplexVec::from_real(pt.mu.re().to_vec());
            let (res, delta) = check_l0_l1_scaling(&problem, &pt, &scheme).unwrap();
            assert!(res <= 2.0 * delta + 1e-12, "{res} > 2·{delta}");
        }
    }
}

#[test]
fn scaling_check_rejects_unsaturated_minimizers() {
    let y = [0.9, 0.3];
    let times = [0.0, 1.0];
    let problem = build_lse(&y, &times, 1.0, 0.5, 0.1, 1.0).unwrap();
    let mut problem = problem;
    problem.pointwise_set = PointwiseSet::magnitude_bound(50.0).unwrap();
    let scheme = build_composite(&problem.domain, 32, Rule::Gauss5).unwrap();
    let err = check_l0_l1_scaling(&problem, &point(&[1.0, 0.5], &[1.0]), &scheme).unwrap_err();
    assert!(matches!(err, SfpError::SaturationViolated { .. }));
}

#[test]
fn error_constant_examples() {
    let y = [0.5, -0.25];
    let times = [0.0, 1.0];
    let zero = build_lse(&y, &times, 1.0, 0.0, 0.1, f64::INFINITY).unwrap();
    assert_eq!(error_bound_constant(&zero, 1.0, 0.05, 0.0).unwrap(), 0.0);

    let problem = build_lse(&y, &times, 1.0, 2.0, 0.1, f64::INFINITY).unwrap();
    let c = error_bound_constant(&problem, 1.0, 0.05, 0.3).unwrap();
    // g(±1) = (0.5 ∓ 1)² + (−0.25 ∓ 1)² − 0.1.
    let g_plus = 0.25 + 1.5625 - 0.1;
    let g_minus = 2.25 + 0.5625 - 0.1;
    let expected = (0.3 + 2.0 * 0.5) / 0.05 * f64::max(g_plus, g_minus);
    assert!((c - expected).abs() < 1e-12 * expected, "{c} vs {expected}");
    assert!(error_bound_constant(&problem, 0.0, 0.05, 0.3).is_err());
    assert!(error_bound_constant(&problem, 1.0, 0.0, 0.3).is_err());
}

#[test]
fn outside_domain_point_is_reported() {
    let problem = small_lse();
    let scheme = build_composite(&problem.domain, 16, Rule::Gauss5).unwrap();
    let out = eval_dual(&problem, &point(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0]), &scheme).unwrap();
    assert!(matches!(out, DualOutcome::OutsideDomain));
}
