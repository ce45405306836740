//! Small built-in instances used by the property checks, the CLI and the tests.

use std::sync::Arc;

use crate::domain::{ComplexVec, Domain, DualPoint, DzOutcome, DzSolution, PointwiseSet, RecoveryMode, SfpModel, SfpProblem};
use crate::dual::{dz_quadratic, AcceptanceDelta, AscentConfig, StepSchedule};
use crate::error::{Result, SfpError};
use crate::fda::{build_rfda, synthetic_ecg_like, FunctionalSample};
use crate::scalar::ScalarResult;
use crate::spectral::{build_lse, integer_times, synthesize, SinusoidScene};

/// How the two measurements of the two-cell instance are constrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Example1Constraint {
    /// `z = y`, no multipliers `ν`.
    Equality,
    /// `‖y − z‖² ≤ ε`.
    Quadratic { epsilon: f64 },
}

/// The two-cell instance on `Ω = [0, 1]`: `F(x, β) = x·(1[β ≤ 1/2], 1[β > 1/2])`,
/// `|x| ≤ Γ`, and either `F0 ≡ 0` with `λ = 1` or `F0 = |x|` with `λ = 0`.
#[derive(Debug, Clone)]
pub struct Example1Model {
    y: ComplexVec,
    gamma: f64,
    l1: bool,
    constraint: Example1Constraint,
}

fn indicator(beta: f64) -> (f64, f64) {
    if beta <= 0.5 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    }
}

impl SfpModel for Example1Model {
    fn measurement_dim(&self) -> usize {
        2
    }

    fn constraint_count(&self) -> usize {
        match self.constraint {
            Example1Constraint::Equality => 0,
            Example1Constraint::Quadratic { .. } => 1,
        }
    }

    fn objective(&self, x: f64, _beta: &[f64]) -> f64 {
        if self.l1 {
            x.abs()
        } else {
            0.0
        }
    }

    fn measure(&self, x: f64, beta: &[f64]) -> ComplexVec {
        let (a, b) = indicator(beta[0]);
        ComplexVec::from_real(vec![x * a, x * b])
    }

    fn constraints(&self, z: &ComplexVec) -> Vec<f64> {
        match self.constraint {
            Example1Constraint::Equality => Vec::new(),
            Example1Constraint::Quadratic { epsilon } => vec![self.y.sub(z).norm_sq() - epsilon],
        }
    }

    fn pointwise_min(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        let (a, b) = indicator(beta[0]);
        let c = mu.re()[0] * a + mu.re()[1] * b;
        let gamma = set.bound().unwrap_or(self.gamma);
        let edge = ScalarResult {
            x_star: -gamma * c.signum(),
            value: if self.l1 { gamma * (1.0 - c.abs()) } else { -gamma * c.abs() },
        };
        let zero = ScalarResult {
            x_star: 0.0,
            value: 0.0,
        };
        Ok(if c != 0.0 && edge.value < 0.0 { edge } else { zero })
    }

    fn support_candidate(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        let (a, b) = indicator(beta[0]);
        let c = mu.re()[0] * a + mu.re()[1] * b;
        let gamma = set.bound().unwrap_or(self.gamma);
        let x = if c > 0.0 { -gamma } else { gamma };
        Ok(ScalarResult {
            x_star: x,
            value: self.objective(x, beta) + c * x,
        })
    }

    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        match self.constraint {
            Example1Constraint::Equality => Ok(DzOutcome::Finite(DzSolution {
                z: self.y.clone(),
                value: -point.mu.inner(&self.y),
                constraint_values: Vec::new(),
                block_cost: 0.0,
            })),
            Example1Constraint::Quadratic { epsilon } => Ok(dz_quadratic(&self.y, epsilon, &point.mu, point.nu()[0])),
        }
    }
}

/// `P_0` (sparsity) form of the two-cell instance.
pub fn example1(gamma: f64, y: [f64; 2], constraint: Example1Constraint) -> Result<SfpProblem> {
    example1_problem(gamma, y, constraint, false)
}

/// `P_1` (magnitude) form of the two-cell instance.
pub fn example1_l1(gamma: f64, y: [f64; 2], constraint: Example1Constraint) -> Result<SfpProblem> {
    example1_problem(gamma, y, constraint, true)
}

fn example1_problem(gamma: f64, y: [f64; 2], constraint: Example1Constraint, l1: bool) -> Result<SfpProblem> {
    if !(gamma > 0.0) {
        return Err(SfpError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if y.iter().any(|v| !(v.abs() < 0.5 * gamma)) {
        return Err(SfpError::InvalidArgument(format!(
            "need |y1|, |y2| < gamma/2, got y = ({}, {}) with gamma = {gamma}",
            y[0], y[1]
        )));
    }
    let model = Example1Model {
        y: ComplexVec::from_real(y.to_vec()),
        gamma,
        l1,
        constraint,
    };
    let lambda = if l1 { 0.0 } else { 1.0 };
    let problem = SfpProblem::new(
        Domain::interval(0.0, 1.0)?,
        lambda,
        PointwiseSet::magnitude_bound(gamma)?,
        Arc::new(model),
    )?;
    Ok(problem.with_recovery(RecoveryMode::FillTies { tolerance: 0.05 }))
}

/// Solver settings for the two-cell instance.
pub fn example1_config() -> AscentConfig {
    AscentConfig {
        steps: 4000,
        eta0: 0.5,
        schedule: StepSchedule::InvSqrt,
        early_stop_tol: None,
        max_backtracks: 30,
        acceptance: AcceptanceDelta::Live,
        output_grid: 1001,
    }
}

/// A named instance with its solver settings.
#[derive(Debug, Clone)]
pub struct DeskInstance {
    pub name: &'static str,
    pub problem: SfpProblem,
    pub config: AscentConfig,
    pub cells: usize,
}

/// Linear line spectral instance: 8 samples, one component.
pub fn linear_lse() -> Result<DeskInstance> {
    let (y, times, eps) = linear_lse_data()?;
    Ok(DeskInstance {
        name: "linear-lse",
        problem: build_lse(&y, &times, 1.0, 2.0, eps, f64::INFINITY)?,
        config: AscentConfig {
            steps: 600,
            eta0: 1.0,
            schedule: StepSchedule::Constant,
            ..AscentConfig::default()
        },
        cells: 128,
    })
}

/// Samples, times and `ε` of the linear line spectral instance.
pub fn linear_lse_data() -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let scene = SinusoidScene::new(vec![0.15], vec![1.0], integer_times(0, 7), 0.1, f64::INFINITY)?;
    let y = synthesize(&scene, 11);
    Ok((y, scene.times, 8.0 * scene.noise_var))
}

/// Saturated line spectral instance: 8 samples, one component above `r = 1`.
pub fn saturated_lse() -> Result<DeskInstance> {
    let scene = SinusoidScene::new(vec![0.15], vec![1.5], integer_times(0, 7), 0.1, 1.0)?;
    let y = synthesize(&scene, 11);
    let eps = 8.0 * scene.noise_var;
    Ok(DeskInstance {
        name: "saturated-lse",
        problem: build_lse(&y, &scene.times, 5.0, 2.0, eps, 1.0)?,
        config: AscentConfig {
            steps: 3000,
            eta0: 0.03,
            schedule: StepSchedule::Constant,
            ..AscentConfig::default()
        },
        cells: 256,
    })
}

/// Robust functional logistic instance on ten synthetic series.
pub fn rfda() -> Result<DeskInstance> {
    let samples: Vec<FunctionalSample> = synthetic_ecg_like(10, 17, 0.3, 5)?;
    Ok(DeskInstance {
        name: "rfda",
        problem: build_rfda(&samples, 0.5, 4.0, 6.0)?,
        config: AscentConfig {
            steps: 2000,
            eta0: 0.2,
            schedule: StepSchedule::Constant,
            ..AscentConfig::default()
        },
        cells: 512,
    })
}

/// All desk instances.
pub fn all() -> Result<Vec<DeskInstance>> {
    Ok(vec![linear_lse()?, saturated_lse()?, rfda()?])
}
