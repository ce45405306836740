//! Nonlinear line spectral estimation.
//!
//! Samples `y_i = Σ_k ρ[a_k cos(2π f_k t_i)] + n_i` are explained by a sparse
//! function `X` on `[0, 1/2]` through `ŷ_i = ∫ B ρ[X(φ) cos(2π φ t_i)] dφ`.
//! A component of amplitude `a` at `f` corresponds to a bump `X = a` of width
//! `1/B` around `f`, and is read back as `â = B ∫_bump X`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{ComplexVec, Domain, DualPoint, DzOutcome, Interval, PointwiseSet, SfpModel, SfpProblem};
use crate::dual::{dz_quadratic, PrimalSolution};
use crate::error::{Result, SfpError};
use crate::quadrature::Rule;
use crate::scalar::{quadratic_linear, saturate, solve_saturated_cosine, ScalarResult};

/// Ground truth of a synthetic experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidScene {
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    pub times: Vec<f64>,
    pub noise_var: f64,
    /// Saturation level; `f64::INFINITY` for the linear model.
    pub r: f64,
}

impl SinusoidScene {
    pub fn new(freqs: Vec<f64>, amps: Vec<f64>, times: Vec<f64>, noise_var: f64, r: f64) -> Result<Self> {
        if freqs.len() != amps.len() {
            return Err(SfpError::DimensionMismatch {
                expected: freqs.len(),
                found: amps.len(),
            });
        }
        if let Some(f) = freqs.iter().find(|f| !(0.0..=0.5).contains(*f)) {
            return Err(SfpError::InvalidArgument(format!("frequency {f} outside [0, 1/2]")));
        }
        if !(noise_var >= 0.0) || !(r > 0.0) {
            return Err(SfpError::InvalidArgument(format!(
                "need noise variance >= 0 and r > 0, got {noise_var} and {r}"
            )));
        }
        Ok(Self {
            freqs,
            amps,
            times,
            noise_var,
            r,
        })
    }

    /// Random scene with `k` components at pairwise spacing `>= min_spacing`.
    ///
    /// Frequencies are drawn in `[min_spacing/2, 1/2 − min_spacing/2]` and
    /// amplitudes uniformly in `amp_range`.
    pub fn random(
        k: usize,
        times: Vec<f64>,
        min_spacing: f64,
        amp_range: (f64, f64),
        noise_var: f64,
        r: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (0.5 * min_spacing, 0.5 - 0.5 * min_spacing);
        if hi <= lo || (k > 1 && (k - 1) as f64 * min_spacing > hi - lo) {
            return Err(SfpError::InvalidArgument(format!(
                "{k} components do not fit at spacing {min_spacing}"
            )));
        }
        let mut freqs: Vec<f64> = Vec::with_capacity(k);
        let mut attempts = 0;
        while freqs.len() < k {
            attempts += 1;
            if attempts > 1_000_000 {
                return Err(SfpError::InvalidArgument("could not place frequencies".into()));
            }
            let f = rng.random_range(lo..hi);
            if freqs.iter().all(|g| (f - g).abs() >= min_spacing) {
                freqs.push(f);
            }
        }
        freqs.sort_by(f64::total_cmp);
        let amps = (0..k).map(|_| rng.random_range(amp_range.0..=amp_range.1)).collect();
        Self::new(freqs, amps, times, noise_var, r)
    }

    /// Noise-free samples `Σ_k ρ[a_k cos(2π f_k t_i)]`.
    pub fn clean(&self) -> Vec<f64> {
        self.times
            .iter()
            .map(|t| {
                self.freqs
                    .iter()
                    .zip(&self.amps)
                    .map(|(f, a)| saturate(a * (2.0 * PI * f * t).cos(), self.r))
                    .sum()
            })
            .collect()
    }
}

/// Integer sample times `t_0, t_0 + 1, …, t_1`.
pub fn integer_times(t0: i64, t1: i64) -> Vec<f64> {
    (t0..=t1).map(|t| t as f64).collect()
}

/// Samples with i.i.d. Gaussian noise of variance `noise_var`.
pub fn synthesize(scene: &SinusoidScene, seed: u64) -> Vec<f64> {
    let mut y = scene.clean();
    if scene.noise_var > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scene.noise_var.sqrt()).expect("finite positive std");
        for v in &mut y {
            *v += normal.sample(&mut rng);
        }
    }
    y
}

/// `F0 = x²`, `F_i = B ρ[x cos(2π φ t_i)]`, `g(z) = ‖y − z‖² − ε`.
#[derive(Debug, Clone)]
pub struct LseModel {
    y: ComplexVec,
    times: Vec<f64>,
    b: f64,
    epsilon: f64,
    r: f64,
}

impl LseModel {
    fn cosines(&self, phi: f64) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().map(move |t| (2.0 * PI * phi * t).cos())
    }

    pub fn samples(&self) -> &ComplexVec {
        &self.y
    }
}

impl SfpModel for LseModel {
    fn measurement_dim(&self) -> usize {
        self.times.len()
    }

    fn constraint_count(&self) -> usize {
        1
    }

    fn objective(&self, x: f64, _beta: &[f64]) -> f64 {
        x * x
    }

    fn measure(&self, x: f64, beta: &[f64]) -> ComplexVec {
        ComplexVec::from_real(self.cosines(beta[0]).map(|c| self.b * saturate(x * c, self.r)).collect())
    }

    fn constraints(&self, z: &ComplexVec) -> Vec<f64> {
        vec![self.y.sub(z).norm_sq() - self.epsilon]
    }

    fn pointwise_min(&self, mu: &ComplexVec, beta: &[f64], set: &PointwiseSet) -> Result<ScalarResult> {
        if self.r.is_infinite() {
            let c: f64 = self.b * mu.re().iter().zip(self.cosines(beta[0])).map(|(m, c)| m * c).sum::<f64>();
            Ok(quadratic_linear(c, set))
        } else {
            let scaled: Vec<f64> = mu.re().iter().map(|m| self.b * m).collect();
            let h: Vec<f64> = self.cosines(beta[0]).collect();
            Ok(solve_saturated_cosine(&scaled, &h, self.r, set))
        }
    }

    fn dz(&self, point: &DualPoint) -> Result<DzOutcome> {
        Ok(dz_quadratic(&self.y, self.epsilon, &point.mu, point.nu()[0]))
    }
}

/// Builds the line spectral estimation problem on `Ω = [0, 1/2]`.
pub fn build_lse(y: &[f64], times: &[f64], b: f64, lambda: f64, epsilon: f64, r: f64) -> Result<SfpProblem> {
    if y.len() != times.len() {
        return Err(SfpError::DimensionMismatch {
            expected: times.len(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(SfpError::InvalidArgument("need at least one sample".into()));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(SfpError::InvalidArgument(format!("B must be positive, got {b}")));
    }
    if !(epsilon > 0.0) {
        return Err(SfpError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(r > 0.0) {
        return Err(SfpError::InvalidArgument(format!("r must be positive, got {r}")));
    }
    let model = LseModel {
        y: ComplexVec::from_real(y.to_vec()),
        times: times.to_vec(),
        b,
        epsilon,
        r,
    };
    SfpProblem::new(Domain::interval(0.0, 0.5)?, lambda, PointwiseSet::AllReals, Arc::new(model))
}

/// One extracted bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentEstimate {
    pub f_hat: f64,
    pub a_hat: f64,
    pub bump_interval: Interval,
    /// `∫_bump |X*|`.
    pub mass: f64,
}

/// How the center frequency of a bump is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterRule {
    /// `|X*|`-weighted centroid.
    Centroid,
    Midpoint,
}

/// Turns every maximal support interval into a component and sorts by `|â|`.
///
/// Bumps below `1e-3 · max |â|` are dropped.
pub fn extract_components(sol: &PrimalSolution, b: f64, center: CenterRule) -> Vec<ComponentEstimate> {
    let mut out: Vec<ComponentEstimate> = sol
        .support
        .iter()
        .map(|iv| {
            let panels = 16;
            let h = iv.measure() / panels as f64;
            let (mut signed, mut mass, mut moment) = (0.0, 0.0, 0.0);
            for k in 0..panels {
                let a = iv.lo + h * k as f64;
                for (beta, w) in Rule::Gauss5.panel(a, a + h) {
                    let x = sol.evaluate(beta);
                    signed += w * x;
                    mass += w * x.abs();
                    moment += w * x.abs() * beta;
                }
            }
            let f_hat = match center {
                CenterRule::Centroid if mass > 0.0 => moment / mass,
                _ => iv.midpoint(),
            };
            ComponentEstimate {
                f_hat,
                a_hat: b * signed,
                bump_interval: *iv,
                mass,
            }
        })
        .collect();
    let max = out.iter().fold(0.0_f64, |m, c| m.max(c.a_hat.abs()));
    out.retain(|c| c.a_hat.abs() >= 1e-3 * max && c.a_hat != 0.0);
    out.sort_by(|a, b| b.a_hat.abs().total_cmp(&a.a_hat.abs()));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    /// `Σ_i (y_i − ŷ_i)²`.
    pub mse: f64,
    pub used: usize,
    /// Fewer than the requested number of components were available.
    pub short_count: bool,
}

/// Resynthesizes from the `k` largest components through the saturated model.
pub fn reconstruction_mse(y: &[f64], components: &[ComponentEstimate], times: &[f64], r: f64, k: usize) -> Reconstruction {
    let used = k.min(components.len());
    let mse = y
        .iter()
        .zip(times)
        .map(|(yi, t)| {
            let yh: f64 = components[..used]
                .iter()
                .map(|c| saturate(c.a_hat * (2.0 * PI * c.f_hat * t).cos(), r))
                .sum();
            (yi - yh) * (yi - yh)
        })
        .sum();
    Reconstruction {
        mse,
        used,
        short_count: used < k,
    }
}

/// Greedy one-to-one matching: for each true frequency, the nearest unused
/// estimate within `tol`, or `None`.
pub fn match_frequencies(truth: &[f64], estimates: &[ComponentEstimate], tol: f64) -> Vec<Option<usize>> {
    let mut used = vec![false; estimates.len()];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, f) in truth.iter().enumerate() {
        for (j, e) in estimates.iter().enumerate() {
            let d = (f - e.f_hat).abs();
            if d <= tol {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = vec![None; truth.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}
