//! Composite quadrature on boxes and uniform Monte Carlo node draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{ComplexVec, Domain};
use crate::error::{Result, SfpError};

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Per-cell rule of a composite scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Midpoint,
    Gauss5,
}

impl Rule {
    /// Nodes and weights on the reference cell `[−1, 1]`.
    pub fn reference(self) -> (&'static [f64], &'static [f64]) {
        match self {
            Rule::Midpoint => (&[0.0], &[2.0]),
            Rule::Gauss5 => (&GAUSS5_NODES, &GAUSS5_WEIGHTS),
        }
    }

    pub fn points_per_cell(self) -> usize {
        self.reference().0.len()
    }

    /// Nodes and weights of the rule mapped to `[a, b]`.
    pub fn panel(self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
        let (xs, ws) = self.reference();
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        xs.iter().zip(ws).map(move |(x, w)| (c + h * x, h * w))
    }
}

impl std::str::FromStr for Rule {
    type Err = SfpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Rule::Midpoint),
            "gauss5" => Ok(Rule::Gauss5),
            other => Err(SfpError::Config(format!(
                "unknown quadrature rule `{other}` (expected midpoint or gauss5)"
            ))),
        }
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rule::Midpoint => "midpoint",
            Rule::Gauss5 => "gauss5",
        })
    }
}

/// Tensor-product composite rule over a uniform cell partition of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureScheme {
    domain: Domain,
    cells_per_dim: usize,
    rule: Rule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Integration error estimate.
    pub delta: f64,
}

/// Composite rule with `delta = 0` (the constant probe is integrated exactly).
pub fn build_composite(domain: &Domain, cells_per_dim: usize, rule: Rule) -> Result<QuadratureScheme> {
    if cells_per_dim == 0 {
        return Err(SfpError::InvalidArgument("cells_per_dim must be at least 1".into()));
    }
    let dim = domain.dim();
    let per_axis: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|d| {
            let lo = domain.lower()[d];
            let h = domain.side(d) / cells_per_dim as f64;
            (0..cells_per_dim)
                .flat_map(|c| {
                    let a = lo + h * c as f64;
                    let b = if c + 1 == cells_per_dim {
                        domain.upper()[d]
                    } else {
                        lo + h * (c + 1) as f64
                    };
                    rule.panel(a, b)
                })
                .collect()
        })
        .collect();

    let per = per_axis[0].len();
    let total = per.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            let (x, wi) = per_axis[d][i];
            nodes.push(x);
            w *= wi;
        }
        weights.push(w);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < per {
                break;
            }
            *slot = 0;
        }
    }
    Ok(QuadratureScheme {
        domain: domain.clone(),
        cells_per_dim,
        rule,
        nodes,
        weights,
        delta: 0.0,
    })
}

/// Composite rule whose `delta` is `|I_n(probe) − I_{n/2}(probe)|`.
pub fn build_composite_with_probe<F>(
    domain: &Domain,
    cells_per_dim: usize,
    rule: Rule,
    probe: F,
) -> Result<QuadratureScheme>
where
    F: Fn(&[f64]) -> f64,
{
    let mut scheme = build_composite(domain, cells_per_dim, rule)?;
    let coarse = scheme.half_resolution()?;
    let fine = integrate(&scheme, &probe)?;
    let half = integrate(&coarse, &probe)?;
    scheme.delta = (fine - half).abs();
    Ok(scheme)
}

impl QuadratureScheme {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn cells_per_dim(&self) -> usize {
        self.cells_per_dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        let d = self.domain.dim();
        &self.nodes[j * d..(j + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.domain.dim())
    }

    /// The same rule on `max(1, cells/2)` cells per side.
    pub fn half_resolution(&self) -> Result<QuadratureScheme> {
        build_composite(&self.domain, (self.cells_per_dim / 2).max(1), self.rule)
    }

    /// Cell edges of a one-dimensional scheme, `cells + 1` values.
    pub fn cell_edges(&self) -> Vec<f64> {
        let lo = self.domain.lower()[0];
        let hi = self.domain.upper()[0];
        let h = (hi - lo) / self.cells_per_dim as f64;
        let mut e: Vec<f64> = (0..self.cells_per_dim).map(|c| lo + h * c as f64).collect();
        e.push(hi);
        e
    }
}

fn check_finite(v: f64, node: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SfpError::NonFiniteIntegrand { node: node.to_vec() })
    }
}

/// `Σ_j w_j f(β_j)`.
pub fn integrate<F>(scheme: &QuadratureScheme, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut acc = 0.0;
    for (node, w) in scheme.nodes().zip(&scheme.weights) {
        acc += w * check_finite(f(node), node)?;
    }
    Ok(acc)
}

/// Componentwise `Σ_j w_j F(β_j)` for vector integrands of length `p`.
pub fn integrate_vec<F>(scheme: &QuadratureScheme, p: usize, f: F) -> Result<ComplexVec>
where
    F: Fn(&[f64]) -> ComplexVec,
{
    let mut acc = ComplexVec::zeros(p);
    for (node, w) in scheme.nodes().zip(&scheme.weights) {
        let v = f(node);
        if v.len() != p {
            return Err(SfpError::DimensionMismatch {
                expected: p,
                found: v.len(),
            });
        }
        if !v.is_finite() {
            return Err(SfpError::NonFiniteIntegrand { node: node.to_vec() });
        }
        acc.axpy(*w, &v);
    }
    Ok(acc)
}

/// Uniform i.i.d. node draws on a box, reproducible per `(seed, call_index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McSampler {
    pub domain: Domain,
    pub batch_size: usize,
    pub seed: u64,
}

impl McSampler {
    pub fn new(domain: Domain, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(SfpError::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(Self {
            domain,
            batch_size,
            seed,
        })
    }

    /// Draws `batch_size` points; each call index selects an independent stream.
    pub fn nodes(&self, call_index: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(call_index);
        let dim = self.domain.dim();
        (0..self.batch_size)
            .map(|_| {
                (0..dim)
                    .map(|d| self.domain.lower()[d] + self.domain.side(d) * rng.random::<f64>())
                    .collect()
            })
            .collect()
    }
}

/// `mc_nodes` entry point.
pub fn mc_nodes(sampler: &McSampler, call_index: u64) -> Vec<Vec<f64>> {
    sampler.nodes(call_index)
}

/// Unbiased estimate `m(Ω)/N · Σ_j f(β_j)` of `∫_Ω f`.
pub fn mc_integrate<F>(domain: &Domain, nodes: &[Vec<f64>], f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n = nodes.len() as f64;
    domain.measure() / n * nodes.iter().map(|b| f(b)).sum::<f64>()
}
