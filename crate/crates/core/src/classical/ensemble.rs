use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::flow::{kick, PhaseSpacePoint, PointerIndex};
use super::observable::{poisson_bracket, ClassicalObservable};
use super::quadrature::default_rule;
use crate::error::{Error, Result};

/// Smallest admissible Monte Carlo sample count.
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Number of RNG streams; each is also one jackknife block.
pub const MC_SHARDS: usize = 256;

/// Product Gaussian on one canonical pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianDensity {
    pub mean_q: f64,
    pub mean_p: f64,
    pub sigma_q: f64,
    pub sigma_p: f64,
}

impl GaussianDensity {
    pub fn new(mean_q: f64, mean_p: f64, sigma_q: f64, sigma_p: f64) -> Result<Self> {
        let ok = [mean_q, mean_p, sigma_q, sigma_p].iter().all(|v| v.is_finite()) && sigma_q > 0.0 && sigma_p > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "gaussian density needs finite means and positive widths, got ({mean_q}, {mean_p}, {sigma_q}, {sigma_p})"
            )));
        }
        Ok(Self { mean_q, mean_p, sigma_q, sigma_p })
    }

    pub fn centered(sigma_q: f64, sigma_p: f64) -> Result<Self> {
        Self::new(0.0, 0.0, sigma_q, sigma_p)
    }

    /// Wigner density of a real Gaussian pointer: `sigma_p = 1 / (2 sigma_q)`.
    pub fn pointer(sigma_q: f64) -> Result<Self> {
        Self::new(0.0, 0.0, sigma_q, 0.5 / sigma_q)
    }

    /// Tensor Gauss-Hermite average of `f(q, p)`.
    pub fn expect(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let (x, w) = default_rule();
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let q = self.mean_q + self.sigma_q * xi;
            let inner: f64 = x.iter().zip(w).map(|(xj, wj)| wj * f(q, self.mean_p + self.sigma_p * xj)).sum();
            total += wi * inner;
        }
        total
    }

    pub fn expect_observable(&self, a: &ClassicalObservable) -> f64 {
        self.expect(|q, p| a.evaluate(q, p))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let zq: f64 = rng.sample(StandardNormal);
        let zp: f64 = rng.sample(StandardNormal);
        (self.mean_q + self.sigma_q * zq, self.mean_p + self.sigma_p * zp)
    }
}

/// System and pointer densities plus the two coupled observables.
#[derive(Debug, Clone)]
pub struct ClassicalModel {
    pub system: GaussianDensity,
    pub pointer1: GaussianDensity,
    pub pointer2: GaussianDensity,
    pub a: ClassicalObservable,
    pub b: ClassicalObservable,
}

impl ClassicalModel {
    /// Unit system Gaussian and unit-width real pointers.
    pub fn standard(a: ClassicalObservable, b: ClassicalObservable) -> Self {
        Self {
            system: GaussianDensity { mean_q: 0.0, mean_p: 0.0, sigma_q: 1.0, sigma_p: 1.0 },
            pointer1: GaussianDensity { mean_q: 0.0, mean_p: 0.0, sigma_q: 1.0, sigma_p: 0.5 },
            pointer2: GaussianDensity { mean_q: 0.0, mean_p: 0.0, sigma_q: 1.0, sigma_p: 0.5 },
            a,
            b,
        }
    }

    pub fn swapped(&self) -> Self {
        Self { a: self.b.clone(), b: self.a.clone(), ..self.clone() }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PhaseSpacePoint {
        let (q, p) = self.system.draw(rng);
        let (q1, p1) = self.pointer1.draw(rng);
        let (q2, p2) = self.pointer2.draw(rng);
        PhaseSpacePoint { q, p, q1, p1, q2, p2 }
    }
}

fn shard_bounds(n: usize, shard: usize) -> (usize, usize) {
    (shard * n / MC_SHARDS, (shard + 1) * n / MC_SHARDS)
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// Uniformly weighted initial samples of the product density.
#[derive(Debug, Clone)]
pub struct ClassicalEnsemble {
    pub samples: Vec<PhaseSpacePoint>,
    pub seed: u64,
}

impl ClassicalEnsemble {
    pub fn draw(model: &ClassicalModel, n_samples: usize, seed: u64) -> Self {
        let samples = (0..MC_SHARDS)
            .into_par_iter()
            .map(|shard| {
                let (lo, hi) = shard_bounds(n_samples, shard);
                let mut rng = shard_rng(seed, shard);
                (lo..hi).map(|_| model.draw(&mut rng)).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat();
        Self { samples, seed }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample mean and standard deviation of one coordinate.
    pub fn moments(&self, coord: impl Fn(&PhaseSpacePoint) -> f64) -> (f64, f64) {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().map(&coord).sum::<f64>() / n;
        let var = self.samples.iter().map(|s| (coord(s) - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Monte Carlo of `<(F1 - <F1>) Q2>` after the `eps1 A P1` and `eps2 B P2`
/// kicks, centered on the exact initial mean of `F1`. Stderr is a
/// delete-one-block jackknife over the RNG shards.
pub fn classical_correlation_mc(
    model: &ClassicalModel,
    f1: &ClassicalObservable,
    eps1: f64,
    eps2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!("{n_samples} samples, need at least {MIN_MC_SAMPLES}")));
    }
    let f1_mean = model.pointer1.expect_observable(f1);
    let blocks: Vec<(usize, f64)> = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let (lo, hi) = shard_bounds(n_samples, shard);
            let mut rng = shard_rng(seed, shard);
            let mut sum = 0.0;
            for _ in lo..hi {
                let s = model.draw(&mut rng);
                let s = kick(s, eps1, &model.a, PointerIndex::First)?;
                let s = kick(s, eps2, &model.b, PointerIndex::Second)?;
                sum += (f1.evaluate(s.q1, s.p1) - f1_mean) * s.q2;
            }
            Ok((hi - lo, sum))
        })
        .collect::<Result<_>>()?;

    let total: f64 = blocks.iter().map(|b| b.1).sum();
    let n = n_samples as f64;
    let estimate = total / n;
    let leave_out: Vec<f64> = blocks.iter().map(|&(nb, sb)| (total - sb) / (n - nb as f64)).collect();
    let mean_lo = leave_out.iter().sum::<f64>() / MC_SHARDS as f64;
    let g = MC_SHARDS as f64;
    let stderr = ((g - 1.0) / g * leave_out.iter().map(|t| (t - mean_lo).powi(2)).sum::<f64>()).sqrt();
    Ok(McEstimate { estimate, stderr, n_samples, seed })
}

/// Weak-coupling limit of the classical correlation per `eps1 eps2`,
/// split into the symmetric and bracket addends (both carry the overall
/// minus sign).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalRhs {
    pub product_term: f64,
    pub bracket_term: f64,
    pub total: f64,
}

pub fn classical_rhs(model: &ClassicalModel, f1: &ClassicalObservable) -> ClassicalRhs {
    let (a, b) = (&model.a, &model.b);
    let ab = model.system.expect(|q, p| a.evaluate(q, p) * b.evaluate(q, p));
    let ab_bracket = model.system.expect_observable(&poisson_bracket(a, b));
    let pf_bracket = model.pointer1.expect_observable(&poisson_bracket(&ClassicalObservable::p(), f1));
    let pf = model.pointer1.expect(|q, p| p * f1.evaluate(q, p));
    let product_term = -ab * pf_bracket;
    let bracket_term = -ab_bracket * pf;
    ClassicalRhs { product_term, bracket_term, total: product_term + bracket_term }
}
