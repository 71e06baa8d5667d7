//! Wood F three-moment approximation of the CDF of `Σ λ_k Z_k`, `Z_k ~ χ²₁`.
//!
//! The law is matched by `β · X` with `X ~ BetaPrime(α₁, α₂)`, whose CDF is
//! `I_{y/(1+y)}(α₁, α₂)` at `y = x/β`. When the three-moment system has no
//! admissible solution the first two cumulants are matched by a gamma law.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

use crate::background::QuadFormLaw;
use crate::error::{Error, Result};

/// Largest `α₂` kept on the beta-prime branch; beyond it the law is a gamma.
const MAX_ALPHA2: f64 = 1e6;
const NEGATIVE_TOLERANCE: f64 = 1e-10;
const QUANTILE_RELATIVE_WIDTH: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    None,
    GammaTwoMoment,
    PointMass,
}

/// Fitted law. On the gamma branch `alpha1` is the shape, `beta` the scale
/// and `alpha2` is infinite; on the point-mass branch all three are zero.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoodFParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub fallback: Fallback,
}

/// Fit the Wood F law to the cumulants of `law`.
pub fn fit(law: &QuadFormLaw) -> Result<WoodFParams> {
    let k1 = checked_cumulant(1, law.k1, 1.0)?;
    if k1 <= 0.0 {
        return Ok(WoodFParams::point_mass());
    }
    let k2 = checked_cumulant(2, law.k2, k1 * k1)?;
    let k3 = checked_cumulant(3, law.k3, k1 * k1 * k1)?;
    if k2 <= 0.0 {
        return Err(Error::Numerical(format!("zero variance with positive mean {k1}")));
    }
    let r1 = 4.0 * k2 * k2 * k1 + k3 * (k2 - k1 * k1);
    let r2 = k1 * k3 - 2.0 * k2 * k2;
    if r1 > 0.0 && r2 > 0.0 {
        let beta = r1 / r2;
        let alpha1 = 2.0 * k1 * (k1 * k3 + k2 * k1 * k1 - k2 * k2) / r1;
        let alpha2 = 3.0 + 2.0 * k2 * (k2 + k1 * k1) / r2;
        if alpha1 > 0.0 && beta > 0.0 && alpha2 > 3.0 && alpha2 <= MAX_ALPHA2 {
            return Ok(WoodFParams { alpha1, alpha2, beta, fallback: Fallback::None });
        }
    }
    Ok(WoodFParams {
        alpha1: k1 * k1 / k2,
        alpha2: f64::INFINITY,
        beta: k2 / k1,
        fallback: Fallback::GammaTwoMoment,
    })
}

fn checked_cumulant(index: usize, value: f64, scale: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Numerical(format!("cumulant {index} is {value}")));
    }
    if value < -NEGATIVE_TOLERANCE * scale.max(1.0) {
        return Err(Error::NegativeCumulant { index, value });
    }
    Ok(value.max(0.0))
}

impl WoodFParams {
    pub fn point_mass() -> Self {
        WoodFParams { alpha1: 0.0, alpha2: 0.0, beta: 0.0, fallback: Fallback::PointMass }
    }

    pub fn mean(&self) -> f64 {
        match self.fallback {
            Fallback::PointMass => 0.0,
            Fallback::GammaTwoMoment => self.alpha1 * self.beta,
            Fallback::None => self.beta * self.alpha1 / (self.alpha2 - 1.0),
        }
    }

    /// Raw moment `E[X^r]`, `r ∈ {1, 2, 3}`.
    pub fn raw_moment(&self, r: u32) -> f64 {
        let (a, b, s) = (self.alpha1, self.alpha2, self.beta);
        match self.fallback {
            Fallback::PointMass => 0.0,
            Fallback::GammaTwoMoment => (0..r).map(|i| (a + i as f64) * s).product(),
            Fallback::None => (0..r).map(|i| s * (a + i as f64) / (b - 1.0 - i as f64)).product(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.fallback {
            Fallback::PointMass => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ if x <= 0.0 || x.is_nan() => 0.0,
            _ if x == f64::INFINITY => 1.0,
            Fallback::GammaTwoMoment => gamma_lr(self.alpha1, x / self.beta),
            Fallback::None => {
                let y = x / self.beta;
                beta_reg(self.alpha1, self.alpha2, y / (1.0 + y))
            }
        }
    }

    /// Generalized inverse `inf{x : cdf(x) ≥ q}` by bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidProbability(q));
        }
        if self.fallback == Fallback::PointMass {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = self.mean().max(f64::MIN_POSITIVE);
        while self.cdf(hi) < q {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Numerical(format!("no finite quantile at q = {q}")));
            }
        }
        while hi - lo > QUANTILE_RELATIVE_WIDTH * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// `n_samples` seeded draws of `Σ λ_k z_k²`.
pub fn mc_samples(eigenvalues: &[f64], n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            eigenvalues
                .iter()
                .map(|&l| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    l * z * z
                })
                .sum()
        })
        .collect()
}

/// Empirical CDF at `x` of `n_samples` seeded draws of `Σ λ_k z_k²`.
pub fn mc_cdf(eigenvalues: &[f64], x: f64, n_samples: usize, seed: u64) -> f64 {
    assert!(n_samples >= 1, "n_samples must be positive");
    let hits = mc_samples(eigenvalues, n_samples, seed).into_iter().filter(|&s| s <= x).count();
    hits as f64 / n_samples as f64
}
