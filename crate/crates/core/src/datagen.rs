//! Seeded synthetic inputs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, Uniform, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TopKError};
use crate::value::RadixValue;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Uniform {
        low: f64,
        high: f64,
    },
    Normal {
        mean: f64,
        std_dev: f64,
    },
    /// Ranks `1..=n` with probability proportional to `r^-s`. Float outputs
    /// carry the probability mass of the drawn rank, integer outputs the rank.
    Zipf {
        s: f64,
    },
    /// `modes` elements share `mass / modes`, the rest are uniform on
    /// `[low, high]`.
    Peaked {
        mass: f64,
        modes: usize,
        low: f64,
        high: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub distribution: Distribution,
    pub n: usize,
    pub seed: u64,
}

impl DistributionSpec {
    pub fn new(distribution: Distribution, n: usize, seed: u64) -> Self {
        DistributionSpec {
            distribution,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TopKError::InvalidDistribution(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        match self.distribution {
            Distribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("uniform bounds [{low}, {high}]"));
                }
            }
            Distribution::Normal { mean, std_dev } => {
                if !(mean.is_finite() && std_dev.is_finite() && std_dev > 0.0) {
                    return bad(format!("normal mean {mean} std dev {std_dev}"));
                }
            }
            Distribution::Zipf { s } => {
                if !(s.is_finite() && s > 0.0) {
                    return bad(format!("zipf exponent {s}"));
                }
            }
            Distribution::Peaked {
                mass,
                modes,
                low,
                high,
            } => {
                if !(mass > 0.0 && mass < 1.0) {
                    return bad(format!("peak mass {mass} not in (0, 1)"));
                }
                if modes == 0 || modes > self.n {
                    return bad(format!("{modes} modes for n = {}", self.n));
                }
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("background bounds [{low}, {high}]"));
                }
            }
        }
        Ok(())
    }
}

/// Draw `spec.n` values. Integer types take uniform draws over the integers
/// in range and round everything else to nearest, saturating at the bounds.
pub fn generate<T: RadixValue>(spec: &DistributionSpec) -> Result<Vec<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let invalid = |e: &dyn std::fmt::Display| TopKError::InvalidDistribution(e.to_string());
    let out = match spec.distribution {
        Distribution::Uniform { low, high } => uniform::<T>(&mut rng, n, low, high)?,
        Distribution::Normal { mean, std_dev } => {
            let d = Normal::new(mean, std_dev).map_err(|e| invalid(&e))?;
            (0..n).map(|_| T::from_sample(d.sample(&mut rng))).collect()
        }
        Distribution::Zipf { s } => {
            let d = Zipf::new(n as f64, s).map_err(|e| invalid(&e))?;
            if T::IS_FLOAT {
                let norm: f64 = (1..=n).map(|r| (r as f64).powf(-s)).sum();
                (0..n)
                    .map(|_| T::from_sample(d.sample(&mut rng).powf(-s) / norm))
                    .collect()
            } else {
                (0..n).map(|_| T::from_sample(d.sample(&mut rng))).collect()
            }
        }
        Distribution::Peaked {
            mass,
            modes,
            low,
            high,
        } => {
            let mut out = uniform::<T>(&mut rng, n, low, high)?;
            let peak = T::from_sample(mass / modes as f64);
            for i in sample(&mut rng, n, modes) {
                out[i] = peak;
            }
            out
        }
    };
    Ok(out)
}

fn uniform<T: RadixValue>(rng: &mut ChaCha8Rng, n: usize, low: f64, high: f64) -> Result<Vec<T>> {
    let invalid = |e: rand_distr::uniform::Error| TopKError::InvalidDistribution(e.to_string());
    if T::IS_FLOAT {
        let d = Uniform::new_inclusive(low, high).map_err(invalid)?;
        return Ok((0..n).map(|_| T::from_sample(d.sample(rng))).collect());
    }
    let (lo, hi) = (low.ceil(), high.floor());
    if lo > hi {
        return Err(TopKError::InvalidDistribution(format!(
            "no integers in [{low}, {high}]"
        )));
    }
    let (lo, hi) = (lo.max(0.0) as u64, hi.max(0.0) as u64);
    Ok((0..n)
        .map(|_| T::from_sample(rng.random_range(lo..=hi) as f64))
        .collect())
}
