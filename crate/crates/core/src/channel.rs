//! Memoryless power constrained fading channel `r = g·s + n`.
//!
//! The fade `g` is drawn i.i.d. from a finite discrete law and disclosed to the
//! receiver after every use. Instantaneous capacity is reported in nats; every
//! quantity in [`crate::capacity`] is in bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// One support point of a fading law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub gain: f64,
    pub prob: f64,
}

/// Finite discrete law of the i.i.d. fade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct FadingDistribution {
    atoms: Vec<Atom>,
}

impl FadingDistribution {
    /// Builds a law from `(gain, probability)` pairs.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut total = 0.0;
        for a in &atoms {
            if !a.gain.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite gain {}", a.gain)));
            }
            if !a.prob.is_finite() || !(0.0..=1.0).contains(&a.prob) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {} outside [0, 1]",
                    a.prob
                )));
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(gain: f64) -> Result<Self> {
        Self::new(vec![Atom { gain, prob: 1.0 }])
    }

    /// Erasure-style fading: `g = 0` with probability `eps`, `g = 1` otherwise.
    pub fn bernoulli(eps: f64) -> Result<Self> {
        if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidDistribution(format!(
                "failure probability {eps} outside [0, 1]"
            )));
        }
        Self::new(vec![
            Atom { gain: 0.0, prob: eps },
            Atom { gain: 1.0, prob: 1.0 - eps },
        ])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E{f(g)}` as an exact finite sum.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.prob * f(a.gain)).sum()
    }

    /// True when every atom with positive probability has `g = 0`.
    pub fn is_always_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.prob == 0.0 || a.gain == 0.0)
    }

    /// Inverse-CDF lookup for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.prob;
            if u < acc {
                return a.gain;
            }
        }
        // u landed in the rounding slack above the last cumulative sum
        self.atoms
            .iter()
            .rev()
            .find(|a| a.prob > 0.0)
            .map_or(self.atoms[0].gain, |a| a.gain)
    }
}

impl TryFrom<Vec<Atom>> for FadingDistribution {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<FadingDistribution> for Vec<Atom> {
    fn from(d: FadingDistribution) -> Self {
        d.atoms
    }
}

/// Power budget, noise variance and fading law of the channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    power: f64,
    noise_var: f64,
    fading: FadingDistribution,
}

impl ChannelParams {
    pub fn new(power: f64, noise_var: f64, fading: FadingDistribution) -> Result<Self> {
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidChannel(format!("power {power} must be finite and >= 0")));
        }
        if !noise_var.is_finite() || noise_var < 0.0 {
            return Err(Error::InvalidChannel(format!(
                "noise variance {noise_var} must be finite and >= 0"
            )));
        }
        if noise_var == 0.0 && fading.is_always_zero() {
            return Err(Error::InvalidChannel(
                "noiseless channel with identically zero fade".into(),
            ));
        }
        Ok(Self { power, noise_var, fading })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn fading(&self) -> &FadingDistribution {
        &self.fading
    }
}

/// Seeded generator identified by `(master_seed, stream_index)`.
///
/// Streams with different indices use disjoint ChaCha streams of the same key,
/// so trials can be evaluated in any order or on any thread.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self { rng }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

pub fn sample_fade(dist: &FadingDistribution, rng: &mut RngStream) -> f64 {
    if let [only] = dist.atoms() {
        return only.gain;
    }
    dist.quantile(rng.uniform())
}

/// Channel output for an explicit fade and noise sample.
pub fn transmit_with(s: f64, gain: f64, noise: f64) -> f64 {
    gain * s + noise
}

/// One channel use. Returns `(r, g)`; `g` is returned because the decoder observes it.
pub fn transmit(params: &ChannelParams, s: f64, rng: &mut RngStream) -> (f64, f64) {
    let g = sample_fade(params.fading(), rng);
    let n = if params.noise_var > 0.0 {
        params.noise_var.sqrt() * rng.standard_normal()
    } else {
        0.0
    };
    (transmit_with(s, g, n), g)
}

/// `½·ln(1 + g²P/σₙ²)` in nats per transmission.
pub fn instantaneous_capacity(params: &ChannelParams, gain: f64) -> Result<f64> {
    if params.noise_var == 0.0 {
        return Err(Error::InfiniteCapacity);
    }
    Ok(0.5 * (gain * gain * params.power / params.noise_var).ln_1p())
}
