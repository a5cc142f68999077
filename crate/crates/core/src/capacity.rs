//! Exact capacity evaluation and stabilizability predicates.
//!
//! All capacities are in bits per channel use. Expectations over the fade are
//! exact finite sums over the atoms of the fading law.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Whether a mode is a real eigenvalue or a complex conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    Real,
    ComplexPair,
}

impl ModeKind {
    /// Real dimension per Jordan chain link (1 or 2).
    pub fn dim(self) -> u32 {
        match self {
            ModeKind::Real => 1,
            ModeKind::ComplexPair => 2,
        }
    }
}

/// One distinct unstable eigenvalue in real Jordan form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// `log₂|λ|`, nonnegative.
    pub log_abs_eig: f64,
    pub multiplicity: u32,
    pub kind: ModeKind,
}

impl Mode {
    pub fn real(log_abs_eig: f64) -> Self {
        Self { log_abs_eig, multiplicity: 1, kind: ModeKind::Real }
    }

    /// Size of the real Jordan block, `aᵢ·mᵢ`.
    pub fn block_dim(&self) -> u32 {
        self.kind.dim() * self.multiplicity
    }
}

/// Unstable spectrum of a plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    modes: Vec<Mode>,
}

impl SpectrumSpec {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        for m in &modes {
            if !m.log_abs_eig.is_finite() || m.log_abs_eig < 0.0 {
                return Err(Error::InvalidSpectrum(format!(
                    "log|λ| = {} must be finite and >= 0",
                    m.log_abs_eig
                )));
            }
            if m.multiplicity == 0 {
                return Err(Error::InvalidSpectrum("multiplicity must be positive".into()));
            }
        }
        Ok(Self { modes })
    }

    /// Simple real modes with the given `log₂|λᵢ|`.
    pub fn real_simple(log_abs_eigs: &[f64]) -> Result<Self> {
        Self::new(log_abs_eigs.iter().map(|&l| Mode::real(l)).collect())
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }
}

/// The three capacities of a channel together with its contraction factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    #[serde(rename = "shannon_bits")]
    pub c_shannon: f64,
    #[serde(rename = "msc_bits")]
    pub c_msc: f64,
    #[serde(rename = "msl_bits")]
    pub c_msl: f64,
    pub contraction: f64,
}

fn require_noise(params: &ChannelParams) -> Result<()> {
    if params.noise_var() == 0.0 {
        Err(Error::InfiniteCapacity)
    } else {
        Ok(())
    }
}

/// Per-use error variance shrink factor `σₙ²/(σₙ²+g²P)`, with its limit at `σₙ² = 0`.
pub fn fade_contraction(gain: f64, power: f64, noise_var: f64) -> f64 {
    let snr = gain * gain * power;
    if snr == 0.0 {
        1.0
    } else if noise_var == 0.0 {
        0.0
    } else {
        noise_var / (noise_var + snr)
    }
}

/// `E{σₙ²/(σₙ²+g²P)}`.
pub fn expected_contraction(params: &ChannelParams) -> Result<f64> {
    require_noise(params)?;
    Ok(contraction_limit(params))
}

// Same sum, but tolerates σₙ² = 0 by using the per-atom limit.
fn contraction_limit(params: &ChannelParams) -> f64 {
    let (p, nv) = (params.power(), params.noise_var());
    params.fading().expect(|g| fade_contraction(g, p, nv))
}

/// Mean square capacity `−½·log₂ E{σₙ²/(σₙ²+g²P)}`.
pub fn mean_square_capacity(params: &ChannelParams) -> Result<f64> {
    // normalizes -0 when ρ = 1
    Ok(-0.5 * expected_contraction(params)?.log2() + 0.0)
}

/// Ergodic Shannon capacity with receiver fade knowledge, `E{½·log₂(1+g²P/σₙ²)}`.
pub fn shannon_capacity(params: &ChannelParams) -> Result<f64> {
    require_noise(params)?;
    let (p, nv) = (params.power(), params.noise_var());
    Ok(params.fading().expect(|g| 0.5 * (g * g * p / nv).ln_1p() / std::f64::consts::LN_2))
}

/// Mean square capacity under linear encoders/decoders,
/// `½·log₂(1 + μ_g²P/(σ_g²P + σₙ²))`.
pub fn linear_ms_capacity(params: &ChannelParams) -> Result<f64> {
    require_noise(params)?;
    let (p, nv) = (params.power(), params.noise_var());
    let mean = params.fading().expect(|g| g);
    let var = (params.fading().expect(|g| g * g) - mean * mean).max(0.0);
    Ok(0.5 * (mean * mean * p / (var * p + nv)).ln_1p() / std::f64::consts::LN_2)
}

// C_MSC allowing σₙ² = 0; +∞ when the contraction vanishes.
fn msc_limit(params: &ChannelParams) -> f64 {
    let rho = contraction_limit(params);
    if rho == 0.0 {
        f64::INFINITY
    } else {
        -0.5 * rho.log2()
    }
}

/// Scalar plant condition `log₂|λ| < C_MSC` (strict).
pub fn scalar_stabilizable(log_abs_lambda: f64, params: &ChannelParams) -> bool {
    log_abs_lambda < msc_limit(params)
}

/// Sufficient condition `Σ aᵢmᵢ·log₂|λᵢ| < C_MSC` (strict).
pub fn vector_sufficient(spec: &SpectrumSpec, params: &ChannelParams) -> bool {
    let weighted: f64 = spec
        .modes()
        .iter()
        .map(|m| f64::from(m.block_dim()) * m.log_abs_eig)
        .sum();
    weighted < msc_limit(params)
}

/// Right-hand side of the necessary condition for a subspace of dimension `dim`:
/// `−(v/2)·log₂ E{(σₙ²/(σₙ²+g²P))^{1/v}}`.
pub fn necessary_bound(dim: u32, params: &ChannelParams) -> f64 {
    let v = f64::from(dim);
    let (p, nv) = (params.power(), params.noise_var());
    let m = params.fading().expect(|g| fade_contraction(g, p, nv).powf(1.0 / v));
    if m == 0.0 {
        f64::INFINITY
    } else {
        -0.5 * v * m.log2()
    }
}

/// Necessary condition: for every choice `vᵢ ∈ {0..mᵢ}` (not all zero),
/// `Σ aᵢvᵢ·log₂|λᵢ| < −(v/2)·log₂ E{ρ(g)^{1/v}}` with `v = Σ aᵢvᵢ`.
pub fn vector_necessary(spec: &SpectrumSpec, params: &ChannelParams) -> bool {
    let modes = spec.modes();
    let mut choice = vec![0u32; modes.len()];
    // odometer over the product of {0..mᵢ}
    loop {
        let mut k = 0;
        loop {
            if k == modes.len() {
                return true;
            }
            if choice[k] < modes[k].multiplicity {
                choice[k] += 1;
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        let dim: u32 = modes.iter().zip(&choice).map(|(m, &v)| m.kind.dim() * v).sum();
        let lhs: f64 = modes
            .iter()
            .zip(&choice)
            .map(|(m, &v)| f64::from(m.kind.dim() * v) * m.log_abs_eig)
            .sum();
        if lhs >= necessary_bound(dim, params) {
            return false;
        }
    }
}

pub fn capacity_report(params: &ChannelParams) -> Result<CapacityReport> {
    Ok(CapacityReport {
        c_shannon: shannon_capacity(params)?,
        c_msc: mean_square_capacity(params)?,
        c_msl: linear_ms_capacity(params)?,
        contraction: expected_contraction(params)?,
    })
}
