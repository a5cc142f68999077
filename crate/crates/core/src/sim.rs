//! Seeded Monte Carlo harness closing the loop plant → codec → channel →
//! controller, plus the capacity sweep and stability-region tables.
//!
//! Every trial draws from its own `RngStream(master_seed, trial_index)`. Trials
//! are grouped into fixed-size chunks whose partial sums are reduced in chunk
//! order, so results are bit-identical for any thread count.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    linear_ms_capacity, mean_square_capacity, shannon_capacity, vector_necessary, vector_sufficient,
    SpectrumSpec,
};
use crate::channel::{ChannelParams, FadingDistribution, RngStream};
use crate::codec::{make_schedule, Codec, Schedule, VarianceTracking, VectorCodecState};
use crate::control::{deadbeat_gain, ControllerState, PlantSpec, DEFAULT_OVERFLOW_CAP};
use crate::error::{Error, Result};

const CHUNK: usize = 64;
const SLOPE_DEADBAND: f64 = 0.01;
const DIVERGED_FRACTION: f64 = 0.01;
const MIN_CLASSIFY_STEPS: usize = 20;

/// Monte Carlo configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub plant: PlantSpec,
    pub channel: ChannelParams,
    /// Diagonal of the prior covariance of `x₀`.
    pub prior_var: Vec<f64>,
    pub trials: usize,
    pub horizon: usize,
    pub master_seed: u64,
    /// Required iff the plant has more than one state.
    pub schedule: Option<Schedule>,
    pub overflow_cap: f64,
    pub tracking: VarianceTracking,
}

impl SimConfig {
    pub fn scalar(lambda: f64, channel: ChannelParams, trials: usize, horizon: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            plant: PlantSpec::scalar(lambda)?,
            channel,
            prior_var: vec![1.0],
            trials,
            horizon,
            master_seed: seed,
            schedule: None,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
            tracking: VarianceTracking::Realized,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.plant.dim();
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.horizon < 2 {
            return Err(Error::InvalidConfig("horizon must be >= 2".into()));
        }
        if self.prior_var.len() != n {
            return Err(Error::InvalidConfig(format!(
                "prior covariance has {} entries for a {n}-state plant",
                self.prior_var.len()
            )));
        }
        if self.prior_var.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidConfig("prior variances must be finite and > 0".into()));
        }
        if !(self.overflow_cap > 0.0) {
            return Err(Error::InvalidConfig("overflow cap must be > 0".into()));
        }
        match (&self.schedule, n) {
            (None, 1) => {}
            (Some(_), 1) => return Err(Error::InvalidConfig("schedule given for a scalar plant".into())),
            (None, _) => return Err(Error::InvalidConfig("vector plant requires a schedule".into())),
            (Some(s), _) if s.dim() != n => {
                return Err(Error::InvalidConfig(format!("schedule covers {} of {n} coordinates", s.dim())))
            }
            (Some(_), _) => {}
        }
        if n > 1 && self.plant.diagonal_entries().is_none() {
            return Err(Error::InvalidConfig("vector codec requires a diagonal (real Jordan) plant".into()));
        }
        Ok(())
    }

    fn effective_schedule(&self) -> Result<Schedule> {
        match &self.schedule {
            Some(s) => Ok(s.clone()),
            None => make_schedule(&[1.0], 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

/// Per-step ensemble statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub trials: usize,
    pub horizon: usize,
    /// Sample mean of `‖x_t‖²`; zero for estimation-only runs.
    pub mean_sq_state: Vec<f64>,
    /// Sample mean of `‖x̂_t − x₀‖²`.
    pub mean_sq_error: Vec<f64>,
    /// Sample mean of the codec's tracked variance, summed over coordinates.
    pub mean_tracked_var: Vec<f64>,
    /// Sample mean of `s_t²`.
    pub power_usage: Vec<f64>,
    /// Sample mean of the coordinate sum of `x̂_t − x₀`.
    pub mean_error: Vec<f64>,
    pub se_error: Vec<f64>,
    pub se_sq_error: Vec<f64>,
    pub se_power: Vec<f64>,
    /// Sample mean of `‖x̂_t − x₀‖² − tracked variance`.
    pub calibration_gap: Vec<f64>,
    pub se_calibration_gap: Vec<f64>,
    /// Trials still running at each step.
    pub alive: Vec<usize>,
    pub diverged_count: usize,
    pub tail_slope: Option<f64>,
    pub verdict: Verdict,
}

const M_STATE: usize = 0;
const M_ERR_SQ: usize = 1;
const M_VAR: usize = 2;
const M_POWER: usize = 3;
const M_ERR: usize = 4;
const M_GAP: usize = 5;
const METRICS: usize = 6;

#[derive(Clone)]
struct Partial {
    sum: Vec<[f64; METRICS]>,
    sumsq: Vec<[f64; METRICS]>,
    alive: Vec<usize>,
    diverged: usize,
}

impl Partial {
    fn new(horizon: usize) -> Self {
        Self {
            sum: vec![[0.0; METRICS]; horizon],
            sumsq: vec![[0.0; METRICS]; horizon],
            alive: vec![0; horizon],
            diverged: 0,
        }
    }

    fn record(&mut self, t: usize, values: [f64; METRICS]) {
        for m in 0..METRICS {
            self.sum[t][m] += values[m];
            self.sumsq[t][m] += values[m] * values[m];
        }
        self.alive[t] += 1;
    }

    fn merge(&mut self, other: &Partial) {
        for t in 0..self.sum.len() {
            for m in 0..METRICS {
                self.sum[t][m] += other.sum[t][m];
                self.sumsq[t][m] += other.sumsq[t][m];
            }
            self.alive[t] += other.alive[t];
        }
        self.diverged += other.diverged;
    }
}

enum TrialEnd {
    Completed,
    Diverged,
}

struct TrialContext<'a> {
    config: &'a SimConfig,
    codec: Codec,
    schedule: Schedule,
    gain: Option<nalgebra::RowDVector<f64>>,
}

impl TrialContext<'_> {
    fn run(&self, index: usize, acc: &mut Partial) -> Result<TrialEnd> {
        let cfg = self.config;
        let mut rng = RngStream::new(cfg.master_seed, index as u64);
        let x0: Vec<f64> = cfg.prior_var.iter().map(|v| v.sqrt() * rng.standard_normal()).collect();
        let mut codec_state = VectorCodecState::new(&cfg.prior_var, self.schedule.clone())?;
        let mut ctrl = self
            .gain
            .as_ref()
            .map(|k| ControllerState::new(k.clone()).with_overflow_cap(cfg.overflow_cap));
        let mut x = DVector::from_column_slice(&x0);

        for t in 0..cfg.horizon {
            let state_sq = if ctrl.is_some() { x.norm_squared() } else { 0.0 };
            let used = codec_state.advance(&x0, &self.codec, &mut rng)?;
            let est = codec_state.estimates();
            let (mut err_sq, mut err_sum) = (0.0, 0.0);
            for (e, x0j) in est.iter().zip(&x0) {
                err_sq += (e - x0j).powi(2);
                err_sum += e - x0j;
            }
            let var: f64 = codec_state.coords.iter().map(|c| c.cond_error_var).sum();

            if let Some(ctrl) = ctrl.as_mut() {
                let est = DVector::from_vec(est);
                let u = match ctrl.input(&cfg.plant, &est) {
                    Ok(u) => u,
                    Err(Error::HorizonOverflow { .. }) => return Ok(TrialEnd::Diverged),
                    Err(e) => return Err(e),
                };
                acc.record(t, [state_sq, err_sq, var, used.tx.s * used.tx.s, err_sum, err_sq - var]);
                x = cfg.plant.step(&x, u);
                if x.iter().any(|v| !v.is_finite() || v.abs() > cfg.overflow_cap) {
                    return Ok(TrialEnd::Diverged);
                }
            } else {
                acc.record(t, [state_sq, err_sq, var, used.tx.s * used.tx.s, err_sum, err_sq - var]);
            }
        }
        Ok(TrialEnd::Completed)
    }

    fn run_chunk(&self, chunk: usize) -> Result<Partial> {
        let cfg = self.config;
        let mut acc = Partial::new(cfg.horizon);
        let end = ((chunk + 1) * CHUNK).min(cfg.trials);
        for i in chunk * CHUNK..end {
            if let TrialEnd::Diverged = self.run(i, &mut acc)? {
                acc.diverged += 1;
            }
        }
        Ok(acc)
    }
}

fn run_chunks(ctx: &TrialContext<'_>) -> Result<Partial> {
    let chunks = ctx.config.trials.div_ceil(CHUNK);
    #[cfg(feature = "parallel")]
    let partials: Vec<Result<Partial>> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(|c| ctx.run_chunk(c)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Result<Partial>> = (0..chunks).map(|c| ctx.run_chunk(c)).collect();

    let mut total = Partial::new(ctx.config.horizon);
    for p in partials {
        total.merge(&p?);
    }
    Ok(total)
}

fn summarize(partial: &Partial, config: &SimConfig, closed_loop: bool) -> EnsembleStats {
    let horizon = config.horizon;
    let mut mean = vec![[f64::NAN; METRICS]; horizon];
    let mut se = vec![[f64::NAN; METRICS]; horizon];
    for t in 0..horizon {
        let n = partial.alive[t] as f64;
        if n == 0.0 {
            continue;
        }
        for m in 0..METRICS {
            let mu = partial.sum[t][m] / n;
            mean[t][m] = mu;
            se[t][m] = if n > 1.0 {
                let var = ((partial.sumsq[t][m] - n * mu * mu) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            } else {
                f64::NAN
            };
        }
    }
    let col = |src: &Vec<[f64; METRICS]>, m: usize| src.iter().map(|r| r[m]).collect::<Vec<f64>>();
    let mut stats = EnsembleStats {
        trials: config.trials,
        horizon,
        mean_sq_state: col(&mean, M_STATE),
        mean_sq_error: col(&mean, M_ERR_SQ),
        mean_tracked_var: col(&mean, M_VAR),
        power_usage: col(&mean, M_POWER),
        mean_error: col(&mean, M_ERR),
        se_error: col(&se, M_ERR),
        se_sq_error: col(&se, M_ERR_SQ),
        se_power: col(&se, M_POWER),
        calibration_gap: col(&mean, M_GAP),
        se_calibration_gap: col(&se, M_GAP),
        alive: partial.alive.clone(),
        diverged_count: partial.diverged,
        tail_slope: None,
        verdict: Verdict::Inconclusive,
    };
    let traj = if closed_loop { &stats.mean_sq_state } else { &stats.mean_sq_error };
    let (verdict, slope) = classify_trajectory(traj, 0.5);
    stats.tail_slope = slope;
    stats.verdict = override_diverged(verdict, stats.diverged_count, stats.trials);
    stats
}

fn override_diverged(verdict: Verdict, diverged: usize, trials: usize) -> Verdict {
    if diverged as f64 / trials as f64 > DIVERGED_FRACTION {
        Verdict::Unstable
    } else {
        verdict
    }
}

/// Open-loop estimation of `x₀` only; no controller is engaged.
pub fn run_estimation(config: &SimConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let ctx = TrialContext {
        config,
        codec: Codec::new(&config.channel, config.tracking),
        schedule: config.effective_schedule()?,
        gain: None,
    };
    Ok(summarize(&run_chunks(&ctx)?, config, false))
}

/// Full loop: codec refines `x̂`, the deadbeat controller acts, the plant advances.
pub fn run_closed_loop(config: &SimConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let gain = deadbeat_gain(&config.plant)?;
    let ctx = TrialContext {
        config,
        codec: Codec::new(&config.channel, config.tracking),
        schedule: config.effective_schedule()?,
        gain: Some(gain),
    };
    Ok(summarize(&run_chunks(&ctx)?, config, true))
}

/// Least-squares slope of `ln(traj[t])` over the last `tail_fraction` of steps.
pub fn tail_log_slope(traj: &[f64], tail_fraction: f64) -> Option<f64> {
    let start = ((traj.len() as f64) * (1.0 - tail_fraction.clamp(0.0, 1.0))).floor() as usize;
    let pts: Vec<(f64, f64)> = traj[start.min(traj.len())..]
        .iter()
        .enumerate()
        .filter(|(_, y)| y.is_finite() && **y > 0.0)
        .map(|(i, y)| ((start + i) as f64, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Verdict for a mean-square trajectory, with the fitted tail slope (per step, natural log).
pub fn classify_trajectory(traj: &[f64], tail_fraction: f64) -> (Verdict, Option<f64>) {
    if traj.len() < MIN_CLASSIFY_STEPS {
        return (Verdict::Inconclusive, None);
    }
    let start = ((traj.len() as f64) * (1.0 - tail_fraction.clamp(0.0, 1.0))).floor() as usize;
    let tail = &traj[start.min(traj.len())..];
    if tail.iter().all(|&y| y == 0.0) {
        return (Verdict::Stable, None);
    }
    match tail_log_slope(traj, tail_fraction) {
        Some(s) if s < -SLOPE_DEADBAND => (Verdict::Stable, Some(s)),
        Some(s) if s > SLOPE_DEADBAND => (Verdict::Unstable, Some(s)),
        Some(s) => (Verdict::Inconclusive, Some(s)),
        None if tail.last() == Some(&0.0) => (Verdict::Stable, None),
        None => (Verdict::Inconclusive, None),
    }
}

pub fn classify_stability(stats: &EnsembleStats, tail_fraction: f64) -> Verdict {
    let (v, _) = classify_trajectory(&stats.mean_sq_state, tail_fraction);
    override_diverged(v, stats.diverged_count, stats.trials)
}

/// `start, start+step, …` up to `stop` (inclusive, within rounding).
pub fn step_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::InvalidConfig(format!("empty grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| (start + i as f64 * step).min(stop)).collect())
}

/// One row of the Bernoulli capacity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub shannon_bits: f64,
    pub msc_bits: f64,
    pub msl_bits: f64,
}

pub fn sweep_capacity(eps_grid: &[f64], power: f64, noise_var: f64) -> Result<Vec<SweepRow>> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidConfig("empty epsilon grid".into()));
    }
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.into_iter()
        .map(|eps| {
            let ch = ChannelParams::new(power, noise_var, FadingDistribution::bernoulli(eps)?)?;
            Ok(SweepRow {
                epsilon: eps,
                shannon_bits: shannon_capacity(&ch)?,
                msc_bits: mean_square_capacity(&ch)?,
                msl_bits: linear_ms_capacity(&ch)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RegionLabel {
    /// Sufficient condition holds.
    Sufficient,
    /// Necessary condition holds, sufficient fails.
    Gap,
    /// Necessary condition fails.
    Excluded,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Sufficient => "SUFFICIENT",
            RegionLabel::Gap => "GAP",
            RegionLabel::Excluded => "EXCLUDED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub log_l1: f64,
    pub log_l2: f64,
    pub label: RegionLabel,
    /// `log|λ₁| + log|λ₂| < C_MSL`.
    pub linear_ok: bool,
}

/// Labels one point of the two-mode `(log₂|λ₁|, log₂|λ₂|)` plane.
pub fn classify_region_point(log_l1: f64, log_l2: f64, channel: &ChannelParams, c_msl: f64) -> Result<RegionPoint> {
    let spec = SpectrumSpec::real_simple(&[log_l1, log_l2])?;
    let label = if !vector_necessary(&spec, channel) {
        RegionLabel::Excluded
    } else if vector_sufficient(&spec, channel) {
        RegionLabel::Sufficient
    } else {
        RegionLabel::Gap
    };
    Ok(RegionPoint { log_l1, log_l2, label, linear_ok: log_l1 + log_l2 < c_msl })
}

/// `steps × steps` grid over `[0, grid_max]²`, `log_l1` outer, `log_l2` inner.
pub fn region_grid(eps: f64, power: f64, noise_var: f64, grid_max: f64, steps: usize) -> Result<Vec<RegionPoint>> {
    if steps < 2 {
        return Err(Error::InvalidConfig("steps must be >= 2".into()));
    }
    if !grid_max.is_finite() || grid_max <= 0.0 {
        return Err(Error::InvalidConfig("grid_max must be > 0".into()));
    }
    let ch = ChannelParams::new(power, noise_var, FadingDistribution::bernoulli(eps)?)?;
    let c_msl = linear_ms_capacity(&ch)?;
    let axis: Vec<f64> = (0..steps).map(|i| grid_max * i as f64 / (steps - 1) as f64).collect();
    let mut out = Vec::with_capacity(steps * steps);
    for &l1 in &axis {
        for &l2 in &axis {
            out.push(classify_region_point(l1, l2, &ch, c_msl)?);
        }
    }
    Ok(out)
}
