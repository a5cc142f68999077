//! WebAssembly bindings for the browser demo: a capacity sweep, the
//! two-mode stability region and a scalar closed-loop simulation.
//!
//! Each export returns a JSON string; the plain `*_json` functions hold the
//! logic so they can be tested natively.

use fading_ms_core::channel::{ChannelParams, FadingDistribution};
use fading_ms_core::sim::{region_grid, run_closed_loop, run_estimation, step_grid, sweep_capacity, SimConfig, Verdict};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser runs are single-threaded; keep them interactive.
pub const MAX_TRIAL_STEPS: usize = 5_000_000;

#[derive(Serialize)]
struct Sweep {
    epsilon: Vec<f64>,
    shannon_bits: Vec<f64>,
    msc_bits: Vec<f64>,
    msl_bits: Vec<f64>,
}

#[derive(Serialize)]
struct Region {
    steps: usize,
    grid_max: f64,
    /// Row-major over (log_l1, log_l2): 0 sufficient, 1 gap, 2 excluded.
    labels: Vec<u8>,
    linear_ok: Vec<bool>,
}

#[derive(Serialize)]
struct Simulation {
    verdict: Verdict,
    tail_slope: Option<f64>,
    diverged_count: usize,
    mean_sq_state: Vec<f64>,
    mean_sq_error: Vec<f64>,
    mean_tracked_var: Vec<f64>,
    mean_power: Vec<f64>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

pub fn sweep_json(power: f64, noise: f64, start: f64, stop: f64, step: f64) -> Result<String, String> {
    let grid = step_grid(start, stop, step).map_err(|e| e.to_string())?;
    let rows = sweep_capacity(&grid, power, noise).map_err(|e| e.to_string())?;
    Ok(to_json(&Sweep {
        epsilon: rows.iter().map(|r| r.epsilon).collect(),
        shannon_bits: rows.iter().map(|r| r.shannon_bits).collect(),
        msc_bits: rows.iter().map(|r| r.msc_bits).collect(),
        msl_bits: rows.iter().map(|r| r.msl_bits).collect(),
    }))
}

pub fn region_json(eps: f64, power: f64, noise: f64, grid_max: f64, steps: usize) -> Result<String, String> {
    let points = region_grid(eps, power, noise, grid_max, steps).map_err(|e| e.to_string())?;
    Ok(to_json(&Region {
        steps,
        grid_max,
        labels: points.iter().map(|p| p.label as u8).collect(),
        linear_ok: points.iter().map(|p| p.linear_ok).collect(),
    }))
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_json(
    lambda: f64,
    eps: f64,
    power: f64,
    noise: f64,
    trials: usize,
    horizon: usize,
    seed: u64,
    closed_loop: bool,
) -> Result<String, String> {
    if trials.saturating_mul(horizon) > MAX_TRIAL_STEPS {
        return Err(format!("trials × horizon is capped at {MAX_TRIAL_STEPS} in the browser"));
    }
    let run = || -> fading_ms_core::Result<_> {
        let fading = FadingDistribution::bernoulli(eps)?;
        let channel = ChannelParams::new(power, noise, fading)?;
        let config = SimConfig::scalar(lambda, channel, trials, horizon, seed)?;
        if closed_loop {
            run_closed_loop(&config)
        } else {
            run_estimation(&config)
        }
    };
    let stats = run().map_err(|e| e.to_string())?;
    Ok(to_json(&Simulation {
        verdict: stats.verdict,
        tail_slope: stats.tail_slope,
        diverged_count: stats.diverged_count,
        mean_sq_state: stats.mean_sq_state,
        mean_sq_error: stats.mean_sq_error,
        mean_tracked_var: stats.mean_tracked_var,
        mean_power: stats.power_usage,
    }))
}

#[wasm_bindgen]
pub fn capacity_sweep(power: f64, noise: f64, start: f64, stop: f64, step: f64) -> Result<String, JsValue> {
    sweep_json(power, noise, start, stop, step).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn stability_region(eps: f64, power: f64, noise: f64, grid_max: f64, steps: usize) -> Result<String, JsValue> {
    region_json(eps, power, noise, grid_max, steps).map_err(|e| JsValue::from_str(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate(
    lambda: f64,
    eps: f64,
    power: f64,
    noise: f64,
    trials: usize,
    horizon: usize,
    seed: u32,
    closed_loop: bool,
) -> Result<String, JsValue> {
    simulate_json(lambda, eps, power, noise, trials, horizon, seed as u64, closed_loop)
        .map_err(|e| JsValue::from_str(&e))
}
