//! Text renderings shared by the CLI and the web demo.

use std::fmt::Write;

use crate::sim::{EnsembleStats, RegionPoint, SweepRow};

pub const SWEEP_HEADER: &str = "epsilon,shannon_bits,msc_bits,msl_bits";
pub const REGION_HEADER: &str = "log_l1,log_l2,label,linear_ok";
pub const TRAJECTORY_HEADER: &str = "t,mean_sq_state,mean_sq_error,mean_tracked_var,mean_power";

/// Formats like C's `%.9g`: nine significant digits, trailing zeros removed.
pub fn fmt_sig9(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig9(r.epsilon),
            fmt_sig9(r.shannon_bits),
            fmt_sig9(r.msc_bits),
            fmt_sig9(r.msl_bits)
        );
    }
    out
}

pub fn region_csv(points: &[RegionPoint]) -> String {
    let mut out = String::from(REGION_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig9(p.log_l1),
            fmt_sig9(p.log_l2),
            p.label.as_str(),
            p.linear_ok
        );
    }
    out
}

pub fn trajectory_csv(stats: &EnsembleStats) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for t in 0..stats.horizon {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t,
            fmt_sig9(stats.mean_sq_state[t]),
            fmt_sig9(stats.mean_sq_error[t]),
            fmt_sig9(stats.mean_tracked_var[t]),
            fmt_sig9(stats.power_usage[t])
        );
    }
    out
}
