//! Causal feedback encoder/decoder that refines the decoder's estimate of `x₀`
//! one channel use at a time, plus its TDMA extension for diagonal plants.
//!
//! At step 0 the encoder sends the scaled initial state. From step 1 on it sends
//! the normalized estimation error, which it knows through the noiseless
//! feedback link, and the decoder applies a linear MMSE correction given the
//! observed fade. Each refinement multiplies the error variance by
//! `σₙ²/(σₙ²+g²P)`.

use serde::{Deserialize, Serialize};

use crate::capacity::fade_contraction;
use crate::channel::{transmit, ChannelParams, RngStream};
use crate::error::{Error, Result};

/// Decoder-side estimate of one scalar initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCodecState {
    pub estimate: f64,
    /// Variance of `estimate − x₀` used for normalization.
    pub cond_error_var: f64,
    pub step: u64,
    pub prior_var: f64,
}

impl ScalarCodecState {
    pub fn new(prior_var: f64) -> Result<Self> {
        if !prior_var.is_finite() || prior_var <= 0.0 {
            return Err(Error::InvalidConfig(format!("prior variance {prior_var} must be > 0")));
        }
        Ok(Self { estimate: 0.0, cond_error_var: prior_var, step: 0, prior_var })
    }
}

/// Channel input for the current step.
pub fn encode(state: &ScalarCodecState, x0: f64, power: f64) -> f64 {
    if state.step == 0 {
        return (power / state.prior_var).sqrt() * x0;
    }
    if state.cond_error_var == 0.0 {
        return 0.0;
    }
    (power / state.cond_error_var).sqrt() * (state.estimate - x0)
}

fn step0_estimate(state: &ScalarCodecState, r: f64, power: f64) -> f64 {
    if power > 0.0 {
        (state.prior_var / power).sqrt() * r
    } else {
        0.0
    }
}

fn refinement_gain(var: f64, gain: f64, power: f64, noise_var: f64) -> f64 {
    let denom = noise_var + gain * gain * power;
    if denom == 0.0 || var == 0.0 {
        0.0
    } else {
        gain * (power * var).sqrt() / denom
    }
}

/// Decoder update with the error variance tracked along the realized fade path.
pub fn decode_update(
    state: &ScalarCodecState,
    r: f64,
    gain: f64,
    power: f64,
    noise_var: f64,
) -> Result<ScalarCodecState> {
    if !r.is_finite() {
        return Err(Error::ChannelOutputOverflow);
    }
    let (estimate, var) = if state.step == 0 {
        let var = if power > 0.0 {
            (gain - 1.0).powi(2) * state.prior_var + state.prior_var * noise_var / power
        } else {
            state.prior_var
        };
        (step0_estimate(state, r, power), var)
    } else {
        let k = refinement_gain(state.cond_error_var, gain, power, noise_var);
        (
            state.estimate - k * r,
            state.cond_error_var * fade_contraction(gain, power, noise_var),
        )
    };
    Ok(ScalarCodecState { estimate, cond_error_var: var, step: state.step + 1, ..*state })
}

/// How the normalizing variance is maintained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceTracking {
    /// Conditional on the realized fade history (known to both ends).
    #[default]
    Realized,
    /// Unconditional second moment, averaged over the fading law.
    Averaged,
}

/// Result of one channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub s: f64,
    pub r: f64,
    pub g: f64,
}

/// Encoder/decoder pair bound to a channel.
#[derive(Debug, Clone)]
pub struct Codec {
    channel: ChannelParams,
    tracking: VarianceTracking,
    mean_contraction: f64,
    mean_gain_offset_sq: f64,
}

impl Codec {
    pub fn new(channel: &ChannelParams, tracking: VarianceTracking) -> Self {
        let (p, nv) = (channel.power(), channel.noise_var());
        let fading = channel.fading();
        Self {
            channel: channel.clone(),
            tracking,
            mean_contraction: fading.expect(|g| fade_contraction(g, p, nv)),
            mean_gain_offset_sq: fading.expect(|g| (g - 1.0).powi(2)),
        }
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn tracking(&self) -> VarianceTracking {
        self.tracking
    }

    pub fn encode(&self, state: &ScalarCodecState, x0: f64) -> f64 {
        encode(state, x0, self.channel.power())
    }

    pub fn decode(&self, state: &ScalarCodecState, r: f64, gain: f64) -> Result<ScalarCodecState> {
        let (p, nv) = (self.channel.power(), self.channel.noise_var());
        match self.tracking {
            VarianceTracking::Realized => decode_update(state, r, gain, p, nv),
            VarianceTracking::Averaged => {
                if !r.is_finite() {
                    return Err(Error::ChannelOutputOverflow);
                }
                let (estimate, var) = if state.step == 0 {
                    let var = if p > 0.0 {
                        self.mean_gain_offset_sq * state.prior_var + state.prior_var * nv / p
                    } else {
                        state.prior_var
                    };
                    (step0_estimate(state, r, p), var)
                } else {
                    let k = refinement_gain(state.cond_error_var, gain, p, nv);
                    (state.estimate - k * r, state.cond_error_var * self.mean_contraction)
                };
                Ok(ScalarCodecState { estimate, cond_error_var: var, step: state.step + 1, ..*state })
            }
        }
    }

    /// Encode, transmit and decode once.
    pub fn round(&self, state: &mut ScalarCodecState, x0: f64, rng: &mut RngStream) -> Result<Transmission> {
        let s = self.encode(state, x0);
        let (r, g) = transmit(&self.channel, s, rng);
        *state = self.decode(state, r, g)?;
        Ok(Transmission { s, r, g })
    }
}

/// Periodic TDMA slot assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    period: usize,
    slot_owner: Vec<usize>,
    alphas: Vec<f64>,
}

impl Schedule {
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn slot_owner(&self) -> &[usize] {
        &self.slot_owner
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// Number of slots per period owned by each coordinate.
    pub fn slot_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.alphas.len()];
        for &j in &self.slot_owner {
            counts[j] += 1;
        }
        counts
    }
}

fn largest_remainder(alphas: &[f64], seats: usize) -> Vec<usize> {
    let quotas: Vec<f64> = alphas.iter().map(|a| a * seats as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    // remainders equal up to rounding noise tie; the stable sort keeps lower index first
    let rem_key = |j: usize| ((quotas[j] - quotas[j].floor()) * 1e9).round() as i64;
    order.sort_by_key(|&j| std::cmp::Reverse(rem_key(j)));
    for &j in order.iter().take(seats.saturating_sub(assigned)) {
        counts[j] += 1;
    }
    counts
}

/// Largest-remainder apportionment of `period` slots to shares `alphas`.
pub fn make_schedule(alphas: &[f64], period: usize) -> Result<Schedule> {
    if alphas.is_empty() {
        return Err(Error::InvalidSchedule("no coordinates".into()));
    }
    if period == 0 {
        return Err(Error::InvalidSchedule("period must be positive".into()));
    }
    if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidSchedule("shares must be finite and >= 0".into()));
    }
    let total: f64 = alphas.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSchedule(format!("shares sum to {total}, expected 1")));
    }
    let active: Vec<usize> = (0..alphas.len()).filter(|&j| alphas[j] > 0.0).collect();
    if period < active.len() {
        return Err(Error::PeriodTooShort { period, required: active.len() });
    }

    let mut counts = largest_remainder(alphas, period);
    if active.iter().any(|&j| counts[j] == 0) {
        // reserve one slot per active coordinate, apportion the rest
        let extra = largest_remainder(alphas, period - active.len());
        counts = extra;
        for &j in &active {
            counts[j] += 1;
        }
    }

    let mut events: Vec<(f64, usize)> = Vec::with_capacity(period);
    for (j, &c) in counts.iter().enumerate() {
        for k in 0..c {
            events.push(((k as f64 + 0.5) * period as f64 / c as f64, j));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(Schedule {
        period,
        slot_owner: events.into_iter().map(|(_, j)| j).collect(),
        alphas: alphas.to_vec(),
    })
}

/// Shares proportional to `log|λᵢ|`; uniform when every mode is marginal.
pub fn log_proportional_alphas(log_abs_eigs: &[f64]) -> Vec<f64> {
    let total: f64 = log_abs_eigs.iter().sum();
    if total > 0.0 {
        log_abs_eigs.iter().map(|l| l / total).collect()
    } else {
        vec![1.0 / log_abs_eigs.len() as f64; log_abs_eigs.len()]
    }
}

/// Per-coordinate decoder estimates driven by a TDMA schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCodecState {
    pub coords: Vec<ScalarCodecState>,
    pub schedule: Schedule,
    pub cursor: usize,
}

/// One use of the channel by a vector codec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotUse {
    pub coord: usize,
    pub tx: Transmission,
}

impl VectorCodecState {
    pub fn new(prior_vars: &[f64], schedule: Schedule) -> Result<Self> {
        if prior_vars.len() != schedule.dim() {
            return Err(Error::InvalidConfig(format!(
                "{} prior variances for a {}-coordinate schedule",
                prior_vars.len(),
                schedule.dim()
            )));
        }
        let coords = prior_vars.iter().map(|&v| ScalarCodecState::new(v)).collect::<Result<_>>()?;
        Ok(Self { coords, schedule, cursor: 0 })
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.estimate).collect()
    }

    /// Owner of the current slot encodes, transmits and decodes; the cursor advances.
    pub fn advance(&mut self, x0: &[f64], codec: &Codec, rng: &mut RngStream) -> Result<SlotUse> {
        let coord = self.schedule.slot_owner[self.cursor];
        let tx = codec.round(&mut self.coords[coord], x0[coord], rng)?;
        self.cursor = (self.cursor + 1) % self.schedule.period;
        Ok(SlotUse { coord, tx })
    }
}

pub fn vector_round(
    state: &VectorCodecState,
    x0: &[f64],
    codec: &Codec,
    rng: &mut RngStream,
) -> Result<(VectorCodecState, SlotUse)> {
    let mut next = state.clone();
    let used = next.advance(x0, codec, rng)?;
    Ok((next, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingDistribution;
    use proptest::prelude::*;

    fn bern(eps: f64, p: f64, nv: f64) -> ChannelParams {
        ChannelParams::new(p, nv, FadingDistribution::bernoulli(eps).unwrap()).unwrap()
    }

    fn at_step(step: u64, estimate: f64, var: f64) -> ScalarCodecState {
        ScalarCodecState { estimate, cond_error_var: var, step, prior_var: 1.0 }
    }

    #[test]
    fn encoder_examples() {
        let s0 = ScalarCodecState::new(4.0).unwrap();
        assert_eq!(encode(&s0, 2.0, 1.0), 1.0);
        assert_eq!(encode(&at_step(3, 1.7, 0.2), 1.7, 1.0), 0.0);
        let s = encode(&at_step(1, 0.3, 0.09), 0.0, 1.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(encode(&at_step(2, 0.3, 0.0), 0.0, 1.0), 0.0);
    }

    #[test]
    fn decoder_refinement_example() {
        let st = at_step(1, 0.0, 1.0);
        let next = decode_update(&st, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(next.estimate, -0.5);
        assert_eq!(next.cond_error_var, 0.5);
        assert_eq!(next.step, 2);
    }

    #[test]
    fn erasure_slot_carries_no_information() {
        let st = at_step(4, 0.37, 0.2);
        let next = decode_update(&st, 1.234, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(next.estimate, 0.37);
        assert_eq!(next.cond_error_var, 0.2);
    }

    #[test]
    fn non_finite_output_is_rejected() {
        let st = at_step(1, 0.0, 1.0);
        assert_eq!(decode_update(&st, f64::NAN, 1.0, 1.0, 1.0), Err(Error::ChannelOutputOverflow));
        let codec = Codec::new(&bern(0.5, 1.0, 1.0), VarianceTracking::Averaged);
        assert_eq!(codec.decode(&st, f64::INFINITY, 1.0), Err(Error::ChannelOutputOverflow));
    }

    #[test]
    fn awgn_variance_is_geometric() {
        // iterate the update as an oracle
        let mut st = ScalarCodecState::new(1.0).unwrap();
        st = decode_update(&st, 0.3, 1.0, 1.0, 1.0).unwrap();
        let v1 = st.cond_error_var;
        assert_eq!(v1, 1.0);
        for t in 1..30 {
            st = decode_update(&st, 0.1, 1.0, 1.0, 1.0).unwrap();
            assert_eq!(st.cond_error_var, v1 * 0.5f64.powi(t));
        }
    }

    #[test]
    fn step0_variance_follows_realized_fade() {
        let st = ScalarCodecState::new(2.0).unwrap();
        let next = decode_update(&st, 0.0, 0.0, 4.0, 1.0).unwrap();
        assert_eq!(next.cond_error_var, 2.0 + 2.0 / 4.0);
        let next = decode_update(&st, 0.0, 1.0, 4.0, 1.0).unwrap();
        assert_eq!(next.cond_error_var, 0.5);
        // averaged variant uses E{(g−1)²} = ε
        let codec = Codec::new(&bern(0.3, 4.0, 1.0), VarianceTracking::Averaged);
        let next = codec.decode(&st, 0.0, 1.0).unwrap();
        assert!((next.cond_error_var - (0.3 * 2.0 + 0.5)).abs() < 1e-15);
        let next = codec.decode(&next, 0.0, 1.0).unwrap();
        assert!((next.cond_error_var - 1.1 * (0.3 + 0.7 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn noiseless_unit_fade_is_exact_after_one_use() {
        let ch = ChannelParams::new(1.0, 0.0, FadingDistribution::point_mass(1.0).unwrap()).unwrap();
        let codec = Codec::new(&ch, VarianceTracking::Realized);
        let mut rng = RngStream::new(3, 0);
        let mut st = ScalarCodecState::new(2.0).unwrap();
        codec.round(&mut st, 1.37, &mut rng).unwrap();
        assert!((st.estimate - 1.37).abs() < 1e-15);
        assert_eq!(st.cond_error_var, 0.0);
        let tx = codec.round(&mut st, 1.37, &mut rng).unwrap();
        assert_eq!(tx.s, 0.0);
        assert!((st.estimate - 1.37).abs() < 1e-15);
    }

    #[test]
    fn noiseless_erasure_recovers_on_first_delivery() {
        let ch = ChannelParams::new(1.0, 0.0, FadingDistribution::bernoulli(0.5).unwrap()).unwrap();
        let codec = Codec::new(&ch, VarianceTracking::Realized);
        let mut st = ScalarCodecState::new(1.0).unwrap();
        // step 0 erased, step 1 delivered
        st = codec.decode(&st, transmit_with_gain(&codec, &st, -0.8, 0.0), 0.0).unwrap();
        assert_eq!(st.estimate, 0.0);
        st = codec.decode(&st, transmit_with_gain(&codec, &st, -0.8, 1.0), 1.0).unwrap();
        assert!((st.estimate + 0.8).abs() < 1e-15);
        assert_eq!(st.cond_error_var, 0.0);
    }

    fn transmit_with_gain(codec: &Codec, st: &ScalarCodecState, x0: f64, g: f64) -> f64 {
        crate::channel::transmit_with(codec.encode(st, x0), g, 0.0)
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(make_schedule(&[0.5, 0.5], 4).unwrap().slot_counts(), vec![2, 2]);
        let one = make_schedule(&[1.0], 1).unwrap();
        assert_eq!(one.slot_owner(), &[0]);
        assert_eq!(make_schedule(&[2.0 / 3.0, 1.0 / 3.0], 3).unwrap().slot_counts(), vec![2, 1]);
        assert_eq!(make_schedule(&[0.5, 0.5], 2).unwrap().slot_owner(), &[0, 1]);
        assert_eq!(
            make_schedule(&[0.3, 0.3, 0.4], 2),
            Err(Error::PeriodTooShort { period: 2, required: 3 })
        );
        assert!(make_schedule(&[0.5, 0.6], 4).is_err());
        assert!(make_schedule(&[1.0], 0).is_err());
        assert!(make_schedule(&[], 3).is_err());
    }

    #[test]
    fn every_active_coordinate_gets_a_slot() {
        let s = make_schedule(&[0.98, 0.01, 0.01], 3).unwrap();
        assert_eq!(s.slot_counts(), vec![1, 1, 1]);
        let s = make_schedule(&[0.98, 0.02, 0.0], 10).unwrap();
        assert_eq!(s.slot_counts(), vec![9, 1, 0]);
    }

    #[test]
    fn slots_are_interleaved() {
        let s = make_schedule(&[0.5, 0.25, 0.25], 4).unwrap();
        assert_eq!(s.slot_owner(), &[0, 1, 2, 0]);
    }

    #[test]
    fn log_alphas() {
        assert_eq!(log_proportional_alphas(&[1.0, 3.0]), vec![0.25, 0.75]);
        assert_eq!(log_proportional_alphas(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    // Brute force: among all compositions of `seats`, the largest-remainder
    // result minimizes Σ(c − q)², preferring larger counts at lower indices.
    fn enumerate_best(alphas: &[f64], seats: usize) -> Vec<usize> {
        fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, n: usize) {
            if i == n - 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
                return;
            }
            for c in 0..=left {
                cur.push(c);
                rec(i + 1, left - c, cur, out, n);
                cur.pop();
            }
        }
        let mut all = Vec::new();
        rec(0, seats, &mut Vec::new(), &mut all, alphas.len());
        let cost = |c: &Vec<usize>| -> f64 {
            c.iter().zip(alphas).map(|(&c, a)| (c as f64 - a * seats as f64).powi(2)).sum()
        };
        let best = all.iter().map(cost).fold(f64::INFINITY, f64::min);
        let mut ties: Vec<Vec<usize>> = all.into_iter().filter(|c| cost(c) - best < 1e-9).collect();
        ties.sort();
        ties.pop().unwrap()
    }

    proptest! {
        #[test]
        fn largest_remainder_matches_enumeration(
            raw in prop::collection::vec(1u32..20, 1..4),
            tau in 1usize..9,
        ) {
            let total: u32 = raw.iter().sum();
            let alphas: Vec<f64> = raw.iter().map(|&r| f64::from(r) / f64::from(total)).collect();
            prop_assume!(tau >= alphas.len());
            let s = make_schedule(&alphas, tau).unwrap();
            let counts = s.slot_counts();
            prop_assert_eq!(counts.iter().sum::<usize>(), tau);
            prop_assert_eq!(s.slot_owner().len(), tau);
            prop_assert!(counts.iter().all(|&c| c >= 1));
            let lr = largest_remainder(&alphas, tau);
            if lr.iter().all(|&c| c >= 1) {
                prop_assert_eq!(&counts, &enumerate_best(&alphas, tau));
            }
        }

        #[test]
        fn realized_variance_is_bounded_and_nonincreasing(
            eps in 0.0f64..1.0,
            p in 0.1f64..10.0,
            nv in 0.1f64..3.0,
            prior in 0.1f64..5.0,
            seed in any::<u64>(),
        ) {
            let ch = bern(eps, p, nv);
            let codec = Codec::new(&ch, VarianceTracking::Realized);
            let mut rng = RngStream::new(seed, 0);
            let mut st = ScalarCodecState::new(prior).unwrap();
            let x0 = prior.sqrt() * rng.standard_normal();
            codec.round(&mut st, x0, &mut rng).unwrap();
            // max_k (g_k − 1)² = 1 for Bernoulli laws
            let bound = prior * f64::max(1.0, 1.0 + nv / p);
            prop_assert!(st.cond_error_var <= bound * (1.0 + 1e-12));
            let mut prev = st.cond_error_var;
            for _ in 0..30 {
                let tx = codec.round(&mut st, x0, &mut rng).unwrap();
                prop_assert!(st.cond_error_var > 0.0);
                prop_assert!(st.cond_error_var <= prev);
                // depends only on the fade
                prop_assert_eq!(st.cond_error_var, prev * fade_contraction(tx.g, p, nv));
                prev = st.cond_error_var;
            }
        }
    }

    #[test]
    fn scalar_and_single_coordinate_vector_agree() {
        let ch = bern(0.4, 2.0, 0.7);
        let codec = Codec::new(&ch, VarianceTracking::Realized);
        let mut a_rng = RngStream::new(77, 1);
        let mut b_rng = RngStream::new(77, 1);
        let mut scalar = ScalarCodecState::new(1.5).unwrap();
        let mut vector = VectorCodecState::new(&[1.5], make_schedule(&[1.0], 1).unwrap()).unwrap();
        for _ in 0..50 {
            let a = codec.round(&mut scalar, 0.9, &mut a_rng).unwrap();
            let (next, b) = vector_round(&vector, &[0.9], &codec, &mut b_rng).unwrap();
            vector = next;
            assert_eq!(a, b.tx);
            assert_eq!(scalar, vector.coords[0]);
        }
    }

    #[test]
    fn tdma_leaves_other_coordinates_untouched() {
        let ch = bern(0.3, 1.0, 1.0);
        let codec = Codec::new(&ch, VarianceTracking::Realized);
        let sched = make_schedule(&[0.5, 0.3, 0.2], 10).unwrap();
        let mut st = VectorCodecState::new(&[1.0, 2.0, 0.5], sched).unwrap();
        let mut rng = RngStream::new(5, 5);
        let x0 = [0.3, -1.1, 0.8];
        for k in 0..40 {
            let before = st.clone();
            let used = st.advance(&x0, &codec, &mut rng).unwrap();
            assert_eq!(used.coord, before.schedule.slot_owner()[k % 10]);
            for j in 0..3 {
                if j != used.coord {
                    assert_eq!(st.coords[j].estimate.to_bits(), before.coords[j].estimate.to_bits());
                    assert_eq!(st.coords[j], before.coords[j]);
                }
            }
            assert_eq!(st.cursor, (k + 1) % 10);
        }
    }

    #[test]
    fn noiseless_tdma_recovers_x0_exactly() {
        let ch = ChannelParams::new(1.0, 0.0, FadingDistribution::point_mass(1.0).unwrap()).unwrap();
        let codec = Codec::new(&ch, VarianceTracking::Realized);
        let mut st = VectorCodecState::new(&[1.0, 1.0], make_schedule(&[0.5, 0.5], 2).unwrap()).unwrap();
        let mut rng = RngStream::new(0, 0);
        let x0 = [0.4, -2.5];
        st.advance(&x0, &codec, &mut rng).unwrap();
        st.advance(&x0, &codec, &mut rng).unwrap();
        assert_eq!(st.estimates(), x0.to_vec());
    }

    #[test]
    fn tdma_error_decays_with_slot_share() {
        // E{e²} after m uses of a coordinate = 1.5·0.75^(m−1) with σ²ₓ₀ = P = σₙ² = 1
        let ch = bern(0.5, 1.0, 1.0);
        let codec = Codec::new(&ch, VarianceTracking::Realized);
        let sched = make_schedule(&[0.5, 0.5], 2).unwrap();
        let trials = 20_000;
        let periods = 6;
        let mut sum = vec![[0.0f64; 2]; periods];
        let mut sq = vec![[0.0f64; 2]; periods];
        for i in 0..trials {
            let mut rng = RngStream::new(2024, i);
            let x0 = [rng.standard_normal(), rng.standard_normal()];
            let mut st = VectorCodecState::new(&[1.0, 1.0], sched.clone()).unwrap();
            for k in 0..periods {
                st.advance(&x0, &codec, &mut rng).unwrap();
                st.advance(&x0, &codec, &mut rng).unwrap();
                for j in 0..2 {
                    let e2 = (st.coords[j].estimate - x0[j]).powi(2);
                    sum[k][j] += e2;
                    sq[k][j] += e2 * e2;
                }
            }
        }
        let n = trials as f64;
        for k in 0..periods {
            let expected = 1.5 * 0.75f64.powi(k as i32);
            for j in 0..2 {
                let mean = sum[k][j] / n;
                let se = ((sq[k][j] / n - mean * mean) / n).sqrt();
                assert!((mean - expected).abs() < 3.0 * se, "k={k} j={j} {mean} vs {expected}");
            }
        }
    }
}
