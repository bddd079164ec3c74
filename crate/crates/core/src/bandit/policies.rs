use log::debug;
use rand::Rng;

use super::{argmax, Algorithm, BanditState, Environment, GateKind, RadarGate, SlotRecord};
use crate::comm_link::NO_PATH_BER;
use crate::error::{Error, Result};

/// LUCB confidence parameter.
pub const LUCB_DELTA: f64 = 0.1;

/// Trace of one policy run plus what the policy settled on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    /// Arms the policy was allowed to play.
    pub active_arms: Vec<usize>,
    pub gate_cost: usize,
    /// The radar gate returned no arms and the full grid was used instead.
    pub fallback: bool,
    /// Arm LUCB identified, if it stopped within the horizon.
    pub committed: Option<usize>,
}

fn play(env: &dyn Environment, arm: usize, slot: usize, algorithm: Algorithm) -> SlotRecord {
    let obs = env.pull(arm, slot);
    SlotRecord {
        slot,
        arm: Some(arm),
        reward: obs.reward,
        ber: obs.ber,
        algorithm,
    }
}

fn gate_record(slot: usize, algorithm: Algorithm) -> SlotRecord {
    SlotRecord {
        slot,
        arm: None,
        reward: 0.0,
        ber: NO_PATH_BER,
        algorithm,
    }
}

fn ucb_loop(env: &dyn Environment, state: &mut BanditState, algorithm: Algorithm, records: &mut Vec<SlotRecord>) -> Result<()> {
    while state.clock < state.horizon {
        let arm = state.select_arm();
        let record = play(env, arm, state.clock + 1, algorithm);
        state.update(arm, record.reward)?;
        records.push(record);
    }
    Ok(())
}

/// UCB over the full grid with no radar processing.
pub fn run_ucb_snr(env: &dyn Environment, horizon: usize) -> Result<RunOutput> {
    let k = env.num_arms();
    if horizon < k {
        return Err(Error::config(format!(
            "horizon {horizon} is shorter than the {k} slots needed to try every beam once"
        )));
    }
    let arms: Vec<usize> = (0..k).collect();
    let mut state = BanditState::new(k, horizon, 0, arms.clone())?;
    let mut records = Vec::with_capacity(horizon);
    ucb_loop(env, &mut state, Algorithm::Ucb, &mut records)?;
    Ok(RunOutput {
        records,
        active_arms: arms,
        gate_cost: 0,
        fallback: false,
        committed: None,
    })
}

/// Spends the gate's processing slots, then runs UCB over the gated arms.
/// An empty gated set falls back to the full grid.
pub fn run_ucb_gated(env: &dyn Environment, gate: &dyn RadarGate, kind: GateKind, horizon: usize) -> Result<RunOutput> {
    let algorithm = match kind {
        GateKind::Amplitude => Algorithm::UcbAg,
        GateKind::Doppler => Algorithm::UcbDg,
    };
    let k = env.num_arms();
    let outcome = gate.gate(kind)?;
    let fallback = outcome.arms.is_empty();
    let arms = if fallback {
        debug!("{algorithm}: radar gate found no beams, falling back to all {k}");
        (0..k).collect()
    } else {
        outcome.arms
    };
    if horizon <= outcome.cost_slots + arms.len() {
        return Err(Error::config(format!(
            "horizon {horizon} must exceed {} gate slots plus {} gated beams",
            outcome.cost_slots,
            arms.len()
        )));
    }
    let mut records: Vec<SlotRecord> = (1..=outcome.cost_slots).map(|t| gate_record(t, algorithm)).collect();
    let mut state = BanditState::new(k, horizon, outcome.cost_slots, arms.clone())?;
    ucb_loop(env, &mut state, algorithm, &mut records)?;
    Ok(RunOutput {
        records,
        active_arms: arms,
        gate_cost: outcome.cost_slots,
        fallback,
        committed: None,
    })
}

/// Uniformly random beam every slot.
pub fn run_random<R: Rng + ?Sized>(env: &dyn Environment, horizon: usize, rng: &mut R) -> Result<RunOutput> {
    let k = env.num_arms();
    if horizon == 0 || k == 0 {
        return Err(Error::config("random selection needs a positive horizon and at least one beam"));
    }
    let records = (1..=horizon)
        .map(|t| play(env, rng.random_range(0..k), t, Algorithm::Random))
        .collect();
    Ok(RunOutput {
        records,
        active_arms: (0..k).collect(),
        gate_cost: 0,
        fallback: false,
        committed: None,
    })
}

/// Genie that plays the best arm every slot.
pub fn run_dbf(env: &dyn Environment, horizon: usize) -> Result<RunOutput> {
    if horizon == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    let best = env.best_arm();
    let records = (1..=horizon).map(|t| play(env, best, t, Algorithm::Dbf)).collect();
    Ok(RunOutput {
        records,
        active_arms: (0..env.num_arms()).collect(),
        gate_cost: 0,
        fallback: false,
        committed: Some(best),
    })
}

/// LUCB best-arm identification, then commitment.
///
/// After one pull per arm, each round pulls the empirical leader `h` and the
/// challenger `l` with the highest upper bound among the rest, where the
/// confidence radius is `sqrt(ln(1.25 K t^4 / delta) / (2 N))`. Sampling stops
/// once `LCB_h > UCB_l`, and `h` is played for the rest of the horizon.
pub fn run_lucb(env: &dyn Environment, horizon: usize, delta: f64) -> Result<RunOutput> {
    let k = env.num_arms();
    if horizon < 2 * k || k == 0 {
        return Err(Error::config(format!(
            "LUCB needs a horizon of at least {} slots, got {horizon}",
            2 * k
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config(format!("LUCB confidence must lie in (0, 1), got {delta}")));
    }
    let mut state = BanditState::new(k, horizon, 0, (0..k).collect())?;
    let mut records = Vec::with_capacity(horizon);
    let pull = |arm: usize, state: &mut BanditState, records: &mut Vec<SlotRecord>| -> Result<()> {
        let record = play(env, arm, state.clock + 1, Algorithm::Lucb);
        state.update(arm, record.reward)?;
        records.push(record);
        Ok(())
    };
    for arm in 0..k {
        pull(arm, &mut state, &mut records)?;
    }

    let mut committed = None;
    while state.clock < horizon {
        let t = state.clock as f64;
        let radius = |n: u64| ((1.25 * k as f64 * t.powi(4) / delta).ln() / (2.0 * n as f64)).sqrt();
        let mean = |a: usize| state.reward_sums[a] / state.pulls[a] as f64;
        let h = argmax((0..k).map(|a| (a, mean(a)))).expect("k >= 1");
        if k == 1 {
            committed = Some(h);
            break;
        }
        let l = argmax(
            (0..k)
                .filter(|&a| a != h)
                .map(|a| (a, mean(a) + radius(state.pulls[a]))),
        )
        .expect("k >= 2");
        if mean(h) - radius(state.pulls[h]) > mean(l) + radius(state.pulls[l]) {
            committed = Some(h);
            break;
        }
        pull(h, &mut state, &mut records)?;
        if state.clock < horizon {
            pull(l, &mut state, &mut records)?;
        }
    }
    if let Some(arm) = committed {
        while state.clock < horizon {
            pull(arm, &mut state, &mut records)?;
        }
    }
    Ok(RunOutput {
        records,
        active_arms: (0..k).collect(),
        gate_cost: 0,
        fallback: false,
        committed,
    })
}
