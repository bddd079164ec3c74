//! UCB beam selection, its radar-gated variants, baselines and regret.

mod policies;

pub use policies::{
    run_dbf, run_lucb, run_random, run_ucb_gated, run_ucb_snr, RunOutput, LUCB_DELTA,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::radar_rx::GateOutcome;
use crate::seed::mix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ucb,
    UcbAg,
    UcbDg,
    Random,
    Lucb,
    Dbf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Ucb,
        Algorithm::UcbAg,
        Algorithm::UcbDg,
        Algorithm::Random,
        Algorithm::Lucb,
        Algorithm::Dbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ucb => "ucb",
            Algorithm::UcbAg => "ucb-ag",
            Algorithm::UcbDg => "ucb-dg",
            Algorithm::Random => "random",
            Algorithm::Lucb => "lucb",
            Algorithm::Dbf => "dbf",
        }
    }

    /// Radar gate used by the algorithm, if any.
    pub fn gate(self) -> Option<GateKind> {
        match self {
            Algorithm::UcbAg => Some(GateKind::Amplitude),
            Algorithm::UcbDg => Some(GateKind::Doppler),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown algorithm {s:?}; expected one of ucb, ucb-ag, ucb-dg, random, lucb, dbf"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Amplitude,
    Doppler,
}

/// What the bandit sees after pulling an arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub reward: f64,
    pub ber: f64,
}

/// Stochastic arms. `slot` is the 1-based global slot; implementations may
/// use it to share per-slot randomness across policies.
pub trait Environment {
    fn num_arms(&self) -> usize;

    fn pull(&self, arm: usize, slot: usize) -> Observation;

    /// Expected reward of every arm.
    fn true_means(&self) -> &[f64];

    /// The arm with the highest expected reward, lowest index on ties.
    fn best_arm(&self) -> usize {
        argmax(self.true_means().iter().copied().enumerate()).unwrap_or(0)
    }
}

/// Source of radar-pruned arm sets.
pub trait RadarGate {
    fn gate(&self, kind: GateKind) -> Result<GateOutcome>;
}

/// One decision slot. `arm` is `None` for slots spent on radar processing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    /// 1-based slot index.
    pub slot: usize,
    pub arm: Option<usize>,
    pub reward: f64,
    pub ber: f64,
    pub algorithm: Algorithm,
}

/// Per-arm counters of a bandit run.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    pub pulls: Vec<u64>,
    pub reward_sums: Vec<f64>,
    /// Slots elapsed so far, gate slots included.
    pub clock: usize,
    pub horizon: usize,
    pub gate_cost: usize,
    pub active_arms: Vec<usize>,
}

impl BanditState {
    /// Fresh state over `num_arms` arms. The gate slots count as already elapsed.
    pub fn new(num_arms: usize, horizon: usize, gate_cost: usize, active_arms: Vec<usize>) -> Result<Self> {
        if active_arms.is_empty() {
            return Err(Error::Contract("bandit needs at least one active arm".into()));
        }
        if let Some(&bad) = active_arms.iter().find(|&&a| a >= num_arms) {
            return Err(Error::Contract(format!("active arm {bad} outside 0..{num_arms}")));
        }
        Ok(Self {
            pulls: vec![0; num_arms],
            reward_sums: vec![0.0; num_arms],
            clock: gate_cost,
            horizon,
            gate_cost,
            active_arms,
        })
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.pulls[arm] > 0).then(|| self.reward_sums[arm] / self.pulls[arm] as f64)
    }

    /// `S_k / N_k + sqrt(2 ln t / N_k)`.
    pub fn ucb_index(&self, arm: usize, t: usize) -> Result<f64> {
        let n = self.pulls[arm];
        if n == 0 {
            return Err(Error::Contract(format!("UCB index of unpulled arm {arm}")));
        }
        if t == 0 {
            return Err(Error::Contract("UCB index needs t >= 1".into()));
        }
        let n = n as f64;
        Ok(self.reward_sums[arm] / n + (2.0 * (t as f64).ln() / n).sqrt())
    }

    /// Next arm: the lowest-index unpulled active arm, otherwise the UCB argmax
    /// at the upcoming slot with ties to the lowest index.
    pub fn select_arm(&self) -> usize {
        if let Some(&arm) = self.active_arms.iter().find(|&&a| self.pulls[a] == 0) {
            return arm;
        }
        let t = self.clock + 1;
        argmax(
            self.active_arms
                .iter()
                .map(|&a| (a, self.ucb_index(a, t).expect("all active arms pulled"))),
        )
        .expect("active arms are nonempty")
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::Contract(format!("reward {reward} outside [0, 1]")));
        }
        if arm >= self.pulls.len() {
            return Err(Error::Contract(format!("arm {arm} outside 0..{}", self.pulls.len())));
        }
        self.pulls[arm] += 1;
        self.reward_sums[arm] += reward;
        self.clock += 1;
        Ok(())
    }
}

/// Index of the largest value; ties and NaNs resolve to the earliest item.
pub(crate) fn argmax(items: impl IntoIterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in items {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Cumulative regret of a trace against the true arm means:
/// `sum_k N_k (S* - S_k) + G S*`, where `G` counts gate slots.
pub fn regret(records: &[SlotRecord], true_means: &[f64]) -> f64 {
    let (pulls, gate) = count_pulls(records, true_means.len());
    regret_from_counts(&pulls, gate, true_means)
}

/// Regret after every slot of the trace.
pub fn cumulative_regret(records: &[SlotRecord], true_means: &[f64]) -> Vec<f64> {
    let mut pulls = vec![0u64; true_means.len()];
    let mut gate = 0u64;
    records
        .iter()
        .map(|r| {
            match r.arm {
                Some(a) => pulls[a] += 1,
                None => gate += 1,
            }
            regret_from_counts(&pulls, gate, true_means)
        })
        .collect()
}

fn count_pulls(records: &[SlotRecord], num_arms: usize) -> (Vec<u64>, u64) {
    let mut pulls = vec![0u64; num_arms];
    let mut gate = 0u64;
    for r in records {
        match r.arm {
            Some(a) => pulls[a] += 1,
            None => gate += 1,
        }
    }
    (pulls, gate)
}

fn regret_from_counts(pulls: &[u64], gate: u64, true_means: &[f64]) -> f64 {
    let best = true_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = gate as f64 * best;
    for (&n, &m) in pulls.iter().zip(true_means) {
        total += n as f64 * (best - m);
    }
    total
}

/// Arms with fixed means, either deterministic or Bernoulli. Bernoulli draws
/// are a pure function of `(seed, arm, slot)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticEnvironment {
    means: Vec<f64>,
    bernoulli: Option<u64>,
}

impl StaticEnvironment {
    /// Every pull returns the arm's mean exactly.
    pub fn deterministic(means: Vec<f64>) -> Self {
        Self { means, bernoulli: None }
    }

    /// Every pull returns 1 with probability equal to the arm's mean.
    pub fn bernoulli(means: Vec<f64>, seed: u64) -> Self {
        Self {
            means,
            bernoulli: Some(seed),
        }
    }
}

impl Environment for StaticEnvironment {
    fn num_arms(&self) -> usize {
        self.means.len()
    }

    fn pull(&self, arm: usize, slot: usize) -> Observation {
        let p = self.means[arm];
        let reward = match self.bernoulli {
            None => p,
            Some(seed) => {
                let h = mix64(mix64(seed ^ mix64(arm as u64)) ^ slot as u64);
                let u = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
        };
        Observation {
            reward,
            ber: 0.5 * (1.0 - reward),
        }
    }

    fn true_means(&self) -> &[f64] {
        &self.means
    }
}
