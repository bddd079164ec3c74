//! Seeded multi-trial experiments.

use log::{info, warn};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::scenegen::build_scene;
use crate::bandit::{
    cumulative_regret, run_dbf, run_lucb, run_random, run_ucb_gated, run_ucb_snr, Algorithm, Environment,
    GateKind, Observation, RadarGate, RunOutput, SlotRecord, LUCB_DELTA,
};
use crate::comm_link::{draw_fading, expected_ber, expected_reward, mean_snr, observe, throughput, LinkConfig};
use crate::error::Result;
use crate::radar_rx::{amplitude_gate, doppler_gate, scan_beams, GateConfig, GateOutcome, RadarScan};
use crate::scene::{ArrayConfig, Scene, WaveformConfig};
use crate::seed::{Domain, SeedTree};

/// The downlink of one trial seen as a bandit: per-beam mean SNRs and one
/// fading draw per slot shared by every beam and every policy.
#[derive(Debug, Clone)]
pub struct BeamEnvironment {
    snrs: Vec<Option<f64>>,
    means: Vec<f64>,
    fading: Vec<f64>,
    link: LinkConfig,
}

impl BeamEnvironment {
    pub fn new(
        scene: &Scene,
        waveform: &WaveformConfig,
        arrays: &ArrayConfig,
        link: &LinkConfig,
        horizon: usize,
        seeds: &SeedTree,
    ) -> Self {
        let snrs: Vec<Option<f64>> = (0..scene.grid().count())
            .map(|b| mean_snr(scene, b, arrays, waveform))
            .collect();
        let means = snrs.iter().map(|&s| expected_reward(s, link)).collect();
        let fading = (1..=horizon)
            .map(|t| {
                if link.fading {
                    draw_fading(&mut seeds.rng(Domain::Fading, t as u64))
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            snrs,
            means,
            fading,
            link: link.clone(),
        }
    }

    /// Mean SNR of every beam, `None` where the beam has no path to the user.
    pub fn mean_snrs(&self) -> &[Option<f64>] {
        &self.snrs
    }

    /// Expected BER of every beam.
    pub fn mean_bers(&self) -> Vec<f64> {
        self.snrs.iter().map(|&s| expected_ber(s, &self.link)).collect()
    }
}

impl Environment for BeamEnvironment {
    fn num_arms(&self) -> usize {
        self.snrs.len()
    }

    fn pull(&self, arm: usize, slot: usize) -> Observation {
        let fade = self.fading[slot - 1];
        let report = observe(slot, arm, self.snrs[arm].map(|s| s * fade), &self.link);
        Observation {
            reward: report.reward,
            ber: report.ber,
        }
    }

    fn true_means(&self) -> &[f64] {
        &self.means
    }
}

/// Gates backed by one shared radar scan of the trial.
pub struct ScanGate<'a> {
    pub scan: &'a RadarScan,
    pub config: &'a GateConfig,
    pub wavelength: f64,
}

impl RadarGate for ScanGate<'_> {
    fn gate(&self, kind: GateKind) -> Result<GateOutcome> {
        Ok(match kind {
            GateKind::Amplitude => amplitude_gate(self.scan, self.config),
            GateKind::Doppler => doppler_gate(self.scan, self.config, self.wavelength),
        })
    }
}

/// One algorithm's run in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub records: Vec<SlotRecord>,
    pub cum_regret: Vec<f64>,
    pub throughput_bps: f64,
    pub active_arms: Vec<usize>,
    pub fallback: bool,
    pub user_beam: usize,
}

impl TrialTrace {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }
}

/// Mean and standard error across trials for one algorithm, at the end of
/// the horizon (`slot == None`) or after a given slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep_value: Option<f64>,
    pub algorithm: Algorithm,
    pub slot: Option<usize>,
    pub mean_throughput_bps: f64,
    pub se_throughput: f64,
    pub mean_regret: f64,
    pub se_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub sweep_value: Option<f64>,
    /// Algorithms in output order.
    pub algorithms: Vec<Algorithm>,
    /// Ordered by algorithm, then trial.
    pub traces: Vec<TrialTrace>,
    /// One end-of-horizon row per algorithm.
    pub rows: Vec<AggregateRow>,
    pub link: LinkConfig,
}

impl ExperimentResult {
    pub fn row(&self, algorithm: Algorithm) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn traces_of(&self, algorithm: Algorithm) -> impl Iterator<Item = &TrialTrace> + '_ {
        self.traces.iter().filter(move |t| t.algorithm == algorithm)
    }

    /// Per-slot rows: running throughput and cumulative regret after each slot.
    pub fn time_series(&self, algorithm: Algorithm) -> Vec<AggregateRow> {
        let traces: Vec<&TrialTrace> = self.traces_of(algorithm).collect();
        let Some(first) = traces.first() else {
            return Vec::new();
        };
        let mut ber_sums = vec![0.0; traces.len()];
        let mut counted = vec![0usize; traces.len()];
        (0..first.records.len())
            .map(|i| {
                let mut rates = Vec::with_capacity(traces.len());
                let mut regrets = Vec::with_capacity(traces.len());
                for (j, t) in traces.iter().enumerate() {
                    let r = &t.records[i];
                    if r.arm.is_some() || self.link.charge_gate_slots {
                        ber_sums[j] += r.ber;
                        counted[j] += 1;
                    }
                    let rate = if counted[j] == 0 {
                        0.0
                    } else {
                        (1.0 - ber_sums[j] / counted[j] as f64) * self.link.peak_rate()
                    };
                    rates.push(rate);
                    regrets.push(t.cum_regret[i]);
                }
                let (mt, st) = mean_se(&rates);
                let (mr, sr) = mean_se(&regrets);
                AggregateRow {
                    sweep_value: self.sweep_value,
                    algorithm,
                    slot: Some(i + 1),
                    mean_throughput_bps: mt,
                    se_throughput: st,
                    mean_regret: mr,
                    se_regret: sr,
                }
            })
            .collect()
    }
}

/// Sample mean and standard error of the mean (zero for a single sample).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Throughput of a trace under the link's gate-slot accounting.
pub fn trace_throughput(records: &[SlotRecord], link: &LinkConfig) -> Result<f64> {
    let bers: Vec<f64> = records
        .iter()
        .filter(|r| r.arm.is_some() || link.charge_gate_slots)
        .map(|r| r.ber)
        .collect();
    throughput(&bers, link.bits_per_slot, link.slot_duration)
}

struct Prepared {
    waveform: WaveformConfig,
    arrays: ArrayConfig,
    grid: crate::scene::BeamGrid,
    gate: GateConfig,
    link: LinkConfig,
    algorithms: Vec<Algorithm>,
}

fn run_trial(config: &ExperimentConfig, p: &Prepared, trial: usize) -> Result<Vec<TrialTrace>> {
    let seeds = SeedTree::for_trial(config.seed, trial as u64);
    let scene = build_scene(config, &p.waveform, &p.arrays, &p.grid, &seeds)?;
    let env = BeamEnvironment::new(&scene, &p.waveform, &p.arrays, &p.link, config.horizon, &seeds);
    let scan = if p.algorithms.iter().any(|a| a.gate().is_some()) {
        Some(scan_beams(&scene, &p.waveform, &p.arrays, &p.gate, &seeds)?)
    } else {
        None
    };

    p.algorithms
        .iter()
        .map(|&alg| {
            let out: RunOutput = match alg {
                Algorithm::Ucb => run_ucb_snr(&env, config.horizon)?,
                Algorithm::UcbAg | Algorithm::UcbDg => {
                    let gate = ScanGate {
                        scan: scan.as_ref().expect("scan runs for gated algorithms"),
                        config: &p.gate,
                        wavelength: p.waveform.wavelength,
                    };
                    run_ucb_gated(&env, &gate, alg.gate().expect("gated"), config.horizon)?
                }
                Algorithm::Random => run_random(&env, config.horizon, &mut seeds.rng(Domain::Policy, 0))?,
                Algorithm::Lucb => run_lucb(&env, config.horizon, LUCB_DELTA)?,
                Algorithm::Dbf => run_dbf(&env, config.horizon)?,
            };
            if out.fallback {
                warn!("trial {trial}: {alg} gate was empty, used the full grid");
            }
            let cum_regret = cumulative_regret(&out.records, env.true_means());
            Ok(TrialTrace {
                trial,
                algorithm: alg,
                throughput_bps: trace_throughput(&out.records, &p.link)?,
                records: out.records,
                cum_regret,
                active_arms: out.active_arms,
                fallback: out.fallback,
                user_beam: scene.user_beam(),
            })
        })
        .collect()
}

/// Runs every trial of `config` (ignoring any sweep section) and aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut single = config.clone();
    single.sweep = None;
    single.validate()?;
    run_validated(&single, None)
}

fn run_validated(config: &ExperimentConfig, sweep_value: Option<f64>) -> Result<ExperimentResult> {
    let waveform = config.waveform_config()?;
    let prepared = Prepared {
        arrays: config.array_config(&waveform)?,
        grid: config.beam_grid()?,
        gate: config.gate_config()?,
        link: config.link_config(),
        algorithms: config.sorted_algorithms(),
        waveform,
    };
    info!(
        "running {} trials x {} algorithms, horizon {}{}",
        config.trials,
        prepared.algorithms.len(),
        config.horizon,
        sweep_value.map_or(String::new(), |v| format!(" (sweep value {v})"))
    );
    let per_trial: Vec<Vec<TrialTrace>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, &prepared, trial))
        .collect::<Result<_>>()?;

    let mut traces = Vec::with_capacity(config.trials * prepared.algorithms.len());
    let mut rows = Vec::with_capacity(prepared.algorithms.len());
    for (i, &alg) in prepared.algorithms.iter().enumerate() {
        let of_alg: Vec<TrialTrace> = per_trial.iter().map(|t| t[i].clone()).collect();
        let rates: Vec<f64> = of_alg.iter().map(|t| t.throughput_bps).collect();
        let regrets: Vec<f64> = of_alg.iter().map(|t| t.final_regret()).collect();
        let (mt, st) = mean_se(&rates);
        let (mr, sr) = mean_se(&regrets);
        rows.push(AggregateRow {
            sweep_value,
            algorithm: alg,
            slot: None,
            mean_throughput_bps: mt,
            se_throughput: st,
            mean_regret: mr,
            se_regret: sr,
        });
        traces.extend(of_alg);
    }
    Ok(ExperimentResult {
        sweep_value,
        algorithms: prepared.algorithms,
        traces,
        rows,
        link: prepared.link,
    })
}

/// Runs the experiment once per sweep value. Trials reuse the same seeds at
/// every value, so differences between values are not masked by resampling.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| crate::error::Error::config("config has no [sweep] section"))?;
    config.validate()?;
    sweep
        .values
        .iter()
        .map(|&v| {
            let mut c = config.with_sweep_value(sweep.parameter, v)?;
            c.sweep = None;
            run_validated(&c, Some(v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm_link::ber_16qam;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            trials: 2,
            horizon: 120,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn mean_se_values() {
        assert_eq!(mean_se(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conservation_and_layout() {
        let r = run_experiment(&small()).unwrap();
        assert_eq!(r.algorithms.len(), 6);
        assert_eq!(r.traces.len(), 12);
        assert_eq!(r.rows.len(), 6);
        for t in &r.traces {
            assert_eq!(t.records.len(), 120);
            assert_eq!(t.cum_regret.len(), 120);
            for (i, rec) in t.records.iter().enumerate() {
                assert_eq!(rec.slot, i + 1);
                assert_eq!(rec.algorithm, t.algorithm);
            }
            let gate = t.records.iter().filter(|r| r.arm.is_none()).count();
            let expected_gate = if t.algorithm.gate().is_some() { 9 } else { 0 };
            assert_eq!(gate, expected_gate);
            assert!(t.cum_regret.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn dbf_noiseless_link_closed_form() {
        let mut c = small();
        c.trials = 1;
        c.algorithms = vec![Algorithm::Dbf];
        c.link.fading = false;
        let r = run_experiment(&c).unwrap();
        let snr = 10f64.powf(c.comm_snr_db / 10.0);
        let expected = (1.0 - ber_16qam(snr)) * 4096.0 / 4e-3;
        assert_eq!(r.rows[0].mean_throughput_bps, expected);
        assert_eq!(r.rows[0].mean_regret, 0.0);
    }

    #[test]
    fn deterministic() {
        let a = run_experiment(&small()).unwrap();
        let b = run_experiment(&small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gate_slot_accounting_flag() {
        let mut c = small();
        c.algorithms = vec![Algorithm::UcbAg];
        let charged = run_experiment(&c).unwrap();
        c.link.charge_gate_slots = false;
        let free = run_experiment(&c).unwrap();
        assert!(free.rows[0].mean_throughput_bps > charged.rows[0].mean_throughput_bps);
        assert_eq!(free.rows[0].mean_regret, charged.rows[0].mean_regret);
    }

    #[test]
    fn time_series_ends_at_summary() {
        let r = run_experiment(&small()).unwrap();
        for &alg in &r.algorithms {
            let ts = r.time_series(alg);
            let last = ts.last().unwrap();
            let row = r.row(alg).unwrap();
            assert!((last.mean_throughput_bps - row.mean_throughput_bps).abs() < 1e-6);
            assert_eq!(last.mean_regret, row.mean_regret);
        }
    }

    #[test]
    fn environment_shares_fading_across_beams() {
        let c = small();
        let wf = c.waveform_config().unwrap();
        let arrays = c.array_config(&wf).unwrap();
        let grid = c.beam_grid().unwrap();
        let seeds = SeedTree::for_trial(1, 0);
        let scene = build_scene(&c, &wf, &arrays, &grid, &seeds).unwrap();
        let env = BeamEnvironment::new(&scene, &wf, &arrays, &c.link_config(), c.horizon, &seeds);
        let best = env.best_arm();
        assert_eq!(best, scene.user_beam());
        for slot in 1..=c.horizon {
            let b = env.pull(best, slot);
            for arm in 0..env.num_arms() {
                let o = env.pull(arm, slot);
                assert!(o.reward <= b.reward && o.ber >= b.ber);
            }
        }
    }
}
