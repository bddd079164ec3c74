//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use jrc_bandit::bandit::{regret, SlotRecord};
use jrc_bandit::harness::{
    build_scene, emit_csv, run_experiment, run_sweep, BeamEnvironment, ExperimentConfig, ExperimentResult,
    SweepParameter, SweepSection,
};
use jrc_bandit::radar_rx::{
    amplitude_gate, calibrate_scale, doppler_gate, matched_filter, music_doppler, os_cfar,
    scan_beams, simulate_radar_return, CfarParams,
};
use jrc_bandit::scene::{doppler_shift, make_beam_grid, path_params, steering_vector, Target};
use jrc_bandit::seed::SeedTree;
use jrc_bandit::waveform::{array_response, autocorrelation, beamform_weights, build_packet, golay_pair};
use jrc_bandit::{Algorithm, ArrayConfig, Complex64, Environment, Scene, WaveformConfig, SPEED_OF_LIGHT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn noise(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn golay_exactness() -> Outcome {
    let mut len = 2;
    while len <= 1024 {
        let pair = golay_pair(len).unwrap();
        let ra = autocorrelation(&pair.seq_a);
        let rb = autocorrelation(&pair.seq_b);
        let center = len - 1;
        for (lag, (a, b)) in ra.iter().zip(&rb).enumerate() {
            let expected = if lag == center { 2 * len as i64 } else { 0 };
            if a + b != expected {
                return outcome(false, format!("length {len}, lag {}: sum {}", lag as i64 - center as i64, a + b));
            }
        }
        len *= 2;
    }
    outcome(true, "lengths 2..1024, every lag exact")
}

fn matched_filter_calibration() -> Outcome {
    let energy = 2.5;
    let wf = WaveformConfig::new(60e9, 1.76e9, 128, 2e-4, 1, energy, 200.0).unwrap();
    let arrays = ArrayConfig::half_wavelength(32, 32, &wf).unwrap();
    let grid = make_beam_grid((-80f64).to_radians(), 80f64.to_radians(), 4f64.to_radians()).unwrap();
    let scene = Scene::build(
        vec![Target::mobile_user([50.0, 20.0, 0.0], 3.0)],
        grid,
        &wf,
        &arrays,
        f64::INFINITY,
        20.0,
    )
    .unwrap();
    let beam = scene.user_beam();
    let packet = build_packet(&golay_pair(128).unwrap(), 1, &wf, true).unwrap();
    let cube = simulate_radar_return(&scene, beam, &packet, &wf, &arrays, &mut ChaCha8Rng::seed_from_u64(0));
    let profile: Vec<f64> = matched_filter(&cube, &packet)[0].iter().map(|z| z.norm()).collect();
    let (bin, peak) = profile
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });

    let theta = scene.grid().angle(beam);
    let u = steering_vector(theta, arrays.num_elements_bs, arrays.element_spacing_bs, wf.propagation_const);
    let g = array_response(&beamform_weights(theta, &arrays, &wf), &u).norm();
    let user = scene.user();
    let r = user.range();
    let leg = wf.wavelength / (4.0 * PI * r);
    let expected = 128.0 * energy * g * g * user.reflectivity * leg * leg;
    let expected_bin = (2.0 * r * wf.bandwidth / SPEED_OF_LIGHT).round() as usize;
    let rel = (peak - expected).abs() / expected;
    let pass = rel <= 1e-9 && bin == expected_bin && bin == path_params(&scene, beam, &wf)[0].sample_index;
    outcome(pass, format!("bin {bin} (expected {expected_bin}), relative error {rel:.2e} (limit 1e-9)"))
}

fn cfar_calibration() -> Outcome {
    let cells = 1_000_000;
    let pfa = 1e-3;
    let scale = calibrate_scale(pfa, cells, 16, 2, 12, 1, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let profile: Vec<f64> = (0..cells).map(|_| noise(&mut rng, 1.0).norm()).collect();
    let params = CfarParams {
        num_training: 16,
        num_guard: 2,
        os_rank: 12,
        scale,
    };
    let rate = os_cfar(&profile, &params).unwrap().len() as f64 / cells as f64;
    outcome(
        (5e-4..=2e-3).contains(&rate),
        format!("scale {scale:.4}, empirical rate {rate:.3e} (window [5e-4, 2e-3])"),
    )
}

fn music_accuracy() -> Outcome {
    let tp = 2e-4;
    let q = 10;
    let step = doppler_shift(1.0, SPEED_OF_LIGHT / 60e9);
    let band = 1.0 / (2.0 * tp);
    let runs = 200;
    let mut hits = 0;
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let f = rng.random_range(-0.9 * band..0.9 * band);
        let phase = rng.random_range(0.0..2.0 * PI);
        let samples: Vec<Complex64> = (0..q)
            .map(|k| Complex64::from_polar(1.0, phase - 2.0 * PI * f * k as f64 * tp) + noise(&mut rng, 1.0))
            .collect();
        let est = music_doppler(&samples, tp, step, 1).unwrap();
        if (est - f).abs() <= step {
            hits += 1;
        }
    }
    let frac = hits as f64 / runs as f64;
    outcome(
        frac >= 0.95,
        format!("{hits}/{runs} within {step:.1} Hz at 0 dB (need 95%)"),
    )
}

fn gate_inclusion() -> Outcome {
    let config = ExperimentConfig::default();
    let wf = config.waveform_config().unwrap();
    let arrays = config.array_config(&wf).unwrap();
    let grid = config.beam_grid().unwrap();
    let gate = config.gate_config().unwrap();
    let runs = 200;
    let (mut in_ag, mut in_dg, mut nested) = (0, 0, 0);
    for run in 0..runs {
        let seeds = SeedTree::for_trial(77, run);
        let scene = build_scene(&config, &wf, &arrays, &grid, &seeds).unwrap();
        let scan = scan_beams(&scene, &wf, &arrays, &gate, &seeds).unwrap();
        let ag = amplitude_gate(&scan, &gate).arms;
        let dg = doppler_gate(&scan, &gate, wf.wavelength).arms;
        let mu = scene.user_beam();
        in_ag += ag.contains(&mu) as usize;
        in_dg += dg.contains(&mu) as usize;
        let ok = ag.iter().all(|&b| b < grid.count()) && dg.iter().all(|b| ag.contains(b));
        nested += ok as usize;
    }
    let need = (0.99 * runs as f64).ceil() as usize;
    outcome(
        in_ag >= need && in_dg >= need && nested == runs as usize,
        format!("user in amplitude set {in_ag}/{runs}, in Doppler set {in_dg}/{runs}, nested {nested}/{runs}"),
    )
}

fn mean_se(result: &ExperimentResult, alg: Algorithm) -> (f64, f64) {
    let row = result.row(alg).expect("algorithm present");
    (row.mean_throughput_bps, row.se_throughput)
}

/// `a - b` and the standard error of that difference.
fn gap(result: &ExperimentResult, a: Algorithm, b: Algorithm) -> (f64, f64) {
    let (ma, sa) = mean_se(result, a);
    let (mb, sb) = mean_se(result, b);
    (ma - mb, sa.hypot(sb))
}

fn ordering(baseline: &ExperimentResult) -> Outcome {
    use Algorithm::*;
    let chain = [Dbf, UcbDg, UcbAg, Ucb, Random];
    let mut pass = true;
    let mut parts = Vec::new();
    for w in chain.windows(2) {
        let (d, se) = gap(baseline, w[0], w[1]);
        let ok = if w[0] == Dbf { d >= 0.0 } else { d >= se };
        pass &= ok;
        parts.push(format!("{}-{} {d:.0} (se {se:.0})", w[0], w[1]));
    }
    outcome(pass, parts.join(", "))
}

fn sweep(config: &ExperimentConfig, parameter: SweepParameter, values: &[f64]) -> Vec<ExperimentResult> {
    let mut c = config.clone();
    c.algorithms = vec![Algorithm::Ucb, Algorithm::UcbAg, Algorithm::UcbDg, Algorithm::Random];
    c.sweep = Some(SweepSection {
        parameter,
        values: values.to_vec(),
    });
    run_sweep(&c).unwrap()
}

fn gap_shrinkage(r: &[ExperimentResult]) -> Outcome {
    let (g2, s2) = gap(&r[0], Algorithm::UcbAg, Algorithm::Ucb);
    let (g8, s8) = gap(&r[1], Algorithm::UcbAg, Algorithm::Ucb);
    let se = s2.hypot(s8);
    outcome(
        g2 - g8 >= se,
        format!("AG-UCB gap {g2:.0} at 2 scatterers, {g8:.0} at 8 (shrink {:.0}, se {se:.0})", g2 - g8),
    )
}

fn angular_resolution(r: &[ExperimentResult]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alg in [Algorithm::UcbAg, Algorithm::UcbDg] {
        let (fine, sf) = gap(&r[0], alg, Algorithm::Ucb);
        let (coarse, sc) = gap(&r[1], alg, Algorithm::Ucb);
        let se = sf.hypot(sc);
        pass &= fine - coarse >= se;
        parts.push(format!("{alg}-ucb {fine:.0} at 2 deg vs {coarse:.0} at 8 deg (se {se:.0})"));
    }
    outcome(pass, parts.join(", "))
}

fn velocity_crossover(r: &[ExperimentResult]) -> Outcome {
    let (d1, _) = gap(&r[0], Algorithm::UcbDg, Algorithm::UcbAg);
    let (d5, _) = gap(&r[1], Algorithm::UcbDg, Algorithm::UcbAg);
    outcome(d1 >= 0.0 && d5 <= 0.0, format!("DG-AG {d1:.0} at 1 m/s, {d5:.0} at 5 m/s"))
}

fn radar_snr(r: &[ExperimentResult]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alg in [Algorithm::UcbAg, Algorithm::UcbDg] {
        let means: Vec<f64> = r.iter().map(|x| mean_se(x, alg).0).collect();
        pass &= means.windows(2).all(|w| w[1] >= w[0]);
        parts.push(format!("{alg} {:.0?}", means));
    }
    for alg in [Algorithm::Ucb, Algorithm::Random] {
        let (m0, s0) = mean_se(&r[0], alg);
        let flat = r.iter().all(|x| {
            let (m, s) = mean_se(x, alg);
            (m - m0).abs() <= s.hypot(s0)
        });
        pass &= flat;
        parts.push(format!("{alg} flat {flat}"));
    }
    outcome(pass, parts.join(", "))
}

fn scs1_effect(r: &[ExperimentResult]) -> Outcome {
    let gaps: Vec<f64> = r.iter().map(|x| gap(x, Algorithm::UcbDg, Algorithm::UcbAg).0).collect();
    outcome(
        gaps.windows(2).all(|w| w[1] >= w[0]),
        format!("DG-AG gap {:.0?} for 1, 2, 4 direct scatterers", gaps),
    )
}

struct TraceRow {
    trial: usize,
    algorithm: String,
    beam: i64,
    cum_regret: f64,
}

fn read_trace(path: &Path) -> Vec<TraceRow> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (ti, ai, bi, ci) = (col("trial"), col("algorithm"), col("beam"), col("cum_regret"));
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            TraceRow {
                trial: r[ti].parse().unwrap(),
                algorithm: r[ai].to_string(),
                beam: r[bi].parse().unwrap(),
                cum_regret: r[ci].parse().unwrap(),
            }
        })
        .collect()
}

fn regret_sanity(config: &ExperimentConfig, dir: &Path) -> Outcome {
    let rows = read_trace(&dir.join("trace.csv"));
    let wf = config.waveform_config().unwrap();
    let arrays = config.array_config(&wf).unwrap();
    let grid = config.beam_grid().unwrap();
    let link = config.link_config();

    let mut mismatches = 0;
    let mut checked = 0;
    let mut start = 0;
    while start < rows.len() {
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| r.trial == rows[start].trial && r.algorithm == rows[start].algorithm)
                .count();
        let seeds = SeedTree::for_trial(config.seed, rows[start].trial as u64);
        let scene = build_scene(config, &wf, &arrays, &grid, &seeds).unwrap();
        let env = BeamEnvironment::new(&scene, &wf, &arrays, &link, config.horizon, &seeds);
        let means = env.true_means();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut pulls = vec![0u64; means.len()];
        let mut gate = 0u64;
        for r in &rows[start..end] {
            if r.beam < 0 {
                gate += 1;
            } else {
                pulls[r.beam as usize] += 1;
            }
            let mut expected = gate as f64 * best;
            for (k, &n) in pulls.iter().enumerate() {
                expected += n as f64 * (best - means[k]);
            }
            mismatches += (expected != r.cum_regret) as usize;
            checked += 1;
        }
        start = end;
    }

    let records: Vec<SlotRecord> = (1..=100)
        .map(|slot| SlotRecord {
            slot,
            arm: Some(if slot <= 90 { 0 } else { 1 }),
            reward: 0.0,
            ber: 0.0,
            algorithm: Algorithm::Ucb,
        })
        .collect();
    let example = regret(&records, &[0.9, 0.5]);
    let example_ok = (example - 4.0).abs() <= 1e-12;
    outcome(
        mismatches == 0 && checked > 0 && example_ok,
        format!("{checked} trace rows recomputed, {mismatches} mismatches; two-arm example {example}"),
    )
}

fn determinism(config: &ExperimentConfig, first: &Path, scratch: &Path) -> Outcome {
    let again = run_experiment(config).unwrap();
    emit_csv(std::slice::from_ref(&again), scratch).unwrap();
    let mut snr = config.clone();
    snr.algorithms = vec![Algorithm::UcbAg, Algorithm::UcbDg];
    snr.trials = 4;
    snr.sweep = Some(SweepSection {
        parameter: SweepParameter::RadarSnrDb,
        values: vec![-10.0, 10.0],
    });
    let (a, b) = (scratch.join("sweep_a"), scratch.join("sweep_b"));
    emit_csv(&run_sweep(&snr).unwrap(), &a).unwrap();
    emit_csv(&run_sweep(&snr).unwrap(), &b).unwrap();

    let same = |x: &Path, y: &Path| std::fs::read(x).unwrap() == std::fs::read(y).unwrap();
    let pass = ["trace.csv", "summary.csv"]
        .iter()
        .all(|f| same(&first.join(f), &scratch.join(f)) && same(&a.join(f), &b.join(f)));
    outcome(pass, "baseline run and radar SNR sweep, trace.csv and summary.csv")
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} {:>2} {name}: {} [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            id,
            o.detail
        );
        results.push((id, name, o, secs));
    };

    record(1, "golay exactness", &mut golay_exactness);
    record(2, "matched filter calibration", &mut matched_filter_calibration);
    record(3, "cfar calibration", &mut cfar_calibration);
    record(4, "music accuracy", &mut music_accuracy);
    record(5, "gate inclusion", &mut gate_inclusion);

    let config = ExperimentConfig::default();
    let baseline = run_experiment(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    emit_csv(std::slice::from_ref(&baseline), &first).unwrap();

    record(6, "throughput ordering", &mut || ordering(&baseline));
    record(7, "gap shrinkage", &mut || {
        gap_shrinkage(&sweep(&config, SweepParameter::NumScs, &[2.0, 8.0]))
    });
    record(8, "angular resolution", &mut || {
        angular_resolution(&sweep(&config, SweepParameter::AngularResolution, &[2.0, 8.0]))
    });
    record(9, "velocity resolution crossover", &mut || {
        velocity_crossover(&sweep(&config, SweepParameter::VelocityResolution, &[1.0, 5.0]))
    });
    record(10, "radar snr sensitivity", &mut || {
        radar_snr(&sweep(&config, SweepParameter::RadarSnrDb, &[-10.0, 0.0, 10.0]))
    });
    record(11, "direct scatterer effect", &mut || {
        scs1_effect(&sweep(&config, SweepParameter::NumScs1, &[1.0, 2.0, 4.0]))
    });
    record(12, "regret sanity", &mut || regret_sanity(&config, &first));
    record(13, "determinism", &mut || determinism(&config, &first, &dir.path().join("second")));

    let failed: Vec<_> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
