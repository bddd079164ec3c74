//! Radar receive chain: two-way returns, matched filtering, OS-CFAR detection,
//! MUSIC Doppler estimation and the beam gates built on top of them.

mod cfar;
mod gate;
mod music;

pub use cfar::{
    calibrate_scale, false_alarm_probability, ordered_statistic, os_cfar, scale_for_pfa, CfarDetection,
    CfarParams,
};
pub use gate::{
    amplitude_gate, doppler_gate, doppler_threshold, scan_beam, scan_beams, GateConfig, GateOutcome,
    RadarScan, DEFAULT_GATE_SLOTS,
};
pub use music::{music_doppler, music_pseudospectrum, MusicParams};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scene::{path_params, steering_vector, ArrayConfig, Scene, WaveformConfig};
use crate::waveform::{array_response, beamform_weights, Packet};

/// Fast-time by slow-time samples of one beam: `data[q][m]` is sample `m` of
/// packet `q + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCube {
    pub data: Vec<Vec<Complex64>>,
    pub beam_index: usize,
}

impl RadarCube {
    pub fn fast_time_len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn num_packets(&self) -> usize {
        self.data.len()
    }
}

/// One CFAR peak with its range and (optionally) its Doppler estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub range_bin: usize,
    pub range_m: f64,
    pub amplitude: f64,
    pub threshold: f64,
    pub doppler_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub beam_index: usize,
    pub peaks: Vec<Peak>,
}

/// Fast-time length of a cube: the range window plus one packet.
pub fn fast_time_len(config: &WaveformConfig) -> usize {
    config.max_sample_index() + config.samples_per_packet
}

/// Simulates the `Q`-packet return through `beam`.
///
/// Each path adds `gain * (w . u)^2 * x[m - m_b] * exp(-j 2 pi f_b q T_P)` to
/// packet `q`, followed by circular complex Gaussian noise of power
/// `scene.noise_power_radar` per sample.
pub fn simulate_radar_return<R: Rng + ?Sized>(
    scene: &Scene,
    beam: usize,
    packet: &Packet,
    config: &WaveformConfig,
    arrays: &ArrayConfig,
    rng: &mut R,
) -> RadarCube {
    let len = fast_time_len(config);
    let theta = scene.grid().angle(beam);
    let weights = beamform_weights(theta, arrays, config);
    let steering = steering_vector(
        theta,
        arrays.num_elements_bs,
        arrays.element_spacing_bs,
        config.propagation_const,
    );
    let array_gain = array_response(&weights, &steering);
    let paths = path_params(scene, beam, config);
    let sigma = (scene.noise_power_radar / 2.0).sqrt();

    let data = (1..=config.num_packets)
        .map(|q| {
            let mut column = vec![Complex64::new(0.0, 0.0); len];
            for p in &paths {
                let rotation =
                    Complex64::from_polar(1.0, -2.0 * PI * p.doppler * q as f64 * config.pulse_rep_interval);
                let coeff = array_gain * array_gain * p.two_way_gain * rotation;
                let end = (p.sample_index + packet.samples.len()).min(len);
                for (dst, x) in column[p.sample_index..end].iter_mut().zip(&packet.samples) {
                    *dst += coeff * x;
                }
            }
            if sigma > 0.0 {
                for z in column.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *z += Complex64::new(sigma * re, sigma * im);
                }
            }
            column
        })
        .collect();
    RadarCube {
        data,
        beam_index: beam,
    }
}

/// Correlates each packet column with the reference packet.
///
/// Output bin `n` of column `q` is `sum_m r_q[n + m] conj(x[m])`, for
/// `n = 0..=len - M`; a clean echo delayed by `m_b` samples peaks at bin `m_b`
/// with magnitude `M E_s |gain|`.
pub fn matched_filter(cube: &RadarCube, reference: &Packet) -> Vec<Vec<Complex64>> {
    let taps: Vec<Complex64> = reference.samples.iter().map(|z| z.conj()).collect();
    cube.data
        .iter()
        .map(|column| {
            if column.len() < taps.len() {
                return Vec::new();
            }
            column
                .windows(taps.len())
                .map(|w| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, t) in w.iter().zip(&taps) {
                        acc += x * t;
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Noncoherent detection profile: root-mean-square magnitude across packets.
pub fn integrate_profiles(profiles: &[Vec<Complex64>]) -> Vec<f64> {
    let Some(first) = profiles.first() else {
        return Vec::new();
    };
    let q = profiles.len() as f64;
    (0..first.len())
        .map(|n| (profiles.iter().map(|p| p[n].norm_sqr()).sum::<f64>() / q).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{make_beam_grid, Target, TargetKind};
    use crate::waveform::{build_packet, golay_pair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(targets: Vec<Target>, snr_db: f64) -> (Scene, WaveformConfig, ArrayConfig, Packet) {
        let wf = WaveformConfig::new(60e9, 1.76e9, 128, 2e-4, 10, 1.0, 200.0).unwrap();
        let arrays = ArrayConfig::half_wavelength(32, 32, &wf).unwrap();
        let grid = make_beam_grid((-80f64).to_radians(), 80f64.to_radians(), 4f64.to_radians()).unwrap();
        let scene = Scene::build(targets, grid, &wf, &arrays, snr_db, 20.0).unwrap();
        let packet = build_packet(&golay_pair(128).unwrap(), 1, &wf, true).unwrap();
        (scene, wf, arrays, packet)
    }

    fn mu() -> Target {
        Target::mobile_user([50.0, 20.0, 0.0], 3.0)
    }

    #[test]
    fn empty_beam_noiseless_is_zero() {
        let (scene, wf, arrays, packet) = setup(vec![mu()], f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cube = simulate_radar_return(&scene, 0, &packet, &wf, &arrays, &mut rng);
        assert_eq!(cube.num_packets(), 10);
        assert!(cube.fast_time_len() >= 128);
        assert!(cube.data.iter().flatten().all(|z| z.norm() == 0.0));
        let profiles = matched_filter(&cube, &packet);
        assert!(profiles.iter().flatten().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn static_target_has_identical_columns() {
        let scs = Target::clutter(TargetKind::StaticDirect, [40.0, 0.0, 0.0]);
        let (scene, wf, arrays, packet) = setup(vec![mu(), scs], f64::INFINITY);
        let beam = scene.target_beams()[1];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cube = simulate_radar_return(&scene, beam, &packet, &wf, &arrays, &mut rng);
        for col in &cube.data[1..] {
            assert_eq!(col, &cube.data[0]);
        }
    }

    #[test]
    fn user_columns_rotate_with_doppler() {
        let (scene, wf, arrays, packet) = setup(vec![mu()], f64::INFINITY);
        let beam = scene.user_beam();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cube = simulate_radar_return(&scene, beam, &packet, &wf, &arrays, &mut rng);
        let path = &path_params(&scene, beam, &wf)[0];
        let m = path.sample_index;
        let fd = crate::scene::doppler_shift(3.0, wf.wavelength);
        for q in 1..cube.num_packets() {
            let ratio = cube.data[q][m] / cube.data[q - 1][m];
            let expected = Complex64::from_polar(1.0, -2.0 * PI * fd * wf.pulse_rep_interval);
            assert!((ratio - expected).norm() < 1e-9);
        }
        let first = cube.data[0][m] / Complex64::from_polar(1.0, -2.0 * PI * fd * wf.pulse_rep_interval);
        let expected_amp = path.two_way_gain * 32.0 * 32.0;
        assert!((first.norm() / expected_amp - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matched_filter_peak_is_m_es_gain() {
        let wf = WaveformConfig::new(60e9, 1.76e9, 128, 2e-4, 1, 1.0, 200.0).unwrap();
        let packet = build_packet(&golay_pair(128).unwrap(), 1, &wf, true).unwrap();
        let mut col = vec![Complex64::new(0.0, 0.0); 400];
        for (i, x) in packet.samples.iter().enumerate() {
            col[40 + i] = *x;
        }
        let cube = RadarCube { data: vec![col], beam_index: 0 };
        let out = matched_filter(&cube, &packet);
        let mags: Vec<f64> = out[0].iter().map(|z| z.norm()).collect();
        let (best, peak) = mags
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(best, 40);
        assert!((peak - 128.0).abs() / 128.0 < 1e-9);
    }

    #[test]
    fn two_echoes_give_two_maxima() {
        let wf = WaveformConfig::new(60e9, 1.76e9, 128, 2e-4, 1, 1.0, 200.0).unwrap();
        let packet = build_packet(&golay_pair(128).unwrap(), 1, &wf, true).unwrap();
        let mut col = vec![Complex64::new(0.0, 0.0); 500];
        for (i, x) in packet.samples.iter().enumerate() {
            col[40 + i] += *x;
            col[90 + i] += 0.5 * x;
        }
        let cube = RadarCube { data: vec![col], beam_index: 0 };
        let out = matched_filter(&cube, &packet);
        let mags: Vec<f64> = out[0].iter().map(|z| z.norm()).collect();
        for bin in [40usize, 90] {
            assert!(mags[bin] > mags[bin - 1] && mags[bin] > mags[bin + 1], "bin {bin}");
        }
        assert!((mags[40] - 128.0).abs() < 20.0);
        assert!((mags[90] - 64.0).abs() < 20.0);
    }

    #[test]
    fn integration_of_constant_profiles() {
        let p = vec![vec![Complex64::new(3.0, 4.0); 3]; 4];
        assert_eq!(integrate_profiles(&p), vec![5.0; 3]);
        assert!(integrate_profiles(&[]).is_empty());
    }
}
