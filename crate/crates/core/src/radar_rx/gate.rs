//! Radar beam scan and the amplitude / Doppler gates that prune the arm set.

use log::debug;
use rand::Rng;

use super::cfar::{os_cfar, CfarParams};
use super::music::{music_doppler, MusicParams};
use super::{integrate_profiles, matched_filter, simulate_radar_return, DetectionReport, Peak};
use crate::error::{Error, Result};
use crate::scene::{doppler_shift, ArrayConfig, Scene, WaveformConfig};
use crate::seed::{Domain, SeedTree};
use crate::waveform::{build_packet, golay_pair, Packet};

/// Default radar signal processing cost, in slots.
pub const DEFAULT_GATE_SLOTS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    pub cfar: CfarParams,
    pub music: MusicParams,
    /// Velocity resolution (m/s) setting both the Doppler threshold and the
    /// MUSIC search grid.
    pub velocity_resolution: f64,
    /// Slots charged by the amplitude gate.
    pub cost_slots: usize,
    /// Slots charged by the Doppler gate; `None` uses `cost_slots`.
    pub doppler_cost_slots: Option<usize>,
}

impl GateConfig {
    pub fn new(cfar: CfarParams, music: MusicParams, velocity_resolution: f64) -> Self {
        Self {
            cfar,
            music,
            velocity_resolution,
            cost_slots: DEFAULT_GATE_SLOTS,
            doppler_cost_slots: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfar.validate()?;
        if !(self.velocity_resolution > 0.0 && self.velocity_resolution.is_finite()) {
            return Err(Error::config(format!(
                "velocity resolution must be positive, got {}",
                self.velocity_resolution
            )));
        }
        if self.music.model_order == 0 || self.music.oversample == 0 || self.music.max_grid_points < 3 {
            return Err(Error::config("MUSIC needs model order, oversampling and grid size >= 1"));
        }
        Ok(())
    }

    pub fn doppler_cost(&self) -> usize {
        self.doppler_cost_slots.unwrap_or(self.cost_slots)
    }

    /// MUSIC grid step: one velocity-resolution Doppler divided by the
    /// oversampling factor, coarsened if the grid would exceed its size cap.
    pub fn doppler_grid_step(&self, waveform: &WaveformConfig) -> f64 {
        let fine = doppler_shift(self.velocity_resolution, waveform.wavelength) / self.music.oversample as f64;
        let per_side = (self.music.max_grid_points - 1) / 2;
        let floor = waveform.doppler_band() / per_side.max(1) as f64;
        fine.max(floor)
    }
}

/// Smallest `|f|` the Doppler gate accepts: the Doppler of one velocity
/// resolution step.
pub fn doppler_threshold(velocity_resolution: f64, wavelength: f64) -> f64 {
    doppler_shift(velocity_resolution, wavelength)
}

/// Detection reports for every beam of the grid, in beam order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarScan {
    pub reports: Vec<DetectionReport>,
}

impl RadarScan {
    pub fn detected_beams(&self) -> Vec<usize> {
        self.reports
            .iter()
            .filter(|r| !r.peaks.is_empty())
            .map(|r| r.beam_index)
            .collect()
    }
}

/// A pruned arm set and the slots spent finding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateOutcome {
    pub arms: Vec<usize>,
    pub cost_slots: usize,
}

/// Transmits the packet train through `beam`, matched-filters, runs OS-CFAR on
/// the integrated profile and estimates the Doppler of every local-maximum
/// detection.
#[allow(clippy::too_many_arguments)]
pub fn scan_beam<R: Rng + ?Sized>(
    scene: &Scene,
    beam: usize,
    packet: &Packet,
    waveform: &WaveformConfig,
    arrays: &ArrayConfig,
    config: &GateConfig,
    rng: &mut R,
) -> Result<DetectionReport> {
    let cube = simulate_radar_return(scene, beam, packet, waveform, arrays, rng);
    let profiles = matched_filter(&cube, packet);
    let profile = integrate_profiles(&profiles);
    let detections = os_cfar(&profile, &config.cfar)?;
    let step = config.doppler_grid_step(waveform);

    let mut peaks = Vec::new();
    for d in detections {
        let n = d.bin;
        let left = if n > 0 { profile[n - 1] } else { 0.0 };
        let right = profile.get(n + 1).copied().unwrap_or(0.0);
        if d.amplitude < left || d.amplitude <= right {
            continue;
        }
        let slow_time: Vec<_> = profiles.iter().map(|p| p[n]).collect();
        let doppler = music_doppler(&slow_time, waveform.pulse_rep_interval, step, config.music.model_order)?;
        peaks.push(Peak {
            range_bin: n,
            range_m: n as f64 * waveform.range_per_bin(),
            amplitude: d.amplitude,
            threshold: d.threshold,
            doppler_hz: Some(doppler),
        });
    }
    Ok(DetectionReport {
        beam_index: beam,
        peaks,
    })
}

/// Scans every beam of the scene's grid. Beam `b` draws its noise from the
/// `(RadarBeam, b)` substream of `seeds`, so a beam's report does not depend
/// on which other beams were scanned.
pub fn scan_beams(
    scene: &Scene,
    waveform: &WaveformConfig,
    arrays: &ArrayConfig,
    config: &GateConfig,
    seeds: &SeedTree,
) -> Result<RadarScan> {
    config.validate()?;
    let pair = golay_pair(waveform.samples_per_packet)?;
    let packet = build_packet(&pair, 1, waveform, true)?;
    let reports = (0..scene.grid().count())
        .map(|beam| {
            let mut rng = seeds.rng(Domain::RadarBeam, beam as u64);
            scan_beam(scene, beam, &packet, waveform, arrays, config, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let scan = RadarScan { reports };
    debug!("radar scan detected beams {:?}", scan.detected_beams());
    Ok(scan)
}

/// Beams with at least one CFAR detection.
pub fn amplitude_gate(scan: &RadarScan, config: &GateConfig) -> GateOutcome {
    GateOutcome {
        arms: scan.detected_beams(),
        cost_slots: config.cost_slots,
    }
}

/// Detected beams with at least one peak whose Doppler magnitude reaches the
/// velocity-resolution threshold.
pub fn doppler_gate(scan: &RadarScan, config: &GateConfig, wavelength: f64) -> GateOutcome {
    let threshold = doppler_threshold(config.velocity_resolution, wavelength);
    let arms = scan
        .reports
        .iter()
        .filter(|r| {
            r.peaks
                .iter()
                .any(|p| p.doppler_hz.is_some_and(|f| f.abs() >= threshold))
        })
        .map(|r| r.beam_index)
        .collect();
    GateOutcome {
        arms,
        cost_slots: config.doppler_cost(),
    }
}
