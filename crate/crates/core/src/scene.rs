//! Scene geometry: arrays, waveform constants, targets, the beam grid and the
//! discrete propagation paths seen through each beam.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Relative tolerance used when checking that a span is a whole number of steps.
const GRID_TOLERANCE: f64 = 1e-9;
/// Azimuths closer than this to the midpoint between two beams count as ties.
const TIE_TOLERANCE_RAD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub num_elements_bs: usize,
    pub num_elements_mu: usize,
    pub element_spacing_bs: f64,
    pub element_spacing_mu: f64,
}

impl ArrayConfig {
    /// Uniform linear arrays at both ends with half-wavelength spacing.
    pub fn half_wavelength(num_bs: usize, num_mu: usize, waveform: &WaveformConfig) -> Result<Self> {
        let half = waveform.wavelength / 2.0;
        let cfg = Self {
            num_elements_bs: num_bs,
            num_elements_mu: num_mu,
            element_spacing_bs: half,
            element_spacing_mu: half,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements_bs == 0 || self.num_elements_mu == 0 {
            return Err(Error::config("arrays need at least one element"));
        }
        if !(self.element_spacing_bs > 0.0 && self.element_spacing_mu > 0.0) {
            return Err(Error::config(format!(
                "element spacing must be positive (bs={}, mu={})",
                self.element_spacing_bs, self.element_spacing_mu
            )));
        }
        Ok(())
    }
}

/// Carrier, sampling and packet-train constants of the sounding waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformConfig {
    pub carrier_freq: f64,
    pub wavelength: f64,
    pub propagation_const: f64,
    pub sample_period: f64,
    pub samples_per_packet: usize,
    pub pulse_rep_interval: f64,
    pub num_packets: usize,
    pub tx_energy: f64,
    pub bandwidth: f64,
    /// Longest one-way path length (m) the radar range window must cover.
    pub max_range: f64,
}

impl WaveformConfig {
    /// Derives wavelength, propagation constant and sample period (1/bandwidth).
    pub fn new(
        carrier_freq: f64,
        bandwidth: f64,
        samples_per_packet: usize,
        pulse_rep_interval: f64,
        num_packets: usize,
        tx_energy: f64,
        max_range: f64,
    ) -> Result<Self> {
        if !(carrier_freq > 0.0 && bandwidth > 0.0) {
            return Err(Error::config("carrier and bandwidth must be positive"));
        }
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        let cfg = Self {
            carrier_freq,
            wavelength,
            propagation_const: 2.0 * PI / wavelength,
            sample_period: 1.0 / bandwidth,
            samples_per_packet,
            pulse_rep_interval,
            num_packets,
            tx_energy,
            bandwidth,
            max_range,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_packet == 0 || self.num_packets == 0 {
            return Err(Error::config("packets must be non-empty"));
        }
        if self.pulse_rep_interval < self.samples_per_packet as f64 * self.sample_period {
            return Err(Error::config(format!(
                "pulse repetition interval {} s is shorter than one packet ({} samples at {} s)",
                self.pulse_rep_interval, self.samples_per_packet, self.sample_period
            )));
        }
        if ((self.wavelength * self.carrier_freq) / SPEED_OF_LIGHT - 1.0).abs() > 1e-9 {
            return Err(Error::config("wavelength inconsistent with carrier frequency"));
        }
        if !(self.tx_energy > 0.0) {
            return Err(Error::config("tx energy must be positive"));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::config("max range must be positive"));
        }
        Ok(())
    }

    /// Two-way delay in samples for a one-way path of `length` meters.
    pub fn sample_index(&self, length: f64) -> usize {
        (2.0 * length / SPEED_OF_LIGHT / self.sample_period).round() as usize
    }

    /// Largest echo sample index inside the range window.
    pub fn max_sample_index(&self) -> usize {
        self.sample_index(self.max_range)
    }

    /// One-way range covered by one fast-time bin.
    pub fn range_per_bin(&self) -> f64 {
        self.sample_period * SPEED_OF_LIGHT / 2.0
    }

    /// Half-width of the unambiguous slow-time Doppler band, 1/(2 T_P).
    pub fn doppler_band(&self) -> f64 {
        0.5 / self.pulse_rep_interval
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetKind {
    MobileUser,
    /// Static scatterer with a zero-Doppler direct return (SCS1).
    StaticDirect,
    /// Static scatterer that also relays the user's Doppler through multipath (SCS2).
    StaticMultipath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub kind: TargetKind,
    pub position: [f64; 3],
    pub radial_velocity: f64,
    pub reflectivity: f64,
}

impl Target {
    pub fn mobile_user(position: [f64; 3], radial_velocity: f64) -> Self {
        Self {
            kind: TargetKind::MobileUser,
            position,
            radial_velocity,
            reflectivity: 1.0,
        }
    }

    pub fn clutter(kind: TargetKind, position: [f64; 3]) -> Self {
        Self {
            kind,
            position,
            radial_velocity: 0.0,
            reflectivity: 1.0,
        }
    }

    /// Azimuth in the ground plane, elevation ignored.
    pub fn azimuth(&self) -> f64 {
        self.position[1].atan2(self.position[0])
    }

    pub fn range(&self) -> f64 {
        norm(self.position)
    }

    pub fn distance_to(&self, other: &Target) -> f64 {
        norm([
            self.position[0] - other.position[0],
            self.position[1] - other.position[1],
            self.position[2] - other.position[2],
        ])
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// The candidate transmit directions (the bandit's arms), uniformly spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    angles: Vec<f64>,
    resolution: f64,
}

impl BeamGrid {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, beam: usize) -> f64 {
        self.angles[beam]
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn count(&self) -> usize {
        self.angles.len()
    }

    pub fn min(&self) -> f64 {
        self.angles[0]
    }

    pub fn max(&self) -> f64 {
        self.angles[self.angles.len() - 1]
    }
}

/// Builds the beam grid `min, min + res, ..., max` (radians).
pub fn make_beam_grid(min: f64, max: f64, resolution: f64) -> Result<BeamGrid> {
    if !(resolution > 0.0) || !min.is_finite() || !max.is_finite() {
        return Err(Error::config(format!(
            "beam grid needs finite bounds and a positive resolution (min={min}, max={max}, resolution={resolution})"
        )));
    }
    if !(min < max) {
        return Err(Error::config(format!(
            "beam grid span is empty: min={min} rad must be below max={max} rad"
        )));
    }
    let steps = (max - min) / resolution;
    let whole = steps.round();
    if whole < 1.0 || (steps - whole).abs() > GRID_TOLERANCE * steps.max(1.0) {
        return Err(Error::config(format!(
            "beam grid span {} rad (min={min}, max={max}) is not a multiple of resolution {resolution} rad",
            max - min
        )));
    }
    let count = whole as usize + 1;
    let angles = (0..count).map(|i| min + i as f64 * resolution).collect();
    Ok(BeamGrid { angles, resolution })
}

/// ULA steering vector: element `p` is `exp(+j k_c d p sin(theta))`.
pub fn steering_vector(theta: f64, n: usize, spacing: f64, k_c: f64) -> Vec<Complex64> {
    let phase = k_c * spacing * theta.sin();
    (0..n)
        .map(|p| Complex64::from_polar(1.0, phase * p as f64))
        .collect()
}

/// Doppler shift `2v/lambda` of a target with radial velocity `v`.
pub fn doppler_shift(velocity: f64, wavelength: f64) -> f64 {
    2.0 * velocity / wavelength
}

/// Free-space (Friis) amplitude gain of one leg of length `distance`.
pub fn one_way_gain(distance: f64, wavelength: f64) -> f64 {
    wavelength / (4.0 * PI * distance)
}

/// Index of the grid beam nearest the target azimuth; midpoints go to the lower index.
pub fn target_beam(target: &Target, grid: &BeamGrid) -> Result<usize> {
    let az = target.azimuth();
    let eps = TIE_TOLERANCE_RAD;
    if az < grid.min() - eps || az > grid.max() + eps {
        return Err(Error::scene(format!(
            "target at {:?} has azimuth {:.4} deg outside the beam grid [{:.4}, {:.4}] deg",
            target.position,
            az.to_degrees(),
            grid.min().to_degrees(),
            grid.max().to_degrees()
        )));
    }
    let pos = ((az - grid.min()) / grid.resolution()).clamp(0.0, (grid.count() - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(grid.count() - 1);
    let d_lo = (az - grid.angle(lo)).abs();
    let d_hi = (az - grid.angle(hi)).abs();
    Ok(if d_hi < d_lo - eps { hi } else { lo })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Direct,
    /// BS -> SCS2 -> MU leg pair carrying the user's Doppler.
    Multipath,
}

/// One discrete radar path through a beam.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    pub target: usize,
    pub kind: PathKind,
    /// One-way propagation delay (s).
    pub delay: f64,
    /// Two-way delay in fast-time samples, `round(2 delay / T_s)`.
    pub sample_index: usize,
    /// Two-way amplitude gain excluding the array gains.
    pub two_way_gain: f64,
    pub doppler: f64,
}

/// A validated scene: one moving user plus static clutter, one target per beam.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub targets: Vec<Target>,
    pub bs_position: [f64; 3],
    pub noise_power_radar: f64,
    pub noise_power_comm: f64,
    pub radar_snr_db: f64,
    pub comm_snr_db: f64,
    grid: BeamGrid,
    target_beams: Vec<usize>,
    user: usize,
}

impl Scene {
    /// Validates the targets against the grid and back-computes both noise powers.
    ///
    /// `radar_snr_db` is the post-matched-filter SNR of the user's echo in one
    /// packet; `comm_snr_db` is the mean downlink SNR on the user's direct beam.
    /// An infinite SNR yields a noiseless channel.
    pub fn build(
        targets: Vec<Target>,
        grid: BeamGrid,
        waveform: &WaveformConfig,
        arrays: &ArrayConfig,
        radar_snr_db: f64,
        comm_snr_db: f64,
    ) -> Result<Self> {
        let users: Vec<usize> = targets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TargetKind::MobileUser)
            .map(|(i, _)| i)
            .collect();
        if users.len() != 1 {
            return Err(Error::scene(format!(
                "scene needs exactly one mobile user, found {}",
                users.len()
            )));
        }
        let user = users[0];
        let mut target_beams = Vec::with_capacity(targets.len());
        for (i, t) in targets.iter().enumerate() {
            if !(t.reflectivity > 0.0 && t.reflectivity.is_finite()) {
                return Err(Error::scene(format!(
                    "target {i} has non-positive reflectivity {}",
                    t.reflectivity
                )));
            }
            match t.kind {
                TargetKind::MobileUser if t.radial_velocity == 0.0 => {
                    return Err(Error::scene("the mobile user must have nonzero radial velocity"));
                }
                TargetKind::StaticDirect | TargetKind::StaticMultipath if t.radial_velocity != 0.0 => {
                    return Err(Error::scene(format!(
                        "static scatterer {i} has radial velocity {}",
                        t.radial_velocity
                    )));
                }
                _ => {}
            }
            if t.range() <= 0.0 {
                return Err(Error::scene(format!("target {i} sits on the base station")));
            }
            let beam = target_beam(t, &grid)?;
            if let Some(j) = target_beams.iter().position(|&b| b == beam) {
                return Err(Error::scene(format!(
                    "targets {j} and {i} share beam {beam} ({:.2} deg)",
                    grid.angle(beam).to_degrees()
                )));
            }
            target_beams.push(beam);
        }
        if radar_snr_db.is_nan() || comm_snr_db.is_nan() {
            return Err(Error::config("SNR values must not be NaN"));
        }

        let mut scene = Self {
            targets,
            bs_position: [0.0; 3],
            noise_power_radar: 0.0,
            noise_power_comm: 0.0,
            radar_snr_db,
            comm_snr_db,
            grid,
            target_beams,
            user,
        };

        let max_index = waveform.max_sample_index();
        for beam in 0..scene.grid.count() {
            for p in path_params(&scene, beam, waveform) {
                if p.sample_index > max_index {
                    return Err(Error::scene(format!(
                        "path to target {} ({:.1} m) exceeds the radar range window of {} m",
                        p.target,
                        p.delay * SPEED_OF_LIGHT,
                        waveform.max_range
                    )));
                }
            }
        }

        let p_bs = arrays.num_elements_bs as f64;
        let p_mu = arrays.num_elements_mu as f64;
        let user_echo = scene.targets[user].reflectivity
            * one_way_gain(scene.targets[user].range(), waveform.wavelength).powi(2)
            * p_bs
            * p_bs;
        let m = waveform.samples_per_packet as f64;
        scene.noise_power_radar =
            user_echo * user_echo * waveform.tx_energy * m / db_to_linear(radar_snr_db);

        let user_link = one_way_gain(scene.targets[user].range(), waveform.wavelength);
        scene.noise_power_comm = (p_mu * p_bs * user_link).powi(2) * waveform.tx_energy
            / db_to_linear(comm_snr_db);

        let user_beam = scene.user_beam();
        let direct = scene.comm_path_gain(user_beam, waveform.wavelength).unwrap_or(0.0);
        for beam in (0..scene.grid.count()).filter(|&b| b != user_beam) {
            if let Some(g) = scene.comm_path_gain(beam, waveform.wavelength) {
                if g >= direct {
                    return Err(Error::scene(format!(
                        "beam {beam} reaches the user with gain {g:e} >= direct gain {direct:e}"
                    )));
                }
            }
        }
        Ok(scene)
    }

    pub fn grid(&self) -> &BeamGrid {
        &self.grid
    }

    pub fn user(&self) -> &Target {
        &self.targets[self.user]
    }

    pub fn user_beam(&self) -> usize {
        self.target_beams[self.user]
    }

    /// Beam index of every target, in target order.
    pub fn target_beams(&self) -> &[usize] {
        &self.target_beams
    }

    pub fn targets_in_beam(&self, beam: usize) -> impl Iterator<Item = (usize, &Target)> + '_ {
        self.targets
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.target_beams[*i] == beam)
    }

    /// One-way downlink amplitude gain from the BS to the user through `beam`,
    /// excluding array gains. `None` when the beam has no path to the user.
    pub fn comm_path_gain(&self, beam: usize, wavelength: f64) -> Option<f64> {
        let user = self.user();
        self.targets_in_beam(beam).find_map(|(_, t)| match t.kind {
            TargetKind::MobileUser => Some(one_way_gain(t.range(), wavelength)),
            TargetKind::StaticMultipath => Some(
                t.reflectivity
                    * one_way_gain(t.range(), wavelength)
                    * one_way_gain(t.distance_to(user), wavelength),
            ),
            TargetKind::StaticDirect => None,
        })
    }
}

/// Radar paths seen through `beam`: the direct echo of each target in the beam,
/// plus a user-Doppler multipath echo for an SCS2 in the beam. Empty for a
/// noise-only beam.
pub fn path_params(scene: &Scene, beam: usize, waveform: &WaveformConfig) -> Vec<PathParams> {
    let lambda = waveform.wavelength;
    let user = scene.user();
    let mut paths = Vec::new();
    for (i, t) in scene.targets_in_beam(beam) {
        let r = t.range();
        let delay = r / SPEED_OF_LIGHT;
        paths.push(PathParams {
            target: i,
            kind: PathKind::Direct,
            delay,
            sample_index: waveform.sample_index(r),
            two_way_gain: t.reflectivity * one_way_gain(r, lambda).powi(2),
            doppler: doppler_shift(t.radial_velocity, lambda),
        });
        if t.kind == TargetKind::StaticMultipath {
            let leg = t.distance_to(user);
            let length = r + leg;
            paths.push(PathParams {
                target: i,
                kind: PathKind::Multipath,
                delay: length / SPEED_OF_LIGHT,
                sample_index: waveform.sample_index(length),
                two_way_gain: t.reflectivity
                    * user.reflectivity
                    * one_way_gain(r, lambda)
                    * one_way_gain(leg, lambda),
                doppler: doppler_shift(user.radial_velocity, lambda),
            });
        }
    }
    paths
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
