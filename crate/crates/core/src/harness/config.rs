//! TOML experiment configuration. Every field has a default, so an empty file
//! describes the baseline scene.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bandit::Algorithm;
use crate::comm_link::LinkConfig;
use crate::error::{Error, Result};
use crate::radar_rx::{CfarParams, GateConfig, MusicParams};
use crate::scene::{make_beam_grid, ArrayConfig, BeamGrid, WaveformConfig};

impl Serialize for Algorithm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub min_deg: f64,
    pub max_deg: f64,
    pub resolution_deg: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            min_deg: -80.0,
            max_deg: 80.0,
            resolution_deg: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub golay_length: usize,
    pub pulse_rep_interval_s: f64,
    pub num_packets: usize,
    pub tx_energy: f64,
    pub max_range_m: f64,
}

impl Default for WaveformSection {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 60e9,
            bandwidth_hz: 1.76e9,
            golay_length: 128,
            pulse_rep_interval_s: 2e-4,
            num_packets: 10,
            tx_energy: 1.0,
            max_range_m: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub num_elements_bs: usize,
    pub num_elements_mu: usize,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            num_elements_bs: 32,
            num_elements_mu: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClutterKind {
    Scs1,
    Scs2,
}

/// A fixed static scatterer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: ClutterKind,
    pub position: [f64; 3],
    #[serde(default = "unit")]
    pub reflectivity: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub user_position: [f64; 3],
    /// Radial velocity of the user (m/s).
    pub user_velocity: f64,
    pub user_reflectivity: f64,
    /// Randomly placed SCS1 count, used when `targets` is empty.
    pub num_scs1: usize,
    /// Randomly placed SCS2 count, used when `targets` is empty.
    pub num_scs2: usize,
    /// Range interval (m) for randomly placed scatterers. The default keeps
    /// them at or beyond the user so its echo is the strongest.
    pub scs_range_m: [f64; 2],
    pub scs_reflectivity: f64,
    /// Azimuth jitter around the chosen beam, as a fraction of the grid resolution.
    pub azimuth_jitter: f64,
    /// Explicit scatterers; when present they replace random placement.
    pub targets: Vec<TargetSpec>,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            user_position: [50.0, 20.0, 0.0],
            user_velocity: 3.0,
            user_reflectivity: 1.0,
            num_scs1: 1,
            num_scs2: 1,
            scs_range_m: [55.0, 80.0],
            scs_reflectivity: 1.0,
            azimuth_jitter: 0.4,
            targets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarSection {
    pub num_training: usize,
    pub num_guard: usize,
    pub os_rank: usize,
    /// Design false-alarm probability per cell.
    pub pfa: f64,
    /// Explicit magnitude scale; overrides `pfa` when set.
    pub scale: Option<f64>,
}

impl Default for CfarSection {
    fn default() -> Self {
        Self {
            num_training: 16,
            num_guard: 2,
            os_rank: 12,
            pfa: 1e-6,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MusicSection {
    pub model_order: usize,
    pub oversample: usize,
    pub max_grid_points: usize,
}

impl Default for MusicSection {
    fn default() -> Self {
        let m = MusicParams::default();
        Self {
            model_order: m.model_order,
            oversample: m.oversample,
            max_grid_points: m.max_grid_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub reward_lo_db: f64,
    pub reward_hi_db: f64,
    pub bits_per_slot: f64,
    pub slot_duration_s: f64,
    pub fading: bool,
    pub charge_gate_slots: bool,
}

impl Default for LinkSection {
    fn default() -> Self {
        let l = LinkConfig::default();
        Self {
            reward_lo_db: l.reward_lo_db,
            reward_hi_db: l.reward_hi_db,
            bits_per_slot: l.bits_per_slot,
            slot_duration_s: l.slot_duration,
            fading: l.fading,
            charge_gate_slots: l.charge_gate_slots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    pub cost_slots: usize,
    pub doppler_cost_slots: Option<usize>,
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            cost_slots: crate::radar_rx::DEFAULT_GATE_SLOTS,
            doppler_cost_slots: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NumScs,
    AngularResolution,
    VelocityResolution,
    RadarSnrDb,
    NumScs1,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::NumScs => "num_scs",
            SweepParameter::AngularResolution => "angular_resolution",
            SweepParameter::VelocityResolution => "velocity_resolution",
            SweepParameter::RadarSnrDb => "radar_snr_db",
            SweepParameter::NumScs1 => "num_scs1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
    pub algorithms: Vec<Algorithm>,
    /// Doppler gate velocity resolution (m/s).
    pub velocity_resolution: f64,
    /// Post-matched-filter SNR of the user's echo in one packet (dB).
    pub radar_snr_db: f64,
    /// Mean downlink SNR on the user's direct beam (dB).
    pub comm_snr_db: f64,
    pub grid: GridSection,
    pub waveform: WaveformSection,
    pub array: ArraySection,
    pub scene: SceneSection,
    pub cfar: CfarSection,
    pub music: MusicSection,
    pub link: LinkSection,
    pub gate: GateSection,
    pub sweep: Option<SweepSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 15,
            horizon: 2000,
            algorithms: Algorithm::ALL.to_vec(),
            velocity_resolution: 1.0,
            radar_snr_db: 10.0,
            comm_snr_db: 20.0,
            grid: GridSection::default(),
            waveform: WaveformSection::default(),
            array: ArraySection::default(),
            scene: SceneSection::default(),
            cfar: CfarSection::default(),
            music: MusicSection::default(),
            link: LinkSection::default(),
            gate: GateSection::default(),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: "<string>".into(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn waveform_config(&self) -> Result<WaveformConfig> {
        let w = &self.waveform;
        WaveformConfig::new(
            w.carrier_freq_hz,
            w.bandwidth_hz,
            w.golay_length,
            w.pulse_rep_interval_s,
            w.num_packets,
            w.tx_energy,
            w.max_range_m,
        )
    }

    pub fn array_config(&self, waveform: &WaveformConfig) -> Result<ArrayConfig> {
        ArrayConfig::half_wavelength(self.array.num_elements_bs, self.array.num_elements_mu, waveform)
    }

    pub fn beam_grid(&self) -> Result<BeamGrid> {
        make_beam_grid(
            self.grid.min_deg.to_radians(),
            self.grid.max_deg.to_radians(),
            self.grid.resolution_deg.to_radians(),
        )
    }

    pub fn cfar_params(&self) -> Result<CfarParams> {
        let c = &self.cfar;
        match c.scale {
            Some(scale) => {
                let p = CfarParams {
                    num_training: c.num_training,
                    num_guard: c.num_guard,
                    os_rank: c.os_rank,
                    scale,
                };
                p.validate()?;
                Ok(p)
            }
            None => CfarParams::for_pfa(c.pfa, c.num_training, c.num_guard, c.os_rank, self.waveform.num_packets),
        }
    }

    pub fn gate_config(&self) -> Result<GateConfig> {
        let mut g = GateConfig::new(
            self.cfar_params()?,
            MusicParams {
                model_order: self.music.model_order,
                oversample: self.music.oversample,
                max_grid_points: self.music.max_grid_points,
            },
            self.velocity_resolution,
        );
        g.cost_slots = self.gate.cost_slots;
        g.doppler_cost_slots = self.gate.doppler_cost_slots;
        g.validate()?;
        Ok(g)
    }

    pub fn link_config(&self) -> LinkConfig {
        let l = &self.link;
        LinkConfig {
            reward_lo_db: l.reward_lo_db,
            reward_hi_db: l.reward_hi_db,
            bits_per_slot: l.bits_per_slot,
            slot_duration: l.slot_duration_s,
            fading: l.fading,
            charge_gate_slots: l.charge_gate_slots,
        }
    }

    /// Algorithms in output order (sorted by name, duplicates removed).
    pub fn sorted_algorithms(&self) -> Vec<Algorithm> {
        let mut algs = self.algorithms.clone();
        algs.sort_by_key(|a| a.name());
        algs.dedup();
        algs
    }

    /// Checks every invariant that does not depend on a trial's random draws.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("at least one algorithm is required"));
        }
        if self.radar_snr_db.is_nan() || self.comm_snr_db.is_nan() {
            return Err(Error::config("SNR values must not be NaN"));
        }
        let waveform = self.waveform_config()?;
        let arrays = self.array_config(&waveform)?;
        arrays.validate()?;
        let grid = self.beam_grid()?;
        let gate = self.gate_config()?;
        self.link_config().validate()?;
        if self.cfar.scale.is_none() && !(self.cfar.pfa > 0.0 && self.cfar.pfa < 1.0) {
            return Err(Error::config(format!("CFAR pfa must lie in (0, 1), got {}", self.cfar.pfa)));
        }

        let cost = gate.cost_slots.max(gate.doppler_cost());
        if self.horizon < grid.count() + cost {
            return Err(Error::config(format!(
                "horizon {} is shorter than {} beams plus {cost} gate slots",
                self.horizon,
                grid.count()
            )));
        }
        if self.algorithms.contains(&Algorithm::Lucb) && self.horizon < 2 * grid.count() {
            return Err(Error::config(format!(
                "LUCB needs a horizon of at least {} slots",
                2 * grid.count()
            )));
        }

        let s = &self.scene;
        if !(s.scs_range_m[0] > 0.0 && s.scs_range_m[0] <= s.scs_range_m[1]) {
            return Err(Error::config(format!("invalid scatterer range interval {:?}", s.scs_range_m)));
        }
        if !(0.0..0.5).contains(&s.azimuth_jitter) {
            return Err(Error::config(format!(
                "azimuth jitter must lie in [0, 0.5) of a beam, got {}",
                s.azimuth_jitter
            )));
        }
        if s.targets.is_empty() && s.num_scs1 + s.num_scs2 + 1 > grid.count() {
            return Err(Error::config(format!(
                "{} scatterers plus the user do not fit in {} beams",
                s.num_scs1 + s.num_scs2,
                grid.count()
            )));
        }
        // explicit and random scenes are fully checked by building one
        super::scenegen::build_scene(self, &waveform, &arrays, &grid, &crate::seed::SeedTree::new(self.seed))?;

        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::config("sweep needs at least one value"));
            }
            for &v in &sweep.values {
                self.with_sweep_value(sweep.parameter, v)?.without_sweep().validate()?;
            }
        }
        Ok(())
    }

    fn without_sweep(mut self) -> Self {
        self.sweep = None;
        self
    }

    /// Copy of the config with one sweep parameter set to `value`.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(Error::config(format!("{parameter} sweep values must be nonnegative integers, got {v}")))
            }
        };
        match parameter {
            SweepParameter::NumScs => {
                let n = count(value)?;
                c.scene.num_scs1 = n.div_ceil(2);
                c.scene.num_scs2 = n / 2;
                c.scene.targets.clear();
            }
            SweepParameter::NumScs1 => {
                c.scene.num_scs1 = count(value)?;
                c.scene.targets.clear();
            }
            SweepParameter::AngularResolution => c.grid.resolution_deg = value,
            SweepParameter::VelocityResolution => c.velocity_resolution = value,
            SweepParameter::RadarSnrDb => c.radar_snr_db = value,
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_baseline() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.beam_grid().unwrap().count(), 41);
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig {
            sweep: Some(SweepSection {
                parameter: SweepParameter::RadarSnrDb,
                values: vec![-10.0, 0.0, 10.0],
            }),
            ..ExperimentConfig::default()
        };
        c.scene.targets.push(TargetSpec {
            kind: ClutterKind::Scs2,
            position: [10.0, -10.0, 0.0],
            reflectivity: 0.5,
        });
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("horizon = \"long\""),
            Err(Error::ConfigParse { .. })
        ));
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("algorithms = [\"thompson\"]").is_err());
        let c = ExperimentConfig::from_toml_str("algorithms = [\"ucb-dg\", \"dbf\", \"ucb\"]").unwrap();
        assert_eq!(
            c.sorted_algorithms(),
            vec![Algorithm::Dbf, Algorithm::Ucb, Algorithm::UcbDg]
        );
    }

    #[test]
    fn validation_errors() {
        let bad = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert!(matches!(bad(|c| c.trials = 0), Error::Config(_)));
        assert!(matches!(bad(|c| c.horizon = 45), Error::Config(_)));
        assert!(matches!(bad(|c| c.grid.resolution_deg = 3.0), Error::Config(_)));
        assert!(matches!(bad(|c| c.scene.num_scs1 = 40), Error::Config(_)));
        // user outside the grid
        assert!(matches!(bad(|c| c.scene.user_position = [-10.0, 1.0, 0.0]), Error::Scene(_)));
        // two targets in one beam
        let shared = bad(|c| {
            c.scene.targets = vec![
                TargetSpec { kind: ClutterKind::Scs1, position: [30.0, 0.0, 0.0], reflectivity: 1.0 },
                TargetSpec { kind: ClutterKind::Scs2, position: [40.0, 0.5, 0.0], reflectivity: 1.0 },
            ]
        });
        assert!(shared.to_string().contains("share beam"));
    }

    #[test]
    fn sweep_values_apply() {
        let c = ExperimentConfig::default();
        let n = c.with_sweep_value(SweepParameter::NumScs, 5.0).unwrap();
        assert_eq!((n.scene.num_scs1, n.scene.num_scs2), (3, 2));
        let a = c.with_sweep_value(SweepParameter::AngularResolution, 2.0).unwrap();
        assert_eq!(a.beam_grid().unwrap().count(), 81);
        assert!(c.with_sweep_value(SweepParameter::NumScs1, 1.5).is_err());
        let v = c.with_sweep_value(SweepParameter::VelocityResolution, 5.0).unwrap();
        assert_eq!(v.velocity_resolution, 5.0);
    }
}
