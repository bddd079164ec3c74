//! Radar-gated multi-armed bandit beam selection for a millimeter-wave
//! joint radar-communication base station.
//!
//! The crate is organized along the signal chain:
//!
//! - [`scene`]: geometry, arrays, the beam grid and the per-beam propagation paths.
//! - [`waveform`]: Golay sounding sequences, packets and analog beamforming weights.
//! - [`radar_rx`]: radar returns, matched filtering, OS-CFAR, MUSIC Doppler
//!   estimation and the amplitude / Doppler beam gates.
//! - [`comm_link`]: downlink SNR, normalized reward, 16-QAM BER and throughput.
//! - [`bandit`]: UCB beam selection (plain and radar-gated) plus the random,
//!   LUCB and digital-beamforming baselines, and regret accounting.
//! - [`harness`]: config files, seeded multi-trial experiments, sweeps and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod comm_link;
pub mod error;
pub mod harness;
pub mod radar_rx;
pub mod scene;
pub mod seed;
pub mod waveform;

pub use bandit::{Algorithm, BanditState, Environment, GateKind, RadarGate, SlotRecord};
pub use comm_link::LinkReport;
pub use error::{Error, Result};
pub use harness::{AggregateRow, ExperimentConfig, ExperimentResult};
pub use radar_rx::{CfarParams, DetectionReport, RadarCube};
pub use scene::{ArrayConfig, BeamGrid, Scene, Target, TargetKind, WaveformConfig};
pub use waveform::{GolayPair, Packet};

pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
