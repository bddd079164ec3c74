//! Experiment orchestration: configuration, seeded trials, sweeps and CSV output.

mod config;
mod experiment;
mod output;
mod scenegen;

pub use config::{
    ArraySection, CfarSection, ClutterKind, ExperimentConfig, GateSection, GridSection, LinkSection, MusicSection,
    SceneSection, SweepParameter, SweepSection, TargetSpec, WaveformSection,
};
pub use experiment::{
    mean_se, run_experiment, run_sweep, trace_throughput, AggregateRow, BeamEnvironment, ExperimentResult,
    ScanGate, TrialTrace,
};
pub use output::{emit_csv, write_summary_csv, write_trace_csv, SUMMARY_HEADER, TRACE_HEADER};
pub use scenegen::build_scene;
