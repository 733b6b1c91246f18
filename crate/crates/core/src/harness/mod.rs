//! Sensing-then-communication pipeline, Monte Carlo sweeps and reporting.

pub mod config;
pub mod report;
pub mod stats;
pub mod sweep;

pub use config::{parse_snr_grid, ChannelModel, Csi, DetectorKind, ExperimentSpec, Level, PathCount};
pub use report::{emit_csv, parse_csv, read_csv, SweepResult, SweepRow, CSV_HEADER};
pub use sweep::{draw_channel, estimate_once, run_ber_sweep, run_comparison, run_nmse_sweep, run_sensing_then_comm, EstimateReport};
