//! Delay-Doppler ISAC modem simulator.
//!
//! ODDM modulation over a time-varying multipath channel, the effective
//! delay-Doppler channel matrix, alternating maximum-likelihood channel
//! estimation from a known sensing frame, and OAMP symbol detection, plus
//! OTFS/OFDM reference transceivers and a Monte Carlo sweep harness.

pub mod baselines;
pub mod channel;
pub mod constellation;
pub mod detector;
pub mod effchan;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod sparse;
pub mod waveform;

pub use constellation::{Constellation, ConstellationKind};
pub use error::{Error, Result};
pub use grid::{DDFrame, FrameConfig};
