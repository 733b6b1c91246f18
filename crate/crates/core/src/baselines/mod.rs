//! Comparison transceivers and the resource accounting shared by all schemes.

pub mod ofdm;
pub mod otfs;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::FrameConfig;

pub use ofdm::{ofdm_channel_response, ofdm_demodulate, ofdm_detect, ofdm_equalize, ofdm_modulate};
pub use otfs::{isfft, otfs_demodulate, otfs_effective_channel, otfs_modulate, sfft};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Oddm,
    Otfs,
    Ofdm,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Oddm, Scheme::Otfs, Scheme::Ofdm];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Oddm => "oddm",
            Scheme::Otfs => "otfs",
            Scheme::Ofdm => "ofdm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oddm" => Ok(Scheme::Oddm),
            "otfs" => Ok(Scheme::Otfs),
            "ofdm" => Ok(Scheme::Ofdm),
            other => Err(Error::Config(format!("unknown scheme '{other}' (expected oddm, otfs or ofdm)"))),
        }
    }
}

/// Symbols, bandwidth and air time one frame of a scheme occupies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceBudget {
    pub symbols: usize,
    pub bandwidth_hz: f64,
    /// Time carrying data, `N T`.
    pub data_duration_s: f64,
    /// Prefix time on top of the data duration.
    pub overhead_s: f64,
}

/// `ofdm_cp` is the per-symbol prefix in samples at `M delta_f`.
pub fn resource_budget(scheme: Scheme, cfg: &FrameConfig, ofdm_cp: usize) -> ResourceBudget {
    let ts = 1.0 / (cfg.m as f64 * cfg.delta_f);
    let overhead_s = match scheme {
        Scheme::Oddm | Scheme::Otfs => cfg.cyclic_prefix as f64 * ts,
        Scheme::Ofdm => (cfg.n * ofdm_cp) as f64 * ts,
    };
    ResourceBudget {
        symbols: cfg.grid_len(),
        bandwidth_hz: cfg.m as f64 * cfg.delta_f,
        data_duration_s: cfg.frame_duration(),
        overhead_s,
    }
}

/// Fails unless all schemes carry the same symbols over the same bandwidth
/// and data duration. Prefix overheads may differ and are returned.
pub fn assert_resource_parity(schemes: &[Scheme], cfg: &FrameConfig, ofdm_cp: usize) -> Result<Vec<(Scheme, ResourceBudget)>> {
    let budgets: Vec<(Scheme, ResourceBudget)> = schemes.iter().map(|&s| (s, resource_budget(s, cfg, ofdm_cp))).collect();
    if let Some((_, first)) = budgets.first() {
        for (s, b) in &budgets {
            let same = b.symbols == first.symbols
                && (b.bandwidth_hz - first.bandwidth_hz).abs() <= 1e-9 * first.bandwidth_hz
                && (b.data_duration_s - first.data_duration_s).abs() <= 1e-9 * first.data_duration_s;
            if !same {
                return Err(Error::Config(format!("scheme {s} does not match the resource budget of {}", budgets[0].0)));
            }
        }
    }
    Ok(budgets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::ConstellationKind;

    #[test]
    fn parity_holds_for_shared_grid() {
        let cfg = FrameConfig::new(64, 16, 15e3, 5e9, 8, 0.5, 8, ConstellationKind::Qam4).unwrap().with_cyclic_prefix(4);
        let b = assert_resource_parity(&Scheme::ALL, &cfg, 4).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.iter().all(|(_, r)| r.symbols == 1024));
        assert!(b[2].1.overhead_s > b[0].1.overhead_s);
    }

    #[test]
    fn scheme_names_roundtrip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("fbmc".parse::<Scheme>().is_err());
    }
}
