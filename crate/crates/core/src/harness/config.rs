//! Experiment specification and its `key = value` text format.
//!
//! Lines are `section.key = value`; `#` starts a comment. Every key has a
//! default, unknown keys are errors. [`ExperimentSpec::to_text`] writes the
//! complete canonical form, which is also what the configuration hash covers.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::baselines::Scheme;
use crate::constellation::ConstellationKind;
use crate::detector::{DenoiserForm, LeMode, OampConfig, TraceMode};
use crate::error::{Error, Result};
use crate::estimator::ObjectiveForm;
use crate::grid::{FrameConfig, DEFAULT_OVERSAMPLING, DEFAULT_ROLLOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Oamp,
    Lmmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csi {
    Perfect,
    Estimated,
}

/// Where the data path is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Sampled waveforms through the physical channel.
    Waveform,
    /// `y = H s + w` on the delay-Doppler grid.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// EVA taps quantized to the grid at the given speed.
    Eva { speed_kmh: f64 },
    /// Distinct random grid points with `CN(0, 1/P)` gains.
    Random { paths: usize, max_delay: usize, max_doppler: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathCount {
    /// The number of distinct grid points of the drawn channel.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeChoice {
    Exact,
    MatrixFree,
    /// Exact up to 4096 grid cells.
    Auto,
}

pub const AUTO_EXACT_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub paths: PathCount,
    pub max_iters: usize,
    pub epsilon: f64,
    pub objective: ObjectiveForm,
    /// Search window; `None` spans the grid.
    pub max_delay: Option<usize>,
    pub max_doppler: Option<usize>,
    /// `None` senses at the data SNR of each point.
    pub sensing_snr_db: Option<f64>,
    /// Also run the exhaustive search in NMSE sweeps.
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    pub max_iters: usize,
    pub damping: f64,
    pub var_floor: f64,
    pub stop_tol: f64,
    pub le: LeChoice,
    pub solve_tol: f64,
    pub solve_max_iters: usize,
    pub probes: usize,
    pub lanczos_steps: usize,
    pub denoiser: DenoiserForm,
}

impl DetectorSpec {
    pub fn le_mode(&self, dim: usize, probe_seed: u64) -> LeMode {
        let free = LeMode::MatrixFree {
            tol: self.solve_tol,
            max_iters: self.solve_max_iters,
            trace: TraceMode::Probes {
                count: self.probes,
                lanczos_steps: self.lanczos_steps,
                seed: probe_seed,
            },
        };
        match self.le {
            LeChoice::Exact => LeMode::Exact,
            LeChoice::MatrixFree => free,
            LeChoice::Auto if dim <= AUTO_EXACT_LIMIT => LeMode::Exact,
            LeChoice::Auto => free,
        }
    }

    pub fn oamp_config(&self, dim: usize, probe_seed: u64) -> OampConfig {
        OampConfig {
            max_iters: self.max_iters,
            var_floor: self.var_floor,
            damping: self.damping,
            stop_tol: self.stop_tol,
            le_mode: self.le_mode(dim, probe_seed),
            denoiser: self.denoiser,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub frame: FrameConfig,
    pub channel: ChannelModel,
    pub estimator: EstimatorSpec,
    pub detector: DetectorSpec,
    pub scheme: Scheme,
    pub csi: Csi,
    pub level: Level,
    pub snr_grid_db: Vec<f64>,
    /// Upper bound on channel realizations per point.
    pub trials: usize,
    pub frames_per_trial: usize,
    /// A point stops once it has this many errors and at least `min_bits`.
    pub min_bit_errors: u64,
    pub min_bits: u64,
    pub seed: u64,
    /// OFDM per-symbol prefix in samples.
    pub ofdm_cp: usize,
}

impl Default for ExperimentSpec {
    /// Desk-scale setup: 64 x 16 grid, EVA at 350 km/h, perfect CSI.
    fn default() -> Self {
        let frame = FrameConfig::new(
            64,
            16,
            15e3,
            5e9,
            8,
            DEFAULT_ROLLOFF,
            DEFAULT_OVERSAMPLING,
            ConstellationKind::Qam4,
        )
        .expect("valid preset")
        .with_cyclic_prefix(4);
        ExperimentSpec {
            frame,
            channel: ChannelModel::Eva { speed_kmh: 350.0 },
            estimator: EstimatorSpec {
                paths: PathCount::Auto,
                max_iters: 20,
                epsilon: 1e-4,
                objective: ObjectiveForm::ConditionalMl,
                max_delay: None,
                max_doppler: None,
                sensing_snr_db: None,
                exhaustive: true,
            },
            detector: DetectorSpec {
                kind: DetectorKind::Oamp,
                max_iters: 20,
                damping: 1.0,
                var_floor: 1e-10,
                stop_tol: 1e-6,
                le: LeChoice::Auto,
                solve_tol: 1e-8,
                solve_max_iters: 5000,
                probes: 32,
                lanczos_steps: 64,
                denoiser: DenoiserForm::Gaussian,
            },
            scheme: Scheme::Oddm,
            csi: Csi::Perfect,
            level: Level::Waveform,
            snr_grid_db: vec![6.0, 9.0, 12.0, 15.0, 18.0],
            trials: 100,
            frames_per_trial: 4,
            min_bit_errors: 100,
            min_bits: 0,
            seed: 1,
            ofdm_cp: 4,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{value}'"))),
    }
}

fn parse_optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>> {
    if value == none {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

/// `"0,10,20"` or an inclusive range `"start:step:stop"`.
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("SNR range '{text}' must be start:step:stop")));
        }
        let start: f64 = parse("snr", parts[0])?;
        let step: f64 = parse("snr", parts[1])?;
        let stop: f64 = parse("snr", parts[2])?;
        if !(step > 0.0) || stop < start {
            return Err(Error::Config(format!("SNR range '{text}' needs step > 0 and stop >= start")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse("snr", s))
            .collect::<Result<_>>()?
    };
    if grid.is_empty() {
        return Err(Error::Config("SNR grid is empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("SNR grid contains a non-finite value".into()));
    }
    Ok(grid)
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Oamp => "oamp",
            DetectorKind::Lmmse => "lmmse",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oamp" => Ok(DetectorKind::Oamp),
            "lmmse" => Ok(DetectorKind::Lmmse),
            _ => Err(Error::Config(format!("unknown detector '{s}' (expected oamp or lmmse)"))),
        }
    }
}

impl fmt::Display for Csi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Csi::Perfect => "perfect",
            Csi::Estimated => "estimated",
        })
    }
}

impl FromStr for Csi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(Csi::Perfect),
            "estimated" => Ok(Csi::Estimated),
            _ => Err(Error::Config(format!("unknown CSI mode '{s}' (expected perfect or estimated)"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Waveform => "waveform",
            Level::Matrix => "matrix",
        })
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "waveform" => Ok(Level::Waveform),
            "matrix" => Ok(Level::Matrix),
            _ => Err(Error::Config(format!("unknown level '{s}' (expected waveform or matrix)"))),
        }
    }
}

fn objective_name(o: ObjectiveForm) -> &'static str {
    match o {
        ObjectiveForm::ConditionalMl => "conditional_ml",
        ObjectiveForm::Literal => "literal",
    }
}

fn le_name(l: LeChoice) -> &'static str {
    match l {
        LeChoice::Exact => "exact",
        LeChoice::MatrixFree => "matrix_free",
        LeChoice::Auto => "auto",
    }
}

fn denoiser_name(d: DenoiserForm) -> &'static str {
    match d {
        DenoiserForm::Gaussian => "gaussian",
        DenoiserForm::Literal => "literal",
    }
}

fn join_grid(grid: &[f64]) -> String {
    grid.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

fn opt<T: fmt::Display>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or(none.to_string(), |x| x.to_string())
}

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "frame.M",
    "frame.N",
    "frame.delta_f",
    "frame.f_c",
    "frame.Q",
    "frame.rolloff",
    "frame.oversampling",
    "frame.cyclic_prefix",
    "frame.constellation",
    "channel.model",
    "channel.speed_kmh",
    "channel.paths",
    "channel.max_delay",
    "channel.max_doppler",
    "estimator.paths",
    "estimator.max_iters",
    "estimator.epsilon",
    "estimator.objective",
    "estimator.max_delay",
    "estimator.max_doppler",
    "estimator.sensing_snr_db",
    "estimator.exhaustive",
    "detector.kind",
    "detector.max_iters",
    "detector.damping",
    "detector.var_floor",
    "detector.stop_tol",
    "detector.le_mode",
    "detector.solve_tol",
    "detector.solve_max_iters",
    "detector.probes",
    "detector.lanczos_steps",
    "detector.denoiser",
    "sim.scheme",
    "sim.csi",
    "sim.level",
    "sim.snr_db",
    "sim.trials",
    "sim.frames_per_trial",
    "sim.min_bit_errors",
    "sim.min_bits",
    "sim.seed",
    "sim.ofdm_cp",
];

impl ExperimentSpec {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let f = &mut self.frame;
        match key {
            "frame.M" => f.m = parse(key, v)?,
            "frame.N" => f.n = parse(key, v)?,
            "frame.delta_f" => f.delta_f = parse(key, v)?,
            "frame.f_c" => f.f_c = parse(key, v)?,
            "frame.Q" => f.q = parse(key, v)?,
            "frame.rolloff" => f.rolloff = parse(key, v)?,
            "frame.oversampling" => f.oversampling = parse(key, v)?,
            "frame.cyclic_prefix" => f.cyclic_prefix = parse(key, v)?,
            "frame.constellation" => f.constellation = v.parse()?,
            "channel.model" => {
                self.channel = match v {
                    "eva" => ChannelModel::Eva { speed_kmh: 350.0 },
                    "random" => ChannelModel::Random {
                        paths: 2,
                        max_delay: 7,
                        max_doppler: 3,
                    },
                    _ => return Err(Error::Config(format!("{key}: expected eva or random, got '{v}'"))),
                }
            }
            "channel.speed_kmh" => match &mut self.channel {
                ChannelModel::Eva { speed_kmh } => *speed_kmh = parse(key, v)?,
                _ => return Err(Error::Config(format!("{key} applies to channel.model = eva"))),
            },
            "channel.paths" | "channel.max_delay" | "channel.max_doppler" => match &mut self.channel {
                ChannelModel::Random {
                    paths,
                    max_delay,
                    max_doppler,
                } => {
                    let target = match key {
                        "channel.paths" => paths,
                        "channel.max_delay" => max_delay,
                        _ => max_doppler,
                    };
                    *target = parse(key, v)?;
                }
                _ => return Err(Error::Config(format!("{key} applies to channel.model = random"))),
            },
            "estimator.paths" => {
                self.estimator.paths = if v == "auto" {
                    PathCount::Auto
                } else {
                    PathCount::Fixed(parse(key, v)?)
                }
            }
            "estimator.max_iters" => self.estimator.max_iters = parse(key, v)?,
            "estimator.epsilon" => self.estimator.epsilon = parse(key, v)?,
            "estimator.objective" => {
                self.estimator.objective = match v {
                    "conditional_ml" => ObjectiveForm::ConditionalMl,
                    "literal" => ObjectiveForm::Literal,
                    _ => return Err(Error::Config(format!("{key}: expected conditional_ml or literal, got '{v}'"))),
                }
            }
            "estimator.max_delay" => self.estimator.max_delay = parse_optional(key, v, "full")?,
            "estimator.max_doppler" => self.estimator.max_doppler = parse_optional(key, v, "full")?,
            "estimator.sensing_snr_db" => self.estimator.sensing_snr_db = parse_optional(key, v, "data")?,
            "estimator.exhaustive" => self.estimator.exhaustive = parse_bool(key, v)?,
            "detector.kind" => self.detector.kind = v.parse()?,
            "detector.max_iters" => self.detector.max_iters = parse(key, v)?,
            "detector.damping" => self.detector.damping = parse(key, v)?,
            "detector.var_floor" => self.detector.var_floor = parse(key, v)?,
            "detector.stop_tol" => self.detector.stop_tol = parse(key, v)?,
            "detector.le_mode" => {
                self.detector.le = match v {
                    "exact" => LeChoice::Exact,
                    "matrix_free" => LeChoice::MatrixFree,
                    "auto" => LeChoice::Auto,
                    _ => return Err(Error::Config(format!("{key}: expected exact, matrix_free or auto, got '{v}'"))),
                }
            }
            "detector.solve_tol" => self.detector.solve_tol = parse(key, v)?,
            "detector.solve_max_iters" => self.detector.solve_max_iters = parse(key, v)?,
            "detector.probes" => self.detector.probes = parse(key, v)?,
            "detector.lanczos_steps" => self.detector.lanczos_steps = parse(key, v)?,
            "detector.denoiser" => {
                self.detector.denoiser = match v {
                    "gaussian" => DenoiserForm::Gaussian,
                    "literal" => DenoiserForm::Literal,
                    _ => return Err(Error::Config(format!("{key}: expected gaussian or literal, got '{v}'"))),
                }
            }
            "sim.scheme" => self.scheme = v.parse()?,
            "sim.csi" => self.csi = v.parse()?,
            "sim.level" => self.level = v.parse()?,
            "sim.snr_db" => self.snr_grid_db = parse_snr_grid(v)?,
            "sim.trials" => self.trials = parse(key, v)?,
            "sim.frames_per_trial" => self.frames_per_trial = parse(key, v)?,
            "sim.min_bit_errors" => self.min_bit_errors = parse(key, v)?,
            "sim.min_bits" => self.min_bits = parse(key, v)?,
            "sim.seed" => self.seed = parse(key, v)?,
            "sim.ofdm_cp" => self.ofdm_cp = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses a configuration text on top of the defaults and validates it.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        spec.apply_text(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Applies assignments without validating, so that later overrides can
    /// complete a partial configuration.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(key.trim(), value).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.trials == 0 || self.frames_per_trial == 0 {
            return Err(Error::Config("trials and frames_per_trial must be at least 1".into()));
        }
        match self.channel {
            ChannelModel::Eva { speed_kmh } if !(speed_kmh.is_finite() && speed_kmh >= 0.0) => {
                return Err(Error::Config(format!("speed {speed_kmh} km/h must be non-negative")));
            }
            ChannelModel::Random {
                paths,
                max_delay,
                max_doppler,
            } => {
                if paths == 0 || max_delay >= self.frame.m || max_doppler as i64 > self.frame.max_doppler_index() {
                    return Err(Error::Config(format!(
                        "random channel with {paths} paths, delay <= {max_delay}, |Doppler| <= {max_doppler} does not fit the grid"
                    )));
                }
            }
            _ => {}
        }
        if let PathCount::Fixed(0) = self.estimator.paths {
            return Err(Error::Config("estimator.paths must be at least 1".into()));
        }
        if self.estimator.max_iters == 0 || !(self.estimator.epsilon > 0.0) {
            return Err(Error::Config("estimator needs max_iters >= 1 and epsilon > 0".into()));
        }
        let d = &self.detector;
        if d.max_iters == 0 || !(d.damping > 0.0 && d.damping <= 1.0) || !(d.var_floor > 0.0) || !(d.stop_tol > 0.0) {
            return Err(Error::Config("detector needs max_iters >= 1, damping in (0, 1] and positive tolerances".into()));
        }
        if !(d.solve_tol > 0.0) || d.solve_max_iters == 0 || d.probes == 0 || d.lanczos_steps == 0 {
            return Err(Error::Config("matrix-free settings must be positive".into()));
        }
        if self.ofdm_cp > self.frame.m {
            return Err(Error::Config(format!("OFDM prefix {} exceeds M = {}", self.ofdm_cp, self.frame.m)));
        }
        Ok(())
    }

    /// Canonical text listing every key.
    pub fn to_text(&self) -> String {
        let f = &self.frame;
        let (model, speed, paths, max_delay, max_doppler) = match self.channel {
            ChannelModel::Eva { speed_kmh } => ("eva", Some(speed_kmh), None, None, None),
            ChannelModel::Random {
                paths,
                max_delay,
                max_doppler,
            } => ("random", None, Some(paths), Some(max_delay), Some(max_doppler)),
        };
        let e = &self.estimator;
        let d = &self.detector;
        let mut lines = vec![
            format!("frame.M = {}", f.m),
            format!("frame.N = {}", f.n),
            format!("frame.delta_f = {:e}", f.delta_f),
            format!("frame.f_c = {:e}", f.f_c),
            format!("frame.Q = {}", f.q),
            format!("frame.rolloff = {}", f.rolloff),
            format!("frame.oversampling = {}", f.oversampling),
            format!("frame.cyclic_prefix = {}", f.cyclic_prefix),
            format!("frame.constellation = {}", f.constellation),
            format!("channel.model = {model}"),
        ];
        if let Some(s) = speed {
            lines.push(format!("channel.speed_kmh = {s}"));
        }
        if let (Some(p), Some(l), Some(k)) = (paths, max_delay, max_doppler) {
            lines.push(format!("channel.paths = {p}"));
            lines.push(format!("channel.max_delay = {l}"));
            lines.push(format!("channel.max_doppler = {k}"));
        }
        lines.extend([
            format!(
                "estimator.paths = {}",
                match e.paths {
                    PathCount::Auto => "auto".to_string(),
                    PathCount::Fixed(p) => p.to_string(),
                }
            ),
            format!("estimator.max_iters = {}", e.max_iters),
            format!("estimator.epsilon = {:e}", e.epsilon),
            format!("estimator.objective = {}", objective_name(e.objective)),
            format!("estimator.max_delay = {}", opt(&e.max_delay, "full")),
            format!("estimator.max_doppler = {}", opt(&e.max_doppler, "full")),
            format!("estimator.sensing_snr_db = {}", opt(&e.sensing_snr_db, "data")),
            format!("estimator.exhaustive = {}", e.exhaustive),
            format!("detector.kind = {}", d.kind),
            format!("detector.max_iters = {}", d.max_iters),
            format!("detector.damping = {}", d.damping),
            format!("detector.var_floor = {:e}", d.var_floor),
            format!("detector.stop_tol = {:e}", d.stop_tol),
            format!("detector.le_mode = {}", le_name(d.le)),
            format!("detector.solve_tol = {:e}", d.solve_tol),
            format!("detector.solve_max_iters = {}", d.solve_max_iters),
            format!("detector.probes = {}", d.probes),
            format!("detector.lanczos_steps = {}", d.lanczos_steps),
            format!("detector.denoiser = {}", denoiser_name(d.denoiser)),
            format!("sim.scheme = {}", self.scheme),
            format!("sim.csi = {}", self.csi),
            format!("sim.level = {}", self.level),
            format!("sim.snr_db = {}", join_grid(&self.snr_grid_db)),
            format!("sim.trials = {}", self.trials),
            format!("sim.frames_per_trial = {}", self.frames_per_trial),
            format!("sim.min_bit_errors = {}", self.min_bit_errors),
            format!("sim.min_bits = {}", self.min_bits),
            format!("sim.seed = {}", self.seed),
            format!("sim.ofdm_cp = {}", self.ofdm_cp),
        ]);
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    /// First 16 hex digits of the SHA-256 of [`ExperimentSpec::to_text`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentSpec::default().validate().unwrap();
    }

    #[test]
    fn canonical_text_roundtrips() {
        let mut spec = ExperimentSpec::default();
        spec.set("channel.model", "random").unwrap();
        spec.set("estimator.sensing_snr_db", "30").unwrap();
        spec.set("sim.snr_db", "0:5:20").unwrap();
        let back = ExperimentSpec::parse_text(&spec.to_text()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.config_hash(), spec.config_hash());
    }

    #[test]
    fn every_key_is_settable_and_listed() {
        let text = ExperimentSpec::default().to_text();
        for line in text.lines() {
            let key = line.split('=').next().unwrap().trim();
            assert!(KEYS.contains(&key), "{key}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let spec = ExperimentSpec::parse_text("# desk run\n\nframe.M = 32  # smaller\nsim.seed=9\n").unwrap();
        assert_eq!(spec.frame.m, 32);
        assert_eq!(spec.seed, 9);
    }

    #[test]
    fn unknown_key_reports_line() {
        match ExperimentSpec::parse_text("frame.M = 64\nframe.X = 3\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("frame.X"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(ExperimentSpec::parse_text("frame.M 64\n").is_err());
        assert!(ExperimentSpec::parse_text("frame.M = many\n").is_err());
        assert!(ExperimentSpec::parse_text("channel.paths = 3\n").is_err());
        assert!(ExperimentSpec::parse_text("sim.trials = 0\n").is_err());
    }

    #[test]
    fn snr_grids() {
        assert_eq!(parse_snr_grid("0, 10,20").unwrap(), vec![0.0, 10.0, 20.0]);
        assert_eq!(parse_snr_grid("6:3:18").unwrap(), vec![6.0, 9.0, 12.0, 15.0, 18.0]);
        assert!(parse_snr_grid("").is_err());
        assert!(parse_snr_grid("1:0:3").is_err());
        assert!(parse_snr_grid("5:1:3").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentSpec::default();
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
