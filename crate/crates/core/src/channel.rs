//! Time-varying multipath channels on the integer delay-Doppler grid.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{delay_index, doppler_index, FrameConfig, SPEED_OF_LIGHT};
use crate::rng::{complex_gaussian, rng_from_seed};
use crate::waveform::SampleStream;

/// Extended Vehicular A power-delay profile (3GPP TS 36.104, Annex B.2):
/// excess tap delay in ns and relative power in dB.
pub const EVA_PROFILE: [(f64, f64); 9] = [
    (0.0, 0.0),
    (30.0, -1.5),
    (150.0, -1.4),
    (310.0, -3.6),
    (370.0, -0.6),
    (710.0, -9.1),
    (1090.0, -7.0),
    (1730.0, -12.0),
    (2510.0, -16.9),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    pub h: Complex64,
    /// Delay in seconds, on the grid: `l T/M`.
    pub tau: f64,
    /// Doppler in Hz, on the grid: `k / (N T)`.
    pub nu: f64,
    pub l: usize,
    pub k: i64,
}

impl PathParams {
    /// Path sitting exactly on grid point `(l, k)`.
    pub fn on_grid(h: Complex64, l: usize, k: i64, cfg: &FrameConfig) -> Self {
        PathParams {
            h,
            tau: l as f64 * cfg.delay_resolution(),
            nu: k as f64 * cfg.doppler_resolution(),
            l,
            k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathParams>,
}

impl ChannelRealization {
    /// Builds a realization, merging paths that share a grid point.
    pub fn from_paths(paths: Vec<PathParams>, cfg: &FrameConfig) -> Result<Self> {
        let mut merged: BTreeMap<(usize, i64), Complex64> = BTreeMap::new();
        let mut order = Vec::new();
        for p in &paths {
            if p.l >= cfg.m {
                return Err(Error::DelayOutOfRange {
                    tau: p.tau,
                    index: p.l as i64,
                    m: cfg.m,
                });
            }
            if p.k < cfg.min_doppler_index() || p.k > cfg.max_doppler_index() {
                return Err(Error::DopplerOutOfRange { nu: p.nu, n: cfg.n });
            }
            if !(p.h.re.is_finite() && p.h.im.is_finite()) {
                return Err(Error::Config("non-finite path gain".into()));
            }
            let key = (p.l, p.k);
            if !merged.contains_key(&key) {
                order.push(key);
            }
            *merged.entry(key).or_insert(Complex64::new(0.0, 0.0)) += p.h;
        }
        let paths = order
            .into_iter()
            .map(|(l, k)| PathParams::on_grid(merged[&(l, k)], l, k, cfg))
            .collect();
        Ok(ChannelRealization { paths })
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Maximum delay index plus one.
    pub fn delay_span(&self) -> usize {
        self.paths.iter().map(|p| p.l + 1).max().unwrap_or(0)
    }

    /// Maximum absolute Doppler index.
    pub fn doppler_span(&self) -> usize {
        self.paths.iter().map(|p| p.k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.l).max().unwrap_or(0)
    }

    /// The `(2 L1 + 1) x L` matrix with `G[k + L1][l]` the summed gain at `(l, k)`.
    pub fn dd_matrix(&self) -> Vec<Vec<Complex64>> {
        let l_span = self.delay_span();
        let l1 = self.doppler_span() as i64;
        let mut g = vec![vec![Complex64::new(0.0, 0.0); l_span]; (2 * l1 + 1) as usize];
        for p in &self.paths {
            g[(p.k + l1) as usize][p.l] += p.h;
        }
        g
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.h.norm_sqr()).sum()
    }

    /// Same paths with every gain multiplied by `alpha`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        ChannelRealization {
            paths: self
                .paths
                .iter()
                .map(|p| PathParams { h: p.h * alpha, ..p.clone() })
                .collect(),
        }
    }

    /// Plain-text record: one `l k re(h) im(h)` line per path.
    pub fn to_record(&self) -> String {
        let mut s = String::from("# l k re_h im_h\n");
        for p in &self.paths {
            let _ = writeln!(s, "{} {} {:e} {:e}", p.l, p.k, p.h.re, p.h.im);
        }
        s
    }

    pub fn from_record(text: &str, cfg: &FrameConfig) -> Result<Self> {
        let mut paths = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if f.len() != 4 {
                return Err(bad("expected 4 fields: l k re im"));
            }
            let l: usize = f[0].parse().map_err(|_| bad("bad delay index"))?;
            let k: i64 = f[1].parse().map_err(|_| bad("bad Doppler index"))?;
            let re: f64 = f[2].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = f[3].parse().map_err(|_| bad("bad imaginary part"))?;
            paths.push(PathParams::on_grid(Complex64::new(re, im), l, k, cfg));
        }
        Self::from_paths(paths, cfg)
    }
}

/// Maximum Doppler shift `v f_c / c` for a speed in km/h.
pub fn max_doppler_hz(v_kmh: f64, f_c: f64) -> f64 {
    v_kmh / 3.6 * f_c / SPEED_OF_LIGHT
}

/// EVA channel: per-tap Rayleigh gains normalized to unit total mean power and
/// per-tap Doppler `nu_max cos(theta)` with uniform angle of arrival.
pub fn gen_eva_channel(cfg: &FrameConfig, v_kmh: f64, seed: u64) -> Result<ChannelRealization> {
    if !(v_kmh.is_finite() && v_kmh >= 0.0) {
        return Err(Error::Config(format!("speed must be non-negative, got {v_kmh}")));
    }
    let nu_max = max_doppler_hz(v_kmh, cfg.f_c);
    let total: f64 = EVA_PROFILE.iter().map(|(_, db)| 10f64.powf(db / 10.0)).sum();
    let mut rng = rng_from_seed(seed);
    let mut paths = Vec::with_capacity(EVA_PROFILE.len());
    for &(delay_ns, db) in &EVA_PROFILE {
        let power = 10f64.powf(db / 10.0) / total;
        let h = complex_gaussian(&mut rng, power);
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let l = delay_index(delay_ns * 1e-9, cfg)?;
        let k = doppler_index(nu_max * theta.cos(), cfg)?;
        paths.push(PathParams::on_grid(h, l, k, cfg));
    }
    ChannelRealization::from_paths(paths, cfg)
}

/// `count` paths on distinct grid points with `l <= max_delay`,
/// `|k| <= max_doppler` and gains `CN(0, 1/count)`.
pub fn gen_random_channel(
    cfg: &FrameConfig,
    count: usize,
    max_delay: usize,
    max_doppler: usize,
    seed: u64,
) -> Result<ChannelRealization> {
    if max_delay >= cfg.m {
        return Err(Error::Config(format!(
            "maximum delay index {max_delay} must be below M = {}",
            cfg.m
        )));
    }
    let kmax = max_doppler as i64;
    if -kmax < cfg.min_doppler_index() || kmax > cfg.max_doppler_index() {
        return Err(Error::Config(format!(
            "maximum Doppler index {max_doppler} does not fit N = {}",
            cfg.n
        )));
    }
    let cells = (max_delay + 1) * (2 * max_doppler + 1);
    if count == 0 || count > cells {
        return Err(Error::Config(format!(
            "cannot place {count} distinct paths on {cells} grid points"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut taken = std::collections::BTreeSet::new();
    let mut paths = Vec::with_capacity(count);
    while paths.len() < count {
        let l = rng.random_range(0..=max_delay);
        let k = rng.random_range(-kmax..=kmax);
        if taken.insert((l, k)) {
            let h = complex_gaussian(&mut rng, 1.0 / count as f64);
            paths.push(PathParams::on_grid(h, l, k, cfg));
        }
    }
    ChannelRealization::from_paths(paths, cfg)
}

/// Noise variance for a given SNR under unit average symbol energy.
pub fn snr_to_noise_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `y(t) = sum_p h_p x(t - tau_p) exp(j 2 pi nu_p (t - tau_p)) + w(t)`, with
/// complex AWGN of per-sample variance `noise_var`.
///
/// The output covers the input window extended by the largest delay.
pub fn apply_physical_channel(
    stream: &SampleStream,
    chan: &ChannelRealization,
    noise_var: f64,
    seed: u64,
) -> Result<SampleStream> {
    let fs = stream.sample_rate;
    let mut shifts = Vec::with_capacity(chan.paths.len());
    for p in &chan.paths {
        let d = p.tau * fs;
        if (d - d.round()).abs() > 1e-6 || d < -1e-9 {
            return Err(Error::OffGrid(p.tau));
        }
        shifts.push(d.round() as usize);
    }
    let extra = shifts.iter().copied().max().unwrap_or(0);
    let len = stream.len() + extra;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (p, &d) in chan.paths.iter().zip(&shifts) {
        for (i, x) in stream.samples.iter().enumerate() {
            let idx = i + d;
            let t = stream.time_of(idx) - p.tau;
            out[idx] += p.h * x * Complex64::from_polar(1.0, 2.0 * PI * p.nu * t);
        }
    }
    if noise_var > 0.0 {
        let mut rng = rng_from_seed(seed);
        for v in out.iter_mut() {
            *v += complex_gaussian(&mut rng, noise_var);
        }
    }
    Ok(SampleStream::new(out, stream.t0, fs))
}
