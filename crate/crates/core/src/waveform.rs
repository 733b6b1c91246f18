//! Sample-level ODDM transmitter and matched-filter receiver.
//!
//! The prototype pulse `a(t)` is a square-root raised cosine with symbol
//! period `T/M`, truncated to `[-Q T/M, Q T/M]` and scaled so that
//! `sum |a|^2 dt = 1/N`. The transmit pulse train is
//! `u(t) = sum_{k=0}^{N-1} a(t - k T)` and symbol `S(m, n)` rides on
//! `u(t - m T/M) exp(j 2 pi n (t - m T/M) / (N T))`.
//!
//! Waveforms are sampled at `oversampling * M * delta_f`. With
//! `K = oversampling * M` samples per slot, the phase of Doppler bin `n` at
//! sample offset `tau` (relative to the symbol's delay) is
//! `exp(j 2 pi n tau / (N K))`, so modulation and matched filtering reduce to
//! length-`N` DFTs across the pulse copies for every `(m, tap)` pair.
//!
//! Frame edges: with `cyclic_prefix == 0` the modulator emits the plain
//! (linear) superposition including pulse tails. With a cyclic prefix of `c`
//! bins the stream is the `N T`-periodic extension of the frame observed
//! from `-(Q + c) T/M` onward, which makes delayed copies of the last delay
//! bins land on the first pulse of the train exactly as the wrap blocks of the
//! effective channel assume.

use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{DDFrame, FrameConfig};

/// Complex baseband samples with their time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    /// Time of `samples[0]` in seconds.
    pub t0: f64,
    pub sample_rate: f64,
}

impl SampleStream {
    pub fn new(samples: Vec<Complex64>, t0: f64, sample_rate: f64) -> Self {
        SampleStream {
            samples,
            t0,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Index of the sample at `t = 0` (may lie outside the stream).
    pub fn origin(&self) -> i64 {
        (-self.t0 * self.sample_rate).round() as i64
    }

    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    /// `sum |x|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt()
    }
}

/// Square-root raised cosine impulse response at `x = t / Ts`.
pub fn srrc(x: f64, beta: f64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && ((4.0 * beta * x).abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

/// Sampled prototype pulse plus the frame geometry needed to place copies of it.
#[derive(Debug, Clone)]
pub struct PulseBank {
    taps: Vec<f64>,
    q: usize,
    oversampling: usize,
    m: usize,
    n: usize,
    dt: f64,
}

impl PulseBank {
    /// Samples of `a(t)` at `t = j dt`, `j = -Q os ..= Q os`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Offset of `a(0)` inside [`PulseBank::taps`].
    pub fn center(&self) -> usize {
        self.q * self.oversampling
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Samples per slot `T`.
    pub fn samples_per_slot(&self) -> usize {
        self.m * self.oversampling
    }

    /// `sum |a|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|a| a * a).sum::<f64>() * self.dt
    }

    /// `sum |u|^2 dt`; the copies of `a` in `u` never overlap because `2Q < M`.
    pub fn train_energy(&self) -> f64 {
        self.energy() * self.n as f64
    }

    /// Samples of `u(t)` starting at `t = -Q T/M`.
    pub fn train_samples(&self) -> Vec<f64> {
        let k = self.samples_per_slot();
        let len = (self.n - 1) * k + self.taps.len();
        let mut u = vec![0.0; len];
        for copy in 0..self.n {
            for (j, &a) in self.taps.iter().enumerate() {
                u[copy * k + j] += a;
            }
        }
        u
    }

    fn check(&self, cfg: &FrameConfig) -> Result<()> {
        if cfg.m != self.m || cfg.n != self.n || cfg.oversampling != self.oversampling || cfg.q != self.q {
            return Err(Error::Config(
                "pulse bank was built for a different frame configuration".into(),
            ));
        }
        Ok(())
    }
}

/// Truncated SRRC prototype renormalized to energy `1/N`.
pub fn build_srrc(cfg: &FrameConfig) -> Result<PulseBank> {
    cfg.validate()?;
    let os = cfg.oversampling;
    let half = (cfg.q * os) as i64;
    let dt = cfg.delay_resolution() / os as f64;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|j| srrc(j as f64 / os as f64, cfg.rolloff))
        .collect();
    let e: f64 = taps.iter().map(|a| a * a).sum::<f64>() * dt;
    let scale = (1.0 / (cfg.n as f64 * e)).sqrt();
    taps.iter_mut().for_each(|a| *a *= scale);
    // enforce exact symmetry against rounding in the closed form
    let len = taps.len();
    for j in 0..len / 2 {
        let avg = 0.5 * (taps[j] + taps[len - 1 - j]);
        taps[j] = avg;
        taps[len - 1 - j] = avg;
    }
    Ok(PulseBank {
        taps,
        q: cfg.q,
        oversampling: os,
        m: cfg.m,
        n: cfg.n,
        dt,
    })
}

/// `exp(j 2 pi i / period)` for `i` in `[0, period)`.
fn twiddles(period: usize) -> Vec<Complex64> {
    (0..period)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / period as f64))
        .collect()
}

struct DftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl DftPair {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        DftPair {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Length of the linear (no cyclic prefix) ODDM stream.
fn linear_len(cfg: &FrameConfig) -> usize {
    let os = cfg.oversampling;
    (cfg.grid_len() - 1) * os + 2 * cfg.q * os + 1
}

/// ODDM modulation of one frame.
pub fn oddm_modulate(frame: &DDFrame, pulses: &PulseBank, cfg: &FrameConfig) -> Result<SampleStream> {
    pulses.check(cfg)?;
    if !frame.matches(cfg) {
        return Err(Error::Dimension {
            expected: cfg.grid_len(),
            got: frame.as_slice().len(),
        });
    }
    let (m_bins, n_bins, os) = (cfg.m, cfg.n, cfg.oversampling);
    let k = pulses.samples_per_slot();
    let period = n_bins * k;
    let tw = twiddles(period);
    let dft = DftPair::new(n_bins);
    let centre = pulses.center();
    let base = centre; // index of t = 0 in the linear stream

    let mut lin = vec![Complex64::new(0.0, 0.0); linear_len(cfg)];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_bins];
    for m in 0..m_bins {
        let row = &frame.as_slice()[m * n_bins..(m + 1) * n_bins];
        if row.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        for (tap, &a) in pulses.taps().iter().enumerate() {
            let j = tap as i64 - centre as i64;
            // sum_n S(m,n) e^{j2pi n j/(NK)} e^{j2pi n c/N} over copies c
            for (nn, b) in buf.iter_mut().enumerate() {
                let idx = (nn as i64 * j).rem_euclid(period as i64) as usize;
                *b = row[nn] * tw[idx];
            }
            dft.inverse.process(&mut buf);
            let start = (base as i64 + (m * os) as i64 + j) as usize;
            for (copy, v) in buf.iter().enumerate() {
                lin[start + copy * k] += *v * a;
            }
        }
    }

    let dt = pulses.dt();
    let sample_rate = 1.0 / dt;
    let cp = cfg.cyclic_prefix * os;
    if cp == 0 {
        return Ok(SampleStream::new(lin, -(base as f64) * dt, sample_rate));
    }
    // periodic extension with period N T, observed from -(Q + cp) T/M
    let len = cp + lin.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, o) in out.iter_mut().enumerate() {
        let rel = i as i64 - cp as i64;
        for shift in [-(period as i64), 0, period as i64] {
            let src = rel + shift;
            if src >= 0 && (src as usize) < lin.len() {
                *o += lin[src as usize];
            }
        }
    }
    Ok(SampleStream::new(out, -((base + cp) as f64) * dt, sample_rate))
}

/// Matched filtering against `u(t - m T/M) exp(j 2 pi n (t - m T/M)/(N T))`.
pub fn oddm_demodulate(stream: &SampleStream, pulses: &PulseBank, cfg: &FrameConfig) -> Result<DDFrame> {
    pulses.check(cfg)?;
    let (m_bins, n_bins, os) = (cfg.m, cfg.n, cfg.oversampling);
    let k = pulses.samples_per_slot();
    let period = n_bins * k;
    let centre = pulses.center() as i64;
    let origin = stream.origin();
    let first = origin - centre;
    let last = origin + ((cfg.grid_len() - 1) * os) as i64 + centre;
    if first < 0 || last >= stream.len() as i64 {
        let needed = (last.max(0) + 1 + (-first).max(0)) as usize;
        return Err(Error::StreamTooShort {
            needed,
            have: stream.len(),
        });
    }
    let tw = twiddles(period);
    let dft = DftPair::new(n_bins);
    let dt = pulses.dt();

    let mut out = DDFrame::for_config(cfg);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_bins];
    let mut acc = vec![Complex64::new(0.0, 0.0); n_bins];
    for m in 0..m_bins {
        acc.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (tap, &a) in pulses.taps().iter().enumerate() {
            let j = tap as i64 - centre;
            let start = origin + (m * os) as i64 + j;
            for (copy, b) in buf.iter_mut().enumerate() {
                *b = stream.samples[(start + (copy * k) as i64) as usize];
            }
            dft.forward.process(&mut buf);
            let w = a * dt;
            for (nn, (acc_n, z)) in acc.iter_mut().zip(buf.iter()).enumerate() {
                let idx = (nn as i64 * j).rem_euclid(period as i64) as usize;
                *acc_n += *z * tw[idx].conj() * w;
            }
        }
        for (nn, v) in acc.iter().enumerate() {
            out.set(m, nn, *v);
        }
    }
    Ok(out)
}

/// `|<u(t), u(t - m T/M) exp(j 2 pi n (t - m T/M)/(N T))>|` over the given shifts.
///
/// Row `i` corresponds to the `i`-th delay shift of `m_range`, column `j` to the
/// `j`-th Doppler shift of `n_range`.
pub fn pulse_orthogonality_matrix(
    pulses: &PulseBank,
    cfg: &FrameConfig,
    m_range: RangeInclusive<i64>,
    n_range: RangeInclusive<i64>,
) -> Result<Vec<Vec<f64>>> {
    pulses.check(cfg)?;
    let k = pulses.samples_per_slot() as i64;
    let os = cfg.oversampling as i64;
    let period = cfg.n as i64 * k;
    let tw = twiddles(period as usize);
    let taps = pulses.taps();
    let span = taps.len() as i64;
    let centre = pulses.center() as i64;
    let copies = cfg.n as i64;
    let dt = pulses.dt();

    let mut rows = Vec::new();
    for m in m_range {
        let shift = m * os;
        let mut row = Vec::new();
        for n in n_range.clone() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..copies {
                // copy c of u(t) occupies samples [c K - centre, c K + centre]
                for c2 in 0..copies {
                    // copy c2 of the shifted train is centred at c2 K + shift
                    let offset = c2 * k + shift - c * k;
                    if offset.abs() >= span {
                        continue;
                    }
                    for j in 0..span {
                        let j2 = j - offset;
                        if j2 < 0 || j2 >= span {
                            continue;
                        }
                        let t = c * k + j - centre; // sample time of u(t)
                        let idx = (n * (t - shift)).rem_euclid(period) as usize;
                        acc += tw[idx].conj() * (taps[j as usize] * taps[j2 as usize]);
                    }
                }
            }
            row.push(acc.norm() * dt);
        }
        rows.push(row);
    }
    Ok(rows)
}
