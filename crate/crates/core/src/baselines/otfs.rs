//! OTFS: ISFFT onto the time-frequency grid followed by rectangular-pulse
//! multicarrier modulation, with one cyclic prefix for the whole frame.
//!
//! Time-frequency grid `X_tf[n][m]` holds OFDM symbol `n`, subcarrier `m`.
//! The stream runs at `M delta_f` so one delay bin is one sample.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::grid::{DDFrame, FrameConfig};
use crate::sparse::CsrMatrix;
use crate::waveform::SampleStream;

/// `X_tf[n][m] = 1/sqrt(MN) sum_{l,k} X[l,k] exp(j 2 pi (n k / N - m l / M))`.
pub fn isfft(frame: &DDFrame) -> Vec<Vec<Complex64>> {
    let (m_bins, n_bins) = (frame.delay_bins(), frame.doppler_bins());
    let mut planner = FftPlanner::new();
    let inv_n = planner.plan_fft_inverse(n_bins);
    let fwd_m = planner.plan_fft_forward(m_bins);
    let mut tf = vec![vec![Complex64::new(0.0, 0.0); m_bins]; n_bins];
    let mut col = vec![Complex64::new(0.0, 0.0); n_bins];
    for l in 0..m_bins {
        for (k, c) in col.iter_mut().enumerate() {
            *c = frame.get(l, k);
        }
        inv_n.process(&mut col);
        for n in 0..n_bins {
            tf[n][l] = col[n];
        }
    }
    let scale = 1.0 / ((m_bins * n_bins) as f64).sqrt();
    for row in tf.iter_mut() {
        fwd_m.process(row);
        row.iter_mut().for_each(|v| *v *= scale);
    }
    tf
}

/// Inverse of [`isfft`].
pub fn sfft(tf: &[Vec<Complex64>], m_bins: usize, n_bins: usize) -> Result<DDFrame> {
    if tf.len() != n_bins || tf.iter().any(|r| r.len() != m_bins) {
        return Err(Error::Dimension {
            expected: m_bins * n_bins,
            got: tf.iter().map(|r| r.len()).sum(),
        });
    }
    let mut planner = FftPlanner::new();
    let fwd_n = planner.plan_fft_forward(n_bins);
    let inv_m = planner.plan_fft_inverse(m_bins);
    let mut rows: Vec<Vec<Complex64>> = tf.to_vec();
    for row in rows.iter_mut() {
        inv_m.process(row);
    }
    let scale = 1.0 / ((m_bins * n_bins) as f64).sqrt();
    let mut out = DDFrame::zeros(m_bins, n_bins);
    let mut col = vec![Complex64::new(0.0, 0.0); n_bins];
    for l in 0..m_bins {
        for (n, c) in col.iter_mut().enumerate() {
            *c = rows[n][l];
        }
        fwd_n.process(&mut col);
        for (k, v) in col.iter().enumerate() {
            out.set(l, k, v * scale);
        }
    }
    Ok(out)
}

fn check_frame(frame: &DDFrame, cfg: &FrameConfig) -> Result<()> {
    if !frame.matches(cfg) {
        return Err(Error::Dimension {
            expected: cfg.grid_len(),
            got: frame.as_slice().len(),
        });
    }
    Ok(())
}

pub fn otfs_sample_rate(cfg: &FrameConfig) -> f64 {
    cfg.m as f64 * cfg.delta_f
}

/// ISFFT, per-symbol unitary IDFT, then the frame prefix of
/// `cfg.cyclic_prefix` samples. `t = 0` is the first data sample.
pub fn otfs_modulate(frame: &DDFrame, cfg: &FrameConfig) -> Result<SampleStream> {
    check_frame(frame, cfg)?;
    let (m_bins, n_bins) = (cfg.m, cfg.n);
    let tf = isfft(frame);
    let inv = FftPlanner::new().plan_fft_inverse(m_bins);
    let scale = 1.0 / (m_bins as f64).sqrt();
    let mut body = Vec::with_capacity(m_bins * n_bins);
    for mut row in tf {
        inv.process(&mut row);
        body.extend(row.into_iter().map(|v| v * scale));
    }
    let cp = cfg.cyclic_prefix;
    if cp > body.len() {
        return Err(Error::CyclicPrefix { cp, delay: body.len() });
    }
    let mut samples = Vec::with_capacity(cp + body.len());
    samples.extend_from_slice(&body[body.len() - cp..]);
    samples.extend_from_slice(&body);
    let fs = otfs_sample_rate(cfg);
    Ok(SampleStream::new(samples, -(cp as f64) / fs, fs))
}

/// Drops the prefix, applies the per-symbol DFT and the SFFT.
pub fn otfs_demodulate(stream: &SampleStream, cfg: &FrameConfig) -> Result<DDFrame> {
    let (m_bins, n_bins) = (cfg.m, cfg.n);
    let origin = stream.origin();
    let needed = origin + (m_bins * n_bins) as i64;
    if origin < 0 || needed > stream.len() as i64 {
        return Err(Error::StreamTooShort {
            needed: needed.max(0) as usize,
            have: stream.len(),
        });
    }
    let fwd = FftPlanner::new().plan_fft_forward(m_bins);
    let scale = 1.0 / (m_bins as f64).sqrt();
    let mut tf = Vec::with_capacity(n_bins);
    for n in 0..n_bins {
        let start = origin as usize + n * m_bins;
        let mut row = stream.samples[start..start + m_bins].to_vec();
        fwd.process(&mut row);
        row.iter_mut().for_each(|v| *v *= scale);
        tf.push(row);
    }
    sfft(&tf, m_bins, n_bins)
}

/// Reduced-prefix OTFS input-output relation for integer paths:
/// `Y[l,k] = sum_p h_p exp(j 2 pi k_p (l - l_p) / (MN)) alpha_p(l,k) X[(l - l_p)_M, (k - k_p)_N]`
/// with `alpha_p = exp(-j 2 pi (k - k_p)_N / N)` when `l < l_p`, else 1.
pub fn otfs_effective_channel(chan: &ChannelRealization, cfg: &FrameConfig) -> Result<CsrMatrix> {
    let (m_bins, n_bins) = (cfg.m, cfg.n);
    let mn = (m_bins * n_bins) as f64;
    let mut trip = Vec::with_capacity(chan.paths.len() * m_bins * n_bins);
    for p in &chan.paths {
        if p.l >= m_bins {
            return Err(Error::DelayOutOfRange {
                tau: p.tau,
                index: p.l as i64,
                m: m_bins,
            });
        }
        for l in 0..m_bins {
            let src_l = (l + m_bins - p.l) % m_bins;
            let doppler = Complex64::from_polar(1.0, 2.0 * PI * p.k as f64 * (l as f64 - p.l as f64) / mn);
            for k in 0..n_bins {
                let src_k = (k as i64 - p.k).rem_euclid(n_bins as i64) as usize;
                let alpha = if l < p.l {
                    Complex64::from_polar(1.0, -2.0 * PI * src_k as f64 / n_bins as f64)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                trip.push((l * n_bins + k, src_l * n_bins + src_k, p.h * doppler * alpha));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(m_bins * n_bins, m_bins * n_bins, trip))
}
