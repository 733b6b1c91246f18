//! CP-OFDM with one-tap equalization. Subcarrier `m` of OFDM symbol `n`
//! carries grid entry `s[m N + n]`, so the same frame vector feeds all schemes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channel::ChannelRealization;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::grid::FrameConfig;
use crate::waveform::SampleStream;

pub fn ofdm_sample_rate(cfg: &FrameConfig) -> f64 {
    cfg.m as f64 * cfg.delta_f
}

/// Samples per OFDM symbol including its prefix.
pub fn ofdm_symbol_len(cfg: &FrameConfig, cp: usize) -> usize {
    cfg.m + cp
}

/// `N` symbols, each a unitary IDFT over `M` subcarriers preceded by `cp`
/// samples of prefix. `t = 0` is the start of the first prefix.
pub fn ofdm_modulate(symbols: &[Complex64], cfg: &FrameConfig, cp: usize) -> Result<SampleStream> {
    let (m_bins, n_bins) = (cfg.m, cfg.n);
    if symbols.len() != m_bins * n_bins {
        return Err(Error::Dimension {
            expected: m_bins * n_bins,
            got: symbols.len(),
        });
    }
    if cp > m_bins {
        return Err(Error::CyclicPrefix { cp, delay: m_bins });
    }
    let inv = FftPlanner::new().plan_fft_inverse(m_bins);
    let scale = 1.0 / (m_bins as f64).sqrt();
    let mut out = Vec::with_capacity(n_bins * (m_bins + cp));
    let mut buf = vec![Complex64::new(0.0, 0.0); m_bins];
    for n in 0..n_bins {
        for (m, b) in buf.iter_mut().enumerate() {
            *b = symbols[m * n_bins + n] * scale;
        }
        inv.process(&mut buf);
        out.extend_from_slice(&buf[m_bins - cp..]);
        out.extend_from_slice(&buf);
    }
    Ok(SampleStream::new(out, 0.0, ofdm_sample_rate(cfg)))
}

/// Per-subcarrier observations, same layout as the transmitted symbols.
pub fn ofdm_demodulate(stream: &SampleStream, cfg: &FrameConfig, cp: usize) -> Result<Vec<Complex64>> {
    let (m_bins, n_bins) = (cfg.m, cfg.n);
    let sym = ofdm_symbol_len(cfg, cp);
    let origin = stream.origin();
    let needed = origin + (n_bins * sym) as i64;
    if origin < 0 || needed > stream.len() as i64 {
        return Err(Error::StreamTooShort {
            needed: needed.max(0) as usize,
            have: stream.len(),
        });
    }
    let fwd = FftPlanner::new().plan_fft_forward(m_bins);
    let scale = 1.0 / (m_bins as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); m_bins * n_bins];
    for n in 0..n_bins {
        let start = origin as usize + n * sym + cp;
        let mut buf = stream.samples[start..start + m_bins].to_vec();
        fwd.process(&mut buf);
        for (m, v) in buf.iter().enumerate() {
            out[m * n_bins + n] = v * scale;
        }
    }
    Ok(out)
}

/// Diagonal of the per-symbol subcarrier coupling: path phases averaged over
/// each symbol's useful part. Off-diagonal (inter-carrier) terms are left to
/// the receiver as interference.
pub fn ofdm_channel_response(chan: &ChannelRealization, cfg: &FrameConfig, cp: usize) -> Result<Vec<Complex64>> {
    let (m_bins, n_bins) = (cfg.m, cfg.n);
    let delay = chan.max_delay();
    if cp < delay {
        return Err(Error::CyclicPrefix { cp, delay });
    }
    let dt = 1.0 / ofdm_sample_rate(cfg);
    let sym = ofdm_symbol_len(cfg, cp);
    let mut out = vec![Complex64::new(0.0, 0.0); m_bins * n_bins];
    for p in &chan.paths {
        // (1/M) sum_i exp(j 2 pi nu i dt) in closed form
        let x = PI * p.nu * dt;
        let avg = if (x * m_bins as f64).abs() < 1e-15 {
            Complex64::new(1.0, 0.0)
        } else {
            let mag = (m_bins as f64 * x).sin() / (m_bins as f64 * x.sin());
            Complex64::from_polar(mag, x * (m_bins as f64 - 1.0))
        };
        for n in 0..n_bins {
            let t = (n * sym + cp) as f64 * dt - p.tau;
            let common = p.h * avg * Complex64::from_polar(1.0, 2.0 * PI * p.nu * t);
            for m in 0..m_bins {
                let freq = Complex64::from_polar(1.0, -2.0 * PI * (m * p.l) as f64 / m_bins as f64);
                out[m * n_bins + n] += common * freq;
            }
        }
    }
    Ok(out)
}

/// Zero-forcing one-tap equalization.
pub fn ofdm_equalize(observed: &[Complex64], response: &[Complex64]) -> Result<Vec<Complex64>> {
    if observed.len() != response.len() {
        return Err(Error::Dimension {
            expected: response.len(),
            got: observed.len(),
        });
    }
    Ok(observed
        .iter()
        .zip(response)
        .map(|(y, h)| if h.norm_sqr() > 0.0 { y / h } else { Complex64::new(0.0, 0.0) })
        .collect())
}

/// Demodulation, one-tap equalization and hard demapping.
pub fn ofdm_detect(
    stream: &SampleStream,
    response: &[Complex64],
    cfg: &FrameConfig,
    cp: usize,
    constellation: &Constellation,
) -> Result<Vec<u8>> {
    let y = ofdm_demodulate(stream, cfg, cp)?;
    let eq = ofdm_equalize(&y, response)?;
    let hard: Vec<Complex64> = eq.iter().map(|z| constellation.hard_decision(*z)).collect();
    Ok(constellation.demap(&hard))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_physical_channel, PathParams};
    use crate::constellation::ConstellationKind;
    use crate::rng::{awgn, random_bits, rng_from_seed};
    use statrs::function::erf::erfc;

    fn cfg() -> FrameConfig {
        FrameConfig::new(32, 8, 15e3, 5e9, 2, 0.5, 1, ConstellationKind::Qam4).unwrap()
    }

    #[test]
    fn roundtrip_identity() {
        let cf = cfg();
        let s = awgn(&mut rng_from_seed(1), 256, 1.0);
        let y = ofdm_demodulate(&ofdm_modulate(&s, &cf, 4).unwrap(), &cf, 4).unwrap();
        for (a, b) in s.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn static_channel_is_diagonal() {
        let cf = cfg();
        let chan = ChannelRealization::from_paths(
            vec![
                PathParams::on_grid(Complex64::new(0.9, 0.1), 0, 0, &cf),
                PathParams::on_grid(Complex64::new(-0.3, 0.4), 3, 0, &cf),
            ],
            &cf,
        )
        .unwrap();
        let s = awgn(&mut rng_from_seed(2), 256, 1.0);
        let rx = apply_physical_channel(&ofdm_modulate(&s, &cf, 4).unwrap(), &chan, 0.0, 0).unwrap();
        let y = ofdm_demodulate(&rx, &cf, 4).unwrap();
        let h = ofdm_channel_response(&chan, &cf, 4).unwrap();
        for ((yi, hi), si) in y.iter().zip(&h).zip(&s) {
            assert!((yi - hi * si).norm() < 1e-10);
        }
    }

    #[test]
    fn response_is_exact_diagonal_under_doppler() {
        // with one subcarrier active, the response equals the observed gain there
        let cf = cfg();
        let chan = ChannelRealization::from_paths(vec![PathParams::on_grid(Complex64::new(0.7, -0.2), 2, 3, &cf)], &cf).unwrap();
        let h = ofdm_channel_response(&chan, &cf, 4).unwrap();
        let mut s = vec![Complex64::new(0.0, 0.0); 256];
        s[5 * 8 + 2] = Complex64::new(1.0, 0.0);
        let rx = apply_physical_channel(&ofdm_modulate(&s, &cf, 4).unwrap(), &chan, 0.0, 0).unwrap();
        let y = ofdm_demodulate(&rx, &cf, 4).unwrap();
        assert!((y[5 * 8 + 2] - h[5 * 8 + 2]).norm() < 1e-10);
    }

    #[test]
    fn short_prefix_rejected() {
        let cf = cfg();
        let chan = ChannelRealization::from_paths(vec![PathParams::on_grid(Complex64::new(1.0, 0.0), 5, 0, &cf)], &cf).unwrap();
        assert!(matches!(ofdm_channel_response(&chan, &cf, 4), Err(Error::CyclicPrefix { cp: 4, delay: 5 })));
    }

    #[test]
    fn noiseless_single_tap_is_error_free() {
        let cf = cfg();
        let c = Constellation::new(ConstellationKind::Qam4);
        let chan = ChannelRealization::from_paths(vec![PathParams::on_grid(Complex64::new(0.0, -1.3), 2, 0, &cf)], &cf).unwrap();
        let bits = random_bits(&mut rng_from_seed(4), 512);
        let s = c.map(&bits).unwrap();
        let rx = apply_physical_channel(&ofdm_modulate(&s, &cf, 4).unwrap(), &chan, 0.0, 0).unwrap();
        let h = ofdm_channel_response(&chan, &cf, 4).unwrap();
        assert_eq!(ofdm_detect(&rx, &h, &cf, 4, &c).unwrap(), bits);
    }

    #[test]
    fn awgn_ber_matches_closed_form() {
        let cf = cfg();
        let c = Constellation::new(ConstellationKind::Qam4);
        let chan = ChannelRealization::from_paths(vec![PathParams::on_grid(Complex64::new(1.0, 0.0), 0, 0, &cf)], &cf).unwrap();
        let h = ofdm_channel_response(&chan, &cf, 4).unwrap();
        let sigma = 10f64.powf(-0.7);
        let (mut errs, mut total) = (0usize, 0usize);
        for f in 0..400 {
            let bits = random_bits(&mut rng_from_seed(f), 512);
            let s = c.map(&bits).unwrap();
            let rx = apply_physical_channel(&ofdm_modulate(&s, &cf, 4).unwrap(), &chan, sigma, 1000 + f).unwrap();
            let got = ofdm_detect(&rx, &h, &cf, 4, &c).unwrap();
            errs += got.iter().zip(&bits).filter(|(a, b)| a != b).count();
            total += bits.len();
        }
        // Q(sqrt(1/sigma)) = 0.5 erfc(sqrt(1/(2 sigma)))
        let want = 0.5 * erfc((1.0 / (2.0 * sigma)).sqrt());
        let ber = errs as f64 / total as f64;
        assert!(ber < 2.0 * want && ber > 0.5 * want, "{ber} vs {want}");
    }

}
