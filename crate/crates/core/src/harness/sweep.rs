//! Monte Carlo sweeps.
//!
//! Trial `t` draws its channel from `(seed, CHANNEL, t)`, so every SNR point
//! and every scheme sees the same realizations. Frame `f` of trial `t` uses
//! bits from `(seed, DATA_BITS, t, f)` at all SNRs and noise from
//! `(seed, DATA_NOISE, t, f, point)`. Trials run in fixed batches and are
//! merged in trial order, so results do not depend on the thread count.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::baselines::{assert_resource_parity, ofdm, otfs, Scheme};
use crate::channel::{apply_physical_channel, gen_eva_channel, gen_random_channel, snr_to_noise_var, ChannelRealization};
use crate::constellation::Constellation;
use crate::detector::{lmmse_detect_with, oamp_detect_with, LeKernel};
use crate::effchan::assemble_h;
use crate::error::{Error, Result};
use crate::estimator::{estimate_channel, mle_exhaustive, nmse_linear, EstimationConfig, EstimationResult, NMSE_FLOOR_DB};
use crate::grid::{devectorize, FrameConfig};
use crate::rng::{awgn, derive_seed, random_bits, random_symbols, rng_from_seed, stream};
use crate::sparse::CsrMatrix;
use crate::waveform::{build_srrc, oddm_demodulate, oddm_modulate, PulseBank};

use super::config::{ChannelModel, Csi, DetectorKind, ExperimentSpec, Level, PathCount};
use super::report::{SweepResult, SweepRow};

/// Trials evaluated between early-stop checks.
pub const TRIAL_BATCH: usize = 8;

fn seed_for(master: u64, tag: u64, index: &[u64]) -> u64 {
    index.iter().fold(derive_seed(master, tag), |s, &i| derive_seed(s, i))
}

fn db(linear: f64) -> f64 {
    if linear > 0.0 {
        (10.0 * linear.log10()).max(NMSE_FLOOR_DB)
    } else {
        NMSE_FLOOR_DB
    }
}

/// Channel realization of trial `trial`.
pub fn draw_channel(spec: &ExperimentSpec, trial: u64) -> Result<ChannelRealization> {
    let seed = seed_for(spec.seed, stream::CHANNEL, &[trial]);
    match spec.channel {
        ChannelModel::Eva { speed_kmh } => gen_eva_channel(&spec.frame, speed_kmh, seed),
        ChannelModel::Random {
            paths,
            max_delay,
            max_doppler,
        } => gen_random_channel(&spec.frame, paths, max_delay, max_doppler, seed),
    }
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    cfg: &'a FrameConfig,
    constellation: Constellation,
    pulses: Option<PulseBank>,
}

impl<'a> Context<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let needs_pulses = spec.level == Level::Waveform;
        Ok(Context {
            spec,
            cfg: &spec.frame,
            constellation: spec.frame.constellation(),
            pulses: if needs_pulses { Some(build_srrc(&spec.frame)?) } else { None },
        })
    }

    fn effective_matrix(&self, scheme: Scheme, chan: &ChannelRealization) -> Result<CsrMatrix> {
        match scheme {
            Scheme::Otfs => otfs::otfs_effective_channel(chan, self.cfg),
            _ => Ok(assemble_h(chan, self.cfg)?.h),
        }
    }

    /// Delay-Doppler observation of `s`. OFDM frames never pass through here;
    /// its sensing stage uses the grid model.
    fn transmit(
        &self,
        scheme: Scheme,
        level: Level,
        s: &[Complex64],
        chan: &ChannelRealization,
        h_true: &CsrMatrix,
        noise_var: f64,
        noise_seed: u64,
    ) -> Result<Vec<Complex64>> {
        let cfg = self.cfg;
        match (level, scheme) {
            (Level::Waveform, Scheme::Oddm) => {
                let pulses = self.pulses.as_ref().expect("pulses built for waveform level");
                let tx = oddm_modulate(&devectorize(s, cfg.m, cfg.n)?, pulses, cfg)?;
                // matched filtering scales white noise by dt, so the sample variance carries fs
                let rx = apply_physical_channel(&tx, chan, noise_var * tx.sample_rate, noise_seed)?;
                Ok(oddm_demodulate(&rx, pulses, cfg)?.as_slice().to_vec())
            }
            (Level::Waveform, Scheme::Otfs) => {
                let tx = otfs::otfs_modulate(&devectorize(s, cfg.m, cfg.n)?, cfg)?;
                let rx = apply_physical_channel(&tx, chan, noise_var, noise_seed)?;
                Ok(otfs::otfs_demodulate(&rx, cfg)?.as_slice().to_vec())
            }
            _ => {
                let mut y = h_true.matvec(s)?;
                for (v, w) in y.iter_mut().zip(awgn(&mut rng_from_seed(noise_seed), s.len(), noise_var)) {
                    *v += w;
                }
                Ok(y)
            }
        }
    }

    fn estimation_config(&self, chan: &ChannelRealization) -> EstimationConfig {
        let e = &self.spec.estimator;
        let paths = match e.paths {
            PathCount::Auto => chan.path_count(),
            PathCount::Fixed(p) => p,
        };
        let mut est = EstimationConfig::full_grid(self.cfg, paths);
        if let Some(l) = e.max_delay {
            est.delay_range = 0..=l.min(self.cfg.m - 1);
        }
        if let Some(k) = e.max_doppler {
            let k = k as i64;
            est.doppler_range = (-k).max(self.cfg.min_doppler_index())..=k.min(self.cfg.max_doppler_index());
        }
        est.max_iters = e.max_iters;
        est.epsilon = e.epsilon;
        est.objective = e.objective;
        est
    }

    /// Sensing frame, echo and estimate for trial `trial` at `snr_db`.
    fn sense(
        &self,
        scheme: Scheme,
        chan: &ChannelRealization,
        trial: u64,
        snr_db: f64,
        point: u64,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>, EstimationConfig)> {
        let seed = self.spec.seed;
        let s = random_symbols(
            &mut rng_from_seed(seed_for(seed, stream::SENSING_SYMBOLS, &[trial])),
            &self.constellation,
            self.cfg.grid_len(),
        );
        let (scheme, level) = match scheme {
            Scheme::Ofdm => (Scheme::Oddm, Level::Matrix),
            other => (other, self.spec.level),
        };
        let h_true = self.effective_matrix(scheme, chan)?;
        let noise_seed = seed_for(seed, stream::SENSING_NOISE, &[trial, point]);
        let y = self.transmit(scheme, level, &s, chan, &h_true, snr_to_noise_var(snr_db), noise_seed)?;
        Ok((y, s, self.estimation_config(chan)))
    }

    fn check_prefix(&self, chan: &ChannelRealization) -> Result<()> {
        let delay = chan.max_delay();
        match self.spec.scheme {
            Scheme::Ofdm if self.spec.ofdm_cp < delay => Err(Error::CyclicPrefix {
                cp: self.spec.ofdm_cp,
                delay,
            }),
            Scheme::Oddm | Scheme::Otfs if self.spec.level == Level::Waveform && self.cfg.cyclic_prefix < delay => {
                Err(Error::CyclicPrefix {
                    cp: self.cfg.cyclic_prefix,
                    delay,
                })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    bits: u64,
    errors: u64,
    nmse_sum: f64,
    nmse_count: u64,
    not_converged: u64,
    low_confidence: u64,
    time_s: f64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.trials += o.trials;
        self.bits += o.bits;
        self.errors += o.errors;
        self.nmse_sum += o.nmse_sum;
        self.nmse_count += o.nmse_count;
        self.not_converged += o.not_converged;
        self.low_confidence += o.low_confidence;
        self.time_s += o.time_s;
    }

    fn record_estimate(&mut self, est: &EstimationResult, nmse: f64) {
        self.nmse_sum += nmse;
        self.nmse_count += 1;
        self.not_converged += !est.converged as u64;
        self.low_confidence += est.low_confidence as u64;
    }
}

struct PreparedCsi {
    chan: ChannelRealization,
    kernel: Option<LeKernel>,
    estimate: Option<(EstimationResult, f64)>,
}

fn prepare_csi(ctx: &Context, chan: &ChannelRealization, trial: u64, snr_db: f64, point: u64) -> Result<PreparedCsi> {
    let spec = ctx.spec;
    let (csi_chan, estimate) = match spec.csi {
        Csi::Perfect => (chan.clone(), None),
        Csi::Estimated => {
            let (y, s, est) = ctx.sense(spec.scheme, chan, trial, snr_db, point)?;
            let res = estimate_channel(&y, &s, &est, ctx.cfg)?;
            let nmse = nmse_linear(&res, chan, ctx.cfg)?;
            (res.to_channel(ctx.cfg)?, Some((res, nmse)))
        }
    };
    let kernel = match spec.scheme {
        Scheme::Ofdm => None,
        scheme => {
            let h = ctx.effective_matrix(scheme, &csi_chan)?;
            let mode = spec
                .detector
                .le_mode(ctx.cfg.grid_len(), seed_for(spec.seed, stream::PROBES, &[trial]));
            Some(LeKernel::new(&h, &mode)?)
        }
    };
    Ok(PreparedCsi {
        chan: csi_chan,
        kernel,
        estimate,
    })
}

fn run_trial(ctx: &Context, trial: u64, active: &[bool]) -> Result<Vec<Option<Tally>>> {
    let spec = ctx.spec;
    let cfg = ctx.cfg;
    let chan = draw_channel(spec, trial)?;
    ctx.check_prefix(&chan)?;
    let h_true = match spec.scheme {
        Scheme::Ofdm => None,
        scheme => Some(ctx.effective_matrix(scheme, &chan)?),
    };
    // CSI that does not depend on the data SNR is prepared once per trial
    let shared_start = Instant::now();
    let shared = match (spec.csi, spec.estimator.sensing_snr_db) {
        (Csi::Perfect, _) => Some(prepare_csi(ctx, &chan, trial, 0.0, 0)?),
        (Csi::Estimated, Some(snr)) => Some(prepare_csi(ctx, &chan, trial, snr, 0)?),
        (Csi::Estimated, None) => None,
    };
    let shared_time = shared_start.elapsed().as_secs_f64();
    let bits_per_frame = cfg.grid_len() * ctx.constellation.bits_per_symbol();
    let oamp = spec
        .detector
        .oamp_config(cfg.grid_len(), seed_for(spec.seed, stream::PROBES, &[trial]));

    let mut out = Vec::with_capacity(active.len());
    for (point, (&snr_db, &on)) in spec.snr_grid_db.iter().zip(active).enumerate() {
        if !on {
            out.push(None);
            continue;
        }
        let start = Instant::now();
        let own;
        let csi = match &shared {
            Some(c) => c,
            None => {
                own = prepare_csi(ctx, &chan, trial, snr_db, point as u64 + 1)?;
                &own
            }
        };
        let sigma2 = snr_to_noise_var(snr_db);
        let mut tally = Tally {
            trials: 1,
            ..Tally::default()
        };
        if let Some((est, nmse)) = &csi.estimate {
            tally.record_estimate(est, *nmse);
        }
        let ofdm_resp = match spec.scheme {
            Scheme::Ofdm => Some(ofdm::ofdm_channel_response(&csi.chan, cfg, spec.ofdm_cp)?),
            _ => None,
        };
        for f in 0..spec.frames_per_trial as u64 {
            let bits = random_bits(
                &mut rng_from_seed(seed_for(spec.seed, stream::DATA_BITS, &[trial, f])),
                bits_per_frame,
            );
            let s = ctx.constellation.map(&bits)?;
            let noise_seed = seed_for(spec.seed, stream::DATA_NOISE, &[trial, f, point as u64]);
            let decided = match spec.scheme {
                Scheme::Ofdm => {
                    let tx = ofdm::ofdm_modulate(&s, cfg, spec.ofdm_cp)?;
                    let rx = apply_physical_channel(&tx, &chan, sigma2, noise_seed)?;
                    ofdm::ofdm_detect(&rx, ofdm_resp.as_ref().unwrap(), cfg, spec.ofdm_cp, &ctx.constellation)?
                }
                scheme => {
                    let h = h_true.as_ref().unwrap();
                    let y = ctx.transmit(scheme, spec.level, &s, &chan, h, sigma2, noise_seed)?;
                    let kernel = csi.kernel.as_ref().unwrap();
                    match spec.detector.kind {
                        DetectorKind::Oamp => oamp_detect_with(&y, kernel, sigma2, &oamp, &ctx.constellation)?,
                        DetectorKind::Lmmse => lmmse_detect_with(&y, kernel, sigma2, &ctx.constellation)?,
                    }
                    .hard_bits
                }
            };
            tally.bits += bits.len() as u64;
            tally.errors += decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
        }
        tally.time_s = start.elapsed().as_secs_f64() + shared_time / active.iter().filter(|&&a| a).count() as f64;
        out.push(Some(tally));
    }
    Ok(out)
}

fn detector_label(spec: &ExperimentSpec) -> String {
    match spec.scheme {
        Scheme::Ofdm => "zf".to_string(),
        _ => spec.detector.kind.to_string(),
    }
}

/// BER sweep of the full pipeline: per trial a channel draw, the sensing
/// stage (unless CSI is perfect), then `frames_per_trial` data frames per
/// SNR point detected with the true or estimated channel.
pub fn run_sensing_then_comm(spec: &ExperimentSpec) -> Result<SweepResult> {
    let ctx = Context::new(spec)?;
    let points = spec.snr_grid_db.len();
    let mut tallies = vec![Tally::default(); points];
    let mut active = vec![true; points];
    let mut next = 0u64;
    while (next as usize) < spec.trials && active.iter().any(|&a| a) {
        let end = (next + TRIAL_BATCH as u64).min(spec.trials as u64);
        let outcomes: Vec<Result<Vec<Option<Tally>>>> =
            (next..end).into_par_iter().map(|t| run_trial(&ctx, t, &active)).collect();
        for outcome in outcomes {
            for (tally, o) in tallies.iter_mut().zip(outcome?) {
                if let Some(o) = o {
                    tally.add(&o);
                }
            }
        }
        for (a, t) in active.iter_mut().zip(&tallies) {
            if t.errors >= spec.min_bit_errors && t.bits >= spec.min_bits {
                *a = false;
            }
        }
        next = end;
    }

    let hash = spec.config_hash();
    let mut result = SweepResult::default();
    for (&snr_db, t) in spec.snr_grid_db.iter().zip(&tallies) {
        result.rows.push(SweepRow {
            scheme: spec.scheme.to_string(),
            detector: detector_label(spec),
            csi: spec.csi.to_string(),
            snr_db,
            trials_run: t.trials,
            bits: t.bits,
            bit_errors: t.errors,
            ber: SweepRow::ber_of(t.errors, t.bits),
            nmse_db: (t.nmse_count > 0).then(|| db(t.nmse_sum / t.nmse_count as f64)),
            wall_time_s: t.time_s,
            seed: spec.seed,
            config_hash: hash.clone(),
        });
        if t.not_converged > 0 || t.low_confidence > 0 {
            result.notes.push(format!(
                "{} at {snr_db} dB: {} of {} estimates did not converge, {} flagged low confidence",
                spec.scheme, t.not_converged, t.nmse_count, t.low_confidence
            ));
        }
    }
    result.sort();
    Ok(result)
}

pub fn run_ber_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    run_sensing_then_comm(spec)
}

/// Runs the same spec for each scheme after checking resource parity.
pub fn run_comparison(spec: &ExperimentSpec, schemes: &[Scheme]) -> Result<SweepResult> {
    let budgets = assert_resource_parity(schemes, &spec.frame, spec.ofdm_cp)?;
    let mut all = SweepResult::default();
    for (scheme, budget) in budgets {
        let mut s = spec.clone();
        s.scheme = scheme;
        all.extend(run_sensing_then_comm(&s)?);
        all.notes.push(format!(
            "{scheme}: {} symbols, {:e} Hz, {:e} s data, {:e} s prefix",
            budget.symbols, budget.bandwidth_hz, budget.data_duration_s, budget.overhead_s
        ));
    }
    all.sort();
    Ok(all)
}

/// NMSE of the alternating estimator (and the exhaustive search when
/// enabled and small enough) per SNR point. The sensing stage runs at the
/// configured level for ODDM and OTFS.
pub fn run_nmse_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    let ctx = Context::new(spec)?;
    let hash = spec.config_hash();
    let mut result = SweepResult::default();
    let mut exhaustive_ok = spec.estimator.exhaustive;
    for (point, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        let per_trial: Vec<Result<(f64, Option<f64>, f64, f64, bool)>> = (0..spec.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let chan = draw_channel(spec, trial)?;
                let scheme = if spec.scheme == Scheme::Ofdm { Scheme::Oddm } else { spec.scheme };
                let (y, s, est) = ctx.sense(scheme, &chan, trial, snr_db, point as u64 + 1)?;
                let t0 = Instant::now();
                let alt = estimate_channel(&y, &s, &est, ctx.cfg)?;
                let alt_nmse = nmse_linear(&alt, &chan, ctx.cfg)?;
                let t_alt = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let ml = if exhaustive_ok {
                    match mle_exhaustive(&y, &s, &est, ctx.cfg) {
                        Ok(ml) => Some(nmse_linear(&ml, &chan, ctx.cfg)?),
                        Err(Error::SearchTooLarge { .. }) => None,
                        Err(e) => return Err(e),
                    }
                } else {
                    None
                };
                Ok((alt_nmse, ml, t_alt, t1.elapsed().as_secs_f64(), alt.converged))
            })
            .collect();
        let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
        let n = per_trial.len() as u64;
        let alt_mean = per_trial.iter().map(|r| r.0).sum::<f64>() / n as f64;
        let not_converged = per_trial.iter().filter(|r| !r.4).count();
        result.rows.push(SweepRow {
            scheme: spec.scheme.to_string(),
            detector: "alternating".into(),
            csi: Csi::Estimated.to_string(),
            snr_db,
            trials_run: n,
            bits: 0,
            bit_errors: 0,
            ber: 0.0,
            nmse_db: Some(db(alt_mean)),
            wall_time_s: per_trial.iter().map(|r| r.2).sum(),
            seed: spec.seed,
            config_hash: hash.clone(),
        });
        if not_converged > 0 {
            result
                .notes
                .push(format!("{snr_db} dB: {not_converged} of {n} alternating estimates hit the iteration cap"));
        }
        if per_trial.iter().all(|r| r.1.is_some()) && exhaustive_ok {
            let ml_mean = per_trial.iter().map(|r| r.1.unwrap()).sum::<f64>() / n as f64;
            result.rows.push(SweepRow {
                scheme: spec.scheme.to_string(),
                detector: "exhaustive".into(),
                csi: Csi::Estimated.to_string(),
                snr_db,
                trials_run: n,
                bits: 0,
                bit_errors: 0,
                ber: 0.0,
                nmse_db: Some(db(ml_mean)),
                wall_time_s: per_trial.iter().map(|r| r.3).sum(),
                seed: spec.seed,
                config_hash: hash.clone(),
            });
        } else if exhaustive_ok {
            exhaustive_ok = false;
            result.notes.push("exhaustive search exceeds its size cap; skipped".into());
        }
    }
    result.sort();
    Ok(result)
}

/// One sensing-stage run, as printed by the `estimate` command.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub truth: ChannelRealization,
    pub estimate: EstimationResult,
    pub nmse_db: f64,
}

pub fn estimate_once(spec: &ExperimentSpec, trial: u64, snr_db: f64) -> Result<EstimateReport> {
    let ctx = Context::new(spec)?;
    let truth = draw_channel(spec, trial)?;
    let scheme = if spec.scheme == Scheme::Ofdm { Scheme::Oddm } else { spec.scheme };
    let (y, s, est) = ctx.sense(scheme, &truth, trial, snr_db, 0)?;
    let mut estimate = estimate_channel(&y, &s, &est, ctx.cfg)?;
    let nmse_db = db(nmse_linear(&estimate, &truth, ctx.cfg)?);
    estimate.nmse_vs_truth = Some(nmse_db);
    Ok(EstimateReport { truth, estimate, nmse_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::PathCount;

    fn small_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.apply_text(
            "frame.M = 16\nframe.N = 8\nframe.Q = 4\nframe.oversampling = 4\nframe.cyclic_prefix = 4\n\
             channel.model = random\nchannel.paths = 2\nchannel.max_delay = 3\nchannel.max_doppler = 2\n\
             sim.snr_db = 10,20\nsim.trials = 6\nsim.frames_per_trial = 2\nsim.seed = 5\n",
        )
        .unwrap();
        spec.validate().unwrap();
        spec
    }

    #[test]
    fn noiseless_perfect_csi_is_error_free() {
        let mut spec = small_spec();
        spec.snr_grid_db = vec![200.0];
        for scheme in [Scheme::Oddm, Scheme::Otfs] {
            spec.scheme = scheme;
            let r = run_ber_sweep(&spec).unwrap();
            assert_eq!(r.rows[0].bit_errors, 0, "{scheme}");
            assert_eq!(r.rows[0].bits, 6 * 2 * 256);
        }
    }

    #[test]
    fn reproducible_without_timing() {
        let mut spec = small_spec();
        spec.csi = Csi::Estimated;
        let a = run_ber_sweep(&spec).unwrap();
        let b = run_ber_sweep(&spec).unwrap();
        assert_eq!(a.to_csv_string_without_timing().unwrap(), b.to_csv_string_without_timing().unwrap());
        assert!(a.rows.iter().all(|r| r.nmse_db.is_some()));
        assert!(a.rows.iter().all(|r| r.ber == r.bit_errors as f64 / r.bits as f64));
    }

    #[test]
    fn early_stop_counts_whole_trials() {
        let mut spec = small_spec();
        spec.snr_grid_db = vec![-5.0];
        spec.trials = 100;
        spec.min_bit_errors = 10;
        let r = run_ber_sweep(&spec).unwrap();
        assert_eq!(r.rows[0].trials_run, TRIAL_BATCH as u64);
        assert_eq!(r.rows[0].bits, r.rows[0].trials_run * 2 * 256);
    }

    #[test]
    fn channels_are_paired_across_schemes() {
        let spec = small_spec();
        let mut other = spec.clone();
        other.scheme = Scheme::Otfs;
        assert_eq!(draw_channel(&spec, 3).unwrap(), draw_channel(&other, 3).unwrap());
    }

    #[test]
    fn short_prefix_is_reported() {
        let mut spec = small_spec();
        spec.frame.cyclic_prefix = 0;
        spec.snr_grid_db = vec![10.0];
        // some trial draws a non-zero delay
        assert!(matches!(run_ber_sweep(&spec), Err(Error::CyclicPrefix { .. })));
    }

    #[test]
    fn comparison_includes_all_schemes() {
        let mut spec = small_spec();
        spec.snr_grid_db = vec![15.0];
        spec.trials = 2;
        let r = run_comparison(&spec, &Scheme::ALL).unwrap();
        let names: Vec<&str> = r.rows.iter().map(|r| r.scheme.as_str()).collect();
        assert_eq!(names, vec!["oddm", "ofdm", "otfs"]);
    }

    #[test]
    fn nmse_sweep_reports_both_estimators() {
        let mut spec = small_spec();
        spec.level = Level::Matrix;
        spec.estimator.paths = PathCount::Fixed(2);
        spec.estimator.max_delay = Some(3);
        spec.estimator.max_doppler = Some(2);
        spec.trials = 4;
        let r = run_nmse_sweep(&spec).unwrap();
        assert_eq!(r.rows.len(), 4);
        for row in &r.rows {
            assert!(row.nmse_db.unwrap() < 0.0);
        }
    }

    #[test]
    fn estimate_once_recovers_noiseless_channel() {
        let mut spec = small_spec();
        spec.level = Level::Matrix;
        let rep = estimate_once(&spec, 0, 300.0).unwrap();
        assert_eq!(rep.nmse_db, NMSE_FLOOR_DB);
        assert_eq!(rep.estimate.positions().len(), 2);
    }
}
