//! Sensing-stage channel estimation on the integer delay-Doppler grid.
//!
//! Model: `y = sum_p h_p H_p s + w` with `s` the known sensing frame. For
//! fixed grid positions the gains solve the `P x P` normal equations
//! `sum_p' h_p' (H_p s)^H (H_p' s) = (H_p s)^H y`. The alternating estimator
//! updates one path's grid position at a time against the other paths'
//! current contribution, then re-solves all gains jointly, until the summed
//! parameter change drops below `epsilon`.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{ChannelRealization, PathParams};
use crate::effchan::{assemble_h, PathOperator};
use crate::error::{Error, Result};
use crate::grid::FrameConfig;
use crate::linalg::{dot, norm_sq, solve_hermitian};

/// Per-path statistic maximized in the position update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveForm {
    /// `Q_p = |a|^2 / d`, `I_p = (2 Re(a* b) - |b|^2) / d`, so that `Q_p - I_p`
    /// is the energy captured by path `p` from the residual `y - sum_{p' != p}`.
    /// Each position update is then an exact block-coordinate step.
    ConditionalMl,
    /// `Q_p = |a| / d`, `I_p = Re(b a*) / d`, the first-order form.
    Literal,
}

#[derive(Debug, Clone)]
pub struct EstimationConfig {
    /// Number of paths to estimate.
    pub paths: usize,
    pub delay_range: RangeInclusive<usize>,
    pub doppler_range: RangeInclusive<i64>,
    pub max_iters: usize,
    /// Threshold on `sum_p |dh_p| + |dl_p| + |dk_p|` (grid units for positions).
    pub epsilon: f64,
    pub objective: ObjectiveForm,
}

impl EstimationConfig {
    /// Searches the whole grid.
    pub fn full_grid(cfg: &FrameConfig, paths: usize) -> Self {
        EstimationConfig {
            paths,
            delay_range: 0..=cfg.m - 1,
            doppler_range: cfg.min_doppler_index()..=cfg.max_doppler_index(),
            max_iters: 20,
            epsilon: 1e-4,
            objective: ObjectiveForm::ConditionalMl,
        }
    }

    pub fn with_windows(mut self, delay: RangeInclusive<usize>, doppler: RangeInclusive<i64>) -> Self {
        self.delay_range = delay;
        self.doppler_range = doppler;
        self
    }

    fn validate(&self, cfg: &FrameConfig) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("path count must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.delay_range.is_empty() || *self.delay_range.end() >= cfg.m {
            return Err(Error::Config(format!(
                "delay window {:?} must lie inside [0, {})",
                self.delay_range, cfg.m
            )));
        }
        if self.doppler_range.is_empty()
            || *self.doppler_range.start() < cfg.min_doppler_index()
            || *self.doppler_range.end() > cfg.max_doppler_index()
        {
            return Err(Error::Config(format!(
                "Doppler window {:?} must lie inside [{}, {}]",
                self.doppler_range,
                cfg.min_doppler_index(),
                cfg.max_doppler_index()
            )));
        }
        Ok(())
    }

    /// Candidate grid points in tie-break order: smallest delay, then
    /// smallest `|k|`, negative Doppler first.
    pub fn hypotheses(&self) -> Vec<(usize, i64)> {
        let mut ks: Vec<i64> = self.doppler_range.clone().collect();
        ks.sort_by_key(|&k| (k.abs(), k >= 0));
        self.delay_range
            .clone()
            .flat_map(|l| ks.iter().map(move |&k| (l, k)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub paths: Vec<PathParams>,
    pub iterations: usize,
    pub converged: bool,
    /// Some path's statistic is below five times the median grid statistic.
    pub low_confidence: bool,
    /// A gain solve hit an ill-conditioned Gram matrix.
    pub singular_gram: bool,
    /// Sum over paths of `Q_p - I_p` after each outer iteration.
    pub objective_trace: Vec<f64>,
    /// `||y - sum_p h_p H_p s||^2` after each outer iteration.
    pub residual_trace: Vec<f64>,
    pub nmse_vs_truth: Option<f64>,
}

impl EstimationResult {
    pub fn residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn to_channel(&self, cfg: &FrameConfig) -> Result<ChannelRealization> {
        ChannelRealization::from_paths(self.paths.clone(), cfg)
    }

    /// Same plain-text record as [`ChannelRealization::to_record`].
    pub fn to_record(&self) -> String {
        ChannelRealization {
            paths: self.paths.clone(),
        }
        .to_record()
    }

    pub fn positions(&self) -> Vec<(usize, i64)> {
        self.paths.iter().map(|p| (p.l, p.k)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GainSolution {
    pub gains: Vec<Complex64>,
    pub singular: bool,
    pub condition: f64,
}

/// Joint gain solve for fixed path responses `u_p = H_p s`.
pub fn solve_gains(y: &[Complex64], responses: &[Vec<Complex64>]) -> GainSolution {
    let p = responses.len();
    let gram: Vec<Vec<Complex64>> = (0..p)
        .map(|i| (0..p).map(|j| dot(&responses[i], &responses[j])).collect())
        .collect();
    let rhs: Vec<Complex64> = responses.iter().map(|u| dot(u, y)).collect();
    let sol = solve_hermitian(&gram, &rhs);
    GainSolution {
        gains: sol.x,
        singular: sol.singular,
        condition: sol.condition,
    }
}

/// Gain solve with the per-path matrices `H_p` applied to `s`.
pub fn solve_gains_for(
    y: &[Complex64],
    s_known: &[Complex64],
    positions: &[(usize, i64)],
    cfg: &FrameConfig,
) -> Result<GainSolution> {
    check_len(y, cfg)?;
    check_len(s_known, cfg)?;
    let responses: Vec<Vec<Complex64>> = positions
        .iter()
        .map(|&(l, k)| PathOperator::new(l, k, cfg).apply(s_known))
        .collect();
    Ok(solve_gains(y, &responses))
}

fn check_len(v: &[Complex64], cfg: &FrameConfig) -> Result<()> {
    if v.len() != cfg.grid_len() {
        return Err(Error::Dimension {
            expected: cfg.grid_len(),
            got: v.len(),
        });
    }
    Ok(())
}

fn statistic(form: ObjectiveForm, a: Complex64, b: Complex64, den: f64) -> (f64, f64) {
    if den == 0.0 {
        return (0.0, 0.0);
    }
    match form {
        ObjectiveForm::ConditionalMl => (
            a.norm_sqr() / den,
            (2.0 * (a.conj() * b).re - b.norm_sqr()) / den,
        ),
        ObjectiveForm::Literal => (a.norm() / den, (b * a.conj()).re / den),
    }
}

/// `Q_p - I_p` for path `p` at its hypothesised position, others held fixed.
pub fn path_objective(
    p: usize,
    y: &[Complex64],
    s_known: &[Complex64],
    positions: &[(usize, i64)],
    gains: &[Complex64],
    cfg: &FrameConfig,
    form: ObjectiveForm,
) -> Result<f64> {
    check_len(y, cfg)?;
    check_len(s_known, cfg)?;
    if p >= positions.len() || gains.len() != positions.len() {
        return Err(Error::Index(format!(
            "path {p} with {} positions and {} gains",
            positions.len(),
            gains.len()
        )));
    }
    let responses: Vec<Vec<Complex64>> = positions
        .iter()
        .map(|&(l, k)| PathOperator::new(l, k, cfg).apply(s_known))
        .collect();
    let up = &responses[p];
    let b: Complex64 = (0..positions.len())
        .filter(|&q| q != p)
        .map(|q| gains[q] * dot(up, &responses[q]))
        .sum();
    let (qp, ip) = statistic(form, dot(up, y), b, norm_sq(up));
    Ok(qp - ip)
}

fn residual_energy(y: &[Complex64], responses: &[Vec<Complex64>], gains: &[Complex64]) -> f64 {
    let mut r = y.to_vec();
    for (u, h) in responses.iter().zip(gains) {
        for (ri, ui) in r.iter_mut().zip(u) {
            *ri -= h * ui;
        }
    }
    norm_sq(&r)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Scan {
    hypotheses: Vec<(usize, i64)>,
    operators: Vec<PathOperator>,
}

impl Scan {
    fn new(est: &EstimationConfig, cfg: &FrameConfig) -> Self {
        let hypotheses = est.hypotheses();
        let operators = hypotheses.iter().map(|&(l, k)| PathOperator::new(l, k, cfg)).collect();
        Scan { hypotheses, operators }
    }

    /// `(a, b, d)` for every hypothesis: `a = u^H y`, `b = u^H w`, `d = ||u||^2`.
    fn correlate(&self, s: &[Complex64], y: &[Complex64], w: Option<&[Complex64]>) -> Vec<(Complex64, Complex64, f64)> {
        self.operators
            .par_iter()
            .map_init(
                || vec![Complex64::new(0.0, 0.0); s.len()],
                |u, op| {
                    op.apply_into(s, u);
                    let b = w.map_or(Complex64::new(0.0, 0.0), |w| dot(u, w));
                    (dot(u, y), b, norm_sq(u))
                },
            )
            .collect()
    }
}

/// Alternating position / gain estimation.
pub fn estimate_channel(
    y: &[Complex64],
    s_known: &[Complex64],
    est: &EstimationConfig,
    cfg: &FrameConfig,
) -> Result<EstimationResult> {
    check_len(y, cfg)?;
    check_len(s_known, cfg)?;
    est.validate(cfg)?;
    let scan = Scan::new(est, cfg);
    if est.paths > scan.hypotheses.len() {
        return Err(Error::Config(format!(
            "{} paths do not fit in {} grid hypotheses",
            est.paths,
            scan.hypotheses.len()
        )));
    }
    let np = est.paths;
    let zero = Complex64::new(0.0, 0.0);
    let mut pos: Vec<Option<usize>> = vec![None; np];
    let mut gains = vec![zero; np];
    let mut responses: Vec<Vec<Complex64>> = vec![vec![zero; y.len()]; np];
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut singular = false;
    let mut iterations = 0;
    let mut first_scan_median = None;
    let mut final_stats = vec![0.0; np];

    for _ in 0..est.max_iters {
        iterations += 1;
        let prev_pos = pos.clone();
        let prev_gains = gains.clone();
        let mut objective = 0.0;
        for p in 0..np {
            let mut w = vec![zero; y.len()];
            for q in (0..np).filter(|&q| q != p && pos[q].is_some()) {
                for (wi, ui) in w.iter_mut().zip(&responses[q]) {
                    *wi += gains[q] * ui;
                }
            }
            let stats = scan.correlate(s_known, y, Some(&w));
            if first_scan_median.is_none() {
                first_scan_median = Some(median(stats.iter().map(|(a, _, d)| a.norm() / d.sqrt().max(f64::MIN_POSITIVE)).collect()));
            }
            let mut best: Option<(usize, f64)> = None;
            for (h, &(a, b, d)) in stats.iter().enumerate() {
                let taken = (0..np).any(|q| q != p && pos[q] == Some(h));
                if taken {
                    continue;
                }
                let (qp, ip) = statistic(est.objective, a, b, d);
                let val = qp - ip;
                if best.is_none_or(|(_, v)| val > v) {
                    best = Some((h, val));
                }
            }
            let (h, val) = best.expect("at least one free hypothesis");
            let (a, b, d) = stats[h];
            objective += val;
            final_stats[p] = (a - b).norm() / d.sqrt();
            pos[p] = Some(h);
            scan.operators[h].apply_into(s_known, &mut responses[p]);
            gains[p] = if d > 0.0 { (a - b) / d } else { zero };
        }
        let sol = solve_gains(y, &responses);
        singular |= sol.singular;
        gains = sol.gains;
        objective_trace.push(objective);
        residual_trace.push(residual_energy(y, &responses, &gains));

        let mut delta = 0.0;
        for p in 0..np {
            match prev_pos[p] {
                None => delta = f64::INFINITY,
                Some(h0) => {
                    let (l0, k0) = scan.hypotheses[h0];
                    let (l1, k1) = scan.hypotheses[pos[p].unwrap()];
                    delta += (gains[p] - prev_gains[p]).norm()
                        + (l1 as f64 - l0 as f64).abs()
                        + (k1 - k0).abs() as f64;
                }
            }
        }
        if delta <= est.epsilon {
            converged = true;
            break;
        }
    }

    let threshold = 5.0 * first_scan_median.unwrap_or(0.0);
    let low_confidence = final_stats.iter().any(|&v| v < threshold);
    let paths = pos
        .iter()
        .zip(&gains)
        .map(|(h, g)| {
            let (l, k) = scan.hypotheses[h.unwrap()];
            PathParams::on_grid(*g, l, k, cfg)
        })
        .collect();
    Ok(EstimationResult {
        paths,
        iterations,
        converged,
        low_confidence,
        singular_gram: singular,
        objective_trace,
        residual_trace,
        nmse_vs_truth: None,
    })
}

/// Largest exhaustive search accepted by [`mle_exhaustive`].
pub const EXHAUSTIVE_CAP: u128 = 20_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Global minimizer of `||y - sum_p h_p H_p s||^2` over all sets of
/// `est.paths` distinct grid points, gains solved jointly per set.
pub fn mle_exhaustive(
    y: &[Complex64],
    s_known: &[Complex64],
    est: &EstimationConfig,
    cfg: &FrameConfig,
) -> Result<EstimationResult> {
    check_len(y, cfg)?;
    check_len(s_known, cfg)?;
    est.validate(cfg)?;
    let hyps = est.hypotheses();
    let np = est.paths;
    let size = binomial(hyps.len(), np);
    if size > EXHAUSTIVE_CAP || np > hyps.len() {
        return Err(Error::SearchTooLarge {
            size,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let responses: Vec<Vec<Complex64>> = hyps
        .iter()
        .map(|&(l, k)| PathOperator::new(l, k, cfg).apply(s_known))
        .collect();
    let corr: Vec<Complex64> = responses.iter().map(|u| dot(u, y)).collect();
    let nh = hyps.len();
    // Gram entries between every pair of hypotheses
    let gram: Vec<Vec<Complex64>> = (0..nh)
        .into_par_iter()
        .map(|i| (0..nh).map(|j| if j < i { Complex64::new(0.0, 0.0) } else { dot(&responses[i], &responses[j]) }).collect())
        .collect();
    let g = |i: usize, j: usize| if j >= i { gram[i][j] } else { gram[j][i].conj() };
    let y_energy = norm_sq(y);

    let mut idx: Vec<usize> = (0..np).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let sub: Vec<Vec<Complex64>> = idx.iter().map(|&i| idx.iter().map(|&j| g(i, j)).collect()).collect();
        let rhs: Vec<Complex64> = idx.iter().map(|&i| corr[i]).collect();
        let sol = solve_hermitian(&sub, &rhs);
        let explained: f64 = rhs.iter().zip(&sol.x).map(|(b, x)| (b.conj() * x).re).sum();
        let resid = y_energy - explained;
        if best.as_ref().is_none_or(|(_, r)| resid < *r) {
            best = Some((idx.clone(), resid));
        }
        // next combination in lexicographic order
        let mut i = np;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if idx[i] < nh - np + i {
                idx[i] += 1;
                for j in i + 1..np {
                    idx[j] = idx[j - 1] + 1;
                }
                i = usize::MAX;
                break;
            }
        }
        if i != usize::MAX {
            break;
        }
    }
    let (set, _) = best.expect("non-empty search");
    let chosen: Vec<Vec<Complex64>> = set.iter().map(|&i| responses[i].clone()).collect();
    let sol = solve_gains(y, &chosen);
    let residual = residual_energy(y, &chosen, &sol.gains);
    let paths = set
        .iter()
        .zip(&sol.gains)
        .map(|(&i, g)| PathParams::on_grid(*g, hyps[i].0, hyps[i].1, cfg))
        .collect();
    Ok(EstimationResult {
        paths,
        iterations: 1,
        converged: true,
        low_confidence: false,
        singular_gram: sol.singular,
        objective_trace: vec![y_energy - residual],
        residual_trace: vec![residual],
        nmse_vs_truth: None,
    })
}

/// Re-solves gains for the prior's grid positions, e.g. on a later frame of
/// the same epoch where delays and Dopplers are unchanged.
pub fn refresh_gains(
    y: &[Complex64],
    s_known: &[Complex64],
    prior: &EstimationResult,
    cfg: &FrameConfig,
) -> Result<EstimationResult> {
    let positions = prior.positions();
    check_len(y, cfg)?;
    check_len(s_known, cfg)?;
    let responses: Vec<Vec<Complex64>> = positions
        .iter()
        .map(|&(l, k)| PathOperator::new(l, k, cfg).apply(s_known))
        .collect();
    let sol = solve_gains(y, &responses);
    let residual = residual_energy(y, &responses, &sol.gains);
    let paths = positions
        .iter()
        .zip(&sol.gains)
        .map(|(&(l, k), g)| PathParams::on_grid(*g, l, k, cfg))
        .collect();
    Ok(EstimationResult {
        paths,
        iterations: 1,
        converged: true,
        low_confidence: prior.low_confidence,
        singular_gram: sol.singular,
        objective_trace: Vec::new(),
        residual_trace: vec![residual],
        nmse_vs_truth: prior.nmse_vs_truth,
    })
}

/// Floor reported for a perfect estimate.
pub const NMSE_FLOOR_DB: f64 = -100.0;

fn to_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        NMSE_FLOOR_DB
    } else {
        (10.0 * ratio.log10()).max(NMSE_FLOOR_DB)
    }
}

/// `||H_est - H||_F^2 / ||H||_F^2` in dB, on assembled effective matrices.
pub fn nmse(estimate: &EstimationResult, truth: &ChannelRealization, cfg: &FrameConfig) -> Result<f64> {
    Ok(to_db(nmse_linear(estimate, truth, cfg)?))
}

pub fn nmse_linear(estimate: &EstimationResult, truth: &ChannelRealization, cfg: &FrameConfig) -> Result<f64> {
    let h = assemble_h(truth, cfg)?.h;
    let reference = h.frobenius_sq();
    if reference == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let est = estimate.to_channel(cfg)?;
    let h_est = assemble_h(&est, cfg)?.h;
    let diff = h_est.add_scaled(&h, Complex64::new(-1.0, 0.0));
    Ok(diff.frobenius_sq() / reference)
}

/// Parameter-level diagnostics against a known channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterErrors {
    /// Every true grid point was recovered.
    pub exact_support: bool,
    /// `sum |h_est - h|^2 / sum |h|^2` with estimates matched by grid point
    /// (unmatched true paths count their full power).
    pub gain_nmse: f64,
    pub delay_mse: f64,
    pub doppler_mse: f64,
}

pub fn parameter_errors(estimate: &EstimationResult, truth: &ChannelRealization) -> ParameterErrors {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut exact = true;
    let mut dl = 0.0;
    let mut dk = 0.0;
    for t in &truth.paths {
        den += t.h.norm_sqr();
        match estimate.paths.iter().find(|e| e.l == t.l && e.k == t.k) {
            Some(e) => num += (e.h - t.h).norm_sqr(),
            None => {
                exact = false;
                num += t.h.norm_sqr();
            }
        }
        // nearest estimate in grid distance
        if let Some(e) = estimate
            .paths
            .iter()
            .min_by_key(|e| (e.l as i64 - t.l as i64).pow(2) + (e.k - t.k).pow(2))
        {
            dl += (e.l as f64 - t.l as f64).powi(2);
            dk += (e.k as f64 - t.k as f64).powi(2);
        }
    }
    let n = truth.paths.len().max(1) as f64;
    ParameterErrors {
        exact_support: exact,
        gain_nmse: if den > 0.0 { num / den } else { 0.0 },
        delay_mse: dl / n,
        doppler_mse: dk / n,
    }
}

/// Final residual for each assumed path count `1..=max_paths`.
pub fn model_order_sweep(
    y: &[Complex64],
    s_known: &[Complex64],
    est: &EstimationConfig,
    cfg: &FrameConfig,
    max_paths: usize,
) -> Result<Vec<(usize, f64)>> {
    (1..=max_paths)
        .map(|p| {
            let mut e = est.clone();
            e.paths = p;
            Ok((p, estimate_channel(y, s_known, &e, cfg)?.residual()))
        })
        .collect()
}
