//! Delay-Doppler effective channel matrix.
//!
//! `H` is an `M x M` arrangement of `N x N` blocks. Block `(m, m')` is
//! `A_{m-m'}^m` when `0 <= m - m' < L` and `A_{m-m'+M}^m D` when the delay
//! wraps past the start of the frame, with
//!
//! ```text
//! A_l^m = sum_{k=-L1}^{L1} G[k + L1][l] exp(j 2 pi k (m - l) / (M N)) C^k
//! ```
//!
//! `C` the forward cyclic shift and `D = diag(exp(-j 2 pi n / N))`. For an
//! integer-grid channel every per-path matrix `H_p` is a phase-decorated
//! permutation, so `H` has at most `P` non-zeros per row.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::grid::FrameConfig;
use crate::sparse::CsrMatrix;

/// `N x N` forward cyclic shift, `(C x)[n] = x[(n - 1) mod N]`.
pub fn cyclic_permutation(n: usize) -> CsrMatrix {
    cyclic_power(n, 1)
}

/// `C^k`; negative powers are powers of `C^T`.
pub fn cyclic_power(n: usize, k: i64) -> CsrMatrix {
    let one = Complex64::new(1.0, 0.0);
    CsrMatrix::from_triplets(
        n,
        n,
        (0..n)
            .map(|r| (r, (r as i64 - k).rem_euclid(n as i64) as usize, one))
            .collect(),
    )
}

/// `D = diag(1, e^{-j 2 pi / N}, ..., e^{-j 2 pi (N-1) / N})`.
pub fn phase_rotation(n: usize) -> CsrMatrix {
    CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, rotation(i, n))).collect())
}

fn rotation(i: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * i as f64 / n as f64)
}

/// Block `A_l^m` from the delay-Doppler gain matrix `G` (`2 L1 + 1` rows, `L` columns).
pub fn build_block(g: &[Vec<Complex64>], l: usize, m: usize, cfg: &FrameConfig) -> Result<CsrMatrix> {
    let rows = g.len();
    if rows % 2 == 0 {
        return Err(Error::Index(format!("G must have an odd row count, got {rows}")));
    }
    let span = g.first().map_or(0, Vec::len);
    if l >= span {
        return Err(Error::Index(format!("delay column {l} outside L = {span}")));
    }
    if m >= cfg.m {
        return Err(Error::Index(format!("block row {m} outside M = {}", cfg.m)));
    }
    let l1 = (rows / 2) as i64;
    let n = cfg.n;
    let mn = cfg.grid_len() as f64;
    let mut triplets = Vec::new();
    for (row, gains) in g.iter().enumerate() {
        let gain = gains[l];
        if gain == Complex64::new(0.0, 0.0) {
            continue;
        }
        let k = row as i64 - l1;
        let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * (m as f64 - l as f64) / mn);
        let coef = gain * phase;
        for r in 0..n {
            triplets.push((r, (r as i64 - k).rem_euclid(n as i64) as usize, coef));
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, triplets))
}

fn assemble_from_g(g: &[Vec<Complex64>], cfg: &FrameConfig) -> Result<CsrMatrix> {
    let span = g.first().map_or(0, Vec::len);
    if span > cfg.m {
        return Err(Error::Config(format!("delay span {span} exceeds M = {}", cfg.m)));
    }
    if g.len() / 2 > cfg.n / 2 {
        return Err(Error::Config(format!(
            "Doppler span {} exceeds N / 2 = {}",
            g.len() / 2,
            cfg.n / 2
        )));
    }
    let (m_bins, n) = (cfg.m, cfg.n);
    let active: Vec<usize> = (0..span).filter(|&l| g.iter().any(|row| row[l] != Complex64::new(0.0, 0.0))).collect();
    let mut triplets = Vec::new();
    for m in 0..m_bins {
        for &l in &active {
            let block = build_block(g, l, m, cfg)?;
            let (col_block, wrap) = if m >= l { (m - l, false) } else { (m + m_bins - l, true) };
            for (r, c, v) in block.triplets() {
                let v = if wrap { v * rotation(c, n) } else { v };
                triplets.push((m * n + r, col_block * n + c, v));
            }
        }
    }
    let mn = cfg.grid_len();
    Ok(CsrMatrix::from_triplets(mn, mn, triplets))
}

/// Effective channel `H` with its per-path decomposition `H = sum_p h_p H_p`.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub h: CsrMatrix,
    pub h_adj: CsrMatrix,
    /// `(path index, H_p)` in the order of the realization's paths.
    pub per_path: Vec<(usize, CsrMatrix)>,
    pub gains: Vec<Complex64>,
    pub m: usize,
    pub n: usize,
}

impl EffectiveChannel {
    /// Wraps an already assembled matrix and its decomposition.
    pub fn from_parts(h: CsrMatrix, per_path: Vec<(usize, CsrMatrix)>, gains: Vec<Complex64>, cfg: &FrameConfig) -> Self {
        let h_adj = h.adjoint();
        EffectiveChannel {
            h,
            h_adj,
            per_path,
            gains,
            m: cfg.m,
            n: cfg.n,
        }
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn apply(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        self.h.matvec(s)
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.h_adj.matvec(y)
    }

    /// `max |H - sum_p h_p H_p|`.
    pub fn decomposition_error(&self) -> f64 {
        let mut acc = CsrMatrix::zeros(self.dim(), self.dim());
        for ((_, hp), g) in self.per_path.iter().zip(&self.gains) {
            acc = acc.add_scaled(hp, *g);
        }
        self.h.max_abs_diff(&acc)
    }
}

/// `H_p` for a unit-gain path at grid point `(l, k)`.
pub fn path_coefficient_matrix(l: usize, k: i64, cfg: &FrameConfig) -> Result<CsrMatrix> {
    if l >= cfg.m || k < cfg.min_doppler_index() || k > cfg.max_doppler_index() {
        return Err(Error::Index(format!("({l}, {k}) is not on the M = {}, N = {} grid", cfg.m, cfg.n)));
    }
    let l1 = k.unsigned_abs() as usize;
    let mut g = vec![vec![Complex64::new(0.0, 0.0); l + 1]; 2 * l1 + 1];
    g[(k + l1 as i64) as usize][l] = Complex64::new(1.0, 0.0);
    assemble_from_g(&g, cfg)
}

pub fn assemble_h(chan: &ChannelRealization, cfg: &FrameConfig) -> Result<EffectiveChannel> {
    let h = assemble_from_g(&chan.dd_matrix(), cfg)?;
    let mut per_path = Vec::with_capacity(chan.paths.len());
    for (i, p) in chan.paths.iter().enumerate() {
        per_path.push((i, path_coefficient_matrix(p.l, p.k, cfg)?));
    }
    let gains = chan.paths.iter().map(|p| p.h).collect();
    Ok(EffectiveChannel::from_parts(h, per_path, gains, cfg))
}

pub fn apply_effective_channel(eff: &EffectiveChannel, s: &[Complex64]) -> Result<Vec<Complex64>> {
    eff.apply(s)
}

/// Matrix-free application of a single unit-gain grid path `H_{(l,k)}`.
#[derive(Debug, Clone)]
pub struct PathOperator {
    pub l: usize,
    pub k: i64,
    m: usize,
    n: usize,
    /// `exp(j 2 pi k (m - l) / (M N))` per output delay row.
    row_phase: Vec<Complex64>,
}

impl PathOperator {
    pub fn new(l: usize, k: i64, cfg: &FrameConfig) -> Self {
        let mn = cfg.grid_len() as f64;
        let row_phase = (0..cfg.m)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * (m as f64 - l as f64) / mn))
            .collect();
        PathOperator {
            l,
            k,
            m: cfg.m,
            n: cfg.n,
            row_phase,
        }
    }

    /// `out = H_{(l,k)} s`.
    pub fn apply_into(&self, s: &[Complex64], out: &mut [Complex64]) {
        let (m_bins, n) = (self.m, self.n);
        for m in 0..m_bins {
            let (src_m, wrap) = if m >= self.l { (m - self.l, false) } else { (m + m_bins - self.l, true) };
            let ph = self.row_phase[m];
            for nn in 0..n {
                let src_n = (nn as i64 - self.k).rem_euclid(n as i64) as usize;
                let mut v = s[src_m * n + src_n] * ph;
                if wrap {
                    v *= rotation(src_n, n);
                }
                out[m * n + nn] = v;
            }
        }
    }

    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
        self.apply_into(s, &mut out);
        out
    }
}
