//! Symbol detection: OAMP with a de-correlated linear estimator and a
//! divergence-free non-linear estimator, plus one-shot LMMSE.

mod le;
mod nle;

pub use le::{LeKernel, LeMode, Solve, TraceMode};
pub use nle::{oamp_nle, posterior, DenoiserForm, NleOutput};

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct OampConfig {
    pub max_iters: usize,
    pub var_floor: f64,
    /// Weight of the new estimate, in `(0, 1]`.
    pub damping: f64,
    /// Stop once `|v_nle(t+1) - v_nle(t)|` falls below this.
    pub stop_tol: f64,
    pub le_mode: LeMode,
    pub denoiser: DenoiserForm,
}

impl Default for OampConfig {
    fn default() -> Self {
        OampConfig {
            max_iters: 20,
            var_floor: 1e-10,
            damping: 1.0,
            stop_tol: 1e-6,
            le_mode: LeMode::Exact,
            denoiser: DenoiserForm::Gaussian,
        }
    }
}

impl OampConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.var_floor > 0.0) || !(self.stop_tol > 0.0) {
            return Err(Error::Config("variance floor and stop tolerance must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping {} outside (0, 1]", self.damping)));
        }
        if let LeMode::MatrixFree { tol, max_iters, .. } = &self.le_mode {
            if !(*tol > 0.0) || *max_iters == 0 {
                return Err(Error::Config("matrix-free LE needs tol > 0 and max_iters >= 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub soft_symbols: Vec<Complex64>,
    pub hard_symbols: Vec<Complex64>,
    pub hard_bits: Vec<u8>,
    /// `(v_le, v_nle)` after each iteration.
    pub variance_trace: Vec<(f64, f64)>,
    pub iterations_used: usize,
    /// Largest relative residual of any inner solve.
    pub max_solve_residual: f64,
    /// Some NLE step was not contracting and passed its posterior mean through.
    pub nle_clamped: bool,
}

#[derive(Debug, Clone)]
pub struct LeOutput {
    pub r: Vec<Complex64>,
    pub v_le: f64,
    pub epsilon: f64,
    pub residual: f64,
}

/// `r = s + (1/eps) H^H (H H^H + xi I)^-1 (y - H s)` with `xi = sigma^2 / v_nle`
/// and `v_le = v_nle (1/eps - 1)`.
pub fn oamp_le(s: &[Complex64], y: &[Complex64], kernel: &LeKernel, v_nle: f64, sigma_sq: f64, var_floor: f64) -> Result<LeOutput> {
    let n = kernel.dim();
    if s.len() != n || y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if s.len() != n { s.len() } else { y.len() },
        });
    }
    let v_nle = v_nle.max(var_floor);
    let xi = sigma_sq / v_nle;
    let hs = kernel.apply_h(s);
    let b: Vec<Complex64> = y.iter().zip(&hs).map(|(a, c)| a - c).collect();
    let sol = kernel.solve(&b, xi)?;
    let epsilon = kernel.epsilon(xi)?;
    if !(epsilon > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let g = kernel.apply_h_adj(&sol.z);
    let r = s.iter().zip(&g).map(|(si, gi)| si + gi / epsilon).collect();
    Ok(LeOutput {
        r,
        v_le: (v_nle * (1.0 / epsilon - 1.0)).max(var_floor),
        epsilon,
        residual: sol.residual,
    })
}

fn finish(soft: Vec<Complex64>, constellation: &Constellation) -> (Vec<Complex64>, Vec<u8>) {
    let hard: Vec<Complex64> = soft.iter().map(|z| constellation.hard_decision(*z)).collect();
    let bits = constellation.demap(&hard);
    (hard, bits)
}

/// OAMP on a prepared kernel; reuse the kernel across frames of one channel.
pub fn oamp_detect_with(
    y: &[Complex64],
    kernel: &LeKernel,
    sigma_sq: f64,
    config: &OampConfig,
    constellation: &Constellation,
) -> Result<DetectionResult> {
    config.validate()?;
    if !(sigma_sq > 0.0) {
        return Err(Error::Config(format!("noise variance {sigma_sq} must be positive")));
    }
    let n = kernel.dim();
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    let mut v_nle = 1.0;
    let mut trace = Vec::new();
    let mut soft = s.clone();
    let mut max_res: f64 = 0.0;
    let mut clamped = false;
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        iterations += 1;
        let le = oamp_le(&s, y, kernel, v_nle, sigma_sq, config.var_floor)?;
        max_res = max_res.max(le.residual);
        let out = oamp_nle(&le.r, le.v_le, v_nle, constellation, config.denoiser, config.var_floor);
        clamped |= !out.contracting;
        soft = out.posterior_mean;
        trace.push((le.v_le, out.v_nle_next));
        let beta = config.damping;
        let v_new = beta * out.v_nle_next + (1.0 - beta) * v_nle;
        if beta == 1.0 {
            s = out.s_next;
        } else {
            for (a, b) in s.iter_mut().zip(&out.s_next) {
                *a = beta * b + (1.0 - beta) * *a;
            }
        }
        let delta = (v_new - v_nle).abs();
        v_nle = v_new.max(config.var_floor);
        if delta < config.stop_tol {
            break;
        }
    }
    let (hard, bits) = finish(soft.clone(), constellation);
    Ok(DetectionResult {
        soft_symbols: soft,
        hard_symbols: hard,
        hard_bits: bits,
        variance_trace: trace,
        iterations_used: iterations,
        max_solve_residual: max_res,
        nle_clamped: clamped,
    })
}

pub fn oamp_detect(
    y: &[Complex64],
    h: &CsrMatrix,
    sigma_sq: f64,
    config: &OampConfig,
    constellation: &Constellation,
) -> Result<DetectionResult> {
    let kernel = LeKernel::new(h, &config.le_mode)?;
    oamp_detect_with(y, &kernel, sigma_sq, config, constellation)
}

/// `s = H^H (H H^H + sigma^2 I)^-1 y`, then hard decisions.
pub fn lmmse_detect_with(y: &[Complex64], kernel: &LeKernel, sigma_sq: f64, constellation: &Constellation) -> Result<DetectionResult> {
    if y.len() != kernel.dim() {
        return Err(Error::Dimension {
            expected: kernel.dim(),
            got: y.len(),
        });
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::Config(format!("noise variance {sigma_sq} must be positive")));
    }
    let sol = kernel.solve(y, sigma_sq)?;
    let soft = kernel.apply_h_adj(&sol.z);
    let (hard, bits) = finish(soft.clone(), constellation);
    Ok(DetectionResult {
        soft_symbols: soft,
        hard_symbols: hard,
        hard_bits: bits,
        variance_trace: Vec::new(),
        iterations_used: 1,
        max_solve_residual: sol.residual,
        nle_clamped: false,
    })
}

pub fn lmmse_detect(y: &[Complex64], h: &CsrMatrix, sigma_sq: f64, mode: &LeMode, constellation: &Constellation) -> Result<DetectionResult> {
    let kernel = LeKernel::new(h, mode)?;
    lmmse_detect_with(y, &kernel, sigma_sq, constellation)
}
