//! Linear-estimator kernels: solves with `(H H^H + xi I)` and the
//! normalizer `eps(xi) = Tr(H^H (H H^H + xi I)^-1 H) / MN`.

use faer::{Col, Mat, Side};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};
use crate::rng::rng_from_seed;
use crate::sparse::CsrMatrix;

/// How the normalizer trace is obtained in matrix-free mode.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceMode {
    /// Hutchinson probes with unit-modulus entries; each probe's quadratic
    /// form is evaluated by Lanczos quadrature, so the probes are run once per
    /// channel and reused for every `xi`.
    Probes { count: usize, lanczos_steps: usize, seed: u64 },
    /// Exact trace through one solve per unit vector. Small grids only.
    Basis,
}

impl Default for TraceMode {
    fn default() -> Self {
        TraceMode::Probes {
            count: 32,
            lanczos_steps: 64,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeMode {
    /// Dense eigendecomposition of `H H^H`, cached per channel.
    Exact,
    /// Conjugate gradients on the sparse operator.
    MatrixFree { tol: f64, max_iters: usize, trace: TraceMode },
}

impl LeMode {
    pub fn matrix_free() -> Self {
        LeMode::MatrixFree {
            tol: 1e-8,
            max_iters: 5000,
            trace: TraceMode::default(),
        }
    }

    /// Exact below `threshold` grid cells, matrix-free otherwise.
    pub fn auto(dim: usize, threshold: usize) -> Self {
        if dim <= threshold {
            LeMode::Exact
        } else {
            Self::matrix_free()
        }
    }
}

/// Solution of `(H H^H + xi I) z = b`.
#[derive(Debug, Clone)]
pub struct Solve {
    pub z: Vec<Complex64>,
    /// `||b - (H H^H + xi I) z|| / ||b||`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct Quadrature {
    weight: f64,
    nodes: Vec<f64>,
    coefs: Vec<f64>,
}

#[derive(Debug)]
enum Backend {
    Exact { u: Mat<Complex64>, lambda: Vec<f64> },
    MatrixFree { tol: f64, max_iters: usize, trace: TraceMode, quad: Vec<Quadrature> },
}

/// Per-channel state shared by every LE call on that channel.
#[derive(Debug)]
pub struct LeKernel {
    h: CsrMatrix,
    h_adj: CsrMatrix,
    backend: Backend,
}

impl LeKernel {
    pub fn new(h: &CsrMatrix, mode: &LeMode) -> Result<Self> {
        if h.rows() != h.cols() {
            return Err(Error::Dimension {
                expected: h.rows(),
                got: h.cols(),
            });
        }
        let h_adj = h.adjoint();
        let backend = match mode {
            LeMode::Exact => {
                let n = h.rows();
                let mut dense = Mat::<Complex64>::zeros(n, n);
                for (r, c, v) in h.triplets() {
                    dense[(r, c)] = v;
                }
                let gram = &dense * dense.adjoint();
                let eig = gram
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Config(format!("eigendecomposition failed: {e:?}")))?;
                let s = eig.S().column_vector();
                let lambda = (0..n).map(|i| s[i].re.max(0.0)).collect();
                Backend::Exact {
                    u: eig.U().to_owned(),
                    lambda,
                }
            }
            LeMode::MatrixFree { tol, max_iters, trace } => {
                if !(*tol > 0.0) || *max_iters == 0 {
                    return Err(Error::Config("matrix-free LE needs tol > 0 and max_iters >= 1".into()));
                }
                let mut k = LeKernel {
                    h: h.clone(),
                    h_adj: h_adj.clone(),
                    backend: Backend::MatrixFree {
                        tol: *tol,
                        max_iters: *max_iters,
                        trace: trace.clone(),
                        quad: Vec::new(),
                    },
                };
                if let TraceMode::Probes {
                    count,
                    lanczos_steps,
                    seed,
                } = trace
                {
                    let quad = k.probe_quadratures(*count, *lanczos_steps, *seed)?;
                    if let Backend::MatrixFree { quad: q, .. } = &mut k.backend {
                        *q = quad;
                    }
                }
                return Ok(k);
            }
        };
        Ok(LeKernel {
            h: h.clone(),
            h_adj,
            backend,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    pub fn h(&self) -> &CsrMatrix {
        &self.h
    }

    pub fn apply_h(&self, s: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.h.matvec_into(s, &mut out);
        out
    }

    pub fn apply_h_adj(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.h_adj.matvec_into(y, &mut out);
        out
    }

    /// `(H H^H + xi I) x`.
    fn apply_gram(&self, x: &[Complex64], xi: f64, tmp: &mut [Complex64], out: &mut [Complex64]) {
        self.h_adj.matvec_into(x, tmp);
        self.h.matvec_into(tmp, out);
        for (o, v) in out.iter_mut().zip(x) {
            *o += xi * v;
        }
    }

    fn relative_residual(&self, b: &[Complex64], z: &[Complex64], xi: f64) -> f64 {
        let n = self.dim();
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        let mut az = vec![Complex64::new(0.0, 0.0); n];
        self.apply_gram(z, xi, &mut tmp, &mut az);
        let bn = norm_sq(b).sqrt();
        if bn == 0.0 {
            return norm_sq(&az).sqrt();
        }
        let r: f64 = b.iter().zip(&az).map(|(x, y)| (x - y).norm_sqr()).sum();
        r.sqrt() / bn
    }

    pub fn solve(&self, b: &[Complex64], xi: f64) -> Result<Solve> {
        if b.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: b.len(),
            });
        }
        match &self.backend {
            Backend::Exact { u, lambda } => {
                let bc = Col::<Complex64>::from_fn(b.len(), |i| b[i]);
                let mut t = u.adjoint() * &bc;
                for (i, lam) in lambda.iter().enumerate() {
                    t[i] /= lam + xi;
                }
                let zc = u * &t;
                let z: Vec<Complex64> = (0..b.len()).map(|i| zc[i]).collect();
                let residual = self.relative_residual(b, &z, xi);
                Ok(Solve { z, residual, iterations: 1 })
            }
            Backend::MatrixFree { tol, max_iters, .. } => self.conjugate_gradient(b, xi, *tol, *max_iters),
        }
    }

    fn conjugate_gradient(&self, b: &[Complex64], xi: f64, tol: f64, max_iters: usize) -> Result<Solve> {
        let n = self.dim();
        let zero = Complex64::new(0.0, 0.0);
        let bn = norm_sq(b).sqrt();
        let mut x = vec![zero; n];
        if bn == 0.0 {
            return Ok(Solve {
                z: x,
                residual: 0.0,
                iterations: 0,
            });
        }
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![zero; n];
        let mut tmp = vec![zero; n];
        let mut rr = norm_sq(&r);
        for it in 1..=max_iters {
            self.apply_gram(&p, xi, &mut tmp, &mut ap);
            let alpha = rr / dot(&p, &ap).re;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = norm_sq(&r);
            if rr_new.sqrt() <= tol * bn {
                // recursive residual drifts, so confirm explicitly
                let residual = self.relative_residual(b, &x, xi);
                if residual <= tol {
                    return Ok(Solve {
                        z: x,
                        residual,
                        iterations: it,
                    });
                }
            }
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        Err(Error::SolverDiverged {
            residual: self.relative_residual(b, &x, xi),
            iterations: max_iters,
        })
    }

    /// `eps(xi)`, in `(0, 1]` for a non-zero channel.
    pub fn epsilon(&self, xi: f64) -> Result<f64> {
        let n = self.dim() as f64;
        match &self.backend {
            Backend::Exact { lambda, .. } => Ok(lambda.iter().map(|l| l / (l + xi)).sum::<f64>() / n),
            Backend::MatrixFree { trace, quad, tol, max_iters } => match trace {
                TraceMode::Probes { .. } => {
                    let total: f64 = quad
                        .iter()
                        .map(|q| q.weight * q.nodes.iter().zip(&q.coefs).map(|(t, c)| c * t / (t + xi)).sum::<f64>())
                        .sum();
                    Ok(total / (quad.len() as f64 * n))
                }
                TraceMode::Basis => {
                    // Tr(H^H A^-1 H) = MN - xi Tr(A^-1)
                    let dim = self.dim();
                    let mut e = vec![Complex64::new(0.0, 0.0); dim];
                    let mut tr = 0.0;
                    for i in 0..dim {
                        e[i] = Complex64::new(1.0, 0.0);
                        let sol = self.conjugate_gradient(&e, xi, tol.min(1e-12).max(1e-14), (*max_iters).max(4 * dim))?;
                        tr += sol.z[i].re;
                        e[i] = Complex64::new(0.0, 0.0);
                    }
                    Ok(1.0 - xi * tr / n)
                }
            },
        }
    }

    fn probe_quadratures(&self, count: usize, steps: usize, seed: u64) -> Result<Vec<Quadrature>> {
        if count == 0 || steps == 0 {
            return Err(Error::Config("trace probing needs at least one probe and one step".into()));
        }
        let mut rng = rng_from_seed(seed);
        let n = self.dim();
        let units = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let probes: Vec<Vec<Complex64>> = (0..count)
            .map(|_| (0..n).map(|_| units[rng.random_range(0..4)]).collect())
            .collect();
        use rayon::prelude::*;
        Ok(probes.par_iter().map(|z| self.lanczos(z, steps)).collect())
    }

    /// Gauss quadrature of `z^H f(H H^H) z` from `steps` Lanczos steps.
    fn lanczos(&self, z: &[Complex64], steps: usize) -> Quadrature {
        let n = self.dim();
        let zero = Complex64::new(0.0, 0.0);
        let weight = norm_sq(z);
        let mut v: Vec<Complex64> = z.iter().map(|x| x / weight.sqrt()).collect();
        let mut v_prev = vec![zero; n];
        let mut w = vec![zero; n];
        let mut tmp = vec![zero; n];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut beta_prev = 0.0;
        for _ in 0..steps.min(n) {
            self.apply_gram(&v, 0.0, &mut tmp, &mut w);
            let alpha = dot(&v, &w).re;
            for i in 0..n {
                w[i] -= alpha * v[i] + beta_prev * v_prev[i];
            }
            alphas.push(alpha);
            let beta = norm_sq(&w).sqrt();
            if beta <= 1e-12 * alpha.abs().max(1e-300) {
                break;
            }
            betas.push(beta);
            std::mem::swap(&mut v_prev, &mut v);
            for i in 0..n {
                v[i] = w[i] / beta;
            }
            beta_prev = beta;
        }
        let k = alphas.len();
        let t = Mat::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i == j + 1 || j == i + 1 {
                betas[i.min(j)]
            } else {
                0.0
            }
        });
        let eig = t.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigendecomposition");
        let s = eig.S().column_vector();
        let u = eig.U();
        Quadrature {
            weight,
            nodes: (0..k).map(|i| s[i].max(0.0)).collect(),
            coefs: (0..k).map(|i| u[(0, i)] * u[(0, i)]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::awgn;

    fn random_sparse(n: usize, per_row: usize, seed: u64) -> CsrMatrix {
        let mut rng = rng_from_seed(seed);
        let mut trip = Vec::new();
        for r in 0..n {
            trip.push((r, r, Complex64::new(1.0, 0.0)));
            for _ in 0..per_row {
                let c = rng.random_range(0..n);
                let v = awgn(&mut rng, 1, 0.5)[0];
                trip.push((r, c, v));
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn identity_kernel() {
        let h = CsrMatrix::identity(16);
        let k = LeKernel::new(&h, &LeMode::Exact).unwrap();
        let xi = 0.25;
        assert!((k.epsilon(xi).unwrap() - 1.0 / 1.25).abs() < 1e-12);
        let b = awgn(&mut rng_from_seed(1), 16, 1.0);
        let s = k.solve(&b, xi).unwrap();
        for (z, b) in s.z.iter().zip(&b) {
            assert!((z - b / 1.25).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_and_matrix_free_agree() {
        let h = random_sparse(48, 3, 4);
        let exact = LeKernel::new(&h, &LeMode::Exact).unwrap();
        let free = LeKernel::new(
            &h,
            &LeMode::MatrixFree {
                tol: 1e-13,
                max_iters: 2000,
                trace: TraceMode::Basis,
            },
        )
        .unwrap();
        let b = awgn(&mut rng_from_seed(3), 48, 1.0);
        for xi in [1e-2, 0.3, 4.0] {
            let a = exact.solve(&b, xi).unwrap();
            let c = free.solve(&b, xi).unwrap();
            assert!(c.residual <= 1e-13);
            let diff: f64 = a.z.iter().zip(&c.z).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-9, "xi {xi}: {diff}");
            assert!((exact.epsilon(xi).unwrap() - free.epsilon(xi).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn probe_trace_is_close() {
        let h = random_sparse(256, 4, 5);
        let exact = LeKernel::new(&h, &LeMode::Exact).unwrap();
        let free = LeKernel::new(&h, &LeMode::matrix_free()).unwrap();
        for xi in [1e-2, 0.1, 1.0] {
            let e = exact.epsilon(xi).unwrap();
            let f = free.epsilon(xi).unwrap();
            assert!((e - f).abs() / e < 0.03, "xi {xi}: {e} vs {f}");
        }
    }

    #[test]
    fn cg_reports_divergence() {
        let h = random_sparse(64, 4, 6);
        let k = LeKernel::new(
            &h,
            &LeMode::MatrixFree {
                tol: 1e-14,
                max_iters: 2,
                trace: TraceMode::Basis,
            },
        )
        .unwrap();
        let b = awgn(&mut rng_from_seed(1), 64, 1.0);
        assert!(matches!(k.solve(&b, 1e-3), Err(Error::SolverDiverged { .. })));
    }

    #[test]
    fn epsilon_decreases_with_xi() {
        let h = random_sparse(32, 2, 7);
        let k = LeKernel::new(&h, &LeMode::Exact).unwrap();
        let mut prev = 1.0 + 1e-12;
        for xi in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let e = k.epsilon(xi).unwrap();
            assert!(e < prev && e > 0.0);
            prev = e;
        }
    }
}
