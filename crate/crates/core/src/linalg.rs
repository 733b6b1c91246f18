//! Small dense helpers: Gaussian elimination and Hermitian systems.

use faer::{Mat, Side};
use num_complex::Complex64;

/// Condition number above which a Gram system is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // a^H b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes.
pub fn gaussian_elimination(a: &[Vec<Complex64>], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = b.len();
    let mut m: Vec<Vec<Complex64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[pivot][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..=n {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for c in row + 1..n {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone)]
pub struct HermitianSolve {
    pub x: Vec<Complex64>,
    pub condition: f64,
    pub singular: bool,
}

/// Solves a Hermitian positive semi-definite system. Well-conditioned systems
/// go through Gaussian elimination; otherwise the minimum-norm solution over
/// the numerically non-zero eigenspace is returned and `singular` is set.
pub fn solve_hermitian(a: &[Vec<Complex64>], b: &[Complex64]) -> HermitianSolve {
    let n = b.len();
    if n == 0 {
        return HermitianSolve {
            x: Vec::new(),
            condition: 1.0,
            singular: false,
        };
    }
    let mat = Mat::<Complex64>::from_fn(n, n, |i, j| a[i][j]);
    let eig = mat
        .self_adjoint_eigen(Side::Lower)
        .expect("eigendecomposition of a small Hermitian matrix");
    let s = eig.S().column_vector();
    let lmax = (0..n).map(|i| s[i].re.abs()).fold(0.0, f64::max);
    let lmin = (0..n).map(|i| s[i].re).fold(f64::INFINITY, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if condition <= SINGULAR_CONDITION {
        if let Some(x) = gaussian_elimination(a, b) {
            return HermitianSolve {
                x,
                condition,
                singular: false,
            };
        }
    }
    let u = eig.U();
    let tol = lmax * 1e-12;
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let lam = s[k].re;
        if lam <= tol {
            continue;
        }
        let coef: Complex64 = (0..n).map(|i| u[(i, k)].conj() * b[i]).sum::<Complex64>() / lam;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += u[(i, k)] * coef;
        }
    }
    HermitianSolve {
        x,
        condition,
        singular: true,
    }
}
