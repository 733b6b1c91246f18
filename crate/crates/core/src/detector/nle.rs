//! Divergence-free non-linear estimator over a finite constellation.

use num_complex::Complex64;

use crate::constellation::Constellation;

/// Exponent used in the posterior weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenoiserForm {
    /// `exp(-|r - a|^2 / v_le)`: Gaussian posterior for `r = s + CN(0, v_le)`.
    #[default]
    Gaussian,
    /// `exp(-|r - a| / v_nle^2)` with unsquared distance and the NLE variance.
    Literal,
}

#[derive(Debug, Clone)]
pub struct NleOutput {
    /// Divergence-free output fed to the next LE.
    pub s_next: Vec<Complex64>,
    pub v_nle_next: f64,
    pub posterior_mean: Vec<Complex64>,
    pub posterior_var: Vec<f64>,
    /// Mean posterior variance.
    pub v_post: f64,
    /// `v_post < v_le`; otherwise the posterior mean is passed through.
    pub contracting: bool,
}

/// Posterior mean and variance of each `r_i` under a uniform prior on the
/// constellation, weights computed in log-sum-exp form.
pub fn posterior(r: &[Complex64], scale: f64, form: DenoiserForm, constellation: &Constellation) -> (Vec<Complex64>, Vec<f64>) {
    let pts = constellation.points();
    let mut logw = vec![0.0; pts.len()];
    let mut means = Vec::with_capacity(r.len());
    let mut vars = Vec::with_capacity(r.len());
    for &ri in r {
        for (lw, a) in logw.iter_mut().zip(pts) {
            let d = (ri - a).norm_sqr();
            *lw = match form {
                DenoiserForm::Gaussian => -d / scale,
                DenoiserForm::Literal => -d.sqrt() / scale,
            };
        }
        let mx = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut second = 0.0;
        for (lw, a) in logw.iter().zip(pts) {
            let w = (lw - mx).exp();
            total += w;
            mean += a * w;
            second += a.norm_sqr() * w;
        }
        mean /= total;
        second /= total;
        vars.push((second - mean.norm_sqr()).max(0.0));
        means.push(mean);
    }
    (means, vars)
}

/// One NLE step. `v_nle` is only used by [`DenoiserForm::Literal`].
pub fn oamp_nle(
    r: &[Complex64],
    v_le: f64,
    v_nle: f64,
    constellation: &Constellation,
    form: DenoiserForm,
    var_floor: f64,
) -> NleOutput {
    let v_le = v_le.max(var_floor);
    let scale = match form {
        DenoiserForm::Gaussian => v_le,
        DenoiserForm::Literal => (v_nle * v_nle).max(var_floor),
    };
    let (mean, var) = posterior(r, scale, form, constellation);
    let v_post = if var.is_empty() { 0.0 } else { var.iter().sum::<f64>() / var.len() as f64 };
    if v_post >= v_le {
        return NleOutput {
            s_next: mean.clone(),
            v_nle_next: v_post.max(var_floor),
            posterior_mean: mean,
            posterior_var: var,
            v_post,
            contracting: false,
        };
    }
    let ratio = v_post / v_le;
    let c = v_le / (v_le - v_post);
    let s_next = mean.iter().zip(r).map(|(m, ri)| c * (m - ratio * ri)).collect();
    let v_nle_next = if v_post <= 0.0 {
        var_floor
    } else {
        (1.0 / (1.0 / v_post - 1.0 / v_le)).max(var_floor)
    };
    NleOutput {
        s_next,
        v_nle_next,
        posterior_mean: mean,
        posterior_var: var,
        v_post,
        contracting: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::ConstellationKind;
    use crate::rng::{awgn, random_symbols, rng_from_seed};

    fn qam4() -> Constellation {
        Constellation::new(ConstellationKind::Qam4)
    }

    #[test]
    fn small_variance_gives_hard_decision() {
        let c = qam4();
        let r: Vec<Complex64> = vec![Complex64::new(0.3, -0.1), Complex64::new(-2.0, 0.05)];
        let (m, _) = posterior(&r, 1e-4, DenoiserForm::Gaussian, &c);
        for (mi, ri) in m.iter().zip(&r) {
            assert!((mi - c.hard_decision(*ri)).norm() < 1e-9);
        }
    }

    #[test]
    fn on_point_input() {
        let c = qam4();
        let a = c.points()[2];
        let out = oamp_nle(&[a], 1e-6, 1.0, &c, DenoiserForm::Gaussian, 1e-10);
        assert!((out.posterior_mean[0] - a).norm() < 1e-9);
        assert!(out.v_post <= 1e-6);
    }

    #[test]
    fn origin_maps_to_zero() {
        let c = qam4();
        for form in [DenoiserForm::Gaussian, DenoiserForm::Literal] {
            let (m, v) = posterior(&[Complex64::new(0.0, 0.0)], 0.7, form, &c);
            assert!(m[0].norm() < 1e-15);
            assert!((v[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_inputs_do_not_overflow() {
        let c = Constellation::new(ConstellationKind::Qam16);
        let (m, v) = posterior(&[Complex64::new(1e3, -1e3)], 1e-8, DenoiserForm::Gaussian, &c);
        assert!(m[0].re.is_finite() && v[0].is_finite());
    }

    #[test]
    fn output_error_decorrelated_from_input_error() {
        let c = qam4();
        let mut rng = rng_from_seed(11);
        let n = 20_000;
        let s = random_symbols(&mut rng, &c, n);
        let v_le = 0.3;
        let noise = awgn(&mut rng, n, v_le);
        let r: Vec<Complex64> = s.iter().zip(&noise).map(|(a, w)| a + w).collect();
        let out = oamp_nle(&r, v_le, 1.0, &c, DenoiserForm::Gaussian, 1e-10);
        assert!(out.contracting);
        let ein: Vec<Complex64> = r.iter().zip(&s).map(|(a, b)| a - b).collect();
        let eout: Vec<Complex64> = out.s_next.iter().zip(&s).map(|(a, b)| a - b).collect();
        let cross: Complex64 = ein.iter().zip(&eout).map(|(a, b)| a.conj() * b).sum();
        let na: f64 = ein.iter().map(|v| v.norm_sqr()).sum();
        let nb: f64 = eout.iter().map(|v| v.norm_sqr()).sum();
        let rho = cross.norm() / (na * nb).sqrt();
        assert!(rho <= 0.05, "{rho}");
    }

    #[test]
    fn variance_update_formula() {
        let c = qam4();
        let r = awgn(&mut rng_from_seed(2), 64, 1.0);
        let out = oamp_nle(&r, 0.5, 1.0, &c, DenoiserForm::Gaussian, 1e-10);
        let want = 1.0 / (1.0 / out.v_post - 1.0 / 0.5);
        assert!((out.v_nle_next - want).abs() < 1e-12);
    }
}
