//! Reference values computed without the polar/Bessel route: the exponent of
//! a radial family is obtained from the one-dimensional marginal of its
//! density along a coordinate axis,
//!
//!   Re ψ(u e₁) = ∫_ℝ (1 − cos(u s)) μ₁(s) ds,
//!   μ₁(s) = ∫_{ℝ^{n−1}} k(√(s² + |z|²)) dz.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{MeasureSpec, ModelSpec, RadialFamily};
use crate::quad::{gauss_kronrod, integrate_singular_left, integrate_to_infinity, Tolerance};
use crate::specfun::sphere_area;

fn marginal(f: RadialFamily, n: usize, s: f64) -> f64 {
    if n == 1 {
        return f.density(1, s);
    }
    // z = s·v in polar coordinates on ℝ^{n−1}
    let w = sphere_area(n - 1) * s.powi(n as i32 - 1);
    let g = |v: f64| f.density(n, s * (1.0 + v * v).sqrt()) * v.powi(n as i32 - 2);
    let tol = Tolerance::new(1e-300, 1e-12);
    let q = match f.support_end() {
        Some(end) if s >= end => return 0.0,
        Some(end) => {
            let vmax = ((end / s).powi(2) - 1.0).sqrt();
            gauss_kronrod(g, 0.0, vmax, tol, 400).value
        }
        None => integrate_to_infinity(g, 0.0, 1.0, tol).value,
    };
    w * q
}

/// Re ψ(u e₁) for a radial family by direct quadrature in Cartesian form.
pub fn direct_exponent(model: &ModelSpec, u: f64) -> Result<f64> {
    let f = match &model.measure {
        MeasureSpec::RadialFamily(f) => *f,
        _ => return Err(Error::NonRadial),
    };
    if let RadialFamily::Stable { alpha } = f {
        return Ok(u.powf(alpha));
    }
    let n = model.dim;
    let end = match f {
        RadialFamily::TemperedStable { lambda, .. } => 60.0 / lambda,
        RadialFamily::GammaType => 60.0,
        _ => f.support_end().unwrap_or(f64::INFINITY),
    };
    let integrand = |s: f64| {
        let h = (0.5 * u * s).sin();
        2.0 * h * h * marginal(f, n, s)
    };
    let tol = Tolerance::new(1e-13, 1e-11);
    let split = (1.0 / u).min(end);
    let mut total = integrate_singular_left(integrand, 0.0, split, tol).value;
    let step = PI / u;
    let mut a = split;
    while a < end {
        let b = (a + step).min(end);
        total += gauss_kronrod(integrand, a, b, tol, 100).value;
        a = b;
    }
    Ok(2.0 * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_relative_eq;

    #[test]
    fn marginal_of_stable_is_one_dimensional_stable() {
        // the marginal of an isotropic α-stable Lévy density is the 1-d one
        let f = RadialFamily::Stable { alpha: 1.3 };
        for n in 2..=3 {
            assert_relative_eq!(marginal(f, n, 0.7), f.density(1, 0.7), max_relative = 1e-9);
        }
    }

    #[test]
    fn gamma_type_matches_closed_form() {
        let m = library::sym_gamma(1);
        assert_relative_eq!(direct_exponent(&m, 2.0).unwrap(), 5f64.ln(), max_relative = 1e-8);
    }
}
