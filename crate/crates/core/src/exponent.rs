//! Characteristic exponent ψ of a Lévy triplet and the derived radial
//! quantities G (signed tail) and g (isotropic profile).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Atom, MeasureSpec, ModelSpec, RadialFamily};
use crate::quad::{KahanSum, Tolerance};
use crate::radial::{self, walk_ladder, Kernel};
use crate::specfun::sphere_area;

/// Ladder shells are summed until b_j (a_j |ξ|)² falls below this.
const LADDER_CUTOFF: f64 = 1e-14;

fn check_dim(model: &ModelSpec, xi: &[f64]) -> Result<()> {
    if xi.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: xi.len(),
        });
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gaussian_part(model: &ModelSpec, xi: &[f64]) -> f64 {
    let n = model.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += xi[i] * model.gaussian_entry(i, j) * xi[j];
        }
    }
    0.5 * s
}

/// Phase θ for which a kernel value is needed, given either in radians or
/// in turns (θ = 2π·turns) so that large dyadic phases reduce exactly.
#[derive(Clone, Copy)]
enum Phase {
    Radians(f64),
    Turns(f64),
}

impl Phase {
    fn one_minus_cos(self) -> f64 {
        match self {
            Phase::Radians(x) => {
                let s = (0.5 * x).sin();
                2.0 * s * s
            }
            Phase::Turns(t) => {
                let s = (PI * (t - t.round())).sin();
                2.0 * s * s
            }
        }
    }

    fn sin(self) -> f64 {
        match self {
            Phase::Radians(x) => x.sin(),
            Phase::Turns(t) => (2.0 * PI * (t - t.round())).sin(),
        }
    }

    fn radians(self) -> f64 {
        match self {
            Phase::Radians(x) => x,
            Phase::Turns(t) => 2.0 * PI * t,
        }
    }
}

/// 1 − K(a|ξ|) for a shell of radius a, with |ξ|·a given as a phase.
fn shell_term(dim: usize, phase: Phase) -> f64 {
    if dim == 1 {
        phase.one_minus_cos()
    } else {
        Kernel::for_dim(dim).one_minus(phase.radians())
    }
}

/// Jump part of ψ. `xi_scaled` is ξ itself (radians) or ξ/2π (turns).
fn jump_part(model: &ModelSpec, xi_scaled: &[f64], turns: bool, tol: Tolerance) -> Result<Complex64> {
    let n = model.dim;
    let mk = |x: f64| if turns { Phase::Turns(x) } else { Phase::Radians(x) };
    let unit = if turns { 2.0 * PI } else { 1.0 };
    match &model.measure {
        MeasureSpec::Atoms(set) => {
            let mut re = KahanSum::default();
            let mut im = KahanSum::default();
            let u = norm(xi_scaled);
            for atom in &set.atoms {
                match atom {
                    Atom::Point { point, mass } => {
                        let dot: f64 = point.iter().zip(xi_scaled).map(|(a, b)| a * b).sum();
                        let ph = mk(dot);
                        re.add(mass * ph.one_minus_cos());
                        let r2: f64 = point.iter().map(|p| p * p).sum();
                        im.add(mass * (-ph.sin() + unit * dot / (1.0 + r2)));
                    }
                    Atom::Shell { radius, mass } => {
                        re.add(mass * shell_term(n, mk(radius * u)));
                    }
                }
            }
            if let Some(l) = &set.ladder {
                let xi_abs = u * unit;
                walk_ladder(l, |j, a, b| {
                    re.add(b * shell_term(n, mk(a * u)));
                    let z = a * xi_abs;
                    j < l.first + l.levels as i32 || l.masses.envelope(j) * z * z >= LADDER_CUTOFF
                });
            }
            Ok(Complex64::new(re.value(), im.value()))
        }
        MeasureSpec::RadialFamily(f) => {
            let u = norm(xi_scaled) * unit;
            Ok(Complex64::new(radial_family_psi(model, *f, u, tol)?, 0.0))
        }
        MeasureSpec::RadialTable(_) => {
            let u = norm(xi_scaled) * unit;
            let q = radial::kernel_integral(model, u, Kernel::for_dim(n), tol)?;
            Ok(Complex64::new(q.value, 0.0))
        }
        MeasureSpec::OneSidedGamma => {
            let x = xi_scaled[0] * unit;
            // ∫(1 − e^{iyx}) y^{-1}e^{-y} dy = ln(1 − ix), plus the compensator
            Ok(Complex64::new(0.5 * log1p_square(x), -x.atan() + x * gamma_compensator()))
        }
    }
}

/// ∫_0^∞ e^{-y}/(1+y²) dy, the compensator integral of the one-sided gamma measure.
pub fn gamma_compensator() -> f64 {
    static C: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *C.get_or_init(|| {
        crate::quad::integrate_to_infinity(|y| (-y).exp() / (1.0 + y * y), 0.0, 1.0, Tolerance::tight()).value
    })
}

fn radial_family_psi(model: &ModelSpec, f: RadialFamily, u: f64, tol: Tolerance) -> Result<f64> {
    match f {
        RadialFamily::Stable { alpha } => Ok(u.powf(alpha)),
        RadialFamily::GammaType => Ok(log1p_square(u)),
        _ => Ok(radial::kernel_integral(model, u, Kernel::for_dim(model.dim), tol)?.value),
    }
}

/// ln(1+u²), accurate for tiny and huge u.
pub fn log1p_square(u: f64) -> f64 {
    if u > 1e8 {
        2.0 * u.ln() + (u * u).recip()
    } else {
        (u * u).ln_1p()
    }
}

/// ψ(ξ) with the default tolerance.
pub fn eval_psi(model: &ModelSpec, xi: &[f64]) -> Result<Complex64> {
    eval_psi_tol(model, xi, Tolerance::default())
}

pub fn eval_psi_tol(model: &ModelSpec, xi: &[f64], tol: Tolerance) -> Result<Complex64> {
    check_dim(model, xi)?;
    let drift: f64 = model.drift.iter().zip(xi).map(|(a, b)| a * b).sum();
    let jump = jump_part(model, xi, false, tol)?;
    Ok(Complex64::new(gaussian_part(model, xi), drift) + jump)
}

/// Re ψ(ξ), clamped at zero against roundoff.
pub fn eval_re_psi(model: &ModelSpec, xi: &[f64]) -> Result<f64> {
    Ok(eval_psi(model, xi)?.re.max(0.0))
}

/// ψ(2π·τ). Dyadic atom phases are reduced exactly, which matters at the
/// lattice points 2^m·2π used by the atom examples.
pub fn eval_psi_turns(model: &ModelSpec, tau: &[f64]) -> Result<Complex64> {
    check_dim(model, tau)?;
    let xi: Vec<f64> = tau.iter().map(|t| 2.0 * PI * t).collect();
    if !matches!(model.measure, MeasureSpec::Atoms(_)) {
        return eval_psi(model, &xi);
    }
    let drift: f64 = model.drift.iter().zip(&xi).map(|(a, b)| a * b).sum();
    let jump = jump_part(model, tau, true, Tolerance::default())?;
    Ok(Complex64::new(gaussian_part(model, &xi), drift) + jump)
}

/// G(r) = −ω_{n−1} ν(B(0,r)^c).
pub fn radial_g(model: &ModelSpec, r: f64) -> Result<f64> {
    if !model.is_radial_measure() {
        return Err(Error::NonRadial);
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    Ok(-sphere_area(model.dim) * radial::tail_mass(model, r)?)
}

/// g(u²) = ∫(1 − H_{(n−2)/2}(ur)) dM(r), the jump part of ψ at |ξ| = u.
pub fn iso_g(model: &ModelSpec, u: f64) -> Result<f64> {
    iso_g_tol(model, u, Tolerance::default())
}

pub fn iso_g_tol(model: &ModelSpec, u: f64, tol: Tolerance) -> Result<f64> {
    if !model.isotropic {
        return Err(Error::NotIsotropic);
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("u must be nonnegative, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let kernel = Kernel::for_dim(model.dim);
    match &model.measure {
        MeasureSpec::Atoms(set) => {
            let mut s = KahanSum::default();
            for a in &set.atoms {
                match a {
                    Atom::Shell { radius, mass } => s.add(mass * kernel.one_minus(radius * u)),
                    // symmetric point pairs in one dimension, half of each pair's mass
                    Atom::Point { point, mass } => s.add(mass * kernel.one_minus(point[0].abs() * u)),
                }
            }
            if let Some(l) = &set.ladder {
                walk_ladder(l, |j, a, b| {
                    s.add(b * kernel.one_minus(a * u));
                    let z = a * u;
                    j < l.first + l.levels as i32 || l.masses.envelope(j) * z * z >= LADDER_CUTOFF
                });
            }
            Ok(s.value())
        }
        _ => Ok(radial::kernel_integral(model, u, kernel, tol)?.value),
    }
}

/// Full isotropic profile s ↦ Re ψ at |ξ| = √s, Gaussian part included.
pub fn g_profile(model: &ModelSpec, s: f64) -> Result<f64> {
    let mut xi = vec![0.0; model.dim];
    xi[0] = s.max(0.0).sqrt();
    eval_re_psi(model, &xi)
}

/// inf{s : g(s) ≥ x} for the full isotropic profile.
pub fn g_inverse(model: &ModelSpec, x: f64) -> Result<f64> {
    profile_inverse(model, x, true)
}

/// Bisection for inf{s : g(s) ≥ x}; `check` verifies monotonicity on the bracket.
pub(crate) fn profile_inverse(model: &ModelSpec, x: f64, check: bool) -> Result<f64> {
    if !model.isotropic {
        return Err(Error::NotIsotropic);
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("level must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut g_hi = g_profile(model, hi)?;
    let mut steps = 0;
    while g_hi < x {
        hi *= 2.0;
        g_hi = g_profile(model, hi)?;
        steps += 1;
        if steps > 1000 {
            return Err(Error::OutOfRange(format!("level {x}")));
        }
    }
    let mut lo = if steps > 0 { 0.5 * hi } else { 0.0 };
    // monotonicity on the bracket
    let probes = if check { 64 } else { 0 };
    let mut prev = 0.0_f64;
    for i in 1..=probes {
        let s = hi * (i as f64 / probes as f64).powi(2);
        let v = g_profile(model, s)?;
        if v < prev - 1e-9 * prev.abs().max(1.0) {
            return Err(Error::NotMonotone { at: s });
        }
        prev = v;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_profile(model, mid)? >= x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bound Re ψ(ξ) ≤ quadratic·|ξ|² + constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Majorant {
    pub quadratic: f64,
    pub constant: f64,
}

/// Uses 1 − cos θ ≤ θ²/2 for jumps of size ≤ R and 1 − cos θ ≤ 2 beyond.
pub fn quadratic_majorant(model: &ModelSpec, radius: f64) -> Result<Majorant> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let q_norm = crate::model::symmetric_eigenvalues(&model.gaussian, model.dim)
        .into_iter()
        .fold(0.0f64, f64::max);
    let moment = radial::inner_moment(model, radius, 2)?;
    if !moment.is_finite() {
        return Err(Error::quad("second moment near the origin", f64::INFINITY));
    }
    let tail = radial::tail_mass(model, radius)?;
    Ok(Majorant {
        quadratic: 0.5 * (q_norm + moment),
        constant: 2.0 * tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomSet, MeasureSpec};
    use approx::assert_relative_eq;

    fn pair_model(dim: usize) -> ModelSpec {
        ModelSpec {
            dim,
            drift: vec![0.0; dim],
            gaussian: vec![0.0; dim * dim],
            measure: MeasureSpec::Atoms(AtomSet {
                atoms: vec![Atom::Shell { radius: 1.0, mass: 1.0 }],
                ladder: None,
            }),
            isotropic: true,
        }
    }

    #[test]
    fn shell_profiles() {
        assert_relative_eq!(iso_g(&pair_model(1), PI).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(iso_g(&pair_model(3), PI).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(iso_g(&pair_model(3), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn turns_agree_with_radians_for_moderate_phases() {
        let m = pair_model(1);
        let a = eval_psi(&m, &[2.0 * PI * 0.3]).unwrap();
        let b = eval_psi_turns(&m, &[0.3]).unwrap();
        assert_relative_eq!(a.re, b.re, epsilon = 1e-14);
    }

    #[test]
    fn point_atom_compensator_is_odd() {
        let m = ModelSpec {
            dim: 1,
            drift: vec![0.0],
            gaussian: vec![0.0],
            measure: MeasureSpec::Atoms(AtomSet {
                atoms: vec![Atom::Point { point: vec![0.7], mass: 2.0 }],
                ladder: None,
            }),
            isotropic: false,
        };
        let p = eval_psi(&m, &[1.3]).unwrap();
        let q = eval_psi(&m, &[-1.3]).unwrap();
        assert_relative_eq!(p.re, q.re, epsilon = 1e-15);
        assert_relative_eq!(p.im, -q.im, epsilon = 1e-15);
    }
}
