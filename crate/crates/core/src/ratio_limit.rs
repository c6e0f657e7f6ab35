//! Large-time ratio limits: concentration of the normalized function
//! χ_t = e^{-tψ}/‖e^{-tψ}‖₁ near ξ = 0, and the limits
//! T_t f(x)/‖e^{-tψ}‖₁ → (2π)^{-n}∫f and p_t(x)/p_t(0) → 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{eval_psi_turns, eval_re_psi};
use crate::inversion::{apply_transform, directions, exp_mass_outside, invert_grid, invert_radial, Axis, Grid};
use crate::model::ModelSpec;
use crate::par;

pub const DEFAULT_T_LADDER: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
/// Re ψ below this counts as a zero of the exponent.
const NEAR_ZERO: f64 = 1e-6;

/// ∫_{|ξ|>δ} e^{-t Re ψ} / ∫ e^{-t Re ψ}.
pub fn chi_tail_mass(model: &ModelSpec, t: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(1.0);
    }
    let outside = exp_mass_outside(model, t, delta)?;
    let total = exp_mass_outside(model, t, 0.0)?;
    Ok((outside / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfReport {
    pub delta: f64,
    pub value: f64,
    /// Where the infimum was approached.
    pub at: f64,
    /// A near-zero of Re ψ outside the ball: the exponent is close to periodic.
    pub periodic: bool,
}

/// m_δ = inf_{|ξ|>δ} Re ψ on a log grid (16 points per octave out to 2^40·δ,
/// plus the 2π·2^k lattice) with golden-section refinement at the minimum.
pub fn inf_re_psi_outside(model: &ModelSpec, delta: f64) -> Result<InfReport> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let dirs = directions(model);
    let along = |r: f64| -> Result<f64> {
        let mut best = f64::INFINITY;
        for d in &dirs {
            let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
            best = best.min(eval_re_psi(model, &xi)?);
        }
        Ok(best)
    };
    let radii: Vec<f64> = (0..=640).map(|k| delta * 2f64.powf(k as f64 / 16.0)).collect();
    let vals: Vec<f64> = par::map(&radii, |&r| along(r)).into_iter().collect::<Result<_>>()?;
    let (mut at, mut value) = (radii[0], vals[0]);
    let mut idx = 0;
    for (i, (&r, &v)) in radii.iter().zip(&vals).enumerate() {
        if v < value {
            value = v;
            at = r;
            idx = i;
        }
    }
    if idx > 0 {
        let (mut a, mut b) = (radii[idx - 1], radii[(idx + 1).min(radii.len() - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if along(c)? < along(d)? {
                b = d;
            } else {
                a = c;
            }
        }
        let r = 0.5 * (a + b);
        let v = along(r)?;
        if v < value {
            value = v;
            at = r;
        }
    }
    // lattice points 2π·2^k carry exact phase reduction for atom models
    let k0 = (delta / (2.0 * PI)).log2().ceil() as i32;
    for k in k0..=k0 + 40 {
        let mut v = f64::INFINITY;
        for d in &dirs {
            let tau: Vec<f64> = d.iter().map(|c| c * 2f64.powi(k)).collect();
            v = v.min(eval_psi_turns(model, &tau)?.re.max(0.0));
        }
        if v < value {
            value = v;
            at = 2.0 * PI * 2f64.powi(k);
        }
    }
    let periodic = value < NEAR_ZERO;
    Ok(InfReport {
        delta,
        value: if periodic { 0.0 } else { value },
        at,
        periodic,
    })
}

/// p_t(x)/p_t(0) from one inversion pass over a grid holding both points.
pub fn ratio_px_p0(model: &ModelSpec, t: f64, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: x.len(),
        });
    }
    if x.iter().all(|v| *v == 0.0) {
        return Ok(1.0);
    }
    let axis = |v: f64| {
        if v == 0.0 {
            Axis::new(0.0, 0.0, 1)
        } else {
            Axis::new(-v.abs(), v.abs(), 3)
        }
    };
    let (at_x, at_0) = match model.dim {
        1 => {
            let f = invert_grid(model, t, &Grid::Line { x: axis(x[0]) })?;
            let i = if x[0] > 0.0 { 2 } else { 0 };
            (f.values[i], f.values[1])
        }
        2 if !model.isotropic => {
            let (ax, ay) = (axis(x[0]), axis(x[1]));
            let f = invert_grid(model, t, &Grid::Plane { x: ax.clone(), y: ay.clone() })?;
            let idx = |a: &Axis, v: f64| if a.count == 1 { 0 } else if v > 0.0 { 2 } else { 0 };
            let mid = |a: &Axis| if a.count == 1 { 0 } else { 1 };
            let nx = ax.count;
            (
                f.values[idx(&ay, x[1]) * nx + idx(&ax, x[0])],
                f.values[mid(&ay) * nx + mid(&ax)],
            )
        }
        _ => {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let f = invert_radial(model, t, &[0.0, r])?;
            (f.values[1], f.values[0])
        }
    };
    if !(at_0 > 0.0) {
        return Err(Error::Domain(format!("p_t(0) underflows at t={t}")));
    }
    Ok(at_x / at_0)
}

/// Uniform samples f(start + i·step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_fn(start: f64, stop: f64, count: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = (stop - start) / (count - 1) as f64;
        SampledFunction {
            start,
            step,
            values: (0..count).map(|i| f(start + step * i as f64)).collect(),
        }
    }

    /// Trapezoid rule.
    pub fn integral(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let inner: f64 = self.values[1..n - 1].iter().sum();
        self.step * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    /// Trapezoid approximation of ∫ e^{iξy} f(y) dy.
    fn transform(&self, xi: f64) -> Complex64 {
        let n = self.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        let rot = Complex64::from_polar(1.0, xi * self.step);
        let mut e = Complex64::from_polar(1.0, xi * self.start);
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * v * e;
            e *= rot;
            if i % 256 == 255 {
                e = Complex64::from_polar(1.0, xi * (self.start + self.step * (i + 1) as f64));
            }
        }
        acc * self.step
    }

    fn validate(&self) -> Result<()> {
        if self.values.len() < 2 || !(self.step > 0.0) || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("sampled function needs >= 2 finite samples and a positive step".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupRatio {
    pub t: f64,
    pub x: f64,
    /// T_t f(x)/‖e^{-tψ}‖₁.
    pub observed: f64,
    /// (2π)^{-1}∫f.
    pub target: f64,
}

/// T_t f(x) = E f(x + X_t) through the transform, normalized by ‖e^{-tψ}‖₁.
pub fn semigroup_ratio(model: &ModelSpec, f: &SampledFunction, t: f64, x: f64) -> Result<SemigroupRatio> {
    f.validate()?;
    let tf = apply_transform(model, t, |xi| f.transform(xi), &[x])?[0];
    let norm = exp_mass_outside(model, t, 0.0)?;
    Ok(SemigroupRatio {
        t,
        x,
        observed: tf / norm,
        target: f.integral() / (2.0 * PI),
    })
}

/// T_t f(x)/T_t g(x) against ∫f/∫g, from two semigroup ratios at the same t and x.
pub fn derived_ratio(f: &SemigroupRatio, g: &SemigroupRatio) -> (f64, f64) {
    (f.observed / g.observed, f.target / g.target)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rung {
    pub t: f64,
    pub tail_mass: f64,
    /// Exponential envelope e^{-(t−t₀)m_δ}·‖e^{-t₀ψ}‖₁/‖e^{-tψ}‖₁.
    pub envelope: f64,
    pub ratio_px_p0: Option<f64>,
    pub semigroup: Option<SemigroupRatio>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub delta: f64,
    pub x: f64,
    pub m_delta: InfReport,
    pub rungs: Vec<Rung>,
    pub limits_expected: LimitsExpected,
    pub envelope_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitsExpected {
    pub tail_mass: f64,
    pub ratio_px_p0: f64,
    pub semigroup: Option<f64>,
}

/// Evaluates every rung of the t-ladder; failures are kept per rung.
pub fn ratio_report(
    model: &ModelSpec,
    t_grid: &[f64],
    delta: f64,
    x: f64,
    f: Option<&SampledFunction>,
) -> Result<RatioReport> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty t ladder".into()));
    }
    let m_delta = inf_re_psi_outside(model, delta)?;
    let t0 = t_grid[0];
    let base = exp_mass_outside(model, t0, 0.0)?;
    let mut point = vec![0.0; model.dim];
    point[0] = x;
    let rungs: Vec<Rung> = par::map(t_grid, |&t| {
        let run = || -> Result<Rung> {
            let tail_mass = chi_tail_mass(model, t, delta)?;
            let total = exp_mass_outside(model, t, 0.0)?;
            let envelope = (-(t - t0) * m_delta.value).exp() * base / total;
            let ratio = ratio_px_p0(model, t, &point).ok();
            let semigroup = match f {
                Some(f) if model.dim == 1 => Some(semigroup_ratio(model, f, t, x)?),
                _ => None,
            };
            Ok(Rung {
                t,
                tail_mass,
                envelope,
                ratio_px_p0: ratio,
                semigroup,
                error: None,
            })
        };
        run().unwrap_or_else(|e| Rung {
            t,
            tail_mass: f64::NAN,
            envelope: f64::NAN,
            ratio_px_p0: None,
            semigroup: None,
            error: Some(e.to_string()),
        })
    });
    let envelope_holds = rungs
        .iter()
        .filter(|r| r.error.is_none())
        .all(|r| r.tail_mass <= r.envelope * (1.0 + 1e-9) + 1e-300);
    Ok(RatioReport {
        delta,
        x,
        m_delta,
        limits_expected: LimitsExpected {
            tail_mass: 0.0,
            ratio_px_p0: 1.0,
            semigroup: f.map(|f| f.integral() / (2.0 * PI)),
        },
        rungs,
        envelope_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_relative_eq;

    #[test]
    fn tail_mass_examples() {
        assert!(chi_tail_mass(&library::gaussian(1), 100.0, 1.0).unwrap() < 1e-20);
        assert_relative_eq!(chi_tail_mass(&library::stable(1, 1.0), 10.0, 1.0).unwrap(), (-10f64).exp(), max_relative = 1e-8);
        assert_eq!(chi_tail_mass(&library::gaussian(1), 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn infimum_examples() {
        assert_relative_eq!(inf_re_psi_outside(&library::gaussian(1), 2.0).unwrap().value, 4.0, max_relative = 1e-12);
        assert_relative_eq!(inf_re_psi_outside(&library::stable(1, 1.0), 0.5).unwrap().value, 0.5, max_relative = 1e-12);
        let pair = library::compound_poisson(1, 1.0, 1.0);
        let r = inf_re_psi_outside(&pair, 5.0).unwrap();
        assert!(r.periodic);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn point_ratios() {
        assert_relative_eq!(ratio_px_p0(&library::stable(1, 1.0), 100.0, &[1.0]).unwrap(), 1e4 / (1e4 + 1.0), epsilon = 1e-9);
        assert_relative_eq!(ratio_px_p0(&library::gaussian(1), 100.0, &[2.0]).unwrap(), (-0.01f64).exp(), epsilon = 1e-9);
        assert_eq!(ratio_px_p0(&library::gaussian(1), 3.0, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn semigroup_targets() {
        let bump = SampledFunction::from_fn(-8.0, 8.0, 1601, |y| (-y * y).exp());
        let r = semigroup_ratio(&library::gaussian(1), &bump, 100.0, 0.0).unwrap();
        assert_relative_eq!(r.target, PI.sqrt() / (2.0 * PI), max_relative = 1e-9);
        assert!((r.observed / r.target - 1.0).abs() < 0.01);
        let odd = SampledFunction::from_fn(-8.0, 8.0, 1601, |y| y * (-y * y).exp());
        let r = semigroup_ratio(&library::gaussian(1), &odd, 100.0, 0.0).unwrap();
        assert!(r.observed.abs() < 1e-12 && r.target.abs() < 1e-12);
    }
}
