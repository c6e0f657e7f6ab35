//! Integrals of radial Lévy measures: tail mass, truncated moments and the
//! polar-coordinate kernel integral ∫(1 − K(ur)) dM(r), where M is the radial
//! mass measure M(dr) = ν(|y| ∈ dr).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{stable_constant, Atom, AtomLadder, MeasureSpec, ModelSpec, RadialFamily};
use crate::quad::{self, gauss_kronrod, integrate_singular_left, integrate_to_infinity, QuadResult, Tolerance};
use crate::specfun::{h_kernel, sphere_area};

/// Radial kernel K with K(0) = 1: cos z in one dimension, H_{(n−2)/2}(z) otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Cos,
    H(f64),
}

impl Kernel {
    pub fn for_dim(n: usize) -> Kernel {
        if n == 1 {
            Kernel::Cos
        } else {
            Kernel::H(0.5 * (n as f64 - 2.0))
        }
    }

    pub(crate) fn order(&self) -> f64 {
        match *self {
            Kernel::Cos => -0.5,
            Kernel::H(nu) => nu,
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Kernel::Cos => z.cos(),
            Kernel::H(nu) => h_kernel(nu, z).unwrap_or(f64::NAN),
        }
    }

    /// 1 − K(z) without cancellation for small z.
    pub fn one_minus(&self, z: f64) -> f64 {
        match *self {
            Kernel::Cos => {
                let s = (0.5 * z).sin();
                2.0 * s * s
            }
            Kernel::H(nu) => {
                if z < 0.5 {
                    let q = -0.25 * z * z;
                    let mut term = 1.0;
                    let mut sum = 0.0;
                    for k in 1..30 {
                        term *= q / (k as f64 * (nu + k as f64));
                        sum -= term;
                        if term.abs() < 1e-18 * sum.abs() {
                            break;
                        }
                    }
                    sum
                } else {
                    1.0 - h_kernel(nu, z).unwrap_or(f64::NAN)
                }
            }
        }
    }

    /// First approximate zero of K at or beyond z (McMahon leading term).
    pub(crate) fn next_zero(&self, z: f64) -> f64 {
        let shift = (0.5 * self.order() + 0.75) * PI;
        let k = ((z - shift) / PI).ceil().max(0.0);
        shift + k * PI
    }
}

/// Continuous radial measure described by its mass density dM/dr.
struct Continuous<'a> {
    model: &'a ModelSpec,
    start: f64,
    end: f64,
    breaks: Vec<f64>,
    scale: f64,
    family: Option<RadialFamily>,
}

impl<'a> Continuous<'a> {
    fn new(model: &'a ModelSpec) -> Option<Self> {
        match &model.measure {
            MeasureSpec::RadialFamily(f) => Some(Continuous {
                model,
                start: 0.0,
                end: f.support_end().unwrap_or(f64::INFINITY),
                breaks: Vec::new(),
                scale: f.scale(),
                family: Some(*f),
            }),
            MeasureSpec::RadialTable(t) => Some(Continuous {
                model,
                start: t.r[0],
                end: *t.r.last().expect("validated table"),
                breaks: t.r.clone(),
                scale: t.r[0],
                family: None,
            }),
            MeasureSpec::Atoms(_) | MeasureSpec::OneSidedGamma => None,
        }
    }

    fn mass_density(&self, r: f64) -> f64 {
        self.model.radial_mass_density(r).unwrap_or(0.0)
    }

    /// Mass density continued analytically past a finite support edge.
    fn continued(&self, r: f64) -> f64 {
        let n = self.model.dim;
        match self.family {
            Some(f) => sphere_area(n) * r.powi(n as i32 - 1) * f.continued_density(n, r),
            None => 0.0,
        }
    }

    /// Breakpoints of the density inside (a, b), plus a and b.
    fn pieces(&self, a: f64, b: f64) -> Vec<f64> {
        let mut v = vec![a];
        v.extend(self.breaks.iter().copied().filter(|&r| r > a && r < b));
        v.push(b);
        v
    }

    /// ∫_0^b r^p dM(r) in closed form on an initial stretch where the
    /// density is an explicit power law, returning (value, stretch end).
    fn origin_moment(&self, power: i32, b: f64) -> Option<(f64, f64)> {
        let f = self.family?;
        let n = self.model.dim;
        let omega = sphere_area(n);
        let p = power as f64;
        match f {
            RadialFamily::Stable { alpha } => {
                let c = omega * stable_constant(n, alpha);
                Some((c * b.powf(p - alpha) / (p - alpha), b))
            }
            RadialFamily::TruncatedStable { alpha, cutoff } => {
                let b = b.min(cutoff);
                let c = omega * stable_constant(n, alpha);
                Some((c * b.powf(p - alpha) / (p - alpha), b))
            }
            RadialFamily::TemperedStable { alpha, lambda } => {
                // e^{-λr} expanded; λb ≤ 0.1 keeps the series short
                let b = b.min(0.1 / lambda);
                let c = omega * stable_constant(n, alpha);
                let mut sum = 0.0;
                let mut coef = 1.0;
                for k in 0..40 {
                    let e = p - alpha + k as f64;
                    let term = coef * b.powf(e) / e;
                    sum += term;
                    if term.abs() < 1e-18 * sum.abs() {
                        break;
                    }
                    coef *= -lambda / (k as f64 + 1.0);
                }
                Some((c * sum, b))
            }
            RadialFamily::LogKernel => {
                let b = b.min(1.0);
                let q = n as f64 - 1.0 + p;
                Some((omega * b.powf(q) * ((1.0 / b).ln() / q + 1.0 / (q * q)), b))
            }
            RadialFamily::GammaType => None,
        }
    }

    /// ∫_0^b r^p dM(r).
    fn moment_from_zero(&self, power: i32, b: f64, tol: Tolerance) -> QuadResult {
        let b = b.min(self.end);
        match self.origin_moment(power, b) {
            Some((value, reached)) => {
                let mut out = zero();
                out.value = value;
                if reached < b {
                    add(&mut out, self.integrate_weighted(|r| r.powi(power), reached, b, tol));
                }
                out
            }
            None => self.integrate_weighted(|r| r.powi(power), 0.0, b, tol),
        }
    }

    /// ∫_a^b w(r) dM(r) with w smooth and nonoscillatory on the range.
    fn integrate_weighted<W: Fn(f64) -> f64>(&self, w: W, a: f64, b: f64, tol: Tolerance) -> QuadResult {
        let a = a.max(self.start);
        let b = b.min(self.end);
        let mut out = zero();
        if b <= a {
            return out;
        }
        let f = |r: f64| w(r) * self.mass_density(r);
        if self.family.is_none() {
            let p = self.pieces(a, b);
            for win in p.windows(2) {
                add(&mut out, gauss_kronrod(f, win[0], win[1], tol, 200));
            }
            return out;
        }
        if b.is_infinite() {
            let mid = a.max(self.scale);
            if a == 0.0 {
                add(&mut out, integrate_singular_left(f, 0.0, mid, tol));
            } else if mid > a {
                add(&mut out, log_gk(f, a, mid, tol));
            }
            add(&mut out, integrate_to_infinity(f, mid, mid.max(1.0), tol));
            return out;
        }
        if a == 0.0 {
            add(&mut out, integrate_singular_left(f, 0.0, b, tol));
        } else {
            add(&mut out, log_gk(f, a, b, tol));
        }
        out
    }
}

fn zero() -> QuadResult {
    QuadResult {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
        converged: true,
    }
}

fn add(acc: &mut QuadResult, r: QuadResult) {
    acc.value += r.value;
    acc.abs_error += r.abs_error;
    acc.evaluations += r.evaluations;
    acc.converged &= r.converged;
}

/// ∫_a^b f over a range spanning decades, in the variable s = ln r.
fn log_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    gauss_kronrod(
        |s: f64| {
            let r = s.exp();
            f(r) * r
        },
        a.ln(),
        b.ln(),
        tol,
        400,
    )
}

/// Mass of a single atom viewed radially: (radius, mass).
fn radial_atoms(model: &ModelSpec) -> Vec<(f64, f64)> {
    match &model.measure {
        MeasureSpec::Atoms(set) => set
            .atoms
            .iter()
            .map(|a| match a {
                Atom::Point { point, mass } => (point.iter().map(|p| p * p).sum::<f64>().sqrt(), *mass),
                Atom::Shell { radius, mass } => (*radius, *mass),
            })
            .collect(),
        _ => Vec::new(),
    }
}

const LADDER_CAP: i32 = 4000;

/// Walks the ladder shells in order of decreasing radius until `visit` returns false.
pub(crate) fn walk_ladder<F: FnMut(i32, f64, f64) -> bool>(l: &AtomLadder, mut visit: F) {
    let mut j = l.first;
    let mut radius = l.ratio.powi(-l.first);
    while j < l.first + LADDER_CAP && radius > 0.0 {
        if !visit(j, radius, l.masses.mass(j)) {
            return;
        }
        j += 1;
        radius /= l.ratio;
    }
}

fn ladder(model: &ModelSpec) -> Option<&AtomLadder> {
    match &model.measure {
        MeasureSpec::Atoms(set) => set.ladder.as_ref(),
        _ => None,
    }
}

/// ν(B(0,r)^c) = M([r, ∞)).
pub fn tail_mass(model: &ModelSpec, r: f64) -> Result<f64> {
    if matches!(model.measure, MeasureSpec::OneSidedGamma) {
        let q = integrate_to_infinity(|y| (-y).exp() / y, r, 1.0, Tolerance::tight());
        return Ok(q.value);
    }
    if let Some(c) = Continuous::new(model) {
        let q = c.integrate_weighted(|_| 1.0, r, f64::INFINITY, Tolerance::tight());
        if !q.converged {
            return Err(Error::quad("tail mass", q.abs_error));
        }
        return Ok(q.value);
    }
    let mut s = quad::KahanSum::default();
    for (a, b) in radial_atoms(model) {
        if a >= r {
            s.add(b);
        }
    }
    if let Some(l) = ladder(model) {
        walk_ladder(l, |_, a, b| {
            if a >= r {
                s.add(b);
                true
            } else {
                false
            }
        });
    }
    Ok(s.value())
}

/// ∫_{|y|<ε} |y|^p ν(dy) for p ∈ {2, 4}.
pub fn inner_moment(model: &ModelSpec, eps: f64, power: i32) -> Result<f64> {
    if matches!(model.measure, MeasureSpec::OneSidedGamma) {
        let q = gauss_kronrod(|y| y.powi(power - 1) * (-y).exp(), 0.0, eps, Tolerance::tight(), 200);
        return Ok(q.value);
    }
    if let Some(c) = Continuous::new(model) {
        let q = c.moment_from_zero(power, eps, Tolerance::tight());
        if !q.converged {
            return Err(Error::quad("second moment near the origin", q.abs_error));
        }
        return Ok(q.value);
    }
    let mut s = quad::KahanSum::default();
    for (a, b) in radial_atoms(model) {
        if a < eps {
            s.add(b * a.powi(power));
        }
    }
    if let Some(l) = ladder(model) {
        let mut converged = false;
        walk_ladder(l, |_, a, b| {
            if a < eps {
                let term = b * a.powi(power);
                s.add(term);
                if term <= 1e-17 * s.value().abs().max(1e-300) && a < 1e-3 * eps {
                    converged = true;
                    return false;
                }
            }
            true
        });
        if !converged {
            return Ok(f64::INFINITY);
        }
    }
    Ok(s.value())
}

/// ∫(1 ∧ |y|²) ν(dy).
pub fn truncated_moment(model: &ModelSpec) -> Result<f64> {
    Ok(inner_moment(model, 1.0, 2)? + tail_mass(model, 1.0)?)
}

/// Below u·r = TAYLOR_SWITCH the kernel is replaced by its two-term expansion.
const TAYLOR_SWITCH: f64 = 1e-3;
/// Half-periods beyond which a finite support edge is handled by subtracting
/// two accelerated tails rather than by direct panel summation.
const DIRECT_PANELS: f64 = 400.0;
/// Oscillation periods covered by direct panels before the accelerated tail.
const CORE_PERIODS: f64 = 20.0;

/// ∫_0^∞ (1 − K(ur)) dM(r) for a continuous radial measure.
pub fn kernel_integral(model: &ModelSpec, u: f64, kernel: Kernel, tol: Tolerance) -> Result<QuadResult> {
    let c = Continuous::new(model).ok_or(Error::NonRadial)?;
    if u == 0.0 {
        return Ok(zero());
    }
    let one_minus = |r: f64| kernel.one_minus(u * r);
    let mut out = zero();

    // Taylor zone u·r < 1e-3: 1 − K(z) = z²/(4(ν+1)) − z⁴/(32(ν+1)(ν+2)) + O(z⁶)
    let r_taylor = TAYLOR_SWITCH / u;
    let nu = kernel.order();
    if c.start < r_taylor && c.origin_moment(2, r_taylor).is_some() {
        let m2 = c.moment_from_zero(2, r_taylor, tol);
        let m4 = c.moment_from_zero(4, r_taylor, tol);
        let u2 = u * u;
        add(
            &mut out,
            QuadResult {
                value: u2 / (4.0 * (nu + 1.0)) * m2.value - u2 * u2 / (32.0 * (nu + 1.0) * (nu + 2.0)) * m4.value,
                abs_error: m2.abs_error * u2 + m4.abs_error * u2 * u2,
                evaluations: m2.evaluations + m4.evaluations,
                converged: m2.converged && m4.converged,
            },
        );
    } else {
        add(&mut out, c.integrate_weighted(one_minus, 0.0, r_taylor, tol));
    }

    // non-oscillatory core: r < 1/u
    let r1 = 1.0 / u;
    add(&mut out, c.integrate_weighted(one_minus, r_taylor, r1, tol));
    if c.end <= r1 {
        return finish(out, "kernel integral");
    }

    let rc = (kernel.next_zero(CORE_PERIODS * 2.0 * PI) / u).max(r1);
    let direct_end = if c.end.is_finite() && (c.end - rc) * u / PI < DIRECT_PANELS {
        c.end
    } else {
        rc.min(c.end)
    };

    // oscillatory middle: panels between kernel zeros plus density breakpoints
    let a = r1.max(c.start);
    if direct_end > a {
        let mut nodes = c.pieces(a, direct_end);
        let mut z = kernel.next_zero(u * a);
        while z / u < direct_end {
            nodes.push(z / u);
            z += PI;
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let f = |r: f64| one_minus(r) * c.mass_density(r);
        let panel_tol = Tolerance::new(tol.abs / nodes.len() as f64, tol.rel);
        for w in nodes.windows(2) {
            if w[1] > w[0] {
                add(&mut out, gauss_kronrod(f, w[0], w[1], panel_tol, 100));
            }
        }
    }
    if direct_end >= c.end {
        return finish(out, "kernel integral");
    }

    // tail: M([rc, end)) − ∫_rc^∞ K dM + ∫_end^∞ K dM_continued
    add(&mut out, c.integrate_weighted(|_| 1.0, direct_end, c.end, tol));
    let osc = oscillating_tail(&c, u, kernel, direct_end, tol, false);
    add(&mut out, neg(osc));
    if c.end.is_finite() {
        add(&mut out, oscillating_tail(&c, u, kernel, c.end, tol, true));
    }
    finish(out, "kernel integral")
}

fn neg(mut q: QuadResult) -> QuadResult {
    q.value = -q.value;
    q
}

fn finish(out: QuadResult, what: &str) -> Result<QuadResult> {
    if out.converged && out.value.is_finite() {
        Ok(out)
    } else {
        Err(Error::quad(what, out.abs_error))
    }
}

/// ∫_a^∞ K(ur) m(r) dr with m the (optionally continued) mass density.
fn oscillating_tail(c: &Continuous, u: f64, kernel: Kernel, a: f64, tol: Tolerance, continued: bool) -> QuadResult {
    let f = |r: f64| {
        let m = if continued { c.continued(r) } else { c.mass_density(r) };
        kernel.value(u * r) * m
    };
    let z0 = kernel.next_zero(u * a) / u;
    let mut out = zero();
    if z0 > a {
        add(&mut out, gauss_kronrod(f, a, z0, Tolerance::new(tol.abs * 0.1, tol.rel * 0.1), 100));
    }
    add(&mut out, quad::oscillatory_tail(f, z0, PI / u, Tolerance::new(tol.abs * 0.1, tol.rel), 400));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_one_minus_matches_direct() {
        let k = Kernel::H(0.5);
        for &z in &[0.1, 0.49, 0.51, 2.0] {
            assert_relative_eq!(k.one_minus(z), 1.0 - z.sin() / z, max_relative = 1e-12);
        }
        assert_relative_eq!(Kernel::Cos.one_minus(1.0), 1.0 - 1f64.cos(), max_relative = 1e-14);
    }

    #[test]
    fn kernel_zeros_are_close() {
        let z = Kernel::Cos.next_zero(10.0);
        assert!(z.cos().abs() < 1e-12 && z >= 10.0);
        let z = Kernel::H(0.5).next_zero(10.0);
        assert!(z.sin().abs() < 1e-12);
    }
}
