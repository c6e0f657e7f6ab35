//! Lévy triplets (drift, Gaussian matrix, Lévy measure) and their validation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{bessel_k, gamma_fn, sphere_area};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dim: usize,
    pub drift: Vec<f64>,
    /// Row-major n×n covariance matrix.
    pub gaussian: Vec<f64>,
    pub measure: MeasureSpec,
    pub isotropic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MeasureSpec {
    Atoms(AtomSet),
    RadialFamily(RadialFamily),
    RadialTable(RadialTable),
    /// ν(dy) = y^{-1}e^{-y} dy on y > 0 (one dimension only).
    OneSidedGamma,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSet {
    pub atoms: Vec<Atom>,
    pub ladder: Option<AtomLadder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[serde(deny_unknown_fields)]
pub enum Atom {
    /// Mass b at the point y.
    Point { point: Vec<f64>, mass: f64 },
    /// Mass b spread uniformly over the sphere of radius a.
    Shell { radius: f64, mass: f64 },
}

/// Infinite family of shells with radii ratio^{-j}, j = first, first+1, ….
///
/// At least `levels` shells are summed; further shells are added until
/// b_j (a_j |ξ|)² drops below 1e-14.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomLadder {
    pub ratio: f64,
    pub first: i32,
    pub levels: usize,
    pub masses: MassRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum MassRule {
    Constant { value: f64 },
    /// b_j = 1/j
    Harmonic,
    /// b_j = ln j for even j, j² for odd j
    LogEvenSquareOdd,
}

impl MassRule {
    /// Upper envelope of the masses near level j, used by truncation rules.
    pub fn envelope(&self, j: i32) -> f64 {
        match *self {
            MassRule::LogEvenSquareOdd => (j as f64 + 1.0).powi(2),
            _ => self.mass(j),
        }
    }

    pub fn mass(&self, j: i32) -> f64 {
        match *self {
            MassRule::Constant { value } => value,
            MassRule::Harmonic => 1.0 / j as f64,
            MassRule::LogEvenSquareOdd => {
                if j % 2 == 0 {
                    (j as f64).ln()
                } else {
                    (j as f64).powi(2)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum RadialFamily {
    /// Density c_{n,α}|y|^{-n-α}, normalized so that ψ(ξ) = |ξ|^α.
    Stable { alpha: f64 },
    TemperedStable { alpha: f64, lambda: f64 },
    TruncatedStable { alpha: f64, cutoff: f64 },
    /// Density |y|^{-1} ln(1/|y|) on the unit ball.
    LogKernel,
    /// Density 2(4π)^{-n/2}(|y|/2)^{-n/2}K_{n/2}(|y|), for which ψ(ξ) = ln(1+|ξ|²).
    GammaType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    LogLog,
}

/// Radial density samples k(r_i); the density vanishes outside [r_0, r_last].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialTable {
    pub r: Vec<f64>,
    pub density: Vec<f64>,
    pub interpolation: Interpolation,
}

impl RadialTable {
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        if n == 0 || r < self.r[0] || r > self.r[n - 1] {
            return 0.0;
        }
        let i = match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let (k0, k1) = (self.density[i], self.density[i + 1]);
        match self.interpolation {
            Interpolation::Linear => k0 + (k1 - k0) * (r - r0) / (r1 - r0),
            Interpolation::LogLog => {
                if k0 <= 0.0 || k1 <= 0.0 {
                    return k0 + (k1 - k0) * (r - r0) / (r1 - r0);
                }
                let w = (r / r0).ln() / (r1 / r0).ln();
                (k0.ln() + w * (k1 / k0).ln()).exp()
            }
        }
    }
}

/// Constant c_{n,α} making the stable density produce ψ(ξ) = |ξ|^α.
pub fn stable_constant(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma_fn(0.5 * (nf + alpha)).unwrap_or(f64::NAN)
        / (PI.powf(0.5 * nf) * gamma_fn(1.0 - 0.5 * alpha).unwrap_or(f64::NAN))
}

impl RadialFamily {
    /// Lévy density per unit volume at distance r from the origin in ℝⁿ.
    pub fn density(&self, n: usize, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let nf = n as f64;
        match *self {
            RadialFamily::Stable { alpha } => stable_constant(n, alpha) * r.powf(-nf - alpha),
            RadialFamily::TemperedStable { alpha, lambda } => {
                stable_constant(n, alpha) * r.powf(-nf - alpha) * (-lambda * r).exp()
            }
            RadialFamily::TruncatedStable { alpha, cutoff } => {
                if r < cutoff {
                    stable_constant(n, alpha) * r.powf(-nf - alpha)
                } else {
                    0.0
                }
            }
            RadialFamily::LogKernel => {
                if r < 1.0 {
                    (1.0 / r).ln() / r
                } else {
                    0.0
                }
            }
            RadialFamily::GammaType => gamma_type_density(n, r),
        }
    }

    /// Analytic continuation of the density formula past the support edge.
    pub fn continued_density(&self, n: usize, r: f64) -> f64 {
        let nf = n as f64;
        match *self {
            RadialFamily::TruncatedStable { alpha, .. } => stable_constant(n, alpha) * r.powf(-nf - alpha),
            RadialFamily::LogKernel => (1.0 / r).ln() / r,
            _ => self.density(n, r),
        }
    }

    /// Outer edge of the support, if finite.
    pub fn support_end(&self) -> Option<f64> {
        match *self {
            RadialFamily::TruncatedStable { cutoff, .. } => Some(cutoff),
            RadialFamily::LogKernel => Some(1.0),
            _ => None,
        }
    }

    /// Natural length scale used to place the first quadrature panels.
    pub fn scale(&self) -> f64 {
        match *self {
            RadialFamily::TemperedStable { lambda, .. } => 1.0 / lambda,
            RadialFamily::TruncatedStable { cutoff, .. } => cutoff,
            _ => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |f: &str, m: String| {
            Err(Error::ModelFile {
                line: 0,
                field: f.to_string(),
                message: m,
            })
        };
        match *self {
            RadialFamily::Stable { alpha } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return bad("measure.params.alpha", format!("stable index must lie in (0, 2), got {alpha}"));
                }
            }
            RadialFamily::TemperedStable { alpha, lambda } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return bad("measure.params.alpha", format!("stable index must lie in (0, 2), got {alpha}"));
                }
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return bad("measure.params.lambda", format!("tempering rate must be positive, got {lambda}"));
                }
            }
            RadialFamily::TruncatedStable { alpha, cutoff } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return bad("measure.params.alpha", format!("stable index must lie in (0, 2), got {alpha}"));
                }
                if !(cutoff > 0.0) || !cutoff.is_finite() {
                    return bad("measure.params.cutoff", format!("cutoff radius must be positive, got {cutoff}"));
                }
            }
            RadialFamily::LogKernel | RadialFamily::GammaType => {}
        }
        Ok(())
    }
}

fn gamma_type_density(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    if n == 1 {
        return (-r).exp() / r;
    }
    let k = bessel_k(0.5 * nf, r).map(|v| v.value).unwrap_or(0.0);
    2.0 * (4.0 * PI).powf(-0.5 * nf) * (0.5 * r).powf(-0.5 * nf) * k
}

impl ModelSpec {
    pub fn gaussian_entry(&self, i: usize, j: usize) -> f64 {
        self.gaussian[i * self.dim + j]
    }

    pub fn is_radial_measure(&self) -> bool {
        match &self.measure {
            MeasureSpec::RadialFamily(_) | MeasureSpec::RadialTable(_) => true,
            MeasureSpec::OneSidedGamma => false,
            MeasureSpec::Atoms(set) => {
                set.atoms.iter().all(|a| matches!(a, Atom::Shell { .. }))
                    || (self.dim == 1 && self.is_symmetric())
            }
        }
    }

    /// True when ψ is real, i.e. the drift vanishes and the measure is symmetric.
    pub fn is_symmetric(&self) -> bool {
        if self.drift.iter().any(|&d| d != 0.0) {
            return false;
        }
        match &self.measure {
            MeasureSpec::Atoms(set) => {
                let points: Vec<(&Vec<f64>, f64)> = set
                    .atoms
                    .iter()
                    .filter_map(|a| match a {
                        Atom::Point { point, mass } => Some((point, *mass)),
                        Atom::Shell { .. } => None,
                    })
                    .collect();
                points.iter().all(|(p, m)| {
                    points
                        .iter()
                        .any(|(q, w)| w == m && p.iter().zip(q.iter()).all(|(a, b)| *a == -*b))
                })
            }
            MeasureSpec::OneSidedGamma => false,
            _ => true,
        }
    }

    /// The Gaussian matrix is c·I; returns c.
    pub fn scalar_gaussian(&self) -> Option<f64> {
        let c = self.gaussian_entry(0, 0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { c } else { 0.0 };
                if self.gaussian_entry(i, j) != want {
                    return None;
                }
            }
        }
        Some(c)
    }

    /// Lévy density per unit volume for radial continuous measures.
    pub fn radial_density(&self, r: f64) -> Option<f64> {
        match &self.measure {
            MeasureSpec::RadialFamily(f) => Some(f.density(self.dim, r)),
            MeasureSpec::RadialTable(t) => Some(t.eval(r)),
            MeasureSpec::Atoms(_) | MeasureSpec::OneSidedGamma => None,
        }
    }

    /// Radial mass density ω_{n−1} r^{n−1} k(r).
    pub fn radial_mass_density(&self, r: f64) -> Option<f64> {
        let n = self.dim;
        self.radial_density(r)
            .map(|k| sphere_area(n) * r.powi(n as i32 - 1) * k)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let field = |f: &str, m: String| Error::ModelFile {
            line: 0,
            field: f.to_string(),
            message: m,
        };
        if n == 0 {
            return Err(field("dim", "dimension must be positive".into()));
        }
        if self.drift.len() != n {
            return Err(field("drift", format!("expected {n} entries, got {}", self.drift.len())));
        }
        if self.drift.iter().any(|d| !d.is_finite()) {
            return Err(field("drift", "entries must be finite".into()));
        }
        if self.gaussian.len() != n * n {
            return Err(field(
                "gaussian",
                format!("expected {} entries (row-major {n}x{n}), got {}", n * n, self.gaussian.len()),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.gaussian_entry(i, j), self.gaussian_entry(j, i));
                if !a.is_finite() || (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                    return Err(field("gaussian", format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        let eig = symmetric_eigenvalues(&self.gaussian, n);
        if let Some(min) = eig.iter().cloned().reduce(f64::min) {
            let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            if min < -1e-12 * scale {
                return Err(field("gaussian", format!("matrix has negative eigenvalue {min:.3e}")));
            }
        }
        match &self.measure {
            MeasureSpec::Atoms(set) => {
                for (i, a) in set.atoms.iter().enumerate() {
                    match a {
                        Atom::Point { point, mass } => {
                            if point.len() != n {
                                return Err(field(
                                    &format!("measure.params.atoms[{i}].point"),
                                    format!("expected {n} coordinates, got {}", point.len()),
                                ));
                            }
                            if point.iter().all(|&p| p == 0.0) {
                                return Err(field(&format!("measure.params.atoms[{i}].point"), "atom at the origin".into()));
                            }
                            if !(*mass >= 0.0) || !mass.is_finite() {
                                return Err(field(&format!("measure.params.atoms[{i}].mass"), format!("mass must be >= 0, got {mass}")));
                            }
                        }
                        Atom::Shell { radius, mass } => {
                            if !(*radius > 0.0) || !radius.is_finite() {
                                return Err(field(&format!("measure.params.atoms[{i}].radius"), format!("radius must be > 0, got {radius}")));
                            }
                            if !(*mass >= 0.0) || !mass.is_finite() {
                                return Err(field(&format!("measure.params.atoms[{i}].mass"), format!("mass must be >= 0, got {mass}")));
                            }
                        }
                    }
                }
                if let Some(l) = &set.ladder {
                    if !(l.ratio > 1.0) || !l.ratio.is_finite() {
                        return Err(field("measure.params.ladder.ratio", format!("ratio must exceed 1, got {}", l.ratio)));
                    }
                    if matches!(l.masses, MassRule::Harmonic | MassRule::LogEvenSquareOdd) && l.first < 1 {
                        return Err(field("measure.params.ladder.first", "this mass rule needs first >= 1".into()));
                    }
                    if let MassRule::Constant { value } = l.masses {
                        if !(value >= 0.0) || !value.is_finite() {
                            return Err(field("measure.params.ladder.masses.value", format!("mass must be >= 0, got {value}")));
                        }
                    }
                    if l.first < 0 {
                        return Err(field(
                            "measure.params.ladder.first",
                            "ladder radii must not exceed 1 (first >= 0) for a finite mass outside the unit ball".into(),
                        ));
                    }
                }
                let moment = crate::radial::truncated_moment(self)?;
                if !moment.is_finite() {
                    return Err(field("measure", "∫(1∧|y|²)ν(dy) diverges".into()));
                }
            }
            MeasureSpec::RadialFamily(f) => {
                f.validate()?;
            }
            MeasureSpec::OneSidedGamma => {
                if n != 1 {
                    return Err(field("measure", "one_sided_gamma is defined in dimension 1 only".into()));
                }
            }
            MeasureSpec::RadialTable(t) => {
                if t.r.len() < 2 || t.r.len() != t.density.len() {
                    return Err(field("measure.params.r", "need at least two samples and matching density length".into()));
                }
                if t.r[0] <= 0.0 || t.r.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(field("measure.params.r", "radii must be positive and strictly increasing".into()));
                }
                if t.density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
                    return Err(field("measure.params.density", "densities must be finite and >= 0".into()));
                }
            }
        }
        if self.isotropic {
            if self.drift.iter().any(|&d| d != 0.0) {
                return Err(field("isotropic", "isotropic model must have zero drift".into()));
            }
            if self.scalar_gaussian().is_none() {
                return Err(field("isotropic", "isotropic model needs a scalar Gaussian matrix".into()));
            }
            if !self.is_radial_measure() {
                return Err(field("isotropic", "isotropic model needs a radial measure".into()));
            }
        }
        if matches!(self.measure, MeasureSpec::RadialFamily(_) | MeasureSpec::RadialTable(_)) {
            let moment = crate::radial::truncated_moment(self)?;
            if !moment.is_finite() || moment > 1e12 {
                return Err(field("measure", format!("∫(1∧|y|²)ν(dy) is not finite (got {moment:.3e})")));
            }
        }
        Ok(())
    }
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cauchy_constant() {
        assert_relative_eq!(stable_constant(1, 1.0), 1.0 / PI, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let mut e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        e.sort_by(f64::total_cmp);
        assert_relative_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_type_density_reduces_in_one_dimension() {
        // √(2/π) K_{1/2}(r)/√r = e^{-r}/r
        for &r in &[0.1, 1.0, 3.0] {
            let k = crate::specfun::bessel_k(0.5, r).unwrap().value;
            let direct = (2.0 / PI).sqrt() * k / r.sqrt();
            assert_relative_eq!(gamma_type_density(1, r), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn table_interpolation() {
        let t = RadialTable {
            r: vec![1.0, 2.0, 4.0],
            density: vec![4.0, 1.0, 0.25],
            interpolation: Interpolation::LogLog,
        };
        assert_relative_eq!(t.eval(2.0f64.sqrt()), 2.0, max_relative = 1e-12);
        assert_eq!(t.eval(0.5), 0.0);
        assert_eq!(t.eval(5.0), 0.0);
        assert_relative_eq!(t.eval(4.0), 0.25, max_relative = 1e-12);
    }
}
