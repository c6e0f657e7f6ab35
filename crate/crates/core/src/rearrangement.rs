//! Distribution function ν(x) = |{ξ : Re ψ(ξ) ≤ x}|, its right-continuous
//! generalized inverse (the increasing rearrangement of Re ψ), and the
//! Laplace form of p_t(0).
//!
//! Isotropic models with a nondecreasing profile use the sublevel ball,
//! ν(x) = V_n r(x)^n. Everything else (dim ≤ 2) counts cells of a uniform
//! lattice; when the sublevel set reaches the lattice boundary ν is reported
//! as +∞.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponent::{eval_re_psi, profile_inverse};
use crate::model::ModelSpec;
use crate::par;
use crate::quad::{integrate_singular_left, integrate_to_infinity, Tolerance};
use crate::specfun::ball_volume;

/// Lower end of the logarithmic x-node range.
pub const X_MIN: f64 = 1e-3;
pub const DEFAULT_NODES: usize = 64;
pub const CELLS_1D: usize = 1 << 18;
pub const CELLS_2D: usize = 1024;
/// Hard limit on lattice cells.
pub const GRID_CAP: usize = 1 << 24;
const MAX_BOX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RadialBisection,
    GridCount,
}

#[derive(Debug, Clone)]
enum Source {
    Radial(ModelSpec),
    Grid {
        /// Re ψ at every cell centre, ascending.
        sorted: Vec<f64>,
        cell_volume: f64,
        /// Smallest Re ψ on the outer cell layer or the probed shell beyond
        /// it; ν = +∞ from here on.
        boundary_min: f64,
    },
}

fn finite_or_inf<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    // JSON has no infinity; the sentinel is written as null
    let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
    opt.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct RearrangementTable {
    pub method: Method,
    pub dim: usize,
    pub x_nodes: Vec<f64>,
    #[serde(serialize_with = "finite_or_inf")]
    pub nu_values: Vec<f64>,
    /// ± one boundary layer of cells (zero for the radial method).
    pub nu_error: Vec<f64>,
    pub cell_size: Option<f64>,
    /// Half-width of the counting box.
    pub box_half_width: Option<f64>,
    #[serde(skip)]
    source: Source,
}

/// Re ψ at |ξ| = r along the first axis.
fn ray(model: &ModelSpec, r: f64) -> Result<f64> {
    let mut xi = vec![0.0; model.dim];
    xi[0] = r;
    eval_re_psi(model, &xi)
}

/// True when the model is isotropic and Re ψ is nondecreasing along a ray,
/// sampled at |ξ| = 2^{k/4}, k ∈ [−80, 160].
pub fn radial_monotone(model: &ModelSpec) -> Result<bool> {
    if !model.isotropic {
        return Ok(false);
    }
    let radii: Vec<f64> = (-80..=160).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
    let vals: Vec<f64> = par::map(&radii, |&r| ray(model, r)).into_iter().collect::<Result<_>>()?;
    Ok(vals.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1e-300)))
}

fn log_nodes(x_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![x_max];
    }
    let (a, b) = (X_MIN.ln(), x_max.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Centres of a uniform lattice of `cells` per axis on [−b, b]^dim.
fn lattice(dim: usize, b: f64, cells: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * b / cells as f64;
    let c = |i: usize| -b + h * (i as f64 + 0.5);
    match dim {
        1 => (0..cells).map(|i| vec![c(i)]).collect(),
        _ => (0..cells * cells).map(|k| vec![c(k % cells), c(k / cells)]).collect(),
    }
}

/// Smallest Re ψ on the shell [−4b, 4b]^dim ∖ (−b, b)^dim, sampled on nested
/// squares (points in one dimension).
fn shell_probe(model: &ModelSpec, b: f64) -> Result<f64> {
    let m = 4096;
    let mut pts: Vec<Vec<f64>> = Vec::new();
    match model.dim {
        1 => {
            for i in 0..=m {
                let s = b * (1.0 + 3.0 * i as f64 / m as f64);
                pts.push(vec![s]);
                pts.push(vec![-s]);
            }
        }
        _ => {
            for layer in 0..8 {
                let c = b * (1.0 + 3.0 * layer as f64 / 7.0);
                for i in 0..m {
                    let s = -c + 2.0 * c * i as f64 / m as f64;
                    pts.push(vec![s, -c]);
                    pts.push(vec![s, c]);
                    pts.push(vec![-c, s]);
                    pts.push(vec![c, s]);
                }
            }
        }
    }
    let vals: Vec<Result<f64>> = par::map(&pts, |p| eval_re_psi(model, p));
    let mut lowest = f64::INFINITY;
    for v in vals {
        lowest = lowest.min(v?);
    }
    Ok(lowest)
}

impl RearrangementTable {
    /// Table on logarithmic nodes over [X_MIN, x_max].
    pub fn build(model: &ModelSpec, x_max: f64, nodes: usize) -> Result<Self> {
        let cells = if model.dim == 1 { CELLS_1D } else { CELLS_2D };
        Self::build_with(model, x_max, nodes, cells)
    }

    pub fn build_with(model: &ModelSpec, x_max: f64, nodes: usize, cells: usize) -> Result<Self> {
        if !(x_max > X_MIN) || nodes == 0 {
            return Err(Error::Domain(format!("table range must exceed {X_MIN}, got {x_max}")));
        }
        let x_nodes = log_nodes(x_max, nodes);
        if radial_monotone(model)? {
            let mut t = RearrangementTable {
                method: Method::RadialBisection,
                dim: model.dim,
                x_nodes: x_nodes.clone(),
                nu_values: Vec::new(),
                nu_error: vec![0.0; nodes],
                cell_size: None,
                box_half_width: None,
                source: Source::Radial(model.clone()),
            };
            t.nu_values = par::map(&x_nodes, |&x| t.nu(x)).into_iter().collect::<Result<_>>()?;
            return Ok(t);
        }
        if model.dim > 2 {
            return Err(Error::Domain(
                "sublevel measures of non-isotropic or non-monotone exponents need dim <= 2".into(),
            ));
        }
        let total = cells.checked_pow(model.dim as u32).unwrap_or(usize::MAX);
        if total > GRID_CAP {
            return Err(Error::GridCap { cap: GRID_CAP });
        }
        // grow the box until the largest sublevel set sits strictly inside
        let mut b = 1.0;
        let mut escape = shell_probe(model, b)?;
        while escape <= x_max && b < MAX_BOX {
            b *= 2.0;
            escape = shell_probe(model, b)?;
        }
        let pts = lattice(model.dim, b, cells);
        let vals: Vec<f64> = par::map(&pts, |p| eval_re_psi(model, p)).into_iter().collect::<Result<_>>()?;
        let h = 2.0 * b / cells as f64;
        let cell_volume = h.powi(model.dim as i32);
        let outer = |k: usize| match model.dim {
            1 => k == 0 || k == cells - 1,
            _ => {
                let (i, j) = (k % cells, k / cells);
                i == 0 || j == 0 || i == cells - 1 || j == cells - 1
            }
        };
        let boundary_min = (0..vals.len())
            .filter(|&k| outer(k))
            .map(|k| vals[k])
            .fold(escape, f64::min);
        let nu_error = par::map(&x_nodes, |&x| boundary_layer(&vals, model.dim, cells, x) as f64 * cell_volume);
        let mut sorted = vals;
        sorted.sort_by(f64::total_cmp);
        let mut t = RearrangementTable {
            method: Method::GridCount,
            dim: model.dim,
            x_nodes: x_nodes.clone(),
            nu_values: Vec::new(),
            nu_error,
            cell_size: Some(h),
            box_half_width: Some(b),
            source: Source::Grid {
                sorted,
                cell_volume,
                boundary_min,
            },
        };
        t.nu_values = x_nodes.iter().map(|&x| t.nu(x)).collect::<Result<_>>()?;
        Ok(t)
    }

    /// ν(x); +∞ once the sublevel set touches the counting box.
    pub fn nu(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("level must be nonnegative, got {x}")));
        }
        match &self.source {
            Source::Radial(model) => {
                let s = profile_inverse(model, x, false)?;
                Ok(ball_volume(self.dim) * s.powf(0.5 * self.dim as f64))
            }
            Source::Grid {
                sorted,
                cell_volume,
                boundary_min,
            } => {
                if x >= *boundary_min {
                    return Ok(f64::INFINITY);
                }
                Ok(sorted.partition_point(|&v| v <= x) as f64 * cell_volume)
            }
        }
    }

    /// inf{x : ν(x) ≥ s}.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("measure must be nonnegative, got {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        match &self.source {
            // for a continuous nondecreasing profile the infimum is attained at
            // the ball of volume s
            Source::Radial(model) => ray(model, (s / ball_volume(self.dim)).powf(1.0 / self.dim as f64)),
            Source::Grid {
                sorted,
                cell_volume,
                boundary_min,
            } => {
                // ν jumps to +∞ at boundary_min, so larger s all map there
                let k = (s / cell_volume).ceil() as usize;
                let inside = sorted.partition_point(|&v| v < *boundary_min);
                if k > inside {
                    return Ok(*boundary_min);
                }
                Ok(sorted[k - 1])
            }
        }
    }

    /// u*(s) = exp(−t ν^{-1}(s)), the decreasing rearrangement of e^{−t Re ψ}.
    pub fn u_star(&self, t: f64, s: f64) -> Result<f64> {
        Ok((-t * self.inverse(s)?).exp())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# method={:?}", self.method);
        let _ = writeln!(out, "# dim={}", self.dim);
        if let Some(h) = self.cell_size {
            let _ = writeln!(out, "# cell_size={h:e}");
        }
        out.push_str("x,nu,nu_error\n");
        for ((x, v), e) in self.x_nodes.iter().zip(&self.nu_values).zip(&self.nu_error) {
            let _ = writeln!(out, "{x:.12e},{v:.12e},{e:.3e}");
        }
        out
    }
}

/// Cells in the sublevel set with a neighbour outside it.
fn boundary_layer(vals: &[f64], dim: usize, cells: usize, x: f64) -> usize {
    let inside = |k: usize| vals[k] <= x;
    let mut count = 0;
    for k in 0..vals.len() {
        if !inside(k) {
            continue;
        }
        let edge = match dim {
            1 => (k > 0 && !inside(k - 1)) || (k + 1 < cells && !inside(k + 1)),
            _ => {
                let (i, j) = (k % cells, k / cells);
                (i > 0 && !inside(k - 1))
                    || (i + 1 < cells && !inside(k + 1))
                    || (j > 0 && !inside(k - cells))
                    || (j + 1 < cells && !inside(k + cells))
            }
        };
        count += edge as usize;
    }
    count
}

pub fn nu_dist(model: &ModelSpec, x: f64) -> Result<f64> {
    RearrangementTable::build(model, x.max(2.0 * X_MIN), 1)?.nu(x)
}

pub fn nu_inverse(model: &ModelSpec, s: f64) -> Result<f64> {
    let table = if radial_monotone(model)? {
        RearrangementTable::build(model, 1.0, 1)?
    } else {
        // enough range that the inverse at s is inside the box
        let mut x_max = 1.0;
        loop {
            let t = RearrangementTable::build(model, x_max, 1)?;
            if t.nu(x_max)? >= s || x_max > 1e6 {
                break t;
            }
            x_max *= 4.0;
        }
    };
    table.inverse(s)
}

pub fn u_star(model: &ModelSpec, t: f64, s: f64) -> Result<f64> {
    Ok((-t * nu_inverse(model, s)?).exp())
}

/// t (2π)^{-n} ∫_0^∞ ν(x) e^{-tx} dx.
pub fn pt0_laplace(model: &ModelSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let n = model.dim as i32;
    let norm = (2.0 * PI).powi(-n);
    if radial_monotone(model)? {
        let table = RearrangementTable::build(model, 1.0, 1)?;
        // x = y/t
        let f = |y: f64| {
            if y > 745.0 {
                return 0.0;
            }
            match table.nu(y / t) {
                Ok(v) => v * (-y).exp(),
                // level beyond |ξ|² = 2^1000: dropped, see README
                Err(Error::OutOfRange(_)) => 0.0,
                Err(_) => f64::NAN,
            }
        };
        let tol = Tolerance::new(1e-300, 1e-12);
        let a = integrate_singular_left(f, 0.0, 1.0, tol);
        let b = integrate_to_infinity(f, 1.0, 1.0, tol);
        if !(a.converged && b.converged) || !(a.value + b.value).is_finite() {
            return Err(Error::quad("Laplace integral of the distribution function", a.abs_error + b.abs_error));
        }
        return Ok(norm * (a.value + b.value));
    }
    // lattice: ν is a step function, so t∫ν e^{-tx} = Σ_cells vol·e^{-t v}
    let x_max = 40.0 / t;
    let table = RearrangementTable::build(model, x_max, 1)?;
    match &table.source {
        Source::Grid {
            sorted,
            cell_volume,
            boundary_min,
        } => {
            if t * boundary_min < 35.0 {
                return Err(Error::WindowInsufficient {
                    t,
                    xi: table.box_half_width.unwrap_or(f64::NAN),
                    amplitude: (-t * boundary_min).exp(),
                });
            }
            let s: f64 = sorted.iter().map(|v| (-t * v).exp()).sum();
            Ok(norm * s * cell_volume)
        }
        Source::Radial(_) => unreachable!("radial tables are handled above"),
    }
}

/// One threshold level of the equimeasurability check.
#[derive(Debug, Clone, Serialize)]
pub struct LevelCheck {
    pub level: f64,
    /// |{ξ : e^{-t Re ψ(ξ)} > level}| by lattice count.
    pub lattice: f64,
    /// |{s : u*(s) > level}| by summation over an s-grid.
    pub rearranged: f64,
    pub resolution: f64,
}

/// Compares superlevel measures of e^{-t Re ψ} and of its rearrangement u*
/// at `levels` thresholds in (0, 1), for one-dimensional models.
pub fn equimeasurability(model: &ModelSpec, t: f64, levels: usize) -> Result<Vec<LevelCheck>> {
    if model.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: model.dim });
    }
    let thresholds: Vec<f64> = (1..=levels).map(|i| i as f64 / (levels + 1) as f64).collect();
    let x_top = -thresholds[0].ln() / t;
    let table = RearrangementTable::build(model, x_top * 1.01, 1)?;
    let s_max = table.nu(x_top)?;
    if !s_max.is_finite() {
        return Err(Error::OutOfRange(format!("sublevel set at level {x_top}")));
    }
    // ξ-lattice, independent of the table
    let b = 0.5 * s_max.max(1e-6) * 1.5 + 1.0;
    let cells = 1 << 18;
    let h = 2.0 * b / cells as f64;
    let xs: Vec<f64> = (0..cells).map(|i| -b + h * (i as f64 + 0.5)).collect();
    let amp: Vec<f64> = par::map(&xs, |&x| eval_re_psi(model, &[x]).map(|v| (-t * v).exp()))
        .into_iter()
        .collect::<Result<_>>()?;
    let ds = s_max * 1.5 / cells as f64;
    let ss: Vec<f64> = (0..cells).map(|i| ds * (i as f64 + 0.5)).collect();
    let us: Vec<f64> = par::map(&ss, |&s| table.u_star(t, s)).into_iter().collect::<Result<_>>()?;
    Ok(thresholds
        .iter()
        .map(|&lv| {
            let lattice = amp.iter().filter(|&&a| a > lv).count() as f64 * h;
            let rearranged = us.iter().filter(|&&u| u > lv).count() as f64 * ds;
            let crossings = amp.windows(2).filter(|w| (w[0] > lv) != (w[1] > lv)).count().max(2);
            LevelCheck {
                level: lv,
                lattice,
                rearranged,
                resolution: crossings as f64 * h + ds,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_relative_eq;

    #[test]
    fn distribution_examples() {
        assert_relative_eq!(nu_dist(&library::gaussian(1), 4.0).unwrap(), 4.0, max_relative = 1e-12);
        assert_relative_eq!(nu_dist(&library::stable(1, 1.0), 3.0).unwrap(), 6.0, max_relative = 1e-12);
        assert_relative_eq!(nu_dist(&library::stable(2, 1.0), 2.0).unwrap(), 4.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(nu_inverse(&library::gaussian(1), 4.0).unwrap(), 4.0, max_relative = 1e-12);
        assert_relative_eq!(nu_inverse(&library::stable(1, 1.0), 6.0).unwrap(), 3.0, max_relative = 1e-12);
        assert_eq!(u_star(&library::gaussian(1), 1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(u_star(&library::stable(1, 1.0), 2.0, 6.0).unwrap(), (-6f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn laplace_form() {
        assert_relative_eq!(pt0_laplace(&library::gaussian(1), 1.0).unwrap(), 0.5 / PI.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(pt0_laplace(&library::stable(1, 1.0), 1.0).unwrap(), 1.0 / PI, max_relative = 1e-9);
    }

    #[test]
    fn periodic_atoms_use_the_lattice() {
        let m = library::compound_poisson(1, 1.0, 1.0);
        let t = RearrangementTable::build(&m, 1.0, 4).unwrap();
        assert_eq!(t.method, Method::GridCount);
        // 1 − cos ξ ≤ 1 holds on half of every period, so the box is outgrown
        assert!(t.nu_values[3].is_infinite());
    }
}
