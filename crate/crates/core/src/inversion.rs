//! Fourier inversion p_t(x) = (2π)^{-n} ∫ e^{-tψ(ξ)} e^{-ix·ξ} dξ.
//!
//! The ξ-integral is taken with composite 16-point Gauss–Legendre panels of
//! width at most π/x_max on [0, Ξ], geometrically graded towards ξ = 0. The
//! window Ξ comes from a doubling ladder on which e^{-t Re ψ} must drop below
//! 1e-14. When the ladder does not get there, a slope test on the log-mass of
//! dyadic shells decides between refusing and adding per-point tails
//! (Wynn-accelerated half-period panels, or a log-substituted tail at x = 0).

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{eval_psi, eval_psi_turns, eval_re_psi};
use crate::model::ModelSpec;
use crate::par;
use crate::quad::{self, gauss_kronrod, gl16, integrate_singular_left, integrate_to_infinity, Tolerance};
use crate::radial::Kernel;
use crate::specfun::{ball_volume, bessel_k, gamma_fn, sphere_area};

/// Amplitude below which the integrand is treated as negligible.
pub const WINDOW_FLOOR: f64 = 1e-14;
const LADDER_MIN: i32 = -30;
const LADDER_MAX: i32 = 40;
/// Ladder points past the first sub-floor point that must stay below it.
const CONFIRM: i32 = 3;
const PROBE_WIDTH: i32 = 8;
const SLOPE_MARGIN: f64 = 0.02;
const PANEL_CAP: f64 = 2048.0;
const GRADING_LEVELS: i32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    Integrable,
    NotIntegrable,
    Inconclusive,
}

/// Outcome of the dyadic-shell test for ∫ e^{-t Re ψ} < ∞.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityProbe {
    pub t: f64,
    /// Ladder exponents k (|ξ| = 2^k) and log-masses n·k·ln 2 − t·min Re ψ.
    pub k: Vec<i32>,
    pub log_mass: Vec<f64>,
    /// Least-squares slope of the trailing log-masses against ln |ξ|.
    pub slope: f64,
    pub verdict: Integrability,
    /// First ladder point beyond which the amplitude stays below the floor.
    pub window: Option<f64>,
}

/// The integrand w(ξ)·e^{-tψ(ξ)}, with w = (Re φ)^m for multipliers.
#[derive(Clone, Copy)]
pub(crate) struct Symbol<'a> {
    pub model: &'a ModelSpec,
    pub t: f64,
    pub weight: Option<(&'a ModelSpec, u32)>,
}

impl<'a> Symbol<'a> {
    pub fn new(model: &'a ModelSpec, t: f64) -> Self {
        Symbol { model, t, weight: None }
    }

    fn weight_at(&self, xi: &[f64]) -> Result<f64> {
        match self.weight {
            None => Ok(1.0),
            Some((phi, m)) => Ok(eval_re_psi(phi, xi)?.powi(m as i32)),
        }
    }

    pub fn value(&self, xi: &[f64]) -> Result<Complex64> {
        let psi = eval_psi(self.model, xi)?;
        let w = self.weight_at(xi)?;
        let amp = (-self.t * psi.re).exp() * w;
        let phase = -self.t * psi.im;
        Ok(Complex64::new(amp * phase.cos(), amp * phase.sin()))
    }

    fn radial(&self, r: f64) -> Result<f64> {
        let mut xi = vec![0.0; self.model.dim];
        xi[0] = r;
        Ok(self.value(&xi)?.re)
    }

    fn log_amplitude(&self, xi: &[f64], turns: bool) -> Result<f64> {
        let re = if turns {
            eval_psi_turns(self.model, xi)?.re.max(0.0)
        } else {
            eval_re_psi(self.model, xi)?
        };
        let w = if turns {
            let scaled: Vec<f64> = xi.iter().map(|v| 2.0 * PI * v).collect();
            self.weight_at(&scaled)?
        } else {
            self.weight_at(xi)?
        };
        Ok((w.ln() - self.t * re).max(-1e6))
    }
}

/// Probe directions: one ray for isotropic models, axes and diagonals otherwise.
pub(crate) fn directions(model: &ModelSpec) -> Vec<Vec<f64>> {
    let n = model.dim;
    if model.isotropic || n == 1 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return vec![e];
    }
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    // sign patterns with first component +1 (±ξ give the same Re ψ)
    for mask in 0..(1u32 << (n - 1)) {
        let norm = (n as f64).sqrt();
        let mut e = vec![1.0 / norm; n];
        for (i, v) in e.iter_mut().enumerate().skip(1) {
            if mask & (1 << (i - 1)) != 0 {
                *v = -*v;
            }
        }
        dirs.push(e);
    }
    dirs
}

/// Largest log-amplitude at radius 2^k over the probe directions, on both
/// the 2^k and 2π·2^k lattices.
fn shell_log_amplitude(sym: &Symbol, dirs: &[Vec<f64>], k: i32) -> Result<f64> {
    let r = 2f64.powi(k);
    let mut best = f64::NEG_INFINITY;
    for d in dirs {
        let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
        best = best.max(sym.log_amplitude(&xi, false)?);
        best = best.max(sym.log_amplitude(&xi, true)?);
    }
    Ok(best)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

pub(crate) fn probe_symbol(sym: &Symbol) -> Result<IntegrabilityProbe> {
    let dirs = directions(sym.model);
    let n = sym.model.dim as f64;
    let floor = WINDOW_FLOOR.ln();
    let mut ks = Vec::new();
    let mut log_mass = Vec::new();
    let mut amps = Vec::new();
    let mut window = None;
    // a weighted integrand starts below the floor near ξ = 0
    let mut risen = false;
    let mut k = LADDER_MIN;
    while k <= LADDER_MAX {
        let la = shell_log_amplitude(sym, &dirs, k)?;
        ks.push(k);
        amps.push(la);
        log_mass.push(n * k as f64 * 2f64.ln() + la);
        let m = amps.len();
        risen |= la >= floor;
        if risen && m > CONFIRM as usize && amps[m - 1 - CONFIRM as usize..].iter().all(|&a| a < floor) {
            window = Some(2f64.powi(k - CONFIRM));
            break;
        }
        k += 1;
    }
    let tail = ks.len().saturating_sub(PROBE_WIDTH as usize);
    let xs: Vec<f64> = ks[tail..].iter().map(|&k| k as f64 * 2f64.ln()).collect();
    let s = slope(&xs, &log_mass[tail..]);
    let verdict = if window.is_some() || s < -SLOPE_MARGIN {
        Integrability::Integrable
    } else if s > SLOPE_MARGIN {
        Integrability::NotIntegrable
    } else {
        Integrability::Inconclusive
    };
    Ok(IntegrabilityProbe {
        t: sym.t,
        k: ks,
        log_mass,
        slope: s,
        verdict,
        window,
    })
}

/// Decides whether e^{-tψ} is integrable, by the window ladder and slope test.
pub fn integrability_probe(model: &ModelSpec, t: f64) -> Result<IntegrabilityProbe> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    probe_symbol(&Symbol::new(model, t))
}

/// Effective window: finite Ξ, or infinity when tails are required.
struct Window {
    xi: f64,
    /// Radius where the amplitude first drops below e^{-1}; sets panel width.
    scale: f64,
}

fn window_for(sym: &Symbol) -> Result<Window> {
    let probe = probe_symbol(sym)?;
    let xi = match (probe.window, probe.verdict) {
        (Some(w), _) => w,
        (None, Integrability::Integrable) => f64::INFINITY,
        (None, Integrability::NotIntegrable) => {
            return Err(Error::NonIntegrable {
                t: sym.t,
                slope: probe.slope,
            })
        }
        (None, Integrability::Inconclusive) => {
            let last = *probe.log_mass.last().expect("ladder nonempty");
            let k = *probe.k.last().expect("ladder nonempty");
            return Err(Error::WindowInsufficient {
                t: sym.t,
                xi: 2f64.powi(k),
                amplitude: (last - sym.model.dim as f64 * k as f64 * 2f64.ln()).exp(),
            });
        }
    };
    let n = sym.model.dim as f64;
    let amps: Vec<f64> = probe
        .k
        .iter()
        .zip(&probe.log_mass)
        .map(|(&k, &lm)| lm - n * k as f64 * 2f64.ln())
        .collect();
    let peak = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let top = amps.iter().position(|&a| a == peak).unwrap_or(0);
    let scale = (top..amps.len())
        .find(|&i| amps[i] < peak - 1.0)
        .map(|i| 2f64.powi(probe.k[i]))
        .unwrap_or(1.0);
    Ok(Window { xi, scale })
}

struct Layout {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Nodes before this index lie in the graded first panel [0, h]; the
    /// rest form uniform panels [p·h, (p+1)·h], p ≥ 1, sixteen nodes each.
    graded: usize,
    h: f64,
    /// End of the node range; tails start here when needed.
    cut: f64,
    tails: bool,
}

fn layout(win: &Window, extent: f64, levels: i32, min_panels: f64) -> Layout {
    let mut h = (win.scale / 16.0).min(win.xi / min_panels);
    if extent > 0.0 {
        h = h.min(PI / extent);
    }
    let panels = (win.xi.min(h * PANEL_CAP) / h).ceil().max(1.0);
    let cut = panels * h;
    let mut breaks = vec![0.0];
    for k in (0..levels).rev() {
        breaks.push(h * 2f64.powi(-k - 1));
    }
    breaks.push(h);
    let (mut nodes, mut weights) = quad::composite_nodes(&breaks);
    let graded = nodes.len();
    let (x, w) = gl16();
    for p in 1..panels as usize {
        let base = p as f64 * h;
        for k in 0..16 {
            nodes.push(base + 0.5 * h * (1.0 + x[k]));
            weights.push(0.5 * h * w[k]);
        }
    }
    Layout {
        nodes,
        weights,
        graded,
        h,
        cut,
        tails: cut < win.xi,
    }
}

/// Σ_k w_k (P_k e^{-ixξ_k} + M_k e^{ixξ_k}); uniform panels reuse phases by rotation.
fn fourier_sum(lay: &Layout, plus: &[Complex64], minus: &[Complex64], x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..lay.graded {
        let e = Complex64::from_polar(1.0, -x * lay.nodes[k]);
        acc += lay.weights[k] * (plus[k] * e + minus[k] * e.conj());
    }
    let (gx, _) = gl16();
    let offsets: Vec<Complex64> = gx
        .iter()
        .map(|v| Complex64::from_polar(1.0, -x * 0.5 * lay.h * (1.0 + v)))
        .collect();
    let step = Complex64::from_polar(1.0, -x * lay.h);
    let panels = (lay.nodes.len() - lay.graded) / 16;
    let mut rot = step;
    for p in 0..panels {
        if p % 64 == 0 {
            rot = Complex64::from_polar(1.0, -x * (p + 1) as f64 * lay.h);
        }
        let mut part = Complex64::new(0.0, 0.0);
        let i0 = lay.graded + 16 * p;
        for q in 0..16 {
            let e = rot * offsets[q];
            part += lay.weights[i0 + q] * (plus[i0 + q] * e + minus[i0 + q] * e.conj());
        }
        acc += part;
        rot *= step;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Axis { start, stop, count }
    }

    /// Axis from start:stop:step, snapping the count to the nearest integer.
    pub fn with_step(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::Domain(format!("bad grid {start}:{stop}:{step}")));
        }
        let count = ((stop - start) / step).round() as usize + 1;
        Ok(Axis { start, stop, count })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.count)
            .map(|i| self.start + span * i as f64 / (self.count - 1) as f64)
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.start.abs().max(self.stop.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    Line { x: Axis },
    /// Values stored row by row: index = j·nx + i for (x_i, y_j).
    Plane { x: Axis, y: Axis },
    Radial { r: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub t: f64,
    /// Probability of the region covered by the grid, computed spectrally.
    pub mass: f64,
    /// Region used for `mass`.
    pub mass_region: String,
    /// Estimated truncation and quadrature error of the ξ-integral.
    pub tail_bound: f64,
    /// Largest imaginary part seen before taking the real part.
    pub imag_residue: f64,
    /// ξ-window actually covered by nodes, and whether tails were added.
    pub window: f64,
    pub tails: bool,
}

impl DensityField {
    /// CSV with a `#key=value` metadata block; `meta` is appended after the
    /// built-in keys.
    pub fn to_csv(&self, model_hash: &str, meta: &[(String, String)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#t={}", self.t);
        let _ = writeln!(out, "#model_hash={model_hash}");
        let _ = writeln!(out, "#tail_bound={:e}", self.tail_bound);
        let _ = writeln!(out, "#mass={}", self.mass);
        let _ = writeln!(out, "#mass_region={}", self.mass_region);
        let _ = writeln!(out, "#window={:e}", self.window);
        for (k, v) in meta {
            let _ = writeln!(out, "#{k}={v}");
        }
        match &self.grid {
            Grid::Line { x } => {
                out.push_str("x,p\n");
                for (x, p) in x.points().iter().zip(&self.values) {
                    let _ = writeln!(out, "{},{p:.15e}", coord(*x));
                }
            }
            Grid::Plane { x, y } => {
                out.push_str("x,y,p\n");
                let xs = x.points();
                for (j, yv) in y.points().iter().enumerate() {
                    for (i, xv) in xs.iter().enumerate() {
                        let p = self.values[j * xs.len() + i];
                        let _ = writeln!(out, "{},{},{p:.15e}", coord(*xv), coord(*yv));
                    }
                }
            }
            Grid::Radial { r } => {
                out.push_str("r,p\n");
                for (r, p) in r.iter().zip(&self.values) {
                    let _ = writeln!(out, "{},{p:.15e}", coord(*r));
                }
            }
        }
        out
    }
}

/// Grid coordinate rounded to 12 significant digits, so that 0 prints as 0.
fn coord(x: f64) -> f64 {
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r.abs() < 1e-12 { 0.0 } else { r }
}

fn tail_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-10)
}

/// (1/π) Re ∫_a^∞ E(ξ)·S(ξ) dξ for an oscillation S with half-period `hp`.
fn oscillatory_line_tail<F: Fn(f64) -> f64>(f: F, a: f64, hp: f64) -> quad::QuadResult {
    let z0 = (a / hp).ceil() * hp;
    let mut head = if z0 > a {
        gauss_kronrod(&f, a, z0, tail_tol(), 100)
    } else {
        gauss_kronrod(&f, a, a, tail_tol(), 1)
    };
    let rest = quad::oscillatory_tail(&f, z0.max(a), hp, tail_tol(), 2000);
    head.value += rest.value;
    head.abs_error += rest.abs_error;
    head.converged &= rest.converged;
    head
}

/// Per-point density in one dimension from precomputed node values.
fn line_values(
    sym: &Symbol,
    xs: &[f64],
    lay: &Layout,
    plus: &[Complex64],
    minus: &[Complex64],
) -> Result<(Vec<f64>, f64, f64)> {
    let results: Vec<Result<(f64, f64, f64)>> = par::map(xs, |&x| {
        let acc = fourier_sum(lay, plus, minus, x);
        let mut value = acc.re / (2.0 * PI);
        let residue = (acc.im / (2.0 * PI)).abs();
        let mut err = 0.0;
        if lay.tails {
            let f = |xi: f64| {
                let v = sym.value(&[xi]).unwrap_or(Complex64::new(f64::NAN, 0.0));
                (v * Complex64::from_polar(1.0, -x * xi)).re / PI
            };
            let q = if x == 0.0 {
                integrate_to_infinity(f, lay.cut, lay.cut, tail_tol())
            } else {
                oscillatory_line_tail(f, lay.cut, PI / x.abs())
            };
            if !q.converged || !q.value.is_finite() {
                return Err(Error::quad(format!("oscillatory tail at x={x}"), q.abs_error));
            }
            value += q.value;
            err += q.abs_error;
        }
        Ok((value, residue, err))
    });
    let mut values = Vec::with_capacity(xs.len());
    let mut residue = 0.0f64;
    let mut err = 0.0f64;
    for r in results {
        let (v, i, e) = r?;
        values.push(v);
        residue = residue.max(i);
        err = err.max(e);
    }
    Ok((values, residue, err))
}

/// Mass of [a, b] as (1/2π)∫ E(ξ) ∫_a^b e^{-ixξ} dx dξ.
fn line_mass(sym: &Symbol, a: f64, b: f64, lay: &Layout, plus: &[Complex64], minus: &[Complex64]) -> Result<f64> {
    let c = 0.5 * (a + b);
    let d = 0.5 * (b - a);
    let window = |xi: f64| {
        let s = if xi == 0.0 { 2.0 * d } else { 2.0 * (d * xi).sin() / xi };
        Complex64::from_polar(s, -c * xi)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..lay.nodes.len() {
        let s = window(lay.nodes[k]);
        acc += lay.weights[k] * (plus[k] * s + minus[k] * s.conj());
    }
    let mut mass = acc.re / (2.0 * PI);
    if lay.tails && d > 0.0 {
        let f = |xi: f64| (sym.value(&[xi]).unwrap_or(Complex64::new(f64::NAN, 0.0)) * window(xi)).re / PI;
        let hp = PI / (d + c.abs());
        mass += oscillatory_line_tail(f, lay.cut, hp).value;
    }
    Ok(mass)
}

fn node_values(sym: &Symbol, nodes: &[f64], sign: f64) -> Result<Vec<Complex64>> {
    par::map(nodes, |&xi| sym.value(&[sign * xi])).into_iter().collect()
}

fn invert_line(sym: &Symbol, x: &Axis) -> Result<DensityField> {
    let win = window_for(sym)?;
    let xs = x.points();
    let lay = layout(&win, x.max_abs(), GRADING_LEVELS, 64.0);
    let plus = node_values(sym, &lay.nodes, 1.0)?;
    let symmetric = sym.model.is_symmetric();
    let minus = if symmetric {
        plus.clone()
    } else {
        node_values(sym, &lay.nodes, -1.0)?
    };
    let (values, residue, tail_err) = line_values(sym, &xs, &lay, &plus, &minus)?;
    let mass = line_mass(sym, x.start, x.stop, &lay, &plus, &minus)?;
    let tail_bound = if lay.tails {
        tail_err
    } else {
        let last = plus.last().map(|v| v.norm()).unwrap_or(0.0);
        last * lay.cut / PI
    };
    Ok(DensityField {
        grid: Grid::Line { x: x.clone() },
        values,
        t: sym.t,
        mass,
        mass_region: format!("[{}, {}]", x.start, x.stop),
        tail_bound,
        imag_residue: residue,
        window: lay.cut,
        tails: lay.tails,
    })
}

/// Radial transform c·∫_0^∞ E(r) r^{n−1} K(rρ) dr at each ρ, with per-ρ tails.
fn radial_transform(
    sym: &Symbol,
    lay: &Layout,
    e: &[f64],
    kernel: Kernel,
    rhos: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = sym.model.dim as i32;
    let res: Vec<Result<(f64, f64)>> = par::map(rhos, |&rho| {
        let mut acc = quad::KahanSum::default();
        for k in 0..lay.nodes.len() {
            let r = lay.nodes[k];
            acc.add(lay.weights[k] * e[k] * r.powi(n - 1) * kernel.value(r * rho));
        }
        let mut value = acc.value();
        let mut err = 0.0;
        if lay.tails {
            let f = |r: f64| sym.radial(r).unwrap_or(f64::NAN) * r.powi(n - 1) * kernel.value(r * rho);
            let q = if rho == 0.0 {
                integrate_to_infinity(f, lay.cut, lay.cut, tail_tol())
            } else {
                let z0 = kernel.next_zero(rho * lay.cut) / rho;
                let mut head = gauss_kronrod(&f, lay.cut, z0.max(lay.cut), tail_tol(), 100);
                let rest = quad::oscillatory_tail(&f, z0.max(lay.cut), PI / rho, tail_tol(), 2000);
                head.value += rest.value;
                head.abs_error += rest.abs_error;
                head.converged &= rest.converged;
                head
            };
            if !q.converged || !q.value.is_finite() {
                return Err(Error::quad(format!("radial tail at |x|={rho}"), q.abs_error));
            }
            value += q.value;
            err = q.abs_error;
        }
        Ok((value, err))
    });
    let mut out = Vec::with_capacity(rhos.len());
    let mut err = 0.0f64;
    for r in res {
        let (v, e) = r?;
        out.push(v);
        err = err.max(e);
    }
    Ok((out, err))
}

struct RadialRun {
    values: Vec<f64>,
    mass: f64,
    tail_bound: f64,
    window: f64,
    tails: bool,
}

fn radial_run(sym: &Symbol, rhos: &[f64], ball: f64) -> Result<RadialRun> {
    let n = sym.model.dim;
    let win = window_for(sym)?;
    let extent = rhos.iter().fold(ball, |m, r| m.max(r.abs()));
    let lay = layout(&win, extent, GRADING_LEVELS, 64.0);
    let e: Vec<f64> = par::map(&lay.nodes, |&r| sym.radial(r)).into_iter().collect::<Result<_>>()?;
    let norm = sphere_area(n) / (2.0 * PI).powi(n as i32);
    let (raw, err) = radial_transform(sym, &lay, &e, Kernel::for_dim(n), rhos)?;
    let values: Vec<f64> = raw.iter().map(|v| v * norm).collect();
    let mass = if ball > 0.0 {
        let (m, _) = radial_transform(sym, &lay, &e, Kernel::H(0.5 * n as f64), &[ball])?;
        m[0] * norm * ball_volume(n) * ball.powi(n as i32)
    } else {
        0.0
    };
    let tail_bound = if lay.tails {
        err * norm
    } else {
        e.last().copied().unwrap_or(0.0).abs() * lay.cut.powi(n as i32) * norm
    };
    Ok(RadialRun {
        values,
        mass,
        tail_bound,
        window: lay.cut,
        tails: lay.tails,
    })
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// p_t at the radii |x| = r_i for an isotropic model in any dimension.
pub fn invert_radial(model: &ModelSpec, t: f64, radii: &[f64]) -> Result<DensityField> {
    check_t(t)?;
    if !model.isotropic {
        return Err(Error::NotIsotropic);
    }
    if radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Domain("radii must be nonnegative".into()));
    }
    let sym = Symbol::new(model, t);
    let ball = radii.iter().cloned().fold(0.0, f64::max);
    let run = radial_run(&sym, radii, ball)?;
    Ok(DensityField {
        grid: Grid::Radial { r: radii.to_vec() },
        values: run.values,
        t,
        mass: run.mass,
        mass_region: format!("|x| <= {ball}"),
        tail_bound: run.tail_bound,
        imag_residue: 0.0,
        window: run.window,
        tails: run.tails,
    })
}

fn invert_plane(sym: &Symbol, x: &Axis, y: &Axis) -> Result<DensityField> {
    let xs = x.points();
    let ys = y.points();
    let inside = x.start <= 0.0 && x.stop >= 0.0 && y.start <= 0.0 && y.stop >= 0.0;
    let ball = if inside {
        (-x.start).min(x.stop).min(-y.start).min(y.stop)
    } else {
        0.0
    };
    if sym.model.isotropic {
        let mut radii: Vec<f64> = Vec::with_capacity(xs.len() * ys.len());
        for &yv in &ys {
            for &xv in &xs {
                radii.push((xv * xv + yv * yv).sqrt());
            }
        }
        let mut unique = radii.clone();
        unique.sort_by(f64::total_cmp);
        unique.dedup();
        let run = radial_run(sym, &unique, ball)?;
        let values = radii
            .iter()
            .map(|r| run.values[unique.partition_point(|u| u < r)])
            .collect();
        return Ok(DensityField {
            grid: Grid::Plane { x: x.clone(), y: y.clone() },
            values,
            t: sym.t,
            mass: run.mass,
            mass_region: format!("|x| <= {ball}"),
            tail_bound: run.tail_bound,
            imag_residue: 0.0,
            window: run.window,
            tails: run.tails,
        });
    }
    if !sym.model.is_symmetric() {
        return Err(Error::Domain("two-dimensional inversion needs a symmetric model".into()));
    }
    let win = window_for(sym)?;
    if !win.xi.is_finite() {
        return Err(Error::WindowInsufficient {
            t: sym.t,
            xi: 2f64.powi(LADDER_MAX),
            amplitude: WINDOW_FLOOR,
        });
    }
    let extent = x.max_abs().max(y.max_abs());
    let lay = layout(&win, extent, 8, 32.0);
    if lay.tails {
        return Err(Error::WindowInsufficient {
            t: sym.t,
            xi: lay.cut,
            amplitude: WINDOW_FLOOR,
        });
    }
    // full-line nodes
    let mut nodes: Vec<f64> = lay.nodes.iter().rev().map(|v| -v).collect();
    nodes.extend(lay.nodes.iter().copied());
    let mut weights: Vec<f64> = lay.weights.iter().rev().copied().collect();
    weights.extend(lay.weights.iter().copied());
    let m = nodes.len();
    let rows: Vec<Result<Vec<f64>>> = par::map(&nodes, |&eta| {
        nodes.iter().map(|&xi| Ok(sym.value(&[xi, eta])?.re)).collect()
    });
    let mut e = Vec::with_capacity(m * m);
    for r in rows {
        e.extend(r?);
    }
    // T[x][j] = Σ_i w_i E(ξ_i, η_j) e^{-ixξ_i}
    let t_rows: Vec<Vec<Complex64>> = par::map(&xs, |&xv| {
        let phases: Vec<Complex64> = nodes.iter().zip(&weights).map(|(&xi, &w)| Complex64::from_polar(w, -xv * xi)).collect();
        (0..m)
            .map(|j| {
                let row = &e[j * m..(j + 1) * m];
                row.iter().zip(&phases).map(|(v, p)| p * v).sum()
            })
            .collect()
    });
    let norm = 1.0 / (4.0 * PI * PI);
    let rows_out: Vec<Vec<f64>> = par::map(&ys, |&yv| {
        let phases: Vec<Complex64> = nodes.iter().zip(&weights).map(|(&eta, &w)| Complex64::from_polar(w, -yv * eta)).collect();
        t_rows
            .iter()
            .map(|tr| tr.iter().zip(&phases).map(|(a, b)| a * b).sum::<Complex64>().re * norm)
            .collect()
    });
    let values: Vec<f64> = rows_out.into_iter().flatten().collect();
    // mass of the rectangle
    let factor = |a: f64, b: f64, xi: f64| {
        let c = 0.5 * (a + b);
        let d = 0.5 * (b - a);
        let s = if xi == 0.0 { 2.0 * d } else { 2.0 * (d * xi).sin() / xi };
        Complex64::from_polar(s, -c * xi)
    };
    let fx: Vec<Complex64> = nodes.iter().zip(&weights).map(|(&v, &w)| w * factor(x.start, x.stop, v)).collect();
    let fy: Vec<Complex64> = nodes.iter().zip(&weights).map(|(&v, &w)| w * factor(y.start, y.stop, v)).collect();
    let mut mass = Complex64::new(0.0, 0.0);
    for j in 0..m {
        for i in 0..m {
            mass += fx[i] * fy[j] * e[j * m + i];
        }
    }
    let edge = e[m - 1].abs().max(e[(m - 1) * m].abs());
    Ok(DensityField {
        grid: Grid::Plane { x: x.clone(), y: y.clone() },
        values,
        t: sym.t,
        mass: mass.re * norm,
        mass_region: format!("[{}, {}] x [{}, {}]", x.start, x.stop, y.start, y.stop),
        tail_bound: edge * lay.cut * lay.cut * norm,
        imag_residue: 0.0,
        window: lay.cut,
        tails: false,
    })
}

fn invert_with(sym: &Symbol, grid: &Grid) -> Result<DensityField> {
    check_t(sym.t)?;
    match grid {
        Grid::Line { x } => {
            if sym.model.dim != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: sym.model.dim,
                });
            }
            invert_line(sym, x)
        }
        Grid::Plane { x, y } => {
            if sym.model.dim != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: sym.model.dim,
                });
            }
            invert_plane(sym, x, y)
        }
        Grid::Radial { r } => {
            if !sym.model.isotropic {
                return Err(Error::NotIsotropic);
            }
            let ball = r.iter().cloned().fold(0.0, f64::max);
            let run = radial_run(sym, r, ball)?;
            Ok(DensityField {
                grid: grid.clone(),
                values: run.values,
                t: sym.t,
                mass: run.mass,
                mass_region: format!("|x| <= {ball}"),
                tail_bound: run.tail_bound,
                imag_residue: 0.0,
                window: run.window,
                tails: run.tails,
            })
        }
    }
}

/// Density of X_t on a one- or two-dimensional lattice (or radial nodes).
pub fn invert_grid(model: &ModelSpec, t: f64, grid: &Grid) -> Result<DensityField> {
    invert_with(&Symbol::new(model, t), grid)
}

/// φ(D)^m p_t, the inverse transform of (Re φ)^m e^{-tψ}; m = 0 is `invert_grid`.
pub fn multiplier_apply(model: &ModelSpec, phi: &ModelSpec, m: u32, t: f64, grid: &Grid) -> Result<DensityField> {
    if phi.dim != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: phi.dim,
        });
    }
    if m > 0 && !phi.is_symmetric() {
        return Err(Error::Domain("multiplier symbol must be real and symmetric".into()));
    }
    let mut sym = Symbol::new(model, t);
    if m > 0 {
        if model.isotropic && !phi.isotropic {
            return Err(Error::Domain("radial inversion needs an isotropic multiplier".into()));
        }
        sym.weight = Some((phi, m));
    }
    invert_with(&sym, grid)
}

/// (2π)^{-n} ∫ e^{-t Re ψ(ξ)} dξ.
pub fn pt_zero(model: &ModelSpec, t: f64) -> Result<f64> {
    Ok((2.0 * PI).powi(-(model.dim as i32)) * exp_mass_outside(model, t, 0.0)?)
}

/// ∫_{|ξ|>δ} e^{-t Re ψ(ξ)} dξ, integrated along rays in polar form.
pub fn exp_mass_outside(model: &ModelSpec, t: f64, delta: f64) -> Result<f64> {
    check_t(t)?;
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be nonnegative, got {delta}")));
    }
    let sym = Symbol::new(model, t);
    let win = window_for(&sym)?;
    let n = model.dim;
    let tol = Tolerance::new(1e-300, 1e-12);
    let line = |dir: &[f64]| -> Result<f64> {
        let f = |r: f64| {
            let xi: Vec<f64> = dir.iter().map(|d| d * r).collect();
            (-t * eval_re_psi(model, &xi).unwrap_or(f64::NAN)).exp() * r.powi(n as i32 - 1)
        };
        let (a, b) = if delta < win.scale {
            (
                integrate_singular_left(f, delta, win.scale, tol),
                integrate_to_infinity(f, win.scale, win.scale, tol),
            )
        } else {
            (
                gauss_kronrod(f, delta, delta, tol, 1),
                integrate_to_infinity(f, delta, win.scale, tol),
            )
        };
        if !(a.converged && b.converged) || !(a.value + b.value).is_finite() {
            return Err(Error::quad("radial integral of e^(-t Re psi)", a.abs_error + b.abs_error));
        }
        Ok(a.value + b.value)
    };
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    if model.isotropic {
        return Ok(sphere_area(n) * line(&e1)?);
    }
    match n {
        1 => Ok(2.0 * line(&e1)?),
        2 => {
            // Re ψ is even, so half the circle suffices
            let breaks: Vec<f64> = (0..=32).map(|i| PI * i as f64 / 32.0).collect();
            let (th, w) = quad::composite_nodes(&breaks);
            let parts: Vec<Result<f64>> = par::map(&th, |&a| line(&[a.cos(), a.sin()]));
            let mut s = 0.0;
            for (p, wi) in parts.into_iter().zip(&w) {
                s += wi * p?;
            }
            Ok(2.0 * s)
        }
        _ => Err(Error::Domain("non-isotropic models need dim <= 2 here".into())),
    }
}

/// (1/2π) ∫ F(ξ) e^{-tψ(-ξ)} e^{-ixξ} dξ on the inversion nodes, for a
/// one-dimensional model and a transform F with F(−ξ) = conj F(ξ).
pub(crate) fn apply_transform<F>(model: &ModelSpec, t: f64, f_hat: F, xs: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    check_t(t)?;
    if model.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: model.dim });
    }
    let sym = Symbol::new(model, t);
    let win = window_for(&sym)?;
    if !win.xi.is_finite() {
        return Err(Error::WindowInsufficient {
            t,
            xi: 2f64.powi(LADDER_MAX),
            amplitude: WINDOW_FLOOR,
        });
    }
    let extent = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lay = layout(&win, extent, GRADING_LEVELS, 64.0);
    if lay.tails {
        return Err(Error::WindowInsufficient { t, xi: lay.cut, amplitude: WINDOW_FLOOR });
    }
    // plus-branch carries ξ > 0, minus-branch ξ < 0 (conjugated phase)
    let plus: Vec<Complex64> = par::map(&lay.nodes, |&xi| Ok::<_, Error>(f_hat(xi) * sym.value(&[-xi])?))
        .into_iter()
        .collect::<Result<_>>()?;
    let minus: Vec<Complex64> = par::map(&lay.nodes, |&xi| Ok::<_, Error>(f_hat(-xi) * sym.value(&[xi])?))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(xs.iter().map(|&x| fourier_sum(&lay, &plus, &minus, x).re / (2.0 * PI)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    Gaussian,
    Cauchy,
    Gamma,
    SymGammaBesselk,
    Laplace,
}

impl std::str::FromStr for ClosedForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian" => ClosedForm::Gaussian,
            "cauchy" => ClosedForm::Cauchy,
            "gamma" => ClosedForm::Gamma,
            "sym_gamma_besselk" => ClosedForm::SymGammaBesselk,
            "laplace" => ClosedForm::Laplace,
            _ => return Err(Error::Domain(format!("unknown closed form `{s}`"))),
        })
    }
}

/// Reference densities: heat kernel (ψ = |ξ|²), Cauchy (ψ = |ξ|), one-sided
/// gamma, the Bessel-K density of ψ = ln(1+|ξ|²), and e^{-|x|}/2 (t = 1 only).
pub fn closed_form(family: ClosedForm, t: f64, x: &[f64]) -> Result<f64> {
    check_t(t)?;
    let n = x.len();
    if n == 0 {
        return Err(Error::Domain("empty point".into()));
    }
    let nf = n as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let r = r2.sqrt();
    match family {
        ClosedForm::Gaussian => Ok((4.0 * PI * t).powf(-0.5 * nf) * (-r2 / (4.0 * t)).exp()),
        ClosedForm::Cauchy => {
            let c = gamma_fn(0.5 * (nf + 1.0))? / PI.powf(0.5 * (nf + 1.0));
            Ok(c * t / (t * t + r2).powf(0.5 * (nf + 1.0)))
        }
        ClosedForm::Gamma => {
            if n != 1 || !(x[0] > 0.0) {
                return Err(Error::Domain("gamma density needs a point x > 0 on the line".into()));
            }
            Ok(((t - 1.0) * x[0].ln() - x[0] - crate::specfun::ln_gamma(t)?).exp())
        }
        ClosedForm::SymGammaBesselk => {
            if !(t > 0.5 * nf) {
                return Err(Error::Domain(format!("Bessel-K form needs t > n/2 = {}, got {t}", 0.5 * nf)));
            }
            let nu = t - 0.5 * nf;
            let pref = 2f64.powf(1.0 - nf) / (PI.powf(0.5 * nf) * gamma_fn(t)?);
            if r == 0.0 {
                // (z/2)^ν K_ν(z) → Γ(ν)/2
                return Ok(pref * 0.5 * gamma_fn(nu)?);
            }
            Ok(pref * (0.5 * r).powf(nu) * bessel_k(nu, r)?.value)
        }
        ClosedForm::Laplace => {
            if n != 1 || t != 1.0 {
                return Err(Error::Domain("Laplace form e^{-|x|}/2 is the t = 1, n = 1 law".into()));
            }
            Ok(0.5 * (-r).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_line() {
        let f = invert_grid(&library::gaussian(1), 1.0, &Grid::Line { x: Axis::new(-2.0, 2.0, 5) }).unwrap();
        assert_relative_eq!(f.values[2], 0.5 / PI.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(f.values[4], (4.0 * PI).powf(-0.5) * (-1f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn csv_has_header_and_zero_row() {
        let f = invert_grid(&library::gaussian(1), 1.0, &Grid::Line { x: Axis::with_step(-1.0, 1.0, 0.1).unwrap() }).unwrap();
        let csv = f.to_csv("abc", &[("subcommand".into(), "density".into())]);
        assert!(csv.starts_with("#t=1\n#model_hash=abc\n"));
        assert!(csv.contains("#subcommand=density\n"));
        let row = csv.lines().find(|l| l.starts_with("0,")).unwrap();
        let p: f64 = row[2..].parse().unwrap();
        assert_relative_eq!(p, 0.28209479177387814, max_relative = 1e-10);
    }

    #[test]
    fn closed_forms() {
        assert_relative_eq!(closed_form(ClosedForm::Gamma, 2.0, &[1.0]).unwrap(), (-1f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(closed_form(ClosedForm::SymGammaBesselk, 1.0, &[1.0]).unwrap(), 0.5 * (-1f64).exp(), max_relative = 1e-10);
        assert!(closed_form(ClosedForm::SymGammaBesselk, 0.5, &[1.0]).is_err());
        assert_relative_eq!(closed_form(ClosedForm::Cauchy, 1.0, &[0.0]).unwrap(), 1.0 / PI, max_relative = 1e-14);
    }

    #[test]
    fn probe_flips_at_one_half() {
        let m = library::sym_gamma(1);
        assert_eq!(integrability_probe(&m, 0.45).unwrap().verdict, Integrability::NotIntegrable);
        assert_eq!(integrability_probe(&m, 0.55).unwrap().verdict, Integrability::Integrable);
    }
}
