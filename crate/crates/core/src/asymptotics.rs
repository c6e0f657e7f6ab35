//! Small- and large-time behaviour of p_t(0) from the distribution function
//! ν(x) = |{Re ψ ≤ x}|: regular-variation fits, volume doubling, two-sided
//! bounds, and the polynomial-growth test for multiplier symbols.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::pt_zero;
use crate::model::ModelSpec;
use crate::par;
use crate::quad::{integrate_to_infinity, Tolerance};
use crate::rearrangement::{RearrangementTable, X_MIN};
use crate::specfun::{ball_volume, gamma_fn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    TTo0,
    TToInf,
}

impl Direction {
    /// Sampled times: 16 log-spaced points.
    pub fn window(self) -> (f64, f64) {
        match self {
            Direction::TTo0 => (1e-3, 1e-1),
            Direction::TToInf => (10.0, 1e3),
        }
    }
}

pub const SAMPLES: usize = 16;
/// Relative growth of ν(2x)/ν(x) across the window that counts as a doubling failure.
const DOUBLING_DRIFT: f64 = 0.05;

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn ls_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// A real symmetric symbol whose sublevel measure ν_φ is needed: either a
/// model's Re ψ or an explicit radial profile.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSymbol {
    Model(ModelSpec),
    /// φ(ξ) = |ξ|^p.
    Power { dim: usize, exponent: f64 },
    /// φ(ξ) = ln(1 + ln(1 + |ξ|)), which grows slower than any power of ln.
    LogLog { dim: usize },
}

impl PhiSymbol {
    fn dim(&self) -> usize {
        match self {
            PhiSymbol::Model(m) => m.dim,
            PhiSymbol::Power { dim, .. } | PhiSymbol::LogLog { dim } => *dim,
        }
    }
}

/// Sublevel measures of a symbol; +∞ when the sublevel radius overflows.
enum Sublevel {
    Table(RearrangementTable),
    Profile(PhiSymbol),
}

impl Sublevel {
    fn new(phi: &PhiSymbol, x_max: f64) -> Result<Self> {
        Ok(match phi {
            PhiSymbol::Model(m) => Sublevel::Table(RearrangementTable::build(m, x_max.max(2.0 * X_MIN), 1)?),
            other => Sublevel::Profile(other.clone()),
        })
    }

    fn nu(&self, x: f64) -> Result<f64> {
        match self {
            Sublevel::Table(t) => match t.nu(x) {
                Err(Error::OutOfRange(_)) => Ok(f64::INFINITY),
                other => other,
            },
            Sublevel::Profile(p) => {
                let n = p.dim();
                let r = match p {
                    PhiSymbol::Power { exponent, .. } => x.powf(1.0 / exponent),
                    PhiSymbol::LogLog { .. } => (x.exp_m1().exp()).exp_m1(),
                    PhiSymbol::Model(_) => unreachable!(),
                };
                Ok(ball_volume(n) * r.powi(n as i32))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub x_range: (f64, f64),
    /// sup ν(2x)/ν(x) over the window.
    pub doubling_c: f64,
    /// ln C / ln 2.
    pub alpha: f64,
    /// False when the ratio keeps growing across the window or ν is infinite.
    pub finite: bool,
    pub x: Vec<f64>,
    pub ratio: Vec<f64>,
}

fn doubling_from(sub: &Sublevel, lo: f64, hi: f64) -> Result<DoublingReport> {
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::Domain(format!("bad doubling window [{lo}, {hi}]")));
    }
    let xs = log_space(lo, hi, 33);
    let ratio: Vec<f64> = par::map(&xs, |&x| Ok::<f64, Error>(sub.nu(2.0 * x)? / sub.nu(x)?))
        .into_iter()
        .collect::<Result<_>>()?;
    let c = ratio.iter().cloned().fold(1.0, f64::max);
    let valid = ratio.iter().all(|r| r.is_finite());
    let first = ratio[0];
    let last = ratio[ratio.len() - 1];
    // a bounded doubling constant shows no systematic drift in the ratio
    let drifting = valid && last > first * (1.0 + DOUBLING_DRIFT) && ratio.windows(2).filter(|w| w[1] > w[0]).count() > ratio.len() * 3 / 4;
    Ok(DoublingReport {
        x_range: (lo, hi),
        doubling_c: c,
        alpha: c.ln() / std::f64::consts::LN_2,
        finite: valid && !drifting,
        x: xs,
        ratio,
    })
}

/// sup ν(2x)/ν(x) on [x_min, x_max].
pub fn doubling_report(model: &ModelSpec, x_range: (f64, f64)) -> Result<DoublingReport> {
    let sub = Sublevel::new(&PhiSymbol::Model(model.clone()), 2.0 * x_range.1)?;
    doubling_from(&sub, x_range.0, x_range.1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularVariationFit {
    pub window: (f64, f64),
    /// ν(x) ∼ x^{ρ−1} L(x).
    pub rho: f64,
    /// ν(x_edge)/x_edge^{ρ−1} at the upper window edge.
    pub l_anchor: f64,
    pub r_squared: f64,
    pub nodes: usize,
}

/// Least-squares fit of ln ν against ln x on the table nodes inside `window`.
pub fn fit_regular_variation(table: &RearrangementTable, window: (f64, f64)) -> Result<RegularVariationFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = table
        .x_nodes
        .iter()
        .zip(&table.nu_values)
        .filter(|(x, v)| **x >= window.0 * (1.0 - 1e-12) && **x <= window.1 * (1.0 + 1e-12) && v.is_finite() && **v > 0.0)
        .map(|(x, v)| (x.ln(), v.ln()))
        .unzip();
    if xs.len() < 8 {
        return Err(Error::Domain(format!(
            "regular-variation fit needs at least 8 nodes in [{}, {}], found {}",
            window.0,
            window.1,
            xs.len()
        )));
    }
    let (slope, _, r2) = ls_fit(&xs, &ys);
    let edge = xs.len() - 1;
    let l_anchor = (ys[edge] - slope * xs[edge]).exp();
    Ok(RegularVariationFit {
        window,
        rho: slope + 1.0,
        l_anchor,
        r_squared: r2,
        nodes: xs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    /// Constants derived from the doubling constant: c₁ = (2π)^{-n}/e and
    /// c₂ = (2π)^{-n}[(1 − 1/e) + C·Γ(α+1, 1)].
    pub c1: f64,
    pub c2: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bracketed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStats {
    pub min: f64,
    pub max: f64,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub direction: Direction,
    pub t: Vec<f64>,
    pub observed: Vec<f64>,
    /// Least-squares slope of ln p_t(0) against ln t.
    pub t_exponent: f64,
    pub fit: RegularVariationFit,
    pub doubling: DoublingReport,
    /// (2π)^{-n} Γ(ρ) t^{1−ρ} L(1/t), emitted when the fit has R² > 0.999.
    pub predicted: Option<Vec<f64>>,
    pub ratio_stats: Option<RatioStats>,
    /// Withheld when doubling fails.
    pub bounds: Option<Bounds>,
    /// min and max of p_t(0)/ν(1/t) on the window.
    pub empirical_envelope: (f64, f64),
    pub notes: Vec<String>,
}

/// Γ(s, 1) = ∫_1^∞ λ^{s−1} e^{−λ} dλ.
fn upper_gamma_at_one(s: f64) -> f64 {
    integrate_to_infinity(|l| l.powf(s - 1.0) * (-l).exp(), 1.0, 1.0, Tolerance::tight()).value
}

pub fn predict_pt0(model: &ModelSpec, direction: Direction) -> Result<AsymptoticReport> {
    let n = model.dim;
    let (t_lo, t_hi) = direction.window();
    let ts = log_space(t_lo, t_hi, SAMPLES);
    let observed: Vec<f64> = par::map(&ts, |&t| pt_zero(model, t)).into_iter().collect::<Result<_>>()?;
    let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let lp: Vec<f64> = observed.iter().map(|p| p.ln()).collect();
    let (t_exponent, _, _) = ls_fit(&lt, &lp);

    // x = 1/t covers [1/t_hi, 1/t_lo]; doubling is checked well beyond it
    let (x_lo, x_hi) = (1.0 / t_hi, 1.0 / t_lo);
    let x_top = 128.0 * x_hi;
    let nodes = ((x_top / X_MIN).log10() * 16.0).ceil() as usize;
    let table = RearrangementTable::build(model, x_top, nodes)?;
    let fit = fit_regular_variation(&table, (x_lo, x_hi))?;
    let sub = Sublevel::Table(table);
    let doubling = doubling_from(&sub, x_lo, 64.0 * x_hi)?;
    let norm = (2.0 * PI).powi(-(n as i32));
    let nu_at: Vec<f64> = ts.iter().map(|t| sub.nu(1.0 / t)).collect::<Result<_>>()?;

    let mut notes = Vec::new();
    let (predicted, ratio_stats) = if fit.r_squared > 0.999 {
        let g = gamma_fn(fit.rho)?;
        let pred: Vec<f64> = ts
            .iter()
            .zip(&nu_at)
            .map(|(t, nu)| {
                // L(1/t) = ν(1/t)·t^{ρ−1}
                let l = nu * t.powf(fit.rho - 1.0);
                norm * g * t.powf(1.0 - fit.rho) * l
            })
            .collect();
        let ratios: Vec<f64> = observed.iter().zip(&pred).map(|(o, p)| o / p).collect();
        let stats = RatioStats {
            min: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            max: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            max_rel_err: ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max),
        };
        (Some(pred), Some(stats))
    } else {
        notes.push(format!("regular-variation fit rejected (R^2 = {:.6})", fit.r_squared));
        (None, None)
    };
    let bounds = if doubling.finite {
        let c1 = norm * (-1f64).exp();
        let c2 = norm * ((1.0 - (-1f64).exp()) + doubling.doubling_c * upper_gamma_at_one(doubling.alpha + 1.0));
        let lower: Vec<f64> = nu_at.iter().map(|v| c1 * v).collect();
        let upper: Vec<f64> = nu_at.iter().map(|v| c2 * v).collect();
        let bracketed = observed
            .iter()
            .zip(lower.iter().zip(&upper))
            .all(|(o, (l, u))| l <= o && o <= u);
        Some(Bounds {
            c1,
            c2,
            lower,
            upper,
            bracketed,
        })
    } else {
        notes.push("volume doubling fails on the window; two-sided bounds withheld".into());
        None
    };
    let q: Vec<f64> = observed.iter().zip(&nu_at).map(|(o, v)| o / v).collect();
    let empirical_envelope = (
        q.iter().cloned().fold(f64::INFINITY, f64::min),
        q.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(AsymptoticReport {
        direction,
        t: ts,
        observed,
        t_exponent,
        fit,
        doubling,
        predicted,
        ratio_stats,
        bounds,
        empirical_envelope,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiIntegrability {
    pub kappa: f64,
    pub holds: bool,
    /// ν_φ(x) ≤ c·x^λ on the window.
    pub witness: Option<(f64, f64)>,
    /// Where the polynomial bound breaks, if it does.
    pub failing_x: Option<f64>,
    pub window: (f64, f64),
}

pub const PHI_WINDOW: (f64, f64) = (1.0, 1e3);

/// Whether (1+φ)^{-κ/2} ∈ L², via a polynomial bound ν_φ(x) ≤ c x^λ with
/// λ from the doubling constant; the bound gives the claim for κ > λ.
pub fn phi_integrability(phi: &PhiSymbol, kappa: f64) -> Result<PhiIntegrability> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let (lo, hi) = PHI_WINDOW;
    let sub = Sublevel::new(phi, 2.0 * hi)?;
    let doubling = doubling_from(&sub, lo, hi)?;
    let xs = log_space(lo, 2.0 * hi, 49);
    let nus: Vec<f64> = xs.iter().map(|&x| sub.nu(x)).collect::<Result<_>>()?;
    if !doubling.finite {
        // report where growth outpaces the power fitted on the first decade
        let lam = (nus[8] / nus[0]).ln() / (xs[8] / xs[0]).ln();
        let c = nus[0] / xs[0].powf(lam);
        let failing = xs
            .iter()
            .zip(&nus)
            .find(|(x, v)| !v.is_finite() || **v > 2.0 * c * x.powf(lam))
            .map(|(x, _)| *x);
        return Ok(PhiIntegrability {
            kappa,
            holds: false,
            witness: None,
            failing_x: failing.or(Some(hi)),
            window: PHI_WINDOW,
        });
    }
    let lam = doubling.alpha;
    let c = xs
        .iter()
        .zip(&nus)
        .map(|(x, v)| v / x.powf(lam))
        .fold(0.0, f64::max);
    Ok(PhiIntegrability {
        kappa,
        holds: kappa > lam,
        witness: Some((c, lam)),
        failing_x: None,
        window: PHI_WINDOW,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use approx::assert_relative_eq;

    #[test]
    fn stable_doubling_is_exact() {
        for (n, a) in [(1, 2.0), (2, 1.0), (1, 1.5)] {
            let d = doubling_report(&library::stable(n, a), (1.0, 100.0)).unwrap();
            assert_relative_eq!(d.doubling_c, 2f64.powf(n as f64 / a), max_relative = 1e-9);
            assert!(d.finite);
        }
    }

    #[test]
    fn regular_variation_examples() {
        let t = RearrangementTable::build(&library::gaussian(3), 100.0, 80).unwrap();
        let f = fit_regular_variation(&t, (1.0, 100.0)).unwrap();
        assert_relative_eq!(f.rho - 1.0, 1.5, max_relative = 1e-9);
        assert_relative_eq!(f.l_anchor, 4.0 * PI / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn phi_examples() {
        let sq = phi_integrability(&PhiSymbol::Model(library::gaussian(1)), 1.0).unwrap();
        assert!(sq.holds);
        let (c, lam) = sq.witness.unwrap();
        assert_relative_eq!(lam, 0.5, max_relative = 1e-9);
        assert_relative_eq!(c, 2.0, max_relative = 1e-9);
        let ll = phi_integrability(&PhiSymbol::LogLog { dim: 1 }, 5.0).unwrap();
        assert!(!ll.holds);
        assert!(ll.failing_x.is_some());
        let disc = phi_integrability(&PhiSymbol::Power { dim: 2, exponent: 1.0 }, 3.0).unwrap();
        assert!(disc.holds);
    }

    #[test]
    fn log_squared_growth_fails_doubling() {
        let d = doubling_report(&library::log_kernel(1), (1.0, 100.0)).unwrap();
        assert!(!d.finite, "{d:?}");
    }
}
