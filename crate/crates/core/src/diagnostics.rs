//! Growth functionals on dyadic probe ladders and the verdicts drawn from them.
//!
//! A functional is sampled at |ξ| = 2^k (or ε = 2^{-k}) for k in a window.
//! The verdict looks at the last W samples only: a finite window never proves
//! a limit, so every report carries the rule's inputs next to its outcome.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::{eval_psi_turns, eval_re_psi};
use crate::inversion::{directions, integrability_probe, pt_zero, Integrability};
use crate::model::ModelSpec;
use crate::par;
use crate::radial;
use crate::rearrangement::{radial_monotone, RearrangementTable};
use crate::specfun::ball_volume;

pub const DEFAULT_K: RangeInclusive<i32> = 4..=40;
pub const TRAILING: usize = 8;
pub const DIVERGENCE_FLOOR: f64 = 10.0;
pub const VANISHING_CEILING: f64 = 0.1;
pub const FLAT_SLOPE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Diverges,
    Bounded,
    Vanishes,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub trailing_min: f64,
    pub trailing_max: f64,
    /// Least-squares slope of ln(value) against ln 2^k on the trailing window.
    pub slope: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subsequence {
    /// "even" or "odd" k.
    pub parity: &'static str,
    #[serde(flatten)]
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCompare {
    pub t: f64,
    pub threshold: f64,
    pub liminf_estimate: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub functional: String,
    /// Probe abscissae: |ξ| = 2^k, or ε = 2^{-k} for small-ball functionals.
    pub grid: Vec<f64>,
    pub k: Vec<i32>,
    pub values: Vec<f64>,
    pub trailing_min: f64,
    pub trailing_max: f64,
    pub slope: f64,
    pub verdict: Verdict,
    pub threshold_compare: Option<ThresholdCompare>,
    pub subsequences: Vec<Subsequence>,
    pub notes: Vec<String>,
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Applies the decision rule to the last `w` samples.
pub fn trend(k: &[i32], values: &[f64], w: usize) -> Trend {
    let start = values.len().saturating_sub(w);
    let tail = &values[start..];
    let xs: Vec<f64> = k[start..].iter().map(|&k| k as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = tail.iter().map(|v| v.max(1e-300).ln()).collect();
    let trailing_min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let trailing_max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slope = ls_slope(&xs, &ys);
    let verdict = if trailing_min > DIVERGENCE_FLOOR && slope > 0.0 {
        Verdict::Diverges
    } else if trailing_max < VANISHING_CEILING && (slope < 0.0 || trailing_max == 0.0) {
        Verdict::Vanishes
    } else if slope.abs() <= FLAT_SLOPE {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Trend {
        trailing_min,
        trailing_max,
        slope,
        verdict,
    }
}

fn report(functional: &str, k: Vec<i32>, grid: Vec<f64>, values: Vec<f64>) -> LimitReport {
    let all = trend(&k, &values, TRAILING);
    let mut subsequences = Vec::new();
    for (parity, rem) in [("even", 0), ("odd", 1)] {
        let (ks, vs): (Vec<i32>, Vec<f64>) = k
            .iter()
            .zip(&values)
            .filter(|(k, _)| k.rem_euclid(2) == rem)
            .map(|(k, v)| (*k, *v))
            .unzip();
        if ks.len() >= 2 {
            subsequences.push(Subsequence {
                parity,
                trend: trend(&ks, &vs, TRAILING / 2),
            });
        }
    }
    let mut verdict = all.verdict;
    // subsequences that part ways leave the limit undecided
    if let [a, b] = subsequences.as_slice() {
        let split = matches!(
            (a.trend.verdict, b.trend.verdict),
            (Verdict::Diverges, Verdict::Vanishes) | (Verdict::Vanishes, Verdict::Diverges)
        );
        if split {
            verdict = Verdict::Inconclusive;
        }
    }
    LimitReport {
        functional: functional.to_string(),
        grid,
        k,
        values,
        trailing_min: all.trailing_min,
        trailing_max: all.trailing_max,
        slope: all.slope,
        verdict,
        threshold_compare: None,
        subsequences,
        notes: Vec::new(),
    }
}

fn check_range(k: &RangeInclusive<i32>) -> Result<Vec<i32>> {
    let ks: Vec<i32> = k.clone().collect();
    if ks.is_empty() {
        return Err(Error::Domain("empty k range".into()));
    }
    if *k.start() < -1000 || *k.end() > 1000 {
        return Err(Error::Domain("k range must lie in [-1000, 1000]".into()));
    }
    Ok(ks)
}

/// min Re ψ over the probe directions at radius 2^k, on both the 2^k and
/// 2π·2^k lattices (the latter evaluated with exact phase reduction).
pub fn ladder_re_psi(model: &ModelSpec, k: i32) -> Result<f64> {
    let r = 2f64.powi(k);
    let mut best = f64::INFINITY;
    for d in directions(model) {
        let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
        best = best.min(eval_re_psi(model, &xi)?);
        best = best.min(eval_psi_turns(model, &xi)?.re.max(0.0));
    }
    Ok(best)
}

fn ladder_values<F>(ks: &[i32], f: F) -> Result<Vec<f64>>
where
    F: Fn(i32) -> Result<f64> + Sync,
{
    par::map(ks, |&k| f(k)).into_iter().collect()
}

/// Re ψ(ξ)/ln(1+|ξ|) at |ξ| = 2^k; with `t`, compares its liminf with n/t.
pub fn hw_functional(model: &ModelSpec, k: RangeInclusive<i32>, t: Option<f64>) -> Result<LimitReport> {
    let ks = check_range(&k)?;
    let values = ladder_values(&ks, |k| Ok(ladder_re_psi(model, k)? / (2f64.powi(k)).ln_1p()))?;
    let grid = ks.iter().map(|&k| 2f64.powi(k)).collect();
    let mut rep = report("hw", ks, grid, values);
    if let Some(t) = t {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let threshold = model.dim as f64 / t;
        rep.threshold_compare = Some(ThresholdCompare {
            t,
            threshold,
            liminf_estimate: rep.trailing_min,
            pass: rep.trailing_min > threshold,
        });
    }
    Ok(rep)
}

/// ∫_{|y|<ε}|y|² ν(dy) / (ε²|ln ε|) at ε = 2^{-k}.
pub fn kallenberg_functional(model: &ModelSpec, k: RangeInclusive<i32>) -> Result<LimitReport> {
    if model.dim != 1 && !model.is_radial_measure() {
        return Err(Error::NonRadial);
    }
    let ks = check_range(&k)?;
    if ks[0] < 1 {
        return Err(Error::Domain("kallenberg functional needs ε < 1, i.e. k >= 1".into()));
    }
    let values = ladder_values(&ks, |k| {
        let eps = 2f64.powi(-k);
        Ok(radial::inner_moment(model, eps, 2)? / (eps * eps * -eps.ln()))
    })?;
    let grid = ks.iter().map(|&k| 2f64.powi(-k)).collect();
    let mut rep = report("kallenberg", ks, grid, values);
    rep.notes.push("slope is taken against ln(1/eps)".into());
    Ok(rep)
}

/// ν(B_ε^c)/|ln ε| at ε = 2^{-k}.
pub fn tail_mass_functional(model: &ModelSpec, k: RangeInclusive<i32>) -> Result<LimitReport> {
    if !model.is_radial_measure() {
        return Err(Error::NonRadial);
    }
    let ks = check_range(&k)?;
    if ks[0] < 1 {
        return Err(Error::Domain("tail-mass functional needs ε < 1, i.e. k >= 1".into()));
    }
    let values = ladder_values(&ks, |k| {
        let eps = 2f64.powi(-k);
        Ok(radial::tail_mass(model, eps)? / -eps.ln())
    })?;
    let grid = ks.iter().map(|&k| 2f64.powi(-k)).collect();
    let mut rep = report("tail_mass", ks, grid, values);
    rep.notes.push("slope is taken against ln(1/eps)".into());
    if model.dim == 1 {
        rep.notes.push("the tail-mass equivalence covers n >= 2 only".into());
    }
    Ok(rep)
}

/// (Re ψ)_*(ξ)/ln(1+|ξ|) with (Re ψ)_*(ξ) = ν^{-1}(V_n|ξ|^n).
pub fn hw_star_functional(model: &ModelSpec, k: RangeInclusive<i32>) -> Result<LimitReport> {
    let ks = check_range(&k)?;
    let n = model.dim;
    let x_max = if radial_monotone(model)? {
        1.0
    } else {
        let top = ladder_values(&ks, |k| ladder_re_psi(model, k))?;
        top.iter().cloned().fold(1.0, f64::max)
    };
    let table = RearrangementTable::build(model, x_max, 1)?;
    let values = ladder_values(&ks, |k| {
        let r = 2f64.powi(k);
        let s = ball_volume(n) * r.powi(n as i32);
        Ok(table.inverse(s)? / r.ln_1p())
    })?;
    let grid = ks.iter().map(|&k| 2f64.powi(k)).collect();
    let mut rep = report("hw_star", ks, grid, values);
    if let Some(h) = table.cell_size {
        rep.notes.push(format!("sublevel measures counted on a lattice with cell size {h:e}"));
    }
    Ok(rep)
}

/// Re ψ(ξ)/ln(1 + Re φ(ξ)), minimized over the probe directions and lattices.
pub fn hw_phi_functional(model: &ModelSpec, phi: &ModelSpec, k: RangeInclusive<i32>) -> Result<LimitReport> {
    if phi.dim != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: phi.dim,
        });
    }
    let ks = check_range(&k)?;
    let dirs = directions(model);
    let values = ladder_values(&ks, |k| {
        let r = 2f64.powi(k);
        let mut best = f64::INFINITY;
        for d in &dirs {
            let xi: Vec<f64> = d.iter().map(|v| v * r).collect();
            let q = eval_re_psi(model, &xi)? / eval_re_psi(phi, &xi)?.ln_1p();
            let qt = eval_psi_turns(model, &xi)?.re.max(0.0) / eval_psi_turns(phi, &xi)?.re.max(0.0).ln_1p();
            best = best.min(q).min(qt);
        }
        Ok(best)
    })?;
    let grid = ks.iter().map(|&k| 2f64.powi(k)).collect();
    Ok(report("hw_phi", ks, grid, values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeVerdict {
    pub t: f64,
    /// liminf of the hw quotient compared with n/t.
    pub hw_threshold: ThresholdCompare,
    /// Direct test of ∫ e^{-t Re ψ} < ∞.
    pub integrable: Integrability,
    pub probe_slope: f64,
    /// Both routes agree (only asserted for isotropic monotone models).
    pub consistent: Option<bool>,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub hw: LimitReport,
    /// Re ψ along the probe lattice; density existence needs it to diverge.
    pub growth: LimitReport,
    pub per_t: Vec<TimeVerdict>,
    /// pt_zero at a small time when HW_∞ holds.
    pub small_time_check: Option<String>,
    pub verdict: String,
}

/// Aggregates the functionals into an existence/smoothness verdict.
pub fn classify(model: &ModelSpec, t_list: &[f64]) -> Result<Classification> {
    let hw = hw_functional(model, DEFAULT_K, None)?;
    let ks: Vec<i32> = DEFAULT_K.collect();
    let growth_vals = ladder_values(&ks, |k| ladder_re_psi(model, k))?;
    let grid = ks.iter().map(|&k| 2f64.powi(k)).collect();
    let mut growth = report("re_psi", ks, grid, growth_vals);
    growth.notes.push("minimum over probe directions of Re psi at 2^k and 2pi*2^k".into());
    let monotone = radial_monotone(model)?;
    let n = model.dim as f64;
    let mut per_t = Vec::new();
    for &t in t_list {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let probe = integrability_probe(model, t)?;
        let threshold = ThresholdCompare {
            t,
            threshold: n / t,
            liminf_estimate: hw.trailing_min,
            pass: hw.trailing_min > n / t,
        };
        let consistent = monotone.then(|| (probe.verdict == Integrability::Integrable) == threshold.pass);
        let conclusion = if threshold.pass {
            "density exists at this t (HW_1/t holds)"
        } else if probe.verdict == Integrability::Integrable {
            "density exists at this t (e^-t psi integrable)"
        } else {
            "no conclusion at this t"
        };
        per_t.push(TimeVerdict {
            t,
            hw_threshold: threshold,
            integrable: probe.verdict,
            probe_slope: probe.slope,
            consistent,
            conclusion: conclusion.to_string(),
        });
    }
    let no_growth = matches!(growth.verdict, Verdict::Bounded | Verdict::Vanishes)
        || growth
            .subsequences
            .iter()
            .any(|s| matches!(s.trend.verdict, Verdict::Bounded | Verdict::Vanishes));
    let mut small_time_check = None;
    let verdict = if no_growth {
        "no density (Re psi does not diverge)".to_string()
    } else if hw.verdict == Verdict::Diverges {
        let check = match pt_zero(model, 0.01) {
            Ok(v) => format!("pt_zero(t=0.01) = {v:.6e}"),
            Err(e) => format!("pt_zero(t=0.01) failed: {e}"),
        };
        small_time_check = Some(check);
        "smooth density for all t > 0 (HW_inf holds)".to_string()
    } else {
        let ok: Vec<String> = per_t
            .iter()
            .filter(|v| v.conclusion.starts_with("density"))
            .map(|v| v.t.to_string())
            .collect();
        if ok.is_empty() {
            "inconclusive (HW_inf fails; no probed t passes)".to_string()
        } else {
            format!("density at t in {{{}}}; HW_inf fails", ok.join(", "))
        }
    };
    Ok(Classification {
        hw,
        growth,
        per_t,
        small_time_check,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;

    #[test]
    fn gaussian_diverges() {
        let r = hw_functional(&library::gaussian(1), DEFAULT_K, None).unwrap();
        assert_eq!(r.verdict, Verdict::Diverges);
    }

    #[test]
    fn sym_gamma_bounded_with_threshold() {
        let r = hw_functional(&library::sym_gamma(1), DEFAULT_K, Some(1.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        assert!((r.trailing_min - 2.0).abs() < 0.05);
        assert!(r.threshold_compare.unwrap().pass);
    }

    #[test]
    fn small_ball_functionals() {
        let cp = library::compound_poisson(1, 1.0, 1.0);
        assert_eq!(kallenberg_functional(&cp, DEFAULT_K).unwrap().verdict, Verdict::Vanishes);
        assert_eq!(tail_mass_functional(&cp, DEFAULT_K).unwrap().verdict, Verdict::Vanishes);
        let st = library::stable(1, 1.2);
        assert_eq!(kallenberg_functional(&st, DEFAULT_K).unwrap().verdict, Verdict::Diverges);
        assert_eq!(tail_mass_functional(&st, DEFAULT_K).unwrap().verdict, Verdict::Diverges);
    }

    #[test]
    fn exa4_has_no_density() {
        let c = classify(&library::atom_ladder(2.0, 1, crate::model::MassRule::Harmonic), &[1.0]).unwrap();
        assert!(c.verdict.starts_with("no density"), "{}", c.verdict);
    }
}
