//! End-to-end acceptance checks. Each returns a pass/fail outcome with the
//! numbers behind it; `run_all` is what `levyd selftest` executes.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::{self, Verdict};
use crate::error::Result;
use crate::exponent::{eval_psi_turns, iso_g};
use crate::inversion::{
    closed_form, integrability_probe, invert_grid, invert_radial, multiplier_apply, pt_zero, Axis, ClosedForm, Grid,
    Integrability,
};
use crate::library::{self, BUILTIN_NAMES};
use crate::model::MassRule;
use crate::oracle::direct_exponent;
use crate::rearrangement::{equimeasurability, pt0_laplace, radial_monotone, RearrangementTable};
use crate::specfun::h_kernel;
use crate::{asymptotics, ratio_limit};

pub const COUNT: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

const TITLES: [&str; COUNT] = [
    "golden densities",
    "pipeline equivalence",
    "radial exponent oracle",
    "log-kernel functionals",
    "functional agreement",
    "dyadic atom subsequences",
    "small-time asymptotics",
    "integrability threshold",
    "rearrangement properties",
    "ratio limits",
    "special functions",
    "multiplier operator",
];

pub fn run(id: usize) -> Outcome {
    let body: fn() -> Result<(bool, String)> = match id {
        1 => golden_densities,
        2 => pipeline_equivalence,
        3 => radial_oracle,
        4 => log_kernel_functionals,
        5 => functional_agreement,
        6 => dyadic_subsequences,
        7 => small_time_asymptotics,
        8 => integrability_threshold,
        9 => rearrangement_properties,
        10 => ratio_limits,
        11 => special_functions,
        12 => multiplier_operator,
        _ => panic!("no acceptance criterion {id}"),
    };
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        title: TITLES[id - 1],
        passed,
        detail,
    }
}

pub fn run_all() -> Vec<Outcome> {
    (1..=COUNT).map(run).collect()
}

fn line(x: Axis) -> Grid {
    Grid::Line { x }
}

/// sup |computed − closed form| over the grid.
fn sup_error(model: &crate::ModelSpec, t: f64, grid: Axis, form: ClosedForm) -> Result<f64> {
    let f = invert_grid(model, t, &line(grid.clone()))?;
    let mut worst = 0.0f64;
    for (x, v) in grid.points().iter().zip(&f.values) {
        worst = worst.max((v - closed_form(form, t, &[*x])?).abs());
    }
    Ok(worst)
}

fn golden_densities() -> Result<(bool, String)> {
    let start = Instant::now();
    let wide = Axis::with_step(-10.0, 10.0, 0.05)?;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut check = |name: &str, err: f64, tol: f64| {
        ok &= err <= tol;
        notes.push(format!("{name} {err:.1e}"));
    };
    let gaussian = library::gaussian(1);
    let cauchy = library::stable(1, 1.0);
    for t in [0.5, 1.0, 2.0] {
        check(&format!("gauss t={t}"), sup_error(&gaussian, t, wide.clone(), ClosedForm::Gaussian)?, 1e-8);
        check(&format!("cauchy t={t}"), sup_error(&cauchy, t, wide.clone(), ClosedForm::Cauchy)?, 1e-6);
    }
    let sg = library::sym_gamma(1);
    check("laplace t=1", sup_error(&sg, 1.0, wide.clone(), ClosedForm::Laplace)?, 1e-6);
    check("sym_gamma t=2", sup_error(&sg, 2.0, wide.clone(), ClosedForm::SymGammaBesselk)?, 1e-6);
    let half_line = Axis::with_step(0.25, 5.0, 0.05)?;
    check("gamma t=2", sup_error(&library::gamma(), 2.0, half_line, ClosedForm::Gamma)?, 1e-5);
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    Ok((ok, format!("{}; {secs:.2} s", notes.join(", "))))
}

fn pipeline_equivalence() -> Result<(bool, String)> {
    let models = [
        ("gaussian", library::gaussian(1)),
        ("cauchy", library::stable(1, 1.0)),
        ("stable(1.5)", library::stable(1, 1.5)),
        ("sym_gamma", library::sym_gamma(1)),
    ];
    let mut worst_pt0 = 0.0f64;
    for (_, m) in &models {
        for t in [0.75, 1.0, 2.0] {
            let a = pt_zero(m, t)?;
            let b = pt0_laplace(m, t)?;
            worst_pt0 = worst_pt0.max(((a - b) / b).abs());
        }
    }
    let radii: Vec<f64> = (0..=40).map(|i| 0.125 * i as f64).collect();
    let axis = Axis::new(0.0, 5.0, 41);
    let mut worst_radial = 0.0f64;
    for (_, m) in &models[..3] {
        let r = invert_radial(m, 1.0, &radii)?;
        let g = invert_grid(m, 1.0, &line(axis.clone()))?;
        for (a, b) in r.values.iter().zip(&g.values) {
            worst_radial = worst_radial.max((a - b).abs());
        }
    }
    let ok = worst_pt0 <= 1e-6 && worst_radial <= 1e-8;
    Ok((ok, format!("pt_zero vs Laplace form rel {worst_pt0:.1e}; radial vs line {worst_radial:.1e}")))
}

fn radial_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=3 {
        let models = [
            library::stable(n, 1.5),
            library::stable(n, 0.7),
            library::tempered_stable(n, 1.5, 1.0),
            library::truncated_stable(n, 1.2, 1.0),
        ];
        for m in &models {
            for i in 0..=12 {
                let u = 0.1 * 10f64.powf(i as f64 / 4.0);
                let a = iso_g(m, u)?;
                let b = direct_exponent(m, u)?;
                worst = worst.max(((a - b) / b).abs());
                count += 1;
            }
        }
    }
    Ok((worst <= 1e-6, format!("{count} points, max rel error {worst:.1e}")))
}

fn log_kernel_functionals() -> Result<(bool, String)> {
    let m = library::log_kernel(1);
    let kal = diagnostics::kallenberg_functional(&m, 10..=30)?;
    let mut worst = 0.0f64;
    for (k, v) in kal.k.iter().zip(&kal.values) {
        let exact = 1.0 + 1.0 / (2.0 * *k as f64 * 2f64.ln());
        worst = worst.max((v - exact).abs());
    }
    let hw = diagnostics::hw_functional(&m, diagnostics::DEFAULT_K, None)?;
    // quotient ∼ c·ln|ξ|: ln q against ln|ξ| has local slope 1/ln|ξ|
    let tail = &hw.k[hw.k.len() - diagnostics::TRAILING..];
    let mid = 0.5 * (tail[0] + tail[tail.len() - 1]) as f64 * 2f64.ln();
    let ratio = hw.slope * mid;
    let ok = worst <= 1e-3 && kal.verdict == Verdict::Bounded && hw.verdict == Verdict::Diverges && (0.5..2.0).contains(&ratio);
    Ok((
        ok,
        format!(
            "kallenberg max dev {worst:.1e} ({:?}); hw {:?}, slope {:.4} vs 1/ln|xi| {:.4}",
            kal.verdict,
            hw.verdict,
            hw.slope,
            1.0 / mid
        ),
    ))
}

fn functional_agreement() -> Result<(bool, String)> {
    let models = [
        ("stable(1.5)", library::stable(1, 1.5)),
        ("truncated_stable", library::truncated_stable(1, 1.5, 1.0)),
        ("exa2_logkernel", library::log_kernel(1)),
        ("compound_poisson", library::compound_poisson(1, 1.0, 1.0)),
    ];
    let mut agree = 0;
    let mut notes = Vec::new();
    for (name, m) in &models {
        let kal = diagnostics::kallenberg_functional(m, diagnostics::DEFAULT_K)?;
        let hw = diagnostics::hw_functional(m, diagnostics::DEFAULT_K, None)?;
        let tail = diagnostics::tail_mass_functional(m, diagnostics::DEFAULT_K)?;
        if hw.verdict == tail.verdict {
            agree += 1;
        }
        notes.push(format!("{name}: K {:?}, hw {:?}, tail {:?}", kal.verdict, hw.verdict, tail.verdict));
    }
    Ok((agree == models.len(), format!("{agree}/{} agree; {}", models.len(), notes.join("; "))))
}

fn dyadic_subsequences() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, rule) in [("exa4", MassRule::Harmonic), ("exa5", MassRule::LogEvenSquareOdd)] {
        let m = library::atom_ladder(2.0, 1, rule);
        let mut violations = 0;
        for k in 1..=40 {
            let psi = eval_psi_turns(&m, &[2f64.powi(k)])?.re;
            let b = rule.mass(k);
            if psi > 2.0 * PI * PI * b / 3.0 * (1.0 + 1e-12) || psi < b * (1.0 - 1e-12) {
                violations += 1;
            }
        }
        ok &= violations == 0;
        notes.push(format!("{name} bound violations {violations}/40"));
    }
    let exa5 = library::atom_ladder(2.0, 1, MassRule::LogEvenSquareOdd);
    let quotient = |k: i32| -> Result<f64> {
        let psi = eval_psi_turns(&exa5, &[2f64.powi(k)])?.re;
        Ok(psi / (2.0 * PI * 2f64.powi(k)).ln_1p())
    };
    let (even, odd) = (quotient(50)?, quotient(51)?);
    ok &= even < 0.1 && odd > 1e3;
    notes.push(format!("exa5 quotient m=50 {even:.3}, m=51 {odd:.3}"));
    let c = diagnostics::classify(&library::builtin("exa4_atoms")?, &[1.0])?;
    ok &= c.verdict.starts_with("no density");
    notes.push(format!("classify(exa4): {}", c.verdict));
    Ok((ok, notes.join("; ")))
}

fn small_time_asymptotics() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=2 {
        for alpha in [1.0, 1.5, 2.0] {
            let m = library::stable(n, alpha);
            let r = asymptotics::predict_pt0(&m, asymptotics::Direction::TTo0)?;
            let want = -(n as f64) / alpha;
            let exp_ok = (r.t_exponent - want).abs() <= 0.02;
            let pred = r.ratio_stats.as_ref().map(|s| s.max_rel_err).unwrap_or(f64::INFINITY);
            let c_want = 2f64.powf(n as f64 / alpha);
            let c_err = ((r.doubling.doubling_c - c_want) / c_want).abs();
            let bracket = r.bounds.as_ref().map(|b| b.bracketed).unwrap_or(false);
            ok &= exp_ok && pred <= 1e-6 && c_err <= 1e-6 && bracket;
            notes.push(format!(
                "n={n} a={alpha}: exp {:.4}, pred {pred:.0e}, C {:.6}, bracket {bracket}",
                r.t_exponent, r.doubling.doubling_c
            ));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn integrability_threshold() -> Result<(bool, String)> {
    let m = library::sym_gamma(1);
    let below = integrability_probe(&m, 0.45)?.verdict;
    let above = integrability_probe(&m, 0.55)?.verdict;
    let f = invert_grid(&m, 0.75, &line(Axis::with_step(-40.0, 40.0, 0.5)?))?;
    let mass_err = (f.mass - 1.0).abs();
    let ok = below == Integrability::NotIntegrable && above == Integrability::Integrable && mass_err < 1e-4;
    Ok((ok, format!("t=0.45 {below:?}, t=0.55 {above:?}, mass error at t=0.75 {mass_err:.1e}")))
}

fn rearrangement_properties() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut bad_levels = 0;
    for m in [library::gaussian(1), library::stable(1, 1.0), library::sym_gamma(1), library::builtin("exa3_atoms")?] {
        for c in equimeasurability(&m, 1.0, 20)? {
            if (c.lattice - c.rearranged).abs() > c.resolution {
                bad_levels += 1;
            }
        }
    }
    ok &= bad_levels == 0;
    notes.push(format!("equimeasurability misses {bad_levels}/80"));

    let mut sandwich_fail = 0;
    let mut nodes = 0;
    for m in [library::stable(1, 1.5), library::sym_gamma(2), library::builtin("exa3_atoms")?] {
        let table = RearrangementTable::build(&m, 100.0, 32)?;
        for (&x, &s) in table.x_nodes.iter().zip(&table.nu_values) {
            if !s.is_finite() || s <= 0.0 {
                continue;
            }
            nodes += 1;
            let back = table.inverse(s)?;
            let tol = 1e-9 * (1.0 + x);
            if back > x + tol || table.nu(back)? < s * (1.0 - 1e-9) {
                sandwich_fail += 1;
            }
        }
    }
    ok &= sandwich_fail == 0;
    notes.push(format!("sandwich failures {sandwich_fail}/{nodes}"));

    let mut worst = 0.0f64;
    for m in [library::stable(1, 1.5), library::sym_gamma(1), library::tempered_stable(2, 1.5, 1.0)] {
        if !radial_monotone(&m)? {
            continue;
        }
        let a = diagnostics::hw_functional(&m, diagnostics::DEFAULT_K, None)?;
        let b = diagnostics::hw_star_functional(&m, diagnostics::DEFAULT_K)?;
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max(((x - y) / x).abs());
        }
    }
    ok &= worst <= 1e-8;
    notes.push(format!("hw* vs hw rel {worst:.1e}"));
    Ok((ok, notes.join("; ")))
}

fn ratio_limits() -> Result<(bool, String)> {
    let cauchy = ratio_limit::ratio_px_p0(&library::stable(1, 1.0), 100.0, &[1.0])?;
    let chi = ratio_limit::chi_tail_mass(&library::gaussian(1), 100.0, 1.0)?;
    let mut ok = (cauchy - 0.99990).abs() <= 1e-6 && chi < 1e-20;
    let bump = ratio_limit::SampledFunction::from_fn(-3.0, 3.0, 1201, |y| {
        // smoothed indicator of [-1, 1]
        0.5 * (1.0 - ((y.abs() - 1.0) / 0.25).tanh())
    });
    let top = *ratio_limit::DEFAULT_T_LADDER.last().unwrap();
    let mut tested = Vec::new();
    for name in BUILTIN_NAMES {
        let m = library::builtin(name)?;
        if diagnostics::hw_functional(&m, diagnostics::DEFAULT_K, None)?.verdict != Verdict::Diverges {
            continue;
        }
        let r = ratio_limit::semigroup_ratio(&m, &bump, top, 0.0)?;
        let rel = (r.observed / r.target - 1.0).abs();
        ok &= rel <= 0.01;
        tested.push(format!("{name} {rel:.1e}"));
    }
    Ok((
        ok,
        format!("cauchy p(1)/p(0) {cauchy:.8}; gauss tail {chi:.1e}; semigroup at t={top}: {}", tested.join(", ")),
    ))
}

fn special_functions() -> Result<(bool, String)> {
    let mut red = 0.0f64;
    let mut deriv = 0.0f64;
    for i in 1..=500 {
        let z = 0.1 * i as f64;
        red = red.max((h_kernel(-0.5, z)? - z.cos()).abs());
        red = red.max((h_kernel(0.5, z)? - z.sin() / z).abs());
        for nu in [-0.5, 0.0, 0.5, 1.0] {
            let h = 1e-5 * z.max(1.0);
            let fd = (h_kernel(nu, z + h)? - h_kernel(nu, z - h)?) / (2.0 * h);
            let exact = -z * h_kernel(nu + 1.0, z)? / (2.0 * (nu + 1.0));
            deriv = deriv.max((fd - exact).abs());
        }
    }
    let mut at_zero = true;
    for nu in [-0.5, 0.0, 0.5, 1.0, 2.5] {
        at_zero &= h_kernel(nu, 0.0)? == 1.0;
    }
    let ok = red <= 1e-10 && deriv <= 1e-6 && at_zero;
    Ok((ok, format!("reductions {red:.1e}, derivative identity {deriv:.1e}, H(0)=1 {at_zero}")))
}

fn multiplier_operator() -> Result<(bool, String)> {
    let m = library::gaussian(1);
    let grid = line(Axis::new(0.0, 0.0, 1));
    let v = multiplier_apply(&m, &m, 1, 1.0, &grid)?.values[0];
    // (2π)^{-1}∫ξ² e^{-ξ²} dξ
    let exact = 0.25 / PI.sqrt();
    let wide = line(Axis::with_step(-5.0, 5.0, 0.25)?);
    let a = multiplier_apply(&m, &m, 0, 1.0, &wide)?;
    let b = invert_grid(&m, 1.0, &wide)?;
    let identical = a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits());
    let ok = (v - exact).abs() <= 1e-6 && identical;
    Ok((ok, format!("phi(D)p_1(0) = {v:.8} (exact {exact:.8}); m=0 bit-identical {identical}")))
}
