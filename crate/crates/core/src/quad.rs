//! Quadrature toolkit: adaptive Gauss–Kronrod, Gauss–Legendre panels,
//! logarithmic substitution for endpoint singularities and infinite ranges,
//! and Wynn-accelerated oscillatory tails.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    pub fn tight() -> Self {
        Tolerance {
            abs: 1e-15,
            rel: 1e-12,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    fn zero() -> Self {
        QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    fn add(&mut self, other: QuadResult) {
        self.value += other.value;
        self.abs_error += other.abs_error;
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: (value, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive 15-point Gauss–Kronrod quadrature on a finite interval.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_intervals: usize,
) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let mut evals = 15;
    while err > tol.target(total) && intervals.len() < max_intervals {
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, pv, pe) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            intervals.push((lo, hi, pv, pe));
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // re-sum to shed the drift of the running updates
    let total: f64 = intervals.iter().map(|x| x.2).sum();
    let err: f64 = intervals.iter().map(|x| x.3).sum();
    QuadResult {
        value: total,
        abs_error: err,
        evaluations: evals,
        converged: err <= tol.target(total),
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached 16-point Gauss–Legendre rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Nodes and weights of a composite 16-point rule on the given breakpoints.
pub fn composite_nodes(breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gl16();
    let mut nodes = Vec::with_capacity(16 * breaks.len());
    let mut weights = Vec::with_capacity(16 * breaks.len());
    for pair in breaks.windows(2) {
        let c = 0.5 * (pair[0] + pair[1]);
        let h = 0.5 * (pair[1] - pair[0]);
        for k in 0..16 {
            nodes.push(c + h * x[k]);
            weights.push(h * w[k]);
        }
    }
    (nodes, weights)
}

/// ∫ f over [a + lo, a + hi] through x = a + e^s, for integrands singular at a.
fn log_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, s_lo: f64, s_hi: f64, tol: Tolerance) -> QuadResult {
    gauss_kronrod(
        |s| {
            let e = s.exp();
            let v = f(a + e);
            if v == 0.0 {
                0.0
            } else {
                v * e
            }
        },
        s_lo,
        s_hi,
        tol,
        200,
    )
}

const PANEL: f64 = 4.0;

/// ∫_a^b f(x) dx for f with an integrable (possibly power-law) singularity at a.
///
/// Works outward from b in logarithmic panels until the remaining
/// contribution near a is negligible.
pub fn integrate_singular_left<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    let width = b - a;
    if width <= 0.0 {
        return QuadResult::zero();
    }
    let mut s_hi = width.ln();
    let mut out = QuadResult::zero();
    let mut small_run = 0;
    let floor = (f64::MIN_POSITIVE * 1e10).ln().max(s_hi - 1500.0);
    let panel_tol = Tolerance::new(tol.abs * 0.05, tol.rel * 0.1);
    while s_hi > floor {
        let s_lo = (s_hi - PANEL).max(floor);
        let piece = log_panel(&mut f, a, s_lo, s_hi, panel_tol);
        out.add(piece);
        if piece.value.abs() <= 0.01 * tol.target(out.value) && piece.abs_error <= tol.target(out.value) {
            small_run += 1;
            if small_run >= 2 {
                return out;
            }
        } else {
            small_run = 0;
        }
        s_hi = s_lo;
    }
    out.converged = false;
    out
}

/// ∫_a^∞ f(x) dx for integrands decaying at infinity (possibly slowly).
///
/// `scale` sets the width of the first, non-logarithmic panel.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, scale: f64, tol: Tolerance) -> QuadResult {
    let panel_tol = Tolerance::new(tol.abs * 0.05, tol.rel * 0.1);
    let mut out = gauss_kronrod(&mut f, a, a + scale, panel_tol, 200);
    let mut s_lo = scale.ln();
    let cap = 700.0_f64.min(f64::MAX.ln() - 1.0);
    let mut small_run = 0;
    let mut last = f64::INFINITY;
    while s_lo < cap {
        let s_hi = (s_lo + PANEL).min(cap);
        let piece = log_panel(&mut f, a, s_lo, s_hi, panel_tol);
        out.add(piece);
        let mag = piece.value.abs();
        if mag <= 0.01 * tol.target(out.value) && piece.abs_error <= tol.target(out.value) {
            small_run += 1;
            if small_run >= 2 {
                return out;
            }
        } else {
            small_run = 0;
        }
        last = mag;
        s_lo = s_hi;
    }
    out.converged = false;
    out.abs_error += last;
    out
}

/// Wynn's epsilon algorithm on a sequence of partial sums.
/// Returns (estimate, error estimate).
pub fn wynn_epsilon(partial: &[f64]) -> (f64, f64) {
    let n = partial.len();
    if n == 0 {
        return (0.0, f64::INFINITY);
    }
    if n < 3 {
        let last = partial[n - 1];
        let err = if n == 2 { (last - partial[0]).abs() } else { f64::INFINITY };
        return (last, err);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut estimates = vec![partial[n - 1]];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for k in 0..cur.len() - 1 {
            let diff = cur[k + 1] - cur[k];
            let v = if diff == 0.0 {
                f64::INFINITY
            } else {
                prev[k + 1] + 1.0 / diff
            };
            next.push(v);
        }
        col += 1;
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        if col % 2 == 0 {
            estimates.push(*next.last().expect("nonempty"));
        }
        prev = cur;
        cur = next;
    }
    let m = estimates.len();
    if m >= 2 {
        let best = estimates[m - 1];
        let err = (estimates[m - 1] - estimates[m - 2]).abs();
        (best, err)
    } else {
        let err = (partial[n - 1] - partial[n - 2]).abs();
        (partial[n - 1], err)
    }
}

/// ∫_start^∞ f(x) dx for an oscillatory integrand whose zeros are roughly
/// `half_period` apart. Integrates panel by panel and accelerates the partial
/// sums with Wynn's epsilon algorithm.
pub fn oscillatory_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    half_period: f64,
    tol: Tolerance,
    max_panels: usize,
) -> QuadResult {
    let panel_tol = Tolerance::new(tol.abs * 0.01, tol.rel * 0.01);
    let mut partial = Vec::with_capacity(max_panels);
    let mut sum = 0.0;
    let mut evals = 0;
    let mut quad_err = 0.0;
    let mut prev_estimate = f64::NAN;
    let mut settled = 0;
    for k in 0..max_panels {
        let lo = start + k as f64 * half_period;
        let hi = lo + half_period;
        let piece = gauss_kronrod(&mut f, lo, hi, panel_tol, 50);
        evals += piece.evaluations;
        quad_err += piece.abs_error;
        sum += piece.value;
        partial.push(sum);
        if piece.value.abs() <= 1e-3 * tol.abs && k >= 2 {
            return QuadResult {
                value: sum,
                abs_error: quad_err + piece.value.abs(),
                evaluations: evals,
                converged: true,
            };
        }
        if k >= 6 && k % 2 == 0 {
            let window = &partial[partial.len().saturating_sub(24)..];
            let (est, err) = wynn_epsilon(window);
            let change = (est - prev_estimate).abs();
            prev_estimate = est;
            let target = tol.target(est);
            if err.max(change) <= 0.1 * target {
                settled += 1;
                if settled >= 2 {
                    return QuadResult {
                        value: est,
                        abs_error: quad_err + err.max(change),
                        evaluations: evals,
                        converged: true,
                    };
                }
            } else {
                settled = 0;
            }
        }
    }
    let window = &partial[partial.len().saturating_sub(24)..];
    let (est, err) = wynn_epsilon(window);
    QuadResult {
        value: est,
        abs_error: quad_err + err,
        evaluations: evals,
        converged: false,
    }
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_rule_is_exact_for_polynomials() {
        for deg in 0..=22 {
            let (v, _) = gk15(&mut |x: f64| x.powi(deg), 0.0, 1.0);
            assert_relative_eq!(v, 1.0 / (deg as f64 + 1.0), max_relative = 1e-14);
        }
        // embedded Gauss rule: the error estimate vanishes up to degree 13
        for deg in 0..=13 {
            let f = |x: f64| x.powi(deg);
            let c = 0.0;
            let mut g = f(c) * WG[3];
            for j in (1..7).step_by(2) {
                g += WG[j / 2] * (f(-XGK[j]) + f(XGK[j]));
            }
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((g - exact).abs() < 1e-14, "deg {deg}: {g} vs {exact}");
        }
    }

    #[test]
    fn legendre_rule_exactness() {
        let (x, w) = gauss_legendre(16);
        for deg in 0..=31 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((s - exact).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = gauss_kronrod(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::tight(), 500);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert_relative_eq!(r.value, exact, max_relative = 1e-11);
        assert!(r.converged);
    }

    #[test]
    fn singular_left_power_law() {
        for &p in &[-0.9, -0.5, 0.3] {
            let r = integrate_singular_left(|x: f64| x.powf(p), 0.0, 2.0, Tolerance::tight());
            let exact = 2f64.powf(p + 1.0) / (p + 1.0);
            assert_relative_eq!(r.value, exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn infinite_range_slow_decay() {
        let r = integrate_to_infinity(|x: f64| (1.0 + x).powf(-1.2), 0.0, 1.0, Tolerance::tight());
        assert_relative_eq!(r.value, 5.0, max_relative = 1e-9);
        let r = integrate_to_infinity(|x: f64| (-x * x).exp(), 0.0, 1.0, Tolerance::tight());
        assert_relative_eq!(r.value, PI.sqrt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        let mut s = 0.0;
        let partial: Vec<f64> = (0..20)
            .map(|k| {
                s += if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
                s
            })
            .collect();
        let (est, _) = wynn_epsilon(&partial);
        assert!((est - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_tail_sine_integral() {
        // ∫_1^∞ cos(x)/x dx = −Ci(1)
        let r = oscillatory_tail(|x: f64| x.cos() / x, 1.0, PI, Tolerance::tight(), 200);
        assert!((r.value - (-0.337_403_922_900_968_1)).abs() < 1e-11, "{r:?}");
        // ∫_0^∞ cos(3x)/(1+x²) dx = π e^{−3}/2
        let r = oscillatory_tail(|x: f64| (3.0 * x).cos() / (1.0 + x * x), 0.0, PI / 3.0, Tolerance::tight(), 200);
        assert!((r.value - PI * (-3.0f64).exp() / 2.0).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn compensated_sum() {
        let mut k = KahanSum::default();
        k.add(1.0);
        for _ in 0..1000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-13)).abs() < 1e-18);
    }
}
