//! wasm-bindgen surface for the demo page in `www/`. Every export returns a
//! JSON string; failures become a thrown string.

use levy_density::diagnostics::{self, DEFAULT_K};
use levy_density::inversion::{invert_grid, Axis, Grid};
use levy_density::library::{self, BUILTIN_NAMES};
use levy_density::rearrangement::RearrangementTable;
use levy_density::{modelfile, ModelSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn model_from(source: &str) -> Result<ModelSpec, String> {
    let s = source.trim();
    let parsed = if s.contains('\n') || s.starts_with("dim") {
        modelfile::parse(s)
    } else {
        library::builtin(s)
    };
    parsed.map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
}

pub fn builtins() -> Out {
    to_json(&BUILTIN_NAMES)
}

/// Canonical TOML of a builtin, for editing in the page.
pub fn model_text(source: &str) -> Out {
    Ok(modelfile::save(&model_from(source)?))
}

#[derive(Serialize)]
struct DensityCurve {
    #[serde(flatten)]
    curve: Curve,
    mass: f64,
    tail_bound: f64,
}

pub fn density(source: &str, t: f64, x_min: f64, x_max: f64, count: usize) -> Out {
    let model = model_from(source)?;
    if model.dim != 1 {
        return Err("the demo plots one-dimensional densities only".into());
    }
    let axis = Axis::new(x_min, x_max, count.max(2));
    let f = invert_grid(&model, t, &Grid::Line { x: axis.clone() }).map_err(|e| e.to_string())?;
    to_json(&DensityCurve {
        curve: Curve {
            x: axis.points(),
            y: f.values,
        },
        mass: f.mass,
        tail_bound: f.tail_bound,
    })
}

#[derive(Serialize)]
struct Quotient {
    k: Vec<i32>,
    values: Vec<f64>,
    verdict: diagnostics::Verdict,
    slope: f64,
    liminf: f64,
}

/// Re ψ(ξ)/ln(1+|ξ|) along |ξ| = 2^k.
pub fn hw_quotient(source: &str, k_lo: i32, k_hi: i32) -> Out {
    let model = model_from(source)?;
    let (lo, hi) = if k_hi > k_lo { (k_lo, k_hi) } else { (*DEFAULT_K.start(), *DEFAULT_K.end()) };
    let r = diagnostics::hw_functional(&model, lo..=hi, None).map_err(|e| e.to_string())?;
    to_json(&Quotient {
        k: r.k,
        values: r.values,
        verdict: r.verdict,
        slope: r.slope,
        liminf: r.trailing_min,
    })
}

#[derive(Serialize)]
struct Rearranged {
    nu: Curve,
    u_star: Curve,
}

/// ν(x) = |{Re ψ ≤ x}| on log nodes and u*(s) = e^{-t(Re ψ)_*(s)}.
pub fn rearrangement(source: &str, x_max: f64, nodes: usize, t: f64) -> Out {
    let model = model_from(source)?;
    let table = RearrangementTable::build(&model, x_max, nodes.max(2)).map_err(|e| e.to_string())?;
    let finite: Vec<(f64, f64)> = table
        .x_nodes
        .iter()
        .zip(&table.nu_values)
        .filter(|(_, v)| v.is_finite())
        .map(|(x, v)| (*x, *v))
        .collect();
    let s_max = finite.last().map(|p| p.1).unwrap_or(1.0);
    let s: Vec<f64> = (0..=200).map(|i| s_max * i as f64 / 200.0).collect();
    let u = s
        .iter()
        .map(|&si| table.u_star(t, si))
        .collect::<levy_density::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?;
    to_json(&Rearranged {
        nu: Curve {
            x: finite.iter().map(|p| p.0).collect(),
            y: finite.iter().map(|p| p.1).collect(),
        },
        u_star: Curve { x: s, y: u },
    })
}

fn js(r: Out) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = builtins)]
pub fn builtins_js() -> Result<String, JsValue> {
    js(builtins())
}

#[wasm_bindgen(js_name = modelText)]
pub fn model_text_js(source: &str) -> Result<String, JsValue> {
    js(model_text(source))
}

#[wasm_bindgen(js_name = density)]
pub fn density_js(source: &str, t: f64, x_min: f64, x_max: f64, count: usize) -> Result<String, JsValue> {
    js(density(source, t, x_min, x_max, count))
}

#[wasm_bindgen(js_name = hwQuotient)]
pub fn hw_quotient_js(source: &str, k_lo: i32, k_hi: i32) -> Result<String, JsValue> {
    js(hw_quotient(source, k_lo, k_hi))
}

#[wasm_bindgen(js_name = rearrangement)]
pub fn rearrangement_js(source: &str, x_max: f64, nodes: usize, t: f64) -> Result<String, JsValue> {
    js(rearrangement(source, x_max, nodes, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Out) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn density_curve() {
        let v = parse(density("gaussian", 1.0, -1.0, 1.0, 3));
        assert!((v["y"][1].as_f64().unwrap() - 0.28209479177387814).abs() < 1e-10);
        assert!(density("gaussian(dim=2)", 1.0, -1.0, 1.0, 3).is_err());
    }

    #[test]
    fn toml_models_are_accepted() {
        let text = model_text("cauchy").unwrap();
        let v = parse(density(&text, 1.0, 0.0, 0.0, 2));
        assert!((v["y"][0].as_f64().unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    }

    #[test]
    fn quotient_and_rearrangement() {
        let q = parse(hw_quotient("sym_gamma", 4, 40));
        assert_eq!(q["verdict"], "bounded");
        let r = parse(rearrangement("cauchy", 10.0, 16, 1.0));
        // ν(x) = 2x for |ξ|
        let (x, nu) = (r["nu"]["x"][5].as_f64().unwrap(), r["nu"]["y"][5].as_f64().unwrap());
        assert!((nu - 2.0 * x).abs() < 1e-9 * nu);
        assert_eq!(r["u_star"]["y"][0], 1.0);
    }
}
