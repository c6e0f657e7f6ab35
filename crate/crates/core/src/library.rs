//! Bundled models: Gaussian, stable-type families, gamma laws, the
//! logarithmic kernel and the dyadic atom ladders.
//!
//! A builtin is addressed as `name` or `name(args)`, where args are
//! positional numbers or `key=value` pairs, e.g. `stable(1.5, dim=2)`.

use crate::error::{Error, Result};
use crate::model::{Atom, AtomLadder, AtomSet, MassRule, MeasureSpec, ModelSpec, RadialFamily};

pub const BUILTIN_NAMES: &[&str] = &[
    "gaussian",
    "cauchy",
    "stable",
    "tempered_stable",
    "truncated_stable",
    "gamma",
    "sym_gamma",
    "laplace",
    "exa2_logkernel",
    "exa3_atoms",
    "exa4_atoms",
    "exa5_atoms",
    "compound_poisson",
];

/// Dyadic levels materialized for the atom ladders.
pub const LADDER_LEVELS: usize = 60;

struct Args {
    positional: Vec<f64>,
    named: Vec<(String, f64)>,
}

impl Args {
    fn parse(name: &str, body: &str) -> Result<Args> {
        let mut out = Args {
            positional: Vec::new(),
            named: Vec::new(),
        };
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Error::UnknownBuiltin(format!("{name}: cannot parse argument `{part}`"));
            if let Some((k, v)) = part.split_once('=') {
                out.named.push((k.trim().to_string(), v.trim().parse().map_err(|_| bad())?));
            } else {
                out.positional.push(part.parse().map_err(|_| bad())?);
            }
        }
        Ok(out)
    }

    fn get(&self, key: &str, pos: usize, default: f64) -> f64 {
        self.named
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .or_else(|| self.positional.get(pos).copied())
            .unwrap_or(default)
    }

    fn dim(&self) -> Result<usize> {
        let d = self.get("dim", usize::MAX, 1.0);
        if d < 1.0 || d.fract() != 0.0 {
            return Err(Error::Domain(format!("dim must be a positive integer, got {d}")));
        }
        Ok(d as usize)
    }

    fn check_keys(&self, name: &str, allowed: &[&str], max_positional: usize) -> Result<()> {
        if let Some((k, _)) = self.named.iter().find(|(k, _)| k != "dim" && !allowed.contains(&k.as_str())) {
            return Err(Error::UnknownBuiltin(format!("{name}: unknown parameter `{k}`")));
        }
        if self.positional.len() > max_positional {
            return Err(Error::UnknownBuiltin(format!("{name}: too many arguments")));
        }
        Ok(())
    }
}

fn identity(n: usize, scale: f64) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = scale;
    }
    q
}

fn radial(n: usize, family: RadialFamily) -> ModelSpec {
    ModelSpec {
        dim: n,
        drift: vec![0.0; n],
        gaussian: vec![0.0; n * n],
        measure: MeasureSpec::RadialFamily(family),
        isotropic: true,
    }
}

/// ψ(ξ) = |ξ|².
pub fn gaussian(n: usize) -> ModelSpec {
    ModelSpec {
        dim: n,
        drift: vec![0.0; n],
        gaussian: identity(n, 2.0),
        measure: MeasureSpec::Atoms(AtomSet::default()),
        isotropic: true,
    }
}

/// ψ(ξ) = |ξ|^α; α = 2 is the Gaussian.
pub fn stable(n: usize, alpha: f64) -> ModelSpec {
    if alpha == 2.0 {
        gaussian(n)
    } else {
        radial(n, RadialFamily::Stable { alpha })
    }
}

pub fn tempered_stable(n: usize, alpha: f64, lambda: f64) -> ModelSpec {
    radial(n, RadialFamily::TemperedStable { alpha, lambda })
}

pub fn truncated_stable(n: usize, alpha: f64, cutoff: f64) -> ModelSpec {
    radial(n, RadialFamily::TruncatedStable { alpha, cutoff })
}

/// ψ(ξ) = ln(1 + |ξ|²).
pub fn sym_gamma(n: usize) -> ModelSpec {
    radial(n, RadialFamily::GammaType)
}

/// ψ(ξ) = ln(1 − iξ); p_t(x) = x^{t−1}e^{−x}/Γ(t).
pub fn gamma() -> ModelSpec {
    ModelSpec {
        dim: 1,
        drift: vec![-crate::exponent::gamma_compensator()],
        gaussian: vec![0.0],
        measure: MeasureSpec::OneSidedGamma,
        isotropic: false,
    }
}

pub fn log_kernel(n: usize) -> ModelSpec {
    radial(n, RadialFamily::LogKernel)
}

/// Unit mass on the sphere of the given radius.
pub fn compound_poisson(n: usize, radius: f64, mass: f64) -> ModelSpec {
    ModelSpec {
        dim: n,
        drift: vec![0.0; n],
        gaussian: vec![0.0; n * n],
        measure: MeasureSpec::Atoms(AtomSet {
            atoms: vec![Atom::Shell { radius, mass }],
            ladder: None,
        }),
        isotropic: true,
    }
}

/// Symmetric atoms at ±ratio^{-j}, j ≥ first, with mass b_j split evenly.
pub fn atom_ladder(ratio: f64, first: i32, masses: MassRule) -> ModelSpec {
    ModelSpec {
        dim: 1,
        drift: vec![0.0],
        gaussian: vec![0.0],
        measure: MeasureSpec::Atoms(AtomSet {
            atoms: Vec::new(),
            ladder: Some(AtomLadder {
                ratio,
                first,
                levels: LADDER_LEVELS,
                masses,
            }),
        }),
        isotropic: true,
    }
}

/// Resolves `name` or `name(args)`; a leading `builtin:` is accepted.
pub fn builtin(spec: &str) -> Result<ModelSpec> {
    let spec = spec.trim();
    let spec = spec.strip_prefix("builtin:").unwrap_or(spec);
    let (name, body) = match spec.split_once('(') {
        Some((n, rest)) => {
            let body = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::UnknownBuiltin(format!("{spec}: missing `)`")))?;
            (n.trim(), body)
        }
        None => (spec, ""),
    };
    let args = Args::parse(name, body)?;
    let model = match name {
        "gaussian" => {
            args.check_keys(name, &[], 0)?;
            gaussian(args.dim()?)
        }
        "cauchy" => {
            args.check_keys(name, &[], 0)?;
            stable(args.dim()?, 1.0)
        }
        "stable" => {
            args.check_keys(name, &["alpha"], 1)?;
            stable(args.dim()?, args.get("alpha", 0, 1.5))
        }
        "tempered_stable" => {
            args.check_keys(name, &["alpha", "lambda"], 2)?;
            tempered_stable(args.dim()?, args.get("alpha", 0, 1.5), args.get("lambda", 1, 1.0))
        }
        "truncated_stable" => {
            args.check_keys(name, &["alpha", "cutoff"], 2)?;
            truncated_stable(args.dim()?, args.get("alpha", 0, 1.5), args.get("cutoff", 1, 1.0))
        }
        "gamma" => {
            args.check_keys(name, &[], 0)?;
            gamma()
        }
        "sym_gamma" | "laplace" => {
            args.check_keys(name, &[], 0)?;
            sym_gamma(args.dim()?)
        }
        "exa2_logkernel" => {
            args.check_keys(name, &[], 0)?;
            log_kernel(args.dim()?)
        }
        "exa3_atoms" => {
            args.check_keys(name, &["a"], 1)?;
            atom_ladder(args.get("a", 0, 2.0), 0, MassRule::Constant { value: 1.0 })
        }
        "exa4_atoms" => {
            args.check_keys(name, &[], 0)?;
            atom_ladder(2.0, 1, MassRule::Harmonic)
        }
        "exa5_atoms" => {
            args.check_keys(name, &[], 0)?;
            atom_ladder(2.0, 1, MassRule::LogEvenSquareOdd)
        }
        "compound_poisson" => {
            args.check_keys(name, &["radius", "mass"], 2)?;
            compound_poisson(args.dim()?, args.get("radius", 0, 1.0), args.get("mass", 1, 1.0))
        }
        _ => return Err(Error::UnknownBuiltin(name.to_string())),
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_loads() {
        for name in BUILTIN_NAMES {
            builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn arguments() {
        let m = builtin("builtin:stable(alpha=1.2, dim=3)").unwrap();
        assert_eq!(m.dim, 3);
        assert_eq!(m.measure, MeasureSpec::RadialFamily(RadialFamily::Stable { alpha: 1.2 }));
        assert!(builtin("stable(beta=1)").is_err());
        assert!(builtin("nope").is_err());
        assert!(builtin("stable(3.0)").is_err());
    }
}
