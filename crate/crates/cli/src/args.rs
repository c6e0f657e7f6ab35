use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levy_density::inversion::Axis;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "levyd", version, about = "Densities and growth diagnostics for Lévy processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate ψ at points or along a ray.
    Psi(PsiArgs),
    /// Transition density p_t (or φ(D)^m p_t) on a grid.
    Density(DensityArgs),
    /// Growth functionals on a dyadic ladder.
    Diagnose(DiagnoseArgs),
    /// Sublevel measure ν(x) = |{Re ψ ≤ x}| and its inverse.
    NuDist(NuDistArgs),
    /// Behaviour of p_t(0) as t → 0 or t → ∞.
    Asymptotics(AsymptoticsArgs),
    /// Large-time ratio limits.
    RatioLimit(RatioLimitArgs),
    /// Existence and smoothness verdict.
    Classify(ClassifyArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Model file path, or `builtin:name(args)`.
    #[arg(long)]
    pub model: String,
    /// Output format; defaults to csv for tabular commands and json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PsiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    /// A point ξ, comma separated (repeatable).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point, conflicts_with = "ray")]
    pub xi: Vec<Point>,
    /// |ξ| sweep start:stop:step along the first axis.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_axis)]
    pub ray: Option<Axis>,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    #[arg(long)]
    pub t: f64,
    /// start:stop:step; give twice for a plane (x then y).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_axis, num_args = 1)]
    pub grid: Vec<Axis>,
    /// Radii start:stop:step for an isotropic model.
    #[arg(long, value_parser = parse_axis, conflicts_with = "grid")]
    pub radial: Option<Axis>,
    /// Symbol φ of the multiplier φ(D)^m, as a model.
    #[arg(long, requires = "power")]
    pub phi: Option<String>,
    /// Multiplier power m.
    #[arg(long, requires = "phi")]
    pub power: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Hw,
    Kallenberg,
    TailMass,
    HwStar,
    HwPhi,
}

#[derive(Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[arg(value_enum)]
    pub functional: Functional,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    /// Ladder exponents lo:hi.
    #[arg(long, value_parser = parse_k, default_value = "4:40")]
    pub k: (i32, i32),
    /// Compare the hw liminf with the threshold n/t.
    #[arg(long)]
    pub t: Option<f64>,
    /// Symbol φ for hw-phi.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct NuDistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    /// Also compare p_t(0) with its Laplace form at this t.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    To0,
    ToInf,
}

#[derive(Debug, Args, Serialize)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    #[arg(long, value_enum, default_value = "to0")]
    pub direction: DirectionArg,
}

#[derive(Debug, Args, Serialize)]
pub struct RatioLimitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    pub t_ladder: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub x: f64,
    /// Half-width w of the smoothed indicator of [-w, w] used for T_t f.
    #[arg(long)]
    pub bump: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub t: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelftestArgs {
    /// Run a single criterion.
    #[arg(long)]
    pub only: Option<usize>,
}

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

pub fn parse_axis(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got `{s}`"));
    }
    Axis::with_step(number(parts[0])?, number(parts[1])?, number(parts[2])?).map_err(|e| e.to_string())
}

fn parse_k(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo = a.trim().parse::<i32>().map_err(|_| format!("`{a}` is not an integer"))?;
    let hi = b.trim().parse::<i32>().map_err(|_| format!("`{b}` is not an integer"))?;
    if hi < lo {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// A point ξ given as comma-separated coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',').map(number).collect::<Result<_, _>>().map(Point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_and_ranges() {
        let a = parse_axis("-10:10:0.01").unwrap();
        assert_eq!(a.count, 2001);
        assert!(parse_axis("1:2").is_err());
        assert_eq!(parse_k("4:40").unwrap(), (4, 40));
        assert!(parse_k("5:4").is_err());
        assert_eq!(parse_point("1,-2").unwrap(), Point(vec![1.0, -2.0]));
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
