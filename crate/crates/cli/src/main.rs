mod args;

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::Parser;
use levy_density::asymptotics::{self, Direction};
use levy_density::inversion::{self, Grid};
use levy_density::ratio_limit::{self, SampledFunction};
use levy_density::rearrangement::{self, RearrangementTable};
use levy_density::{acceptance, diagnostics, eval_psi, modelfile, ModelSpec};
use serde::Serialize;
use serde_json::{json, Map, Value};

use args::{Cli, Command, DirectionArg, Format, Functional, ModelArgs};

/// Everything that ends a run early.
#[derive(Debug)]
enum Failure {
    Core(levy_density::Error),
    Usage(String),
}

impl From<levy_density::Error> for Failure {
    fn from(e: levy_density::Error) -> Self {
        Failure::Core(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

/// What a subcommand produced, before formatting.
enum Payload {
    /// Pre-rendered CSV body (without the config block).
    Csv(String),
    Json(Value),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let threads = configure_threads();
    if let Command::Selftest(a) = &cli.command {
        return selftest(a.only);
    }
    let mut config = serde_json::to_value(&cli.command).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut config {
        map.insert("threads".into(), json!(threads));
    }
    let (common, default_format) = common_args(&cli.command);
    let format = common.format.unwrap_or(default_format);
    let out = common.out.clone();
    if let Value::Object(map) = &mut config {
        map.insert("format".into(), to_json(&format));
    }

    let result = load(&common.model).and_then(|model| {
        if let Value::Object(map) = &mut config {
            map.insert("model_hash".into(), json!(modelfile::model_hash(&model)));
        }
        execute(&cli.command, &model, format)
    });
    match result {
        Ok(payload) => match emit(&config, payload, format, out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("levyd: {e}");
                ExitCode::from(1)
            }
        },
        Err(Failure::Core(e)) if e.is_refusal() => {
            let body = json!({ "config": config, "refusal": e.to_string() });
            let _ = write_out(out.as_deref(), &pretty(&body));
            eprintln!("levyd: refused: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("levyd: error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("levyd: {m}");
            ExitCode::from(1)
        }
    }
}

/// Caps the worker pool from LEVY_THREADS; returns the effective count.
fn configure_threads() -> usize {
    if let Some(n) = std::env::var("LEVY_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    rayon::current_num_threads()
}

fn common_args(cmd: &Command) -> (&ModelArgs, Format) {
    match cmd {
        Command::Psi(a) => (&a.common, Format::Csv),
        Command::Density(a) => (&a.common, Format::Csv),
        Command::NuDist(a) => (&a.common, Format::Csv),
        Command::Diagnose(a) => (&a.common, Format::Json),
        Command::Asymptotics(a) => (&a.common, Format::Json),
        Command::RatioLimit(a) => (&a.common, Format::Json),
        Command::Classify(a) => (&a.common, Format::Json),
        Command::Selftest(_) => unreachable!("selftest has no model"),
    }
}

fn load(source: &str) -> Run<ModelSpec> {
    modelfile::load_model(source).map_err(|e| match e {
        levy_density::Error::ModelFile { .. } | levy_density::Error::Io(_) => Failure::Usage(format!("{source}: {e}")),
        other => Failure::Core(other),
    })
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn json_only(what: &str, format: Format) -> Run<()> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Usage(format!("{what} has no csv form; use --format json"))),
    }
}

fn execute(cmd: &Command, model: &ModelSpec, format: Format) -> Run<Payload> {
    match cmd {
        Command::Psi(a) => psi(a, model, format),
        Command::Density(a) => density(a, model, format),
        Command::Diagnose(a) => diagnose(a, model, format),
        Command::NuDist(a) => nu_dist(a, model, format),
        Command::Asymptotics(a) => {
            json_only("asymptotics", format)?;
            let direction = match a.direction {
                DirectionArg::To0 => Direction::TTo0,
                DirectionArg::ToInf => Direction::TToInf,
            };
            Ok(Payload::Json(to_json(&asymptotics::predict_pt0(model, direction)?)))
        }
        Command::RatioLimit(a) => {
            json_only("ratio-limit", format)?;
            let bump = a.bump.map(|w| {
                let edge = w + 2.0;
                SampledFunction::from_fn(-edge, edge, 4001, |y| 0.5 * (1.0 - ((y.abs() - w) / 0.25).tanh()))
            });
            let r = ratio_limit::ratio_report(model, &a.t_ladder, a.delta, a.x, bump.as_ref())?;
            Ok(Payload::Json(to_json(&r)))
        }
        Command::Classify(a) => {
            json_only("classify", format)?;
            Ok(Payload::Json(to_json(&diagnostics::classify(model, &a.t)?)))
        }
        Command::Selftest(_) => unreachable!("handled before model loading"),
    }
}

fn psi(a: &args::PsiArgs, model: &ModelSpec, format: Format) -> Run<Payload> {
    let n = model.dim;
    let (points, radial): (Vec<Vec<f64>>, bool) = match (&a.ray, a.xi.is_empty()) {
        (Some(axis), _) => (
            axis.points()
                .into_iter()
                .map(|r| {
                    let mut xi = vec![0.0; n];
                    xi[0] = r;
                    xi
                })
                .collect(),
            true,
        ),
        (None, false) => (a.xi.iter().map(|p| p.0.clone()).collect(), false),
        (None, true) => return Err(Failure::Usage("psi needs --xi or --ray".into())),
    };
    let mut rows = Vec::with_capacity(points.len());
    for xi in &points {
        if xi.len() != n {
            return Err(Failure::Usage(format!("--xi has {} coordinates, model dimension is {n}", xi.len())));
        }
        rows.push((xi.clone(), eval_psi(model, xi)?));
    }
    Ok(match format {
        Format::Csv => {
            let mut out = String::new();
            if radial {
                out.push_str("r,re,im\n");
            } else {
                let cols: Vec<String> = (1..=n).map(|i| format!("xi{i}")).collect();
                let _ = writeln!(out, "{},re,im", cols.join(","));
            }
            for (xi, v) in &rows {
                let head = if radial {
                    format!("{}", xi[0])
                } else {
                    xi.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
                };
                let _ = writeln!(out, "{head},{:.15e},{:.15e}", v.re, v.im);
            }
            Payload::Csv(out)
        }
        Format::Json => Payload::Json(Value::Array(
            rows.iter()
                .map(|(xi, v)| json!({ "xi": xi, "re": v.re, "im": v.im }))
                .collect(),
        )),
    })
}

fn density(a: &args::DensityArgs, model: &ModelSpec, format: Format) -> Run<Payload> {
    let field = if let Some(axis) = &a.radial {
        if a.phi.is_some() {
            return Err(Failure::Usage("--phi cannot be combined with --radial".into()));
        }
        inversion::invert_radial(model, a.t, &axis.points())?
    } else {
        let grid = match a.grid.as_slice() {
            [x] => Grid::Line { x: x.clone() },
            [x, y] => Grid::Plane { x: x.clone(), y: y.clone() },
            [] => return Err(Failure::Usage("density needs --grid or --radial".into())),
            _ => return Err(Failure::Usage("--grid may be given at most twice".into())),
        };
        match (&a.phi, a.power) {
            (Some(phi), Some(m)) => inversion::multiplier_apply(model, &load(phi)?, m, a.t, &grid)?,
            _ => inversion::invert_grid(model, a.t, &grid)?,
        }
    };
    Ok(match format {
        Format::Csv => Payload::Csv(field.to_csv(&modelfile::model_hash(model), &[])),
        Format::Json => Payload::Json(to_json(&field)),
    })
}

fn diagnose(a: &args::DiagnoseArgs, model: &ModelSpec, format: Format) -> Run<Payload> {
    let k = a.k.0..=a.k.1;
    if a.phi.is_some() != (a.functional == Functional::HwPhi) {
        return Err(Failure::Usage("--phi is required by hw-phi and accepted by no other functional".into()));
    }
    if a.t.is_some() && a.functional != Functional::Hw {
        return Err(Failure::Usage("--t only applies to the hw functional".into()));
    }
    let report = match a.functional {
        Functional::Hw => diagnostics::hw_functional(model, k, a.t)?,
        Functional::Kallenberg => diagnostics::kallenberg_functional(model, k)?,
        Functional::TailMass => diagnostics::tail_mass_functional(model, k)?,
        Functional::HwStar => diagnostics::hw_star_functional(model, k)?,
        Functional::HwPhi => {
            let phi = load(a.phi.as_deref().unwrap_or_default())?;
            diagnostics::hw_phi_functional(model, &phi, k)?
        }
    };
    Ok(match format {
        Format::Json => Payload::Json(to_json(&report)),
        Format::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "#functional={}", report.functional);
            let verdict = serde_json::to_value(report.verdict).unwrap_or_default();
            let _ = writeln!(out, "#verdict={}", verdict.as_str().unwrap_or("?"));
            let _ = writeln!(out, "#slope={}", report.slope);
            out.push_str("k,abscissa,value\n");
            for ((k, g), v) in report.k.iter().zip(&report.grid).zip(&report.values) {
                let _ = writeln!(out, "{k},{g:e},{v:.15e}");
            }
            Payload::Csv(out)
        }
    })
}

fn nu_dist(a: &args::NuDistArgs, model: &ModelSpec, format: Format) -> Run<Payload> {
    let table = RearrangementTable::build(model, a.x_max, a.nodes)?;
    let pt0 = match a.t {
        Some(t) => {
            let spectral = inversion::pt_zero(model, t)?;
            let laplace = rearrangement::pt0_laplace(model, t)?;
            Some(json!({
                "t": t,
                "pt_zero": spectral,
                "pt0_laplace": laplace,
                "relative_difference": ((spectral - laplace) / laplace).abs(),
            }))
        }
        None => None,
    };
    Ok(match format {
        Format::Json => Payload::Json(json!({ "table": to_json(&table), "pt0": pt0 })),
        Format::Csv => {
            let mut out = String::new();
            if let Some(Value::Object(p)) = &pt0 {
                for (k, v) in p {
                    let _ = writeln!(out, "#pt0.{k}={v}");
                }
            }
            out.push_str(&table.to_csv());
            Payload::Csv(out)
        }
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn config_lines(config: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = config {
        for (k, v) in map {
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Null => continue,
                other => other.to_string(),
            };
            let _ = writeln!(out, "#config.{k}={text}");
        }
    }
    out
}

fn emit(config: &Value, payload: Payload, format: Format, out: Option<&std::path::Path>) -> std::io::Result<()> {
    let text = match (payload, format) {
        (Payload::Csv(body), _) => format!("{}{body}", config_lines(config)),
        (Payload::Json(result), _) => {
            let mut doc = Map::new();
            doc.insert("config".into(), config.clone());
            doc.insert("result".into(), result);
            pretty(&Value::Object(doc))
        }
    };
    write_out(out, &text)
}

fn write_out(out: Option<&std::path::Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn selftest(only: Option<usize>) -> ExitCode {
    let outcomes = match only {
        Some(id) if (1..=acceptance::COUNT).contains(&id) => vec![acceptance::run(id)],
        Some(id) => {
            eprintln!("levyd: no acceptance criterion {id} (1..={})", acceptance::COUNT);
            return ExitCode::from(1);
        }
        None => acceptance::run_all(),
    };
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("selftest: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
