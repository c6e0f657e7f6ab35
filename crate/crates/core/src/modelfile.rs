//! TOML model files.
//!
//! ```toml
//! dim = 1
//! drift = [0.0]
//! gaussian = [0.0]
//! isotropic = true
//!
//! [measure]
//! variant = "radial_family"
//!
//! [measure.params]
//! family = "stable"
//! alpha = 1.5
//! ```
//!
//! `save` writes the canonical form; loading a canonical file and saving it
//! again reproduces it byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::library;
use crate::model::{AtomSet, MeasureSpec, ModelSpec, RadialFamily, RadialTable};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileModel {
    dim: usize,
    drift: Vec<f64>,
    gaussian: Vec<f64>,
    #[serde(default)]
    isotropic: bool,
    measure: FileMeasure,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum FileMeasure {
    Atoms(AtomSet),
    RadialFamily(RadialFamily),
    RadialTable(RadialTable),
    OneSidedGamma,
}

impl From<&ModelSpec> for FileModel {
    fn from(m: &ModelSpec) -> Self {
        let measure = match &m.measure {
            MeasureSpec::Atoms(a) => FileMeasure::Atoms(a.clone()),
            MeasureSpec::RadialFamily(f) => FileMeasure::RadialFamily(*f),
            MeasureSpec::RadialTable(t) => FileMeasure::RadialTable(t.clone()),
            MeasureSpec::OneSidedGamma => FileMeasure::OneSidedGamma,
        };
        FileModel {
            dim: m.dim,
            drift: m.drift.clone(),
            gaussian: m.gaussian.clone(),
            isotropic: m.isotropic,
            measure,
        }
    }
}

impl From<FileModel> for ModelSpec {
    fn from(f: FileModel) -> Self {
        let measure = match f.measure {
            FileMeasure::Atoms(a) => MeasureSpec::Atoms(a),
            FileMeasure::RadialFamily(r) => MeasureSpec::RadialFamily(r),
            FileMeasure::RadialTable(t) => MeasureSpec::RadialTable(t),
            FileMeasure::OneSidedGamma => MeasureSpec::OneSidedGamma,
        };
        ModelSpec {
            dim: f.dim,
            drift: f.drift,
            gaussian: f.gaussian,
            measure,
            isotropic: f.isotropic,
        }
    }
}

/// Parses and validates a model document.
pub fn parse(text: &str) -> Result<ModelSpec> {
    let de = toml::Deserializer::new(text);
    let file: FileModel = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        let field = if path == "." { "(document)".to_string() } else { path };
        Error::ModelFile {
            line,
            field,
            message: inner.message().to_string(),
        }
    })?;
    let model = ModelSpec::from(file);
    model.validate().map_err(|e| locate(text, e))?;
    Ok(model)
}

/// Canonical TOML text for a model.
pub fn save(model: &ModelSpec) -> String {
    toml::to_string(&FileModel::from(model)).expect("model serializes to TOML")
}

/// Reads `builtin:name(args)` from the library, anything else from disk.
pub fn load_model(source: &str) -> Result<ModelSpec> {
    if source.trim_start().starts_with("builtin:") {
        return library::builtin(source);
    }
    load_path(source)
}

pub fn load_path(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// First 16 hex digits of the SHA-256 of the canonical text.
pub fn model_hash(model: &ModelSpec) -> String {
    let digest = Sha256::digest(save(model).as_bytes());
    format!("{digest:x}")[..16].to_string()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Gives validation errors the line of the key they name.
fn locate(text: &str, err: Error) -> Error {
    match err {
        Error::ModelFile { field, message, .. } => {
            let keys = key_lines(text);
            let exact = keys.iter().find(|(k, _)| *k == field);
            let line = exact
                .or_else(|| {
                    keys.iter()
                        .filter(|(k, _)| field.starts_with(k.as_str()))
                        .max_by_key(|(k, _)| k.len())
                })
                .map(|(_, l)| *l)
                .unwrap_or(0);
            Error::ModelFile { line, field, message }
        }
        other => {
            let line = key_lines(text)
                .into_iter()
                .find(|(k, _)| k == "measure")
                .map(|(_, l)| l)
                .unwrap_or(0);
            Error::ModelFile {
                line,
                field: "measure".into(),
                message: other.to_string(),
            }
        }
    }
}

/// Dotted key paths (array-of-table entries indexed as `a[i]`) with their lines.
fn key_lines(text: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut prefix = String::new();
    let mut counts: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let no = i + 1;
        if let Some(name) = line.strip_prefix("[[").and_then(|s| s.split("]]").next()) {
            let name = name.trim().to_string();
            let idx = match counts.iter_mut().find(|(k, _)| *k == name) {
                Some((_, c)) => {
                    *c += 1;
                    *c - 1
                }
                None => {
                    counts.push((name.clone(), 1));
                    0
                }
            };
            prefix = format!("{name}[{idx}]");
            out.push((prefix.clone(), no));
        } else if let Some(name) = line.strip_prefix('[').and_then(|s| s.split(']').next()) {
            prefix = name.trim().to_string();
            out.push((prefix.clone(), no));
        } else if let Some((key, _)) = line.split_once('=') {
            let key = key.trim();
            if key.is_empty() || key.starts_with('#') {
                continue;
            }
            let full = if prefix.is_empty() { key.to_string() } else { format!("{prefix}.{key}") };
            out.push((full, no));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{builtin, BUILTIN_NAMES};

    #[test]
    fn canonical_round_trip() {
        for name in BUILTIN_NAMES {
            let m = builtin(name).unwrap();
            let text = save(&m);
            let back = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(back, m, "{name}");
            assert_eq!(save(&back), text, "{name}");
        }
    }

    #[test]
    fn unknown_key_is_located() {
        let text = "dim = 1\ndrift = [0.0]\ngaussian = [0.0]\n\n[measure]\nvariant = \"radial_family\"\n\n[measure.params]\nfamily = \"stable\"\nalpha = 1.5\nbeta = 2.0\n";
        match parse(text) {
            Err(Error::ModelFile { line, field, message }) => {
                assert!(message.contains("beta"), "{message}");
                assert!(field.starts_with("measure"), "{field}");
                assert!(line >= 8, "line {line}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_error_names_field_and_line() {
        let text = "dim = 1\ndrift = [0.0]\ngaussian = [0.0]\n\n[measure]\nvariant = \"radial_family\"\n\n[measure.params]\nfamily = \"stable\"\nalpha = 2.5\n";
        match parse(text) {
            Err(Error::ModelFile { line, field, .. }) => {
                assert_eq!(field, "measure.params.alpha");
                assert_eq!(line, 10);
            }
            other => panic!("{other:?}"),
        }
        let text = "dim = 2\ndrift = [0.0]\ngaussian = [1.0, 0.0, 0.0, 1.0]\n\n[measure]\nvariant = \"one_sided_gamma\"\n";
        match parse(text) {
            Err(Error::ModelFile { line, field, .. }) => {
                assert_eq!(field, "drift");
                assert_eq!(line, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_is_located() {
        let text = "dim = 1\ndrift = [0.0]\ngaussian = \"two\"\n\n[measure]\nvariant = \"one_sided_gamma\"\n";
        match parse(text) {
            Err(Error::ModelFile { line, field, .. }) => {
                assert_eq!(field, "gaussian");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_is_stable() {
        let a = model_hash(&builtin("gaussian").unwrap());
        assert_eq!(a, model_hash(&builtin("builtin:gaussian").unwrap()));
        assert_ne!(a, model_hash(&builtin("cauchy").unwrap()));
        assert_eq!(a.len(), 16);
    }
}
