//! Model definitions: TOML files with one table per letter, or the built-in
//! names `free`, `step:<lambda>` and `kp:<lambda>`.
//!
//! ```toml
//! name = "step"
//!
//! [substitution]      # optional, Fibonacci when absent
//! a = "ab"
//! b = "a"
//!
//! [letter.a]
//! kind = "constant"   # constant | delta | sampled
//! value = 1.0
//! length = 1.0
//!
//! [letter.b]
//! kind = "sampled"
//! samples_file = "b.txt"   # or: samples = [0.0, 0.5, 0.0]
//! length = 1.0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use aperiodic_spectrum::models::ClosedFormModel;
use aperiodic_spectrum::potential::{Model, PieceKind, PotentialPiece};
use aperiodic_spectrum::subshift::{Alphabet, Substitution};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: Option<String>,
    substitution: Option<BTreeMap<String, String>>,
    letter: BTreeMap<String, LetterSpec>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LetterSpec {
    Constant {
        value: f64,
        length: f64,
    },
    Delta {
        strength: f64,
        length: f64,
    },
    Sampled {
        samples: Option<Vec<f64>>,
        #[serde(alias = "samples-file")]
        samples_file: Option<String>,
        length: f64,
    },
}

/// A resolved model plus its closed form when it has one.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: Model,
    pub closed_form: Option<ClosedFormModel>,
}

pub fn load_model(spec: &str) -> CliResult<LoadedModel> {
    if let Some(cf) = builtin(spec)? {
        return Ok(LoadedModel { model: cf.to_model(), closed_form: Some(cf) });
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read model {}: {e}", path.display())))?;
    let model = parse_model(&text, path.parent().unwrap_or(Path::new(".")))?;
    let closed_form = recognize(&model);
    Ok(LoadedModel { model, closed_form })
}

fn builtin(spec: &str) -> CliResult<Option<ClosedFormModel>> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let coupling = || -> CliResult<f64> {
        let a = arg.ok_or_else(|| CliError::config(format!("model '{name}' needs a coupling, as in {name}:1.0")))?;
        a.parse().map_err(|_| CliError::config(format!("bad coupling '{a}'")))
    };
    let cf = match name {
        "free" if arg.is_none() => ClosedFormModel::Free,
        "step" => ClosedFormModel::step(coupling()?)?,
        "kp" | "kronig-penney" => ClosedFormModel::kronig_penney(coupling()?)?,
        _ => return Ok(None),
    };
    Ok(Some(cf))
}

fn single_char(key: &str) -> CliResult<char> {
    let mut chars = key.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(CliError::config(format!("letter names are single characters, got '{key}'"))),
    }
}

fn read_samples(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read samples {}: {e}", path.display())))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::config(format!("{}: bad sample '{t}'", path.display()))))
        .collect()
}

pub fn parse_model(text: &str, base_dir: &Path) -> CliResult<Model> {
    let file: ModelFile = toml::from_str(text).map_err(|e| CliError::config(format!("model file: {e}")))?;
    let substitution = match &file.substitution {
        None => Substitution::fibonacci(),
        Some(rules) => {
            let letters = rules.keys().map(|k| single_char(k)).collect::<CliResult<Vec<char>>>()?;
            let alphabet = Alphabet::new(letters.iter().copied())?;
            let pairs: Vec<(char, &str)> = letters.iter().copied().zip(rules.values().map(String::as_str)).collect();
            Substitution::new(alphabet, &pairs)?
        }
    };
    let mut pieces = Vec::with_capacity(file.letter.len());
    for (key, spec) in &file.letter {
        let piece = match spec {
            LetterSpec::Constant { value, length } => PotentialPiece::constant(*value, *length)?,
            LetterSpec::Delta { strength, length } => PotentialPiece::point_interaction(*strength, *length)?,
            LetterSpec::Sampled { samples, samples_file, length } => {
                let values = match (samples, samples_file) {
                    (Some(v), None) => v.clone(),
                    (None, Some(f)) => read_samples(&base_dir.join(f))?,
                    _ => {
                        return Err(CliError::config(format!(
                            "letter '{key}': give exactly one of samples and samples_file"
                        )))
                    }
                };
                PotentialPiece::sampled_with_length(values, *length)?
            }
        };
        pieces.push((single_char(key)?, piece));
    }
    let name = file.name.clone().unwrap_or_else(|| "model".into());
    let mut model = Model::new(name, substitution, pieces)?;
    for (k, v) in file.params {
        model = model.with_param(k, v);
    }
    Ok(model)
}

/// Free, step or Kronig-Penney models written out as files.
pub fn recognize(model: &Model) -> Option<ClosedFormModel> {
    let (a, b) = model.trace_letters().ok()?;
    let (pa, pb) = (model.piece(a), model.piece(b));
    if pa.length() != 1.0 || pb.length() != 1.0 || !pb.is_zero() {
        return None;
    }
    if pa.is_zero() {
        return Some(ClosedFormModel::Free);
    }
    match *pa.kind() {
        PieceKind::Constant { value } if value >= 0.0 => ClosedFormModel::step(value).ok(),
        PieceKind::PointInteraction { strength } => ClosedFormModel::kronig_penney(strength).ok(),
        _ => None,
    }
}
