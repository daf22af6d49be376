use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use infousage_core::experiments::{ExperimentKind, Params};
use serde::Serialize;

use crate::Failure;

pub const SEED_ENV: &str = "INFOUSAGE_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUTPUT_DIR: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved run configuration. Everything except the output
/// directory is embedded in the artifacts, so a run can be replayed from
/// them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub replications: usize,
    pub format: Format,
    pub emit_svg: bool,
    /// Every experiment parameter, defaults included.
    pub params: BTreeMap<String, f64>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn to_params(&self) -> Params {
        Params {
            seed: self.seed,
            replications: Some(self.replications),
            values: self.params.clone(),
        }
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub emit_svg: bool,
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub emit_svg: Option<bool>,
    pub params: BTreeMap<String, f64>,
}

fn field_error(key: &str, expected: &str) -> Failure {
    Failure::Usage(format!("config field `{key}`: expected {expected}"))
}

fn count_field(key: &str, value: &toml::Value) -> Result<u64, Failure> {
    value
        .as_integer()
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| field_error(key, "a non-negative integer"))
}

/// Parses a flat TOML document. Syntax errors are configuration errors;
/// unknown or ill-typed fields are usage errors naming the field.
pub fn parse_file_config(text: &str, kind: ExperimentKind) -> Result<FileConfig, Failure> {
    let table: toml::Table = text.parse().map_err(|e| Failure::Config(format!("malformed config: {e}")))?;
    let mut cfg = FileConfig::default();
    for (key, value) in &table {
        match key.as_str() {
            "experiment" => {
                cfg.experiment = Some(value.as_str().ok_or_else(|| field_error(key, "a string"))?.to_string())
            }
            "seed" => cfg.seed = Some(count_field(key, value)?),
            "replications" => cfg.replications = Some(count_field(key, value)? as usize),
            "output_dir" => cfg.output_dir = Some(value.as_str().ok_or_else(|| field_error(key, "a path"))?.into()),
            "format" => {
                cfg.format = Some(match value.as_str() {
                    Some("csv") => Format::Csv,
                    Some("json") => Format::Json,
                    _ => return Err(field_error(key, "\"csv\" or \"json\"")),
                })
            }
            "emit_svg" => cfg.emit_svg = Some(value.as_bool().ok_or_else(|| field_error(key, "a boolean"))?),
            _ => {
                if !kind.params().iter().any(|p| p.key == key) {
                    let known: Vec<&str> = kind.params().iter().map(|p| p.key).collect();
                    return Err(Failure::Usage(format!(
                        "unknown config field `{key}` for {} (parameters: {})",
                        kind.name(),
                        known.join(", ")
                    )));
                }
                let v = match value {
                    toml::Value::Integer(i) => *i as f64,
                    toml::Value::Float(f) => *f,
                    _ => return Err(field_error(key, "a number")),
                };
                cfg.params.insert(key.clone(), v);
            }
        }
    }
    Ok(cfg)
}

pub fn read_file_config(path: &Path, kind: ExperimentKind) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_file_config(&text, kind)
}

/// Merges defaults, the seed environment variable, the config file, and
/// command-line flags, in increasing order of precedence.
pub fn resolve(
    kind: ExperimentKind,
    file: FileConfig,
    flags: Overrides,
    env_seed: Option<&str>,
) -> Result<ExperimentConfig, Failure> {
    if let Some(name) = &file.experiment {
        if name != kind.name() {
            return Err(Failure::Usage(format!(
                "config field `experiment` is {name} but the command line asks for {}",
                kind.name()
            )));
        }
    }
    let env_seed = env_seed
        .map(|s| s.trim().parse::<u64>().map_err(|_| Failure::Usage(format!("{SEED_ENV} must be a non-negative integer, got {s:?}"))))
        .transpose()?;
    let seed = flags.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED);
    let replications = flags.replications.or(file.replications).unwrap_or(kind.default_replications());
    if replications == 0 {
        return Err(Failure::Usage("replications must be at least 1".into()));
    }
    let mut params: BTreeMap<String, f64> = kind.params().iter().map(|p| (p.key.to_string(), p.default)).collect();
    params.extend(file.params);
    Ok(ExperimentConfig {
        experiment: kind.name().to_string(),
        seed,
        replications,
        format: flags.format.or(file.format).unwrap_or(Format::Csv),
        emit_svg: flags.emit_svg || file.emit_svg.unwrap_or(false),
        params,
        output_dir: flags.output_dir.or(file.output_dir).unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()),
    })
}
