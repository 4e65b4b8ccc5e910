use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hlik_core::model::ObservedData;
use hlik_core::HlikError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{kind}: {0}", kind = .0.kind())]
    Numeric(HlikError),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<HlikError> for CliError {
    fn from(e: HlikError) -> Self {
        if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e)
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// One observation per line; `#` starts a comment; blank lines are skipped.
pub fn parse_data(text: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let x: f64 = body
            .parse()
            .map_err(|_| CliError::Config(format!("line {}: cannot parse '{body}' as a number", i + 1)))?;
        out.push(x);
    }
    Ok(out)
}

pub fn read_data(path: &Path) -> CliResult<ObservedData> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values = parse_data(&text)?;
    ObservedData::new(values).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(format!("serialising output: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Write to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

pub fn csv_string<R: Serialize>(rows: &[R]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Config(format!("writing CSV: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("writing CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub timestamp: String,
}

pub fn digest(path: &Path) -> CliResult<InputDigest> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Sidecar `<out>.manifest.json` next to an output file. The timestamp lives only
/// here so the output itself stays reproducible.
pub fn write_manifest<C: Serialize>(
    out: Option<&Path>,
    subcommand: &str,
    config: &C,
    seed: Option<u64>,
    inputs: &[&Path],
) -> CliResult<()> {
    let Some(out) = out else { return Ok(()) };
    let manifest = RunManifest {
        subcommand: subcommand.into(),
        config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        inputs: inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    let path = PathBuf::from(name);
    fs::write(&path, to_json(&manifest)?).map_err(|e| io_err(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_with_comments() {
        let v = parse_data("# header\n1.5\n\n 2 # trailing\n3e-1\n").unwrap();
        assert_eq!(v, vec![1.5, 2.0, 0.3]);
        assert!(matches!(parse_data("1\nabc\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(CliError::from(HlikError::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(HlikError::ImproperPosterior("x".into())).exit_code(), 3);
    }
}
