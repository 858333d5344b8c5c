//! JSON files: instances, decisions and experiment configurations.
//!
//! Parse failures report `source:line:column: field.path: message`; values
//! that parse but break an invariant report the offending field.

use std::fs;
use std::path::Path;

use nvgame_core::distributions::Instance;
use nvgame_core::robust::Decision;
use nvgame_core::stress::ExperimentConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// Deserializes `text`, naming `source` in diagnostics.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = strip_position(&inner.to_string());
        let field = if path == "." {
            String::new()
        } else {
            format!("{path}: ")
        };
        CliError::Parse {
            location: format!("{source}:{}:{}", inner.line(), inner.column()),
            message: format!("{field}{message}"),
        }
    })?;
    de.end().map_err(|e| CliError::Parse {
        location: format!("{source}:{}:{}", e.line(), e.column()),
        message: strip_position(&e.to_string()),
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn invalid(source: &str, e: nvgame_core::Error) -> CliError {
    match e {
        nvgame_core::Error::Input(message) => CliError::Parse {
            location: source.to_string(),
            message,
        },
        other => other.into(),
    }
}

pub fn parse_instance(text: &str, source: &str) -> Result<Instance, CliError> {
    let inst: Instance = parse_json(text, source)?;
    inst.validate().map_err(|e| invalid(source, e))?;
    Ok(inst)
}

pub fn parse_decision(text: &str, source: &str) -> Result<Decision, CliError> {
    let d: Decision = parse_json(text, source)?;
    if !d.y.is_finite() || d.y < 0.0 {
        return Err(CliError::Parse {
            location: source.into(),
            message: format!("y: order {} must be finite and nonnegative", d.y),
        });
    }
    if let Some(i) = d.z.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Parse {
            location: source.into(),
            message: format!("z[{i}]: must be finite"),
        });
    }
    Ok(d)
}

pub fn parse_config(text: &str, source: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = parse_json(text, source)?;
    cfg.validate().map_err(|e| invalid(source, e))?;
    Ok(cfg)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance, CliError> {
    parse_instance(&read_text(path)?, &path.display().to_string())
}

pub fn read_decision(path: &Path) -> Result<Decision, CliError> {
    parse_decision(&read_text(path)?, &path.display().to_string())
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    parse_config(&read_text(path)?, &path.display().to_string())
}

/// Pretty JSON; floats use the shortest representation that parses back to
/// the same value.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json(value)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
