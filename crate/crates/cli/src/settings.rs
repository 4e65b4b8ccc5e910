use std::path::Path;

use serde::de::DeserializeOwned;
use toml::{Table, Value};

use crate::io::{read_text, CliError, CliResult};

/// Flag values layered over a TOML config file. Keys use the config spelling.
#[derive(Debug, Default)]
pub struct Overrides(Table);

impl Overrides {
    pub fn int(&mut self, key: &str, v: Option<impl Into<u64>>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), Value::Integer(v.into() as i64));
        }
        self
    }

    pub fn float(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), Value::Float(v));
        }
        self
    }

    pub fn string(&mut self, key: &str, v: Option<&str>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), Value::String(v.into()));
        }
        self
    }

    pub fn ints(&mut self, key: &str, v: Option<&[usize]>) -> &mut Self {
        if let Some(v) = v {
            self.0
                .insert(key.into(), Value::Array(v.iter().map(|x| Value::Integer(*x as i64)).collect()));
        }
        self
    }

    pub fn floats(&mut self, key: &str, v: Option<&[f64]>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.into(), Value::Array(v.iter().map(|x| Value::Float(*x)).collect()));
        }
        self
    }

    pub fn strings(&mut self, key: &str, v: Option<&[String]>) -> &mut Self {
        if let Some(v) = v {
            self.0
                .insert(key.into(), Value::Array(v.iter().map(|x| Value::String(x.clone())).collect()));
        }
        self
    }
}

/// Config file (if any) with flags applied on top, deserialised into `T`.
pub fn resolve<T: DeserializeOwned>(config: Option<&Path>, overrides: Overrides) -> CliResult<T> {
    let mut table = match config {
        Some(p) => read_text(p)?
            .parse::<Table>()
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => Table::new(),
    };
    for (k, v) in overrides.0 {
        table.insert(k, v);
    }
    if !table.contains_key("seed") {
        return Err(CliError::Config("an explicit --seed (or `seed` in the config file) is required".into()));
    }
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))
}
