//! Run configuration: numeric flag parsing, the optional `key=value` file,
//! and the record of a run embedded in every report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Parse a count written either as an integer or in exponent form (`1e6`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(1.0..=9.007_199_254_740_992e15).contains(&v) || v.fract() != 0.0 {
        return Err(format!("'{s}' is not a positive integer"));
    }
    Ok(v as u64)
}

/// Read `key = value` lines; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("{}:{}: empty key", path.display(), i + 1));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Append the file entries as `--key=value` flags, skipping keys that the
/// command line already sets and keys the chosen command does not take.
/// Switches take `true` or `false`.
pub fn merge_config_args(
    args: Vec<OsString>,
    file: &BTreeMap<String, String>,
    accepted: &BTreeMap<String, bool>,
) -> Result<Vec<OsString>, String> {
    let present = |key: &str| {
        let flag = format!("--{key}");
        let prefix = format!("--{key}=");
        args.iter().any(|a| {
            let a = a.to_string_lossy();
            a == flag || a.starts_with(&prefix)
        })
    };
    let mut out = args.clone();
    for (key, value) in file {
        let Some(&is_switch) = accepted.get(key) else {
            continue;
        };
        if key == "config" || present(key) {
            continue;
        }
        if is_switch {
            match value.as_str() {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(format!("config key '{key}' expects true or false")),
            }
        } else {
            out.push(format!("--{key}={value}").into());
        }
    }
    Ok(out)
}

/// The resolved settings of one invocation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub threads: usize,
    pub seed: u64,
    pub force: bool,
}
