//! Sectioned key-value configuration.
//!
//! Config files are TOML. Each component reads its own `[section]`; keys
//! missing from a section fall back to built-in defaults, and
//! `section.key=value` overrides are applied on top of the file. Every
//! error names the offending key as `section.key`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::neuron::SpikeWaveform;

fn config_err(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| {
        let message = e.message().to_string();
        let key = match e.span() {
            Some(span) => {
                let line = text[..span.start].matches('\n').count() + 1;
                format!("line {line}")
            }
            None => "config".to_string(),
        };
        config_err(key, message)
    })
}

pub fn load_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(path.display().to_string(), e.to_string()))?;
    parse_table(&text)
}

/// Applies one `section.key=value` override. The value is read as a TOML
/// value when it parses as one, otherwise as a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(assignment, "override must look like section.key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(path, "empty key segment"));
    }
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for (depth, section) in sections.iter().enumerate() {
        let entry = cursor
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| config_err(parts[..=depth].join("."), "is not a section"))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

pub fn apply_overrides<S: AsRef<str>>(table: &mut Table, overrides: &[S]) -> Result<()> {
    for o in overrides {
        apply_override(table, o.as_ref())?;
    }
    Ok(())
}

/// Deserializes `value` into `T`, reporting the failing key under `prefix`.
pub fn from_value<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T> {
    serde_path_to_error::deserialize::<_, T>(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        let mut key = prefix.to_string();
        if path != "." {
            key = join_key(&key, &path);
        }
        // unknown keys surface as an error on the enclosing table
        if let Some(field) = message
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
        {
            if !key.ends_with(field) {
                key = join_key(&key, field);
            }
        }
        config_err(key, message)
    })
}

fn join_key(prefix: &str, rest: &str) -> String {
    if prefix.is_empty() {
        rest.to_string()
    } else {
        format!("{prefix}.{rest}")
    }
}

/// Reads `[name]` into `T`; an absent section yields `T::default()`.
pub fn section<T: DeserializeOwned + Default>(table: &Table, name: &str) -> Result<T> {
    match table.get(name) {
        None => Ok(T::default()),
        Some(v @ Value::Table(_)) => from_value(name, v.clone()),
        Some(_) => Err(config_err(name, "expected a section")),
    }
}

/// Prefixes a validation error's key with its section name.
pub fn in_section(section: &str, err: Error) -> Error {
    match err {
        Error::InvalidParam { name, reason } => config_err(join_key(section, &name), reason),
        Error::Config { key, message } => config_err(join_key(section, &key), message),
        Error::UnknownParameter(p) => config_err(
            join_key(section, "parameter"),
            format!("unknown parameter `{p}`"),
        ),
        other => config_err(section, other.to_string()),
    }
}

/// `[waveform]`: pre/post spike templates as `t_offset_s:v_V` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveformSection {
    #[serde(rename = "v_rest_V")]
    pub v_rest: f64,
    pub pre: Option<Vec<String>>,
    pub post: Option<Vec<String>>,
}

impl Default for WaveformSection {
    fn default() -> Self {
        WaveformSection {
            v_rest: 0.0,
            pre: None,
            post: None,
        }
    }
}

impl WaveformSection {
    fn build(&self, pairs: &Option<Vec<String>>, key: &str) -> Result<SpikeWaveform> {
        match pairs {
            Some(p) => SpikeWaveform::from_pairs(p, self.v_rest)
                .map_err(|e| in_section("waveform", relabel(e, key))),
            None if self.v_rest == 0.0 => Ok(SpikeWaveform::default()),
            None => {
                let d = SpikeWaveform::default();
                let shifted = d
                    .breakpoints()
                    .iter()
                    .map(|&(t, v)| (t, v + self.v_rest))
                    .collect();
                SpikeWaveform::new(shifted, self.v_rest)
            }
        }
    }

    pub fn pre(&self) -> Result<SpikeWaveform> {
        self.build(&self.pre, "pre")
    }

    pub fn post(&self) -> Result<SpikeWaveform> {
        self.build(&self.post, "post")
    }
}

fn relabel(err: Error, key: &str) -> Error {
    match err {
        Error::InvalidParam { reason, .. } => Error::param(key, reason),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::MemristorParams;
    use crate::dpi::DpiParams;

    #[test]
    fn sections_default_and_override() {
        let mut t = parse_table("[device]\nv_set_V = 2.5\n").unwrap();
        let d: MemristorParams = section(&t, "device").unwrap();
        assert_eq!(d.v_set, 2.5);
        assert_eq!(d.g_min, MemristorParams::default().g_min);
        apply_overrides(&mut t, &["device.v_set_V=1.25", "dpi.kappa=0.7"]).unwrap();
        let d: MemristorParams = section(&t, "device").unwrap();
        assert_eq!(d.v_set, 1.25);
        let p: DpiParams = section(&t, "dpi").unwrap();
        assert_eq!(p.kappa, 0.7);
        let none: DpiParams = section(&Table::new(), "dpi").unwrap();
        assert_eq!(none, DpiParams::default());
    }

    #[test]
    fn errors_name_the_key() {
        let t = parse_table("[device]\ng_min_S = \"big\"\n").unwrap();
        let e = section::<MemristorParams>(&t, "device").unwrap_err();
        assert_eq!(e.key(), Some("device.g_min_S"));
        let t = parse_table("[device]\ng_mn_S = 1.0\n").unwrap();
        let e = section::<MemristorParams>(&t, "device").unwrap_err();
        assert_eq!(e.key(), Some("device.g_mn_S"));
        let t = parse_table("[device]\nmode = \"ternary\"\n").unwrap();
        let e = section::<MemristorParams>(&t, "device").unwrap_err();
        assert_eq!(e.key(), Some("device.mode"));
        assert!(parse_table("[device\n").is_err());
        let mut t = Table::new();
        assert!(apply_override(&mut t, "device.v_set_V").is_err());
        let v = MemristorParams {
            g_min: -1.0,
            ..MemristorParams::default()
        };
        let e = in_section("device", v.validate().unwrap_err());
        assert_eq!(e.key(), Some("device.g_min_S"));
    }

    #[test]
    fn string_overrides_fall_back() {
        let mut t = Table::new();
        apply_override(&mut t, "device.mode=bistable").unwrap();
        let d: MemristorParams = section(&t, "device").unwrap();
        assert_eq!(d.mode, crate::device::SwitchingMode::Bistable);
    }

    #[test]
    fn waveform_section() {
        let t = parse_table("[waveform]\npre = [\"0:1\", \"2e-6:0\"]\n").unwrap();
        let w: WaveformSection = section(&t, "waveform").unwrap();
        assert_eq!(w.pre().unwrap().duration(), 2e-6);
        assert_eq!(w.post().unwrap(), SpikeWaveform::default());
        let t = parse_table("[waveform]\npost = [\"0:1\", \"2e-6:0.5\"]\n").unwrap();
        let w: WaveformSection = section(&t, "waveform").unwrap();
        assert_eq!(w.post().unwrap_err().key(), Some("waveform.post"));
    }
}
