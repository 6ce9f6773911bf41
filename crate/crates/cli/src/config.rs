//! Resolution of run parameters: defaults, then the JSON config file, then
//! command-line flags. Everything funnels through serde so unknown keys are
//! rejected the same way whichever source they came from.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};

/// Keys handled by the driver rather than by a subcommand.
pub const GLOBAL_KEYS: [&str; 4] = ["seed", "threads", "format", "out"];

/// Default number of points in a geometric `lo:hi` range.
pub const DEFAULT_STEPS: usize = 7;

/// Marker for problems with the user's input (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// A list of reals given as `a,b,c`, as a geometric range `lo:hi[:steps]`,
/// or in a config file as a number, an array, or either string form.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Integer list given as `a,b,c` or an inclusive `lo:hi[:step]` range.
#[derive(Clone, Debug, PartialEq)]
pub struct IntGrid(pub Vec<usize>);

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() > 3 {
            return Err(format!("range `{text}` has more than three fields"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"));
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let steps = match parts.get(2) {
            Some(s) => s.trim().parse::<usize>().map_err(|e| format!("bad step count `{s}`: {e}"))?,
            None => DEFAULT_STEPS,
        };
        if !(lo > 0.0 && hi > 0.0) {
            return Err(format!("geometric range `{text}` needs positive ends"));
        }
        if steps == 0 {
            return Err("a range needs at least one step".into());
        }
        if steps == 1 {
            return Ok(vec![lo]);
        }
        let ratio = (hi / lo).ln() / (steps - 1) as f64;
        return Ok((0..steps)
            .map(|i| if i + 1 == steps { hi } else { lo * (ratio * i as f64).exp() })
            .collect());
    }
    let out: Result<Vec<f64>, String> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}")))
        .collect();
    let out = out?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(format!("non-finite value in `{text}`"));
    }
    Ok(out)
}

pub fn parse_int_grid(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    let int = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("bad integer `{s}`: {e}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() > 3 {
            return Err(format!("range `{text}` has more than three fields"));
        }
        let (lo, hi) = (int(parts[0])?, int(parts[1])?);
        let step = parts.get(2).map(|s| int(s)).transpose()?.unwrap_or(1);
        if step == 0 || hi < lo {
            return Err(format!("empty range `{text}`"));
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    text.split(',').map(int).collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGrid<T> {
    One(T),
    Many(Vec<T>),
    Text(String),
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawGrid::<f64>::deserialize(d)? {
            RawGrid::One(v) => Ok(Grid(vec![v])),
            RawGrid::Many(v) => Ok(Grid(v)),
            RawGrid::Text(s) => parse_grid(&s).map(Grid).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawGrid::<usize>::deserialize(d)? {
            RawGrid::One(v) => Ok(IntGrid(vec![v])),
            RawGrid::Many(v) => Ok(IntGrid(v)),
            RawGrid::Text(s) => parse_int_grid(&s).map(IntGrid).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for IntGrid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Driver settings after merging the file and the flags.
#[derive(Clone, Debug, Serialize)]
pub struct Globals {
    pub seed: u64,
    pub seed_was_random: bool,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: PathBuf,
}

/// Top-level object of a config file, split into driver keys and the rest.
pub struct FileConfig {
    pub globals: Map<String, Value>,
    pub params: Map<String, Value>,
}

pub fn load_file(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let mut globals = Map::new();
    let mut params = Map::new();
    let Some(path) = path else {
        return Ok(FileConfig { globals, params });
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("config {} is not JSON: {e}", path.display())))?;
    let Value::Object(obj) = value else {
        return Err(config_err("config file must hold a JSON object"));
    };
    for (k, v) in obj {
        if GLOBAL_KEYS.contains(&k.as_str()) {
            globals.insert(k, v);
        } else {
            params.insert(k, v);
        }
    }
    Ok(FileConfig { globals, params })
}

/// Overlay the non-null fields of `flags` onto `file` and deserialize.
pub fn resolve<P: DeserializeOwned, F: Serialize>(file: &Map<String, Value>, flags: &F) -> anyhow::Result<P> {
    let mut merged = file.clone();
    if let Value::Object(set) = serde_json::to_value(flags)? {
        for (k, v) in set {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| config_err(format!("invalid parameters: {e}")))
}
