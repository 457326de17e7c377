//! Experiment configuration files.
//!
//! A config is one JSON object:
//!
//! ```json
//! {
//!   "model": {"name": "exp_pair", "params": {"a": 0.5, "c": 0.5}},
//!   "test_function": {"id": "cos_shifted", "params": {"a": 1, "c": 1}},
//!   "horizon": 1.0,
//!   "n_list": [4, 16, 64],
//!   "m": "auto",
//!   "paths": 200000,
//!   "seed": 1,
//!   "mode": "coupled",
//!   "antithetic": false,
//!   "threads": 4,
//!   "quadrature_nodes": 64,
//!   "output": "report.csv"
//! }
//! ```
//!
//! Only `model` is required; `test_function` is required by `run`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ito_edgeworth::estimator::{FineSteps, McConfig, Mode};
use ito_edgeworth::hermite::{PairingEngine, TestFunction, DEFAULT_NODES};
use ito_edgeworth::model::GModel;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Smallest accepted path count.
pub const MIN_PATHS: u64 = 100;

/// Environment variable supplying the default worker count.
pub const THREADS_ENV: &str = "ITO_EDGEWORTH_THREADS";

const KEYS: &[&str] = &[
    "model",
    "test_function",
    "horizon",
    "n_list",
    "m",
    "paths",
    "seed",
    "mode",
    "antithetic",
    "threads",
    "quadrature_nodes",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: NamedSpec,
    pub test_function: Option<NamedSpec>,
    pub horizon: f64,
    pub n_list: Vec<usize>,
    pub m: FineSteps,
    pub paths: u64,
    pub seed: u64,
    pub mode: Mode,
    pub antithetic: bool,
    pub threads: Option<usize>,
    pub quadrature_nodes: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::parse(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(CliError::parse("config must be a JSON object"));
        };
        if let Some(extra) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::parse(format!("unknown key `{extra}`")));
        }
        let model = named(&map, "model", "name")?.ok_or_else(|| CliError::parse("missing key `model`"))?;
        let cfg = Self {
            model,
            test_function: named(&map, "test_function", "id")?,
            horizon: float(&map, "horizon")?.unwrap_or(1.0),
            n_list: n_list(&map)?,
            m: fine_steps(&map)?,
            paths: uint(&map, "paths")?.unwrap_or(10_000),
            seed: uint(&map, "seed")?.unwrap_or(0),
            mode: mode(&map)?,
            antithetic: boolean(&map, "antithetic")?.unwrap_or(false),
            threads: uint(&map, "threads")?.map(|t| t as usize),
            quadrature_nodes: uint(&map, "quadrature_nodes")?.map_or(DEFAULT_NODES, |q| q as usize),
            output: match map.get("output") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(PathBuf::from(s)),
                Some(_) => return Err(CliError::parse("key `output`: expected a string")),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(CliError::parse("key `horizon`: must be positive"));
        }
        if self.paths < MIN_PATHS {
            return Err(CliError::parse(format!(
                "key `paths`: paths below minimum {MIN_PATHS} (got {})",
                self.paths
            )));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(CliError::parse("key `paths`: antithetic pairing needs an even count"));
        }
        if self.threads == Some(0) {
            return Err(CliError::parse("key `threads`: must be at least 1"));
        }
        if self.quadrature_nodes == 0 {
            return Err(CliError::parse("key `quadrature_nodes`: must be at least 1"));
        }
        Ok(())
    }

    pub fn resolve_model(&self) -> CliResult<GModel> {
        GModel::builtin(&self.model.name, &self.model.params, self.horizon).map_err(|e| match e {
            ito_edgeworth::Error::DegenerateModel(_) => CliError::numeric(format!("key `model`: {e}")),
            _ => CliError::resolution(format!("key `model`: {e}")),
        })
    }

    pub fn resolve_test_function(&self) -> CliResult<TestFunction> {
        let spec = self
            .test_function
            .as_ref()
            .ok_or_else(|| CliError::parse("missing key `test_function`"))?;
        TestFunction::resolve(&spec.name, &spec.params).map_err(|e| CliError::resolution(format!("key `test_function`: {e}")))
    }

    /// Sampling settings; `threads` falls back to the config and then to
    /// [`THREADS_ENV`].
    pub fn mc_config(&self, threads: Option<usize>) -> CliResult<McConfig> {
        let pairing = PairingEngine::with_nodes(self.quadrature_nodes)
            .map_err(|e| CliError::parse(format!("key `quadrature_nodes`: {e}")))?;
        let threads = match threads.or(self.threads) {
            Some(t) => Some(t),
            None => env_threads()?,
        };
        if threads == Some(0) {
            return Err(CliError::parse("threads must be at least 1"));
        }
        Ok(McConfig::new(self.seed, self.paths)
            .with_antithetic(self.antithetic)
            .with_mode(self.mode)
            .with_threads(threads)
            .with_pairing(pairing))
    }
}

fn env_threads() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::parse(format!("{THREADS_ENV}: expected a positive integer, got `{s}`"))),
        _ => Ok(None),
    }
}

fn float(map: &Map<String, Value>, key: &str) -> CliResult<Option<f64>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| CliError::parse(format!("key `{key}`: expected a number"))),
    }
}

fn uint(map: &Map<String, Value>, key: &str) -> CliResult<Option<u64>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| CliError::parse(format!("key `{key}`: expected a non-negative integer"))),
    }
}

fn boolean(map: &Map<String, Value>, key: &str) -> CliResult<Option<bool>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_bool()
            .map(Some)
            .ok_or_else(|| CliError::parse(format!("key `{key}`: expected true or false"))),
    }
}

fn named(map: &Map<String, Value>, key: &str, name_key: &str) -> CliResult<Option<NamedSpec>> {
    let obj = match map.get(key) {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::String(name)) => {
            return Ok(Some(NamedSpec {
                name: name.clone(),
                params: BTreeMap::new(),
            }))
        }
        Some(Value::Object(obj)) => obj,
        Some(_) => return Err(CliError::parse(format!("key `{key}`: expected an object"))),
    };
    if let Some(extra) = obj.keys().find(|k| *k != name_key && *k != "params") {
        return Err(CliError::parse(format!("unknown key `{key}.{extra}`")));
    }
    let name = match obj.get(name_key) {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(CliError::parse(format!("key `{key}.{name_key}`: expected a string"))),
        None => return Err(CliError::parse(format!("missing key `{key}.{name_key}`"))),
    };
    let mut params = BTreeMap::new();
    match obj.get("params") {
        None | Some(Value::Null) => {}
        Some(Value::Object(p)) => {
            for (k, v) in p {
                let x = v
                    .as_f64()
                    .ok_or_else(|| CliError::parse(format!("key `{key}.params.{k}`: expected a number")))?;
                params.insert(k.clone(), x);
            }
        }
        Some(_) => return Err(CliError::parse(format!("key `{key}.params`: expected an object"))),
    }
    Ok(Some(NamedSpec { name, params }))
}

fn n_list(map: &Map<String, Value>) -> CliResult<Vec<usize>> {
    let Some(v) = map.get("n_list") else {
        return Ok(vec![4, 16, 64]);
    };
    let items = v
        .as_array()
        .ok_or_else(|| CliError::parse("key `n_list`: expected an array of integers"))?;
    let list = items
        .iter()
        .map(|x| x.as_u64().filter(|&n| n > 0).map(|n| n as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::parse("key `n_list`: entries must be positive integers"))?;
    if list.is_empty() {
        return Err(CliError::parse("key `n_list`: must not be empty"));
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::parse("key `n_list`: must be strictly ascending"));
    }
    Ok(list)
}

fn fine_steps(map: &Map<String, Value>) -> CliResult<FineSteps> {
    match map.get("m") {
        None | Some(Value::Null) => Ok(FineSteps::Auto),
        Some(Value::String(s)) if s == "auto" => Ok(FineSteps::Auto),
        Some(v) => match v.as_u64() {
            Some(m) if m > 0 => Ok(FineSteps::Fixed(m as usize)),
            _ => Err(CliError::parse("key `m`: expected \"auto\" or a positive integer")),
        },
    }
}

fn mode(map: &Map<String, Value>) -> CliResult<Mode> {
    match map.get("mode") {
        None | Some(Value::Null) => Ok(Mode::Coupled),
        Some(Value::String(s)) if s == "coupled" => Ok(Mode::Coupled),
        Some(Value::String(s)) if s == "independent" => Ok(Mode::Independent),
        Some(_) => Err(CliError::parse("key `mode`: expected \"coupled\" or \"independent\"")),
    }
}
