//! Resolved parameters per command, config layering and run manifests.
//!
//! Precedence is flags, then the config file, then the defaults below. A
//! config file is either a flat JSON object of parameters or a manifest
//! written by an earlier run, in which case its `params` object is used.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use infotarget::FitMode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_EXHAUSTED: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {err}", path.display()) }
    }
}

impl From<infotarget::Error> for Failure {
    fn from(err: infotarget::Error) -> Self {
        let code = match err {
            infotarget::Error::Io { .. } | infotarget::Error::Parse { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Self { code, message: err.to_string() }
    }
}

fn default_grid_points() -> usize {
    infotarget::AbilityGrid::DEFAULT_POINTS
}

fn default_epsilon() -> f64 {
    1.225
}

fn default_target() -> String {
    "lsat".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenBankParams {
    pub m: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub c: f64,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for GenBankParams {
    fn default() -> Self {
        let spec = infotarget::BankGenSpec::default();
        Self {
            m: spec.m,
            a_min: spec.a_range.0,
            a_max: spec.a_range.1,
            b_min: spec.b_range.0,
            b_max: spec.b_range.1,
            c: spec.c_fixed,
            seed: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub bank: Option<PathBuf>,
    pub grid_points: usize,
    pub epsilon: f64,
    pub target: String,
    pub modes: Vec<FitMode>,
    pub k_meeting: u64,
    pub k_exceeding: u64,
    pub n_from: usize,
    pub n_to: usize,
    pub n_step: usize,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            bank: None,
            grid_points: default_grid_points(),
            epsilon: default_epsilon(),
            target: default_target(),
            modes: FitMode::ALL.to_vec(),
            k_meeting: 2_000_000,
            k_exceeding: 100_000,
            n_from: 10,
            n_to: 130,
            n_step: 5,
            seed: None,
            workers: 1,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleParams {
    pub bank: Option<PathBuf>,
    pub grid_points: usize,
    pub epsilon: f64,
    pub target: String,
    pub n: Option<usize>,
    pub t0: f64,
    pub alpha: f64,
    pub iters_per_temp: u64,
    pub max_proposals: u64,
    pub greedy_init: bool,
    pub trace: Option<PathBuf>,
    pub trace_every: u64,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for AssembleParams {
    fn default() -> Self {
        let anneal = infotarget::AnnealConfig::default();
        Self {
            bank: None,
            grid_points: default_grid_points(),
            epsilon: default_epsilon(),
            target: default_target(),
            n: None,
            t0: anneal.t0,
            alpha: anneal.alpha,
            iters_per_temp: anneal.iters_per_temp,
            max_proposals: anneal.max_proposals,
            greedy_init: anneal.greedy_init,
            trace: None,
            trace_every: anneal.trace_every,
            seed: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountsParams {
    pub sweep: Option<PathBuf>,
    pub anchor_n: Option<usize>,
    pub m: Option<usize>,
    pub bank: Option<PathBuf>,
    pub modes: Option<Vec<FitMode>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnumerateParams {
    pub bank: Option<PathBuf>,
    pub grid_points: usize,
    pub epsilon: f64,
    pub target: String,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for EnumerateParams {
    fn default() -> Self {
        Self {
            bank: None,
            grid_points: default_grid_points(),
            epsilon: default_epsilon(),
            target: default_target(),
            n: None,
            out: None,
        }
    }
}

/// `K` sets both draw counts unless the same layer names one explicitly.
fn expand_k(layer: &mut Map<String, Value>) {
    if let Some(k) = layer.remove("K") {
        for key in ["k_meeting", "k_exceeding"] {
            layer.entry(key).or_insert_with(|| k.clone());
        }
    }
}

/// Merges `config` and `flags` over the defaults of `P`.
pub fn resolve<P: DeserializeOwned>(
    command: &str,
    flags: &impl Serialize,
    config: Option<&Path>,
) -> Result<P, Failure> {
    let mut merged = Map::new();
    if let Some(path) = config {
        let mut layer = read_config(command, path)?;
        expand_k(&mut layer);
        merged.extend(layer);
    }
    let Value::Object(mut layer) = serde_json::to_value(flags).expect("flags serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    expand_k(&mut layer);
    merged.extend(layer);
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::usage(format!("{command}: {e}")))
}

fn read_config(command: &str, path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::io(path, e))?;
    let Value::Object(mut obj) = value else {
        return Err(Failure::usage(format!("{}: config must be a JSON object", path.display())));
    };
    if !(obj.contains_key("command") && obj.contains_key("params")) {
        return Ok(obj);
    }
    match obj.get("command").and_then(Value::as_str) {
        Some(c) if c == command => {}
        other => {
            return Err(Failure::usage(format!(
                "{}: manifest is for command {other:?}, not {command:?}",
                path.display()
            )))
        }
    }
    if let Some(inputs) = obj.get("inputs").cloned() {
        if let Ok(inputs) = serde_json::from_value::<Vec<InputDigest>>(inputs) {
            warn_changed_inputs(&inputs);
        }
    }
    match obj.remove("params") {
        Some(Value::Object(params)) => Ok(params),
        _ => Err(Failure::usage(format!("{}: manifest `params` is not an object", path.display()))),
    }
}

fn warn_changed_inputs(inputs: &[InputDigest]) {
    for input in inputs {
        match sha256_file(&input.path) {
            Ok(now) if now != input.sha256 => eprintln!(
                "warning: {} ({}) has changed since the manifest was written",
                input.path.display(),
                input.role
            ),
            Err(_) => eprintln!("warning: manifest input {} is not readable", input.path.display()),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self, Failure> {
        Ok(Self { role: role.into(), path: path.to_path_buf(), sha256: sha256_file(path)? })
    }
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, P: Serialize> {
    pub command: &'a str,
    pub params: &'a P,
    /// Derived values recorded for reference; ignored on rerun.
    pub resolved: Value,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
    pub timestamp: String,
}

impl<'a, P: Serialize> Manifest<'a, P> {
    pub fn new(command: &'a str, params: &'a P) -> Self {
        Self {
            command,
            params,
            resolved: Value::Null,
            inputs: Vec::new(),
            tool_version: format!("infotarget {}", env!("CARGO_PKG_VERSION")),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn write_next_to(&self, out: &Path) -> Result<PathBuf, Failure> {
        let path = manifest_path(out);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        Ok(path)
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
