use std::path::Path;

use cascade_gnn::data::Scope;
use cascade_gnn::eval::{AgingConfig, HarnessConfig, LayoutConfig};
use cascade_gnn::synth::GenConfig;
use cascade_gnn::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SEED_ENV: &str = "CASCADE_GNN_SEED";
pub const DEFAULT_SEED: u64 = 42;

/// Everything a command may need, after merging the config file and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub generator: GenConfig,
    pub harness: HarnessConfig,
    pub aging: AgingConfig,
    pub layout: LayoutConfig,
}

/// Sections of a config file; each one is overlaid on the defaults key by key.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    #[serde(default)]
    generator: Value,
    #[serde(default)]
    harness: Value,
    #[serde(default)]
    aging: Value,
    #[serde(default)]
    layout: Value,
}

fn overlay(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                overlay(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) if !p.is_null() => *b = p.clone(),
        _ => {}
    }
}

fn merged<T: Serialize + for<'de> Deserialize<'de>>(default: T, patch: &Value) -> Result<T> {
    let mut v = serde_json::to_value(default)?;
    overlay(&mut v, patch);
    Ok(serde_json::from_value(v)?)
}

fn parse_scope(v: &Value) -> Result<Option<Scope>> {
    match v.get("scope") {
        None | Some(Value::Null) => Ok(None),
        Some(s) => Ok(Some(serde_json::from_value(s.clone())?)),
    }
}

/// Seed precedence: flag, then config file, then `CASCADE_GNN_SEED`, then 42.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

impl RunConfig {
    /// `scope` from a flag beats the config file; the harness defaults then
    /// follow the chosen scope (cascade-wise drops content features).
    pub fn load(path: Option<&Path>, seed_flag: Option<u64>, scope_flag: Option<Scope>) -> Result<Self> {
        let file: FileConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text)?
            }
            None => FileConfig::default(),
        };
        let seed = resolve_seed(seed_flag, file.seed)?;
        let scope = match scope_flag {
            Some(s) => s,
            None => parse_scope(&file.harness)?.unwrap_or(Scope::UrlWise),
        };
        let mut harness: HarnessConfig = merged(HarnessConfig::for_scope(scope), &file.harness)?;
        harness.scope = scope;
        let mut cfg = Self {
            seed,
            generator: merged(GenConfig::default(), &file.generator)?,
            harness,
            aging: merged(AgingConfig::default(), &file.aging)?,
            layout: merged(LayoutConfig::default(), &file.layout)?,
        };
        cfg.generator.seed = seed;
        cfg.harness.seed = seed;
        cfg.harness.model.seed = seed;
        cfg.layout.seed = seed;
        Ok(cfg)
    }
}
