//! Run configuration: a JSON file (or an earlier manifest) overridden by flags.

use std::path::{Path, PathBuf};

use compound_fsc::capacity::SolverConfig;
use compound_fsc::channel::{CompoundFamily, FeedbackMap};
use compound_fsc::presets::preset;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Inline family object, or a path to a family file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Truncation depth of the `example1` preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `"identity"`, `"none"`, `"table:<file>"` or an inline `{"z_card", "map"}` object.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    /// Label of the channel in force during simulation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub messages: Option<u64>,
    /// `"universal"`, `"ml"` (tuned to the true channel) or `"ml:<label>"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    /// `"random"` or `"constant"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook: Option<String>,
    /// Training lengths swept by `estimate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

impl Config {
    /// Reads a config file; a manifest is accepted and its `config` used,
    /// provided it was written by `command`.
    pub fn load(path: &Path, command: &str) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let (value, base) = match value.get("manifest_version") {
            Some(_) => {
                let cmd = value.get("command").and_then(Value::as_str).unwrap_or_default();
                if cmd != command {
                    return Err(Failure::input(format!("manifest was written by `{cmd}`, not `{command}`")));
                }
                (value.get("config").cloned().unwrap_or(Value::Null), path.parent())
            }
            None => (value, path.parent()),
        };
        let mut cfg: Config = serde_json::from_value(value).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        // Relative paths inside a config file are taken from the file's directory.
        if let (Some(Value::String(p)), Some(dir)) = (&cfg.family, base) {
            cfg.family = Some(Value::String(dir.join(p).to_string_lossy().into_owned()));
        }
        if let (Some(Value::String(f)), Some(dir)) = (&cfg.feedback, base) {
            if let Some(p) = f.strip_prefix("table:") {
                cfg.feedback = Some(Value::String(format!("table:{}", dir.join(p).to_string_lossy())));
            }
        }
        Ok(cfg)
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: Config) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        let (family_set, preset_set) = (other.family.is_some(), other.preset.is_some());
        take!(family, preset, depth, n, feedback, trials, seed, format, suite, theta, messages, decoder, codebook, m_values, solver);
        if family_set && !preset_set {
            self.preset = None;
        }
        if preset_set && !family_set {
            self.family = None;
        }
        self
    }

    /// Loads the family and rewrites `family` as the inline object so the
    /// resolved config is self-contained.
    pub fn resolve_family(&mut self) -> Result<CompoundFamily, Failure> {
        let value = match (&self.family, &self.preset) {
            (Some(Value::String(path)), _) => read_json(Path::new(path))?,
            (Some(v), _) => v.clone(),
            (None, Some(name)) => {
                let depth = self.depth.unwrap_or(self.n.unwrap_or(4) as u32);
                let fam = preset(name, depth)?;
                if name == "example1" {
                    self.depth = Some(depth);
                }
                fam.to_json()
            }
            (None, None) => return Err(Failure::input("no channel family given: use --family or --preset")),
        };
        let fam = CompoundFamily::from_json(&value)?;
        self.family = Some(value);
        Ok(fam)
    }

    /// Loads the feedback map and rewrites `feedback` in resolved form.
    pub fn resolve_feedback(&mut self, y_card: usize) -> Result<FeedbackMap, Failure> {
        let spec = self.feedback.clone().unwrap_or_else(|| Value::String("identity".into()));
        let (map, resolved) = match &spec {
            Value::String(s) if s == "identity" => (FeedbackMap::identity(y_card), spec.clone()),
            Value::String(s) if s == "none" => (FeedbackMap::none(y_card), spec.clone()),
            Value::String(s) if s.starts_with("table:") => {
                let v = read_json(Path::new(&s["table:".len()..]))?;
                (parse_table(&v)?, v)
            }
            Value::Object(_) => (parse_table(&spec)?, spec.clone()),
            other => return Err(Failure::input(format!("feedback must be identity, none or table:<file>, got {other}"))),
        };
        if map.y_card() != y_card {
            return Err(Failure::input(format!("feedback table covers {} outputs, channel has {y_card}", map.y_card())));
        }
        self.feedback = Some(resolved);
        Ok(map)
    }

    pub fn solver(&self) -> SolverConfig {
        let mut s = self.solver.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }
}

fn parse_table(v: &Value) -> Result<FeedbackMap, Failure> {
    let z_card = v.get("z_card").and_then(Value::as_u64).ok_or_else(|| Failure::input("feedback table needs integer z_card"))?;
    let map = v
        .get("map")
        .and_then(Value::as_array)
        .ok_or_else(|| Failure::input("feedback table needs an integer array map"))?
        .iter()
        .map(|e| e.as_u64().map(|u| u as usize).ok_or_else(|| Failure::input("feedback map entries must be integers")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeedbackMap::new(z_card as usize, map)?)
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub manifest_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a Config,
    pub outputs: Vec<String>,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

pub fn write_manifest(out: &Path, command: &str, config: &Config, outputs: &[PathBuf], elapsed: f64) -> Result<(), Failure> {
    let m = Manifest {
        manifest_version: 1,
        tool: "compound-fsc",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        outputs: outputs.iter().map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect(),
        timing: Timing { elapsed_seconds: elapsed },
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| Failure::input(e.to_string()))?;
    std::fs::write(out.join("manifest.json"), text + "\n").map_err(Failure::io)
}
