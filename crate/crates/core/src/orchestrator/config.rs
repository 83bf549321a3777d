//! Experiment configuration (TOML).
//!
//! ```toml
//! population = 50                 # or: types = [0.0, 1.5, ...]
//! beta_levels = [0.25, 0.75]
//! trajectories = ["static", "increasing", "decreasing", "converging", "diverging"]
//! windows = [1, 3, 6]
//! targets = [0, 10, 20, 30, 40, 50]
//! price_offset = 0.01
//! repeats = 1
//! seed = 20251019
//! record_timestamps = false
//!
//! [agent]
//! kind = "rational"               # heuristic | replay | gateway
//!
//! [gateway]                       # required when agent.kind = "gateway"
//! endpoint = "https://.../v1/chat/completions"
//! model = "..."
//! temperature = 0.7
//!
//! [prompt]                        # optional template override
//! system = "..."
//! user = "..."
//!
//! [output]
//! logs = "runs.jsonl"
//! rows = "rows.csv"
//! metrics = "metrics.csv"
//! ```
//!
//! Validation reports every problem at once rather than stopping at the
//! first bad key.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use super::{derive_seed, ExperimentCell};
use crate::agent::{AgentKind, GatewayConfig, HeuristicParams, PromptTemplate};
use crate::game::{build_trajectory, GameSpec, TrajectoryKind, DEFAULT_PRICE_OFFSET, DESIGNED_TARGETS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<PathBuf>,
}

/// A full-factorial experiment definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Standalone values of the population.
    pub types: Vec<f64>,
    pub beta_levels: Vec<f64>,
    pub trajectories: Vec<TrajectoryKind>,
    /// History windows crossed with every dynamic trajectory.
    pub windows: Vec<usize>,
    pub targets: Vec<usize>,
    pub price_offset: f64,
    /// Times each dynamic trajectory is replayed within a run.
    pub repeats: usize,
    pub seed: u64,
    pub record_timestamps: bool,
    pub agent: AgentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<PromptTemplate>,
    pub output: OutputPaths,
}

/// Short/medium/long history windows of the main design.
pub const PAPER_WINDOWS: [usize; 3] = [1, 3, 6];
/// Windows of the extended profile, run over repeated trajectories.
pub const EXTENDED_WINDOWS: [usize; 3] = [1, 7, 13];

impl ExperimentConfig {
    /// The canonical 2 x (1 + 3 x 4) design with rational agents.
    pub fn paper() -> Self {
        ExperimentConfig {
            types: (0..50).map(|t| t as f64).collect(),
            beta_levels: vec![0.25, 0.75],
            trajectories: TrajectoryKind::ALL.to_vec(),
            windows: PAPER_WINDOWS.to_vec(),
            targets: DESIGNED_TARGETS.to_vec(),
            price_offset: DEFAULT_PRICE_OFFSET,
            repeats: 1,
            seed: 20251019,
            record_timestamps: false,
            agent: AgentKind::Rational,
            prompt: None,
            output: OutputPaths::default(),
        }
    }

    /// Windows {1, 7, 13} over trajectories played three times in a row.
    pub fn extended() -> Self {
        ExperimentConfig {
            windows: EXTENDED_WINDOWS.to_vec(),
            repeats: 3,
            ..Self::paper()
        }
    }

    /// Resolves a built-in profile name (`paper`, `paper.profile`,
    /// `extended`, `extended.profile`).
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "paper" | "paper.profile" => Some(Self::paper()),
            "extended" | "extended.profile" => Some(Self::extended()),
            _ => None,
        }
    }

    /// Loads a file, falling back to built-in profile names when no such
    /// file exists.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if !path.exists() {
            if let Some(profile) = path.to_str().and_then(Self::builtin) {
                return Ok(profile);
            }
        }
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(mut table: Table) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        let defaults = Self::paper();

        let population: Option<usize> = take(&mut table, "population", &mut errors);
        let types: Option<Vec<f64>> = take(&mut table, "types", &mut errors);
        let types = match (population, types) {
            (Some(_), Some(_)) => {
                errors.push("`population` and `types` are mutually exclusive".into());
                defaults.types.clone()
            }
            (Some(k), None) => (0..k).map(|t| t as f64).collect(),
            (None, Some(t)) => t,
            (None, None) => defaults.types.clone(),
        };
        let beta_levels = take(&mut table, "beta_levels", &mut errors).unwrap_or(defaults.beta_levels);
        let trajectories: Vec<String> = take(&mut table, "trajectories", &mut errors)
            .unwrap_or_else(|| defaults.trajectories.iter().map(|k| k.to_string()).collect());
        let trajectories: Vec<TrajectoryKind> = trajectories
            .iter()
            .filter_map(|s| s.parse().map_err(|e: String| errors.push(format!("trajectories: {e}"))).ok())
            .collect();
        let windows = take(&mut table, "windows", &mut errors).unwrap_or(defaults.windows);
        let targets = take(&mut table, "targets", &mut errors).unwrap_or(defaults.targets);
        let price_offset = take(&mut table, "price_offset", &mut errors).unwrap_or(defaults.price_offset);
        let repeats = take(&mut table, "repeats", &mut errors).unwrap_or(defaults.repeats);
        let seed = take(&mut table, "seed", &mut errors).unwrap_or(defaults.seed);
        let record_timestamps = take(&mut table, "record_timestamps", &mut errors).unwrap_or(false);
        let output = take_table(&mut table, "output", &mut errors)
            .and_then(|t| decode::<OutputPaths>(t, "output", &["logs", "rows", "metrics"], &mut errors))
            .unwrap_or_default();
        let prompt = take_table(&mut table, "prompt", &mut errors)
            .and_then(|t| decode::<PromptTemplate>(t, "prompt", &["system", "user"], &mut errors));
        let gateway = take_table(&mut table, "gateway", &mut errors).and_then(|t| {
            decode::<GatewayConfig>(
                t,
                "gateway",
                &[
                    "endpoint",
                    "model",
                    "temperature",
                    "max_tokens",
                    "api_key_env",
                    "timeout_secs",
                    "max_attempts",
                    "backoff_ms",
                    "max_in_flight",
                    "retry_on_out_of_range",
                ],
                &mut errors,
            )
        });
        let agent = match take_table(&mut table, "agent", &mut errors) {
            None => AgentKind::Rational,
            Some(agent_table) => agent_kind(agent_table, gateway.clone(), &mut errors),
        };
        if gateway.is_some() && !matches!(agent, AgentKind::Gateway(_)) {
            errors.push("[gateway] given but agent.kind is not \"gateway\"".into());
        }
        for key in table.keys() {
            errors.push(format!("unknown key `{key}`"));
        }

        let config = ExperimentConfig {
            types,
            beta_levels,
            trajectories,
            windows,
            targets,
            price_offset,
            repeats,
            seed,
            record_timestamps,
            agent,
            prompt,
            output,
        };
        errors.extend(config.problems());
        if errors.is_empty() {
            Ok(config)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Semantic problems with an otherwise well-typed config.
    pub fn problems(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if let Err(e) = GameSpec::new(self.types.clone(), 0.0) {
            errors.push(format!("population: {e}"));
        } else if self.types.windows(2).any(|w| w[0] >= w[1]) {
            errors.push("types must be strictly increasing to generate designed prices".into());
        }
        if self.beta_levels.is_empty() {
            errors.push("beta_levels is empty".into());
        }
        for &b in &self.beta_levels {
            if !(b.is_finite() && (0.0..1.0).contains(&b)) {
                errors.push(format!("beta level {b} outside [0, 1)"));
            }
        }
        duplicates("beta_levels", self.beta_levels.iter().map(|b| b.to_bits()), &mut errors);
        if self.trajectories.is_empty() {
            errors.push("trajectories is empty".into());
        }
        duplicates("trajectories", self.trajectories.iter().copied(), &mut errors);
        let dynamic = self.trajectories.iter().any(|k| !k.is_static());
        if dynamic && self.windows.is_empty() {
            errors.push("windows is empty but dynamic trajectories are requested".into());
        }
        duplicates("windows", self.windows.iter().copied(), &mut errors);
        if self.targets.is_empty() {
            errors.push("targets is empty".into());
        }
        duplicates("targets", self.targets.iter().copied(), &mut errors);
        let k = self.types.len();
        for &t in &self.targets {
            if t > k {
                errors.push(format!("target {t} exceeds population {k}"));
            }
        }
        if !(self.price_offset.is_finite() && self.price_offset > 0.0) {
            errors.push(format!("price_offset {} must be positive", self.price_offset));
        }
        if self.repeats == 0 {
            errors.push("repeats must be at least 1".into());
        }
        match &self.agent {
            AgentKind::Heuristic(p) => {
                if let Err(e) = p.validate() {
                    errors.push(format!("agent: {e}"));
                }
            }
            AgentKind::Gateway(g) => {
                if let Err(e) = g.validate() {
                    errors.push(format!("gateway: {e}"));
                }
            }
            AgentKind::Replay { source } if source.trim().is_empty() => {
                errors.push("agent.source is empty".into());
            }
            _ => {}
        }
        if let Some(t) = &self.prompt {
            if let Err(e) = t.validate() {
                errors.push(format!("prompt: {e}"));
            }
        }
        if errors.is_empty() {
            for &beta in &self.beta_levels {
                let spec = GameSpec::new(self.types.clone(), beta).expect("checked above");
                for &kind in &self.trajectories {
                    if let Err(e) = build_trajectory(&spec, kind, &self.targets, self.price_offset) {
                        errors.push(format!("beta {beta}, {kind}: {e}"));
                    }
                }
            }
        }
        errors
    }

    pub fn population_spec(&self) -> Result<GameSpec, ConfigError> {
        GameSpec::new(self.types.clone(), self.beta_levels.first().copied().unwrap_or(0.0))
            .map_err(|e| ConfigError::Invalid(vec![format!("population: {e}")]))
    }

    /// Every cell of the design in key order, each with its own derived seed.
    pub fn cells(&self) -> Result<Vec<ExperimentCell>, ConfigError> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(ConfigError::Invalid(problems));
        }
        let mut cells = Vec::new();
        for &beta in &self.beta_levels {
            let spec = GameSpec::new(self.types.clone(), beta).expect("validated");
            for &kind in &self.trajectories {
                let trajectory = build_trajectory(&spec, kind, &self.targets, self.price_offset).expect("validated");
                let windows: Vec<usize> = if kind.is_static() { vec![0] } else { self.windows.clone() };
                for window in windows {
                    cells.push(ExperimentCell {
                        beta,
                        trajectory: trajectory.clone(),
                        window,
                        repeats: if kind.is_static() { 1 } else { self.repeats },
                        agent: self.agent.clone(),
                        seed: 0,
                    });
                }
            }
        }
        cells.sort_by_key(|c| c.key());
        let keys: BTreeSet<_> = cells.iter().map(|c| c.key()).collect();
        if keys.len() != cells.len() {
            return Err(ConfigError::Invalid(vec!["duplicate cell keys".into()]));
        }
        for (i, c) in cells.iter_mut().enumerate() {
            c.seed = derive_seed(self.seed, i as u64);
        }
        Ok(cells)
    }

    /// The effective configuration as recorded in run logs.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Serializes back to TOML (round-trips through [`Self::from_toml_str`]).
    pub fn to_toml_string(&self) -> String {
        let mut t = Table::new();
        t.insert("types".into(), Value::try_from(&self.types).expect("floats"));
        t.insert("beta_levels".into(), Value::try_from(&self.beta_levels).expect("floats"));
        t.insert(
            "trajectories".into(),
            Value::Array(self.trajectories.iter().map(|k| Value::String(k.to_string())).collect()),
        );
        t.insert("windows".into(), Value::try_from(&self.windows).expect("ints"));
        t.insert("targets".into(), Value::try_from(&self.targets).expect("ints"));
        t.insert("price_offset".into(), Value::Float(self.price_offset));
        t.insert("repeats".into(), Value::Integer(self.repeats as i64));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert("record_timestamps".into(), Value::Boolean(self.record_timestamps));
        let mut agent = Table::new();
        match &self.agent {
            AgentKind::Rational => {
                agent.insert("kind".into(), "rational".into());
            }
            AgentKind::Heuristic(p) => {
                agent = Value::try_from(p).expect("params").as_table().cloned().unwrap_or_default();
                agent.insert("kind".into(), "heuristic".into());
            }
            AgentKind::Replay { source } => {
                agent.insert("kind".into(), "replay".into());
                agent.insert("source".into(), source.clone().into());
            }
            AgentKind::Gateway(g) => {
                agent.insert("kind".into(), "gateway".into());
                t.insert("gateway".into(), Value::try_from(g).expect("gateway"));
            }
        }
        t.insert("agent".into(), Value::Table(agent));
        if let Some(p) = &self.prompt {
            t.insert("prompt".into(), Value::try_from(p).expect("prompt"));
        }
        let out = Value::try_from(&self.output).expect("paths");
        if out.as_table().is_some_and(|o| !o.is_empty()) {
            t.insert("output".into(), out);
        }
        toml::to_string(&t).expect("table serializes")
    }
}

fn take<T: DeserializeOwned>(table: &mut Table, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let value = table.remove(key)?;
    match value.try_into() {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("`{key}`: {}", e.to_string().trim()));
            None
        }
    }
}

fn take_table(table: &mut Table, key: &str, errors: &mut Vec<String>) -> Option<Table> {
    match table.remove(key)? {
        Value::Table(t) => Some(t),
        other => {
            errors.push(format!("`{key}` must be a table, got {}", other.type_str()));
            None
        }
    }
}

fn decode<T: DeserializeOwned>(table: Table, section: &str, known: &[&str], errors: &mut Vec<String>) -> Option<T> {
    let before = errors.len();
    for key in table.keys() {
        if !known.contains(&key.as_str()) {
            errors.push(format!("unknown key `{section}.{key}`"));
        }
    }
    let known_only: Table = table.into_iter().filter(|(k, _)| known.contains(&k.as_str())).collect();
    match Value::Table(known_only).try_into() {
        Ok(v) if errors.len() == before => Some(v),
        Ok(_) => None,
        Err(e) => {
            errors.push(format!("[{section}]: {}", e.to_string().trim()));
            None
        }
    }
}

fn agent_kind(mut table: Table, gateway: Option<GatewayConfig>, errors: &mut Vec<String>) -> AgentKind {
    let kind: String = take(&mut table, "kind", errors).unwrap_or_else(|| "rational".into());
    match kind.as_str() {
        "rational" => {
            for key in table.keys() {
                errors.push(format!("unknown key `agent.{key}` for a rational agent"));
            }
            AgentKind::Rational
        }
        "heuristic" => {
            let mut merged = Value::try_from(HeuristicParams::default())
                .ok()
                .and_then(|v| v.as_table().cloned())
                .unwrap_or_default();
            let known = ["anchor_weight", "center_pull", "trend_weight", "price_ceiling", "noise"];
            for (k, v) in table {
                merged.insert(k, v);
            }
            decode::<HeuristicParams>(merged, "agent", &known, errors)
                .map(AgentKind::Heuristic)
                .unwrap_or(AgentKind::Rational)
        }
        "replay" => {
            let source: Option<String> = take(&mut table, "source", errors);
            for key in table.keys() {
                errors.push(format!("unknown key `agent.{key}` for a replay agent"));
            }
            match source {
                Some(source) => AgentKind::Replay { source },
                None => {
                    errors.push("agent.kind = \"replay\" requires agent.source".into());
                    AgentKind::Rational
                }
            }
        }
        "gateway" => {
            for key in table.keys() {
                errors.push(format!("unknown key `agent.{key}` (gateway settings belong in [gateway])"));
            }
            match gateway {
                Some(g) => AgentKind::Gateway(g),
                None => {
                    errors.push("agent.kind = \"gateway\" requires a [gateway] table".into());
                    AgentKind::Rational
                }
            }
        }
        other => {
            errors.push(format!("unknown agent kind `{other}`"));
            AgentKind::Rational
        }
    }
}

fn duplicates<T: Ord>(name: &str, items: impl Iterator<Item = T>, errors: &mut Vec<String>) {
    let mut seen = BTreeSet::new();
    let mut n = 0;
    for item in items {
        n += 1;
        seen.insert(item);
    }
    if seen.len() != n {
        errors.push(format!("{name} contains duplicates"));
    }
}
