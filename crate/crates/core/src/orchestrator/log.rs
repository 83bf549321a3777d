//! Line-delimited JSON run logs.
//!
//! Each run is a `header` line, one `round` line per round and a `trailer`
//! line. Several runs may be concatenated in one stream.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AgentRecord, ExperimentCell, FsmState, RoundRecord};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { line: usize, found: u32 },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Aborted { error: String },
}

/// Everything recorded about one cell's run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub schema_version: u32,
    pub cell: ExperimentCell,
    /// Standalone values of the population, ascending.
    pub types: Vec<f64>,
    pub config_snapshot: serde_json::Value,
    pub rounds: Vec<RoundRecord>,
    /// State trace of each segment.
    pub trace: Vec<Vec<FsmState>>,
    pub status: RunStatus,
    /// Decisions of the round that failed, if any.
    pub partial_round: Option<Vec<AgentRecord>>,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
}

impl RunLog {
    pub fn new(cell: ExperimentCell, types: Vec<f64>) -> Self {
        RunLog {
            schema_version: SCHEMA_VERSION,
            cell,
            types,
            config_snapshot: serde_json::Value::Null,
            rounds: Vec::new(),
            trace: Vec::new(),
            status: RunStatus::Complete,
            partial_round: None,
            started_at: None,
            finished_at: None,
        }
    }

    pub(crate) fn timestamp_if(enabled: bool) -> Option<String> {
        enabled.then(|| {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap_or_default();
            format!("{}.{:03}", now.as_secs(), now.subsec_millis())
        })
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    cell: ExperimentCell,
    types: Vec<f64>,
    config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    started_at: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    rounds: usize,
    trace: Vec<Vec<FsmState>>,
    #[serde(flatten)]
    status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partial_round: Option<Vec<AgentRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finished_at: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header(Header),
    Round(RoundRecord),
    Trailer(Trailer),
}

fn write_line<W: Write>(out: &mut W, line: &Line) -> Result<(), LogError> {
    serde_json::to_writer(&mut *out, line).map_err(|source| LogError::Json { line: 0, source })?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_logs<'a, W, I>(mut out: W, logs: I) -> Result<(), LogError>
where
    W: Write,
    I: IntoIterator<Item = &'a RunLog>,
{
    for log in logs {
        write_line(
            &mut out,
            &Line::Header(Header {
                schema_version: log.schema_version,
                cell: log.cell.clone(),
                types: log.types.clone(),
                config: log.config_snapshot.clone(),
                started_at: log.started_at.clone(),
            }),
        )?;
        for round in &log.rounds {
            write_line(&mut out, &Line::Round(round.clone()))?;
        }
        write_line(
            &mut out,
            &Line::Trailer(Trailer {
                rounds: log.rounds.len(),
                trace: log.trace.clone(),
                status: log.status.clone(),
                partial_round: log.partial_round.clone(),
                finished_at: log.finished_at.clone(),
            }),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_logs<R: BufRead>(input: R) -> Result<Vec<RunLog>, LogError> {
    let mut logs = Vec::new();
    let mut open: Option<RunLog> = None;
    for (i, text) in input.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|source| LogError::Json { line, source })?;
        if value.get("record").and_then(|r| r.as_str()) == Some("header") {
            let found = value
                .get("schema_version")
                .and_then(|v| v.as_u64())
                .unwrap_or(0) as u32;
            if found != SCHEMA_VERSION {
                return Err(LogError::SchemaVersion { line, found });
            }
        }
        let parsed: Line = serde_json::from_value(value).map_err(|source| LogError::Json { line, source })?;
        let structure = |message: &str| LogError::Structure {
            line,
            message: message.to_string(),
        };
        match parsed {
            Line::Header(h) => {
                if open.is_some() {
                    return Err(structure("header before previous trailer"));
                }
                let mut log = RunLog::new(h.cell, h.types);
                log.schema_version = h.schema_version;
                log.config_snapshot = h.config;
                log.started_at = h.started_at;
                open = Some(log);
            }
            Line::Round(r) => open
                .as_mut()
                .ok_or_else(|| structure("round record outside a run"))?
                .rounds
                .push(r),
            Line::Trailer(t) => {
                let mut log = open.take().ok_or_else(|| structure("trailer without header"))?;
                if t.rounds != log.rounds.len() {
                    return Err(structure(&format!(
                        "trailer counts {} rounds but {} were read",
                        t.rounds,
                        log.rounds.len()
                    )));
                }
                log.trace = t.trace;
                log.status = t.status;
                log.partial_round = t.partial_round;
                log.finished_at = t.finished_at;
                logs.push(log);
            }
        }
    }
    if open.is_some() {
        return Err(LogError::Structure {
            line: 0,
            message: "stream ended before trailer".into(),
        });
    }
    Ok(logs)
}
