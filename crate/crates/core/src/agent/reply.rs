use serde_json::{Map, Value};
use thiserror::Error;

use super::Decision;
use crate::game::Action;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplyError {
    #[error("no JSON object found in reply")]
    NoJsonFound,
    #[error("reply violates schema: {0}")]
    SchemaViolation(String),
    #[error("expected_total {value} outside [0, {population}]")]
    OutOfRange { value: i64, population: usize },
}

/// A decision parsed from a model reply.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReply {
    /// `expected_total` already clamped into `[0, K]`.
    pub decision: Decision,
    /// The raw value when clamping changed it.
    pub clamped_from: Option<i64>,
}

impl ParsedReply {
    pub fn out_of_range(&self, population: usize) -> Option<ReplyError> {
        self.clamped_from
            .map(|value| ReplyError::OutOfRange { value, population })
    }
}

fn check_schema(obj: &Map<String, Value>) -> Result<(i64, Action, Option<String>), String> {
    for key in obj.keys() {
        if !matches!(key.as_str(), "expected_total" | "action" | "rationale") {
            return Err(format!("unexpected field `{key}`"));
        }
    }
    let expected = match obj.get("expected_total") {
        None => return Err("missing required field `expected_total`".into()),
        Some(v) => v
            .as_i64()
            .ok_or_else(|| format!("`expected_total` must be an integer, got {v}"))?,
    };
    let action = match obj.get("action") {
        None => return Err("missing required field `action`".into()),
        Some(Value::String(s)) if s == "attend" => Action::Attend,
        Some(Value::String(s)) if s == "not_attend" => Action::NotAttend,
        Some(v) => return Err(format!("`action` must be \"attend\" or \"not_attend\", got {v}")),
    };
    let rationale = match obj.get("rationale") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(v) => return Err(format!("`rationale` must be a string, got {v}")),
    };
    Ok((expected, action, rationale))
}

/// Extracts the first JSON object in `text` that satisfies the reply schema
/// `{expected_total: integer, action: "attend"|"not_attend", rationale?: string}`
/// and clamps the expectation into `[0, population]`.
pub fn parse_reply(text: &str, population: usize) -> Result<ParsedReply, ReplyError> {
    let mut first_violation: Option<String> = None;
    for (start, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(obj))) = stream.next() else {
            continue;
        };
        match check_schema(&obj) {
            Ok((raw, action, rationale)) => {
                let clamped = raw.clamp(0, population as i64);
                let clamped_from = (clamped != raw).then_some(raw);
                return Ok(ParsedReply {
                    decision: Decision {
                        expected_total: clamped as usize,
                        action,
                        rationale,
                        warning: clamped_from.map(|raw| {
                            format!("expected_total {raw} clamped to {clamped}")
                        }),
                    },
                    clamped_from,
                });
            }
            Err(msg) => {
                first_violation.get_or_insert(msg);
            }
        }
    }
    Err(match first_violation {
        Some(msg) => ReplyError::SchemaViolation(msg),
        None => ReplyError::NoJsonFound,
    })
}
