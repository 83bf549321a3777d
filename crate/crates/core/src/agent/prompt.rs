use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Observation;

/// Rendered in place of round lines when nothing is visible.
pub const NO_HISTORY_CLAUSE: &str = "No history available: you have not observed any previous round.";

const REQUIRED: [&str; 6] = ["theta", "beta", "population", "price", "utility", "history"];
const KNOWN: [&str; 8] = [
    "agent_id", "theta", "beta", "population", "price", "utility", "round", "history",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("template is missing placeholder {{{0}}}")]
    MissingPlaceholder(String),
    #[error("template uses unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
}

/// System (identity) and user (round state) templates.
///
/// Placeholders: `{agent_id}`, `{theta}`, `{beta}`, `{population}`,
/// `{price}`, `{utility}`, `{round}`, `{history}`. The shipped default is an
/// original wording, not a transcript of any published prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            system: "You are agent {agent_id}, one of {population} participants in a repeated \
                     participation game. Your private standalone value is theta = {theta}. \
                     The network-effect strength is beta = {beta}. Your payoff from attending is \
                     {utility}; not attending pays 0. Other participants' standalone values are \
                     private to them."
                .into(),
            user: "Round {round}. The posted price is p = {price}.\n\
                   History of previous rounds:\n{history}\n\
                   Predict how many of the {population} participants (including yourself) will \
                   attend at this price, then choose whether to attend. Reply with a single JSON \
                   object: {\"expected_total\": <integer>, \"action\": \"attend\" | \"not_attend\", \
                   \"rationale\": <short string>}."
                .into(),
        }
    }
}

/// A rendered system/user prompt pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    pub fn to_text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

/// Placeholder names in a template. A `{` not followed by an identifier and
/// `}` is literal text (so JSON examples survive).
fn placeholders(template: &str) -> Vec<(usize, usize, &str)> {
    let bytes = template.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let rest = &template[i + 1..];
            let ident_len = rest
                .bytes()
                .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
                .count();
            if ident_len > 0 && rest.as_bytes().get(ident_len) == Some(&b'}') {
                out.push((i, i + ident_len + 2, &rest[..ident_len]));
                i += ident_len + 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), PromptError> {
        let mut seen: Vec<&str> = placeholders(&self.system)
            .into_iter()
            .chain(placeholders(&self.user))
            .map(|(_, _, name)| name)
            .collect();
        if let Some(unknown) = seen.iter().find(|n| !KNOWN.contains(n)) {
            return Err(PromptError::UnknownPlaceholder(unknown.to_string()));
        }
        seen.sort_unstable();
        seen.dedup();
        match REQUIRED.iter().find(|r| !seen.contains(r)) {
            Some(missing) => Err(PromptError::MissingPlaceholder(missing.to_string())),
            None => Ok(()),
        }
    }
}

fn history_block(obs: &Observation) -> String {
    if obs.visible_history.is_empty() {
        return NO_HISTORY_CLAUSE.to_string();
    }
    let mut block = String::new();
    for (i, e) in obs.visible_history.iter().enumerate() {
        if i > 0 {
            block.push('\n');
        }
        let _ = write!(
            block,
            "- Round {}: price {}, participants {}, your expectation {}, your action {}, your payoff {:.2}",
            e.round_index + 1,
            e.price,
            e.realized_total,
            e.own_expectation,
            e.own_action,
            e.own_payoff
        );
    }
    block
}

fn fill(template: &str, obs: &Observation, history: &str) -> String {
    let mut out = String::with_capacity(template.len() + history.len());
    let mut cursor = 0;
    for (start, end, name) in placeholders(template) {
        out.push_str(&template[cursor..start]);
        match name {
            "agent_id" => out.push_str(&obs.agent_id.to_string()),
            "theta" => out.push_str(&format_number(obs.agent_theta)),
            "beta" => out.push_str(&format_number(obs.beta)),
            "population" => out.push_str(&obs.population.to_string()),
            "price" => out.push_str(&obs.price.to_string()),
            "utility" => out.push_str(&obs.utility_definition),
            "round" => out.push_str(&(obs.round_index + 1).to_string()),
            "history" => out.push_str(history),
            other => {
                out.push('{');
                out.push_str(other);
                out.push('}');
            }
        }
        cursor = end;
    }
    out.push_str(&template[cursor..]);
    out
}

fn format_number(x: f64) -> String {
    // Shortest representation that round-trips; integers print without ".0".
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Renders the prompt pair for one observation. Deterministic.
pub fn render_prompt(obs: &Observation, template: &PromptTemplate) -> Result<RenderedPrompt, PromptError> {
    template.validate()?;
    let history = history_block(obs);
    Ok(RenderedPrompt {
        system: fill(&template.system, obs, &history),
        user: fill(&template.user, obs, &history),
    })
}
