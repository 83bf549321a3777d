//! Agent decision interface.
//!
//! An agent sees only its own standalone value plus public data (network
//! strength, population size, the posted price) and its own slice of the
//! history. It returns an expectation of the *total* number of participants,
//! itself included, and a binary action.

mod gateway;
mod heuristic;
mod prompt;
mod reply;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{solve_fee, Action, GameError, GameSpec, NetworkCount, Price};

pub use gateway::{
    ChatRequest, ChatTransport, GatewayAgent, GatewayConfig, GatewayError, TransportError,
    DEFAULT_TEMPERATURE, ROBUSTNESS_TEMPERATURE,
};
#[cfg(feature = "http")]
pub use gateway::HttpTransport;
pub use heuristic::{heuristic_expectation, HeuristicParams};
pub use prompt::{render_prompt, PromptError, PromptTemplate, RenderedPrompt, NO_HISTORY_CLAUSE};
pub use reply::{parse_reply, ParsedReply, ReplyError};

/// The utility formula every agent is told about.
pub const UTILITY_DEFINITION: &str = "U(theta) = theta + beta * N - p, where N is the total number of participants (including you)";
/// Utility text for games that count only the other attendees.
pub const UTILITY_DEFINITION_OTHERS: &str = "U(theta) = theta + beta * N - p, where N is the number of other participants (excluding you)";

/// Utility text matching the spec's counting convention.
pub fn utility_definition(count: NetworkCount) -> &'static str {
    match count {
        NetworkCount::Total => UTILITY_DEFINITION,
        NetworkCount::Others => UTILITY_DEFINITION_OTHERS,
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("replay log has no decision for agent {agent_id} in round {round_index}")]
    ReplayMissing { round_index: usize, agent_id: usize },
    #[error("invalid heuristic parameters: {0}")]
    HeuristicParams(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// One past round as seen by one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub round_index: usize,
    pub price: Price,
    pub realized_total: usize,
    pub own_expectation: usize,
    pub own_action: Action,
    pub own_payoff: f64,
}

/// Everything an agent may condition on when deciding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent_id: usize,
    pub agent_theta: f64,
    pub beta: f64,
    pub population: usize,
    pub price: Price,
    pub round_index: usize,
    /// Oldest first; never includes the current round.
    pub visible_history: Vec<HistoryEntry>,
    pub utility_definition: String,
    #[serde(default)]
    pub network_count: NetworkCount,
    /// Seed of this agent's random stream for this round.
    pub stream_seed: u64,
}

impl Observation {
    /// Best response under the observed game's counting convention.
    pub fn best_response(&self, expected_total: usize) -> Action {
        let u = self.agent_theta + self.beta * self.network_count.size(expected_total) - self.price.value();
        if u >= 0.0 {
            Action::Attend
        } else {
            Action::NotAttend
        }
    }

    pub fn validate(&self, window: usize) -> Result<(), AgentError> {
        let bad = |msg: String| Err(AgentError::InvalidObservation(msg));
        if self.visible_history.len() > window {
            return bad(format!(
                "{} history entries exceed window {window}",
                self.visible_history.len()
            ));
        }
        if !self
            .visible_history
            .windows(2)
            .all(|w| w[0].round_index < w[1].round_index)
        {
            return bad("history entries are not strictly ordered by round".into());
        }
        if let Some(last) = self.visible_history.last() {
            if last.round_index >= self.round_index {
                return bad(format!(
                    "history contains round {} at or after current round {}",
                    last.round_index, self.round_index
                ));
            }
        }
        if let Some(e) = self
            .visible_history
            .iter()
            .find(|e| e.realized_total > self.population)
        {
            return bad(format!(
                "realized total {} exceeds population {}",
                e.realized_total, self.population
            ));
        }
        Ok(())
    }
}

/// An agent's answer for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub expected_total: usize,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    /// Set when the raw answer had to be repaired (e.g. clamped).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Serializable description of which decision model drives a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentKind {
    /// Always expects the maximal fulfilled-expectation count and best-responds.
    Rational,
    /// Synthetic rule-based stand-in; not a model of any hosted LLM.
    Heuristic(HeuristicParams),
    /// Re-issues the decisions recorded in a run log.
    Replay { source: String },
    /// A hosted chat-completion model.
    Gateway(GatewayConfig),
}

impl AgentKind {
    /// Short label used in cell keys and output tables.
    pub fn label(&self) -> String {
        match self {
            AgentKind::Rational => "rational".into(),
            AgentKind::Heuristic(_) => "heuristic".into(),
            AgentKind::Replay { .. } => "replay".into(),
            AgentKind::Gateway(cfg) => format!("gateway:{}", cfg.model),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, AgentKind::Gateway(_))
    }
}

/// Decisions keyed by `(round_index, agent_id)`.
#[derive(Debug, Clone, Default)]
pub struct ReplayBook {
    decisions: HashMap<(usize, usize), Decision>,
}

impl ReplayBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, round_index: usize, agent_id: usize, decision: Decision) {
        self.decisions.insert((round_index, agent_id), decision);
    }

    pub fn get(&self, round_index: usize, agent_id: usize) -> Option<&Decision> {
        self.decisions.get(&(round_index, agent_id))
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }
}

/// A ready-to-run decision model.
#[derive(Clone)]
pub enum Agent {
    /// Holds the game so it can compute the equilibrium; the type
    /// distribution is common knowledge to this oracle.
    Rational(Arc<GameSpec>),
    Heuristic(HeuristicParams),
    Replay(Arc<ReplayBook>),
    Gateway(Arc<GatewayAgent>),
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Agent::Rational(_) => f.write_str("Agent::Rational"),
            Agent::Heuristic(p) => write!(f, "Agent::Heuristic({p:?})"),
            Agent::Replay(b) => write!(f, "Agent::Replay({} decisions)", b.len()),
            Agent::Gateway(g) => write!(f, "Agent::Gateway({})", g.config().model),
        }
    }
}

impl Agent {
    pub fn rational(spec: &GameSpec) -> Self {
        Agent::Rational(Arc::new(spec.clone()))
    }

    pub fn heuristic(params: HeuristicParams) -> Result<Self, AgentError> {
        params.validate()?;
        Ok(Agent::Heuristic(params))
    }

    pub fn decide(&self, obs: &Observation) -> Result<Decision, AgentError> {
        match self {
            Agent::Rational(spec) => rational_decision(spec, obs),
            Agent::Heuristic(params) => {
                let expected_total = heuristic_expectation(params, obs)?;
                Ok(Decision {
                    expected_total,
                    action: obs.best_response(expected_total),
                    rationale: None,
                    warning: None,
                })
            }
            Agent::Replay(book) => book
                .get(obs.round_index, obs.agent_id)
                .cloned()
                .ok_or(AgentError::ReplayMissing {
                    round_index: obs.round_index,
                    agent_id: obs.agent_id,
                }),
            Agent::Gateway(gw) => Ok(gw.decide(obs)?),
        }
    }

    /// Cap on simultaneous in-flight decisions, if the model needs one.
    pub fn max_in_flight(&self) -> Option<usize> {
        match self {
            Agent::Gateway(gw) => Some(gw.config().max_in_flight.max(1)),
            _ => None,
        }
    }
}

fn rational_decision(spec: &GameSpec, obs: &Observation) -> Result<Decision, AgentError> {
    let owned;
    let spec = if spec.beta() == obs.beta {
        spec
    } else {
        owned = spec.with_beta(obs.beta)?;
        &owned
    };
    let expected_total = solve_fee(spec, obs.price)?.selected;
    Ok(Decision {
        expected_total,
        action: spec.best_response(obs.agent_theta, expected_total, obs.price),
        rationale: None,
        warning: None,
    })
}
