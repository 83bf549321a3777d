//! Experiment protocol: rounds, cells and the factorial design.
//!
//! A cell runs one price trajectory for one agent population. Each segment
//! of the trajectory (the whole sequence for dynamic kinds, a single price
//! for `Static`) is driven through the state machine in [`fsm`]; agents see
//! only their own slice of history from the current segment, truncated to the
//! cell's window.

pub mod config;
pub mod fsm;
pub mod log;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{utility_definition, Agent, AgentError, AgentKind, Decision, HistoryEntry, Observation, ReplayBook};
use crate::game::{Action, GameError, GameSpec, Price, PriceSequence, TrajectoryKind};
use crate::Execution;

pub use config::{ConfigError, ExperimentConfig, OutputPaths};
pub use fsm::{check_trace, transition, Fsm, FsmEvent, FsmState, InvalidTransition, TraceError};
pub use log::{read_logs, write_logs, LogError, RunLog, RunStatus, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Transition(#[from] InvalidTransition),
    #[error("agent {agent_id} failed in round {round_index}: {source}")]
    Agent {
        round_index: usize,
        agent_id: usize,
        #[source]
        source: AgentError,
    },
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("cannot build agents for {key}: {reason}")]
    AgentSetup { key: CellKey, reason: String },
}

/// One agent's private record for a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub agent_id: usize,
    pub theta: f64,
    pub expected_total: usize,
    pub action: Action,
    pub payoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl AgentRecord {
    pub fn decision(&self) -> Decision {
        Decision {
            expected_total: self.expected_total,
            action: self.action,
            rationale: self.rationale.clone(),
            warning: self.warning.clone(),
        }
    }
}

/// Public outcome of one round plus every agent's private record, ordered by
/// agent id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: usize,
    /// Independent game this round belongs to (always 0 for dynamic cells).
    pub segment: usize,
    pub price: Price,
    pub realized_total: usize,
    pub agents: Vec<AgentRecord>,
}

impl RoundRecord {
    pub fn attend_count(&self) -> usize {
        self.agents.iter().filter(|a| a.action.attends()).count()
    }

    pub fn agent(&self, agent_id: usize) -> Option<&AgentRecord> {
        self.agents
            .binary_search_by_key(&agent_id, |a| a.agent_id)
            .ok()
            .map(|i| &self.agents[i])
    }
}

/// One experimental condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub beta: f64,
    pub trajectory: PriceSequence,
    /// Rounds of visible history; 0 for static cells.
    pub window: usize,
    /// Times the trajectory is played back to back within one segment.
    #[serde(default = "one")]
    pub repeats: usize,
    pub agent: AgentKind,
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl ExperimentCell {
    pub fn key(&self) -> CellKey {
        CellKey {
            beta: self.beta,
            kind: self.trajectory.kind(),
            window: self.window,
            agent: self.agent.label(),
        }
    }

    /// Price lists of the independent games in this cell.
    pub fn segments(&self) -> Vec<Vec<Price>> {
        let base = self.trajectory.segments();
        if self.trajectory.kind().is_static() {
            return base;
        }
        base.into_iter()
            .map(|prices| {
                let mut all = Vec::with_capacity(prices.len() * self.repeats);
                for _ in 0..self.repeats {
                    all.extend_from_slice(&prices);
                }
                all
            })
            .collect()
    }

    pub fn round_count(&self) -> usize {
        self.segments().iter().map(Vec::len).sum()
    }

    fn validate(&self) -> Result<(), OrchestratorError> {
        if self.trajectory.is_empty() {
            return Err(OrchestratorError::InvalidCell("empty trajectory".into()));
        }
        if self.repeats == 0 {
            return Err(OrchestratorError::InvalidCell("repeats must be at least 1".into()));
        }
        if self.trajectory.kind().is_static() && self.window != 0 {
            return Err(OrchestratorError::InvalidCell(
                "static cells carry no history (window must be 0)".into(),
            ));
        }
        Ok(())
    }
}

/// Identity of a cell: (beta, trajectory kind, window, agent label).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub beta: f64,
    pub kind: TrajectoryKind,
    pub window: usize,
    pub agent: String,
}

impl Eq for CellKey {}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.beta
            .total_cmp(&other.beta)
            .then(self.kind.cmp(&other.kind))
            .then(self.window.cmp(&other.window))
            .then_with(|| self.agent.cmp(&other.agent))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta={}/{}/w{}/{}", self.beta, self.kind, self.window, self.agent)
    }
}

/// An agent slot in the population.
#[derive(Debug, Clone)]
pub struct Participant {
    pub id: usize,
    pub theta: f64,
    pub agent: Agent,
}

/// One participant per type, ids in type order, all driven by `agent`.
pub fn population(spec: &GameSpec, agent: &Agent) -> Vec<Participant> {
    spec.types()
        .iter()
        .enumerate()
        .map(|(id, &theta)| Participant {
            id,
            theta,
            agent: agent.clone(),
        })
        .collect()
}

/// The last `window` records (fewer if not available), order preserved.
pub fn visible_history<T>(records: &[T], window: usize) -> &[T] {
    &records[records.len().saturating_sub(window)..]
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministically derives a child seed.
pub fn derive_seed(parent: u64, salt: u64) -> u64 {
    splitmix64(parent ^ splitmix64(salt))
}

/// Inputs shared by every decision of one round.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub spec: &'a GameSpec,
    pub price: Price,
    pub round_index: usize,
    pub segment: usize,
    pub window: usize,
    pub cell_seed: u64,
}

/// A round that could not complete; `partial` holds the decisions that did.
#[derive(Debug)]
pub struct RoundFailure {
    pub error: OrchestratorError,
    pub partial: Vec<AgentRecord>,
}

fn observation(ctx: &RoundContext<'_>, participant: &Participant, prior: &[RoundRecord]) -> Observation {
    let visible_history = visible_history(prior, ctx.window)
        .iter()
        .filter_map(|r| {
            r.agent(participant.id).map(|own| HistoryEntry {
                round_index: r.round_index,
                price: r.price,
                realized_total: r.realized_total,
                own_expectation: own.expected_total,
                own_action: own.action,
                own_payoff: own.payoff,
            })
        })
        .collect();
    Observation {
        agent_id: participant.id,
        agent_theta: participant.theta,
        beta: ctx.spec.beta(),
        population: ctx.spec.population(),
        price: ctx.price,
        round_index: ctx.round_index,
        visible_history,
        utility_definition: utility_definition(ctx.spec.network_count()).to_string(),
        network_count: ctx.spec.network_count(),
        stream_seed: derive_seed(derive_seed(ctx.cell_seed, participant.id as u64), ctx.round_index as u64),
    }
}

/// Plays one simultaneous-move round.
///
/// Every participant decides from an observation built only from `prior`
/// (records of earlier rounds in the same segment), so decisions within the
/// round never see each other. Attendees earn `utility` at the realized
/// total; everyone else earns 0.
pub fn run_round(
    ctx: &RoundContext<'_>,
    participants: &[Participant],
    prior: &[RoundRecord],
    exec: Execution,
) -> Result<RoundRecord, RoundFailure> {
    let decide = |p: &Participant| {
        let obs = observation(ctx, p, prior);
        obs.validate(ctx.window)
            .and_then(|_| p.agent.decide(&obs))
            .map_err(|source| OrchestratorError::Agent {
                round_index: ctx.round_index,
                agent_id: p.id,
                source,
            })
    };
    let cap = participants
        .iter()
        .filter_map(|p| p.agent.max_in_flight())
        .min()
        .unwrap_or(participants.len().max(1));
    let mut outcomes = Vec::with_capacity(participants.len());
    for chunk in participants.chunks(cap) {
        outcomes.extend(exec.map(chunk, decide));
    }

    let mut decided = Vec::with_capacity(participants.len());
    let mut first_error = None;
    for (p, outcome) in participants.iter().zip(outcomes) {
        match outcome {
            Ok(d) => decided.push((p, d)),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }

    let realized_total = decided.iter().filter(|(_, d)| d.action.attends()).count();
    let mut agents: Vec<AgentRecord> = decided
        .into_iter()
        .map(|(p, d)| AgentRecord {
            agent_id: p.id,
            theta: p.theta,
            expected_total: d.expected_total,
            action: d.action,
            payoff: if d.action.attends() {
                ctx.spec.utility(p.theta, realized_total, ctx.price)
            } else {
                0.0
            },
            rationale: d.rationale,
            warning: d.warning,
        })
        .collect();
    agents.sort_by_key(|a| a.agent_id);

    if let Some(error) = first_error {
        return Err(RoundFailure {
            error,
            partial: agents,
        });
    }
    Ok(RoundRecord {
        round_index: ctx.round_index,
        segment: ctx.segment,
        price: ctx.price,
        realized_total,
        agents,
    })
}

/// A cell that aborted; `partial` is the log up to the failure.
#[derive(Debug)]
pub struct CellFailure {
    pub key: CellKey,
    pub error: OrchestratorError,
    pub partial: Box<RunLog>,
}

fn check_participants(spec: &GameSpec, participants: &[Participant]) -> Result<(), OrchestratorError> {
    if participants.len() != spec.population() {
        return Err(OrchestratorError::InvalidCell(format!(
            "{} participants for a population of {}",
            participants.len(),
            spec.population()
        )));
    }
    if !participants.windows(2).all(|w| w[0].id < w[1].id) {
        return Err(OrchestratorError::InvalidCell(
            "participant ids must be strictly increasing".into(),
        ));
    }
    let mut thetas: Vec<f64> = participants.iter().map(|p| p.theta).collect();
    thetas.sort_by(f64::total_cmp);
    if thetas != spec.types() {
        return Err(OrchestratorError::InvalidCell(
            "participant types do not match the population".into(),
        ));
    }
    Ok(())
}

/// Drives the state machine through every segment of a cell.
///
/// `population_spec` supplies the standalone values; the cell's beta
/// overrides the spec's.
#[allow(clippy::result_large_err)] // failures are rare and carry the partial log
pub fn run_cell(
    cell: &ExperimentCell,
    population_spec: &GameSpec,
    participants: &[Participant],
    exec: Execution,
) -> Result<RunLog, CellFailure> {
    let spec = population_spec.with_beta(cell.beta);
    let mut log = RunLog::new(cell.clone(), population_spec.types().to_vec());
    let fail = |log: RunLog, error: OrchestratorError| {
        let mut log = log;
        log.status = RunStatus::Aborted {
            error: error.to_string(),
        };
        CellFailure {
            key: cell.key(),
            error,
            partial: Box::new(log),
        }
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => return Err(fail(log, e.into())),
    };
    if let Err(e) = cell.validate().and_then(|_| check_participants(&spec, participants)) {
        return Err(fail(log, e));
    }

    let mut round_index = 0;
    for (segment, prices) in cell.segments().into_iter().enumerate() {
        let mut fsm = Fsm::new();
        let segment_start = log.rounds.len();
        let step = |fsm: &mut Fsm, event| fsm.fire(event).map(|_| ()).map_err(OrchestratorError::from);
        let mut outcome = step(&mut fsm, FsmEvent::ExperimentStart);
        for (i, &price) in prices.iter().enumerate() {
            if outcome.is_err() {
                break;
            }
            outcome = step(&mut fsm, FsmEvent::BroadcastComplete);
            if outcome.is_err() {
                break;
            }
            let ctx = RoundContext {
                spec: &spec,
                price,
                round_index,
                segment,
                window: cell.window,
                cell_seed: cell.seed,
            };
            match run_round(&ctx, participants, &log.rounds[segment_start..], exec) {
                Ok(record) => log.rounds.push(record),
                Err(failure) => {
                    log.partial_round = Some(failure.partial);
                    log.trace.push(fsm.into_trace());
                    return Err(fail(log, failure.error));
                }
            }
            round_index += 1;
            outcome = step(&mut fsm, FsmEvent::AllDecisionsComplete).and_then(|_| {
                let next = if i + 1 < prices.len() {
                    FsmEvent::ResultsCalculated
                } else {
                    FsmEvent::TerminationMet
                };
                step(&mut fsm, next)
            });
        }
        log.trace.push(fsm.into_trace());
        if let Err(e) = outcome {
            return Err(fail(log, e));
        }
    }
    Ok(log)
}

/// Logs of every completed cell and failures of the rest, both in key order.
#[derive(Debug, Default)]
pub struct FactorialOutcome {
    pub logs: Vec<RunLog>,
    pub failures: Vec<CellFailure>,
}

/// Runs every cell of `config`, building agents with `build_agent`.
#[allow(clippy::result_large_err)] // failures are rare and carry the partial log
pub fn run_factorial_with<F>(config: &ExperimentConfig, exec: Execution, build_agent: F) -> Result<FactorialOutcome, ConfigError>
where
    F: Fn(&ExperimentCell, &GameSpec) -> Result<Agent, String> + Sync + Send,
{
    let cells = config.cells()?;
    let population_spec = config.population_spec()?;
    let snapshot = config.snapshot();
    let results = exec.map(&cells, |cell| {
        let spec = population_spec.with_beta(cell.beta).map_err(|e| CellFailure {
            key: cell.key(),
            error: e.into(),
            partial: Box::new(RunLog::new(cell.clone(), population_spec.types().to_vec())),
        })?;
        let agent = build_agent(cell, &spec).map_err(|reason| {
            let error = OrchestratorError::AgentSetup {
                key: cell.key(),
                reason,
            };
            let mut partial = RunLog::new(cell.clone(), population_spec.types().to_vec());
            partial.status = RunStatus::Aborted {
                error: error.to_string(),
            };
            CellFailure {
                key: cell.key(),
                error,
                partial: Box::new(partial),
            }
        })?;
        let participants = population(&spec, &agent);
        // Cells already run in parallel; decisions inside a cell stay sequential.
        let inner = if exec.is_parallel() { Execution::Sequential } else { exec };
        let mut started = RunLog::timestamp_if(config.record_timestamps);
        let result = run_cell(cell, &population_spec, &participants, inner);
        let mut attach = |log: &mut RunLog| {
            log.config_snapshot = snapshot.clone();
            log.started_at = started.take();
            log.finished_at = RunLog::timestamp_if(config.record_timestamps);
        };
        match result {
            Ok(mut log) => {
                attach(&mut log);
                Ok(log)
            }
            Err(mut failure) => {
                attach(&mut failure.partial);
                Err(failure)
            }
        }
    });
    let mut outcome = FactorialOutcome::default();
    for r in results {
        match r {
            Ok(log) => outcome.logs.push(log),
            Err(f) => outcome.failures.push(f),
        }
    }
    Ok(outcome)
}

/// Builds the agent named by a cell's [`AgentKind`].
///
/// Replay sources are read from disk and matched by cell key; gateway agents
/// use the HTTP transport with the configured prompt template.
pub fn default_agent_builder(config: &ExperimentConfig) -> impl Fn(&ExperimentCell, &GameSpec) -> Result<Agent, String> + Sync + Send + '_ {
    let replay_logs: Option<Result<Vec<RunLog>, String>> = match &config.agent {
        AgentKind::Replay { source } => Some(
            std::fs::File::open(source)
                .map_err(|e| format!("cannot open replay source {source}: {e}"))
                .and_then(|f| read_logs(std::io::BufReader::new(f)).map_err(|e| e.to_string())),
        ),
        _ => None,
    };
    move |cell, spec| match &cell.agent {
        AgentKind::Rational => Ok(Agent::rational(spec)),
        AgentKind::Heuristic(params) => Agent::heuristic(*params).map_err(|e| e.to_string()),
        AgentKind::Replay { .. } => {
            let logs = replay_logs.as_ref().expect("replay logs loaded").as_ref().map_err(Clone::clone)?;
            let key = cell.key();
            let source = logs
                .iter()
                .find(|l| CellKey { agent: key.agent.clone(), ..l.cell.key() } == key)
                .ok_or_else(|| format!("replay source has no log for {key}"))?;
            Ok(Agent::Replay(Arc::new(replay_book(source))))
        }
        AgentKind::Gateway(gw) => gateway_agent(config, gw),
    }
}

#[cfg(feature = "http")]
fn gateway_agent(config: &ExperimentConfig, gw: &crate::agent::GatewayConfig) -> Result<Agent, String> {
    let transport = Arc::new(crate::agent::HttpTransport::new(gw));
    let template = config.prompt.clone().unwrap_or_default();
    crate::agent::GatewayAgent::new(gw.clone(), template, transport)
        .map(|g| Agent::Gateway(Arc::new(g)))
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "http"))]
fn gateway_agent(_: &ExperimentConfig, _: &crate::agent::GatewayConfig) -> Result<Agent, String> {
    Err("built without the `http` feature; gateway agents are unavailable".into())
}

/// Runs every cell of `config` with the default agent builder.
pub fn run_factorial(config: &ExperimentConfig, exec: Execution) -> Result<FactorialOutcome, ConfigError> {
    run_factorial_with(config, exec, default_agent_builder(config))
}

/// Every decision recorded in a log, keyed for replay.
pub fn replay_book(log: &RunLog) -> ReplayBook {
    let mut book = ReplayBook::new();
    for round in &log.rounds {
        for a in &round.agents {
            book.insert(round.round_index, a.agent_id, a.decision());
        }
    }
    book
}

/// Re-runs a log's cell with its own recorded decisions.
#[allow(clippy::result_large_err)] // failures are rare and carry the partial log
pub fn replay_log(log: &RunLog, exec: Execution) -> Result<RunLog, CellFailure> {
    let population_spec = GameSpec::new(log.types.clone(), log.cell.beta).map_err(|e| CellFailure {
        key: log.cell.key(),
        error: e.into(),
        partial: Box::new(RunLog::new(log.cell.clone(), log.types.clone())),
    })?;
    let agent = Agent::Replay(Arc::new(replay_book(log)));
    let participants = population(&population_spec, &agent);
    let mut replayed = run_cell(&log.cell, &population_spec, &participants, exec)?;
    replayed.config_snapshot = log.config_snapshot.clone();
    replayed.started_at = log.started_at.clone();
    replayed.finished_at = log.finished_at.clone();
    Ok(replayed)
}
