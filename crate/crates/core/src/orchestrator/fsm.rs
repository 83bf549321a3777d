use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Phases of one experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FsmState {
    /// Parameters fixed, types assigned.
    S0Init,
    /// Current price and last round's public outcome published.
    S1Broadcast,
    /// Agents decide simultaneously.
    S2Decide,
    /// Actions aggregated, payoffs computed.
    S3Aggregate,
    /// Absorbing.
    S4Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FsmEvent {
    ExperimentStart,
    BroadcastComplete,
    AllDecisionsComplete,
    ResultsCalculated,
    TerminationMet,
}

impl FsmState {
    pub const ALL: [FsmState; 5] = [
        FsmState::S0Init,
        FsmState::S1Broadcast,
        FsmState::S2Decide,
        FsmState::S3Aggregate,
        FsmState::S4Terminated,
    ];
}

impl FsmEvent {
    pub const ALL: [FsmEvent; 5] = [
        FsmEvent::ExperimentStart,
        FsmEvent::BroadcastComplete,
        FsmEvent::AllDecisionsComplete,
        FsmEvent::ResultsCalculated,
        FsmEvent::TerminationMet,
    ];
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FsmState::S0Init => "S0",
            FsmState::S1Broadcast => "S1",
            FsmState::S2Decide => "S2",
            FsmState::S3Aggregate => "S3",
            FsmState::S4Terminated => "S4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("invalid transition: {event:?} in state {state}")]
pub struct InvalidTransition {
    pub state: FsmState,
    pub event: FsmEvent,
}

/// The transition table. Whether prices remain is the driver's concern:
/// it fires `ResultsCalculated` to loop and `TerminationMet` to stop.
pub fn transition(state: FsmState, event: FsmEvent) -> Result<FsmState, InvalidTransition> {
    use FsmEvent::*;
    use FsmState::*;
    match (state, event) {
        (S0Init, ExperimentStart) => Ok(S1Broadcast),
        (S1Broadcast, BroadcastComplete) => Ok(S2Decide),
        (S2Decide, AllDecisionsComplete) => Ok(S3Aggregate),
        (S3Aggregate, ResultsCalculated) => Ok(S1Broadcast),
        (S3Aggregate, TerminationMet) => Ok(S4Terminated),
        _ => Err(InvalidTransition { state, event }),
    }
}

/// A state machine that records every state it visits.
#[derive(Debug, Clone)]
pub struct Fsm {
    state: FsmState,
    trace: Vec<FsmState>,
}

impl Default for Fsm {
    fn default() -> Self {
        Fsm {
            state: FsmState::S0Init,
            trace: vec![FsmState::S0Init],
        }
    }
}

impl Fsm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> FsmState {
        self.state
    }

    pub fn fire(&mut self, event: FsmEvent) -> Result<FsmState, InvalidTransition> {
        self.state = transition(self.state, event)?;
        self.trace.push(self.state);
        Ok(self.state)
    }

    pub fn trace(&self) -> &[FsmState] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<FsmState> {
        self.trace
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("trace must start in S0")]
    BadStart,
    #[error("no event moves {from} to {to} (step {step})")]
    IllegalStep { step: usize, from: FsmState, to: FsmState },
    #[error("trace does not end in S4")]
    NotTerminated,
    #[error("trace covers {found} decision rounds, expected {expected}")]
    RoundCount { expected: usize, found: usize },
}

/// Checks that a recorded segment trace is a legal walk
/// `S0 S1 (S2 S3 S1)* S2 S3 S4` over exactly `rounds` decision phases.
pub fn check_trace(trace: &[FsmState], rounds: usize) -> Result<(), TraceError> {
    if trace.first() != Some(&FsmState::S0Init) {
        return Err(TraceError::BadStart);
    }
    for (step, pair) in trace.windows(2).enumerate() {
        let legal = FsmEvent::ALL
            .iter()
            .any(|&e| transition(pair[0], e) == Ok(pair[1]));
        if !legal {
            return Err(TraceError::IllegalStep {
                step,
                from: pair[0],
                to: pair[1],
            });
        }
    }
    if trace.last() != Some(&FsmState::S4Terminated) {
        return Err(TraceError::NotTerminated);
    }
    let found = trace.iter().filter(|&&s| s == FsmState::S2Decide).count();
    if found != rounds {
        return Err(TraceError::RoundCount {
            expected: rounds,
            found,
        });
    }
    Ok(())
}
