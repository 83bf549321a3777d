//! Simulation and analysis toolkit for the network-effect participation game.
//!
//! * [`game`]: demand, fulfilled-expectation equilibria, designed prices and
//!   price trajectories.
//! * [`agent`]: the decision interface and its implementations (rational
//!   oracle, heuristic, replay, chat-model gateway).
//! * [`orchestrator`]: the five-state experiment protocol, history windows,
//!   factorial runs and JSONL run logs.
//! * [`metrics`]: deviation rows and per-cell RMSE.
//! * [`stats`]: Yeo-Johnson transform, design matrices, OLS with HC3 errors.
//! * [`plot`]: box-plot quantile series for figures.
//!
//! Batch work (factorial cells, per-cell metrics, Monte-Carlo replications)
//! runs on rayon when the `parallel` feature is enabled; see [`Execution`].

pub mod agent;
pub mod game;
pub mod metrics;
pub mod orchestrator;
mod par;
pub mod plot;
pub mod stats;

pub use par::Execution;
