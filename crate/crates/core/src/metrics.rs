//! Deviation dataset and per-cell RMSE against the equilibrium benchmark.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{solve_fee, GameError, GameSpec, Price, TrajectoryKind};
use crate::orchestrator::{RunLog, SCHEMA_VERSION};
use crate::Execution;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("run log has schema version {found}, expected {SCHEMA_VERSION}")]
    SchemaVersion { found: u32 },
    #[error("run log for {0} did not complete")]
    IncompleteLog(String),
    #[error("cannot compute RMSE of an empty cell")]
    EmptyCell,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One (agent, round) observation. Column order of the CSV export follows
/// field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub beta: f64,
    pub trajectory: TrajectoryKind,
    pub window: usize,
    pub agent: String,
    pub agent_id: usize,
    pub theta: f64,
    pub round: usize,
    pub price: f64,
    pub y_hat: usize,
    pub y_fee: usize,
    /// `y_hat - y_fee`.
    pub y: f64,
}

/// One row per (agent, round) of every log. The benchmark is recomputed from
/// the game, never read from the log.
pub fn build_deviation_rows(logs: &[RunLog]) -> Result<Vec<DeviationRow>, MetricsError> {
    let mut rows = Vec::new();
    for log in logs {
        if log.schema_version != SCHEMA_VERSION {
            return Err(MetricsError::SchemaVersion {
                found: log.schema_version,
            });
        }
        let key = log.cell.key();
        if !log.is_complete() {
            return Err(MetricsError::IncompleteLog(key.to_string()));
        }
        let spec = GameSpec::new(log.types.clone(), log.cell.beta)?;
        let mut benchmark: HashMap<u64, usize> = HashMap::new();
        for round in &log.rounds {
            let y_fee = match benchmark.get(&round.price.value().to_bits()) {
                Some(&n) => n,
                None => {
                    let n = solve_fee(&spec, round.price)?.selected;
                    benchmark.insert(round.price.value().to_bits(), n);
                    n
                }
            };
            for a in &round.agents {
                rows.push(DeviationRow {
                    beta: key.beta,
                    trajectory: key.kind,
                    window: key.window,
                    agent: key.agent.clone(),
                    agent_id: a.agent_id,
                    theta: a.theta,
                    round: round.round_index,
                    price: round.price.value(),
                    y_hat: a.expected_total,
                    y_fee,
                    y: a.expected_total as f64 - y_fee as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// Root mean squared deviation over the rows of one cell.
pub fn rmse<'a, I>(rows: I) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = &'a DeviationRow>,
{
    let (n, sum_sq) = rows
        .into_iter()
        .fold((0usize, 0.0f64), |(n, s), r| (n + 1, s + r.y * r.y));
    if n == 0 {
        return Err(MetricsError::EmptyCell);
    }
    Ok((sum_sq / n as f64).sqrt())
}

/// How cells are grouped before computing metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One group per cell.
    #[default]
    PerCell,
    /// Increasing+decreasing pooled as `monotone`, converging+diverging as
    /// `non_monotone`.
    ByDirectionPair,
}

fn path_label(kind: TrajectoryKind, pooling: Pooling) -> &'static str {
    match (pooling, kind) {
        (Pooling::ByDirectionPair, TrajectoryKind::Increasing | TrajectoryKind::Decreasing) => "monotone",
        (Pooling::ByDirectionPair, TrajectoryKind::Converging | TrajectoryKind::Diverging) => "non_monotone",
        _ => kind.as_str(),
    }
}

/// Summary of one group of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub beta: f64,
    pub path: String,
    pub window: usize,
    pub agent: String,
    /// Distinct rounds.
    pub rounds: usize,
    /// Distinct agents.
    pub agents: usize,
    pub n_obs: usize,
    pub rmse: f64,
    pub mean_y: f64,
    /// Population standard deviation, so `rmse^2 = mean_y^2 + sd_y^2`.
    pub sd_y: f64,
}

#[derive(Debug, Clone)]
struct GroupKey {
    beta: f64,
    order: u8,
    path: &'static str,
    window: usize,
    agent: String,
}

impl PartialEq for GroupKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for GroupKey {}
impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.beta
            .total_cmp(&other.beta)
            .then(self.order.cmp(&other.order))
            .then(self.path.cmp(other.path))
            .then(self.window.cmp(&other.window))
            .then_with(|| self.agent.cmp(&other.agent))
    }
}

/// Metrics per group, in (beta, path, window, agent) order.
pub fn cell_metrics(rows: &[DeviationRow], pooling: Pooling, exec: Execution) -> Vec<CellMetrics> {
    let mut groups: BTreeMap<GroupKey, Vec<&DeviationRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(GroupKey {
                beta: r.beta,
                order: match (pooling, r.trajectory) {
                    (Pooling::ByDirectionPair, TrajectoryKind::Decreasing) => TrajectoryKind::Increasing as u8,
                    (Pooling::ByDirectionPair, TrajectoryKind::Diverging) => TrajectoryKind::Converging as u8,
                    (_, k) => k as u8,
                },
                path: path_label(r.trajectory, pooling),
                window: r.window,
                agent: r.agent.clone(),
            })
            .or_default()
            .push(r);
    }
    let groups: Vec<(GroupKey, Vec<&DeviationRow>)> = groups.into_iter().collect();
    exec.map(&groups, |(key, members)| {
        let n = members.len();
        let mean_y = members.iter().map(|r| r.y).sum::<f64>() / n as f64;
        let var = members.iter().map(|r| (r.y - mean_y).powi(2)).sum::<f64>() / n as f64;
        CellMetrics {
            beta: key.beta,
            path: key.path.to_string(),
            window: key.window,
            agent: key.agent.clone(),
            rounds: members.iter().map(|r| (r.trajectory, r.round)).collect::<BTreeSet<_>>().len(),
            agents: members.iter().map(|r| r.agent_id).collect::<BTreeSet<_>>().len(),
            n_obs: n,
            rmse: rmse(members.iter().copied()).expect("groups are nonempty"),
            mean_y,
            sd_y: var.sqrt(),
        }
    })
}

/// Mean deviation at each distinct price, ascending by price.
pub fn mean_deviation_by_price(rows: &[DeviationRow]) -> Vec<(Price, f64)> {
    let mut by_price: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        // Non-negative floats order like their bit patterns.
        let e = by_price.entry(r.price.to_bits()).or_insert((r.price, 0.0, 0));
        e.1 += r.y;
        e.2 += 1;
    }
    by_price
        .into_values()
        .map(|(p, sum, n)| (Price::new(p).expect("logged prices are valid"), sum / n as f64))
        .collect()
}

pub fn write_rows_csv<W: Write>(out: W, rows: &[DeviationRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<DeviationRow>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<DeviationRow>, _>>()?)
}

pub fn write_metrics_csv<W: Write>(out: W, metrics: &[CellMetrics]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for m in metrics {
        w.serialize(m)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Aligned text table of metrics.
pub fn format_metrics_table(metrics: &[CellMetrics]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6}  {:<13} {:>6}  {:<18} {:>6} {:>6} {:>7} {:>9} {:>9} {:>9}",
        "beta", "path", "window", "agent", "rounds", "agents", "obs", "rmse", "mean_y", "sd_y"
    );
    for m in metrics {
        let _ = writeln!(
            s,
            "{:>6}  {:<13} {:>6}  {:<18} {:>6} {:>6} {:>7} {:>9.3} {:>9.3} {:>9.3}",
            m.beta, m.path, m.window, m.agent, m.rounds, m.agents, m.n_obs, m.rmse, m.mean_y, m.sd_y
        );
    }
    s
}
