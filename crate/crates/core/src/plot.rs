//! Box-plot data for expectation-versus-price figures.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::game::TrajectoryKind;
use crate::metrics::{DeviationRow, MetricsError};

/// Summary of the stated expectations at one price tick of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub beta: f64,
    pub trajectory: TrajectoryKind,
    pub window: usize,
    pub agent: String,
    pub price: f64,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Equilibrium benchmark at this price.
    pub y_fee: usize,
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(PartialEq, PartialOrd)]
struct SeriesKey<'a>(f64, TrajectoryKind, usize, &'a str, f64);

impl Eq for SeriesKey<'_> {}
impl Ord for SeriesKey<'_> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0
            .total_cmp(&o.0)
            .then(self.1.cmp(&o.1))
            .then(self.2.cmp(&o.2))
            .then(self.3.cmp(o.3))
            .then(self.4.total_cmp(&o.4))
    }
}

/// One point per (beta, trajectory, window, agent, price), ascending by price
/// within each series.
pub fn plot_points(rows: &[DeviationRow]) -> Vec<PlotPoint> {
    let mut groups: BTreeMap<SeriesKey, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        groups
            .entry(SeriesKey(r.beta, r.trajectory, r.window, &r.agent, r.price))
            .or_insert_with(|| (Vec::new(), r.y_fee))
            .0
            .push(r.y_hat as f64);
    }
    groups
        .into_iter()
        .map(|(SeriesKey(beta, trajectory, window, agent, price), (mut v, y_fee))| {
            v.sort_by(f64::total_cmp);
            PlotPoint {
                beta,
                trajectory,
                window,
                agent: agent.to_string(),
                price,
                n: v.len(),
                min: v[0],
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v[v.len() - 1],
                mean: v.iter().sum::<f64>() / v.len() as f64,
                y_fee,
            }
        })
        .collect()
}

pub fn write_plot_csv<W: Write>(out: W, points: &[PlotPoint]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
