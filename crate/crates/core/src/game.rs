//! The participation game with network effects.
//!
//! Each agent `i` has a standalone value `theta_i` and attends when
//! `theta_i + beta * N - p >= 0`, where `N` is the *total* number of
//! participants the agent expects (itself included). [`NetworkCount::Others`]
//! switches to counting only the other attendees. A fulfilled-expectation
//! equilibrium is a count `n` such that, when everyone expects `n`, exactly
//! `n` agents attend: a fixed point of the demand map.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default distance below an interval's upper bound for designed prices.
pub const DEFAULT_PRICE_OFFSET: f64 = 0.01;

/// Target participation counts used by the canonical designed prices.
pub const DESIGNED_TARGETS: [usize; 6] = [0, 10, 20, 30, 40, 50];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("population must contain at least one agent")]
    EmptyPopulation,
    #[error("standalone value at index {0} is not finite")]
    NonFiniteType(usize),
    #[error("network strength must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("price must be finite and non-negative, got {0}")]
    InvalidPrice(f64),
    #[error("no fulfilled-expectation equilibrium exists at price {price}")]
    NoEquilibrium { price: f64 },
    #[error("target count {target} outside [0, {population}]")]
    TargetOutOfRange { target: usize, population: usize },
    #[error("price generation requires strictly increasing standalone values")]
    DuplicateTypes,
    #[error("price generation requires beta < 1, got {0}")]
    BetaTooLarge(f64),
    #[error("no price selects {target} participants (empty interval)")]
    EmptyInterval { target: usize },
    #[error("offset {offset} must lie in (0, {width})")]
    InvalidOffset { offset: f64, width: f64 },
    #[error("{kind} trajectory ordering violated: {reason}")]
    TrajectoryOrdering { kind: TrajectoryKind, reason: String },
    #[error("trajectory must contain at least one price")]
    EmptyTrajectory,
}

/// A binary participation choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Attend,
    NotAttend,
}

impl Action {
    pub fn attends(self) -> bool {
        matches!(self, Action::Attend)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Attend => "attend",
            Action::NotAttend => "not_attend",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A posted participation cost. Finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Price(f64);

impl Price {
    pub fn new(value: f64) -> Result<Self, GameError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Price(value))
        } else {
            Err(GameError::InvalidPrice(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Price {
    type Error = GameError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Price::new(value)
    }
}

impl From<Price> for f64 {
    fn from(p: Price) -> f64 {
        p.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

/// Which participants enter the network term of an agent's utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkCount {
    /// Every participant, the agent included.
    #[default]
    Total,
    /// Only the other participants: `N - 1` for an attendee of a group of `N`.
    Others,
}

impl NetworkCount {
    /// Network size seen by an attendee when `expected_total` attend.
    pub fn size(self, expected_total: usize) -> f64 {
        match self {
            NetworkCount::Total => expected_total as f64,
            NetworkCount::Others => expected_total.saturating_sub(1) as f64,
        }
    }
}

/// The immutable game definition: sorted standalone values and network strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    types: Vec<f64>,
    beta: f64,
    #[serde(default)]
    count: NetworkCount,
}

impl GameSpec {
    /// Builds a spec, sorting the standalone values ascending.
    pub fn new(mut types: Vec<f64>, beta: f64) -> Result<Self, GameError> {
        if types.is_empty() {
            return Err(GameError::EmptyPopulation);
        }
        if let Some(i) = types.iter().position(|t| !t.is_finite()) {
            return Err(GameError::NonFiniteType(i));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(GameError::InvalidBeta(beta));
        }
        types.sort_by(f64::total_cmp);
        Ok(GameSpec {
            types,
            beta,
            count: NetworkCount::Total,
        })
    }

    /// The integer grid `{0, 1, ..., population - 1}`.
    pub fn integer_grid(population: usize, beta: f64) -> Result<Self, GameError> {
        GameSpec::new((0..population).map(|t| t as f64).collect(), beta)
    }

    pub fn types(&self) -> &[f64] {
        &self.types
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn population(&self) -> usize {
        self.types.len()
    }

    pub fn network_count(&self) -> NetworkCount {
        self.count
    }

    pub fn with_network_count(mut self, count: NetworkCount) -> Self {
        self.count = count;
        self
    }

    /// Same types and counting convention under a different `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<Self, GameError> {
        Ok(GameSpec::new(self.types.clone(), beta)?.with_network_count(self.count))
    }

    /// Utility of attending when `expected_total` participants attend.
    pub fn utility(&self, theta: f64, expected_total: usize, price: Price) -> f64 {
        theta + self.beta * self.count.size(expected_total) - price.value()
    }

    pub fn best_response(&self, theta: f64, expected_total: usize, price: Price) -> Action {
        if self.utility(theta, expected_total, price) >= 0.0 {
            Action::Attend
        } else {
            Action::NotAttend
        }
    }

    fn strictly_sorted(&self) -> bool {
        self.types.windows(2).all(|w| w[0] < w[1])
    }

    /// Standalone value of the `rank`-th highest type (1-based).
    fn nth_highest(&self, rank: usize) -> f64 {
        self.types[self.types.len() - rank]
    }
}

/// `theta + beta * expected_total - price`.
pub fn utility(theta: f64, beta: f64, expected_total: usize, price: Price) -> f64 {
    theta + beta * expected_total as f64 - price.value()
}

/// Attend iff utility is non-negative; ties attend.
pub fn best_response(theta: f64, beta: f64, expected_total: usize, price: Price) -> Action {
    if utility(theta, beta, expected_total, price) >= 0.0 {
        Action::Attend
    } else {
        Action::NotAttend
    }
}

/// Number of agents whose best response to `expected_total` is to attend.
pub fn demand(spec: &GameSpec, price: Price, expected_total: usize) -> usize {
    // utility is monotone in theta even under rounding, so the attending
    // agents form a suffix of the sorted types.
    let first_attending = spec
        .types
        .partition_point(|&t| spec.utility(t, expected_total, price) < 0.0);
    spec.types.len() - first_attending
}

/// All self-fulfilling participation counts at a price, plus the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub price: Price,
    /// Ascending.
    pub fixed_points: Vec<usize>,
    /// The maximal fixed point.
    pub selected: usize,
}

impl EquilibriumSolution {
    /// Indices (into the sorted types) of agents attending at the selected count.
    pub fn attendees(&self, spec: &GameSpec) -> Vec<usize> {
        (0..spec.population())
            .filter(|&i| spec.best_response(spec.types[i], self.selected, self.price).attends())
            .collect()
    }
}

/// Scans every `n` in `0..=K` for `demand(n) == n` and selects the largest.
pub fn solve_fee(spec: &GameSpec, price: Price) -> Result<EquilibriumSolution, GameError> {
    let fixed_points: Vec<usize> = (0..=spec.population())
        .filter(|&n| demand(spec, price, n) == n)
        .collect();
    match fixed_points.last() {
        Some(&selected) => Ok(EquilibriumSolution {
            price,
            fixed_points,
            selected,
        }),
        None => Err(GameError::NoEquilibrium {
            price: price.value(),
        }),
    }
}

/// Half-open price interval `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl PriceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, price: f64) -> bool {
        price > self.lower && price <= self.upper
    }
}

fn check_generator_spec(spec: &GameSpec, target_n: usize) -> Result<(), GameError> {
    if target_n > spec.population() {
        return Err(GameError::TargetOutOfRange {
            target: target_n,
            population: spec.population(),
        });
    }
    if !spec.strictly_sorted() {
        return Err(GameError::DuplicateTypes);
    }
    Ok(())
}

/// Prices at which `target_n` is a fixed point of demand (not necessarily the
/// selected one). The unbounded ends are capped at width one.
pub fn fixed_point_interval(spec: &GameSpec, target_n: usize) -> Result<PriceInterval, GameError> {
    check_generator_spec(spec, target_n)?;
    let k = spec.population();
    let beta = spec.beta;
    let n = spec.count.size(target_n);
    Ok(match target_n {
        0 => {
            let lower = spec.nth_highest(1);
            PriceInterval {
                lower,
                upper: lower + 1.0,
            }
        }
        t if t == k => {
            let upper = spec.nth_highest(k) + beta * n;
            PriceInterval {
                lower: upper - 1.0,
                upper,
            }
        }
        _ => PriceInterval {
            lower: spec.nth_highest(target_n + 1) + beta * n,
            upper: spec.nth_highest(target_n) + beta * n,
        },
    })
}

/// Prices at which the benchmark (maximal fixed point) equals `target_n`.
///
/// This is the fixed-point interval with every price that also supports a
/// larger fixed point removed; on the integer grid its width is `1 - beta`
/// for interior targets.
pub fn equilibrium_price_interval(
    spec: &GameSpec,
    target_n: usize,
) -> Result<PriceInterval, GameError> {
    let fp = fixed_point_interval(spec, target_n)?;
    let k = spec.population();
    let beta = spec.beta;
    // Price above which no count larger than target_n can be self-fulfilling.
    let larger_upper = ((target_n + 1)..=k)
        .map(|m| spec.nth_highest(m) + beta * spec.count.size(m))
        .fold(f64::NEG_INFINITY, f64::max);
    let interval = PriceInterval {
        lower: fp.lower.max(larger_upper),
        upper: fp.upper,
    };
    if interval.lower >= interval.upper {
        return Err(GameError::EmptyInterval { target: target_n });
    }
    Ok(interval)
}

/// A designed price just below the top of the benchmark interval for `target_n`.
pub fn make_price(spec: &GameSpec, target_n: usize, offset: f64) -> Result<Price, GameError> {
    if spec.beta >= 1.0 {
        return Err(GameError::BetaTooLarge(spec.beta));
    }
    let interval = equilibrium_price_interval(spec, target_n)?;
    let width = interval.width();
    if !(offset > 0.0 && offset < width) {
        return Err(GameError::InvalidOffset { offset, width });
    }
    Price::new(interval.upper - offset)
}

/// The closed set of price-path shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Static,
    /// Participation rises along the path (prices fall).
    Increasing,
    /// Participation falls along the path (prices rise).
    Decreasing,
    /// Alternates extremes inward toward the middle count.
    Converging,
    /// Starts at the middle and alternates outward.
    Diverging,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 5] = [
        TrajectoryKind::Static,
        TrajectoryKind::Increasing,
        TrajectoryKind::Decreasing,
        TrajectoryKind::Converging,
        TrajectoryKind::Diverging,
    ];

    pub const DYNAMIC: [TrajectoryKind; 4] = [
        TrajectoryKind::Increasing,
        TrajectoryKind::Decreasing,
        TrajectoryKind::Converging,
        TrajectoryKind::Diverging,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::Static => "static",
            TrajectoryKind::Increasing => "increasing",
            TrajectoryKind::Decreasing => "decreasing",
            TrajectoryKind::Converging => "converging",
            TrajectoryKind::Diverging => "diverging",
        }
    }

    pub fn is_static(self) -> bool {
        self == TrajectoryKind::Static
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TrajectoryKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrajectoryKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown trajectory kind `{s}`"))
    }
}

/// An ordered list of designed prices with the benchmark count each targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSequence {
    kind: TrajectoryKind,
    prices: Vec<Price>,
    target_counts: Vec<usize>,
}

impl PriceSequence {
    /// Validates the per-kind ordering invariant. `population` is needed for
    /// the distance-from-middle checks of the non-monotone kinds.
    pub fn from_parts(
        kind: TrajectoryKind,
        prices: Vec<Price>,
        target_counts: Vec<usize>,
        population: usize,
    ) -> Result<Self, GameError> {
        if prices.is_empty() {
            return Err(GameError::EmptyTrajectory);
        }
        if prices.len() != target_counts.len() {
            return Err(GameError::TrajectoryOrdering {
                kind,
                reason: format!(
                    "{} prices but {} target counts",
                    prices.len(),
                    target_counts.len()
                ),
            });
        }
        let violation = |reason: &str| GameError::TrajectoryOrdering {
            kind,
            reason: reason.to_string(),
        };
        // Twice the distance from K/2, kept integral.
        let dist = |n: usize| (2 * n).abs_diff(population);
        let pairs = target_counts.windows(2);
        match kind {
            TrajectoryKind::Static => {}
            TrajectoryKind::Increasing => {
                if !pairs.clone().all(|w| w[0] < w[1]) {
                    return Err(violation("target counts must be strictly increasing"));
                }
            }
            TrajectoryKind::Decreasing => {
                if !pairs.clone().all(|w| w[0] > w[1]) {
                    return Err(violation("target counts must be strictly decreasing"));
                }
            }
            TrajectoryKind::Converging => {
                if !pairs.clone().all(|w| dist(w[0]) >= dist(w[1])) {
                    return Err(violation("distance from the middle must not increase"));
                }
            }
            TrajectoryKind::Diverging => {
                if !pairs.clone().all(|w| dist(w[0]) <= dist(w[1])) {
                    return Err(violation("distance from the middle must not decrease"));
                }
            }
        }
        Ok(PriceSequence {
            kind,
            prices,
            target_counts,
        })
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn prices(&self) -> &[Price] {
        &self.prices
    }

    pub fn target_counts(&self) -> &[usize] {
        &self.target_counts
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Independent games making up this sequence: one per price for
    /// `Static`, the whole sequence otherwise.
    pub fn segments(&self) -> Vec<Vec<Price>> {
        if self.kind.is_static() {
            self.prices.iter().map(|&p| vec![p]).collect()
        } else {
            vec![self.prices.clone()]
        }
    }
}

/// Orders the designed prices for `target_counts` according to `kind`.
///
/// Static and Decreasing list counts high-to-low (prices rising), Increasing
/// low-to-high. Converging alternates lowest, highest, second lowest, ...
/// and Diverging is its reverse.
pub fn build_trajectory(
    spec: &GameSpec,
    kind: TrajectoryKind,
    target_counts: &[usize],
    offset: f64,
) -> Result<PriceSequence, GameError> {
    let mut sorted = target_counts.to_vec();
    sorted.sort_unstable();
    let ordered: Vec<usize> = match kind {
        TrajectoryKind::Increasing => sorted,
        TrajectoryKind::Static | TrajectoryKind::Decreasing => sorted.into_iter().rev().collect(),
        TrajectoryKind::Converging | TrajectoryKind::Diverging => {
            let mut out = Vec::with_capacity(sorted.len());
            let (mut lo, mut hi) = (0usize, sorted.len());
            while lo < hi {
                out.push(sorted[lo]);
                lo += 1;
                if lo < hi {
                    hi -= 1;
                    out.push(sorted[hi]);
                }
            }
            if kind == TrajectoryKind::Diverging {
                out.reverse();
            }
            out
        }
    };
    let prices = ordered
        .iter()
        .map(|&n| make_price(spec, n, offset))
        .collect::<Result<Vec<_>, _>>()?;
    PriceSequence::from_parts(kind, prices, ordered, spec.population())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Price {
        Price::new(v).unwrap()
    }

    fn scholars() -> GameSpec {
        GameSpec::new((1..=6).map(f64::from).collect(), 0.5)
            .unwrap()
            .with_network_count(NetworkCount::Others)
    }

    #[test]
    fn utility_examples() {
        assert!((utility(2.0, 0.5, 4, p(4.4)) - -0.4).abs() < 1e-12);
        assert!((utility(3.0, 0.5, 4, p(4.4)) - 0.6).abs() < 1e-12);
        assert_eq!(utility(0.0, 0.0, 0, p(0.0)), 0.0);
    }

    #[test]
    fn best_response_examples() {
        assert_eq!(best_response(2.0, 0.5, 4, p(4.4)), Action::NotAttend);
        assert_eq!(best_response(3.0, 0.5, 4, p(4.4)), Action::Attend);
        assert_eq!(best_response(0.0, 0.0, 0, p(0.0)), Action::Attend);
    }

    #[test]
    fn demand_examples() {
        assert_eq!(demand(&scholars(), p(4.4), 4), 4);
        let grid = GameSpec::integer_grid(50, 0.25).unwrap();
        assert_eq!(demand(&grid, p(42.49), 10), 10);
        let free = GameSpec::integer_grid(7, 0.0).unwrap();
        assert_eq!(demand(&free, p(0.0), 0), 7);
    }

    #[test]
    fn solve_examples() {
        let sol = solve_fee(&scholars(), p(4.4)).unwrap();
        assert!(sol.fixed_points.contains(&4));
        assert_eq!(sol.selected, 4);
        let attending: Vec<f64> = sol
            .attendees(&scholars())
            .into_iter()
            .map(|i| scholars().types()[i])
            .collect();
        assert_eq!(attending, vec![3.0, 4.0, 5.0, 6.0]);

        // Counting the agent itself admits a larger equilibrium.
        let total = scholars().with_network_count(NetworkCount::Total);
        assert_eq!(solve_fee(&total, p(4.4)).unwrap().fixed_points, vec![4, 5]);
        // The deviation check: scholar 2 joining 3..6 sees four others.
        assert!((scholars().utility(2.0, 5, p(4.4)) - -0.4).abs() < 1e-12);

        let grid = GameSpec::integer_grid(50, 0.25).unwrap();
        assert_eq!(solve_fee(&grid, p(19.99)).unwrap().selected, 40);
        let sol = solve_fee(&grid, p(42.49)).unwrap();
        assert_eq!(sol.fixed_points, vec![9, 10]);
        assert_eq!(sol.selected, 10);
        // The listed 42.99 lands on 9.
        assert_eq!(solve_fee(&grid, p(42.99)).unwrap().selected, 9);
    }

    #[test]
    fn interval_examples() {
        let g25 = GameSpec::integer_grid(50, 0.25).unwrap();
        assert_eq!(equilibrium_price_interval(&g25, 50).unwrap().upper, 12.5);
        let g75 = GameSpec::integer_grid(50, 0.75).unwrap();
        assert_eq!(equilibrium_price_interval(&g75, 10).unwrap().upper, 47.5);
        let g0 = GameSpec::integer_grid(50, 0.0).unwrap();
        assert_eq!(equilibrium_price_interval(&g0, 50).unwrap().upper, 0.0);
        assert_eq!(solve_fee(&g0, p(0.0)).unwrap().selected, 50);

        let fp = fixed_point_interval(&g25, 10).unwrap();
        assert_eq!((fp.lower, fp.upper), (41.5, 42.5));
        let sel = equilibrium_price_interval(&g25, 10).unwrap();
        assert_eq!((sel.lower, sel.upper), (41.75, 42.5));

        let zero = equilibrium_price_interval(&g25, 0).unwrap();
        assert_eq!(zero.upper, 50.0);
    }

    #[test]
    fn interval_errors() {
        let g = GameSpec::integer_grid(5, 0.25).unwrap();
        assert!(matches!(
            equilibrium_price_interval(&g, 6),
            Err(GameError::TargetOutOfRange { .. })
        ));
        let dup = GameSpec::new(vec![1.0, 1.0, 2.0], 0.25).unwrap();
        assert_eq!(
            equilibrium_price_interval(&dup, 1),
            Err(GameError::DuplicateTypes)
        );
    }

    #[test]
    fn make_price_examples() {
        let g25 = GameSpec::integer_grid(50, 0.25).unwrap();
        let g75 = GameSpec::integer_grid(50, 0.75).unwrap();
        assert_eq!(make_price(&g25, 50, 0.01).unwrap().to_string(), "12.49");
        assert_eq!(make_price(&g75, 20, 0.01).unwrap().to_string(), "44.99");
        assert_eq!(make_price(&g25, 10, 0.01).unwrap().to_string(), "42.49");
        assert!(matches!(
            make_price(&g75, 20, 0.3),
            Err(GameError::InvalidOffset { .. })
        ));
        assert!(matches!(
            make_price(&g75, 20, 0.0),
            Err(GameError::InvalidOffset { .. })
        ));
        let strong = GameSpec::integer_grid(50, 1.0).unwrap();
        assert!(matches!(
            make_price(&strong, 20, 0.01),
            Err(GameError::BetaTooLarge(_))
        ));
    }

    fn fmt_prices(seq: &PriceSequence) -> Vec<String> {
        seq.prices().iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn trajectory_examples() {
        let g75 = GameSpec::integer_grid(50, 0.75).unwrap();
        let conv = build_trajectory(&g75, TrajectoryKind::Converging, &DESIGNED_TARGETS, 0.01).unwrap();
        assert_eq!(
            fmt_prices(&conv),
            ["49.99", "37.49", "47.49", "39.99", "44.99", "42.49"]
        );
        assert_eq!(conv.target_counts(), &[0, 50, 10, 40, 20, 30]);
        let div = build_trajectory(&g75, TrajectoryKind::Diverging, &DESIGNED_TARGETS, 0.01).unwrap();
        assert_eq!(
            fmt_prices(&div),
            ["42.49", "44.99", "39.99", "47.49", "37.49", "49.99"]
        );
        let dec = build_trajectory(&g75, TrajectoryKind::Decreasing, &DESIGNED_TARGETS, 0.01).unwrap();
        assert!(dec.prices().windows(2).all(|w| w[0] < w[1]));
        let inc = build_trajectory(&g75, TrajectoryKind::Increasing, &DESIGNED_TARGETS, 0.01).unwrap();
        assert!(inc.prices().windows(2).all(|w| w[0] > w[1]));
        let stat = build_trajectory(&g75, TrajectoryKind::Static, &DESIGNED_TARGETS, 0.01).unwrap();
        assert_eq!(stat.segments().len(), 6);
        assert!(stat.segments().iter().all(|s| s.len() == 1));
    }

    #[test]
    fn trajectory_rejects_bad_orderings() {
        let g = GameSpec::integer_grid(50, 0.25).unwrap();
        assert!(matches!(
            build_trajectory(&g, TrajectoryKind::Increasing, &[10, 10, 20], 0.01),
            Err(GameError::TrajectoryOrdering { .. })
        ));
        let prices = vec![p(42.49), p(49.99)];
        assert!(matches!(
            PriceSequence::from_parts(TrajectoryKind::Converging, prices, vec![10, 0], 50),
            Err(GameError::TrajectoryOrdering { .. })
        ));
        assert_eq!(
            PriceSequence::from_parts(TrajectoryKind::Static, vec![], vec![], 50),
            Err(GameError::EmptyTrajectory)
        );
    }

    #[test]
    fn price_rejects_negative_and_nan() {
        assert!(Price::new(-0.01).is_err());
        assert!(Price::new(f64::NAN).is_err());
        assert!(Price::new(f64::INFINITY).is_err());
    }
}
