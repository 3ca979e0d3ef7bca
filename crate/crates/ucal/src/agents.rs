//! Agent simulation: best response to forecasts, Hedge-following agents and
//! swap functions.
//!
//! Operations are stateless over immutable inputs; `hedge_agent_step` takes
//! an explicit RNG handle, one per thread.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::metrics::Transcript;
use crate::rng::CounterRng;

/// Utility table `u[a][x]` of a finite-action agent over `K` outcomes,
/// bounded in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityMatrix {
    table: Vec<f64>,
    actions: usize,
    arity: usize,
    bounded: bool,
}

#[derive(Serialize, Deserialize)]
struct UtilityMatrixJson {
    u: Vec<Vec<f64>>,
}

impl UtilityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::build(rows)?;
        for &v in &m.table {
            if v.abs() > 1.0 {
                return Err(validation(format!("utility {v} outside [-1,1]")));
            }
        }
        Ok(m)
    }

    /// Skips the `[-1, 1]` range check. Exists for fixtures whose recorded
    /// numbers use a raw, unnormalized payoff table.
    pub fn new_unbounded(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut m = Self::build(rows)?;
        m.bounded = false;
        Ok(m)
    }

    fn build(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(validation("empty action set"));
        }
        let arity = rows[0].len();
        if arity < 2 {
            return Err(validation("need at least two outcomes"));
        }
        if rows.iter().any(|r| r.len() != arity) {
            return Err(validation("ragged utility table"));
        }
        let actions = rows.len();
        let table = rows.into_iter().flatten().collect();
        Ok(UtilityMatrix { table, actions, arity, bounded: true })
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn utility(&self, action: usize, outcome: usize) -> f64 {
        self.table[action * self.arity + outcome]
    }

    pub fn max_abs(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Expected utility of `action` when outcomes follow `p`.
    pub fn expected_utility(&self, action: usize, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.arity);
        (0..self.arity).map(|x| p[x] * self.utility(action, x)).sum()
    }

    /// Divides all payoffs by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rows = (0..self.actions)
            .map(|a| (0..self.arity).map(|x| self.utility(a, x) / factor).collect())
            .collect();
        UtilityMatrix::new(rows)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.actions)
            .map(|a| (0..self.arity).map(|x| self.utility(a, x)).collect())
            .collect();
        serde_json::to_string(&UtilityMatrixJson { u: rows }).expect("utility json")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let parsed: UtilityMatrixJson =
            serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        UtilityMatrix::new(parsed.u)
    }
}

/// Action maximizing expected utility under `p`; ties resolve to the lowest
/// action index so downstream regrets are reproducible.
pub fn best_response(u: &UtilityMatrix, p: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = u.expected_utility(0, p);
    for a in 1..u.actions() {
        let value = u.expected_utility(a, p);
        if value > best_value {
            best = a;
            best_value = value;
        }
    }
    best
}

/// Binary convenience: `p` is the probability of outcome 1.
pub fn best_response_binary(u: &UtilityMatrix, p: f64) -> usize {
    best_response(u, &[1.0 - p, p])
}

/// Distribution over actions of a Hedge follower after observing `history`:
/// probability proportional to `exp(eta * sum_s u(a, x_s))`.
pub fn hedge_action_distribution(u: &UtilityMatrix, history: &[usize], eta: f64) -> Vec<f64> {
    let mut cumulative = vec![0.0; u.actions()];
    for &x in history {
        for (a, c) in cumulative.iter_mut().enumerate() {
            *c += u.utility(a, x);
        }
    }
    let max = cumulative.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(eta * c));
    let weights: Vec<f64> = cumulative.iter().map(|&c| (eta * c - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// One round of the Hedge agent: samples from the softmax over cumulative
/// utilities. With an empty history the draw is uniform.
pub fn hedge_agent_step(
    u: &UtilityMatrix,
    history: &[usize],
    eta: f64,
    rng: &mut CounterRng,
) -> usize {
    debug_assert!(eta > 0.0);
    let dist = hedge_action_distribution(u, history, eta);
    let draw = rng.next_f64();
    let mut acc = 0.0;
    for (a, w) in dist.iter().enumerate() {
        acc += w;
        if draw < acc {
            return a;
        }
    }
    dist.len() - 1
}

/// A fixed relabeling of actions, total on the action set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapFunction {
    map: Vec<usize>,
}

impl SwapFunction {
    pub fn identity(actions: usize) -> Self {
        SwapFunction { map: (0..actions).collect() }
    }

    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if map.iter().any(|&a| a >= n) {
            return Err(validation("swap target outside action set"));
        }
        Ok(SwapFunction { map })
    }

    pub fn apply(&self, action: usize) -> usize {
        self.map[action]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &a)| i == a)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

/// The swap function maximizing realized utility in hindsight: each action
/// the agent actually played is sent to the action with the best total
/// utility over the rounds it was played on. Actions never played map to
/// themselves.
pub fn best_swap(u: &UtilityMatrix, t: &Transcript) -> Result<SwapFunction> {
    if u.arity() != t.arity() {
        return Err(Error::ArityMismatch { expected: u.arity(), got: t.arity() });
    }
    if t.is_empty() {
        return Err(validation("empty transcript"));
    }
    // outcome_counts[a][x]: rounds where the agent played a and x occurred.
    let mut outcome_counts = vec![0usize; u.actions() * u.arity()];
    for round in 0..t.len() {
        let a = best_response(u, t.prediction(round));
        outcome_counts[a * u.arity() + t.outcome(round)] += 1;
    }
    let mut map = Vec::with_capacity(u.actions());
    for a in 0..u.actions() {
        let counts = &outcome_counts[a * u.arity()..(a + 1) * u.arity()];
        if counts.iter().all(|&c| c == 0) {
            map.push(a);
            continue;
        }
        let mut best = 0;
        let mut best_total = f64::NEG_INFINITY;
        for target in 0..u.actions() {
            let total: f64 = counts
                .iter()
                .enumerate()
                .map(|(x, &c)| c as f64 * u.utility(target, x))
                .sum();
            if total > best_total {
                best = target;
                best_total = total;
            }
        }
        map.push(best);
    }
    Ok(SwapFunction { map })
}

/// The 9-to-1 wager agent: bet on outcome 0 (win 0.1 / lose 0.9) or outcome 1
/// (win 0.9 / lose 0.1), i.e. `u(a, x) = (-1)^a (0.1 - x)`.
pub fn wager_agent() -> UtilityMatrix {
    UtilityMatrix::new(vec![vec![0.1, -0.9], vec![-0.1, 0.9]]).expect("wager agent")
}

/// Two-action threshold agent `u_v(a, x) = (-1)^a (v - x)` whose best
/// response switches at `p = v`; its induced scoring rule is the V-shape at
/// `v`.
pub fn threshold_agent(v: f64) -> Result<UtilityMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(validation(format!("threshold {v} outside [0,1]")));
    }
    UtilityMatrix::new(vec![vec![v, v - 1.0], vec![-v, 1.0 - v]])
}

/// The squared-loss agent for a fixed transcript: actions are probability
/// reports with `u(a, x) = -(a - x)^2`, materialized over the finite set of
/// values appearing as a prediction or as an empirical group frequency.
/// Returns the utility table together with the action values (sorted,
/// deduplicated bit-exactly).
pub fn squared_loss_agent(t: &Transcript) -> Result<(UtilityMatrix, Vec<f64>)> {
    if !t.is_binary() {
        return Err(Error::ArityMismatch { expected: 2, got: t.arity() });
    }
    let mut values: Vec<f64> = Vec::new();
    for group in t.grouped().values() {
        let p = t.binary_pred(group.first_index);
        values.push(p);
        values.push(group.outcome_counts[1] as f64 / group.count as f64);
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| a.to_bits() == b.to_bits());
    let rows = values
        .iter()
        .map(|&a| vec![-(a * a), -(a - 1.0) * (a - 1.0)])
        .collect();
    Ok((UtilityMatrix::new(rows)?, values))
}
