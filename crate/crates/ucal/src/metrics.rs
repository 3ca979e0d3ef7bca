//! Transcript-evaluation functionals: scoring-rule regret, calibration
//! errors, V-regret / V-calibration, agent (swap) regret and the
//! weak-calibration witness functional.
//!
//! All metrics are exact summations in double precision with Neumaier
//! compensation, so transcripts of length 1e5+ keep absolute errors at the
//! rounding floor. Metric functions are pure; transcripts are immutable after
//! construction and safe to share across threads.

use std::collections::BTreeMap;

use crate::agents::{self, UtilityMatrix};
use crate::error::{validation, Error, Result};
use crate::scoring::BivariateRule;

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Paired sequences of predictions and realized outcomes.
///
/// Predictions are points of the `K`-simplex stored row-major; a binary
/// transcript stores rows `[1 - p, p]` where `p` is the predicted probability
/// of outcome 1, and `binary_pred` returns `p` bit-exactly as supplied.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    arity: usize,
    outcomes: Vec<usize>,
    predictions: Vec<f64>,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl Transcript {
    /// Binary transcript from scalar probabilities of outcome 1.
    pub fn binary(predictions: Vec<f64>, outcomes: Vec<u8>) -> Result<Self> {
        if predictions.len() != outcomes.len() {
            return Err(validation(format!(
                "length mismatch: {} predictions vs {} outcomes",
                predictions.len(),
                outcomes.len()
            )));
        }
        if predictions.is_empty() {
            return Err(validation("empty transcript"));
        }
        let mut rows = Vec::with_capacity(2 * predictions.len());
        for (t, &p) in predictions.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(validation(format!("prediction {p} at round {t} outside [0,1]")));
            }
            rows.push(1.0 - p);
            rows.push(p);
        }
        let outcomes: Vec<usize> = outcomes
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                if x > 1 {
                    Err(validation(format!("binary outcome {x} at round {t}")))
                } else {
                    Ok(x as usize)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Transcript { arity: 2, outcomes, predictions: rows })
    }

    /// Multiclass transcript; `predictions` is row-major `T x K`.
    pub fn multiclass(arity: usize, predictions: Vec<f64>, outcomes: Vec<usize>) -> Result<Self> {
        if arity < 2 {
            return Err(validation(format!("arity {arity} < 2")));
        }
        if outcomes.is_empty() {
            return Err(validation("empty transcript"));
        }
        if predictions.len() != arity * outcomes.len() {
            return Err(validation(format!(
                "expected {} prediction entries, got {}",
                arity * outcomes.len(),
                predictions.len()
            )));
        }
        for (t, row) in predictions.chunks(arity).enumerate() {
            let mut sum = 0.0;
            for &c in row {
                if c < 0.0 {
                    return Err(validation(format!("negative coordinate {c} at round {t}")));
                }
                sum += c;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(validation(format!("prediction at round {t} sums to {sum}")));
            }
        }
        for (t, &x) in outcomes.iter().enumerate() {
            if x >= arity {
                return Err(validation(format!("outcome {x} at round {t} >= arity {arity}")));
            }
        }
        Ok(Transcript { arity, outcomes, predictions })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_binary(&self) -> bool {
        self.arity == 2
    }

    pub fn outcome(&self, t: usize) -> usize {
        self.outcomes[t]
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn prediction(&self, t: usize) -> &[f64] {
        &self.predictions[t * self.arity..(t + 1) * self.arity]
    }

    /// Predicted probability of outcome 1 (binary transcripts).
    pub fn binary_pred(&self, t: usize) -> f64 {
        debug_assert!(self.is_binary());
        self.predictions[t * 2 + 1]
    }

    fn require_binary(&self) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::ArityMismatch { expected: 2, got: self.arity })
        }
    }

    /// Empirical outcome distribution (the base-rate prediction).
    pub fn base_rate(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.arity];
        for &x in &self.outcomes {
            counts[x] += 1;
        }
        let t = self.len() as f64;
        counts.into_iter().map(|c| c as f64 / t).collect()
    }

    /// Base rate of outcome 1 (binary transcripts).
    pub fn binary_base_rate(&self) -> f64 {
        debug_assert!(self.is_binary());
        self.outcomes.iter().filter(|&&x| x == 1).count() as f64 / self.len() as f64
    }

    /// One-vs-rest binary reduction for outcome `i`: predictions become the
    /// `i`-th coordinate, outcomes become the indicator of `x_t = i`.
    pub fn per_outcome_binary(&self, i: usize) -> Result<Transcript> {
        if i >= self.arity {
            return Err(validation(format!("outcome {i} >= arity {}", self.arity)));
        }
        let preds: Vec<f64> = (0..self.len()).map(|t| self.prediction(t)[i]).collect();
        let outs: Vec<u8> = self.outcomes.iter().map(|&x| (x == i) as u8).collect();
        Transcript::binary(preds, outs)
    }

    /// Groups rounds by bit-exact prediction value, in ascending prediction
    /// order (deterministic).
    pub(crate) fn grouped(&self) -> BTreeMap<Vec<u64>, PredGroup> {
        let mut map: BTreeMap<Vec<u64>, PredGroup> = BTreeMap::new();
        for t in 0..self.len() {
            let key: Vec<u64> = self.prediction(t).iter().map(|c| c.to_bits()).collect();
            let entry = map.entry(key).or_insert_with(|| PredGroup {
                first_index: t,
                count: 0,
                outcome_counts: vec![0; self.arity],
            });
            entry.count += 1;
            entry.outcome_counts[self.outcomes[t]] += 1;
        }
        map
    }
}

pub(crate) struct PredGroup {
    pub first_index: usize,
    pub count: usize,
    pub outcome_counts: Vec<usize>,
}

/// Scoring-rule regret against the base-rate forecaster:
/// `sum_t l(p_t, x_t) - sum_t l(beta, x_t)`.
pub fn reg(rule: &BivariateRule, t: &Transcript) -> Result<f64> {
    if rule.arity() != t.arity() {
        return Err(Error::ArityMismatch { expected: rule.arity(), got: t.arity() });
    }
    let beta = t.base_rate();
    let mut on_preds = KahanSum::default();
    let mut on_base = KahanSum::default();
    for round in 0..t.len() {
        let x = t.outcome(round);
        on_preds.add(rule.score(t.prediction(round), x));
        on_base.add(rule.score(&beta, x));
    }
    Ok(on_preds.value() - on_base.value())
}

/// L1 calibration error of a binary transcript: `sum_p |p n_p - m_p|`,
/// grouped by bit-exact prediction value.
pub fn cal_l1(t: &Transcript) -> Result<f64> {
    t.require_binary()?;
    let mut total = KahanSum::default();
    for group in t.grouped().values() {
        let p = t.binary_pred(group.first_index);
        total.add((p * group.count as f64 - group.outcome_counts[1] as f64).abs());
    }
    Ok(total.value())
}

/// `cal_l1` with predictions rounded to `decimals` places before grouping.
/// Off by default everywhere; intended for noisy externally-produced
/// transcripts.
pub fn cal_l1_quantized(t: &Transcript, decimals: u32) -> Result<f64> {
    t.require_binary()?;
    let scale = 10f64.powi(decimals as i32);
    let preds: Vec<f64> = (0..t.len()).map(|r| (t.binary_pred(r) * scale).round() / scale).collect();
    let outs: Vec<u8> = t.outcomes().iter().map(|&x| x as u8).collect();
    cal_l1(&Transcript::binary(preds, outs)?)
}

/// Multiclass L1 calibration error: `sum_p || sum_{t: p_t = p} (p - x_t) ||_1`.
/// For a binary transcript this equals exactly twice `cal_l1`.
pub fn cal_l1_multiclass(t: &Transcript) -> f64 {
    let mut total = KahanSum::default();
    for group in t.grouped().values() {
        let p = t.prediction(group.first_index);
        for i in 0..t.arity() {
            total.add((p[i] * group.count as f64 - group.outcome_counts[i] as f64).abs());
        }
    }
    total.value()
}

/// L2 calibration error of a binary transcript: `sum_p n_p (p - m_p/n_p)^2`.
pub fn cal_l2(t: &Transcript) -> Result<f64> {
    t.require_binary()?;
    let mut total = KahanSum::default();
    for group in t.grouped().values() {
        let p = t.binary_pred(group.first_index);
        let n = group.count as f64;
        let gap = p - group.outcome_counts[1] as f64 / n;
        total.add(n * gap * gap);
    }
    Ok(total.value())
}

/// Agent regret: counterfactual utility of best-responding to the base rate
/// minus realized utility of best-responding to the predictions.
pub fn agent_reg(u: &UtilityMatrix, t: &Transcript) -> Result<f64> {
    if u.arity() != t.arity() {
        return Err(Error::ArityMismatch { expected: u.arity(), got: t.arity() });
    }
    let a_beta = agents::best_response(u, &t.base_rate());
    let mut base = KahanSum::default();
    let mut followed = KahanSum::default();
    for round in 0..t.len() {
        let x = t.outcome(round);
        let a = agents::best_response(u, t.prediction(round));
        base.add(u.utility(a_beta, x));
        followed.add(u.utility(a, x));
    }
    Ok(base.value() - followed.value())
}

/// Agent swap regret: utility gain of the best post-hoc action relabeling
/// over the realized best-response play.
pub fn agent_swap_reg(u: &UtilityMatrix, t: &Transcript) -> Result<f64> {
    if u.arity() != t.arity() {
        return Err(Error::ArityMismatch { expected: u.arity(), got: t.arity() });
    }
    let swap = agents::best_swap(u, t)?;
    let mut swapped = KahanSum::default();
    let mut followed = KahanSum::default();
    for round in 0..t.len() {
        let x = t.outcome(round);
        let a = agents::best_response(u, t.prediction(round));
        swapped.add(u.utility(swap.apply(a), x));
        followed.add(u.utility(a, x));
    }
    Ok(swapped.value() - followed.value())
}

/// Preprocessed per-outcome prediction distributions for `O(log T)` V-regret
/// queries on a fixed binary transcript.
pub struct VregEvaluator {
    t_len: f64,
    beta: f64,
    /// Sorted predictions on rounds with outcome 0 / outcome 1.
    p0: Vec<f64>,
    p1: Vec<f64>,
}

/// Which side the supremum of V-regret is approached from at the witness
/// point (V-regret is piecewise linear in `v` with jumps at predicted
/// values, so the supremum is a one-sided limit).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproachSide {
    FromAbove,
    FromBelow,
}

#[derive(Clone, Copy, Debug)]
pub struct VcalWitness {
    pub v: f64,
    pub side: ApproachSide,
}

fn count_lt(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&x| x < v)
}

fn count_gt(sorted: &[f64], v: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x <= v)
}

impl VregEvaluator {
    pub fn new(t: &Transcript) -> Result<Self> {
        t.require_binary()?;
        let mut p0 = Vec::new();
        let mut p1 = Vec::new();
        for round in 0..t.len() {
            match t.outcome(round) {
                0 => p0.push(t.binary_pred(round)),
                _ => p1.push(t.binary_pred(round)),
            }
        }
        p0.sort_by(f64::total_cmp);
        p1.sort_by(f64::total_cmp);
        Ok(VregEvaluator { t_len: t.len() as f64, beta: t.binary_base_rate(), p0, p1 })
    }

    fn fraction_lt(p: &[f64], v: f64) -> f64 {
        if p.is_empty() {
            0.0
        } else {
            count_lt(p, v) as f64 / p.len() as f64
        }
    }

    fn fraction_gt(p: &[f64], v: f64) -> f64 {
        if p.is_empty() {
            0.0
        } else {
            count_gt(p, v) as f64 / p.len() as f64
        }
    }

    /// Regret of the V-shaped rule centered at `v`, from the closed-form
    /// empirical-CDF expression. Valid whenever `v` is not a predicted value;
    /// at `v = beta` (no prediction mass there) both branches agree.
    pub fn eval(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(validation(format!("v = {v} outside [0,1]")));
        }
        let beta = self.beta;
        let value = if v <= beta {
            2.0 * beta * (1.0 - v) * Self::fraction_lt(&self.p1, v)
                - 2.0 * (1.0 - beta) * v * Self::fraction_lt(&self.p0, v)
        } else {
            2.0 * (1.0 - beta) * v * Self::fraction_gt(&self.p0, v)
                - 2.0 * beta * (1.0 - v) * Self::fraction_gt(&self.p1, v)
        };
        Ok(self.t_len * value)
    }

    /// Exact supremum of V-regret over `v` in `[0,1]`.
    ///
    /// Splits `[0,1]` at the distinct predicted values and at the base rate;
    /// on each open interval V-regret is linear in `v`, so it suffices to
    /// take one-sided limits at every interval endpoint, evaluated with the
    /// interval-interior CDF values. With prediction mass exactly at the base
    /// rate the two one-sided limits at `beta` may differ and both are taken.
    pub fn sup(&self) -> (f64, VcalWitness) {
        let mut splits: Vec<f64> = Vec::with_capacity(self.p0.len() + self.p1.len() + 3);
        splits.extend_from_slice(&self.p0);
        splits.extend_from_slice(&self.p1);
        splits.push(0.0);
        splits.push(1.0);
        splits.push(self.beta);
        splits.sort_by(f64::total_cmp);
        splits.dedup();

        let mut best = f64::NEG_INFINITY;
        let mut witness = VcalWitness { v: 0.0, side: ApproachSide::FromAbove };
        for pair in splits.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if !(a < b) {
                continue;
            }
            // Interval-interior CDF constants: for v in (a, b),
            // Pr[p < v] = Pr[p <= a] and Pr[p > v] = Pr[p >= b].
            let c1_lt = frac(count_le(&self.p1, a), self.p1.len());
            let c0_lt = frac(count_le(&self.p0, a), self.p0.len());
            let c0_gt = frac(count_ge(&self.p0, b), self.p0.len());
            let c1_gt = frac(count_ge(&self.p1, b), self.p1.len());
            let line = |v: f64| -> f64 {
                let value = if b <= self.beta {
                    2.0 * self.beta * (1.0 - v) * c1_lt - 2.0 * (1.0 - self.beta) * v * c0_lt
                } else {
                    2.0 * (1.0 - self.beta) * v * c0_gt - 2.0 * self.beta * (1.0 - v) * c1_gt
                };
                self.t_len * value
            };
            let at_a = line(a);
            if at_a > best {
                best = at_a;
                witness = VcalWitness { v: a, side: ApproachSide::FromAbove };
            }
            let at_b = line(b);
            if at_b > best {
                best = at_b;
                witness = VcalWitness { v: b, side: ApproachSide::FromBelow };
            }
        }
        (best, witness)
    }
}

fn frac(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn count_le(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&x| x <= v)
}

fn count_ge(sorted: &[f64], v: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x < v)
}

/// One-shot V-regret query; see [`VregEvaluator`] for repeated queries.
pub fn vreg(v: f64, t: &Transcript) -> Result<f64> {
    VregEvaluator::new(t)?.eval(v)
}

/// V-calibration error: the exact supremum of V-regret over `v` in `[0,1]`,
/// with a witness center and approach side.
pub fn vcal(t: &Transcript) -> Result<(f64, VcalWitness)> {
    Ok(VregEvaluator::new(t)?.sup())
}

/// Weak-calibration witness functional `(1/T) sum_t w(p_t) (x_t - p_t)`.
pub fn weak_cal_witness(t: &Transcript, w: impl Fn(f64) -> f64) -> Result<f64> {
    t.require_binary()?;
    let mut total = KahanSum::default();
    for round in 0..t.len() {
        let p = t.binary_pred(round);
        total.add(w(p) * (t.outcome(round) as f64 - p));
    }
    Ok(total.value() / t.len() as f64)
}

/// The spike test function `w(p) = max(0.1 - |0.75 - p|, 0)`: a witness that
/// separates transcripts concentrating mass near `p = 0.75` on one outcome.
pub fn spike_witness(p: f64) -> f64 {
    (0.1 - (0.75 - p).abs()).max(0.0)
}

/// Named metric values for one transcript, with run metadata. Serializes to
/// JSON and to one-row CSV with a stable (insertion) column order.
#[derive(Clone, Debug)]
pub struct RegretReport {
    pub t_len: usize,
    pub arity: usize,
    pub seed: Option<u64>,
    pub forecaster: Option<String>,
    entries: Vec<(String, f64)>,
}

impl RegretReport {
    pub fn new(t: &Transcript) -> Self {
        RegretReport {
            t_len: t.len(),
            arity: t.arity(),
            seed: None,
            forecaster: None,
            entries: Vec::new(),
        }
    }

    pub fn with_run_info(mut self, seed: u64, forecaster: impl Into<String>) -> Self {
        self.seed = Some(seed);
        self.forecaster = Some(forecaster.into());
        self
    }

    /// Records a metric; each name may appear exactly once.
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        assert!(
            self.entries.iter().all(|(n, _)| n != &name),
            "duplicate metric {name}"
        );
        self.entries.push((name, value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{");
        out.push_str(&format!("\"T\":{},\"K\":{}", self.t_len, self.arity));
        match self.seed {
            Some(s) => out.push_str(&format!(",\"seed\":{s}")),
            None => out.push_str(",\"seed\":null"),
        }
        match &self.forecaster {
            Some(f) => out.push_str(&format!(",\"forecaster\":\"{}\"", escape_json(f))),
            None => out.push_str(",\"forecaster\":null"),
        }
        out.push_str(",\"metrics\":{");
        for (i, (name, value)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("\"{}\":{}", escape_json(name), json_number(*value)));
        }
        out.push_str("}}");
        out
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["T".to_string(), "K".to_string(), "seed".to_string(), "forecaster".to_string()];
        cols.extend(self.entries.iter().map(|(n, _)| n.clone()));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.t_len.to_string(),
            self.arity.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.forecaster.clone().unwrap_or_default(),
        ];
        cols.extend(self.entries.iter().map(|(_, v)| crate::io::fmt_f64(*v)));
        cols.join(",")
    }
}

fn escape_json(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '"' => "\\\"".chars().collect::<Vec<_>>(),
            '\\' => "\\\\".chars().collect(),
            c if (c as u32) < 0x20 => format!("\\u{:04x}", c as u32).chars().collect(),
            c => vec![c],
        })
        .collect()
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "null".to_string()
    }
}
