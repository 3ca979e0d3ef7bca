//! Deterministic generators for the worked examples and counterexamples the
//! metrics are validated against.
//!
//! Every generator is a pure function of its parameters: regenerating a
//! fixture with the same name and horizon is byte-identical. Recorded
//! metric values are realized by exact counts, never by sampling. Each named
//! fixture carries a machine-checkable list of expected-metric checks which
//! the `example` CLI subcommand recomputes and verifies.

use serde::{Deserialize, Serialize};

use crate::agents::{wager_agent, UtilityMatrix};
use crate::error::{validation, Error, Result};
use crate::metrics::{self, Transcript};
use crate::scoring::{PLScoringRule, RuleSpec};

/// Variant of the low-Brier / high-agent-regret construction: the fraction
/// of rounds per half on which the extreme prediction is wrong.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowBrierVariant {
    /// 20% wrong: negative Brier regret yet linear regret for the 9-to-1
    /// wager agent.
    Miss20,
    /// 25% wrong: the mixture whose V-regret profile is `1/4 - v` left of
    /// the base rate.
    Miss25,
}

/// Half ones then half zeros, extreme predictions wrong on a fixed fraction
/// of each half, paired with the 9-to-1 wager agent.
pub fn gen_low_brier(t_len: usize, variant: LowBrierVariant) -> Result<(Transcript, UtilityMatrix)> {
    let (den, divisor) = match variant {
        LowBrierVariant::Miss20 => (5usize, 20usize),
        LowBrierVariant::Miss25 => (4, 8),
    };
    if t_len == 0 || t_len % divisor != 0 {
        return Err(validation(format!(
            "horizon {t_len} must be a positive multiple of {divisor}"
        )));
    }
    let half = t_len / 2;
    let misses = half / den;
    let mut preds = Vec::with_capacity(t_len);
    let mut outs = Vec::with_capacity(t_len);
    for i in 0..half {
        outs.push(1u8);
        preds.push(if i < half - misses { 1.0 } else { 0.0 });
    }
    for i in 0..half {
        outs.push(0u8);
        preds.push(if i < half - misses { 0.0 } else { 1.0 });
    }
    Ok((Transcript::binary(preds, outs)?, wager_agent()))
}

/// The worked binary examples sharing the half-ones outcome sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkedExample {
    /// Extreme predictions wrong a quarter of the time: linear
    /// V-calibration error despite a Brier score matching the base rate.
    MiscalibratedExtremes,
    /// `p_t = x_t`: perfectly calibrated, zero V-calibration error.
    PerfectPredictions,
    /// The running historical average: linear calibration error yet
    /// vanishing V-calibration error.
    RunningAverage,
}

impl WorkedExample {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "miscalibrated_extremes" => Ok(WorkedExample::MiscalibratedExtremes),
            "perfect_predictions" => Ok(WorkedExample::PerfectPredictions),
            "running_average" => Ok(WorkedExample::RunningAverage),
            _ => Err(validation(format!("unknown worked example {name}"))),
        }
    }
}

/// Generates a worked example on the half-ones outcome sequence.
pub fn gen_worked_example(which: WorkedExample, t_len: usize) -> Result<Transcript> {
    let divisor = match which {
        WorkedExample::MiscalibratedExtremes => 8,
        _ => 2,
    };
    if t_len == 0 || t_len % divisor != 0 {
        return Err(validation(format!(
            "horizon {t_len} must be a positive multiple of {divisor}"
        )));
    }
    let half = t_len / 2;
    let outs: Vec<u8> = (0..t_len).map(|t| (t < half) as u8).collect();
    let preds: Vec<f64> = match which {
        WorkedExample::MiscalibratedExtremes => {
            let misses = half / 4;
            (0..t_len)
                .map(|t| {
                    if t < half {
                        if t < half - misses {
                            1.0
                        } else {
                            0.0
                        }
                    } else if t < t_len - misses {
                        0.0
                    } else {
                        1.0
                    }
                })
                .collect()
        }
        WorkedExample::PerfectPredictions => outs.iter().map(|&x| x as f64).collect(),
        WorkedExample::RunningAverage => (1..=t_len)
            .map(|t| if t <= half { 1.0 } else { half as f64 / t as f64 })
            .collect(),
    };
    Transcript::binary(preds, outs)
}

/// Balanced outcomes predicted at 1/2, each prediction nudged toward its
/// outcome by a distinct perturbation below 1e-3: linear calibration error
/// while no bounded rule regrets the nudge.
pub fn gen_perturbed_calibrated(t_len: usize, perturbed: bool) -> Result<Transcript> {
    if t_len == 0 || t_len % 2 != 0 {
        return Err(validation(format!("horizon {t_len} must be positive and even")));
    }
    let mut preds = Vec::with_capacity(t_len);
    let mut outs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let x = (t % 2) as u8;
        outs.push(x);
        if perturbed {
            let z = 0.001 * (t + 1) as f64 / (t_len + 1) as f64;
            preds.push(if x == 1 { 0.5 + z } else { 0.5 - z });
        } else {
            preds.push(0.5);
        }
    }
    Transcript::binary(preds, outs)
}

/// Output of [`gen_sr_counterexample`].
#[derive(Clone, Debug)]
pub struct SrCounterexample {
    pub transcript: Transcript,
    /// The clipped rule whose benchmark improves by `epsilon` at 1/2.
    pub modified_rule: PLScoringRule,
    /// Exact miss fraction solving the regret-matching equation.
    pub miss_fraction: f64,
    /// Misses realized per half (the fraction rounded to whole rounds).
    pub misses_per_half: usize,
    /// Regret of the input rule on the transcript, from the construction.
    pub expected_base_regret: f64,
    /// Regret of the modified rule on the transcript, from the construction.
    pub expected_modified_regret: f64,
    /// Set when `epsilon` exceeds the concavity gap at 1/2, in which case
    /// clipping does not reach 1/2 and the modified regret is not positive.
    pub warning_epsilon_too_large: bool,
}

/// Builds the balanced extreme-prediction transcript whose regret under
/// `rule` vanishes, together with a clipped rule under which the same
/// transcript has linear regret.
///
/// The miss fraction `f` solves
/// `(l(0)+l(1))/2 + f (l'(0)-l'(1))/2 = l(1/2)`; a linear input rule leaves
/// `f` undefined and is rejected.
pub fn gen_sr_counterexample(
    rule: &PLScoringRule,
    epsilon: f64,
    t_len: usize,
) -> Result<SrCounterexample> {
    if t_len == 0 || t_len % 2 != 0 {
        return Err(validation(format!("horizon {t_len} must be positive and even")));
    }
    if epsilon <= 0.0 {
        return Err(validation("epsilon must be positive"));
    }
    let l0 = rule.univariate(0.0);
    let l1 = rule.univariate(1.0);
    let lhalf = rule.univariate(0.5);
    let d0 = rule.right_slope(0.0);
    let d1 = rule.left_slope(1.0);
    let spread = d0 - d1;
    if spread <= 1e-12 {
        return Err(validation(
            "rule is linear: every transcript has zero regret under it",
        ));
    }
    let miss_fraction = (2.0 * lhalf - l0 - l1) / spread;
    let half = t_len / 2;
    let misses = (miss_fraction * half as f64).round() as usize;

    let mut preds = Vec::with_capacity(t_len);
    let mut outs = Vec::with_capacity(t_len);
    for i in 0..half {
        outs.push(1u8);
        preds.push(if i < misses { 0.0 } else { 1.0 });
    }
    for i in 0..half {
        outs.push(0u8);
        preds.push(if i < misses { 1.0 } else { 0.0 });
    }
    let transcript = Transcript::binary(preds, outs)?;

    let modified_rule = rule.min_with_line(l0 + epsilon, l1 - l0)?;
    let gap = lhalf - 0.5 * (l0 + l1);
    let score = half as f64 * (l0 + l1) + misses as f64 * spread;
    let expected_base_regret = score - t_len as f64 * lhalf;
    let clipped_benchmark = lhalf.min(0.5 * (l0 + l1) + epsilon);
    let expected_modified_regret = score - t_len as f64 * clipped_benchmark;
    Ok(SrCounterexample {
        transcript,
        modified_rule,
        miss_fraction,
        misses_per_half: misses,
        expected_base_regret,
        expected_modified_regret,
        warning_epsilon_too_large: epsilon >= gap,
    })
}

/// Output of [`gen_multiclass_epochs`].
#[derive(Clone, Debug)]
pub struct MulticlassEpochFixture {
    pub transcript: Transcript,
    /// The reference two-action payoff table; exceeds `[-1, 1]`, carried for
    /// the fixture's exact regret value.
    pub raw_utility: UtilityMatrix,
    /// The same table divided by 6, a bounded agent.
    pub normalized_utility: UtilityMatrix,
}

/// Nine equal epochs over three outcomes, perfectly calibrated for each
/// outcome separately yet carrying linear regret for a two-action agent.
pub fn gen_multiclass_epochs(t_len: usize) -> Result<MulticlassEpochFixture> {
    if t_len == 0 || t_len % 9 != 0 {
        return Err(validation(format!("horizon {t_len} must be a positive multiple of 9")));
    }
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    let epochs: [(usize, [f64; 3]); 9] = [
        (0, [two_thirds, 0.0, third]),
        (0, [two_thirds, 0.0, third]),
        (0, [third, 0.0, two_thirds]),
        (1, [third, two_thirds, 0.0]),
        (1, [third, two_thirds, 0.0]),
        (1, [two_thirds, third, 0.0]),
        (2, [0.0, third, two_thirds]),
        (2, [0.0, third, two_thirds]),
        (2, [0.0, two_thirds, third]),
    ];
    let per_epoch = t_len / 9;
    let mut preds = Vec::with_capacity(t_len * 3);
    let mut outs = Vec::with_capacity(t_len);
    for (x, p) in epochs {
        for _ in 0..per_epoch {
            outs.push(x);
            preds.extend_from_slice(&p);
        }
    }
    let transcript = Transcript::multiclass(3, preds, outs)?;
    let raw_utility =
        UtilityMatrix::new_unbounded(vec![vec![3.0, 6.0, 5.0], vec![5.0, 3.0, 0.0]])?;
    let normalized_utility = raw_utility.scaled(6.0)?;
    Ok(MulticlassEpochFixture { transcript, raw_utility, normalized_utility })
}

/// Comparison kind of an expected-metric check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Eq,
    Ge,
    Le,
    MagnitudeGe,
}

/// One recomputable expectation recorded in a fixture's side file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpectedCheck {
    pub metric: String,
    pub kind: CheckKind,
    pub value: f64,
    pub tolerance: f64,
}

impl ExpectedCheck {
    fn new(metric: &str, kind: CheckKind, value: f64, tolerance: f64) -> Self {
        ExpectedCheck { metric: metric.to_string(), kind, value, tolerance }
    }

    pub fn passes(&self, actual: f64) -> bool {
        match self.kind {
            CheckKind::Eq => (actual - self.value).abs() <= self.tolerance,
            CheckKind::Ge => actual >= self.value - self.tolerance,
            CheckKind::Le => actual <= self.value + self.tolerance,
            CheckKind::MagnitudeGe => actual.abs() >= self.value - self.tolerance,
        }
    }
}

/// A generated fixture with its expected-metric checks.
#[derive(Clone, Debug)]
pub struct NamedFixture {
    pub name: String,
    pub t_len: usize,
    pub transcript: Transcript,
    /// Named agents referenced by `agent_reg_<name>` checks.
    pub agents: Vec<(String, UtilityMatrix)>,
    /// Named rules referenced by `reg_<name>` checks.
    pub rules: Vec<(String, RuleSpec)>,
    pub checks: Vec<ExpectedCheck>,
}

pub fn fixture_names() -> &'static [&'static str] {
    &[
        "low_brier",
        "low_brier_quarter",
        "perturbed_calibrated",
        "constant_half",
        "miscalibrated_extremes",
        "perfect_predictions",
        "running_average",
        "multiclass_epochs",
        "sr_counterexample_brier",
    ]
}

/// Generates the named fixture at horizon `t_len` together with its
/// expectations.
pub fn generate(name: &str, t_len: usize) -> Result<NamedFixture> {
    let tf = t_len as f64;
    match name {
        "low_brier" => {
            let (transcript, agent) = gen_low_brier(t_len, LowBrierVariant::Miss20)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![("wager".into(), agent)],
                rules: vec![("brier".into(), RuleSpec::Brier)],
                checks: vec![
                    ExpectedCheck::new("reg_brier", CheckKind::Eq, -0.05 * tf, 1e-9),
                    ExpectedCheck::new("agent_reg_wager", CheckKind::Eq, 0.1 * tf, 1e-9),
                    ExpectedCheck::new("cal", CheckKind::Eq, 0.2 * tf, 1e-9),
                    ExpectedCheck::new("vcal", CheckKind::Eq, 0.2 * tf, 1e-9),
                ],
            })
        }
        "low_brier_quarter" => {
            let (transcript, agent) = gen_low_brier(t_len, LowBrierVariant::Miss25)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![("wager".into(), agent)],
                rules: vec![("brier".into(), RuleSpec::Brier)],
                checks: vec![
                    ExpectedCheck::new("vcal", CheckKind::Eq, 0.25 * tf, 1e-9),
                    ExpectedCheck::new("reg_brier", CheckKind::Eq, 0.0, 1e-9),
                    ExpectedCheck::new("agent_reg_wager", CheckKind::Eq, 0.15 * tf, 1e-9),
                ],
            })
        }
        "perturbed_calibrated" => {
            let transcript = gen_perturbed_calibrated(t_len, true)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![],
                rules: vec![("brier".into(), RuleSpec::Brier)],
                checks: vec![
                    ExpectedCheck::new("cal", CheckKind::Ge, 0.499 * tf, 0.0),
                    ExpectedCheck::new("reg_brier", CheckKind::Le, 0.0, 1e-12),
                    ExpectedCheck::new("vcal", CheckKind::Le, 0.0, 1e-9),
                ],
            })
        }
        "constant_half" => {
            let transcript = gen_perturbed_calibrated(t_len, false)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![],
                rules: vec![],
                checks: vec![ExpectedCheck::new("cal", CheckKind::Eq, 0.0, 1e-12)],
            })
        }
        "miscalibrated_extremes" => {
            let transcript = gen_worked_example(WorkedExample::MiscalibratedExtremes, t_len)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![],
                rules: vec![("brier".into(), RuleSpec::Brier)],
                checks: vec![
                    ExpectedCheck::new("vcal", CheckKind::Eq, 0.25 * tf, 1e-9),
                    ExpectedCheck::new("cal", CheckKind::Eq, 0.25 * tf, 1e-9),
                    ExpectedCheck::new("reg_brier", CheckKind::Eq, 0.0, 1e-9),
                ],
            })
        }
        "perfect_predictions" => {
            let transcript = gen_worked_example(WorkedExample::PerfectPredictions, t_len)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![],
                rules: vec![],
                checks: vec![
                    ExpectedCheck::new("vcal", CheckKind::Eq, 0.0, 1e-12),
                    ExpectedCheck::new("cal", CheckKind::Eq, 0.0, 1e-12),
                ],
            })
        }
        "running_average" => {
            let transcript = gen_worked_example(WorkedExample::RunningAverage, t_len)?;
            // Expected values computed from the construction itself: the
            // calibration error is the harmonic tail sum of the latter-half
            // predictions, and the spike-witness value is its direct sum.
            let half = t_len / 2;
            let mut cal_expected = 0.0;
            let mut spike = 0.0;
            for t in half + 1..=t_len {
                let p = half as f64 / t as f64;
                cal_expected += p;
                spike += metrics::spike_witness(p) * (0.0 - p);
            }
            spike /= tf;
            let mut checks = vec![
                ExpectedCheck::new("cal", CheckKind::Eq, cal_expected, 1e-6),
                ExpectedCheck::new("vcal", CheckKind::Le, 0.02 * tf, 0.0),
                ExpectedCheck::new("weak_cal_spike", CheckKind::Eq, spike, 1e-9),
            ];
            if t_len >= 1000 {
                checks.push(ExpectedCheck::new("weak_cal_spike", CheckKind::MagnitudeGe, 0.005, 0.0));
            }
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript,
                agents: vec![],
                rules: vec![],
                checks,
            })
        }
        "multiclass_epochs" => {
            let fixture = gen_multiclass_epochs(t_len)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript: fixture.transcript,
                agents: vec![
                    ("raw".into(), fixture.raw_utility),
                    ("normalized".into(), fixture.normalized_utility),
                ],
                rules: vec![],
                checks: vec![
                    ExpectedCheck::new("cal_outcome_1", CheckKind::Eq, 0.0, 1e-9),
                    ExpectedCheck::new("cal_outcome_2", CheckKind::Eq, 0.0, 1e-9),
                    ExpectedCheck::new("cal_outcome_3", CheckKind::Eq, 0.0, 1e-9),
                    ExpectedCheck::new("agent_reg_raw", CheckKind::Eq, tf / 3.0, 1e-9),
                    ExpectedCheck::new("agent_reg_normalized", CheckKind::Eq, tf / 18.0, 1e-9),
                ],
            })
        }
        "sr_counterexample_brier" => {
            let base = PLScoringRule::from_fn(|p| p * (1.0 - p), 64)?;
            let out = gen_sr_counterexample(&base, 0.01, t_len)?;
            Ok(NamedFixture {
                name: name.into(),
                t_len,
                transcript: out.transcript.clone(),
                agents: vec![],
                rules: vec![
                    ("base".into(), RuleSpec::from_pl(&base)),
                    ("modified".into(), RuleSpec::from_pl(&out.modified_rule)),
                ],
                checks: vec![
                    ExpectedCheck::new("reg_base", CheckKind::Eq, out.expected_base_regret, 1e-9),
                    ExpectedCheck::new(
                        "reg_modified",
                        CheckKind::Eq,
                        out.expected_modified_regret,
                        1e-9,
                    ),
                ],
            })
        }
        _ => Err(validation(format!(
            "unknown fixture {name}; known: {}",
            fixture_names().join(", ")
        ))),
    }
}

/// Recomputes a named metric of a fixture through the metrics pipeline.
pub fn evaluate_metric(fixture: &NamedFixture, metric: &str) -> Result<f64> {
    let t = &fixture.transcript;
    match metric {
        "cal" => metrics::cal_l1(t),
        "cal2" => metrics::cal_l2(t),
        "cal_multiclass" => Ok(metrics::cal_l1_multiclass(t)),
        "vcal" => metrics::vcal(t).map(|(v, _)| v),
        "weak_cal_spike" => metrics::weak_cal_witness(t, metrics::spike_witness),
        _ => {
            if let Some(i) = metric.strip_prefix("cal_outcome_") {
                let i: usize = i
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad metric {metric}")))?;
                if i == 0 {
                    return Err(Error::Parse("outcome metrics are 1-based".into()));
                }
                return metrics::cal_l1(&t.per_outcome_binary(i - 1)?);
            }
            if let Some(name) = metric.strip_prefix("agent_reg_") {
                let agent = fixture
                    .agents
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, u)| u)
                    .ok_or_else(|| validation(format!("fixture has no agent {name}")))?;
                return metrics::agent_reg(agent, t);
            }
            if let Some(name) = metric.strip_prefix("reg_") {
                let spec = fixture
                    .rules
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, r)| r)
                    .ok_or_else(|| validation(format!("fixture has no rule {name}")))?;
                return metrics::reg(&spec.to_bivariate(t.arity())?, t);
            }
            Err(validation(format!("unknown metric {metric}")))
        }
    }
}

/// Result of recomputing one check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub check: ExpectedCheck,
    pub actual: f64,
    pub ok: bool,
}

/// Recomputes every check of the fixture.
pub fn verify(fixture: &NamedFixture) -> Result<Vec<CheckOutcome>> {
    fixture
        .checks
        .iter()
        .map(|check| {
            let actual = evaluate_metric(fixture, &check.metric)?;
            Ok(CheckOutcome { check: check.clone(), actual, ok: check.passes(actual) })
        })
        .collect()
}
