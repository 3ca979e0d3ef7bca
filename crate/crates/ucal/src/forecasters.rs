//! Online forecasting algorithms producing predictions round by round.
//!
//! The binary randomized forecaster samples its prediction from the law
//! `Pr[p_t <= v] = S(eta (t-1) (v - xbar))`, `S(x) = e^x / (e^x + e^{-x})`,
//! where `xbar` is the historical outcome average. Every two-action threshold
//! agent best-responding to these predictions reproduces, action for action,
//! the distribution it would play under Hedge — which is what drives its
//! square-root V-calibration rate.
//!
//! The multiclass forecaster is follow-the-perturbed-leader in forecast
//! space: it normalizes the historical outcome counts after adding fresh
//! uniform noise of size up to `floor(sqrt(T))` to each class, every round.
//!
//! Oblivious outcome sources fix the whole sequence up front. The adaptive
//! threshold adversary — which breaks every deterministic forecaster — is
//! quarantined behind its own entry point so the oblivious-model guarantees
//! are never silently violated.

use crate::error::{validation, Result};
use crate::metrics::Transcript;
use crate::rng::CounterRng;

/// `S(x) = e^x / (e^x + e^{-x})`, computed in the numerically stable
/// logistic form.
pub fn hedge_cdf_shape(x: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * x).exp())
}

/// State of the randomized binary forecaster.
///
/// Round `t` samples from the CDF built on the average of the first `t - 1`
/// outcomes; the first round predicts 1/2 deterministically.
#[derive(Clone, Debug)]
pub struct HedgeForecaster {
    eta: f64,
    round: usize,
    ones: usize,
    rng: CounterRng,
}

impl HedgeForecaster {
    /// Learning rate `1/sqrt(T)` for a known horizon.
    pub fn new(horizon: usize, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(validation("zero horizon"));
        }
        Self::with_eta(1.0 / (horizon as f64).sqrt(), seed)
    }

    pub fn with_eta(eta: f64, seed: u64) -> Result<Self> {
        if eta <= 0.0 {
            return Err(validation(format!("eta = {eta} must be positive")));
        }
        Ok(HedgeForecaster { eta, round: 1, ones: 0, rng: CounterRng::new(seed) })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    fn historical_average(&self) -> f64 {
        self.ones as f64 / (self.round - 1) as f64
    }

    /// `Pr[p_t <= v]` for the current round, `v` in `[0, 1)`. Defined from
    /// round 2 on; the remaining mass `1 - lim_{v -> 1-}` sits on the atom
    /// at 1.
    pub fn cdf(&self, v: f64) -> f64 {
        assert!(self.round >= 2, "round-1 prediction is deterministic");
        let scale = self.eta * (self.round - 1) as f64;
        hedge_cdf_shape(scale * (v - self.historical_average()))
    }

    /// Samples the prediction for the current round (consumes one draw from
    /// round 2 on). Does not advance the round; feed the realized outcome to
    /// [`observe`](Self::observe).
    pub fn next_prediction(&mut self) -> f64 {
        if self.round == 1 {
            return 0.5;
        }
        let xbar = self.historical_average();
        let scale = self.eta * (self.round - 1) as f64;
        let u = self.rng.next_f64();
        // Atom at 0 carries the CDF value there; the atom at 1 carries the
        // residual mass above the left limit of the CDF at 1.
        let at_zero = hedge_cdf_shape(scale * (0.0 - xbar));
        if u <= at_zero {
            return 0.0;
        }
        let below_one = hedge_cdf_shape(scale * (1.0 - xbar));
        if u > below_one {
            return 1.0;
        }
        // Invert S: S^{-1}(u) = ln(u / (1-u)) / 2.
        let p = xbar + 0.5 * (u / (1.0 - u)).ln() / scale;
        p.clamp(0.0, 1.0)
    }

    pub fn observe(&mut self, outcome: u8) {
        debug_assert!(outcome <= 1);
        self.ones += outcome as usize;
        self.round += 1;
    }
}

fn integer_sqrt(n: usize) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while (r + 1) * (r + 1) <= n as u64 {
        r += 1;
    }
    while r * r > n as u64 {
        r -= 1;
    }
    r
}

/// State of the follow-the-perturbed-leader multiclass forecaster.
#[derive(Clone, Debug)]
pub struct FtplForecaster {
    arity: usize,
    counts: Vec<u64>,
    perturbation_cap: u64,
    rng: CounterRng,
}

impl FtplForecaster {
    /// The horizon fixes the perturbation cap `floor(sqrt(T))`.
    pub fn new(horizon: usize, arity: usize, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(validation("zero horizon"));
        }
        if arity < 2 {
            return Err(validation("arity must be at least 2"));
        }
        Ok(FtplForecaster {
            arity,
            counts: vec![0; arity],
            perturbation_cap: integer_sqrt(horizon),
            rng: CounterRng::new(seed),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn perturbation_cap(&self) -> u64 {
        self.perturbation_cap
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Prediction given an explicit noise vector: normalized perturbed
    /// counts, or the uniform prediction when every perturbed count is zero
    /// (possible only before the first observation, with all-zero noise).
    pub fn prediction_from_noise(&self, noise: &[u64]) -> Vec<f64> {
        debug_assert_eq!(noise.len(), self.arity);
        let perturbed: Vec<u64> = self.counts.iter().zip(noise).map(|(&c, &n)| c + n).collect();
        let total: u64 = perturbed.iter().sum();
        if total == 0 {
            return vec![1.0 / self.arity as f64; self.arity];
        }
        perturbed.into_iter().map(|x| x as f64 / total as f64).collect()
    }

    /// Samples fresh perturbations and emits the prediction for this round.
    pub fn next_prediction(&mut self) -> Vec<f64> {
        let noise: Vec<u64> = (0..self.arity)
            .map(|_| self.rng.next_below(self.perturbation_cap + 1))
            .collect();
        self.prediction_from_noise(&noise)
    }

    pub fn observe(&mut self, outcome: usize) {
        debug_assert!(outcome < self.arity);
        self.counts[outcome] += 1;
    }
}

/// Binary forecaster selection for the batch harness.
#[derive(Clone, Debug, PartialEq)]
pub enum ForecasterKind {
    /// Randomized forecaster; `eta` defaults to `1/sqrt(T)`.
    Hedge { eta: Option<f64> },
    /// Follow-the-perturbed-leader (any arity).
    Ftpl,
    /// Historical outcome average, `1/2` on the first round.
    Empirical,
    Constant(f64),
}

impl ForecasterKind {
    pub fn name(&self) -> String {
        match self {
            ForecasterKind::Hedge { .. } => "hedge".to_string(),
            ForecasterKind::Ftpl => "ftpl".to_string(),
            ForecasterKind::Empirical => "empirical".to_string(),
            ForecasterKind::Constant(v) => format!("constant={v}"),
        }
    }

    /// Parses `hedge | ftpl | empirical | constant=<v>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hedge" => Ok(ForecasterKind::Hedge { eta: None }),
            "ftpl" => Ok(ForecasterKind::Ftpl),
            "empirical" => Ok(ForecasterKind::Empirical),
            _ => {
                if let Some(v) = s.strip_prefix("constant=") {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| validation(format!("bad constant forecaster value {v}")))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(validation(format!("constant {v} outside [0,1]")));
                    }
                    Ok(ForecasterKind::Constant(v))
                } else {
                    Err(validation(format!("unknown forecaster {s}")))
                }
            }
        }
    }
}

/// Named oblivious outcome patterns. `half_ones`, `alternating`, `all_ones`
/// and `all_zeros` are binary; `cycle` works at any arity (`x_t = t mod K`).
pub fn pattern_outcomes(name: &str, t_len: usize, arity: usize) -> Result<Vec<usize>> {
    if t_len == 0 {
        return Err(validation("zero horizon"));
    }
    match name {
        "half_ones" => Ok((0..t_len).map(|t| (t < t_len / 2) as usize).collect()),
        "alternating" => Ok((0..t_len).map(|t| t % 2).collect()),
        "all_ones" => Ok(vec![1; t_len]),
        "all_zeros" => Ok(vec![0; t_len]),
        "cycle" => Ok((0..t_len).map(|t| t % arity).collect()),
        _ => Err(validation(format!("unknown pattern {name}"))),
    }
}

/// Runs a forecaster against a fixed (oblivious) binary outcome sequence.
/// Deterministic given the seed.
pub fn run_oblivious(kind: &ForecasterKind, outcomes: &[u8], seed: u64) -> Result<Transcript> {
    let t_len = outcomes.len();
    if t_len == 0 {
        return Err(validation("adversary yields no outcomes"));
    }
    let preds: Vec<f64> = match kind {
        ForecasterKind::Hedge { eta } => {
            let mut f = match eta {
                Some(e) => HedgeForecaster::with_eta(*e, seed)?,
                None => HedgeForecaster::new(t_len, seed)?,
            };
            outcomes
                .iter()
                .map(|&x| {
                    let p = f.next_prediction();
                    f.observe(x);
                    p
                })
                .collect()
        }
        ForecasterKind::Ftpl => {
            let mut f = FtplForecaster::new(t_len, 2, seed)?;
            outcomes
                .iter()
                .map(|&x| {
                    let p = f.next_prediction()[1];
                    f.observe(x as usize);
                    p
                })
                .collect()
        }
        ForecasterKind::Empirical => {
            let mut ones = 0usize;
            (0..t_len)
                .map(|t| {
                    let p = if t == 0 { 0.5 } else { ones as f64 / t as f64 };
                    ones += outcomes[t] as usize;
                    p
                })
                .collect()
        }
        ForecasterKind::Constant(v) => vec![*v; t_len],
    };
    Transcript::binary(preds, outcomes.to_vec())
}

/// Runs the multiclass forecaster against a fixed outcome sequence.
pub fn run_oblivious_multiclass(outcomes: &[usize], arity: usize, seed: u64) -> Result<Transcript> {
    let t_len = outcomes.len();
    if t_len == 0 {
        return Err(validation("adversary yields no outcomes"));
    }
    let mut f = FtplForecaster::new(t_len, arity, seed)?;
    let mut preds = Vec::with_capacity(t_len * arity);
    for &x in outcomes {
        preds.extend(f.next_prediction());
        f.observe(x);
    }
    Transcript::multiclass(arity, preds, outcomes.to_vec())
}

/// Demonstration-only adaptive adversary: picks `x_t = 0` whenever
/// `p_t >= 1/2` and `x_t = 1` otherwise, driving any deterministic
/// forecaster to linear V-calibration error.
pub fn run_adaptive_threshold(kind: &ForecasterKind, t_len: usize, seed: u64) -> Result<Transcript> {
    if t_len == 0 {
        return Err(validation("zero horizon"));
    }
    let mut hedge = match kind {
        ForecasterKind::Hedge { eta } => Some(match eta {
            Some(e) => HedgeForecaster::with_eta(*e, seed)?,
            None => HedgeForecaster::new(t_len, seed)?,
        }),
        _ => None,
    };
    let mut ftpl = match kind {
        ForecasterKind::Ftpl => Some(FtplForecaster::new(t_len, 2, seed)?),
        _ => None,
    };
    let mut ones = 0usize;
    let mut preds = Vec::with_capacity(t_len);
    let mut outcomes = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let p = match kind {
            ForecasterKind::Hedge { .. } => hedge.as_mut().unwrap().next_prediction(),
            ForecasterKind::Ftpl => ftpl.as_mut().unwrap().next_prediction()[1],
            ForecasterKind::Empirical => {
                if t == 0 {
                    0.5
                } else {
                    ones as f64 / t as f64
                }
            }
            ForecasterKind::Constant(v) => *v,
        };
        let x: u8 = if p >= 0.5 { 0 } else { 1 };
        if let Some(f) = hedge.as_mut() {
            f.observe(x);
        }
        if let Some(f) = ftpl.as_mut() {
            f.observe(x as usize);
        }
        ones += x as usize;
        preds.push(p);
        outcomes.push(x);
    }
    Transcript::binary(preds, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{hedge_action_distribution, threshold_agent};

    #[test]
    fn first_round_is_half() {
        let mut f = HedgeForecaster::new(64, 0).unwrap();
        assert_eq!(f.next_prediction(), 0.5);
    }

    #[test]
    fn symmetric_history_gives_symmetric_predictions() {
        // With xbar = 1/2 the law is symmetric about 1/2: S(-x) = 1 - S(x).
        let mut f = HedgeForecaster::new(100, 5).unwrap();
        for x in [1u8, 0, 1, 0] {
            f.next_prediction();
            f.observe(x);
        }
        let draws = 100_000;
        let mean: f64 = (0..draws).map(|_| f.next_prediction()).sum::<f64>() / draws as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn atom_at_one_has_mass_half_when_average_is_one() {
        // eta (t-1) = 10 and xbar = 1: Pr[p = 1] = 1 - S(0) = 1/2.
        let mut f = HedgeForecaster::with_eta(2.5, 3).unwrap();
        for _ in 0..4 {
            f.next_prediction();
            f.observe(1);
        }
        assert!((f.cdf(1.0) - 0.5).abs() < 1e-15);
        let draws = 100_000;
        let ones = (0..draws).filter(|_| f.next_prediction() == 1.0).count();
        assert!((ones as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn threshold_agents_replicate_hedge_action_law() {
        // Pr[p_t <= v] must equal the Hedge probability of the low action of
        // the threshold agent u_v, for every center and history.
        let eta = 0.125;
        let histories: Vec<Vec<usize>> = vec![
            vec![1],
            vec![0, 1, 1],
            vec![1; 10],
            vec![0; 7],
            vec![1, 0, 0, 1, 1, 1, 0, 1],
        ];
        for history in histories {
            let mut f = HedgeForecaster::with_eta(eta, 0).unwrap();
            for &x in &history {
                f.next_prediction();
                f.observe(x as u8);
            }
            for k in 1..10 {
                let v = k as f64 / 10.0;
                let agent = threshold_agent(v).unwrap();
                let hedge_p0 = hedge_action_distribution(&agent, &history, eta)[0];
                assert!(
                    (f.cdf(v) - hedge_p0).abs() < 1e-9,
                    "v={v} history len {}",
                    history.len()
                );
            }
        }
    }

    #[test]
    fn sampled_cdf_matches_formula() {
        let mut f = HedgeForecaster::with_eta(0.5, 11).unwrap();
        for x in [1u8, 1, 0, 1, 0, 0, 1, 1] {
            f.next_prediction();
            f.observe(x);
        }
        let v = 0.55;
        let want = f.cdf(v);
        let draws = 200_000;
        let hits = (0..draws).filter(|_| f.next_prediction() <= v).count();
        assert!((hits as f64 / draws as f64 - want).abs() < 5e-3);
    }

    #[test]
    fn ftpl_forced_noise_round_one() {
        let f = FtplForecaster::new(16, 2, 0).unwrap();
        assert_eq!(f.perturbation_cap(), 4);
        assert_eq!(f.prediction_from_noise(&[3, 1]), vec![0.75, 0.25]);
    }

    #[test]
    fn ftpl_all_zero_noise_falls_back_to_uniform() {
        let f = FtplForecaster::new(16, 4, 0).unwrap();
        assert_eq!(f.prediction_from_noise(&[0, 0, 0, 0]), vec![0.25; 4]);
    }

    #[test]
    fn ftpl_zero_noise_normalizes_counts() {
        let mut f = FtplForecaster::new(9, 2, 0).unwrap();
        for x in [0usize, 0, 1] {
            f.observe(x);
        }
        let p = f.prediction_from_noise(&[0, 0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn integer_sqrt_is_exact() {
        for n in [1usize, 2, 3, 4, 15, 16, 17, 2499, 2500, 2501, 100_000] {
            let r = integer_sqrt(n);
            assert!(r * r <= n as u64);
            assert!((r + 1) * (r + 1) > n as u64);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let outcomes: Vec<u8> = pattern_outcomes("half_ones", 8, 2)
            .unwrap()
            .into_iter()
            .map(|x| x as u8)
            .collect();
        let kind = ForecasterKind::Hedge { eta: None };
        let a = run_oblivious(&kind, &outcomes, 3).unwrap();
        let b = run_oblivious(&kind, &outcomes, 3).unwrap();
        assert_eq!(a, b);
        let c = run_oblivious(&kind, &outcomes, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_forecaster_convention() {
        let outcomes = vec![1u8, 1, 0, 0];
        let t = run_oblivious(&ForecasterKind::Empirical, &outcomes, 0).unwrap();
        assert_eq!(t.binary_pred(0), 0.5);
        assert_eq!(t.binary_pred(1), 1.0);
        assert_eq!(t.binary_pred(2), 1.0);
        assert_eq!(t.binary_pred(3), 2.0 / 3.0);
    }

    #[test]
    fn constant_forecaster_has_zero_calibration_on_matching_rate() {
        let outcomes: Vec<u8> = pattern_outcomes("alternating", 100, 2)
            .unwrap()
            .into_iter()
            .map(|x| x as u8)
            .collect();
        let t = run_oblivious(&ForecasterKind::Constant(0.5), &outcomes, 0).unwrap();
        assert_eq!(crate::metrics::cal_l1(&t).unwrap(), 0.0);
    }

    #[test]
    fn adaptive_threshold_hurts_empirical_forecaster() {
        let t = run_adaptive_threshold(&ForecasterKind::Empirical, 2000, 0).unwrap();
        let (vc, _) = crate::metrics::vcal(&t).unwrap();
        assert!(vc > 0.2 * t.len() as f64, "vcal {vc}");
    }

    #[test]
    fn forecaster_kind_parsing() {
        assert_eq!(ForecasterKind::parse("hedge").unwrap(), ForecasterKind::Hedge { eta: None });
        assert_eq!(ForecasterKind::parse("ftpl").unwrap(), ForecasterKind::Ftpl);
        assert_eq!(
            ForecasterKind::parse("constant=0.25").unwrap(),
            ForecasterKind::Constant(0.25)
        );
        assert!(ForecasterKind::parse("constant=1.5").is_err());
        assert!(ForecasterKind::parse("oracle").is_err());
    }
}
