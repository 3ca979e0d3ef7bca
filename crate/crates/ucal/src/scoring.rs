//! Representation, validation, conversion and decomposition of bounded proper
//! scoring rules, binary and multiclass.
//!
//! A bounded binary rule is determined by its concave univariate form; the
//! piecewise-linear subtype [`PLScoringRule`] stores that form as breakpoints
//! plus knot values and derives the bivariate evaluator from subgradients.
//! Smooth rules (Brier) are represented directly as [`BivariateRule`]
//! closures; piecewise-linear sampling is only needed where decomposition or
//! the LP require the PL subtype.
//!
//! All types are immutable after construction and safe to share across
//! threads.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{self, UtilityMatrix};
use crate::error::{validation, Result};

/// Tolerance for properness certificates. All rule arithmetic is closed-form
/// on inputs representable as short rationals, so violations of properness
/// show up at far larger magnitudes than honest rounding noise.
pub const PROPERNESS_TOL: f64 = 1e-9;

const BOUND_TOL: f64 = 1e-9;
const CONCAVITY_TOL: f64 = 1e-12;

/// Piecewise-linear concave univariate form of a bounded proper scoring rule.
///
/// `knots` always starts at 0 and ends at 1; `values[i]` is the univariate
/// form at `knots[i]`. Construction enforces concavity (segment slopes
/// non-increasing) and membership in the bounded class: every derived
/// bivariate value lies in `[-1, 1]`, which also caps segment slopes at
/// magnitude 2.
#[derive(Clone, Debug, PartialEq)]
pub struct PLScoringRule {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PLScoringRule {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 2 {
            return Err(validation(format!(
                "need {} knot values for {} breakpoints, got {}",
                breakpoints.len() + 2,
                breakpoints.len(),
                values.len()
            )));
        }
        let mut knots = Vec::with_capacity(breakpoints.len() + 2);
        knots.push(0.0);
        for (i, &b) in breakpoints.iter().enumerate() {
            if !(0.0 < b && b < 1.0) {
                return Err(validation(format!("breakpoint {b} outside (0,1)")));
            }
            if i > 0 && b <= breakpoints[i - 1] {
                return Err(validation(format!(
                    "breakpoints not strictly increasing at index {i} ({} >= {b})",
                    breakpoints[i - 1]
                )));
            }
            knots.push(b);
        }
        knots.push(1.0);

        let rule = PLScoringRule { knots, values };
        for i in 1..rule.segments() {
            if rule.slope(i) > rule.slope(i - 1) + CONCAVITY_TOL {
                return Err(validation(format!(
                    "not concave: slope rises from {} to {} across segments {} and {}",
                    rule.slope(i - 1),
                    rule.slope(i),
                    i - 1,
                    i
                )));
            }
        }
        for i in 0..rule.segments() {
            // Per segment the bivariate form is constant: l(p,0) is the
            // intercept, l(p,1) the intercept plus the slope.
            let s = rule.slope(i);
            let a = rule.values[i] - rule.knots[i] * s;
            for (what, val) in [("l(p,0)", a), ("l(p,1)", a + s)] {
                if val.abs() > 1.0 + BOUND_TOL {
                    return Err(validation(format!(
                        "unbounded rule: {what} = {val} on segment {i}"
                    )));
                }
            }
        }
        Ok(rule)
    }

    /// Samples a concave function on a uniform grid with `segments` pieces.
    pub fn from_fn(f: impl Fn(f64) -> f64, segments: usize) -> Result<Self> {
        if segments < 1 {
            return Err(validation("need at least one segment"));
        }
        let breakpoints: Vec<f64> = (1..segments).map(|i| i as f64 / segments as f64).collect();
        let values: Vec<f64> = (0..=segments).map(|i| f(i as f64 / segments as f64)).collect();
        PLScoringRule::new(breakpoints, values)
    }

    /// Interior breakpoints (knots excluding the endpoints 0 and 1).
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    fn slope(&self, segment: usize) -> f64 {
        (self.values[segment + 1] - self.values[segment])
            / (self.knots[segment + 1] - self.knots[segment])
    }

    fn segment_of(&self, p: f64) -> usize {
        // Points exactly on a knot belong to the segment to its right, except
        // p = 1 which belongs to the last segment.
        let idx = self.knots.partition_point(|&k| k <= p);
        idx.saturating_sub(1).min(self.segments() - 1)
    }

    pub fn univariate(&self, p: f64) -> f64 {
        let i = self.segment_of(p);
        self.values[i] + self.slope(i) * (p - self.knots[i])
    }

    /// Slope approaching `p` from the left (right derivative at 0).
    pub fn left_slope(&self, p: f64) -> f64 {
        if p <= self.knots[0] {
            return self.slope(0);
        }
        let idx = self.knots.partition_point(|&k| k < p);
        self.slope(idx.saturating_sub(1).min(self.segments() - 1))
    }

    /// Slope approaching `p` from the right (left derivative at 1).
    pub fn right_slope(&self, p: f64) -> f64 {
        let last = *self.knots.last().unwrap();
        if p >= last {
            return self.slope(self.segments() - 1);
        }
        self.slope(self.segment_of(p))
    }

    /// Subgradient used for bivariate evaluation: the segment slope, with the
    /// average of the adjacent slopes at a knot.
    pub fn subgradient(&self, p: f64) -> f64 {
        let l = self.left_slope(p);
        let r = self.right_slope(p);
        0.5 * (l + r)
    }

    /// Pointwise minimum with the affine function `intercept + slope * p`,
    /// re-expressed as a piecewise-linear rule.
    pub fn min_with_line(&self, intercept: f64, slope: f64) -> Result<PLScoringRule> {
        let line = |p: f64| intercept + slope * p;
        let mut knots: Vec<f64> = self.knots.clone();
        for i in 0..self.segments() {
            let s = self.slope(i);
            if (s - slope).abs() < 1e-15 {
                continue;
            }
            // Segment is value[i] + s (p - knot[i]); intersect with the line.
            let a_seg = self.values[i] - self.knots[i] * s;
            let cross = (intercept - a_seg) / (s - slope);
            if cross > self.knots[i] + 1e-12 && cross < self.knots[i + 1] - 1e-12 {
                knots.push(cross);
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let values: Vec<f64> = knots.iter().map(|&k| self.univariate(k).min(line(k))).collect();
        let breakpoints = knots[1..knots.len() - 1].to_vec();
        PLScoringRule::new(breakpoints, values)
    }
}

/// Bivariate form of a scoring rule: an evaluator mapping a prediction point
/// of the `K`-simplex and an outcome to a penalty, with a declared bound.
#[derive(Clone)]
pub struct BivariateRule {
    arity: usize,
    bound: f64,
    eval: Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for BivariateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BivariateRule")
            .field("arity", &self.arity)
            .field("bound", &self.bound)
            .finish()
    }
}

impl BivariateRule {
    pub fn new(
        arity: usize,
        bound: f64,
        eval: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BivariateRule { arity, bound, eval: Arc::new(eval) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn score(&self, p: &[f64], x: usize) -> f64 {
        debug_assert_eq!(p.len(), self.arity);
        debug_assert!(x < self.arity);
        (self.eval)(p, x)
    }

    /// Binary convenience: `p` is the probability of outcome 1.
    pub fn score_binary(&self, p: f64, x: usize) -> f64 {
        debug_assert_eq!(self.arity, 2);
        self.score(&[1.0 - p, p], x)
    }

    /// Expected penalty `l(p; q)` of predicting `p` when the truth is `q`.
    pub fn expected(&self, p: &[f64], q: &[f64]) -> f64 {
        (0..self.arity).map(|x| q[x] * self.score(p, x)).sum()
    }

    /// Univariate form `l(p) = l(p; p)`.
    pub fn univariate(&self, p: &[f64]) -> f64 {
        self.expected(p, p)
    }

    /// Brier rule `(x - p)^2` over binary outcomes.
    pub fn brier() -> Self {
        BivariateRule::new(2, 1.0, |p, x| {
            let d = x as f64 - p[1];
            d * d
        })
    }

    /// Multiclass Brier `||e_x - p||^2` (bound 2).
    pub fn brier_multiclass(arity: usize) -> Self {
        BivariateRule::new(arity, 2.0, move |p, x| {
            p.iter()
                .enumerate()
                .map(|(i, &pi)| {
                    let d = (i == x) as u8 as f64 - pi;
                    d * d
                })
                .sum()
        })
    }

    pub fn zero(arity: usize) -> Self {
        BivariateRule::new(arity, 0.0, |_, _| 0.0)
    }

    /// Positive-weighted sum of rules (regret is linear in the rule).
    pub fn weighted_sum(parts: Vec<(f64, BivariateRule)>) -> Result<Self> {
        let arity = parts.first().map(|(_, r)| r.arity()).ok_or_else(|| validation("empty sum"))?;
        if parts.iter().any(|(_, r)| r.arity() != arity) {
            return Err(validation("mixed arities in weighted sum"));
        }
        let bound = parts.iter().map(|(w, r)| w.abs() * r.bound()).sum();
        Ok(BivariateRule::new(arity, bound, move |p, x| {
            parts.iter().map(|(w, r)| w * r.score(p, x)).sum()
        }))
    }
}

/// Derives the bivariate evaluator of a piecewise-linear rule:
/// `l(p,0) = l(p) - p g(p)` and `l(p,1) = l(p) + (1-p) g(p)` with `g` the
/// declared subgradient (adjacent-slope average at breakpoints).
///
/// Non-concave inputs are rejected by [`PLScoringRule::new`], so the
/// conversion itself is total and always yields a proper rule.
pub fn bivariate_from_univariate(rule: &PLScoringRule) -> BivariateRule {
    let rule = rule.clone();
    let bound = 1.0;
    BivariateRule::new(2, bound, move |point, x| {
        let p = point[1];
        let g = rule.subgradient(p);
        let u = rule.univariate(p);
        match x {
            0 => u - p * g,
            _ => u + (1.0 - p) * g,
        }
    })
}

/// V-shaped scoring rule centered at `v`: univariate form `-|p - v|`.
///
/// The bivariate form is `l_v(p,0) = v sgn(p - v)`, `l_v(p,1) =
/// (1-v) sgn(v - p)`, fixed to 0 for both outcomes at `p = v` (the value
/// there is not otherwise determined and this is the convention the
/// closed-form V-regret expressions assume).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VShapedRule {
    v: f64,
}

impl VShapedRule {
    pub fn new(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(validation(format!("center {v} outside [0,1]")));
        }
        Ok(VShapedRule { v })
    }

    pub fn center(&self) -> f64 {
        self.v
    }

    pub fn univariate(&self, p: f64) -> f64 {
        -(p - self.v).abs()
    }

    pub fn score(&self, p: f64, x: usize) -> f64 {
        let sgn = |d: f64| {
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        match x {
            0 => self.v * sgn(p - self.v),
            _ => (1.0 - self.v) * sgn(self.v - p),
        }
    }

    pub fn to_bivariate(&self) -> BivariateRule {
        let r = *self;
        BivariateRule::new(2, self.v.max(1.0 - self.v), move |p, x| r.score(p[1], x))
    }

    pub fn to_pl(&self) -> Result<PLScoringRule> {
        if self.v == 0.0 || self.v == 1.0 {
            PLScoringRule::new(vec![], vec![-self.v, -(1.0 - self.v)])
        } else {
            PLScoringRule::new(vec![self.v], vec![-self.v, 0.0, -(1.0 - self.v)])
        }
    }
}

/// Per-outcome composition of a V-shaped rule over `K` outcomes:
/// `l(p, x) = sum_i l_v(p_i, 1(x = i))`. A separable multiclass rule whose
/// every coordinate rule is bounded by 1.
pub fn vshape_per_outcome(v: f64, arity: usize) -> Result<BivariateRule> {
    let rule = VShapedRule::new(v)?;
    Ok(BivariateRule::new(arity, arity as f64, move |p, x| {
        p.iter()
            .enumerate()
            .map(|(i, &pi)| rule.score(pi, (x == i) as usize))
            .sum()
    }))
}

/// Separable multiclass rule built from per-outcome binary rules:
/// `l(p, x) = sum_i l_i(p_i, 1(x = i))`.
pub fn separable(rules: Vec<BivariateRule>) -> Result<BivariateRule> {
    if rules.is_empty() {
        return Err(validation("empty rule list"));
    }
    if rules.iter().any(|r| r.arity() != 2) {
        return Err(validation("separable composition needs binary coordinate rules"));
    }
    let arity = rules.len();
    let bound = rules.iter().map(|r| r.bound()).sum();
    Ok(BivariateRule::new(arity, bound, move |p, x| {
        rules
            .iter()
            .enumerate()
            .map(|(i, r)| r.score_binary(p[i], (x == i) as usize))
            .sum()
    }))
}

/// Outcome of a properness probe.
#[derive(Clone, Debug)]
pub enum PropernessOutcome {
    /// All pairwise inequalities `l(p; p) <= l(q; p) + tol` hold on the probe set.
    Certified,
    /// `l(p; p) > l(q; p) + tol` for this pair; `margin` is the excess.
    Counterexample { p: Vec<f64>, q: Vec<f64>, margin: f64 },
}

impl PropernessOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, PropernessOutcome::Certified)
    }
}

/// Checks the properness certificate of `rule` on a finite probe set:
/// truthful prediction must minimize expected penalty among the probes.
/// Returns the first violating pair in probe order. Total function.
pub fn check_properness(rule: &BivariateRule, probes: &[Vec<f64>], tol: f64) -> Result<PropernessOutcome> {
    if probes.is_empty() {
        return Err(validation("empty probe set"));
    }
    for point in probes {
        if point.len() != rule.arity() {
            return Err(validation("probe arity mismatch"));
        }
        let sum: f64 = point.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || point.iter().any(|&c| c < 0.0) {
            return Err(validation(format!("probe {point:?} is not a simplex point")));
        }
    }
    for p in probes {
        let truthful = rule.expected(p, p);
        for q in probes {
            let margin = truthful - rule.expected(q, p);
            if margin > tol {
                return Ok(PropernessOutcome::Counterexample { p: p.clone(), q: q.clone(), margin });
            }
        }
    }
    Ok(PropernessOutcome::Certified)
}

/// Binary probe grid `{0, 1/(n-1), ..., 1}` as simplex points.
pub fn binary_probe_grid(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let p = i as f64 / (n - 1) as f64;
            vec![1.0 - p, p]
        })
        .collect()
}

/// Decomposition of a piecewise-linear rule into V-shaped rules plus an
/// affine part: `l(p) = C1 p + C0 + sum_i lambda_i * (-|p - v_i|)` with
/// `lambda_i = (l'_-(v_i) - l'_+(v_i)) / 2 >= 0` and `sum lambda_i <= 2`
/// for rules in the bounded class.
#[derive(Clone, Debug)]
pub struct VDecomposition {
    pub centers: Vec<f64>,
    pub weights: Vec<f64>,
    pub affine_intercept: f64,
    pub affine_slope: f64,
}

impl VDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Reconstructed univariate form.
    pub fn univariate(&self, p: f64) -> f64 {
        let vs: f64 = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| -w * (p - v).abs())
            .sum();
        self.affine_intercept + self.affine_slope * p + vs
    }
}

/// Splits a piecewise-linear rule at its breakpoints into weighted V-shapes.
pub fn v_decompose(rule: &PLScoringRule) -> VDecomposition {
    let mut centers = Vec::new();
    let mut weights = Vec::new();
    for (i, &v) in rule.breakpoints().iter().enumerate() {
        let lambda = 0.5 * (rule.slope(i) - rule.slope(i + 1));
        if lambda > 1e-15 {
            centers.push(v);
            weights.push(lambda);
        }
    }
    let weight_sum: f64 = weights.iter().sum();
    let slope0 = rule.slope(0);
    let center_mass: f64 = centers.iter().zip(&weights).map(|(&v, &w)| v * w).sum();
    VDecomposition {
        affine_intercept: rule.knot_values()[0] + center_mass,
        affine_slope: slope0 - weight_sum,
        centers,
        weights,
    }
}

/// Scoring rule induced by a utility-maximizing agent: `l(p, x) =
/// -u(a(p), x)` where `a(p)` best-responds to `p`. Proper by construction,
/// and base-rate regret under it equals the agent's regret.
pub fn agent_to_rule(u: &UtilityMatrix) -> BivariateRule {
    let u = u.clone();
    let bound = u.max_abs();
    BivariateRule::new(u.arity(), bound, move |p, x| {
        -u.utility(agents::best_response(&u, p), x)
    })
}

/// Agent realizing a piecewise-linear binary rule: one action per linear
/// piece with `u(a, x) = -(slope_a * x + intercept_a)`. The rule invariant
/// keeps those payoffs within a rounding error of `[-1, 1]`; they are
/// clamped into the box exactly.
pub fn rule_to_agent(rule: &PLScoringRule) -> Result<UtilityMatrix> {
    let rows: Vec<Vec<f64>> = (0..rule.segments())
        .map(|i| {
            let s = rule.slope(i);
            let a = rule.knot_values()[i] - rule.breakpoint_knot(i) * s;
            vec![(-a).clamp(-1.0, 1.0), (-(a + s)).clamp(-1.0, 1.0)]
        })
        .collect();
    UtilityMatrix::new(rows)
}

impl PLScoringRule {
    fn breakpoint_knot(&self, segment: usize) -> f64 {
        self.knots[segment]
    }
}

/// JSON-facing description of a scoring rule.
///
/// `{"kind": "pl", "breakpoints": [...], "values": [...]}`
/// `{"kind": "vshape", "v": 0.3}` | `{"kind": "brier"}`
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleSpec {
    Pl { breakpoints: Vec<f64>, values: Vec<f64> },
    Vshape { v: f64 },
    Brier,
}

impl RuleSpec {
    /// Instantiates the rule at the given outcome arity. Piecewise-linear
    /// rules are binary; V-shapes compose per-outcome beyond arity 2.
    pub fn to_bivariate(&self, arity: usize) -> Result<BivariateRule> {
        match self {
            RuleSpec::Pl { breakpoints, values } => {
                if arity != 2 {
                    return Err(validation("pl rules are binary"));
                }
                Ok(bivariate_from_univariate(&PLScoringRule::new(
                    breakpoints.clone(),
                    values.clone(),
                )?))
            }
            RuleSpec::Vshape { v } => {
                if arity == 2 {
                    Ok(VShapedRule::new(*v)?.to_bivariate())
                } else {
                    vshape_per_outcome(*v, arity)
                }
            }
            RuleSpec::Brier => Ok(if arity == 2 {
                BivariateRule::brier()
            } else {
                BivariateRule::brier_multiclass(arity)
            }),
        }
    }

    pub fn name(&self) -> String {
        match self {
            RuleSpec::Pl { breakpoints, .. } => format!("pl_{}", breakpoints.len()),
            RuleSpec::Vshape { v } => format!("vshape_{v}"),
            RuleSpec::Brier => "brier".to_string(),
        }
    }

    pub fn from_pl(rule: &PLScoringRule) -> Self {
        RuleSpec::Pl {
            breakpoints: rule.breakpoints().to_vec(),
            values: rule.knot_values().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pl_constructor_rejects_bad_inputs() {
        // Breakpoint outside (0,1).
        assert!(PLScoringRule::new(vec![1.0], vec![0.0, 0.0, 0.0]).is_err());
        // Not strictly increasing.
        assert!(PLScoringRule::new(vec![0.5, 0.5], vec![0.0; 4]).is_err());
        // Convex (slope rises): names the violating segments.
        let err = PLScoringRule::new(vec![0.5], vec![0.0, -0.5, 0.5]).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("not concave"), "{msg}");
        assert!(msg.contains("segments 0 and 1"), "{msg}");
        // Unbounded: slope 4 pushes l(p,1) to 4.
        assert!(PLScoringRule::new(vec![0.5], vec![0.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn brier_as_pl_matches_squared_bivariate_on_grid() {
        // Sampled on a fine uniform grid the averaged subgradient at interior
        // knots is exactly 1 - 2p, so l(p,0) = p^2 and l(p,1) = (1-p)^2 there.
        let segments = 100;
        let pl = PLScoringRule::from_fn(|p| p * (1.0 - p), segments).unwrap();
        let rule = bivariate_from_univariate(&pl);
        for i in 1..segments {
            let p = i as f64 / segments as f64;
            assert!((rule.score_binary(p, 0) - p * p).abs() < 1e-12, "p={p}");
            assert!((rule.score_binary(p, 1) - (1.0 - p) * (1.0 - p)).abs() < 1e-12);
        }
        // Endpoints use the one-sided slope; off by at most the grid step.
        assert!((rule.score_binary(0.0, 0) - 0.0).abs() < 1e-12);
        assert!((rule.score_binary(1.0, 0) - 1.0).abs() <= 1.0 / segments as f64 + 1e-12);
    }

    #[test]
    fn zero_rule_bivariate_is_zero() {
        let pl = PLScoringRule::new(vec![], vec![0.0, 0.0]).unwrap();
        let rule = bivariate_from_univariate(&pl);
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            assert_eq!(rule.score_binary(p, 0), 0.0);
            assert_eq!(rule.score_binary(p, 1), 0.0);
        }
    }

    #[test]
    fn vshape_bivariate_hand_values() {
        let rule = VShapedRule::new(0.3).unwrap();
        assert_eq!(rule.score(0.7, 0), 0.3);
        assert_eq!(rule.score(0.1, 1), 0.7);
        // At the center both outcomes score 0 by convention.
        assert_eq!(rule.score(0.3, 0), 0.0);
        assert_eq!(rule.score(0.3, 1), 0.0);
    }

    #[test]
    fn properness_certificates() {
        let grid = binary_probe_grid(11);
        assert!(check_properness(&BivariateRule::brier(), &grid, PROPERNESS_TOL)
            .unwrap()
            .is_certified());
        assert!(check_properness(
            &VShapedRule::new(0.5).unwrap().to_bivariate(),
            &grid,
            PROPERNESS_TOL
        )
        .unwrap()
        .is_certified());
    }

    #[test]
    fn negated_brier_is_improper() {
        let negated = BivariateRule::new(2, 1.0, |p, x| {
            let d = x as f64 - p[1];
            -d * d
        });
        let grid = binary_probe_grid(11);
        let outcome = check_properness(&negated, &grid, PROPERNESS_TOL).unwrap();
        match outcome {
            PropernessOutcome::Counterexample { margin, .. } => assert!(margin > 0.0),
            _ => panic!("negated Brier certified as proper"),
        }
        // Direct evaluation of the specific violating pair p=0, q=0.5:
        // l(0;0) = 0 exceeds l(0.5;0) = -0.25.
        let p = vec![1.0, 0.0];
        let q = vec![0.5, 0.5];
        assert!(negated.expected(&p, &p) > negated.expected(&q, &p) + PROPERNESS_TOL);
    }

    #[test]
    fn v_decompose_single_vshape() {
        // -|p - 0.3| has slopes +1/-1, so lambda = (1 - (-1))/2 = 1 and the
        // affine remainder vanishes.
        let pl = VShapedRule::new(0.3).unwrap().to_pl().unwrap();
        let d = v_decompose(&pl);
        assert_eq!(d.centers, vec![0.3]);
        assert_eq!(d.weights, vec![1.0]);
        assert!(d.affine_intercept.abs() < 1e-15);
        assert!(d.affine_slope.abs() < 1e-15);
    }

    #[test]
    fn v_decompose_linear_rule_is_empty() {
        let pl = PLScoringRule::new(vec![], vec![-0.25, 0.25]).unwrap();
        let d = v_decompose(&pl);
        assert!(d.centers.is_empty());
        assert_eq!(d.weight_sum(), 0.0);
    }

    #[test]
    fn v_decompose_tent_with_slope_two() {
        // Slopes (2, 0, -2) at breakpoints 1/3 and 2/3: lambda = (1, 1).
        let third = 1.0 / 3.0;
        let pl = PLScoringRule::new(
            vec![third, 2.0 * third],
            vec![-1.0, -third, -third, -1.0],
        )
        .unwrap();
        let d = v_decompose(&pl);
        assert_eq!(d.centers.len(), 2);
        assert!((d.weights[0] - 1.0).abs() < 1e-12);
        assert!((d.weights[1] - 1.0).abs() < 1e-12);
        assert!((d.weight_sum() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn v_decompose_reconstruction_at_knots_and_midpoints() {
        let pl = PLScoringRule::new(
            vec![0.2, 0.45, 0.8],
            vec![-0.4, -0.15, 0.02, -0.05, -0.3],
        )
        .unwrap();
        let d = v_decompose(&pl);
        let mut probes = vec![0.0, 1.0];
        probes.extend_from_slice(pl.breakpoints());
        for w in pl.breakpoints().windows(2) {
            probes.push(0.5 * (w[0] + w[1]));
        }
        probes.push(0.1);
        probes.push(0.9);
        for &p in &probes {
            assert!(
                (d.univariate(p) - pl.univariate(p)).abs() <= 1e-12,
                "p = {p}"
            );
        }
    }

    #[test]
    fn wager_agent_rule_is_min_of_lines_crossing_at_tenth() {
        let rule = agent_to_rule(&agents::wager_agent());
        // Univariate form is -|p - 0.1| scaled: min(0.1 - p, p - 0.1) negated.
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let expected = -(0.1f64 - p).abs();
            let point = [1.0 - p, p];
            assert!((rule.univariate(&point) - expected).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn single_action_agent_rule_has_zero_regret() {
        use crate::metrics::{reg, Transcript};
        let u = UtilityMatrix::new(vec![vec![0.4, -0.2]]).unwrap();
        let rule = agent_to_rule(&u);
        let t = Transcript::binary(vec![0.9, 0.2, 0.6], vec![0, 1, 1]).unwrap();
        assert_eq!(reg(&rule, &t).unwrap(), 0.0);
    }

    #[test]
    fn rule_agent_roundtrip_preserves_univariate_form() {
        let pl = PLScoringRule::new(
            vec![0.25, 0.5, 0.7],
            vec![-0.4, -0.1, 0.05, 0.0, -0.25],
        )
        .unwrap();
        let agent = rule_to_agent(&pl).unwrap();
        let back = agent_to_rule(&agent);
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let point = [1.0 - p, p];
            assert!(
                (back.univariate(&point) - pl.univariate(p)).abs() <= 1e-12,
                "p = {p}"
            );
        }
    }

    #[test]
    fn min_with_line_flattens_the_top() {
        let pl = PLScoringRule::from_fn(|p| p * (1.0 - p), 16).unwrap();
        let clipped = pl.min_with_line(0.1, 0.0).unwrap();
        assert!((clipped.univariate(0.5) - 0.1).abs() < 1e-12);
        assert!((clipped.univariate(0.0) - 0.0).abs() < 1e-12);
        assert!((clipped.univariate(0.0625) - pl.univariate(0.0625)).abs() < 1e-12);
    }

    #[test]
    fn rule_spec_json_roundtrip() {
        let specs = vec![
            RuleSpec::Brier,
            RuleSpec::Vshape { v: 0.3 },
            RuleSpec::Pl { breakpoints: vec![0.5], values: vec![-0.5, 0.0, -0.5] },
        ];
        for spec in specs {
            let json = serde_json::to_string(&spec).unwrap();
            let back: RuleSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
        let parsed: RuleSpec = serde_json::from_str(r#"{"kind":"vshape","v":0.25}"#).unwrap();
        assert_eq!(parsed, RuleSpec::Vshape { v: 0.25 });
    }
}
