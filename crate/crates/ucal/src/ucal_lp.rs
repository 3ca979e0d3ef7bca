//! Exact U-calibration (maximum agent regret) via linear programming over
//! scoring-rule value tables.
//!
//! The regret of a bounded rule against a fixed transcript depends only on
//! its values at the distinct predictions plus the base rate, so the supremum
//! over the whole bounded proper class is a linear program over those value
//! tables: box constraints `[-1, 1]` plus one properness inequality per
//! ordered anchor pair, `<y_a, p_a> <= <y_b, p_a>` (predicting your own
//! anchor must win at your own anchor). Predictions are deduplicated first,
//! shrinking the constraint set from `(T+1)^2` to `(M+1)^2`.
//!
//! The program is solved by row generation: the box-only relaxation is
//! solved with the dense simplex, violated properness inequalities are found
//! by the membership check and added, and the loop repeats until the check
//! passes — at which point the relaxation optimum is the true optimum. A
//! witness rule `l_y(p, x) = y[argmin_a <y_a, p>][x]` is extracted from the
//! optimal table; it is proper and bounded by construction and its regret on
//! the transcript equals the LP value.
//!
//! Each solve owns its tableau; solves over different transcripts can run in
//! parallel.

use std::fmt::Write as _;

use crate::agents::UtilityMatrix;
use crate::error::{validation, Result};
use crate::metrics::Transcript;
use crate::scoring::BivariateRule;
use crate::simplex::{self, SimplexOptions, SimplexStatus};

#[derive(Clone, Debug)]
pub struct LpOptions {
    /// Optimality tolerance on reduced costs.
    pub epsilon: f64,
    /// Cap on the number of distinct predictions.
    pub max_anchors: usize,
    /// Optional bound on `|l(p,1) - l(p,0)|` (binary transcripts only),
    /// restricting the class to rules with univariate slope at most this.
    /// With a bound of 1, the optimum coincides with V-calibration; the crate
    /// exposes the parameter but does not assert that identity anywhere.
    pub slope_bound: Option<f64>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { epsilon: 1e-9, max_anchors: 2000, slope_bound: None }
    }
}

/// Candidate scoring-rule values `y[anchor][outcome]` at the distinct
/// predictions plus the base rate.
#[derive(Clone, Debug)]
pub struct ScoreTable {
    anchors: Vec<Vec<f64>>,
    values: Vec<f64>,
    base_index: usize,
    arity: usize,
    merged_base: bool,
}

impl ScoreTable {
    pub fn new(
        anchors: Vec<Vec<f64>>,
        values: Vec<f64>,
        base_index: usize,
        merged_base: bool,
    ) -> Result<Self> {
        let arity = anchors.first().map(Vec::len).ok_or_else(|| validation("no anchors"))?;
        if anchors.iter().any(|a| a.len() != arity) {
            return Err(validation("ragged anchor list"));
        }
        if values.len() != anchors.len() * arity {
            return Err(validation(format!(
                "need {} values, got {}",
                anchors.len() * arity,
                values.len()
            )));
        }
        if base_index >= anchors.len() {
            return Err(validation("base index out of range"));
        }
        if values.iter().any(|v| v.abs() > 1.0 + 1e-9) {
            return Err(validation("table value outside [-1,1]"));
        }
        Ok(ScoreTable { anchors, values, base_index, arity, merged_base })
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    /// True when the base rate coincided with a predicted value and the two
    /// anchors were merged.
    pub fn merged_base(&self) -> bool {
        self.merged_base
    }

    pub fn anchor(&self, a: usize) -> &[f64] {
        &self.anchors[a]
    }

    pub fn value(&self, a: usize, x: usize) -> f64 {
        self.values[a * self.arity + x]
    }

    fn inner(&self, a: usize, p: &[f64]) -> f64 {
        (0..self.arity).map(|x| p[x] * self.value(a, x)).sum()
    }

    /// Univariate form of the induced rule: the anchor minimum.
    pub fn univariate(&self, p: &[f64]) -> f64 {
        (0..self.anchor_count())
            .map(|a| self.inner(a, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Anchor whose row scores `p`: an exact anchor match wins, otherwise the
    /// lowest index attaining the minimum inner product. For a table passing
    /// the membership check the exact match is itself a minimizer, and
    /// preferring it keeps the witness regret identical to the LP objective
    /// even when the minimum is attained by several rows.
    pub fn anchor_of(&self, p: &[f64]) -> usize {
        for (i, anchor) in self.anchors.iter().enumerate() {
            if anchor.iter().zip(p).all(|(a, b)| a == b) {
                return i;
            }
        }
        self.anchor_argmin(p)
    }

    fn anchor_argmin(&self, p: &[f64]) -> usize {
        let mut best = 0;
        let mut best_inner = self.inner(0, p);
        for a in 1..self.anchor_count() {
            let v = self.inner(a, p);
            if v < best_inner {
                best = a;
                best_inner = v;
            }
        }
        best
    }

    /// The induced proper bounded rule `l_y(p, x) = y[anchor_of(p)][x]`.
    pub fn to_rule(&self) -> BivariateRule {
        let table = self.clone();
        BivariateRule::new(self.arity, 1.0, move |p, x| {
            table.value(table.anchor_of(p), x)
        })
    }

    /// JSON form of the table: anchors, per-anchor value rows, and the base
    /// anchor index.
    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.anchor_count())
            .map(|a| (0..self.arity).map(|x| self.value(a, x)).collect())
            .collect();
        serde_json::json!({
            "kind": "anchor_min",
            "anchors": self.anchors,
            "values": rows,
            "base_index": self.base_index,
            "merged_base": self.merged_base,
        })
        .to_string()
    }

    /// Finite agent with one action per anchor and `u(a, x) = -y[a][x]`.
    pub fn to_agent(&self) -> Result<UtilityMatrix> {
        let rows = (0..self.anchor_count())
            .map(|a| (0..self.arity).map(|x| -self.value(a, x).clamp(-1.0, 1.0)).collect())
            .collect();
        UtilityMatrix::new(rows)
    }
}

/// First violated properness inequality, if any.
#[derive(Clone, Copy, Debug)]
pub struct MembershipViolation {
    /// `<y_a, p_a> > <y_b, p_a> + tol`.
    pub anchor_a: usize,
    pub anchor_b: usize,
    pub margin: f64,
}

/// Verifies every pairwise properness inequality on the table's anchors.
pub fn membership_check(
    table: &ScoreTable,
    tol: f64,
) -> std::result::Result<(), MembershipViolation> {
    for a in 0..table.anchor_count() {
        let own = table.inner(a, table.anchor(a));
        for b in 0..table.anchor_count() {
            if a == b {
                continue;
            }
            let margin = own - table.inner(b, table.anchor(a));
            if margin > tol {
                return Err(MembershipViolation { anchor_a: a, anchor_b: b, margin });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// The solver stopped early; `value` is still the regret of a genuine
    /// rule (a lower bound) and `upper_bound` bounds the optimum from above.
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: f64,
    pub upper_bound: f64,
    pub table: ScoreTable,
    pub status: LpStatus,
    pub iterations: usize,
}

struct Instance {
    anchors: Vec<Vec<f64>>,
    base_index: usize,
    merged_base: bool,
    /// Objective coefficients per `(anchor, outcome)` cell.
    objective: Vec<f64>,
    arity: usize,
}

fn build_instance(t: &Transcript, opts: &LpOptions) -> Result<Instance> {
    let arity = t.arity();
    let groups = t.grouped();
    if groups.len() > opts.max_anchors {
        return Err(validation(format!(
            "{} distinct predictions exceed the configured cap {}",
            groups.len(),
            opts.max_anchors
        )));
    }
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(groups.len() + 1);
    let mut counts: Vec<Vec<usize>> = Vec::with_capacity(groups.len() + 1);
    for group in groups.values() {
        anchors.push(t.prediction(group.first_index).to_vec());
        counts.push(group.outcome_counts.clone());
    }
    let beta = t.base_rate();
    let base_index = anchors.iter().position(|a| a.iter().zip(&beta).all(|(x, y)| x == y));
    let (base_index, merged_base) = match base_index {
        Some(i) => (i, true),
        None => {
            anchors.push(beta);
            counts.push(vec![0; arity]);
            (anchors.len() - 1, false)
        }
    };
    let mut total = vec![0usize; arity];
    for &x in t.outcomes() {
        total[x] += 1;
    }
    let mut objective = vec![0.0; anchors.len() * arity];
    for (a, count) in counts.iter().enumerate() {
        for x in 0..arity {
            let mut c = count[x] as f64;
            if a == base_index {
                c -= total[x] as f64;
            }
            objective[a * arity + x] = c;
        }
    }
    Ok(Instance { anchors, base_index, merged_base, objective, arity })
}

/// Maximizes base-rate regret over all bounded proper scoring rules for the
/// given transcript, exactly, and returns the optimal value table.
///
/// Infeasibility is impossible (the zero table is always feasible). If the
/// pivot budget runs out the solution carries `LpStatus::IterationLimit`
/// together with a valid lower bound (the returned table's regret) and the
/// relaxation upper bound.
pub fn max_agent_reg(t: &Transcript, opts: &LpOptions) -> Result<LpSolution> {
    if opts.epsilon <= 0.0 {
        return Err(validation("epsilon must be positive"));
    }
    let instance = build_instance(t, opts)?;
    let n_anchors = instance.anchors.len();
    let arity = instance.arity;
    let n = n_anchors * arity;

    if opts.slope_bound.is_some() && arity != 2 {
        return Err(validation("slope_bound applies to binary transcripts only"));
    }

    // Variables z = y + 1 in [0, 2]. Properness rows have coefficient sum
    // zero, so their right-hand sides stay zero under the shift.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        rows.push((row, 2.0));
    }
    if let Some(sb) = opts.slope_bound {
        if sb < 0.0 {
            return Err(validation("slope bound must be non-negative"));
        }
        for a in 0..n_anchors {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[a * 2 + 1] = sign;
                row[a * 2] = -sign;
                rows.push((row, sb));
            }
        }
    }

    let cut_tol = 1e-10;
    let mut added = std::collections::HashSet::new();
    let cut_row = |a: usize, b: usize| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; n];
        for x in 0..arity {
            row[a * arity + x] += instance.anchors[a][x];
            row[b * arity + x] -= instance.anchors[a][x];
        }
        (row, 0.0)
    };
    // Seed with the properness rows between consecutive anchors; for binary
    // transcripts these are usually most of the binding set.
    for a in 0..n_anchors.saturating_sub(1) {
        if added.insert((a, a + 1)) {
            rows.push(cut_row(a, a + 1));
        }
        if added.insert((a + 1, a)) {
            rows.push(cut_row(a + 1, a));
        }
    }

    let trace = std::env::var("UCAL_LP_LOG").map(|v| !v.is_empty() && v != "0").unwrap_or(false);
    let max_rounds = 400;
    let mut tableau = simplex::Tableau::new(
        instance.objective.clone(),
        rows,
        opts.epsilon,
        SimplexOptions::default().max_iterations,
    )?;
    let mut status = tableau.optimize()?;

    for round in 0..max_rounds {
        let hit_limit = status == SimplexStatus::IterationLimit;
        let y = shifted(&tableau.x());
        if trace {
            eprintln!(
                "[ucal_lp] round {round}: {} pivots total, value {:.6}",
                tableau.iterations(),
                tableau.value(),
            );
        }

        let mut violations = violated_pairs(&instance.anchors, &y, arity, cut_tol);
        if violations.is_empty() || hit_limit {
            let status = if hit_limit { LpStatus::IterationLimit } else { LpStatus::Optimal };
            return Ok(finish(&instance, y, status, &tableau));
        }
        // A few deepest violated cuts per anchor, so each reoptimization
        // stays close to the previous basis.
        violations.sort_by(|l, r| r.2.total_cmp(&l.2));
        let mut batch: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut per_anchor = vec![0u8; n_anchors];
        for &(a, b, _) in violations.iter() {
            if per_anchor[a] >= 3 {
                continue;
            }
            if added.insert((a, b)) {
                batch.push(cut_row(a, b));
                per_anchor[a] += 1;
            }
        }
        if batch.is_empty() {
            // Every violated pair is already a row: the remaining margins
            // are solver residue, not missing constraints. Within the
            // public membership tolerance that is an optimal table.
            let worst = violations.first().map(|v| v.2).unwrap_or(0.0);
            let status =
                if worst <= 1e-9 { LpStatus::Optimal } else { LpStatus::IterationLimit };
            return Ok(finish(&instance, y, status, &tableau));
        }
        status = tableau.add_rows(&batch)?;
    }

    let y = shifted(&tableau.x());
    Ok(finish(&instance, y, LpStatus::IterationLimit, &tableau))
}

fn shifted(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| (v - 1.0).clamp(-1.0, 1.0)).collect()
}

fn violated_pairs(
    anchors: &[Vec<f64>],
    y: &[f64],
    arity: usize,
    tol: f64,
) -> Vec<(usize, usize, f64)> {
    let inner = |a: usize, p: &[f64]| -> f64 {
        (0..arity).map(|x| p[x] * y[a * arity + x]).sum()
    };
    let mut out = Vec::new();
    for (a, anchor) in anchors.iter().enumerate() {
        let own = inner(a, anchor);
        for b in 0..anchors.len() {
            if a != b {
                let margin = own - inner(b, anchor);
                if margin > tol {
                    out.push((a, b, margin));
                }
            }
        }
    }
    out
}

fn finish(
    instance: &Instance,
    y: Vec<f64>,
    status: LpStatus,
    tableau: &simplex::Tableau,
) -> LpSolution {
    let table = ScoreTable::new(
        instance.anchors.clone(),
        y,
        instance.base_index,
        instance.merged_base,
    )
    .expect("solver table within bounds");
    // Objective of the proper rule the table induces. For an optimal table
    // the exact-match anchor map is a minimizer and the value equals the
    // relaxation optimum; for a non-converged table only the min-form rule
    // is guaranteed proper, so its regret is the honest lower bound.
    let arity = instance.arity;
    let mut value = 0.0;
    for (a, anchor) in instance.anchors.iter().enumerate() {
        let row = match status {
            LpStatus::Optimal => table.anchor_of(anchor),
            LpStatus::IterationLimit => table.anchor_argmin(anchor),
        };
        for x in 0..arity {
            value += instance.objective[a * arity + x] * table.value(row, x);
        }
    }
    // Constant shift from z-space: sum of objective coefficients is the
    // correction between c.z and c.y.
    let coeff_sum: f64 = instance.objective.iter().sum();
    let upper_bound = tableau.value() - coeff_sum;
    LpSolution { value, upper_bound, table, status, iterations: tableau.iterations() }
}

/// The witness rule of an LP solution; its regret on the source transcript
/// equals `sol.value`.
pub fn extract_witness(sol: &LpSolution) -> BivariateRule {
    sol.table.to_rule()
}

/// Plain-text dump of the full LP instance (all properness rows), MPS-like,
/// with deterministic row and column ordering.
pub fn lp_dump(t: &Transcript, opts: &LpOptions) -> Result<String> {
    let instance = build_instance(t, opts)?;
    let arity = instance.arity;
    let n_anchors = instance.anchors.len();
    let mut out = String::new();
    writeln!(out, "NAME MAX_AGENT_REG T={} K={arity} ANCHORS={n_anchors}", t.len()).unwrap();
    writeln!(out, "* base anchor {} merged={}", instance.base_index, instance.merged_base).unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N  OBJ").unwrap();
    for a in 0..n_anchors {
        for b in 0..n_anchors {
            if a != b {
                writeln!(out, " L  PROP_{a}_{b}").unwrap();
            }
        }
    }
    writeln!(out, "COLUMNS").unwrap();
    for a in 0..n_anchors {
        for x in 0..arity {
            let col = format!("Y_{a}_{x}");
            let c = instance.objective[a * arity + x];
            if c != 0.0 {
                writeln!(out, "    {col}  OBJ  {c}").unwrap();
            }
            for other in 0..n_anchors {
                if other != a {
                    // Row PROP_a_b carries +p_a on y_a and -p_a on y_b.
                    writeln!(out, "    {col}  PROP_{a}_{other}  {}", instance.anchors[a][x]).unwrap();
                    writeln!(out, "    {col}  PROP_{other}_{a}  {}", -instance.anchors[other][x])
                        .unwrap();
                }
            }
        }
    }
    writeln!(out, "RHS").unwrap();
    for a in 0..n_anchors {
        for b in 0..n_anchors {
            if a != b {
                writeln!(out, "    RHS  PROP_{a}_{b}  0").unwrap();
            }
        }
    }
    writeln!(out, "BOUNDS").unwrap();
    for a in 0..n_anchors {
        for x in 0..arity {
            writeln!(out, " LO BND  Y_{a}_{x}  -1").unwrap();
            writeln!(out, " UP BND  Y_{a}_{x}  1").unwrap();
        }
    }
    writeln!(out, "ANCHORS").unwrap();
    for (a, anchor) in instance.anchors.iter().enumerate() {
        let coords: Vec<String> = anchor.iter().map(|c| crate::io::fmt_f64(*c)).collect();
        writeln!(out, "    {a}  {}", coords.join(" ")).unwrap();
    }
    writeln!(out, "ENDATA").unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{reg, vcal, Transcript};
    use crate::rng::CounterRng;
    use crate::scoring::{BivariateRule, VShapedRule};

    fn random_binary(t_len: usize, rng: &mut CounterRng) -> Transcript {
        let preds: Vec<f64> = (0..t_len).map(|_| rng.next_f64()).collect();
        let outs: Vec<u8> = (0..t_len).map(|_| (rng.next_f64() < 0.5) as u8).collect();
        Transcript::binary(preds, outs).unwrap()
    }

    #[test]
    fn base_rate_only_transcript_has_zero_value() {
        let t = Transcript::binary(vec![0.5; 8], vec![1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        let sol = max_agent_reg(&t, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.table.merged_base());
        assert!(sol.value.abs() <= 1e-9);
    }

    #[test]
    fn lp_dominates_probed_rules_and_witness_matches() {
        let mut rng = CounterRng::new(41);
        let t = random_binary(30, &mut rng);
        let sol = max_agent_reg(&t, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(membership_check(&sol.table, 1e-9).is_ok());

        let witness = extract_witness(&sol);
        let witness_reg = reg(&witness, &t).unwrap();
        assert!((witness_reg - sol.value).abs() <= 1e-9 * t.len() as f64);

        for rule in [
            BivariateRule::brier(),
            VShapedRule::new(0.3).unwrap().to_bivariate(),
            VShapedRule::new(0.8).unwrap().to_bivariate(),
        ] {
            let r = reg(&rule, &t).unwrap();
            assert!(r <= sol.value + 1e-7, "rule regret {r} exceeds LP value {}", sol.value);
        }
    }

    #[test]
    fn sandwich_against_vcal() {
        let mut rng = CounterRng::new(99);
        for _ in 0..10 {
            let t = random_binary(40, &mut rng);
            let (vc, _) = vcal(&t).unwrap();
            let sol = max_agent_reg(&t, &LpOptions::default()).unwrap();
            assert!(0.5 * sol.value - 1e-9 <= vc, "vcal {vc} below half LP {}", sol.value);
            assert!(vc <= sol.value + 1e-9, "vcal {vc} above LP {}", sol.value);
        }
    }

    #[test]
    fn slope_bound_one_matches_vcal() {
        let mut rng = CounterRng::new(7);
        for _ in 0..5 {
            let t = random_binary(25, &mut rng);
            let (vc, _) = vcal(&t).unwrap();
            let opts = LpOptions { slope_bound: Some(1.0), ..LpOptions::default() };
            let sol = max_agent_reg(&t, &opts).unwrap();
            assert!((sol.value - vc).abs() <= 1e-7 * t.len() as f64, "{} vs {vc}", sol.value);
        }
    }

    #[test]
    fn membership_flags_sign_flipped_row() {
        // Brier restricted to three anchors is proper; negating one row
        // breaks the inequality at that anchor.
        let anchors = vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.2, 0.8]];
        let mut values = Vec::new();
        for anchor in &anchors {
            let p = anchor[1];
            values.push(p * p);
            values.push((1.0 - p) * (1.0 - p));
        }
        let table = ScoreTable::new(anchors.clone(), values.clone(), 1, true).unwrap();
        assert!(membership_check(&table, 1e-9).is_ok());

        // Negating a row makes it spuriously cheap, so the inequalities of
        // the OTHER anchors break against it.
        let mut flipped = values;
        flipped[2] = -flipped[2];
        flipped[3] = -flipped[3];
        let table = ScoreTable::new(anchors, flipped, 1, true).unwrap();
        let violation = membership_check(&table, 1e-9).unwrap_err();
        assert_eq!(violation.anchor_b, 1);
        assert!(violation.margin > 0.0);
    }

    #[test]
    fn zero_table_witness_has_zero_regret() {
        let t = Transcript::binary(vec![0.3, 0.8, 0.5], vec![0, 1, 1]).unwrap();
        let anchors = vec![vec![0.7, 0.3], vec![0.2, 0.8], vec![0.5, 0.5]];
        let table = ScoreTable::new(anchors, vec![0.0; 6], 2, false).unwrap();
        assert!(membership_check(&table, 1e-9).is_ok());
        assert_eq!(reg(&table.to_rule(), &t).unwrap(), 0.0);
    }

    #[test]
    fn multiclass_epoch_fixture_lp() {
        // The normalized two-action agent's rule is feasible, so the LP value
        // is at least its regret T/18; the calibration bound caps it at twice
        // the vector calibration error.
        let fixture = crate::fixtures::gen_multiclass_epochs(90).unwrap();
        let t = &fixture.transcript;
        let sol = max_agent_reg(t, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(membership_check(&sol.table, 1e-9).is_ok());
        let normalized_regret =
            crate::metrics::agent_reg(&fixture.normalized_utility, t).unwrap();
        assert!((normalized_regret - 5.0).abs() <= 1e-9);
        assert!(sol.value >= normalized_regret - 1e-9, "lp {}", sol.value);
        let cal = crate::metrics::cal_l1_multiclass(t);
        assert!(sol.value <= 2.0 * cal + 1e-9, "lp {} vs 2*cal {}", sol.value, 2.0 * cal);
        let witness_reg = reg(&extract_witness(&sol), t).unwrap();
        assert!((witness_reg - sol.value).abs() <= 1e-9 * t.len() as f64);
    }

    #[test]
    fn anchor_cap_is_enforced() {
        let mut rng = CounterRng::new(5);
        let t = random_binary(10, &mut rng);
        let opts = LpOptions { max_anchors: 4, ..LpOptions::default() };
        assert!(max_agent_reg(&t, &opts).is_err());
    }

    #[test]
    fn value_invariant_under_round_permutation() {
        let mut rng = CounterRng::new(13);
        let preds: Vec<f64> = (0..20).map(|_| (rng.next_below(6) as f64) / 5.0).collect();
        let outs: Vec<u8> = (0..20).map(|_| (rng.next_f64() < 0.5) as u8).collect();
        let t = Transcript::binary(preds.clone(), outs.clone()).unwrap();
        let sol = max_agent_reg(&t, &LpOptions::default()).unwrap();

        let mut idx: Vec<usize> = (0..20).collect();
        // Deterministic shuffle.
        for i in (1..idx.len()).rev() {
            let j = rng.next_below(i as u64 + 1) as usize;
            idx.swap(i, j);
        }
        let preds2: Vec<f64> = idx.iter().map(|&i| preds[i]).collect();
        let outs2: Vec<u8> = idx.iter().map(|&i| outs[i]).collect();
        let t2 = Transcript::binary(preds2, outs2).unwrap();
        let sol2 = max_agent_reg(&t2, &LpOptions::default()).unwrap();
        assert!((sol.value - sol2.value).abs() <= 1e-9);
    }

    #[test]
    fn dump_contains_expected_sections() {
        let t = Transcript::binary(vec![0.25, 0.75], vec![0, 1]).unwrap();
        let dump = lp_dump(&t, &LpOptions::default()).unwrap();
        for section in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ANCHORS", "ENDATA"] {
            assert!(dump.contains(section), "missing {section}");
        }
        assert!(dump.contains("PROP_0_1"));
    }
}
