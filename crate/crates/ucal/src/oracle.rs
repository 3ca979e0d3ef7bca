//! Independent brute-force reference implementations used to certify the
//! fast paths and to mint expected test values.
//!
//! Nothing here shares code with the implementations it checks: summation is
//! plain and per-round (no compensation, no grouping), the sign convention is
//! written out locally, and the small-instance polytope optimum is found by
//! enumerating basic solutions rather than by the simplex. Performance is a
//! non-goal.

use crate::error::{validation, Error, Result};
use crate::metrics::Transcript;

/// Direct `O(T)` summation of `l_v(p_t, x_t) - l_v(beta, x_t)` using the
/// sign-function bivariate form of the V-shaped rule (value 0 at `p = v`).
pub fn vreg_naive(v: f64, t: &Transcript) -> Result<f64> {
    if !t.is_binary() {
        return Err(Error::ArityMismatch { expected: 2, got: t.arity() });
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(validation(format!("v = {v} outside [0,1]")));
    }
    let score = |p: f64, x: usize| -> f64 {
        if x == 0 {
            if p > v {
                v
            } else if p < v {
                -v
            } else {
                0.0
            }
        } else if p < v {
            1.0 - v
        } else if p > v {
            -(1.0 - v)
        } else {
            0.0
        }
    };
    let ones = t.outcomes().iter().filter(|&&x| x == 1).count();
    let beta = ones as f64 / t.len() as f64;
    let mut total = 0.0;
    for round in 0..t.len() {
        let x = t.outcome(round);
        total += score(t.binary_pred(round), x);
        total -= score(beta, x);
    }
    Ok(total)
}

/// Brute-force confirmation of V-calibration from [`vreg_naive`] alone.
///
/// V-regret is linear in `v` between breakpoints (the distinct predictions,
/// the base rate and the endpoints), so its supremum over `[0, 1]` is a
/// one-sided limit at an interval endpoint. The oracle never evaluates at a
/// breakpoint: it takes the midpoint and quarter points of every interval —
/// from which the two endpoint limits follow by affine extrapolation — plus
/// `extra_grid` uniform points as a safety net. With the interval interior
/// points present this equals the exact supremum up to summation rounding.
pub fn vcal_grid(t: &Transcript, extra_grid: usize) -> Result<f64> {
    if !t.is_binary() {
        return Err(Error::ArityMismatch { expected: 2, got: t.arity() });
    }
    let mut splits: Vec<f64> = (0..t.len()).map(|r| t.binary_pred(r)).collect();
    let ones = t.outcomes().iter().filter(|&&x| x == 1).count();
    splits.push(ones as f64 / t.len() as f64);
    splits.push(0.0);
    splits.push(1.0);
    splits.sort_by(f64::total_cmp);
    splits.dedup();

    let is_split = |v: f64| splits.binary_search_by(|s| s.total_cmp(&v)).is_ok();
    let mut best = f64::NEG_INFINITY;
    for w in splits.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= b {
            continue;
        }
        let quarter = a + 0.25 * (b - a);
        let mid = a + 0.5 * (b - a);
        let three_quarter = a + 0.75 * (b - a);
        let at_quarter = vreg_naive(quarter, t)?;
        let at_mid = vreg_naive(mid, t)?;
        let at_three_quarter = vreg_naive(three_quarter, t)?;
        best = best.max(at_mid);
        // One-sided limits at the interval endpoints, by linearity.
        best = best.max(2.0 * at_quarter - at_mid);
        best = best.max(2.0 * at_three_quarter - at_mid);
    }
    for i in 0..extra_grid {
        let v = (i as f64 + 0.5) / extra_grid as f64;
        if (0.0..=1.0).contains(&v) && !is_split(v) {
            best = best.max(vreg_naive(v, t)?);
        }
    }
    Ok(best)
}

/// Exact optimum of the U-calibration polytope for tiny binary instances
/// (at most 3 distinct predictions), by enumeration of basic solutions.
pub fn max_agent_reg_vertex(t: &Transcript) -> Result<f64> {
    if !t.is_binary() {
        return Err(Error::ArityMismatch { expected: 2, got: t.arity() });
    }
    // Distinct predictions and per-anchor outcome counts, by sorted value.
    let mut values: Vec<f64> = (0..t.len()).map(|r| t.binary_pred(r)).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.len() > 3 {
        return Err(validation(format!(
            "instance too large: {} distinct predictions (cap 3)",
            values.len()
        )));
    }
    let ones = t.outcomes().iter().filter(|&&x| x == 1).count();
    let beta = ones as f64 / t.len() as f64;
    let mut anchors = values.clone();
    if !anchors.iter().any(|&a| a == beta) {
        anchors.push(beta);
    }
    let n_anchors = anchors.len();
    let dim = 2 * n_anchors;

    // Objective per (anchor, outcome) cell.
    let mut objective = vec![0.0; dim];
    for round in 0..t.len() {
        let p = t.binary_pred(round);
        let x = t.outcome(round);
        let a = anchors.iter().position(|&q| q == p).expect("anchor");
        objective[2 * a + x] += 1.0;
        let b = anchors.iter().position(|&q| q == beta).expect("base anchor");
        objective[2 * b + x] -= 1.0;
    }

    // Constraint rows: coeff . y <= rhs.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..dim {
        let mut up = vec![0.0; dim];
        up[i] = 1.0;
        rows.push((up, 1.0));
        let mut lo = vec![0.0; dim];
        lo[i] = -1.0;
        rows.push((lo, 1.0));
    }
    for a in 0..n_anchors {
        let pa = [1.0 - anchors[a], anchors[a]];
        for b in 0..n_anchors {
            if a == b {
                continue;
            }
            let mut row = vec![0.0; dim];
            row[2 * a] += pa[0];
            row[2 * a + 1] += pa[1];
            row[2 * b] -= pa[0];
            row[2 * b + 1] -= pa[1];
            rows.push((row, 0.0));
        }
    }

    let feasible = |y: &[f64]| -> bool {
        rows.iter().all(|(coeff, rhs)| {
            let lhs: f64 = coeff.iter().zip(y).map(|(c, v)| c * v).sum();
            lhs <= rhs + 1e-9
        })
    };

    // Enumerate dim-subsets of constraints, solve the active system, keep
    // the best feasible basic solution.
    let mut best = f64::NEG_INFINITY;
    let mut chosen: Vec<usize> = (0..dim).collect();
    loop {
        if let Some(y) = solve_square(&chosen, &rows, dim) {
            if feasible(&y) {
                let value: f64 = objective.iter().zip(&y).map(|(c, v)| c * v).sum();
                best = best.max(value);
            }
        }
        // Next combination in lexicographic order.
        let n = rows.len();
        let k = dim;
        let mut i = k;
        loop {
            if i == 0 {
                return if best.is_finite() {
                    Ok(best)
                } else {
                    Err(Error::Solver("no feasible basic solution found".into()))
                };
            }
            i -= 1;
            if chosen[i] != i + n - k {
                chosen[i] += 1;
                for j in i + 1..k {
                    chosen[j] = chosen[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the square system formed by the selected constraint rows at
/// equality. Returns `None` when singular.
fn solve_square(selected: &[usize], rows: &[(Vec<f64>, f64)], dim: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = selected.iter().map(|&i| rows[i].0.clone()).collect();
    let mut b: Vec<f64> = selected.iter().map(|&i| rows[i].1).collect();
    for col in 0..dim {
        let mut pivot = col;
        for r in col + 1..dim {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = 1.0 / a[col][col];
        for r in 0..dim {
            if r == col {
                continue;
            }
            let f = a[r][col] * inv;
            if f != 0.0 {
                for c in col..dim {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..dim).map(|i| b[i] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{vcal, vreg};
    use crate::rng::CounterRng;
    use crate::ucal_lp::{max_agent_reg, LpOptions};

    fn random_binary(t_len: usize, rng: &mut CounterRng) -> Transcript {
        let preds: Vec<f64> = (0..t_len).map(|_| rng.next_f64()).collect();
        let outs: Vec<u8> = (0..t_len).map(|_| (rng.next_f64() < 0.5) as u8).collect();
        Transcript::binary(preds, outs).unwrap()
    }

    #[test]
    fn vreg_naive_agrees_with_fast_path() {
        let mut rng = CounterRng::new(1);
        for _ in 0..200 {
            let t = random_binary(50, &mut rng);
            let v = rng.next_f64();
            let naive = vreg_naive(v, &t).unwrap();
            let fast = vreg(v, &t).unwrap();
            assert!((naive - fast).abs() <= 1e-12, "v={v}: {naive} vs {fast}");
        }
    }

    #[test]
    fn vreg_naive_zero_on_base_rate_transcript() {
        let t = Transcript::binary(vec![0.5; 4], vec![1, 0, 1, 0]).unwrap();
        for k in 0..=10 {
            assert!(vreg_naive(k as f64 / 10.0, &t).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn vcal_grid_agrees_with_exact_vcal() {
        let mut rng = CounterRng::new(2);
        for _ in 0..25 {
            let t = random_binary(40, &mut rng);
            let (exact, _) = vcal(&t).unwrap();
            let grid = vcal_grid(&t, 2001).unwrap();
            assert!((exact - grid).abs() <= 1e-9, "{exact} vs {grid}");
        }
    }

    #[test]
    fn vertex_oracle_trivial_instance() {
        // Single distinct prediction equal to the base rate: value 0.
        let t = Transcript::binary(vec![0.5; 4], vec![1, 0, 1, 0]).unwrap();
        assert!(max_agent_reg_vertex(&t).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn vertex_oracle_matches_lp_on_small_instances() {
        let mut rng = CounterRng::new(3);
        for _ in 0..5 {
            let choices = [0.2, 0.55, 0.9];
            let preds: Vec<f64> = (0..12).map(|_| choices[rng.next_below(2) as usize]).collect();
            let outs: Vec<u8> = (0..12).map(|_| (rng.next_f64() < 0.5) as u8).collect();
            let t = Transcript::binary(preds, outs).unwrap();
            let vertex = max_agent_reg_vertex(&t).unwrap();
            let lp = max_agent_reg(&t, &LpOptions::default()).unwrap();
            assert!((vertex - lp.value).abs() <= 1e-9, "vertex {vertex} vs lp {}", lp.value);
        }
    }

    #[test]
    fn vertex_oracle_certifies_the_wager_regret_on_extremes() {
        // Two anchors at {0, 1} plus the base rate: the optimum dominates the
        // linear regret of the 9-to-1 wager agent.
        let (t, agent) = crate::fixtures::gen_low_brier(40, crate::fixtures::LowBrierVariant::Miss20)
            .unwrap();
        let value = max_agent_reg_vertex(&t).unwrap();
        let wager = crate::metrics::agent_reg(&agent, &t).unwrap();
        assert!((wager - 4.0).abs() <= 1e-9);
        assert!(value >= wager - 1e-9, "vertex value {value} vs wager {wager}");
    }

    #[test]
    fn vertex_oracle_rejects_large_instances() {
        let t = Transcript::binary(vec![0.1, 0.3, 0.5, 0.7], vec![0, 1, 0, 1]).unwrap();
        assert!(max_agent_reg_vertex(&t).is_err());
    }
}
