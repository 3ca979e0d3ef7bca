//! Shared generators for the integration suites.

use ucal::metrics::Transcript;
use ucal::rng::CounterRng;
use ucal::scoring::PLScoringRule;

pub fn random_binary_continuous(t_len: usize, rng: &mut CounterRng) -> Transcript {
    let preds: Vec<f64> = (0..t_len).map(|_| rng.next_f64()).collect();
    let outs: Vec<u8> = (0..t_len).map(|_| (rng.next_f64() < 0.5) as u8).collect();
    Transcript::binary(preds, outs).unwrap()
}

/// Predictions drawn from a small grid so groups carry several rounds.
pub fn random_binary_grid(t_len: usize, levels: u64, rng: &mut CounterRng) -> Transcript {
    let preds: Vec<f64> = (0..t_len)
        .map(|_| rng.next_below(levels) as f64 / (levels - 1) as f64)
        .collect();
    let outs: Vec<u8> = (0..t_len).map(|_| (rng.next_f64() < 0.5) as u8).collect();
    Transcript::binary(preds, outs).unwrap()
}

pub fn random_multiclass(t_len: usize, arity: usize, rng: &mut CounterRng) -> Transcript {
    let mut preds = Vec::with_capacity(t_len * arity);
    for _ in 0..t_len {
        // Dirichlet(1,...,1) via normalized exponentials.
        let raw: Vec<f64> = (0..arity).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
        let total: f64 = raw.iter().sum();
        preds.extend(raw.into_iter().map(|x| x / total));
    }
    let outs: Vec<usize> = (0..t_len).map(|_| rng.next_below(arity as u64) as usize).collect();
    Transcript::multiclass(arity, preds, outs).unwrap()
}

pub fn random_utility(actions: usize, arity: usize, rng: &mut CounterRng) -> ucal::agents::UtilityMatrix {
    let rows: Vec<Vec<f64>> = (0..actions)
        .map(|_| (0..arity).map(|_| rng.next_range_f64(-1.0, 1.0)).collect())
        .collect();
    ucal::agents::UtilityMatrix::new(rows).unwrap()
}

/// Random concave piecewise-linear rule in the bounded class: decreasing
/// slopes integrated from a random start, rescaled into the box.
pub fn random_pl_rule(rng: &mut CounterRng) -> PLScoringRule {
    let k = 1 + rng.next_below(5) as usize;
    let mut bps: Vec<f64> = (0..k).map(|_| rng.next_range_f64(0.05, 0.95)).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let mut slopes: Vec<f64> = (0..=bps.len()).map(|_| rng.next_range_f64(-2.0, 2.0)).collect();
    slopes.sort_by(f64::total_cmp);
    slopes.reverse();
    let mut knots = vec![0.0];
    knots.extend_from_slice(&bps);
    knots.push(1.0);
    let mut values = vec![rng.next_range_f64(-0.5, 0.5)];
    for i in 0..slopes.len() {
        let last = *values.last().unwrap();
        values.push(last + slopes[i] * (knots[i + 1] - knots[i]));
    }
    let mut max_abs = 0.0f64;
    for i in 0..slopes.len() {
        let intercept = values[i] - knots[i] * slopes[i];
        max_abs = max_abs.max(intercept.abs()).max((intercept + slopes[i]).abs());
    }
    // Margin keeps the scaled rule strictly inside the box despite rounding.
    let scale = if max_abs > 1.0 { (1.0 - 1e-9) / max_abs } else { 1.0 };
    let values = values.into_iter().map(|v| v * scale).collect();
    PLScoringRule::new(bps, values).expect("random bounded concave rule")
}
