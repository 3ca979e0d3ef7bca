//! Self-contained dense-tableau simplex with incremental row addition.
//!
//! Solves `maximize c.x subject to A x <= b, x >= 0` with `b >= 0`, so the
//! slack basis is feasible and no phase-1 is needed.
//!
//! The instances this solver exists for (scoring-rule value polytopes) are
//! massively degenerate: most constraints are homogeneous, so vertices carry
//! hundreds of zero-slack rows and naive pivoting stalls or cycles. Two
//! devices keep it moving:
//!
//! - the ratio test runs on a deterministically perturbed copy of the
//!   right-hand side, which makes the vertices generic, while the true
//!   right-hand side is carried through the same row operations in a second
//!   column; reduced costs do not depend on the right-hand side, so once the
//!   perturbed run is optimal a short dual-simplex pass restores primal
//!   feasibility of the true column and the exact true optimum is read off;
//! - if that transfer fails numerically, the solve repeats unperturbed with
//!   Dantzig pivoting guarded by a temporary Bland mode.
//!
//! [`Tableau`] additionally supports appending constraint rows to an optimal
//! basis (the new rows are reduced against the basis and their slacks enter
//! it) followed by dual-simplex reoptimization — the natural engine for
//! cutting-plane loops, which would otherwise re-solve from scratch every
//! round.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DenseLp {
    /// Objective coefficients, length `n`.
    pub objective: Vec<f64>,
    /// Constraint rows, each of length `n`.
    pub rows: Vec<Vec<f64>>,
    /// Right-hand sides, all non-negative.
    pub rhs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

pub struct SimplexOptions {
    /// Reduced-cost optimality tolerance.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tol: 1e-9, max_iterations: 200_000 }
    }
}

// Pivot elements below this are treated as zero. The instances this solver
// sees are O(1)-scaled, and accepting noise-sized pivots on the many
// degenerate zero-rhs rows corrupts the tableau.
const PIVOT_TOL: f64 = 1e-7;
// Entries this small after a pivot are elimination residue; flushing them
// keeps degenerate rows exactly degenerate.
const FLUSH_TOL: f64 = 1e-11;
// Scale of the anti-degeneracy right-hand-side perturbation.
const PERTURBATION: f64 = 1e-7;

/// One-shot solve.
pub fn solve(lp: &DenseLp, opts: &SimplexOptions) -> Result<SimplexSolution> {
    let mut tableau = Tableau::new(
        lp.objective.clone(),
        lp.rows.iter().cloned().zip(lp.rhs.iter().copied()).collect(),
        opts.tol,
        opts.max_iterations,
    )?;
    let status = tableau.optimize()?;
    Ok(tableau.solution(status))
}

#[inline]
fn mix(i: u64) -> f64 {
    // Deterministic pseudo-random factor in [1, 2).
    let mut z = i.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 31;
    1.0 + (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Dense simplex tableau over `[structural | slacks | true rhs | ratio rhs]`
/// columns. The ratio column is the perturbed right-hand side the ratio test
/// runs on; the true column yields the reported solution.
pub struct Tableau {
    objective: Vec<f64>,
    n: usize,
    slacks: usize,
    tab: Vec<Vec<f64>>,
    /// Reduced costs over `[structural | slacks]`.
    cost: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    tol: f64,
    max_iterations: usize,
    /// Perturbation stream position (each constraint row consumes one).
    row_counter: u64,
    /// Original constraint data, kept for the unperturbed rebuild.
    original: Vec<(Vec<f64>, f64)>,
    perturbed: bool,
}

impl Tableau {
    pub fn new(
        objective: Vec<f64>,
        rows: Vec<(Vec<f64>, f64)>,
        tol: f64,
        max_iterations: usize,
    ) -> Result<Self> {
        Self::build(objective, rows, tol, max_iterations, true)
    }

    fn build(
        objective: Vec<f64>,
        rows: Vec<(Vec<f64>, f64)>,
        tol: f64,
        max_iterations: usize,
        perturbed: bool,
    ) -> Result<Self> {
        let n = objective.len();
        let m = rows.len();
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            if coeffs.len() != n {
                return Err(Error::Solver(format!(
                    "row {i} has {} coefficients, want {n}",
                    coeffs.len()
                )));
            }
            if *rhs < 0.0 {
                return Err(Error::Solver(format!("negative rhs {rhs} in row {i}")));
            }
        }
        let width = n + m + 2;
        let mut tab = Vec::with_capacity(m);
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(coeffs);
            row[n + i] = 1.0;
            row[width - 2] = *rhs;
            row[width - 1] = if perturbed {
                rhs + PERTURBATION * (1.0 + rhs) * mix(i as u64)
            } else {
                *rhs
            };
            tab.push(row);
        }
        let mut cost = vec![0.0; n + m];
        cost[..n].copy_from_slice(&objective);
        Ok(Tableau {
            objective,
            n,
            slacks: m,
            tab,
            cost,
            basis: (n..n + m).collect(),
            iterations: 0,
            tol,
            max_iterations,
            row_counter: m as u64,
            original: rows,
            perturbed,
        })
    }

    fn true_col(&self) -> usize {
        self.n + self.slacks
    }

    fn ratio_col(&self) -> usize {
        self.n + self.slacks + 1
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn x(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        let true_col = self.true_col();
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                // Degenerate bases can leave harmless negative dust.
                x[b] = self.tab[i][true_col].max(0.0);
            }
        }
        x
    }

    pub fn value(&self) -> f64 {
        dot(&self.objective, &self.x())
    }

    pub fn solution(&self, status: SimplexStatus) -> SimplexSolution {
        SimplexSolution { status, x: self.x(), value: self.value(), iterations: self.iterations }
    }

    /// Runs to optimality on the true right-hand side: primal simplex on the
    /// perturbed column, dual cleanup for the true column, and an
    /// unperturbed Bland-guarded rebuild if the transfer fails.
    pub fn optimize(&mut self) -> Result<SimplexStatus> {
        let status = self.primal()?;
        if status == SimplexStatus::Optimal
            && self.dual_fix()
            && self.primal()? == SimplexStatus::Optimal
            && self.feasible()
        {
            return Ok(SimplexStatus::Optimal);
        }
        if !self.perturbed {
            return Ok(status);
        }
        // Rebuild unperturbed from the accumulated constraint data.
        let rebuilt = Tableau::build(
            self.objective.clone(),
            std::mem::take(&mut self.original),
            self.tol,
            self.max_iterations,
            false,
        )?;
        let prior = self.iterations;
        *self = rebuilt;
        self.iterations = prior;
        self.primal()
    }

    /// Primal simplex loop. With a perturbed ratio column Dantzig pivoting
    /// makes strict progress; unperturbed, a temporary Bland mode breaks
    /// degenerate stalls.
    fn primal(&mut self) -> Result<SimplexStatus> {
        let mut objective_value = f64::NEG_INFINITY;
        let mut stall = 0usize;
        let stall_limit = 128;
        let mut bland = false;
        let ncols = self.n + self.slacks;
        loop {
            let entering = if bland {
                (0..ncols).find(|&j| self.cost[j] > self.tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for (j, &c) in self.cost.iter().enumerate() {
                    if c > self.tol && best.map_or(true, |(_, bc)| c > bc) {
                        best = Some((j, c));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(SimplexStatus::Optimal);
            };
            if self.iterations >= self.max_iterations {
                return Ok(SimplexStatus::IterationLimit);
            }

            // Ratio test. Ties resolve to the largest pivot element for
            // stability, except in Bland mode where the smallest basic
            // variable index is required for the anti-cycling guarantee.
            let ratio_col = self.ratio_col();
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.tab.iter().enumerate() {
                let a = row[col];
                if a > PIVOT_TOL {
                    let ratio = row[ratio_col] / a;
                    match leaving {
                        None => leaving = Some((i, ratio)),
                        Some((li, lr)) => {
                            let tied = ratio < lr + 1e-12;
                            let better_tie = if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                a > self.tab[li][col]
                            };
                            if ratio < lr - 1e-12 || (tied && better_tie) {
                                leaving = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pivot_row, _)) = leaving else {
                return Err(Error::Solver("unbounded objective".into()));
            };
            self.pivot(pivot_row, col);

            if !self.perturbed {
                let new_value = self.value();
                if new_value > objective_value + 1e-12 {
                    objective_value = new_value;
                    stall = 0;
                    bland = false;
                } else {
                    stall += 1;
                    if stall > stall_limit {
                        bland = true;
                    }
                }
            }
        }
    }

    /// Dual simplex on the true right-hand-side column: restores primal
    /// feasibility while keeping every reduced cost non-positive. Returns
    /// false when it cannot finish (numerics), signalling a rebuild.
    fn dual_fix(&mut self) -> bool {
        let budget = 4 * (self.tab.len() + self.n + self.slacks) + 1000;
        let true_col = self.true_col();
        for _ in 0..budget {
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.tab.iter().enumerate() {
                let v = row[true_col];
                if v < -1e-9 && leaving.map_or(true, |(_, lv)| v < lv) {
                    leaving = Some((i, v));
                }
            }
            let Some((row_idx, _)) = leaving else {
                return true;
            };
            // Dual ratio test over negative coefficients.
            let mut entering: Option<(usize, f64)> = None;
            for (j, &c) in self.cost.iter().enumerate() {
                let a = self.tab[row_idx][j];
                if a < -PIVOT_TOL {
                    let ratio = c.min(0.0) / a; // >= 0
                    if entering.map_or(true, |(_, er)| ratio < er) {
                        entering = Some((j, ratio));
                    }
                }
            }
            let Some((col, _)) = entering else {
                return false;
            };
            self.pivot(row_idx, col);
        }
        false
    }

    /// Appends constraint rows (`coeffs . x <= rhs`, coefficients over the
    /// structural variables) to the current basis and reoptimizes. The new
    /// rows enter with their slacks basic — typically primal-infeasible but
    /// dual-feasible — so a dual pass completes the reoptimization.
    pub fn add_rows(&mut self, new_rows: &[(Vec<f64>, f64)]) -> Result<SimplexStatus> {
        if new_rows.is_empty() {
            return Ok(SimplexStatus::Optimal);
        }
        for (coeffs, rhs) in new_rows {
            if coeffs.len() != self.n {
                return Err(Error::Solver(format!(
                    "appended row has {} coefficients, want {}",
                    coeffs.len(),
                    self.n
                )));
            }
            if *rhs < 0.0 {
                return Err(Error::Solver(format!("negative rhs {rhs} in appended row")));
            }
            self.original.push((coeffs.clone(), *rhs));

            // New slack column sits between the existing slacks and the two
            // right-hand-side columns.
            let slack_pos = self.n + self.slacks;
            for row in self.tab.iter_mut() {
                row.insert(slack_pos, 0.0);
            }
            self.cost.push(0.0);
            self.slacks += 1;

            let width = self.n + self.slacks + 2;
            let mut row = vec![0.0; width];
            row[..self.n].copy_from_slice(coeffs);
            row[slack_pos] = 1.0;
            row[width - 2] = *rhs;
            row[width - 1] = *rhs
                + if self.perturbed {
                    PERTURBATION * (1.0 + rhs) * mix(self.row_counter)
                } else {
                    0.0
                };
            self.row_counter += 1;

            // Reduce against the basis so existing basic columns stay basic.
            for i in 0..self.tab.len() {
                let factor = row[self.basis[i]];
                if factor != 0.0 {
                    for (v, &p) in row.iter_mut().zip(&self.tab[i]) {
                        *v -= factor * p;
                    }
                    row[self.basis[i]] = 0.0;
                }
            }
            for v in row.iter_mut() {
                if v.abs() < FLUSH_TOL {
                    *v = 0.0;
                }
            }
            row[slack_pos] = 1.0;
            self.tab.push(row);
            self.basis.push(slack_pos);
        }

        if self.dual_fix() && self.primal()? == SimplexStatus::Optimal && self.feasible() {
            return Ok(SimplexStatus::Optimal);
        }
        // Numerics got in the way: rebuild from the accumulated rows.
        let rebuilt = Tableau::build(
            self.objective.clone(),
            std::mem::take(&mut self.original),
            self.tol,
            self.max_iterations,
            true,
        )?;
        let prior = self.iterations;
        *self = rebuilt;
        self.iterations += prior;
        self.optimize()
    }

    fn feasible(&self) -> bool {
        let true_col = self.true_col();
        self.tab.iter().all(|row| row[true_col] >= -1e-9)
    }

    fn pivot(&mut self, pivot_row: usize, col: usize) {
        let deep_flush = self.iterations % 16 == 0;
        let ratio_col = self.ratio_col();
        let inv = 1.0 / self.tab[pivot_row][col];
        for v in self.tab[pivot_row].iter_mut() {
            *v *= inv;
        }
        self.tab[pivot_row][col] = 1.0;
        let pr = self.tab[pivot_row].clone();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == pivot_row {
                continue;
            }
            let factor = row[col];
            if factor != 0.0 {
                for (v, &p) in row.iter_mut().zip(&pr) {
                    *v -= factor * p;
                }
                row[col] = 0.0;
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for (v, &p) in self.cost.iter_mut().zip(&pr) {
                *v -= factor * p;
            }
            self.cost[col] = 0.0;
        }
        for row in self.tab.iter_mut() {
            if deep_flush {
                for v in row.iter_mut() {
                    if v.abs() < FLUSH_TOL {
                        *v = 0.0;
                    }
                }
            }
            // The ratio column must stay non-negative, and noise-sized
            // residues there cause endless micro-ratio pivots on degenerate
            // rows.
            let rhs = &mut row[ratio_col];
            if rhs.abs() < FLUSH_TOL || (*rhs < 0.0 && *rhs > -1e-9) {
                *rhs = 0.0;
            }
        }
        if deep_flush {
            for v in self.cost.iter_mut() {
                if v.abs() < FLUSH_TOL {
                    *v = 0.0;
                }
            }
        }
        self.basis[pivot_row] = col;
        self.iterations += 1;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_default(obj: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> SimplexSolution {
        solve(&DenseLp { objective: obj, rows, rhs }, &SimplexOptions::default()).unwrap()
    }

    #[test]
    fn box_optimum() {
        let s = solve_default(
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 2.0],
        );
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn simple_polytope_vertex() {
        // max 2x + 3y, x + y <= 4, x + 3y <= 6 -> (3, 1), value 9.
        let s = solve_default(
            vec![2.0, 3.0],
            vec![vec![1.0, 1.0], vec![1.0, 3.0]],
            vec![4.0, 6.0],
        );
        assert!((s.value - 9.0).abs() < 1e-9);
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_rows_still_terminate() {
        // Duplicate and zero-rhs constraints force degenerate pivots.
        let s = solve_default(
            vec![1.0, 1.0, 0.0],
            vec![
                vec![1.0, -1.0, 0.0],
                vec![1.0, -1.0, 0.0],
                vec![-1.0, 1.0, 0.0],
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            vec![0.0, 0.0, 0.0, 2.0, 2.0],
        );
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn solution_is_exact_despite_perturbation() {
        // The perturbed ratio column must not leak into the answer: the
        // optimum of this square system is the exact vertex (1, 2).
        let s = solve_default(
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 2.0, 3.0],
        );
        assert_eq!(s.x[0], 1.0);
        assert_eq!(s.x[1], 2.0);
        assert_eq!(s.value, 3.0);
    }

    #[test]
    fn detects_unbounded() {
        let lp = DenseLp {
            objective: vec![1.0, 0.0],
            rows: vec![vec![0.0, 1.0]],
            rhs: vec![1.0],
        };
        assert!(solve(&lp, &SimplexOptions::default()).is_err());
    }

    #[test]
    fn zero_objective_is_optimal_at_origin() {
        let s = solve_default(vec![0.0, 0.0], vec![vec![1.0, 1.0]], vec![1.0]);
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn incremental_rows_match_from_scratch() {
        // Cutting rows into an optimal tableau must land on the same optimum
        // as solving the full system outright.
        let mut rng = crate::rng::CounterRng::new(5);
        for _ in 0..25 {
            let n = 3 + rng.next_below(4) as usize;
            let objective: Vec<f64> = (0..n).map(|_| rng.next_range_f64(-1.0, 1.0)).collect();
            let mut rows: Vec<(Vec<f64>, f64)> = (0..n)
                .map(|i| {
                    let mut r = vec![0.0; n];
                    r[i] = 1.0;
                    (r, 2.0)
                })
                .collect();
            let extra: Vec<(Vec<f64>, f64)> = (0..2 * n)
                .map(|_| {
                    let coeffs: Vec<f64> =
                        (0..n).map(|_| rng.next_range_f64(-1.0, 1.0)).collect();
                    (coeffs, rng.next_range_f64(0.0, 1.0))
                })
                .collect();

            let mut incremental =
                Tableau::new(objective.clone(), rows.clone(), 1e-9, 100_000).unwrap();
            assert_eq!(incremental.optimize().unwrap(), SimplexStatus::Optimal);
            assert_eq!(incremental.add_rows(&extra).unwrap(), SimplexStatus::Optimal);

            rows.extend(extra.iter().cloned());
            let (full_rows, full_rhs): (Vec<Vec<f64>>, Vec<f64>) = rows.into_iter().unzip();
            let full = solve(
                &DenseLp { objective, rows: full_rows, rhs: full_rhs },
                &SimplexOptions::default(),
            )
            .unwrap();
            assert!(
                (incremental.value() - full.value).abs() <= 1e-8,
                "incremental {} vs full {}",
                incremental.value(),
                full.value
            );
        }
    }
}
