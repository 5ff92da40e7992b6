//! Dense tableau simplex for equality-form LPs whose starting point `x = 0`
//! (or the slack vertex) is already feasible.
//!
//! The solver accepts `maximize cᵀx  s.t.  Ax = b, x >= 0` where every row
//! with `b_i != 0` owns a unit slack column. Rows with `b_i = 0` are given
//! an initial basic column by Gauss-Jordan elimination with partial column
//! pivoting; because their right-hand side is zero, this never moves the
//! basic solution, so no phase-I pass is needed.
//!
//! The certification LPs are fully degenerate at the origin: every pivot
//! before the last leaves the objective at 0. Smallest-index pivoting is
//! available but crawls on them, so the default rule combines Dantzig
//! pricing with a lexicographic ratio test (see [`PivotRule::Stabilised`]).
//! The tableau is rebuilt from the original data every `reinvert_every`
//! pivots and before optimality is declared.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::splitmix64;

#[derive(Debug, Clone)]
pub struct StandardLp {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Pivot selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest index for both the entering and the leaving variable.
    Bland,
    /// Most negative reduced cost enters. Among rows tied at the minimum
    /// ratio, those whose pivot is at least a guard fraction of the largest
    /// tied pivot are ordered lexicographically against an anchor basis.
    /// The guard keeps noise-level pivots out but can stall, so after
    /// `stage_budget` pivots, or as soon as a basis repeats, the next
    /// (smaller) guard takes over, re-anchored at the current basis. The
    /// last guard is 0: the plain lexicographic rule, which cannot cycle.
    Stabilised,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Rebuild the tableau from the original data every this many pivots.
    pub reinvert_every: usize,
    pub pivot_tol: f64,
    pub cost_tol: f64,
    pub rule: PivotRule,
    /// Pivot-size guards for [`PivotRule::Stabilised`], tried in order.
    pub tie_guards: [f64; 3],
    /// Pivots allowed under each guard before moving to the next.
    pub stage_budget: usize,
}

impl SimplexOptions {
    pub fn for_shape(rows: usize, cols: usize) -> Self {
        SimplexOptions {
            max_iterations: 50 * (rows + cols),
            reinvert_every: 500,
            pivot_tol: 1e-9,
            cost_tol: 1e-9,
            rule: PivotRule::Stabilised,
            tie_guards: [0.1, 0.01, 0.0],
            stage_budget: 5 * (rows + cols),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub optimum: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub basis: Vec<usize>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major, `cols + 1` entries per row; the last one is the rhs.
    data: Vec<f64>,
    /// Reduced costs `c_Bᵀ B⁻¹ a_j - c_j`; negative entries improve.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(pr, pc);
        {
            let row = &mut self.data[pr * w..(pr + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[pc] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == pr {
                continue;
            }
            let f = self.data[i * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[pc] = 0.0;
            // Degenerate rows drift below zero by rounding only.
            if row[w - 1] < 0.0 && row[w - 1] > -1e-12 {
                row[w - 1] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }
}

impl Tableau {
    fn reset_objective(&mut self, c: &[f64]) {
        let (m, n) = (self.rows, self.cols);
        for j in 0..=n {
            let mut z = if j < n { -c[j] } else { 0.0 };
            for i in 0..m {
                let cb = c[self.basis[i]];
                if cb != 0.0 {
                    z += cb * self.at(i, j);
                }
            }
            self.obj[j] = z;
        }
        for i in 0..m {
            self.obj[self.basis[i]] = 0.0;
        }
    }

    /// Replace the tableau by `B⁻¹ [A | b]` computed afresh from `lp`.
    fn reinvert(&mut self, lp: &StandardLp) -> Result<()> {
        let (m, n) = (self.rows, self.cols);
        let bmat = DMatrix::from_fn(m, m, |i, k| lp.a[(i, self.basis[k])]);
        let mut rhs = DMatrix::zeros(m, n + 1);
        rhs.view_mut((0, 0), (m, n)).copy_from(&lp.a);
        for i in 0..m {
            rhs[(i, n)] = lp.b[i];
        }
        let sol = bmat
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::NumericalFailure("simplex basis became singular".into()))?;
        let w = n + 1;
        for i in 0..m {
            for j in 0..w {
                self.data[i * w + j] = sol[(i, j)];
            }
        }
        for (i, &bj) in self.basis.clone().iter().enumerate() {
            for k in 0..m {
                self.data[k * w + bj] = if k == i { 1.0 } else { 0.0 };
            }
            let r = &mut self.data[i * w + n];
            if *r < 0.0 && *r > -1e-9 {
                *r = 0.0;
            }
        }
        self.reset_objective(&lp.c);
        Ok(())
    }
}

fn unit_slack_rows(lp: &StandardLp) -> Vec<Option<usize>> {
    let (m, n) = lp.a.shape();
    let mut owner = vec![None; m];
    for j in 0..n {
        let col = lp.a.column(j);
        let mut nz = col.iter().enumerate().filter(|(_, v)| **v != 0.0);
        if let (Some((i, &v)), None) = (nz.next(), nz.next()) {
            if v == 1.0 && owner[i].is_none() && lp.b[i] >= 0.0 {
                owner[i] = Some(j);
            }
        }
    }
    owner
}

pub fn simplex_solve(lp: &StandardLp, opts: &SimplexOptions) -> Result<LpSolution> {
    let (m, n) = lp.a.shape();
    if lp.b.len() != m || lp.c.len() != n {
        return Err(Error::InvalidArgument("LP dimensions do not match".into()));
    }
    let w = n + 1;
    let mut data = vec![0.0; m * w];
    for i in 0..m {
        for j in 0..n {
            data[i * w + j] = lp.a[(i, j)];
        }
        data[i * w + n] = lp.b[i];
    }
    let mut t = Tableau {
        rows: m,
        cols: n,
        data,
        obj: vec![0.0; w],
        basis: vec![usize::MAX; m],
    };

    let slack = unit_slack_rows(lp);
    let mut is_basic = vec![false; n];
    for (i, s) in slack.iter().enumerate() {
        if let Some(j) = *s {
            t.basis[i] = j;
            is_basic[j] = true;
        }
    }
    // Crash the zero-rhs rows into the basis.
    for i in 0..m {
        if slack[i].is_some() {
            continue;
        }
        if lp.b[i] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "row {i} has nonzero rhs but no unit slack; a phase-I start is not supported"
            )));
        }
        let mut best = (0.0, usize::MAX);
        for j in 0..n {
            let v = t.at(i, j).abs();
            if !is_basic[j] && v > best.0 {
                best = (v, j);
            }
        }
        if best.0 <= opts.pivot_tol {
            return Err(Error::NumericalFailure(format!(
                "constraint row {i} is linearly dependent on earlier rows"
            )));
        }
        t.pivot(i, best.1);
        is_basic[best.1] = true;
    }

    t.reset_objective(&lp.c);

    let fingerprint = |basis: &[usize]| {
        basis
            .iter()
            .fold(0u64, |h, &j| h.wrapping_add(splitmix64(j as u64)))
    };
    let mut seen = HashSet::new();
    seen.insert(fingerprint(&t.basis));
    let mut lex_anchor = t.basis.clone();
    let mut stage = 0;
    let mut stage_start = 0;
    let mut guard = opts.tie_guards[0];
    let bland = opts.rule == PivotRule::Bland;

    let mut iterations = 0;
    let mut since_reinvert = 0;
    loop {
        let enter = if bland {
            (0..n).find(|&j| t.obj[j] < -opts.cost_tol)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let z = t.obj[j];
                if z < -opts.cost_tol && best.is_none_or(|(_, bz)| z < bz) {
                    best = Some((j, z));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(enter) = enter else {
            if since_reinvert > 0 {
                // Confirm optimality on a freshly computed tableau.
                t.reinvert(lp)?;
                since_reinvert = 0;
                continue;
            }
            break;
        };
        if iterations >= opts.max_iterations {
            return Err(Error::NumericalFailure(format!(
                "simplex iteration limit {} reached",
                opts.max_iterations
            )));
        }

        let min_ratio = (0..m)
            .filter(|&i| t.at(i, enter) > opts.pivot_tol)
            .map(|i| t.rhs(i).max(0.0) / t.at(i, enter))
            .fold(f64::INFINITY, f64::min);
        if min_ratio == f64::INFINITY {
            return Err(Error::NumericalFailure(format!(
                "LP unbounded along column {enter}"
            )));
        }
        let window = min_ratio + 1e-12 * (1.0 + min_ratio);
        let tied = |i: usize| {
            let a = t.at(i, enter);
            a > opts.pivot_tol && t.rhs(i).max(0.0) / a <= window
        };
        let max_tied = (0..m).filter(|&i| tied(i)).map(|i| t.at(i, enter)).fold(0.0, f64::max);
        let mut pr = usize::MAX;
        for i in 0..m {
            let a = t.at(i, enter);
            if !tied(i) || a < guard * max_tied {
                continue;
            }
            if pr == usize::MAX {
                pr = i;
                continue;
            }
            let better = if bland {
                t.basis[i] < t.basis[pr]
            } else {
                lex_less(&t, &lex_anchor, enter, i, pr)
            };
            if better {
                pr = i;
            }
        }
        t.pivot(pr, enter);
        iterations += 1;
        since_reinvert += 1;
        if since_reinvert >= opts.reinvert_every {
            t.reinvert(lp)?;
            since_reinvert = 0;
        }
        if !bland && stage + 1 < opts.tie_guards.len() {
            let repeated = !seen.insert(fingerprint(&t.basis));
            if repeated || iterations - stage_start >= opts.stage_budget {
                stage += 1;
                stage_start = iterations;
                guard = opts.tie_guards[stage];
                lex_anchor = t.basis.clone();
                seen.clear();
                seen.insert(fingerprint(&t.basis));
                log::debug!("pivot {iterations}: tie guard now {guard} (repeated basis: {repeated})");
            }
        }
    }

    let x = refine_basic_solution(lp, &t);
    let optimum = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    Ok(LpSolution {
        optimum,
        x,
        iterations,
        basis: t.basis,
    })
}

/// Compares rows `i` and `k` of `B⁻¹ B₀ / a_enter` lexicographically, where
/// `B₀` is the anchor basis (whose tableau columns were the identity when
/// it was current).
fn lex_less(t: &Tableau, start_basis: &[usize], enter: usize, i: usize, k: usize) -> bool {
    let (ai, ak) = (t.at(i, enter), t.at(k, enter));
    for &j in start_basis {
        let (u, v) = (t.at(i, j) / ai, t.at(k, j) / ak);
        if (u - v).abs() > 1e-12 * (1.0 + u.abs().max(v.abs())) {
            return u < v;
        }
    }
    t.basis[i] < t.basis[k]
}

/// Recompute the final vertex from the original data: solve `B x_B = b`.
fn refine_basic_solution(lp: &StandardLp, t: &Tableau) -> Vec<f64> {
    let (m, n) = lp.a.shape();
    let mut x = vec![0.0; n];
    let bmat = DMatrix::from_fn(m, m, |i, k| lp.a[(i, t.basis[k])]);
    let rhs = DVector::from_column_slice(&lp.b);
    match bmat.lu().solve(&rhs) {
        Some(xb) if xb.iter().all(|v| v.is_finite()) => {
            for (k, &j) in t.basis.iter().enumerate() {
                x[j] = xb[k].max(0.0);
            }
        }
        _ => {
            for (i, &j) in t.basis.iter().enumerate() {
                x[j] = t.rhs(i).max(0.0);
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &[f64], rows: usize, b: &[f64], c: &[f64]) -> LpSolution {
        let lp = StandardLp {
            a: DMatrix::from_row_slice(rows, c.len(), a),
            b: b.to_vec(),
            c: c.to_vec(),
        };
        simplex_solve(&lp, &SimplexOptions::for_shape(rows, c.len())).unwrap()
    }

    #[test]
    fn single_variable_bound() {
        // max x1  s.t. x1 + s = 1
        let sol = solve(&[1.0, 1.0], 1, &[1.0], &[1.0, 0.0]);
        assert_eq!(sol.optimum, 1.0);
        assert_eq!(sol.x, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_objective_stays_at_origin() {
        let sol = solve(&[1.0, -1.0, 0.0, 1.0, 1.0, 1.0], 2, &[0.0, 1.0], &[0.0; 3]);
        assert_eq!(sol.optimum, 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn textbook_two_variable_problem() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> 36 at (2, 6)
        let a = [
            1.0, 0.0, 1.0, 0.0, 0.0, //
            0.0, 2.0, 0.0, 1.0, 0.0, //
            3.0, 2.0, 0.0, 0.0, 1.0,
        ];
        let sol = solve(&a, 3, &[4.0, 12.0, 18.0], &[3.0, 5.0, 0.0, 0.0, 0.0]);
        assert!((sol.optimum - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn certifier_shaped_instance() {
        // A = [1 1 -1], I = {0,1}, I_c = {2}: vars x0 x1 x2+ x2- s.
        let r = 1.0 / 3f64.sqrt();
        let a = [
            r, r, -r, r, 0.0, //
            1.0, 1.0, 0.0, 0.0, 1.0,
        ];
        let sol = solve(&a, 2, &[0.0, 1.0], &[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((sol.optimum - 1.0).abs() < 1e-12);
        let x2 = sol.x[2] - sol.x[3];
        assert!((sol.x[0] + sol.x[1] - x2).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let lp = StandardLp {
            a: DMatrix::from_row_slice(1, 2, &[2.0, 1.0]),
            b: vec![1.0],
            c: vec![1.0, 0.0],
        };
        let opts = SimplexOptions {
            max_iterations: 0,
            ..SimplexOptions::for_shape(1, 2)
        };
        assert!(matches!(simplex_solve(&lp, &opts), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn nonzero_rhs_without_slack_is_rejected() {
        let lp = StandardLp {
            a: DMatrix::from_row_slice(1, 2, &[2.0, 3.0]),
            b: vec![1.0],
            c: vec![1.0, 0.0],
        };
        assert!(simplex_solve(&lp, &SimplexOptions::for_shape(1, 2)).is_err());
    }
}
