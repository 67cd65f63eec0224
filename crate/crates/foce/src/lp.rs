//! Small dense linear programs solved by a two-phase tableau simplex method
//! with Bland's rule.
//!
//! This is deliberately a dense, exact-tableau implementation: the instances
//! in this crate are tiny (equilibrium LPs over a handful of action profiles,
//! coordinate-bounding LPs for polyhedron construction). Bland's rule makes
//! termination unconditional; duals are recovered from the final basis so
//! callers can certify optimality through complementary slackness.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;

/// `min c·x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub objective: DVector<f64>,
    pub a_ub: DMatrix<f64>,
    pub b_ub: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers for the `<=` rows (non-positive at a minimum).
    pub dual_ub: DVector<f64>,
    /// Multipliers for the `=` rows (free sign).
    pub dual_eq: DVector<f64>,
    /// Worst complementary-slackness / dual-feasibility violation.
    pub cs_residual: f64,
}

struct Tableau {
    /// Row-reduced constraint matrix, m x n.
    a: DMatrix<f64>,
    /// Right-hand side, kept non-negative.
    b: DVector<f64>,
    /// Basis: for each row, the index of its basic column.
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.a[(row, col)];
        let m = self.a.nrows();
        let n = self.a.ncols();
        for j in 0..n {
            self.a[(row, j)] /= piv;
        }
        self.b[row] /= piv;
        for i in 0..m {
            if i == row {
                continue;
            }
            let factor = self.a[(i, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                self.a[(i, j)] -= factor * self.a[(row, j)];
            }
            self.b[i] -= factor * self.b[row];
        }
        self.basis[row] = col;
    }

    /// Runs simplex on cost vector `c` over columns `0..active_cols`.
    /// Returns Err on unboundedness.
    fn solve_phase(&mut self, c: &DVector<f64>, active_cols: usize) -> Result<()> {
        loop {
            // Reduced costs r_j = c_j - c_B . (B^-1 A_j); tableau already holds B^-1 A.
            let mut entering = None;
            for j in 0..active_cols {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut r = c[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    if c[bi] != 0.0 {
                        r -= c[bi] * self.a[(i, j)];
                    }
                }
                if r < -PIVOT_TOL {
                    entering = Some(j); // Bland: lowest eligible index
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            // Ratio test, ties broken by lowest basic variable index (Bland).
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.a.nrows() {
                let a_ij = self.a[(i, col)];
                if a_ij > PIVOT_TOL {
                    let ratio = self.b[i] / a_ij;
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - PIVOT_TOL
                                || ((ratio - br).abs() <= PIVOT_TOL
                                    && self.basis[i] < self.basis[bi])
                            {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = best else {
                return Err(Error::Numerical("linear program is unbounded".into()));
            };
            self.pivot(row, col);
        }
    }
}

/// Solves the problem; errors on infeasibility, unboundedness or a failed
/// optimality certificate.
pub fn solve(p: &Problem) -> Result<Solution> {
    let n = p.objective.len();
    let m_ub = p.b_ub.len();
    let m_eq = p.b_eq.len();
    let m = m_ub + m_eq;
    if p.a_ub.ncols() != n && m_ub > 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.a_ub.ncols(),
        });
    }
    if p.a_eq.ncols() != n && m_eq > 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.a_eq.ncols(),
        });
    }

    // Layout: [x (n) | slacks (m_ub) | artificials (m)]
    let n_slack = m_ub;
    let n_total = n + n_slack + m;
    let mut a = DMatrix::zeros(m, n_total);
    let mut b = DVector::zeros(m);
    for i in 0..m_ub {
        for j in 0..n {
            a[(i, j)] = p.a_ub[(i, j)];
        }
        a[(i, n + i)] = 1.0;
        b[i] = p.b_ub[i];
    }
    for i in 0..m_eq {
        for j in 0..n {
            a[(m_ub + i, j)] = p.a_eq[(i, j)];
        }
        b[m_ub + i] = p.b_eq[i];
    }
    // Make b >= 0, then give every row an artificial basic variable.
    for i in 0..m {
        if b[i] < 0.0 {
            for j in 0..(n + n_slack) {
                a[(i, j)] = -a[(i, j)];
            }
            b[i] = -b[i];
        }
        a[(i, n + n_slack + i)] = 1.0;
    }
    let a_full = a.clone();
    let mut t = Tableau {
        a,
        b,
        basis: (0..m).map(|i| n + n_slack + i).collect(),
    };

    // Phase 1: minimize the sum of artificials.
    let mut c1 = DVector::zeros(n_total);
    for j in (n + n_slack)..n_total {
        c1[j] = 1.0;
    }
    t.solve_phase(&c1, n_total)?;
    let phase1: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= n + n_slack)
        .map(|(i, _)| t.b[i])
        .sum();
    if phase1 > FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "linear program infeasible (phase-1 value {phase1:.3e})"
        )));
    }
    // Drive leftover artificials out of the basis where possible.
    for i in 0..m {
        if t.basis[i] >= n + n_slack {
            if let Some(col) = (0..(n + n_slack)).find(|&j| t.a[(i, j)].abs() > PIVOT_TOL) {
                t.pivot(i, col);
            }
        }
    }

    // Phase 2.
    let mut c2 = DVector::zeros(n_total);
    for j in 0..n {
        c2[j] = p.objective[j];
    }
    // Redundant rows may still carry an artificial basic variable (at value 0);
    // forbid artificials from re-entering by pricing them out.
    for j in (n + n_slack)..n_total {
        c2[j] = 1e30;
    }
    t.solve_phase(&c2, n + n_slack)?;

    let mut x = DVector::zeros(n);
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.b[i];
        }
    }
    let objective = p.objective.dot(&x);

    // Duals: y solves B^T y = c_B over the original (un-reduced) columns.
    let mut bmat = DMatrix::zeros(m, m);
    let mut cb = DVector::zeros(m);
    for (i, &bj) in t.basis.iter().enumerate() {
        for r in 0..m {
            bmat[(r, i)] = a_full[(r, bj)];
        }
        cb[i] = if bj < n { p.objective[bj] } else { 0.0 };
    }
    let y = bmat
        .transpose()
        .lu()
        .solve(&cb)
        .ok_or_else(|| Error::Numerical("singular basis while extracting duals".into()))?;
    // Rows whose sign was flipped for b >= 0 flip the dual back.
    let mut y_orig = y.clone();
    for i in 0..m_ub {
        if p.b_ub[i] < 0.0 {
            y_orig[i] = -y[i];
        }
    }
    for i in 0..m_eq {
        if p.b_eq[i] < 0.0 {
            y_orig[m_ub + i] = -y[m_ub + i];
        }
    }
    let dual_ub = DVector::from_fn(m_ub, |i, _| y_orig[i]);
    let dual_eq = DVector::from_fn(m_eq, |i, _| y_orig[m_ub + i]);

    // Complementary slackness / dual feasibility residual.
    let mut res: f64 = 0.0;
    for j in 0..n {
        let mut rc = p.objective[j];
        for i in 0..m_ub {
            rc -= dual_ub[i] * p.a_ub[(i, j)];
        }
        for i in 0..m_eq {
            rc -= dual_eq[i] * p.a_eq[(i, j)];
        }
        res = res.max(-rc); // dual feasibility: rc >= 0
        res = res.max((x[j] * rc).abs()); // complementary slackness
    }
    for i in 0..m_ub {
        let slack = p.b_ub[i] - (p.a_ub.row(i) * &x)[0];
        res = res.max(-slack - FEAS_TOL);
        res = res.max((dual_ub[i] * slack).abs());
        res = res.max(dual_ub[i]); // y_ub <= 0 at a minimum
    }

    Ok(Solution {
        x,
        objective,
        dual_ub,
        dual_eq,
        cs_residual: res,
    })
}

/// Maximizes `c·x` over `{ x : rows x <= offsets }` with `x` free in sign.
///
/// Returns the optimal value. Errors on infeasibility or unboundedness, which
/// is how polyhedron construction detects empty or unbounded input.
pub fn max_linear_over_polyhedron(
    rows: &DMatrix<f64>,
    offsets: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<f64> {
    let d = c.len();
    // Free x via x = u - v with u, v >= 0.
    let m = offsets.len();
    let mut a_ub = DMatrix::zeros(m, 2 * d);
    for i in 0..m {
        for j in 0..d {
            a_ub[(i, j)] = rows[(i, j)];
            a_ub[(i, d + j)] = -rows[(i, j)];
        }
    }
    let mut obj = DVector::zeros(2 * d);
    for j in 0..d {
        obj[j] = -c[j];
        obj[d + j] = c[j];
    }
    let sol = solve(&Problem {
        objective: obj,
        a_ub,
        b_ub: offsets.clone(),
        a_eq: DMatrix::zeros(0, 2 * d),
        b_eq: DVector::zeros(0),
    })?;
    Ok(-sol.objective)
}
