//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Solves `max cᵀx  s.t.  A x = b, x ≥ 0` for small dense problems (a few
//! dozen rows, a few thousand columns). Phase one drives artificial variables
//! out of the basis; the final basic solution is re-solved from the original
//! columns to shed accumulated pivoting error.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

const PIVOT_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 100_000;

/// An optimal basic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic column of each non-redundant constraint row.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

/// Equality-form linear program with a dense row-major constraint matrix.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl LinearProgram {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let (rows, cols) = (b.len(), c.len());
        if rows == 0 || cols == 0 || a.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: a.len(),
            });
        }
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::Lp("non-finite coefficient".into()));
        }
        Ok(Self {
            rows,
            cols,
            a,
            b,
            c,
        })
    }

    /// Builds the program column by column, e.g. from a lazy generator.
    pub fn from_columns<I>(b: Vec<f64>, columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let rows = b.len();
        let mut by_col = Vec::new();
        let mut c = Vec::new();
        for (col, cost) in columns {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: col.len(),
                });
            }
            by_col.push(col);
            c.push(cost);
        }
        let cols = c.len();
        let mut a = alloc::vec![0.0; rows * cols];
        for (j, col) in by_col.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                a[i * cols + j] = *v;
            }
        }
        Self::new(a, b, c)
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        let mut t = Tableau::new(self);
        let artificial_cost: Vec<f64> = (0..t.width)
            .map(|j| if j >= self.cols { -1.0 } else { 0.0 })
            .collect();
        let mut iterations = t.optimize(&artificial_cost, t.width)?;
        let infeasibility: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&j, _)| j >= self.cols)
            .map(|(_, &v)| v)
            .sum();
        let scale = 1.0 + self.b.iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Err(Error::Lp(format!(
                "infeasible (phase-one residual {infeasibility})"
            )));
        }
        t.expel_artificials(self.cols);
        iterations += t.optimize(&self.c, self.cols)?;
        let x = self.polish(&t)?;
        let objective = x.iter().zip(&self.c).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            x,
            objective,
            basis: t.active_rows().map(|i| t.basis[i]).collect(),
            iterations,
        })
    }

    /// Recomputes the basic variables by solving `B x_B = b` on the retained rows.
    fn polish(&self, t: &Tableau) -> Result<Vec<f64>> {
        let rows: Vec<usize> = t.active_rows().collect();
        let basis: Vec<usize> = rows.iter().map(|&i| t.basis[i]).collect();
        let k = rows.len();
        let mut m = alloc::vec![0.0; k * (k + 1)];
        for (r, &i) in rows.iter().enumerate() {
            for (s, &j) in basis.iter().enumerate() {
                m[r * (k + 1) + s] = self.a[t.row_map[i] * self.cols + j];
            }
            m[r * (k + 1) + k] = self.b[t.row_map[i]] * t.sign[i];
            if t.sign[i] < 0.0 {
                for s in 0..k {
                    m[r * (k + 1) + s] = -m[r * (k + 1) + s];
                }
            }
        }
        let mut x = alloc::vec![0.0; self.cols];
        match solve_dense(&mut m, k) {
            Some(xb) if xb.iter().all(|v| *v >= -1e-9) => {
                for (s, &j) in basis.iter().enumerate() {
                    x[j] = xb[s].max(0.0);
                }
            }
            // Fall back to the tableau values if the basis is numerically singular.
            _ => {
                for (s, &i) in rows.iter().enumerate() {
                    x[basis[s]] = t.rhs[i].max(0.0);
                }
            }
        }
        Ok(x)
    }
}

struct Tableau {
    /// Row-major `m × width`.
    body: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    redundant: Vec<bool>,
    row_map: Vec<usize>,
    sign: Vec<f64>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.rows, lp.cols);
        let width = n + m;
        let mut body = alloc::vec![0.0; m * width];
        let mut rhs = alloc::vec![0.0; m];
        let mut sign = alloc::vec![1.0; m];
        for i in 0..m {
            let s = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
            sign[i] = s;
            for j in 0..n {
                body[i * width + j] = s * lp.a[i * n + j];
            }
            body[i * width + n + i] = 1.0;
            rhs[i] = s * lp.b[i];
        }
        Self {
            body,
            rhs,
            basis: (n..n + m).collect(),
            width,
            redundant: alloc::vec![false; m],
            row_map: (0..m).collect(),
            sign,
        }
    }

    fn rows(&self) -> usize {
        self.rhs.len()
    }

    fn active_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows()).filter(|&i| !self.redundant[i])
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.body[i * self.width + j]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        for j in 0..w {
            self.body[row * w + j] /= p;
        }
        self.rhs[row] /= p;
        self.body[row * w + col] = 1.0;
        for i in 0..self.rows() {
            if i == row {
                continue;
            }
            let f = self.at(i, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                let v = self.body[row * w + j];
                if v != 0.0 {
                    self.body[i * w + j] -= f * v;
                }
            }
            self.body[i * w + col] = 0.0;
            self.rhs[i] -= f * self.rhs[row];
            if self.rhs[i] < 0.0 && self.rhs[i] > -PIVOT_TOL {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Runs primal simplex on `cost`, letting only columns `< enter_limit` enter.
    fn optimize(&mut self, cost: &[f64], enter_limit: usize) -> Result<usize> {
        let scale = cost.iter().map(|v| math::abs(*v)).fold(1.0, f64::max);
        let tol = PIVOT_TOL * scale;
        for iteration in 0..MAX_ITERATIONS {
            // Bland: first column with positive reduced cost.
            let entering = (0..enter_limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .active_rows()
                        .map(|i| cost[self.basis[i]] * self.at(i, j))
                        .sum::<f64>();
                reduced > tol
            });
            let Some(col) = entering else {
                return Ok(iteration);
            };
            // Ratio test; ties broken by smallest basic index.
            let mut best: Option<(usize, f64)> = None;
            for i in self.active_rows() {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15
                                || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = best else {
                return Err(Error::Lp(format!("unbounded along column {col}")));
            };
            self.pivot(row, col);
        }
        Err(Error::Lp(format!(
            "no convergence after {MAX_ITERATIONS} pivots"
        )))
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and get dropped.
    fn expel_artificials(&mut self, n: usize) {
        for i in 0..self.rows() {
            if self.basis[i] < n || self.redundant[i] {
                continue;
            }
            match (0..n).find(|&j| math::abs(self.at(i, j)) > PIVOT_TOL && !self.basis.contains(&j))
            {
                Some(j) => self.pivot(i, j),
                None => self.redundant[i] = true,
            }
        }
    }
}

/// Gaussian elimination with partial pivoting on a `k × (k+1)` augmented matrix.
fn solve_dense(m: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let w = k + 1;
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| {
            math::abs(m[a * w + col])
                .partial_cmp(&math::abs(m[b * w + col]))
                .unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if math::abs(m[piv * w + col]) < 1e-14 {
            return None;
        }
        if piv != col {
            for j in 0..w {
                m.swap(piv * w + j, col * w + j);
            }
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = m[r * w + col] / m[col * w + col];
            if f != 0.0 {
                for j in col..w {
                    m[r * w + j] -= f * m[col * w + j];
                }
            }
        }
    }
    Some((0..k).map(|i| m[i * w + k] / m[i * w + i]).collect())
}
