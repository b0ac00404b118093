//! Dense linear algebra used throughout the analyzer.
//!
//! Everything here works on small dense matrices (dimension at most a few
//! tens), so the routines favour simplicity and accuracy over asymptotics.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Plain dense vector. Dimensions are checked at the call sites that care.
pub type Vector = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded in the objective direction")]
    Unbounded,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{}[", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self[(r, c)])?;
            }
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        if r == 0 {
            return Err(NumericsError::Dimension("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::Dimension("ragged or empty matrix rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("matrix"));
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if rows * cols != data.len() || rows == 0 || cols == 0 {
            return Err(NumericsError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("matrix"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vector {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// Computes `selfᵀ · v` without materializing the transpose.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vector {
        debug_assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    /// Returns `None` when a pivot vanishes.
    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (piv, piv_val) = (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val <= scale * 1e-300 || piv_val == 0.0 {
                return None;
            }
            if piv != col {
                for c in 0..n {
                    a.data.swap(piv * n + c, col * n + c);
                    inv.data.swap(piv * n + c, col * n + c);
                }
            }
            let p = a[(col, col)];
            for c in 0..n {
                a[(col, c)] /= p;
                inv[(col, c)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for c in 0..n {
                    a.data[r * n + c] -= f * a.data[col * n + c];
                    inv.data[r * n + c] -= f * inv.data[col * n + c];
                }
            }
        }
        Some(inv)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm_2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Taylor tail is truncated once terms drop below this (relative to the sum).
const SERIES_EPS: f64 = 1e-18;

/// Matrix exponential `e^{At}` by scaling and squaring with a Taylor core.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::Dimension(format!(
            "matrix exponential of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    if !t.is_finite() {
        return Err(NumericsError::NonFinite("time argument"));
    }
    Ok(expm_scaled(&a.scale(t)))
}

fn expm_scaled(at: &Matrix) -> Matrix {
    let n = at.rows;
    let norm = at.norm_1();
    // Scale until the norm is at most 1/2, where the Taylor series converges fast.
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = at.scale(0.5f64.powi(squarings));
    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=40 {
        term = term.mul(&b).scale(1.0 / k as f64);
        sum = sum.add(&term);
        if term.norm_1() <= SERIES_EPS * sum.norm_1() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

/// Condition estimate above which `phi1` switches to the series form.
pub const PHI1_COND_LIMIT: f64 = 1e12;

/// Computes `A⁻¹(e^{At} − I)`, falling back to `Σ A^k t^{k+1}/(k+1)!` when `A`
/// is singular or badly conditioned.
pub fn phi1(a: &Matrix, t: f64) -> Result<Matrix, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::Dimension(format!(
            "phi1 of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if let Some(inv) = a.inverse() {
        let cond = a.norm_1() * inv.norm_1();
        if cond.is_finite() && cond <= PHI1_COND_LIMIT {
            let e = mat_exp(a, t)?;
            return Ok(inv.mul(&e.sub(&Matrix::identity(n))));
        }
    }
    Ok(phi1_series(a, t))
}

/// The series form evaluated stably: the top-right block of
/// `exp([[A, I], [0, 0]]·t)` equals `Σ_k A^k t^{k+1}/(k+1)!`.
fn phi1_series(a: &Matrix, t: f64) -> Matrix {
    let n = a.rows;
    let mut aug = Matrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            aug[(r, c)] = a[(r, c)] * t;
        }
        aug[(r, n + r)] = t;
    }
    let e = expm_scaled(&aug);
    let mut out = Matrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(r, c)] = e[(r, n + c)];
        }
    }
    out
}

/// `maximize objective·x` subject to `normal_i·x ≤ offset_i`, with `x` free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vector,
    pub constraints: Vec<(Vector, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub argmax: Vector,
}

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;

/// Dense two-phase primal simplex with Bland's rule.
pub fn lp_max(lp: &LinearProgram) -> Result<LpSolution, NumericsError> {
    let n = lp.objective.len();
    if n == 0 {
        return Err(NumericsError::Dimension("zero-dimensional objective".into()));
    }
    if lp.constraints.is_empty() {
        return Err(NumericsError::Dimension("linear program without constraints".into()));
    }
    if let Some((normal, _)) = lp.constraints.iter().find(|(a, _)| a.len() != n) {
        return Err(NumericsError::Dimension(format!(
            "constraint of dimension {} in a {n}-dimensional program",
            normal.len()
        )));
    }
    let mut tab = Tableau::new(lp);
    tab.solve(&lp.objective)
}

struct Tableau {
    /// m rows of `[x⁺ (n) | x⁻ (n) | slack (m) | artificial (m) | rhs]`.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let m = lp.constraints.len();
        let width = 2 * n + 2 * m + 1;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (i, (normal, offset)) in lp.constraints.iter().enumerate() {
            let scale = norm_inf(normal).max(1e-300);
            let mut row = vec![0.0; width];
            let sign = if *offset < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                row[j] = sign * normal[j] / scale;
                row[n + j] = -sign * normal[j] / scale;
            }
            row[2 * n + i] = sign;
            row[width - 1] = sign * offset / scale;
            if sign < 0.0 {
                row[2 * n + m + i] = 1.0;
                basis.push(2 * n + m + i);
            } else {
                basis.push(2 * n + i);
            }
            rows.push(row);
        }
        Tableau { rows, basis, n, m }
    }

    fn width(&self) -> usize {
        2 * self.n + 2 * self.m + 1
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= 2 * self.n + self.m && col < 2 * self.n + 2 * self.m
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let w = self.width();
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for j in 0..w {
                obj[j] -= f * prow[j];
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for the given column costs (maximization).
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut obj = vec![0.0; w];
        obj[..w - 1].copy_from_slice(&cost[..w - 1]);
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * row[j];
                }
            }
        }
        obj
    }

    /// Runs Bland-rule pivoting; returns false on unboundedness.
    fn optimize(&mut self, obj: &mut [f64], allow_artificial: bool) -> bool {
        let w = self.width();
        loop {
            let entering =
                (0..w - 1).find(|&j| obj[j] > PIVOT_EPS && (allow_artificial || !self.is_artificial(j)));
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[w - 1] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c, obj),
                None => return false,
            }
        }
    }

    fn solve(&mut self, objective: &[f64]) -> Result<LpSolution, NumericsError> {
        let (n, m, w) = (self.n, self.m, self.width());
        if self.basis.iter().any(|&b| self.is_artificial(b)) {
            let mut cost = vec![0.0; w];
            for c in cost.iter_mut().skip(2 * n + m).take(m) {
                *c = -1.0;
            }
            let mut obj = self.reduced_costs(&cost);
            self.optimize(&mut obj, true);
            let infeas: f64 = self
                .rows
                .iter()
                .zip(&self.basis)
                .filter(|(_, &b)| self.is_artificial(b))
                .map(|(row, _)| row[w - 1].max(0.0))
                .sum();
            if infeas > FEAS_EPS {
                return Err(NumericsError::Infeasible);
            }
            // Drive remaining zero-valued artificials out of the basis.
            for r in 0..m {
                if self.is_artificial(self.basis[r]) {
                    if let Some(c) =
                        (0..2 * n + m).find(|&c| self.rows[r][c].abs() > PIVOT_EPS)
                    {
                        let mut dummy = vec![0.0; w];
                        self.pivot(r, c, &mut dummy);
                    }
                }
                // Rows that stay artificial are all-zero and therefore redundant.
            }
            for row in self.rows.iter_mut() {
                for v in row.iter_mut().skip(2 * n + m).take(m) {
                    *v = 0.0;
                }
            }
        }
        let mut cost = vec![0.0; w];
        for j in 0..n {
            cost[j] = objective[j];
            cost[n + j] = -objective[j];
        }
        let mut obj = self.reduced_costs(&cost);
        if !self.optimize(&mut obj, false) {
            return Err(NumericsError::Unbounded);
        }
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            let v = self.rows[i][w - 1];
            if b < n {
                x[b] += v;
            } else if b < 2 * n {
                x[b - n] -= v;
            }
        }
        Ok(LpSolution {
            value: dot(objective, &x),
            argmax: x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    /// Plain truncated power series, independent of the scaling path.
    fn series_exp(a: &Matrix, t: f64, terms: usize) -> Matrix {
        let n = a.rows();
        let at = a.scale(t);
        let mut sum = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..terms {
            term = term.mul(&at).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        sum
    }

    fn series_phi1(a: &Matrix, t: f64, terms: usize) -> Matrix {
        let n = a.rows();
        let mut sum = Matrix::zeros(n, n);
        let mut power = Matrix::identity(n);
        let mut fact = 1.0;
        for k in 0..terms {
            fact *= (k + 1) as f64;
            sum = sum.add(&power.scale(t.powi(k as i32 + 1) / fact));
            power = power.mul(a);
        }
        sum
    }

    fn rot() -> Matrix {
        Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&Matrix::zeros(2, 2), 5.0).unwrap();
        assert_eq!(e, Matrix::identity(2));
    }

    #[test]
    fn exp_of_rotation_quarter_turn() {
        let e = mat_exp(&rot(), PI / 2.0).unwrap();
        let oracle = series_exp(&rot(), PI / 2.0, 50);
        assert!(e.max_abs_diff(&oracle) < 1e-12);
        let expected = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(e.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn exp_of_diagonal() {
        let e = mat_exp(&Matrix::diag(&[-0.5, 1.5]), 2.0).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-12 * E);
        assert!((e[(1, 1)] - 3.0f64.exp()).abs() < 1e-12 * 3.0f64.exp());
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn exp_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(mat_exp(&m, 1.0), Err(NumericsError::Dimension(_))));
    }

    #[test]
    fn phi1_special_cases() {
        let p = phi1(&Matrix::zeros(3, 3), 0.7).unwrap();
        assert!(p.max_abs_diff(&Matrix::identity(3).scale(0.7)) < 1e-15);
        let p = phi1(&Matrix::diag(&[1.0]), 1.0).unwrap();
        assert!((p[(0, 0)] - (E - 1.0)).abs() < 1e-12);
        let p = phi1(&rot(), 0.1).unwrap();
        assert!(p.max_abs_diff(&series_phi1(&rot(), 0.1, 50)) < 1e-10);
    }

    #[test]
    fn phi1_series_on_singular_navigation_block() {
        let a = Matrix::from_rows(&[
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.2, 0.1],
            vec![0.0, 0.0, 0.1, -1.2],
        ])
        .unwrap();
        let p = phi1(&a, 0.3).unwrap();
        assert!(p.max_abs_diff(&series_phi1(&a, 0.3, 60)) < 1e-12);
    }

    #[test]
    fn lp_box() {
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            constraints: vec![
                (vec![1.0, 0.0], 1.0),
                (vec![-1.0, 0.0], 1.0),
                (vec![0.0, 1.0], 1.0),
                (vec![0.0, -1.0], 1.0),
            ],
        };
        let s = lp_max(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        assert!((s.argmax[0] - 1.0).abs() < 1e-9);
        assert!(s.argmax[1].abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn lp_triangle() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            constraints: vec![
                (vec![-1.0, 0.0], 0.0),
                (vec![0.0, -1.0], 0.0),
                (vec![1.0, 1.0], 1.0),
            ],
        };
        let s = lp_max(&lp).unwrap();
        // vertices (0,0), (1,0), (0,1) give max 1
        assert!((s.value - 1.0).abs() < 1e-9);
        assert!((s.argmax[0] + s.argmax[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_infeasible_and_unbounded() {
        let lp = LinearProgram {
            objective: vec![0.0, 1.0],
            constraints: vec![(vec![1.0, 0.0], -1.0), (vec![-1.0, 0.0], -1.0)],
        };
        assert_eq!(lp_max(&lp), Err(NumericsError::Infeasible));
        let lp = LinearProgram {
            objective: vec![0.0, 1.0],
            constraints: vec![(vec![1.0, 0.0], 1.0)],
        };
        assert_eq!(lp_max(&lp), Err(NumericsError::Unbounded));
    }

    /// Vertex enumeration for 2D/3D polytopes: intersect every subset of
    /// `dim` constraints and keep feasible points.
    fn vertex_max(cons: &[(Vec<f64>, f64)], c: &[f64]) -> f64 {
        let n = c.len();
        let mut best = f64::NEG_INFINITY;
        let idx: Vec<usize> = (0..cons.len()).collect();
        let mut combo = vec![0usize; n];
        fn rec(
            start: usize,
            depth: usize,
            idx: &[usize],
            combo: &mut Vec<usize>,
            f: &mut dyn FnMut(&[usize]),
        ) {
            if depth == combo.len() {
                f(combo);
                return;
            }
            for i in start..idx.len() {
                combo[depth] = idx[i];
                rec(i + 1, depth + 1, idx, combo, f);
            }
        }
        rec(0, 0, &idx, &mut combo, &mut |sel: &[usize]| {
            let rows: Vec<Vec<f64>> = sel.iter().map(|&i| cons[i].0.clone()).collect();
            let m = Matrix::from_rows(&rows).unwrap();
            if let Some(inv) = m.inverse() {
                let b: Vec<f64> = sel.iter().map(|&i| cons[i].1).collect();
                let x = inv.mul_vec(&b);
                if cons.iter().all(|(a, bi)| dot(a, &x) <= bi + 1e-7) {
                    best = best.max(dot(c, &x));
                }
            }
        });
        best
    }

    fn arb_matrix(n: usize, bound: f64) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-bound..bound, n * n)
            .prop_map(move |d| Matrix::from_row_major(n, n, d).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exp_semigroup(a in arb_matrix(3, 0.66), s in 0.0..1.0f64, t in 0.0..1.0f64) {
            let lhs = mat_exp(&a, s).unwrap().mul(&mat_exp(&a, t).unwrap());
            let rhs = mat_exp(&a, s + t).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }

        #[test]
        fn phi1_consistent_with_exp(a in arb_matrix(3, 1.0), t in 0.01..1.0f64) {
            prop_assume!(a.inverse().map(|i| i.norm_1() * a.norm_1() < 1e6).unwrap_or(false));
            let lhs = phi1(&a, t).unwrap().mul(&a).add(&Matrix::identity(3));
            prop_assert!(lhs.max_abs_diff(&mat_exp(&a, t).unwrap()) < 1e-9);
        }

        #[test]
        fn lp_matches_vertex_enumeration(
            dim in 2usize..=3,
            normals in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 3), 3..8),
            offsets in proptest::collection::vec(0.1..2.0f64, 8),
            obj in proptest::collection::vec(-1.0..1.0f64, 3),
        ) {
            // bounding box keeps the region bounded; random cuts contain the origin
            let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
            for i in 0..dim {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                cons.push((e.clone(), 3.0));
                e[i] = -1.0;
                cons.push((e, 3.0));
            }
            for (k, nrm) in normals.iter().enumerate() {
                cons.push((nrm[..dim].to_vec(), offsets[k]));
            }
            let c = obj[..dim].to_vec();
            let lp = LinearProgram { objective: c.clone(), constraints: cons.clone() };
            let s = lp_max(&lp).unwrap();
            let oracle = vertex_max(&cons, &c);
            prop_assert!((s.value - oracle).abs() < 1e-9, "lp {} oracle {}", s.value, oracle);
        }
    }
}
