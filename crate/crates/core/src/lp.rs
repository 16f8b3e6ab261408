//! Dense bounded-variable primal simplex for
//!
//! ```text
//! minimize  cᵀx   subject to   A x = b,   l <= x <= u
//! ```
//!
//! with finite bounds. All set queries in this crate (support functions,
//! feasibility, point membership) reduce to this form because generator
//! coefficients live in boxes.
//!
//! A solved [`Simplex`] keeps its tableau, so further objectives over the same
//! feasible region are warm-started from the last optimal basis. Every optimum
//! also yields Lagrange multipliers, from which [`BoxLp::dual_bound`] gives a
//! bound on the optimal value that holds whatever the accuracy of the pivots.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
/// Absolute feasibility tolerance of the phase-one objective (scaled by the
/// right-hand side magnitude).
pub const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 40;
const REFACTOR_ROUNDS: usize = 4;
/// Equality residual (relative to `|b|`) beyond which a warm basis is discarded.
const DRIFT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("linear program data has inconsistent dimensions")]
    Dimension,
    #[error("variable bounds must be finite with lower <= upper")]
    Bounds,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

/// Problem data of a box-bounded equality LP.
#[derive(Clone, Debug)]
pub struct BoxLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl BoxLp {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, LpError> {
        let n = a.ncols();
        if a.nrows() != b.len() || lower.len() != n || upper.len() != n {
            return Err(LpError::Dimension);
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(LpError::Bounds);
        }
        Ok(BoxLp { a, b, lower, upper })
    }

    /// All variables in `[-1, 1]`.
    pub fn unit_box(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, LpError> {
        let n = a.ncols();
        BoxLp::new(a, b, DVector::from_element(n, -1.0), DVector::from_element(n, 1.0))
    }

    pub fn nvars(&self) -> usize {
        self.a.ncols()
    }

    /// Lower bound on `min cᵀx` valid for any multiplier vector `y`:
    /// `yᵀb + Σ_j min((c - Aᵀy)_j l_j, (c - Aᵀy)_j u_j)`.
    pub fn dual_bound(&self, c: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let r = c - self.a.tr_mul(y);
        let mut v = y.dot(&self.b);
        for j in 0..r.len() {
            let rj = r[j];
            v += if rj >= 0.0 { rj * self.lower[j] } else { rj * self.upper[j] };
        }
        v
    }

    /// Largest violation of `A x = b` and of the bounds.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        let eq = (&self.a * x - &self.b).amax();
        let mut bd: f64 = 0.0;
        for j in 0..x.len() {
            bd = bd.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        eq.max(bd)
    }
}

/// Optimal point of a solved objective.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: DVector<f64>,
    /// Primal objective at `x`.
    pub value: f64,
    /// Rigorous lower bound on the minimum computed from the multipliers.
    pub bound: f64,
    pub duals: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

/// Simplex state for one feasible region.
#[derive(Clone, Debug)]
pub struct Simplex {
    lp: BoxLp,
    m: usize,
    n: usize,
    cols: usize,
    tab: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    width: Vec<f64>,
    row_sign: Vec<f64>,
    feasible: bool,
}

impl Simplex {
    /// Runs phase one. Returns `Ok(None)` when the region is empty.
    pub fn new(lp: BoxLp) -> Result<Option<Self>, LpError> {
        let mut s = Simplex::setup(lp);
        s.phase_one()?;
        Ok(if s.feasible { Some(s) } else { None })
    }

    /// Shortcut: is `{x : Ax = b, l <= x <= u}` nonempty?
    pub fn is_feasible(lp: BoxLp) -> Result<bool, LpError> {
        Ok(Simplex::new(lp)?.is_some())
    }

    pub fn problem(&self) -> &BoxLp {
        &self.lp
    }

    fn setup(lp: BoxLp) -> Self {
        let m = lp.a.nrows();
        let n = lp.a.ncols();
        let cols = n + m;
        let shifted = &lp.b - &lp.a * &lp.lower;
        let mut tab = vec![0.0; m * cols];
        let mut beta = vec![0.0; m];
        let mut row_sign = vec![1.0; m];
        for i in 0..m {
            let sgn = if shifted[i] < 0.0 { -1.0 } else { 1.0 };
            row_sign[i] = sgn;
            beta[i] = sgn * shifted[i];
            for j in 0..n {
                tab[i * cols + j] = sgn * lp.a[(i, j)];
            }
            tab[i * cols + n + i] = 1.0;
        }
        let mut width = Vec::with_capacity(cols);
        for j in 0..n {
            width.push(lp.upper[j] - lp.lower[j]);
        }
        width.extend(core::iter::repeat_n(f64::INFINITY, m));
        let mut status = vec![Status::AtLower; cols];
        for i in 0..m {
            status[n + i] = Status::Basic;
        }
        Simplex {
            lp,
            m,
            n,
            cols,
            tab,
            beta,
            basis: (n..n + m).collect(),
            status,
            width,
            row_sign,
            feasible: false,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * self.cols..(i + 1) * self.cols];
                for (dj, &t) in d.iter_mut().zip(row) {
                    *dj -= cb * t;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        d
    }

    /// Rebuilds the tableau and basic values from the original data for the
    /// current basis, discarding the error accumulated by the pivots. Leaves
    /// the state untouched when the basis matrix is numerically singular.
    fn refactor(&mut self) {
        let (m, n, cols) = (self.m, self.n, self.cols);
        if m == 0 {
            return;
        }
        let column = |s: &Simplex, j: usize, i: usize| -> f64 {
            if j < n {
                s.row_sign[i] * s.lp.a[(i, j)]
            } else if j - n == i {
                1.0
            } else {
                0.0
            }
        };
        let basis_matrix = DMatrix::from_fn(m, m, |i, k| column(self, self.basis[k], i));
        let lu = basis_matrix.lu();
        let full = DMatrix::from_fn(m, cols, |i, j| column(self, j, i));
        let Some(tab) = lu.solve(&full) else {
            return;
        };
        if tab.iter().any(|v| !v.is_finite()) {
            return;
        }
        let mut rhs = DVector::from_fn(m, |i, _| self.row_sign[i] * (self.lp.b[i] - self.lp.a.row(i).dot(&self.lp.lower.transpose())));
        for j in 0..cols {
            if self.status[j] == Status::AtUpper {
                for i in 0..m {
                    rhs[i] -= column(self, j, i) * self.width[j];
                }
            }
        }
        let Some(beta) = lu.solve(&rhs) else {
            return;
        };
        for i in 0..m {
            for j in 0..cols {
                self.tab[i * cols + j] = tab[(i, j)];
            }
            self.tab[i * cols + self.basis[i]] = 1.0;
            self.beta[i] = beta[i];
        }
    }

    /// Pivots to optimality, then refactors and resumes until the fresh
    /// reduced costs admit no improving column.
    fn solve_with(&mut self, cost: &[f64], phase_one: bool) -> Result<Vec<f64>, LpError> {
        let mut d = self.reduced_costs(cost);
        for _ in 0..REFACTOR_ROUNDS {
            self.iterate(&mut d, phase_one)?;
            self.refactor();
            d = self.reduced_costs(cost);
            if !self.improvable(&d, phase_one) {
                break;
            }
        }
        Ok(d)
    }

    fn improvable(&self, d: &[f64], phase_one: bool) -> bool {
        let limit = if phase_one { self.cols } else { self.n };
        (0..limit).any(|j| {
            self.width[j] > 0.0
                && match self.status[j] {
                    Status::Basic => false,
                    Status::AtLower => -d[j] > COST_TOL,
                    Status::AtUpper => d[j] > COST_TOL,
                }
        })
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        let mut cost = vec![0.0; self.cols];
        for c in cost.iter_mut().skip(self.n) {
            *c = 1.0;
        }
        self.solve_with(&cost, true)?;
        let infeas: f64 = (0..self.m)
            .filter(|&i| self.basis[i] >= self.n)
            .map(|i| self.beta[i].abs())
            .sum();
        let scale = self.lp.b.amax().max(1.0);
        self.feasible = infeas <= FEAS_TOL * scale;
        if !self.feasible {
            return Ok(());
        }
        // Drive remaining (zero-valued) artificials out of the basis where a
        // structural pivot exists; otherwise the row is redundant.
        for i in 0..self.m {
            if self.basis[i] < self.n {
                continue;
            }
            let row = &self.tab[i * self.cols..i * self.cols + self.n];
            let mut best = None;
            let mut best_abs = 1e-9;
            for (j, &t) in row.iter().enumerate() {
                if self.status[j] != Status::Basic && t.abs() > best_abs {
                    best_abs = t.abs();
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let entering_value = if self.status[j] == Status::AtUpper { self.width[j] } else { 0.0 };
                let leaving = self.basis[i];
                self.pivot(i, j, None);
                self.beta[i] = entering_value;
                self.status[leaving] = Status::AtLower;
            }
        }
        for j in self.n..self.cols {
            self.width[j] = 0.0;
        }
        Ok(())
    }

    /// Minimizes `cᵀx` over the region, warm-starting from the current basis.
    pub fn minimize(&mut self, c: &DVector<f64>) -> Result<LpSolution, LpError> {
        debug_assert!(self.feasible);
        if c.len() != self.n {
            return Err(LpError::Dimension);
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.n].copy_from_slice(c.as_slice());
        let mut d = self.solve_with(&cost, false)?;
        let mut x = self.primal();
        if self.lp.residual(&x) > DRIFT_TOL * self.lp.b.amax().max(1.0) {
            // The tableau no longer represents the original rows, so the
            // basis and its duals are meaningless; start over.
            if let Some(fresh) = Simplex::new(self.lp.clone())? {
                *self = fresh;
                d = self.solve_with(&cost, false)?;
                x = self.primal();
            }
        }
        let mut duals = DVector::zeros(self.m);
        for i in 0..self.m {
            duals[i] = -self.row_sign[i] * d[self.n + i];
        }
        let value = c.dot(&x);
        let bound = self.lp.dual_bound(c, &duals);
        Ok(LpSolution { x, value, bound, duals })
    }

    /// Maximizes `cᵀx`; `value`/`bound` are reported for the maximization
    /// (so `bound >= true maximum`).
    pub fn maximize(&mut self, c: &DVector<f64>) -> Result<LpSolution, LpError> {
        let neg = -c;
        let mut s = self.minimize(&neg)?;
        s.value = -s.value;
        s.bound = -s.bound;
        s.duals = -s.duals;
        Ok(s)
    }

    pub fn primal(&self) -> DVector<f64> {
        let mut s = vec![0.0; self.cols];
        for j in 0..self.cols {
            s[j] = match self.status[j] {
                Status::AtLower => 0.0,
                Status::AtUpper => self.width[j],
                Status::Basic => 0.0,
            };
        }
        for i in 0..self.m {
            s[self.basis[i]] = self.beta[i];
        }
        DVector::from_iterator(self.n, (0..self.n).map(|j| (self.lp.lower[j] + s[j]).clamp(self.lp.lower[j], self.lp.upper[j])))
    }

    fn iterate(&mut self, d: &mut [f64], phase_one: bool) -> Result<(), LpError> {
        let limit = 100 * (self.m + self.n) + 1000;
        let mut degenerate_run = 0usize;
        let entering_limit = if phase_one { self.cols } else { self.n };
        for _ in 0..limit {
            let bland = degenerate_run > DEGENERATE_SWITCH;
            // Pricing.
            let mut enter = None;
            let mut best = COST_TOL;
            for j in 0..entering_limit {
                let score = match self.status[j] {
                    Status::Basic => continue,
                    Status::AtLower => -d[j],
                    Status::AtUpper => d[j],
                };
                if self.width[j] <= 0.0 {
                    continue;
                }
                if score > best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = score;
                }
            }
            let Some(j) = enter else {
                return Ok(());
            };
            let dir = if self.status[j] == Status::AtLower { 1.0 } else { -1.0 };
            // Ratio test.
            let mut theta = self.width[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_piv = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.tab[i * self.cols + j];
                let (t, to_upper) = if alpha > PIVOT_TOL {
                    (self.beta[i].max(0.0) / alpha, false)
                } else if alpha < -PIVOT_TOL {
                    let w = self.width[self.basis[i]];
                    if !w.is_finite() {
                        continue;
                    }
                    ((w - self.beta[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = if bland {
                    t < theta - 1e-12
                        || (t <= theta + 1e-12 && leave.is_some_and(|(r, _)| self.basis[i] < self.basis[r]))
                } else {
                    t < theta - 1e-12 || (t <= theta + 1e-12 && leave.is_some() && alpha.abs() > leave_piv)
                };
                if better || (leave.is_none() && t < theta) {
                    theta = t;
                    leave = Some((i, to_upper));
                    leave_piv = alpha.abs();
                }
            }
            if !theta.is_finite() {
                // Only artificial variables are unbounded above and they never
                // increase, so this means numerical breakdown.
                return Err(LpError::IterationLimit);
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for i in 0..self.m {
                let alpha = self.tab[i * self.cols + j];
                if alpha != 0.0 {
                    self.beta[i] -= theta * dir * alpha;
                }
            }
            match leave {
                None => {
                    self.status[j] = if self.status[j] == Status::AtLower { Status::AtUpper } else { Status::AtLower };
                }
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { theta } else { self.width[j] - theta };
                    let leaving = self.basis[r];
                    self.pivot(r, j, Some(d));
                    self.beta[r] = entering_value;
                    self.status[leaving] = if to_upper { Status::AtUpper } else { Status::AtLower };
                }
            }
        }
        Err(LpError::IterationLimit)
    }

    /// Gauss-Jordan pivot on (row r, column j); updates reduced costs if given.
    fn pivot(&mut self, r: usize, j: usize, d: Option<&mut [f64]>) {
        let cols = self.cols;
        let p = self.tab[r * cols + j];
        let inv = 1.0 / p;
        for v in &mut self.tab[r * cols..(r + 1) * cols] {
            *v *= inv;
        }
        self.tab[r * cols + j] = 1.0;
        let (before, rest) = self.tab.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        if let Some(d) = d {
            let f = d[j];
            if f != 0.0 {
                for (v, &pv) in d.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                d[j] = 0.0;
            }
        }
        self.status[self.basis[r]] = Status::AtLower;
        self.basis[r] = j;
        self.status[j] = Status::Basic;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(a: &[&[f64]], b: &[f64], l: &[f64], u: &[f64]) -> BoxLp {
        let m = a.len();
        let n = l.len();
        let flat: Vec<f64> = a.iter().flat_map(|r| r.iter().copied()).collect();
        BoxLp::new(
            DMatrix::from_row_slice(m, n, &flat),
            DVector::from_column_slice(b),
            DVector::from_column_slice(l),
            DVector::from_column_slice(u),
        )
        .unwrap()
    }

    #[test]
    fn maximizes_over_a_box_without_constraints() {
        let p = BoxLp::new(DMatrix::zeros(0, 3), DVector::zeros(0), DVector::from_element(3, -1.0), DVector::from_element(3, 1.0)).unwrap();
        let mut s = Simplex::new(p).unwrap().unwrap();
        let c = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let sol = s.maximize(&c).unwrap();
        assert!((sol.value - 3.5).abs() < 1e-12);
        assert!((sol.bound - 3.5).abs() < 1e-12);
    }

    #[test]
    fn equality_constrained_support() {
        // max x1 + x2 s.t. x1 - x2 = 0.5, x in [-1,1]^2  ->  x = (1, 0.5), value 1.5
        let mut s = Simplex::new(lp(&[&[1.0, -1.0]], &[0.5], &[-1.0, -1.0], &[1.0, 1.0])).unwrap().unwrap();
        let sol = s.maximize(&DVector::from_column_slice(&[1.0, 1.0])).unwrap();
        assert!((sol.value - 1.5).abs() < 1e-10, "{}", sol.value);
        assert!((sol.bound - 1.5).abs() < 1e-10);
        let sol = s.minimize(&DVector::from_column_slice(&[1.0, 1.0])).unwrap();
        assert!((sol.value + 1.5).abs() < 1e-10);
    }

    #[test]
    fn detects_infeasibility() {
        let p = lp(&[&[1.0, 1.0]], &[3.0], &[-1.0, -1.0], &[1.0, 1.0]);
        assert!(!Simplex::is_feasible(p).unwrap());
        let p = lp(&[&[1.0, 1.0], &[1.0, 1.0]], &[1.0, 1.0], &[-1.0, -1.0], &[1.0, 1.0]);
        assert!(Simplex::is_feasible(p).unwrap());
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let p = lp(&[&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0], &[0.0, 0.0, 1.0]], &[1.0, 2.0, 0.25], &[-1.0; 3], &[1.0; 3]);
        let mut s = Simplex::new(p).unwrap().unwrap();
        let sol = s.maximize(&DVector::from_column_slice(&[1.0, 0.0, 0.0])).unwrap();
        // x1 = 1 - 2 x2, x2 >= 0 -> max x1 = 1 at x2 = 0... x2 >= -1 gives x1 <= 3 but x1 <= 1.
        assert!((sol.value - 1.0).abs() < 1e-10);
        assert!(s.problem().residual(&sol.x) < 1e-10);
    }

    #[test]
    fn dual_bound_is_valid_for_arbitrary_multipliers() {
        let p = lp(&[&[1.0, -1.0, 0.5]], &[0.2], &[-1.0; 3], &[1.0; 3]);
        let c = DVector::from_column_slice(&[1.0, 0.3, -0.7]);
        let mut s = Simplex::new(p.clone()).unwrap().unwrap();
        let opt = s.minimize(&c).unwrap().value;
        for y in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            assert!(p.dual_bound(&c, &DVector::from_element(1, y)) <= opt + 1e-12);
        }
    }
}
