use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::zonotope::{check_dim, reduce_framed, reduce_to_count, ReductionMethod, Zonotope};
use super::{SetError, MEMBERSHIP_TOL};
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{block_diag, hcat, vcat, vcat_vec};
use crate::lp::{BoxLp, Simplex};
use crate::math;

/// `{ c + G ξ : ξ ∈ [-1, 1]^r, A ξ = b }`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedZonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl From<Zonotope> for ConstrainedZonotope {
    fn from(z: Zonotope) -> Self {
        let r = z.n_generators();
        let (center, generators) = z.into_parts();
        ConstrainedZonotope { center, generators, a: DMatrix::zeros(0, r), b: DVector::zeros(0) }
    }
}

impl ConstrainedZonotope {
    pub fn new(
        center: DVector<f64>,
        generators: DMatrix<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self, SetError> {
        let n = center.len();
        let r = generators.ncols();
        if r > 0 {
            check_dim(n, generators.nrows())?;
        }
        let a = if a.nrows() == 0 { DMatrix::zeros(0, r) } else { a };
        check_dim(r, a.ncols())?;
        check_dim(a.nrows(), b.len())?;
        let generators = if r == 0 { DMatrix::zeros(n, 0) } else { generators };
        Ok(ConstrainedZonotope { center, generators, a, b })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn n_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn order(&self) -> f64 {
        self.n_generators() as f64 / self.dim().max(1) as f64
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn constraint_offset(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn is_finite(&self) -> bool {
        self.center
            .iter()
            .chain(self.generators.iter())
            .chain(self.a.iter())
            .chain(self.b.iter())
            .all(|v| v.is_finite())
    }

    /// Phase one over `[-1, 1]^r`, retried over `[-1-ε, 1+ε]^r` (ε the
    /// membership tolerance) before the domain is declared empty. Rounding in
    /// long constraint chains can push a thin but nonempty set just outside
    /// the exact box.
    fn domain_simplex(&self) -> Result<Option<Simplex>, SetError> {
        let exact = BoxLp::unit_box(self.a.clone(), self.b.clone())?;
        if let Some(s) = Simplex::new(exact)? {
            return Ok(Some(s));
        }
        let r = self.n_generators();
        let lim = 1.0 + MEMBERSHIP_TOL;
        let relaxed = BoxLp::new(self.a.clone(), self.b.clone(), DVector::from_element(r, -lim), DVector::from_element(r, lim))?;
        Ok(Simplex::new(relaxed)?)
    }

    /// Feasibility of the constrained generator domain, up to the membership
    /// tolerance.
    pub fn is_empty(&self) -> Result<bool, SetError> {
        if self.n_constraints() == 0 {
            return Ok(false);
        }
        Ok(self.domain_simplex()?.is_none())
    }

    pub fn minkowski_sum(&self, other: &ConstrainedZonotope) -> Result<ConstrainedZonotope, SetError> {
        check_dim(self.dim(), other.dim())?;
        Ok(ConstrainedZonotope {
            center: &self.center + &other.center,
            generators: hcat(&self.generators, &other.generators),
            a: block_diag(&self.a, &other.a),
            b: vcat_vec(&self.b, &other.b),
        })
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<ConstrainedZonotope, SetError> {
        check_dim(m.ncols(), self.dim())?;
        Ok(ConstrainedZonotope {
            center: m * &self.center,
            generators: m * &self.generators,
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }

    pub fn translate(&self, t: &DVector<f64>) -> ConstrainedZonotope {
        let mut out = self.clone();
        out.center += t;
        out
    }

    /// `{ x ∈ self : C x ∈ Y }`, exact. Emptiness is not checked here.
    pub fn intersect_with(&self, c: &DMatrix<f64>, y: &ConstrainedZonotope) -> Result<ConstrainedZonotope, SetError> {
        check_dim(c.ncols(), self.dim())?;
        check_dim(c.nrows(), y.dim())?;
        let r1 = self.n_generators();
        let r2 = y.n_generators();
        let generators = hcat(&self.generators, &DMatrix::zeros(self.dim(), r2));
        let coupling = hcat(&(c * &self.generators), &(-&y.generators));
        let a = vcat(&block_diag(&self.a, &y.a), &coupling);
        let b = vcat_vec(&vcat_vec(&self.b, &y.b), &(&y.center - c * &self.center));
        debug_assert_eq!(a.ncols(), r1 + r2);
        Ok(ConstrainedZonotope { center: self.center.clone(), generators, a, b })
    }

    /// Warm-started LP over the generator domain for repeated support queries.
    /// `Ok(None)` when the set is empty.
    pub fn support_oracle(&self) -> Result<Option<SupportOracle<'_>>, SetError> {
        let simplex = if self.n_constraints() == 0 { None } else { Some(self.domain_simplex()?) };
        match simplex {
            Some(None) => Ok(None),
            Some(Some(s)) => Ok(Some(SupportOracle { cz: self, simplex: Some(s) })),
            None => Ok(Some(SupportOracle { cz: self, simplex: None })),
        }
    }

    /// Upper bound on `max dᵀx` (tight up to the LP tolerance).
    pub fn support(&self, d: &DVector<f64>) -> Result<f64, SetError> {
        check_dim(d.len(), self.dim())?;
        let mut o = self.support_oracle()?.ok_or(SetError::Empty)?;
        o.support(d)
    }

    pub fn interval_hull(&self) -> Result<IntervalVector, SetError> {
        let mut o = self.support_oracle()?.ok_or(SetError::Empty)?;
        o.interval_hull()
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool, SetError> {
        check_dim(x.len(), self.dim())?;
        let r = self.n_generators();
        let delta = x - &self.center;
        if r == 0 {
            return Ok(delta.amax() <= MEMBERSHIP_TOL);
        }
        let lim = 1.0 + MEMBERSHIP_TOL;
        let lp = BoxLp::new(
            vcat(&self.generators, &self.a),
            vcat_vec(&delta, &self.b),
            DVector::from_element(r, -lim),
            DVector::from_element(r, lim),
        )?;
        Ok(Simplex::is_feasible(lp)?)
    }

    /// Generator-space bounds implied by the constraints through repeated
    /// interval propagation; `None` proves emptiness.
    pub fn implied_generator_bounds(&self, sweeps: usize) -> Option<Vec<Interval>> {
        let r = self.n_generators();
        let mut e = alloc::vec![Interval::new(-1.0, 1.0); r];
        for _ in 0..sweeps {
            let mut changed = false;
            for j in 0..self.n_constraints() {
                let row = self.a.row(j);
                let total = (0..r).fold(Interval::ZERO, |acc, l| acc + e[l].scale(row[l]));
                for i in 0..r {
                    let aji = row[i];
                    if aji.abs() <= 1e-12 {
                        continue;
                    }
                    // Subtracting in interval arithmetic would double the
                    // width, so recompute the partial sum excluding i.
                    let others = Interval::new(total.lo - (e[i].scale(aji)).lo, total.hi - (e[i].scale(aji)).hi);
                    let others = if others.lo <= others.hi {
                        others
                    } else {
                        (0..r).filter(|&l| l != i).fold(Interval::ZERO, |acc, l| acc + e[l].scale(row[l]))
                    };
                    let implied = (Interval::point(self.b[j]) - others).scale(1.0 / aji);
                    let next = e[i].intersect(&implied)?;
                    if next.width() < e[i].width() - 1e-12 {
                        changed = true;
                    }
                    e[i] = next;
                }
            }
            if !changed {
                break;
            }
        }
        Some(e)
    }

    /// Exactly rewrites the set with generator coefficients rescaled to the
    /// implied bounds `ξ = m + diag(ρ) ζ`, `ζ ∈ [-1, 1]^r`. Generators whose
    /// coefficient is fixed are folded into the center.
    pub fn rescaled(&self) -> Option<ConstrainedZonotope> {
        let e = self.implied_generator_bounds(3)?;
        let r = self.n_generators();
        let m = DVector::from_iterator(r, e.iter().map(|iv| iv.mid()));
        let rho = DVector::from_iterator(r, e.iter().map(|iv| iv.rad()));
        let center = &self.center + &self.generators * &m;
        let b = &self.b - &self.a * &m;
        let scale = DMatrix::from_diagonal(&rho);
        let g = &self.generators * &scale;
        let a = &self.a * &scale;
        let keep: Vec<usize> = (0..r).filter(|&i| rho[i] > 0.0).collect();
        Some(ConstrainedZonotope {
            center,
            generators: g.select_columns(keep.iter()),
            a: a.select_columns(keep.iter()),
            b,
        })
    }

    /// Removes constraint rows that are linear combinations of earlier ones.
    fn without_dependent_rows(&self) -> ConstrainedZonotope {
        let q = self.n_constraints();
        let r = self.n_generators();
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let mut keep = Vec::new();
        for j in 0..q {
            let row = self.a.row(j).transpose();
            let norm = row.norm();
            if norm == 0.0 {
                if self.b[j].abs() <= 1e-12 {
                    continue;
                }
                keep.push(j);
                continue;
            }
            let mut res = row.clone();
            for u in &basis {
                let p = u.dot(&res);
                res -= u * p;
            }
            let rn = res.norm();
            if rn <= 1e-10 * norm {
                continue;
            }
            basis.push(res / rn);
            keep.push(j);
        }
        if keep.len() == q {
            return self.clone();
        }
        let a = if keep.is_empty() { DMatrix::zeros(0, r) } else { self.a.select_rows(keep.iter()) };
        let b = DVector::from_iterator(keep.len(), keep.iter().map(|&j| self.b[j]));
        ConstrainedZonotope { center: self.center.clone(), generators: self.generators.clone(), a, b }
    }

    /// Eliminates constraint `j` by solving it for coefficient `i`: the result
    /// contains the set and is equal to it when the implied range of `ξᵢ` lies
    /// in `[-1, 1]`.
    fn eliminate(&self, j: usize, i: usize) -> ConstrainedZonotope {
        let aji = self.a[(j, i)];
        let lam_g = self.generators.column(i) / aji;
        let lam_a = self.a.column(i) / aji;
        let row = self.a.row(j).clone_owned();
        let center = &self.center + &lam_g * self.b[j];
        let g = &self.generators - &lam_g * &row;
        let a = &self.a - &lam_a * &row;
        let b = &self.b - &lam_a * self.b[j];
        let q = self.n_constraints();
        let r = self.n_generators();
        let rows: Vec<usize> = (0..q).filter(|&k| k != j).collect();
        let cols: Vec<usize> = (0..r).filter(|&k| k != i).collect();
        let a = if rows.is_empty() {
            DMatrix::zeros(0, cols.len())
        } else {
            a.select_rows(rows.iter()).select_columns(cols.iter())
        };
        ConstrainedZonotope {
            center,
            generators: g.select_columns(cols.iter()),
            a,
            b: DVector::from_iterator(rows.len(), rows.iter().map(|&k| b[k])),
        }
    }

    /// Picks the elimination with the smallest `|gᵢ| · max(0, mag(Rⱼᵢ) - 1)`,
    /// where `Rⱼᵢ` is the range of `ξᵢ` implied by row `j` alone. Ties go to the
    /// lowest constraint index.
    fn best_elimination(&self) -> Option<(usize, usize)> {
        let q = self.n_constraints();
        let r = self.n_generators();
        let mut best: Option<(f64, usize, usize)> = None;
        for j in 0..q {
            let row = self.a.row(j);
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            for i in 0..r {
                let aji = row[i];
                if aji.abs() <= 1e-10 * l1.max(1e-300) {
                    continue;
                }
                let others = l1 - aji.abs();
                let range = Interval::new(self.b[j] - others, self.b[j] + others).scale(1.0 / aji);
                let excess = (range.mag() - 1.0).max(0.0);
                let score = self.generators.column(i).norm() * excess;
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, j, i));
                }
            }
        }
        best.map(|(_, j, i)| (j, i))
    }

    /// Reduces to at most `max_constraints` constraints (then order
    /// `max_order`). Dependent rows are dropped first; remaining eliminations
    /// work on the rescaled form and are scored by the Hausdorff-type error
    /// bound of each candidate.
    pub fn reduce_constraints(&self, max_constraints: usize, max_order: f64, method: ReductionMethod) -> ConstrainedZonotope {
        if self.n_constraints() <= max_constraints {
            return self.reduce_order(max_order, method);
        }
        let mut cz = self.without_dependent_rows();
        while cz.n_constraints() > max_constraints {
            if let Some(scaled) = cz.rescaled() {
                cz = scaled;
            }
            match cz.best_elimination() {
                Some((j, i)) => cz = cz.eliminate(j, i),
                None => {
                    // Only zero rows remain. Dropping them can only enlarge.
                    let keep = max_constraints.min(cz.n_constraints());
                    let a = cz.a.rows(0, keep).clone_owned();
                    let b = cz.b.rows(0, keep).clone_owned();
                    cz = ConstrainedZonotope { a, b, ..cz };
                }
            }
        }
        cz.reduce_order(max_order, method)
    }

    /// Order reduction through the lifted zonotope `([c; -b], [G; A])`. The
    /// generator budget is never below `n + q`.
    pub fn reduce_order(&self, max_order: f64, method: ReductionMethod) -> ConstrainedZonotope {
        let n = self.dim();
        let q = self.n_constraints();
        let budget = (math::floor(max_order.max(1.0) * n as f64) as usize).max(n + q);
        if self.n_generators() <= budget {
            return self.clone();
        }
        if q == 0 {
            let z = Zonotope::new(self.center.clone(), self.generators.clone()).expect("consistent");
            return reduce_to_count(&z, budget, method).into();
        }
        let lifted = Zonotope::lifted(&self.center, &self.generators, &self.a, &self.b);
        let red = reduce_framed(&lifted, budget, method, n);
        let (c, g) = red.into_parts();
        ConstrainedZonotope {
            center: c.rows(0, n).clone_owned(),
            generators: g.rows(0, n).clone_owned(),
            a: g.rows(n, q).clone_owned(),
            b: -c.rows(n, q).clone_owned(),
        }
    }
}

/// Repeated support queries over one constrained zonotope.
pub struct SupportOracle<'a> {
    cz: &'a ConstrainedZonotope,
    simplex: Option<Simplex>,
}

impl SupportOracle<'_> {
    pub fn support(&mut self, d: &DVector<f64>) -> Result<f64, SetError> {
        check_dim(d.len(), self.cz.dim())?;
        let gd = self.cz.generators.tr_mul(d);
        let base = d.dot(&self.cz.center);
        match &mut self.simplex {
            None => Ok(base + gd.iter().map(|v| v.abs()).sum::<f64>()),
            Some(s) => {
                let sol = s.maximize(&gd)?;
                Ok(base + sol.bound.max(sol.value))
            }
        }
    }

    pub fn interval_hull(&mut self) -> Result<IntervalVector, SetError> {
        let n = self.cz.dim();
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            let hi = self.support(&e)?;
            e[i] = -1.0;
            let lo = -self.support(&e)?;
            comps.push(Interval::new(lo.min(hi), hi.max(lo)));
        }
        Ok(IntervalVector::new(comps))
    }
}
