use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::strip::{golden_section, Strip};
use super::zonotope::check_dim;
use super::{SetError, MEMBERSHIP_TOL};
use crate::interval::{Interval, IntervalVector};
use crate::math;

/// Flat-axis radius used when enclosing degenerate boxes.
pub const FLAT_AXIS_EPS: f64 = 1e-12;

/// `{ x : (x - a)ᵀ P⁻¹ (x - a) <= 1 }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

/// Outcome of intersecting an ellipsoid with a strip.
#[derive(Clone, Debug, PartialEq)]
pub enum StripFusion {
    Ellipsoid(Ellipsoid),
    Empty,
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self, SetError> {
        check_dim(center.len(), shape.nrows())?;
        check_dim(center.len(), shape.ncols())?;
        let sym = (&shape + shape.transpose()) * 0.5;
        if (&sym - &shape).amax() > 1e-9 * shape.amax().max(1.0) {
            return Err(SetError::NotPositiveDefinite);
        }
        if Cholesky::new(sym.clone()).is_none() || !sym.iter().all(|v| v.is_finite()) {
            return Err(SetError::NotPositiveDefinite);
        }
        Ok(Ellipsoid { center, shape: sym })
    }

    /// Symmetrizes and, if needed, adds a tiny multiple of the identity so the
    /// shape stays positive definite.
    fn regularized(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self, SetError> {
        let n = center.len();
        let mut sym = (&shape + shape.transpose()) * 0.5;
        if !sym.iter().all(|v| v.is_finite()) {
            return Err(SetError::NotPositiveDefinite);
        }
        let mut eps = FLAT_AXIS_EPS * FLAT_AXIS_EPS;
        for _ in 0..40 {
            if Cholesky::new(sym.clone()).is_some() {
                return Ok(Ellipsoid { center, shape: sym });
            }
            let scale = sym.diagonal().amax().max(1.0);
            for i in 0..n {
                sym[(i, i)] += eps * scale;
            }
            eps *= 100.0;
        }
        Err(SetError::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn is_finite(&self) -> bool {
        self.center.iter().chain(self.shape.iter()).all(|v| v.is_finite())
    }

    fn cholesky(&self) -> Cholesky<f64, Dyn> {
        Cholesky::new(self.shape.clone()).expect("shape is positive definite")
    }

    pub fn log_det(&self) -> f64 {
        let l = self.cholesky();
        2.0 * l.l_dirty().diagonal().iter().map(|v| math::ln(*v)).sum::<f64>()
    }

    /// Minimal-trace member of `(1 + 1/β) P₁ + (1 + β) P₂`, `β = sqrt(tr P₁ / tr P₂)`.
    pub fn minkowski_sum(&self, other: &Ellipsoid) -> Result<Ellipsoid, SetError> {
        check_dim(self.dim(), other.dim())?;
        let t1 = self.shape.trace();
        let t2 = other.shape.trace();
        let center = &self.center + &other.center;
        if t2 <= 0.0 {
            return Ellipsoid::regularized(center, self.shape.clone());
        }
        if t1 <= 0.0 {
            return Ellipsoid::regularized(center, other.shape.clone());
        }
        let beta = math::sqrt(t1 / t2);
        let shape = &self.shape * (1.0 + 1.0 / beta) + &other.shape * (1.0 + beta);
        Ellipsoid::regularized(center, shape)
    }

    /// Exact for invertible square maps; otherwise the mapped (possibly flat)
    /// shape is inflated to stay positive definite.
    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Ellipsoid, SetError> {
        check_dim(m.ncols(), self.dim())?;
        Ellipsoid::regularized(m * &self.center, m * &self.shape * m.transpose())
    }

    pub fn translate(&self, t: &DVector<f64>) -> Ellipsoid {
        Ellipsoid { center: &self.center + t, shape: self.shape.clone() }
    }

    pub fn interval_hull(&self) -> IntervalVector {
        IntervalVector::new(
            (0..self.dim())
                .map(|i| {
                    let r = math::sqrt(self.shape[(i, i)].max(0.0));
                    Interval::new(self.center[i] - r, self.center[i] + r)
                })
                .collect(),
        )
    }

    pub fn support(&self, d: &DVector<f64>) -> f64 {
        d.dot(&self.center) + math::sqrt((d.transpose() * &self.shape * d)[(0, 0)].max(0.0))
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool, SetError> {
        check_dim(x.len(), self.dim())?;
        let delta = x - &self.center;
        let sol = self.cholesky().solve(&delta);
        Ok(delta.dot(&sol) <= 1.0 + MEMBERSHIP_TOL)
    }

    /// Minimum-volume member of the fusion family
    /// `(x-a)ᵀP⁻¹(x-a) + ρ (cᵀx - ỹ)²/σ² <= 1 + ρ`, `ρ >= 0`.
    pub fn intersect_strip(&self, strip: &Strip) -> Result<StripFusion, SetError> {
        check_dim(strip.normal().len(), self.dim())?;
        let n = self.dim() as f64;
        let (yt, sigma) = strip.centered();
        let sigma = sigma.max(FLAT_AXIS_EPS);
        let c = strip.normal();
        let pc = &self.shape * c;
        let g = c.dot(&pc);
        let e = yt - c.dot(&self.center);
        let half = math::sqrt(g.max(0.0));
        if e.abs() > half + sigma {
            return Ok(StripFusion::Empty);
        }
        if e.abs() + half <= sigma {
            return Ok(StripFusion::Ellipsoid(self.clone()));
        }
        let s2 = sigma * sigma;
        let delta = |rho: f64| 1.0 + rho - rho * e * e / (s2 + rho * g);
        // log det P' - log det P.
        let objective = |t: f64| -> Result<f64, SetError> {
            let rho = t / (1.0 - t);
            let d = delta(rho);
            if d <= 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok(n * math::ln(d) + math::ln(s2) - math::ln(s2 + rho * g))
        };
        let t = golden_section(0.0, 1.0 - 1e-9, 1e-10, objective)?;
        if !(objective(t)? < 0.0) {
            return Ok(StripFusion::Ellipsoid(self.clone()));
        }
        let rho = t / (1.0 - t);
        let d = delta(rho);
        let den = s2 + rho * g;
        let center = &self.center + &pc * (rho * e / den);
        let shape = (&self.shape - &pc * pc.transpose() * (rho / den)) * d;
        Ok(StripFusion::Ellipsoid(Ellipsoid::regularized(center, shape)?))
    }
}

/// Ellipsoid through the box corners: center at the midpoint and
/// `P = n diag(rad²)`, with flat axes given radius [`FLAT_AXIS_EPS`].
pub fn enclose_ellipsoid(b: &IntervalVector) -> Ellipsoid {
    let n = b.dim();
    let r = b.radius();
    let shape = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        r.iter().map(|ri| n as f64 * ri.max(FLAT_AXIS_EPS) * ri.max(FLAT_AXIS_EPS)),
    ));
    Ellipsoid { center: b.center(), shape }
}
