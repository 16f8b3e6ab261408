use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{SetError, MEMBERSHIP_TOL};
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{abs_row_sums, diag, hcat, nonzero_columns, vcat, vcat_vec};
use crate::lp::{BoxLp, Simplex};
use crate::math;

/// `{ c + G ξ : ξ ∈ [-1, 1]^r }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

/// Frame in which the discarded generators of a reduction are boxed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMethod {
    /// Principal axes of the discarded generators.
    Pca,
    /// Coordinate axes.
    Girard,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self, SetError> {
        if generators.nrows() != center.len() && generators.ncols() > 0 {
            return Err(SetError::DimensionMismatch { expected: center.len(), found: generators.nrows() });
        }
        let generators = if generators.ncols() == 0 {
            DMatrix::zeros(center.len(), 0)
        } else {
            generators
        };
        Ok(Zonotope { center, generators })
    }

    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Zonotope { center, generators: DMatrix::zeros(n, 0) }
    }

    /// Box as a zonotope with one axis-aligned generator per nonflat axis.
    pub fn from_box(b: &IntervalVector) -> Self {
        let r = b.radius();
        Zonotope { center: b.center(), generators: nonzero_columns(&diag(&r), 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// `r / n`.
    pub fn order(&self) -> f64 {
        self.n_generators() as f64 / self.dim().max(1) as f64
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.center, self.generators)
    }

    pub fn is_finite(&self) -> bool {
        self.center.iter().chain(self.generators.iter()).all(|v| v.is_finite())
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope, SetError> {
        check_dim(self.dim(), other.dim())?;
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: hcat(&self.generators, &other.generators),
        })
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Zonotope, SetError> {
        check_dim(m.ncols(), self.dim())?;
        Ok(Zonotope { center: m * &self.center, generators: m * &self.generators })
    }

    pub fn translate(&self, t: &DVector<f64>) -> Zonotope {
        Zonotope { center: &self.center + t, generators: self.generators.clone() }
    }

    pub fn interval_hull(&self) -> IntervalVector {
        let r = abs_row_sums(&self.generators);
        IntervalVector::new(
            (0..self.dim())
                .map(|i| Interval::new(self.center[i] - r[i], self.center[i] + r[i]))
                .collect(),
        )
    }

    pub fn support(&self, d: &DVector<f64>) -> f64 {
        d.dot(&self.center) + self.generators.tr_mul(d).iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool, SetError> {
        check_dim(x.len(), self.dim())?;
        let delta = x - &self.center;
        if self.n_generators() == 0 {
            return Ok(delta.amax() <= MEMBERSHIP_TOL);
        }
        let lim = 1.0 + MEMBERSHIP_TOL;
        let r = self.n_generators();
        let lp = BoxLp::new(
            self.generators.clone(),
            delta,
            DVector::from_element(r, -lim),
            DVector::from_element(r, lim),
        )?;
        Ok(Simplex::is_feasible(lp)?)
    }

    /// Drops generators that are exactly zero.
    pub fn compact(&self) -> Zonotope {
        Zonotope { center: self.center.clone(), generators: nonzero_columns(&self.generators, 0.0) }
    }

    /// Lifted zonotope `[c; -b] ⊕ [G; A] B^r` of a constrained zonotope;
    /// see [`super::ConstrainedZonotope::reduce_order`].
    pub(crate) fn lifted(c: &DVector<f64>, g: &DMatrix<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Zonotope {
        Zonotope { center: vcat_vec(c, &(-b)), generators: vcat(g, a) }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<(), SetError> {
    if expected != found {
        Err(SetError::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Reduces `z` to at most `floor(max_order * n)` generators. The
/// `floor(max_order * n) - n` generators with the largest `|g|₁ - |g|∞` are
/// kept; the rest are replaced by a bounding box in the chosen frame.
pub fn reduce_zonotope(z: &Zonotope, max_order: f64, method: ReductionMethod) -> Zonotope {
    let n = z.dim();
    let budget = math::floor(max_order.max(1.0) * n as f64) as usize;
    reduce_to_count(z, budget, method)
}

pub(crate) fn reduce_to_count(z: &Zonotope, budget: usize, method: ReductionMethod) -> Zonotope {
    reduce_framed(z, budget, method, z.dim())
}

/// As [`reduce_to_count`], with the PCA frame restricted to the leading
/// `pca_rows` coordinates; the others are boxed along their axes.
pub(crate) fn reduce_framed(z: &Zonotope, budget: usize, method: ReductionMethod, pca_rows: usize) -> Zonotope {
    let n = z.dim();
    let r = z.n_generators();
    if r <= budget || n == 0 {
        return z.clone();
    }
    let keep = budget.saturating_sub(n);
    let g = &z.generators;
    let mut score: Vec<(usize, f64)> = (0..r)
        .map(|j| {
            let col = g.column(j);
            (j, col.iter().map(|v| v.abs()).sum::<f64>() - col.amax())
        })
        .collect();
    // Largest score first; equal scores keep their original order.
    score.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept_idx: Vec<usize> = score[..keep].iter().map(|s| s.0).collect();
    kept_idx.sort_unstable();
    let mut rest_idx: Vec<usize> = score[keep..].iter().map(|s| s.0).collect();
    rest_idx.sort_unstable();
    let kept = g.select_columns(kept_idx.iter());
    let rest = g.select_columns(rest_idx.iter());
    let boxed = match method {
        ReductionMethod::Girard => diag(&abs_row_sums(&rest)),
        ReductionMethod::Pca => {
            let p = pca_rows.min(n);
            let head = rest.rows(0, p).clone_owned();
            let cov = &head * head.transpose();
            let mut frame = DMatrix::identity(n, n);
            if cov.iter().all(|v| v.is_finite()) {
                frame.view_mut((0, 0), (p, p)).copy_from(&SymmetricEigen::new(cov).eigenvectors);
            }
            let local = frame.tr_mul(&rest);
            frame * diag(&abs_row_sums(&local))
        }
    };
    let boxed = nonzero_columns(&boxed, 0.0);
    Zonotope { center: z.center.clone(), generators: hcat(&kept, &boxed) }
}
