//! Set representations and the operations between them.
//!
//! Every operation returns a set containing the exact result. Minkowski sums
//! and linear maps are exact for zonotopes and constrained zonotopes, and
//! intersections with zonotopes or constrained zonotopes produce exact
//! constrained zonotopes. An intersection found infeasible is returned as
//! [`SetValue::Empty`].

mod bundle;
mod conzono;
mod ellipsoid;
mod strip;
mod zonotope;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

pub use bundle::ZonotopeBundle;
pub use conzono::{ConstrainedZonotope, SupportOracle};
pub use ellipsoid::{enclose_ellipsoid, Ellipsoid, StripFusion, FLAT_AXIS_EPS};
pub use strip::{
    correct_with_strip, frobenius_gain, joint_frobenius_correction, log_volume, strip_intersection_gain,
    volume_gain_candidates, volume_gain_line_search, GainSelector, Strip, EXACT_VOLUME_SUBSETS,
};
pub use zonotope::{reduce_zonotope, ReductionMethod, Zonotope};

use crate::interval::{Interval, IntervalVector};
use crate::lp::LpError;
use zonotope::check_dim;

/// Slack used by point-membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{op} is not supported between {lhs} and {rhs}")]
    Unsupported { op: &'static str, lhs: &'static str, rhs: &'static str },
    #[error("operation on an empty set")]
    Empty,
    #[error("ellipsoid shape matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Any of the supported set representations.
#[derive(Clone, Debug, PartialEq)]
pub enum SetValue {
    Interval(IntervalVector),
    Ellipsoid(Ellipsoid),
    Zonotope(Zonotope),
    ConstrainedZonotope(ConstrainedZonotope),
    Bundle(ZonotopeBundle),
    /// Result of an infeasible intersection.
    Empty { dim: usize },
}

impl From<IntervalVector> for SetValue {
    fn from(v: IntervalVector) -> Self {
        SetValue::Interval(v)
    }
}
impl From<Ellipsoid> for SetValue {
    fn from(v: Ellipsoid) -> Self {
        SetValue::Ellipsoid(v)
    }
}
impl From<Zonotope> for SetValue {
    fn from(v: Zonotope) -> Self {
        SetValue::Zonotope(v)
    }
}
impl From<ConstrainedZonotope> for SetValue {
    fn from(v: ConstrainedZonotope) -> Self {
        SetValue::ConstrainedZonotope(v)
    }
}
impl From<ZonotopeBundle> for SetValue {
    fn from(v: ZonotopeBundle) -> Self {
        SetValue::Bundle(v)
    }
}

impl SetValue {
    pub fn dim(&self) -> usize {
        match self {
            SetValue::Interval(v) => v.dim(),
            SetValue::Ellipsoid(v) => v.dim(),
            SetValue::Zonotope(v) => v.dim(),
            SetValue::ConstrainedZonotope(v) => v.dim(),
            SetValue::Bundle(v) => v.dim(),
            SetValue::Empty { dim } => *dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SetValue::Interval(_) => "interval",
            SetValue::Ellipsoid(_) => "ellipsoid",
            SetValue::Zonotope(_) => "zonotope",
            SetValue::ConstrainedZonotope(_) => "constrained_zonotope",
            SetValue::Bundle(_) => "zonotope_bundle",
            SetValue::Empty { .. } => "empty",
        }
    }

    pub fn is_empty_marker(&self) -> bool {
        matches!(self, SetValue::Empty { .. })
    }

    /// All stored numbers are finite.
    pub fn is_finite(&self) -> bool {
        match self {
            SetValue::Interval(v) => v.is_finite(),
            SetValue::Ellipsoid(v) => v.is_finite(),
            SetValue::Zonotope(v) => v.is_finite(),
            SetValue::ConstrainedZonotope(v) => v.is_finite(),
            SetValue::Bundle(v) => v.is_finite(),
            SetValue::Empty { .. } => true,
        }
    }

    /// Zonotope view of sets that are exactly zonotopes.
    fn as_zonotope(&self) -> Option<Zonotope> {
        match self {
            SetValue::Zonotope(z) => Some(z.clone()),
            SetValue::Interval(b) => Some(Zonotope::from_box(b)),
            _ => None,
        }
    }

    fn as_constrained(&self) -> Option<ConstrainedZonotope> {
        match self {
            SetValue::ConstrainedZonotope(c) => Some(c.clone()),
            SetValue::Bundle(b) => Some(b.to_constrained()),
            other => other.as_zonotope().map(Into::into),
        }
    }

    /// Outer approximation of `{x + w}`. The representation of `self` is kept;
    /// the operand is converted when that is exact (box to zonotope) or, for
    /// ellipsoids, enclosed.
    pub fn minkowski_sum(&self, w: &SetValue) -> Result<SetValue, SetError> {
        check_dim(self.dim(), w.dim())?;
        let unsupported = || SetError::Unsupported { op: "minkowski_sum", lhs: self.kind(), rhs: w.kind() };
        if self.is_empty_marker() || w.is_empty_marker() {
            return Ok(SetValue::Empty { dim: self.dim() });
        }
        Ok(match (self, w) {
            (SetValue::Interval(a), SetValue::Interval(b)) => SetValue::Interval(a.add(b)),
            (SetValue::Zonotope(a), _) => match w {
                SetValue::ConstrainedZonotope(b) => {
                    SetValue::ConstrainedZonotope(ConstrainedZonotope::from(a.clone()).minkowski_sum(b)?)
                }
                _ => SetValue::Zonotope(a.minkowski_sum(&w.as_zonotope().ok_or_else(unsupported)?)?),
            },
            (SetValue::ConstrainedZonotope(a), _) => match w {
                SetValue::ConstrainedZonotope(b) => SetValue::ConstrainedZonotope(a.minkowski_sum(b)?),
                _ => {
                    let z = w.as_zonotope().ok_or_else(unsupported)?;
                    SetValue::ConstrainedZonotope(a.minkowski_sum(&z.into())?)
                }
            },
            (SetValue::Ellipsoid(a), SetValue::Ellipsoid(b)) => SetValue::Ellipsoid(a.minkowski_sum(b)?),
            (SetValue::Ellipsoid(a), SetValue::Interval(b)) => SetValue::Ellipsoid(a.minkowski_sum(&enclose_ellipsoid(b))?),
            (SetValue::Bundle(a), _) => SetValue::Bundle(a.minkowski_sum(&w.as_zonotope().ok_or_else(unsupported)?)?),
            _ => return Err(unsupported()),
        })
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<SetValue, SetError> {
        check_dim(m.ncols(), self.dim())?;
        Ok(match self {
            SetValue::Interval(b) => SetValue::Interval(b.linear_map(m)),
            SetValue::Ellipsoid(e) => SetValue::Ellipsoid(e.linear_map(m)?),
            SetValue::Zonotope(z) => SetValue::Zonotope(z.linear_map(m)?),
            SetValue::ConstrainedZonotope(c) => SetValue::ConstrainedZonotope(c.linear_map(m)?),
            SetValue::Bundle(b) => SetValue::Bundle(b.linear_map(m)?),
            SetValue::Empty { .. } => SetValue::Empty { dim: m.nrows() },
        })
    }

    /// Outer approximation of `{ x ∈ self : C x ∈ Y }`.
    ///
    /// Zonotopes, constrained zonotopes and bundles give an exact constrained
    /// zonotope, except that a bundle intersected with a zonotope under the
    /// identity gains a member. Boxes are contracted by constraint propagation.
    /// Ellipsoids are fused row by row with the strips `Cᵢ x ∈ hull(Y)ᵢ`.
    pub fn generalized_intersection(&self, c: &DMatrix<f64>, y: &SetValue) -> Result<SetValue, SetError> {
        check_dim(c.ncols(), self.dim())?;
        check_dim(c.nrows(), y.dim())?;
        let n = self.dim();
        if self.is_empty_marker() || y.is_empty_marker() {
            return Ok(SetValue::Empty { dim: n });
        }
        let unsupported = || SetError::Unsupported { op: "generalized_intersection", lhs: self.kind(), rhs: y.kind() };
        match self {
            SetValue::Interval(b) => {
                let yb = y.interval_hull()?;
                Ok(match contract_box(b, c, &yb) {
                    Some(b) => SetValue::Interval(b),
                    None => SetValue::Empty { dim: n },
                })
            }
            SetValue::Ellipsoid(e) => {
                let yb = y.interval_hull()?;
                let mut cur = e.clone();
                for i in 0..c.nrows() {
                    let row = c.row(i).transpose();
                    if row.iter().all(|v| *v == 0.0) {
                        if !yb[i].contains(0.0) {
                            return Ok(SetValue::Empty { dim: n });
                        }
                        continue;
                    }
                    let s = Strip::new(row, yb[i].mid(), Interval::symmetric(yb[i].rad()))?;
                    match cur.intersect_strip(&s)? {
                        StripFusion::Ellipsoid(next) => cur = next,
                        StripFusion::Empty => return Ok(SetValue::Empty { dim: n }),
                    }
                }
                Ok(SetValue::Ellipsoid(cur))
            }
            SetValue::Bundle(bundle) if is_identity(c) && matches!(y, SetValue::Zonotope(_) | SetValue::Interval(_)) => {
                let mut out = bundle.clone();
                out.push(y.as_zonotope().ok_or_else(unsupported)?)?;
                Ok(if out.is_empty()? { SetValue::Empty { dim: n } } else { SetValue::Bundle(out) })
            }
            SetValue::Zonotope(_) | SetValue::ConstrainedZonotope(_) | SetValue::Bundle(_) => {
                let x = self.as_constrained().ok_or_else(unsupported)?;
                let ycz = y.as_constrained().ok_or_else(unsupported)?;
                let out = x.intersect_with(c, &ycz)?;
                Ok(if out.is_empty()? { SetValue::Empty { dim: n } } else { SetValue::ConstrainedZonotope(out) })
            }
            SetValue::Empty { .. } => unreachable!(),
        }
    }

    pub fn interval_hull(&self) -> Result<IntervalVector, SetError> {
        match self {
            SetValue::Interval(b) => Ok(b.clone()),
            SetValue::Ellipsoid(e) => Ok(e.interval_hull()),
            SetValue::Zonotope(z) => Ok(z.interval_hull()),
            SetValue::ConstrainedZonotope(c) => c.interval_hull(),
            SetValue::Bundle(b) => b.interval_hull(),
            SetValue::Empty { .. } => Err(SetError::Empty),
        }
    }

    /// `max_{x ∈ X} dᵀx`. For constrained zonotopes and bundles the value is
    /// the LP dual bound, so it never underestimates.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64, SetError> {
        check_dim(d.len(), self.dim())?;
        match self {
            SetValue::Interval(b) => Ok((0..b.dim())
                .map(|i| if d[i] >= 0.0 { d[i] * b[i].hi } else { d[i] * b[i].lo })
                .sum()),
            SetValue::Ellipsoid(e) => Ok(e.support(d)),
            SetValue::Zonotope(z) => Ok(z.support(d)),
            SetValue::ConstrainedZonotope(c) => c.support(d),
            SetValue::Bundle(b) => b.support(d),
            SetValue::Empty { .. } => Err(SetError::Empty),
        }
    }

    /// Supports in many directions, sharing one warm-started LP where needed.
    pub fn supports(&self, dirs: &[DVector<f64>]) -> Result<Vec<f64>, SetError> {
        let cz = match self {
            SetValue::ConstrainedZonotope(c) => c.clone(),
            SetValue::Bundle(b) if b.len() > 1 => b.to_constrained(),
            _ => return dirs.iter().map(|d| self.support(d)).collect(),
        };
        let mut oracle = cz.support_oracle()?.ok_or(SetError::Empty)?;
        dirs.iter().map(|d| oracle.support(d)).collect()
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool, SetError> {
        check_dim(x.len(), self.dim())?;
        match self {
            SetValue::Interval(b) => Ok(b.contains_point(x.as_slice(), MEMBERSHIP_TOL)),
            SetValue::Ellipsoid(e) => e.contains_point(x),
            SetValue::Zonotope(z) => z.contains_point(x),
            SetValue::ConstrainedZonotope(c) => c.contains_point(x),
            SetValue::Bundle(b) => b.contains_point(x),
            SetValue::Empty { .. } => Ok(false),
        }
    }

    /// Infeasibility of the represented set (LP-based where needed).
    pub fn is_empty(&self) -> Result<bool, SetError> {
        match self {
            SetValue::ConstrainedZonotope(c) => c.is_empty(),
            SetValue::Bundle(b) => b.is_empty(),
            SetValue::Empty { .. } => Ok(true),
            _ => Ok(false),
        }
    }
}

fn is_identity(c: &DMatrix<f64>) -> bool {
    c.is_square() && c.iter().enumerate().all(|(k, v)| {
        let (i, j) = (k % c.nrows(), k / c.nrows());
        *v == if i == j { 1.0 } else { 0.0 }
    })
}

/// Forward-backward contraction of `b` against `C x ∈ y`.
pub fn contract_box(b: &IntervalVector, c: &DMatrix<f64>, y: &IntervalVector) -> Option<IntervalVector> {
    let n = b.dim();
    let mut x: Vec<Interval> = b.comps().to_vec();
    for _ in 0..4 {
        let before: f64 = x.iter().map(|v| v.width()).sum();
        for i in 0..c.nrows() {
            let row = c.row(i);
            let terms: Vec<Interval> = (0..n).map(|j| x[j].scale(row[j])).collect();
            let total = terms.iter().fold(Interval::ZERO, |acc, t| acc + *t);
            total.intersect(&y[i])?;
            for j in 0..n {
                if row[j] == 0.0 {
                    continue;
                }
                let others = terms
                    .iter()
                    .enumerate()
                    .filter(|(l, _)| *l != j)
                    .fold(Interval::ZERO, |acc, (_, t)| acc + *t);
                let implied = (y[i] - others).scale(1.0 / row[j]);
                x[j] = x[j].intersect(&implied)?;
            }
        }
        let after: f64 = x.iter().map(|v| v.width()).sum();
        if !(after < before - 1e-12) {
            break;
        }
    }
    Some(IntervalVector::new(x))
}
