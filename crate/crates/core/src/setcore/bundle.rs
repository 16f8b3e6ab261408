use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::conzono::ConstrainedZonotope;
use super::zonotope::{check_dim, Zonotope};
use super::SetError;
use crate::interval::IntervalVector;

/// Intersection of its member zonotopes.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonotopeBundle {
    members: Vec<Zonotope>,
}

impl ZonotopeBundle {
    pub fn new(members: Vec<Zonotope>) -> Result<Self, SetError> {
        let first = members.first().ok_or(SetError::InvalidArgument("bundle needs at least one member"))?;
        let n = first.dim();
        for m in &members {
            check_dim(n, m.dim())?;
        }
        Ok(ZonotopeBundle { members })
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn members(&self) -> &[Zonotope] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty_list(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push(&mut self, z: Zonotope) -> Result<(), SetError> {
        check_dim(self.dim(), z.dim())?;
        self.members.push(z);
        Ok(())
    }

    /// Drops the oldest members beyond `cap` (the first member is the oldest).
    pub fn truncate_oldest(&mut self, cap: usize) {
        let cap = cap.max(1);
        if self.members.len() > cap {
            let drop = self.members.len() - cap;
            self.members.drain(0..drop);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.members.iter().all(|m| m.is_finite())
    }

    /// Member-wise: `⋂ Zᵢ ⊕ W ⊆ ⋂ (Zᵢ ⊕ W)`.
    pub fn minkowski_sum(&self, w: &Zonotope) -> Result<ZonotopeBundle, SetError> {
        let members = self.members.iter().map(|m| m.minkowski_sum(w)).collect::<Result<_, _>>()?;
        Ok(ZonotopeBundle { members })
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<ZonotopeBundle, SetError> {
        let members = self.members.iter().map(|z| z.linear_map(m)).collect::<Result<_, _>>()?;
        Ok(ZonotopeBundle { members })
    }

    /// The same set as one constrained zonotope over the stacked coefficients
    /// `(ξ₁, …, ξₘ)` with `c₁ + G₁ξ₁ = cᵢ + Gᵢξᵢ`.
    pub fn to_constrained(&self) -> ConstrainedZonotope {
        let n = self.dim();
        let first = &self.members[0];
        let widths: Vec<usize> = self.members.iter().map(|m| m.n_generators()).collect();
        let total: usize = widths.iter().sum();
        let rows = n * (self.members.len() - 1);
        let mut g = DMatrix::zeros(n, total);
        g.view_mut((0, 0), (n, widths[0])).copy_from(first.generators());
        let mut a = DMatrix::zeros(rows, total);
        let mut b = DVector::zeros(rows);
        let mut col = widths[0];
        for (k, m) in self.members.iter().enumerate().skip(1) {
            let r0 = n * (k - 1);
            a.view_mut((r0, 0), (n, widths[0])).copy_from(first.generators());
            a.view_mut((r0, col), (n, widths[k])).copy_from(&(-m.generators()));
            b.rows_mut(r0, n).copy_from(&(m.center() - first.center()));
            col += widths[k];
        }
        ConstrainedZonotope::new(first.center().clone(), g, a, b).expect("consistent bundle")
    }

    pub fn is_empty(&self) -> Result<bool, SetError> {
        if self.members.len() == 1 {
            return Ok(false);
        }
        self.to_constrained().is_empty()
    }

    /// Joint LP over all members.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64, SetError> {
        if self.members.len() == 1 {
            check_dim(d.len(), self.dim())?;
            return Ok(self.members[0].support(d));
        }
        self.to_constrained().support(d)
    }

    pub fn interval_hull(&self) -> Result<IntervalVector, SetError> {
        if self.members.len() == 1 {
            return Ok(self.members[0].interval_hull());
        }
        self.to_constrained().interval_hull()
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool, SetError> {
        for m in &self.members {
            if !m.contains_point(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Intersection of the member hulls (cheap outer box).
    pub fn member_hull_intersection(&self) -> Option<IntervalVector> {
        let mut it = self.members.iter().map(|m| m.interval_hull());
        let first = it.next()?;
        it.try_fold(first, |acc, h| acc.intersect(&h))
    }
}
