//! Closed real intervals, interval vectors (axis-aligned boxes) and interval
//! matrices.
//!
//! Arithmetic uses round-to-nearest; enclosures are exact up to floating-point
//! rounding of the endpoint formulas.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::math;

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Why an interval operation has no enclosure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalFault {
    DivisionByZero,
    SqrtOfNegative,
    PowerOfNegative,
    NotFinite,
}

impl fmt::Display for IntervalFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            IntervalFault::DivisionByZero => "divisor interval contains zero",
            IntervalFault::SqrtOfNegative => "sqrt of an interval with negative lower bound",
            IntervalFault::PowerOfNegative => "fractional power of an interval reaching below zero",
            IntervalFault::NotFinite => "non-finite interval endpoint",
        };
        f.write_str(msg)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const UNIT: Interval = Interval { lo: -1.0, hi: 1.0 };

    /// Builds `[lo, hi]`; endpoints are swapped if given in the wrong order.
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            Interval { lo, hi }
        } else {
            Interval { lo: hi, hi: lo }
        }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn symmetric(radius: f64) -> Self {
        Interval::new(-radius.abs(), radius.abs())
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn scale(&self, s: f64) -> Interval {
        Interval::new(self.lo * s, self.hi * s)
    }

    pub fn sqr(&self) -> Interval {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.contains_zero() {
            Interval { lo: 0.0, hi: a.max(b) }
        } else {
            Interval::new(a.min(b), a.max(b))
        }
    }

    pub fn powi(&self, n: i32) -> Result<Interval, IntervalFault> {
        match n {
            0 => Ok(Interval::point(1.0)),
            1 => Ok(*self),
            2 => Ok(self.sqr()),
            n if n < 0 => Interval::point(1.0).div(&self.powi(-n)?),
            n if n % 2 == 0 => {
                let a = math::powi(self.lo, n);
                let b = math::powi(self.hi, n);
                if self.contains_zero() {
                    Ok(Interval { lo: 0.0, hi: a.max(b) })
                } else {
                    Ok(Interval::new(a.min(b), a.max(b)))
                }
            }
            n => Ok(Interval::new(math::powi(self.lo, n), math::powi(self.hi, n))),
        }
    }

    /// Real power `x^p` for a non-integer exponent; the base must stay
    /// nonnegative (strictly positive for `p < 0`).
    pub fn powf(&self, p: f64) -> Result<Interval, IntervalFault> {
        if self.lo < 0.0 || (p < 0.0 && self.lo <= 0.0) {
            return Err(IntervalFault::PowerOfNegative);
        }
        Ok(Interval::new(math::powf(self.lo, p), math::powf(self.hi, p)))
    }

    pub fn sqrt(&self) -> Result<Interval, IntervalFault> {
        if self.lo < 0.0 {
            return Err(IntervalFault::SqrtOfNegative);
        }
        Ok(Interval {
            lo: math::sqrt(self.lo),
            hi: math::sqrt(self.hi),
        })
    }

    pub fn div(&self, rhs: &Interval) -> Result<Interval, IntervalFault> {
        if rhs.contains_zero() {
            return Err(IntervalFault::DivisionByZero);
        }
        let inv = Interval::new(1.0 / rhs.hi, 1.0 / rhs.lo);
        Ok(*self * inv)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let mut lo = p[0];
        let mut hi = p[0];
        for &v in &p[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Interval { lo, hi }
    }
}

/// An axis-aligned box `[lower, upper]` in `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalVector {
    comps: Vec<Interval>,
}

impl IntervalVector {
    pub fn new(comps: Vec<Interval>) -> Self {
        IntervalVector { comps }
    }

    /// Builds a box from bound vectors. Fails if the lengths differ or any
    /// `lower[i] > upper[i]`.
    pub fn from_bounds(lower: &[f64], upper: &[f64]) -> Option<Self> {
        if lower.len() != upper.len() {
            return None;
        }
        let mut comps = Vec::with_capacity(lower.len());
        for (&l, &u) in lower.iter().zip(upper) {
            if !(l <= u) {
                return None;
            }
            comps.push(Interval { lo: l, hi: u });
        }
        Some(IntervalVector { comps })
    }

    pub fn from_center_radius(center: &[f64], radius: &[f64]) -> Self {
        IntervalVector {
            comps: center
                .iter()
                .zip(radius)
                .map(|(&c, &r)| Interval::new(c - r.abs(), c + r.abs()))
                .collect(),
        }
    }

    pub fn point(x: &[f64]) -> Self {
        IntervalVector {
            comps: x.iter().map(|&v| Interval::point(v)).collect(),
        }
    }

    /// The scaled unit box `s * B^n`.
    pub fn unit(n: usize, s: f64) -> Self {
        IntervalVector {
            comps: alloc::vec![Interval::symmetric(s); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Interval] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Interval] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<Interval> {
        self.comps
    }

    pub fn lower(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|c| c.lo))
    }

    pub fn upper(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|c| c.hi))
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|c| c.mid()))
    }

    pub fn radius(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|c| c.rad()))
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.comps.iter().map(|c| c.width())
    }

    pub fn volume(&self) -> f64 {
        self.widths().product()
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && self
                .comps
                .iter()
                .zip(x)
                .all(|(c, &v)| c.lo - tol <= v && v <= c.hi + tol)
    }

    pub fn is_subset_of(&self, other: &IntervalVector) -> bool {
        self.dim() == other.dim()
            && self
                .comps
                .iter()
                .zip(&other.comps)
                .all(|(a, b)| a.is_subset_of(b))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(Interval::is_finite)
    }

    pub fn hull(&self, other: &IntervalVector) -> IntervalVector {
        IntervalVector {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.hull(b))
                .collect(),
        }
    }

    /// Smallest box containing `self` and the point `x`.
    pub fn hull_point(&self, x: &[f64]) -> IntervalVector {
        IntervalVector {
            comps: self
                .comps
                .iter()
                .zip(x)
                .map(|(a, &v)| a.hull(&Interval::point(v)))
                .collect(),
        }
    }

    pub fn intersect(&self, other: &IntervalVector) -> Option<IntervalVector> {
        let comps: Option<Vec<_>> = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.intersect(b))
            .collect();
        comps.map(IntervalVector::new)
    }

    /// `self ⊕ other`.
    pub fn add(&self, other: &IntervalVector) -> IntervalVector {
        IntervalVector {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    /// `self - x` for a point `x`.
    pub fn shift(&self, x: &[f64], sign: f64) -> IntervalVector {
        IntervalVector {
            comps: self
                .comps
                .iter()
                .zip(x)
                .map(|(a, &v)| Interval::new(a.lo + sign * v, a.hi + sign * v))
                .collect(),
        }
    }

    /// Interval hull of the image `M * box`.
    pub fn linear_map(&self, m: &DMatrix<f64>) -> IntervalVector {
        let c = m * self.center();
        let r = m.abs() * self.radius();
        IntervalVector::from_center_radius(c.as_slice(), r.as_slice())
    }

    /// Slice of the box along `axis` into `parts` equal slabs.
    pub fn slabs(&self, axis: usize, parts: usize) -> Vec<IntervalVector> {
        let parts = parts.max(1);
        let iv = self.comps[axis];
        let step = iv.width() / parts as f64;
        (0..parts)
            .map(|p| {
                let lo = iv.lo + step * p as f64;
                let hi = if p + 1 == parts { iv.hi } else { iv.lo + step * (p + 1) as f64 };
                let mut b = self.clone();
                b.comps[axis] = Interval::new(lo, hi);
                b
            })
            .collect()
    }
}

impl core::ops::Index<usize> for IntervalVector {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.comps[i]
    }
}

impl core::ops::IndexMut<usize> for IntervalVector {
    fn index_mut(&mut self, i: usize) -> &mut Interval {
        &mut self.comps[i]
    }
}

/// A matrix of intervals, e.g. an enclosure of a Jacobian over a box.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

impl IntervalMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Interval) -> Self {
        let mut lower = DMatrix::zeros(rows, cols);
        let mut upper = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                lower[(i, j)] = v.lo;
                upper[(i, j)] = v.hi;
            }
        }
        IntervalMatrix { lower, upper }
    }

    pub fn point(m: &DMatrix<f64>) -> Self {
        IntervalMatrix {
            lower: m.clone(),
            upper: m.clone(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.lower.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.lower.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        Interval {
            lo: self.lower[(i, j)],
            hi: self.upper[(i, j)],
        }
    }

    pub fn center(&self) -> DMatrix<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn radius(&self) -> DMatrix<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    /// Product with a real matrix on the right, `[J] * G`, enclosed exactly
    /// entrywise.
    pub fn mul_real(&self, g: &DMatrix<f64>) -> IntervalMatrix {
        let c = self.center() * g;
        let r = self.radius() * g.abs();
        IntervalMatrix {
            lower: &c - &r,
            upper: &c + &r,
        }
    }

    /// Subtracts a real matrix.
    pub fn sub_real(&self, m: &DMatrix<f64>) -> IntervalMatrix {
        IntervalMatrix {
            lower: &self.lower - m,
            upper: &self.upper - m,
        }
    }
}
