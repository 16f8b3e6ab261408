//! Guaranteed enclosures of `f` over sets.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{EvalError, SymbolicDynamics};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::linalg::{diag, hcat, nonzero_columns};
use crate::setcore::{ConstrainedZonotope, SetError, SetValue, Zonotope};

/// Largest box dimension for which the affine over-estimators of a DC split
/// are computed by vertex enumeration.
pub const DC_VERTEX_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RangeError {
    #[error("domain error: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("invalid DC split: {0}")]
    InvalidSplit(String),
    #[error("DC bounds need 2^{dim} vertex evaluations (limit is dimension {limit})")]
    VertexLimit { dim: usize, limit: usize },
    #[error("box leaves the declared domain of the DC split")]
    OutsideSplitDomain,
}

pub fn interval_eval(f: &SymbolicDynamics, x: &IntervalVector, u: &IntervalVector) -> Result<IntervalVector, RangeError> {
    Ok(f.eval_interval(x, u)?)
}

pub fn jacobian_interval(f: &SymbolicDynamics, x: &IntervalVector, u: &IntervalVector) -> Result<IntervalMatrix, RangeError> {
    Ok(f.jacobian_interval(x, u)?)
}

fn point_box(u: &[f64]) -> IntervalVector {
    IntervalVector::point(u)
}

/// Box hull of `x` enlarged to contain `c`.
fn gradient_domain(x: &SetValue, c: &DVector<f64>) -> Result<IntervalVector, RangeError> {
    Ok(x.interval_hull()?.hull_point(c.as_slice()))
}

/// `M (X - c)` in the representation of `X`.
fn affine_image(x: &SetValue, m: &DMatrix<f64>, offset: &DVector<f64>, extra: &IntervalVector) -> Result<SetValue, RangeError> {
    let extra_z = Zonotope::new(extra.center(), nonzero_columns(&diag(&extra.radius()), 0.0))?;
    Ok(match x {
        SetValue::Zonotope(z) => SetValue::Zonotope(z.linear_map(m)?.translate(offset).minkowski_sum(&extra_z)?),
        SetValue::ConstrainedZonotope(cz) => {
            SetValue::ConstrainedZonotope(cz.linear_map(m)?.translate(offset).minkowski_sum(&extra_z.into())?)
        }
        SetValue::Interval(b) => {
            let img = b.linear_map(m).shift(offset.as_slice(), 1.0);
            SetValue::Interval(img.add(extra))
        }
        other => {
            return Err(SetError::Unsupported { op: "affine image", lhs: other.kind(), rhs: "matrix" }.into());
        }
    })
}

/// `f(c) ⊕ ∇f(D)(X - c)` with `D = hull(X) ∪ {c}`, where the interval matrix
/// is split into center `M` and radius `Δ`:
/// `f(c) + M(X - c) ⊕ box(Δ |D - c|)`.
pub fn mean_value_extension(f: &SymbolicDynamics, x: &SetValue, c: &DVector<f64>, u: &[f64]) -> Result<SetValue, RangeError> {
    let d = gradient_domain(x, c)?;
    let ub = point_box(u);
    let j = f.jacobian_interval(&d, &ub)?;
    let fc = DVector::from_vec(f.eval(c.as_slice(), u)?);
    let m = j.center();
    let delta = j.radius();
    let dev = DVector::from_iterator(d.dim(), (0..d.dim()).map(|i| (d[i] - Interval::point(c[i])).mag()));
    let spread = &delta * dev;
    let extra = IntervalVector::from_center_radius(&vec![0.0; spread.len()], spread.as_slice());
    let offset = fc - &m * c;
    affine_image(x, &m, &offset, &extra)
}

/// First-order expansion at `c` with a Lagrange remainder box:
/// `f(x) ∈ A x + affine ⊕ remainder` for all `x ∈ X`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pub a: DMatrix<f64>,
    pub affine: DVector<f64>,
    pub remainder: IntervalVector,
}

impl Linearization {
    /// `A X + affine ⊕ remainder` in the representation of `X`.
    pub fn image(&self, x: &SetValue) -> Result<SetValue, RangeError> {
        affine_image(x, &self.a, &self.affine, &self.remainder)
    }
}

/// `A = ∂f/∂x(c)`, `Rᵢ = ½ Σⱼₖ Hᵢⱼₖ(D) δⱼ δₖ` with `δ = D - c`.
pub fn conservative_linearization(
    f: &SymbolicDynamics,
    x: &SetValue,
    c: &DVector<f64>,
    u: &[f64],
) -> Result<Linearization, RangeError> {
    let d = gradient_domain(x, c)?;
    let ub = point_box(u);
    let a = f.jacobian(c.as_slice(), u)?;
    let fc = DVector::from_vec(f.eval(c.as_slice(), u)?);
    let delta: Vec<Interval> = (0..d.dim()).map(|i| d[i] - Interval::point(c[i])).collect();
    let hess = f.hessian_interval(&d, &ub)?;
    let remainder = hess
        .iter()
        .map(|entries| {
            let mut acc = Interval::ZERO;
            for &(j, k, h) in entries {
                let term = if j == k { h * delta[j].sqr() * Interval::point(0.5) } else { h * delta[j] * delta[k] };
                acc = acc + term;
            }
            acc
        })
        .collect();
    let affine = fc - &a * c;
    Ok(Linearization { a, affine, remainder: IntervalVector::new(remainder) })
}

/// `f = g - h` with `g`, `h` convex componentwise on `domain`.
#[derive(Clone, Debug)]
pub struct DcSplit {
    pub g: SymbolicDynamics,
    pub h: SymbolicDynamics,
    pub domain: IntervalVector,
}

/// `slope · x + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub slope: DVector<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.slope.dot(x) + self.offset
    }
}

/// Componentwise affine bounds `lower(x) <= f(x) <= upper(x)` on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct DcBounds {
    pub lower: Vec<Affine>,
    pub upper: Vec<Affine>,
}

fn random_point(rng: &mut ChaCha8Rng, b: &IntervalVector) -> Vec<f64> {
    b.comps()
        .iter()
        .map(|iv| if iv.width() > 0.0 { rng.random_range(iv.lo..=iv.hi) } else { iv.lo })
        .collect()
}

impl DcSplit {
    pub fn new(g: SymbolicDynamics, h: SymbolicDynamics, domain: IntervalVector) -> Result<Self, RangeError> {
        if g.n_states() != domain.dim() || h.n_states() != domain.dim() || g.n_outputs() != h.n_outputs() {
            return Err(RangeError::InvalidSplit(format!(
                "g, h and domain dimensions differ ({}, {}, {})",
                g.n_states(),
                h.n_states(),
                domain.dim()
            )));
        }
        Ok(DcSplit { g, h, domain })
    }

    /// Sampled checks: `g - h = f` at `samples` points and midpoint convexity
    /// of every component of `g` and `h` on `samples` random segments.
    pub fn validate(&self, f: &SymbolicDynamics, u: &[f64], samples: usize, seed: u64) -> Result<(), RangeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x = random_point(&mut rng, &self.domain);
            let fx = f.eval(&x, u)?;
            let gx = self.g.eval(&x, u)?;
            let hx = self.h.eval(&x, u)?;
            for i in 0..fx.len() {
                let err = (gx[i] - hx[i] - fx[i]).abs();
                if err > 1e-8 * (1.0 + fx[i].abs().max(gx[i].abs())) {
                    return Err(RangeError::InvalidSplit(format!("g - h differs from f in component {} at {:?}", i + 1, x)));
                }
            }
        }
        for _ in 0..samples {
            let a = random_point(&mut rng, &self.domain);
            let b = random_point(&mut rng, &self.domain);
            let m: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            for (name, part) in [("g", &self.g), ("h", &self.h)] {
                let (fa, fb, fm) = (part.eval(&a, u)?, part.eval(&b, u)?, part.eval(&m, u)?);
                for i in 0..fa.len() {
                    let chord = 0.5 * (fa[i] + fb[i]);
                    if fm[i] > chord + 1e-9 * (1.0 + chord.abs()) {
                        return Err(RangeError::InvalidSplit(format!("{name} component {} is not convex on the domain", i + 1)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Supporting tangents at `m` give the under-estimators; the over-estimators of
/// the convex parts are affine functions through the box vertices (requires
/// `2^n` evaluations, refused above [`DC_VERTEX_LIMIT`]).
pub fn dc_bounds(split: &DcSplit, x: &IntervalVector, m: &DVector<f64>, u: &[f64]) -> Result<DcBounds, RangeError> {
    let n = x.dim();
    if n > DC_VERTEX_LIMIT {
        return Err(RangeError::VertexLimit { dim: n, limit: DC_VERTEX_LIMIT });
    }
    if !x.is_subset_of(&split.domain) {
        return Err(RangeError::OutsideSplitDomain);
    }
    let p = split.g.n_outputs();
    let tangent = |part: &SymbolicDynamics| -> Result<Vec<Affine>, RangeError> {
        let v = part.eval(m.as_slice(), u)?;
        let j = part.jacobian(m.as_slice(), u)?;
        Ok((0..p)
            .map(|i| {
                let slope = j.row(i).transpose();
                Affine { offset: v[i] - slope.dot(m), slope }
            })
            .collect())
    };
    let vertices: Vec<Vec<f64>> = (0..1usize << n)
        .map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { x[k].hi } else { x[k].lo }).collect())
        .collect();
    let over = |part: &SymbolicDynamics| -> Result<Vec<Affine>, RangeError> {
        // Slopes: secants between the opposite faces through m along each axis.
        let mut slopes = DMatrix::zeros(p, n);
        for k in 0..n {
            if x[k].width() == 0.0 {
                continue;
            }
            let mut hi = m.as_slice().to_vec();
            let mut lo = hi.clone();
            hi[k] = x[k].hi;
            lo[k] = x[k].lo;
            let (fh, fl) = (part.eval(&hi, u)?, part.eval(&lo, u)?);
            for i in 0..p {
                slopes[(i, k)] = (fh[i] - fl[i]) / x[k].width();
            }
        }
        let mut alpha = vec![f64::NEG_INFINITY; p];
        for v in &vertices {
            let fv = part.eval(v, u)?;
            for i in 0..p {
                let lin: f64 = (0..n).map(|k| slopes[(i, k)] * (v[k] - m[k])).sum();
                alpha[i] = alpha[i].max(fv[i] - lin);
            }
        }
        Ok((0..p)
            .map(|i| {
                let slope = slopes.row(i).transpose();
                Affine { offset: alpha[i] - slope.dot(m), slope }
            })
            .collect())
    };
    let (g_t, h_t) = (tangent(&split.g)?, tangent(&split.h)?);
    let (g_o, h_o) = (over(&split.g)?, over(&split.h)?);
    let lower = (0..p)
        .map(|i| Affine { slope: &g_t[i].slope - &h_o[i].slope, offset: g_t[i].offset - h_o[i].offset })
        .collect();
    let upper = (0..p)
        .map(|i| Affine { slope: &g_o[i].slope - &h_t[i].slope, offset: g_o[i].offset - h_t[i].offset })
        .collect();
    Ok(DcBounds { lower, upper })
}

/// Set enclosure from DC bounds: `m_c X + o ⊕ diag(max_X (U - L)/2)`, where
/// `m_c`, `o` are the mean slope and offset of the bound pair.
pub fn dc_image(bounds: &DcBounds, x: &SetValue) -> Result<SetValue, RangeError> {
    let p = bounds.lower.len();
    let n = x.dim();
    let mut m = DMatrix::zeros(p, n);
    let mut o = DVector::zeros(p);
    let mut half_dirs = Vec::with_capacity(p);
    let mut half_off = Vec::with_capacity(p);
    for i in 0..p {
        let (l, up) = (&bounds.lower[i], &bounds.upper[i]);
        m.row_mut(i).copy_from(&((&l.slope + &up.slope) * 0.5).transpose());
        o[i] = 0.5 * (l.offset + up.offset);
        half_dirs.push((&up.slope - &l.slope) * 0.5);
        half_off.push(0.5 * (up.offset - l.offset));
    }
    let sup = x.supports(&half_dirs)?;
    let rad: Vec<f64> = (0..p).map(|i| (sup[i] + half_off[i]).max(0.0)).collect();
    let extra = IntervalVector::from_center_radius(&vec![0.0; p], &rad);
    affine_image(x, &m, &o, &extra)
}

/// A map `R^k -> R^p` with point evaluation and an interval Jacobian.
pub trait VectorMap {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, RangeError>;
    fn jacobian_interval(&self, b: &IntervalVector) -> Result<IntervalMatrix, RangeError>;
}

/// `x ↦ f(x, u)` for a fixed input.
pub struct WithInput<'a> {
    pub f: &'a SymbolicDynamics,
    pub u: &'a [f64],
}

impl VectorMap for WithInput<'_> {
    fn dim_in(&self) -> usize {
        self.f.n_states()
    }
    fn dim_out(&self) -> usize {
        self.f.n_outputs()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, RangeError> {
        Ok(self.f.eval(x, self.u)?)
    }
    fn jacobian_interval(&self, b: &IntervalVector) -> Result<IntervalMatrix, RangeError> {
        Ok(self.f.jacobian_interval(b, &point_box(self.u))?)
    }
}

/// Remainder of the lifted map `μ(ξ) = f(c + Gξ, u) - Hξ` with `H = ∂f/∂x(c) G`.
pub struct LiftedRemainder<'a> {
    f: &'a SymbolicDynamics,
    u: &'a [f64],
    center: DVector<f64>,
    generators: DMatrix<f64>,
    h: DMatrix<f64>,
    state_jacobian: IntervalMatrix,
}

impl<'a> LiftedRemainder<'a> {
    /// `state_hull` must contain `c + G [-1, 1]^r`.
    pub fn new(
        f: &'a SymbolicDynamics,
        u: &'a [f64],
        center: DVector<f64>,
        generators: DMatrix<f64>,
        state_hull: &IntervalVector,
    ) -> Result<Self, RangeError> {
        let jc = f.jacobian(center.as_slice(), u)?;
        let h = &jc * &generators;
        let state_jacobian = f.jacobian_interval(state_hull, &point_box(u))?.sub_real(&jc);
        Ok(LiftedRemainder { f, u, center, generators, h, state_jacobian })
    }

    /// `H = ∂f/∂x(c) G`.
    pub fn linear_part(&self) -> &DMatrix<f64> {
        &self.h
    }
}

impl VectorMap for LiftedRemainder<'_> {
    fn dim_in(&self) -> usize {
        self.generators.ncols()
    }
    fn dim_out(&self) -> usize {
        self.f.n_outputs()
    }
    fn eval(&self, xi: &[f64]) -> Result<Vec<f64>, RangeError> {
        let xi = DVector::from_column_slice(xi);
        let x = &self.center + &self.generators * &xi;
        let fx = DVector::from_vec(self.f.eval(x.as_slice(), self.u)?);
        Ok((fx - &self.h * xi).as_slice().to_vec())
    }
    /// `(J_f(hull) - J_f(c)) G`; valid for every `ξ` in the unit box.
    fn jacobian_interval(&self, _b: &IntervalVector) -> Result<IntervalMatrix, RangeError> {
        Ok(self.state_jacobian.mul_real(&self.generators))
    }
}

/// Jacobian-sign decomposition function of a map over a box:
/// `dᵢ(x, x̂) = Fᵢ(zⁱ) + Σⱼ αᵢⱼ (xⱼ - x̂ⱼ)` where `zⁱⱼ = x̂ⱼ` if `∂Fᵢ/∂xⱼ <= 0`
/// on the box, `zⁱⱼ = xⱼ` otherwise, and `αᵢⱼ = -inf ∂Fᵢ/∂xⱼ` when that
/// partial derivative changes sign.
pub struct DecompositionFunction<'a> {
    map: &'a dyn VectorMap,
    domain: IntervalVector,
    /// `true` where `zⁱⱼ` takes the second argument.
    flip: Vec<Vec<bool>>,
    alpha: Vec<Vec<(usize, f64)>>,
}

impl<'a> DecompositionFunction<'a> {
    pub fn new(map: &'a dyn VectorMap, domain: IntervalVector) -> Result<Self, RangeError> {
        let j = map.jacobian_interval(&domain)?;
        let (p, k) = (map.dim_out(), map.dim_in());
        let mut flip = vec![vec![false; k]; p];
        let mut alpha = vec![Vec::new(); p];
        for i in 0..p {
            for c in 0..k {
                let e = j.get(i, c);
                if !e.is_finite() {
                    return Err(RangeError::Eval(EvalError {
                        node: String::from("jacobian"),
                        fault: crate::interval::IntervalFault::NotFinite,
                    }));
                }
                if e.lo >= 0.0 {
                } else if e.hi <= 0.0 {
                    flip[i][c] = true;
                } else {
                    alpha[i].push((c, -e.lo));
                }
            }
        }
        Ok(DecompositionFunction { map, domain, flip, alpha })
    }

    pub fn domain(&self) -> &IntervalVector {
        &self.domain
    }

    pub fn eval(&self, x: &[f64], xh: &[f64]) -> Result<Vec<f64>, RangeError> {
        let p = self.map.dim_out();
        let mut out = vec![0.0; p];
        let mut z = vec![0.0; x.len()];
        // Rows with the same sign pattern share one evaluation.
        let mut cache: Vec<(usize, Vec<f64>)> = Vec::new();
        for i in 0..p {
            let row = &self.flip[i];
            let hit = cache.iter().find(|(r, _)| self.flip[*r] == *row).map(|(_, v)| v.clone());
            let fz = match hit {
                Some(v) => v,
                None => {
                    for c in 0..x.len() {
                        z[c] = if row[c] { xh[c] } else { x[c] };
                    }
                    let v = self.map.eval(&z)?;
                    cache.push((i, v.clone()));
                    v
                }
            };
            out[i] = fz[i] + self.alpha[i].iter().map(|&(c, a)| a * (x[c] - xh[c])).sum::<f64>();
        }
        Ok(out)
    }
}

/// `[d(lower, upper), d(upper, lower)]` componentwise.
pub fn mixed_monotone_bounds(d: &DecompositionFunction<'_>, b: &IntervalVector) -> Result<IntervalVector, RangeError> {
    let lo = b.lower();
    let hi = b.upper();
    let l = d.eval(lo.as_slice(), hi.as_slice())?;
    let u = d.eval(hi.as_slice(), lo.as_slice())?;
    Ok(IntervalVector::new(l.iter().zip(&u).map(|(a, b)| Interval::new(a.min(*b), a.max(*b))).collect()))
}

/// Mixed-monotone image of `c + G ξ`, `ξ ∈ [-1, 1]^r` (constraints relaxed):
/// returns `(H, μ)` with `f(c + Gξ) ∈ H ξ + μ`.
pub fn lifted_bounds(
    f: &SymbolicDynamics,
    u: &[f64],
    center: &DVector<f64>,
    generators: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, IntervalVector), RangeError> {
    let r = generators.ncols();
    let relaxed = Zonotope::new(center.clone(), generators.clone())?;
    let hull = relaxed.interval_hull();
    let lifted = LiftedRemainder::new(f, u, center.clone(), generators.clone(), &hull)?;
    let unit = IntervalVector::unit(r, 1.0);
    let d = DecompositionFunction::new(&lifted, unit.clone())?;
    let mu = mixed_monotone_bounds(&d, &unit)?;
    Ok((lifted.linear_part().clone(), mu))
}

/// Assembles `{ H ξ + μ : ξ ∈ dom }` as a constrained zonotope sharing the
/// constraints of `cz`.
pub fn lifted_cz(cz: &ConstrainedZonotope, h: &DMatrix<f64>, mu: &IntervalVector) -> Result<ConstrainedZonotope, RangeError> {
    let box_gens = nonzero_columns(&diag(&mu.radius()), 0.0);
    let g = hcat(h, &box_gens);
    let a = hcat(cz.constraint_matrix(), &DMatrix::zeros(cz.n_constraints(), box_gens.ncols()));
    Ok(ConstrainedZonotope::new(mu.center(), g, a, cz.constraint_offset().clone())?)
}
