use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::zonotope::{check_dim, Zonotope};
use super::{SetError, MEMBERSHIP_TOL};
use crate::interval::Interval;
use crate::linalg::hcat;
use crate::math;

/// `{ x : y - cᵀx ∈ [v̲, v̄] }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Strip {
    normal: DVector<f64>,
    offset: f64,
    noise: Interval,
}

impl Strip {
    pub fn new(normal: DVector<f64>, offset: f64, noise: Interval) -> Result<Self, SetError> {
        if normal.iter().all(|v| *v == 0.0) {
            return Err(SetError::InvalidArgument("strip normal must be nonzero"));
        }
        if !(offset.is_finite() && noise.is_finite() && normal.iter().all(|v| v.is_finite())) {
            return Err(SetError::InvalidArgument("strip data must be finite"));
        }
        Ok(Strip { normal, offset, noise })
    }

    /// One strip per row of `c`.
    pub fn from_measurement(c: &DMatrix<f64>, y: &DVector<f64>, v: &[Interval]) -> Result<Vec<Strip>, SetError> {
        check_dim(c.nrows(), y.len())?;
        check_dim(c.nrows(), v.len())?;
        (0..c.nrows())
            .map(|j| Strip::new(c.row(j).transpose(), y[j], v[j]))
            .collect()
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn noise(&self) -> Interval {
        self.noise
    }

    /// Centered form `|cᵀx - ỹ| <= σ`: returns `(ỹ, σ)`.
    pub fn centered(&self) -> (f64, f64) {
        (self.offset - self.noise.mid(), self.noise.rad())
    }

    /// Range of `cᵀx` admitted by the strip.
    pub fn admissible(&self) -> Interval {
        Interval::new(self.offset - self.noise.hi, self.offset - self.noise.lo)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let r = self.offset - self.normal.dot(x);
        r >= self.noise.lo - tol && r <= self.noise.hi + tol
    }
}

/// Gains the correction uses to pick a member of the over-approximating family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainSelector {
    /// Minimizes the Frobenius norm of the corrected generator matrix.
    Frobenius,
    /// Line search along the Frobenius gain minimizing the hull volume.
    VolumeLineSearch,
    /// Best hull volume among the closed-form candidates that zero out one generator.
    VolumeCandidates,
}

/// `c' = c + λ(ỹ - cⱼᵀ c)`, `G' = [(I - λ cⱼᵀ) G, σ λ]`. Contains `Z ∩ strip`
/// for every `λ`.
pub fn strip_intersection_gain(z: &Zonotope, strip: &Strip, lambda: &DVector<f64>) -> Result<Zonotope, SetError> {
    check_dim(strip.normal.len(), z.dim())?;
    check_dim(lambda.len(), z.dim())?;
    if lambda.iter().all(|v| *v == 0.0) {
        return Ok(z.clone());
    }
    let (yt, sigma) = strip.centered();
    let c = z.center();
    let g = z.generators();
    let innovation = yt - strip.normal.dot(c);
    let center = c + lambda * innovation;
    let cg = strip.normal.tr_mul(g); // 1×r
    let mut gens = g - lambda * &cg;
    if sigma > 0.0 {
        gens = hcat(&gens, &DMatrix::from_column_slice(z.dim(), 1, (lambda * sigma).as_slice()));
    }
    Zonotope::new(center, gens)
}

/// `λ = G Gᵀ c / (cᵀ G Gᵀ c + σ²)`, or zero when the denominator vanishes.
pub fn frobenius_gain(z: &Zonotope, strip: &Strip) -> DVector<f64> {
    let (_, sigma) = strip.centered();
    let g = z.generators();
    let gtc = g.tr_mul(&strip.normal);
    let num = g * &gtc;
    let den = gtc.norm_squared() + sigma * sigma;
    if den > 0.0 && den.is_finite() {
        num / den
    } else {
        DVector::zeros(z.dim())
    }
}

/// Largest number of generator subsets summed for an exact zonotope volume.
pub const EXACT_VOLUME_SUBSETS: usize = 20_000;

fn subset_count(r: usize, n: usize) -> Option<usize> {
    if n > r {
        return Some(0);
    }
    let mut acc: usize = 1;
    for k in 0..n {
        acc = acc.checked_mul(r - k)? / (k + 1);
    }
    Some(acc)
}

/// Log volume of a zonotope: exactly `ln(2ⁿ Σ_S |det G_S|)` over the
/// `n`-subsets of generators when there are at most
/// [`EXACT_VOLUME_SUBSETS`] of them, otherwise `½ ln det(G Gᵀ)` plus the same
/// scale factor.
pub fn log_volume(z: &Zonotope) -> f64 {
    let g = z.generators();
    let (n, r) = (z.dim(), z.n_generators());
    if n == 0 {
        return 0.0;
    }
    let scale = n as f64 * math::ln(2.0);
    if subset_count(r, n).is_some_and(|c| c <= EXACT_VOLUME_SUBSETS) {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        if n <= r {
            loop {
                total += g.select_columns(idx.iter()).determinant().abs();
                // Next combination in lexicographic order.
                let mut k = n;
                while k > 0 && idx[k - 1] == r - n + k - 1 {
                    k -= 1;
                }
                if k == 0 {
                    break;
                }
                idx[k - 1] += 1;
                for l in k..n {
                    idx[l] = idx[l - 1] + 1;
                }
            }
        }
        return if total > 0.0 { scale + math::ln(total) } else { f64::NEG_INFINITY };
    }
    if r < n {
        return f64::NEG_INFINITY;
    }
    // det(G Gᵀ) = Π Rᵢᵢ² for Gᵀ = QR, without forming the product.
    let qr = g.transpose().qr();
    scale + qr.r().diagonal().iter().map(|v| math::ln(v.abs())).sum::<f64>()
}

/// Golden-section search of `t ∈ [0, 2]` on `λ = t λ_F` minimizing
/// [`log_volume`] of the result.
pub fn volume_gain_line_search(z: &Zonotope, strip: &Strip) -> Result<DVector<f64>, SetError> {
    let base = frobenius_gain(z, strip);
    if base.iter().all(|v| *v == 0.0) {
        return Ok(base);
    }
    let objective = |t: f64| -> Result<f64, SetError> {
        Ok(log_volume(&strip_intersection_gain(z, strip, &(&base * t))?))
    };
    let t = golden_section(0.0, 2.0, 1e-8, objective)?;
    Ok(base * t)
}

/// Candidate gains `{0} ∪ { hⱼ / (cᵀ hⱼ) }` together with the Frobenius gain;
/// the one giving the smallest [`log_volume`] is returned.
pub fn volume_gain_candidates(z: &Zonotope, strip: &Strip) -> Result<DVector<f64>, SetError> {
    let n = z.dim();
    let g = z.generators();
    let mut best = DVector::zeros(n);
    let mut best_val = log_volume(z);
    let mut consider = |lam: DVector<f64>| -> Result<(), SetError> {
        if !lam.iter().all(|v| v.is_finite()) {
            return Ok(());
        }
        let v = log_volume(&strip_intersection_gain(z, strip, &lam)?);
        if v < best_val {
            best_val = v;
            best = lam;
        }
        Ok(())
    };
    for j in 0..g.ncols() {
        let h = g.column(j);
        let ch = strip.normal.dot(&h);
        if ch.abs() > 1e-12 * h.amax().max(1e-300) {
            consider(h / ch)?;
        }
    }
    consider(frobenius_gain(z, strip))?;
    Ok(best)
}

/// Range of `cᵀx` over `z` against the strip: `Err(Empty)` when disjoint,
/// `Ok(true)` when the strip already contains `z`.
fn strip_covers(z: &Zonotope, strip: &Strip) -> Result<bool, SetError> {
    check_dim(strip.normal.len(), z.dim())?;
    let mid = strip.normal.dot(z.center());
    let rad: f64 = (strip.normal.transpose() * z.generators()).iter().map(|v| v.abs()).sum();
    let adm = strip.admissible();
    if mid - rad > adm.hi + MEMBERSHIP_TOL || mid + rad < adm.lo - MEMBERSHIP_TOL {
        return Err(SetError::Empty);
    }
    Ok(mid - rad >= adm.lo && mid + rad <= adm.hi)
}

/// Applies the gain chosen by `selector`. A strip containing `z` leaves it
/// unchanged and a disjoint one gives `Err(Empty)`.
pub fn correct_with_strip(z: &Zonotope, strip: &Strip, selector: GainSelector) -> Result<Zonotope, SetError> {
    if strip_covers(z, strip)? {
        return Ok(z.clone());
    }
    let lambda = match selector {
        GainSelector::Frobenius => frobenius_gain(z, strip),
        GainSelector::VolumeLineSearch => volume_gain_line_search(z, strip)?,
        GainSelector::VolumeCandidates => volume_gain_candidates(z, strip)?,
    };
    strip_intersection_gain(z, strip, &lambda)
}

/// Joint correction with all strips at once:
/// `Λ = G Gᵀ Cᵀ (C G Gᵀ Cᵀ + Σ²)⁻¹`, `c' = c + Λ(ỹ - C c)`, `G' = [(I - ΛC) G, Λ Σ]`.
pub fn joint_frobenius_correction(z: &Zonotope, strips: &[Strip]) -> Result<Zonotope, SetError> {
    let n = z.dim();
    let mut active = Vec::with_capacity(strips.len());
    for s in strips {
        if !strip_covers(z, s)? {
            active.push(s);
        }
    }
    let strips = active;
    let p = strips.len();
    if p == 0 {
        return Ok(z.clone());
    }
    let mut cm = DMatrix::zeros(p, n);
    let mut yt = DVector::zeros(p);
    let mut sig = DVector::zeros(p);
    for (j, s) in strips.iter().enumerate() {
        check_dim(s.normal.len(), n)?;
        cm.row_mut(j).copy_from(&s.normal.transpose());
        let (y, sg) = s.centered();
        yt[j] = y;
        sig[j] = sg;
    }
    let g = z.generators();
    let cg = &cm * g;
    let mut s = &cg * cg.transpose();
    for j in 0..p {
        s[(j, j)] += sig[j] * sig[j];
    }
    let Some(s_inv) = s.clone().try_inverse().or_else(|| s.clone().pseudo_inverse(1e-12).ok()) else {
        return Ok(z.clone());
    };
    let lambda = g * cg.transpose() * s_inv;
    if !lambda.iter().all(|v| v.is_finite()) {
        return Ok(z.clone());
    }
    let innovation = &yt - &cm * z.center();
    let center = z.center() + &lambda * innovation;
    let gens = g - &lambda * &cg;
    let noise_cols = &lambda * DMatrix::from_diagonal(&sig);
    let noise_cols = crate::linalg::nonzero_columns(&noise_cols, 0.0);
    Zonotope::new(center, hcat(&gens, &noise_cols))
}

/// Minimizes a unimodal `f` on `[a, b]` to width `tol`; the endpoints are
/// also compared so that a monotone objective returns the better end.
pub(crate) fn golden_section<E>(
    mut a: f64,
    mut b: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64, E>,
) -> Result<f64, E> {
    let lo = a;
    let hi = b;
    let invphi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iters = 0;
    while b - a > tol && iters < 200 {
        iters += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2)?;
        }
    }
    let mut best = 0.5 * (a + b);
    let mut best_val = f(best)?;
    for t in [lo, hi] {
        let v = f(t)?;
        if v < best_val {
            best_val = v;
            best = t;
        }
    }
    Ok(best)
}
