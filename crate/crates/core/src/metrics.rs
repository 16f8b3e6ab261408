//! Conservatism measures of estimate sequences.

use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math;
use crate::setcore::{SetError, SetValue};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("empty set at position {0}")]
    EmptySet(usize),
    #[error("no sets to measure")]
    NoSteps,
    #[error("no finite value to normalize by")]
    AllInfinite,
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Per-method summary over one horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub avg_step_ms: f64,
    pub v_tilde: f64,
    pub w_tilde: f64,
    pub v_hat: f64,
    pub w_hat: f64,
    pub completed_steps: usize,
    pub diverged: bool,
}

/// `(1/K) Σₖ vol(hull(Rₖ))^{1/n}`.
pub fn interval_volume_measure(seq: &[SetValue]) -> Result<f64, MetricError> {
    if seq.is_empty() {
        return Err(MetricError::NoSteps);
    }
    let mut total = 0.0;
    for (k, s) in seq.iter().enumerate() {
        if s.is_empty_marker() {
            return Err(MetricError::EmptySet(k));
        }
        let hull = s.interval_hull()?;
        let inv = 1.0 / hull.dim() as f64;
        let vol: f64 = hull.widths().product();
        total += if vol.is_normal() {
            math::powf(vol, inv)
        } else {
            // Product of n-th roots keeps large dimensions in range.
            hull.widths().map(|w| math::powf(w, inv)).product::<f64>()
        };
    }
    Ok(total / seq.len() as f64)
}

/// `(1/(N K)) Σₖ Σᵢ ρ(Rₖ, dᵢ) + ρ(Rₖ, -dᵢ)`.
pub fn mean_width_measure(seq: &[SetValue], dirs: &[DVector<f64>]) -> Result<f64, MetricError> {
    if seq.is_empty() || dirs.is_empty() {
        return Err(MetricError::NoSteps);
    }
    let both: Vec<DVector<f64>> = dirs.iter().flat_map(|d| [d.clone(), -d]).collect();
    let mut total = 0.0;
    for (k, s) in seq.iter().enumerate() {
        if s.is_empty_marker() {
            return Err(MetricError::EmptySet(k));
        }
        total += s.supports(&both)?.iter().sum::<f64>();
    }
    Ok(total / (dirs.len() * seq.len()) as f64)
}

/// Divides every finite entry by the finite minimum; infinities stay.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    let min = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(MetricError::AllInfinite);
    }
    Ok(values.iter().map(|&v| if !v.is_finite() { f64::INFINITY } else if v == min { 1.0 } else { v / min }).collect())
}

/// `10 n` normalized Gaussian directions from a ChaCha8 generator.
pub fn sample_directions(n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(10 * n);
    while out.len() < 10 * n {
        let d: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = d.norm();
        if norm > 1e-12 {
            out.push(d / norm);
        }
    }
    out
}
