//! `x_{k+1} = f(x_k, u_k) + w_k`, `y_k = C x_k + v_k` with `w_k ∈ W`, `v_k ∈ V`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{EvalError, SymbolicDynamics};
use crate::interval::IntervalVector;
use crate::setcore::{SetError, SetValue};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("simulation failed at step {step}: {source}")]
    Simulation { step: usize, source: EvalError },
    #[error("input sequence has {found} entries, {needed} needed")]
    ShortInputs { needed: usize, found: usize },
    #[error("the grid oracle supports at most two states (got {0})")]
    OracleDimension(usize),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug)]
pub struct NonlinearDiscreteSystem {
    pub f: SymbolicDynamics,
    pub c: DMatrix<f64>,
    pub w: IntervalVector,
    pub v: IntervalVector,
}

impl NonlinearDiscreteSystem {
    pub fn new(f: SymbolicDynamics, c: DMatrix<f64>, w: IntervalVector, v: IntervalVector) -> Result<Self, ModelError> {
        let n = f.n_states();
        let dim = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(ModelError::Dimension { what, expected, found })
            }
        };
        dim("dynamics outputs", n, f.n_outputs())?;
        dim("measurement matrix columns", n, c.ncols())?;
        dim("disturbance box", n, w.dim())?;
        dim("noise box", c.nrows(), v.dim())?;
        Ok(NonlinearDiscreteSystem { f, c, w, v })
    }

    pub fn n_states(&self) -> usize {
        self.f.n_states()
    }

    pub fn n_inputs(&self) -> usize {
        self.f.n_inputs()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `f(x, u) + w`.
    pub fn step_truth(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>, EvalError> {
        Ok(DVector::from_vec(self.f.eval(x.as_slice(), u.as_slice())?) + w)
    }

    /// `C x + v`.
    pub fn measure(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.c * x + v
    }
}

/// States `x_0..x_K`, measurements `y_0..y_K`, inputs `u_0..u_{K-1}` and the
/// drawn disturbances and noises.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub disturbances: Vec<DVector<f64>>,
    pub noises: Vec<DVector<f64>>,
    pub seed: u64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }
}

/// Uniform sample from a box (flat axes return their single value).
pub fn sample_box<R: Rng>(rng: &mut R, b: &IntervalVector) -> DVector<f64> {
    DVector::from_iterator(
        b.dim(),
        b.comps().iter().map(|iv| if iv.width() > 0.0 { rng.random_range(iv.lo..=iv.hi) } else { iv.lo }),
    )
}

fn simulate_with(
    sys: &NonlinearDiscreteSystem,
    x0: DVector<f64>,
    u_seq: &[DVector<f64>],
    steps: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, ModelError> {
    if u_seq.len() < steps {
        return Err(ModelError::ShortInputs { needed: steps, found: u_seq.len() });
    }
    if x0.len() != sys.n_states() {
        return Err(ModelError::Dimension { what: "initial state", expected: sys.n_states(), found: x0.len() });
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut measurements = Vec::with_capacity(steps + 1);
    let mut disturbances = Vec::with_capacity(steps);
    let mut noises = Vec::with_capacity(steps + 1);
    let mut x = x0;
    for k in 0..=steps {
        let v = sample_box(rng, &sys.v);
        measurements.push(sys.measure(&x, &v));
        noises.push(v);
        if k == steps {
            states.push(x);
            break;
        }
        let w = sample_box(rng, &sys.w);
        let next = sys
            .step_truth(&x, &u_seq[k], &w)
            .map_err(|source| ModelError::Simulation { step: k, source })?;
        disturbances.push(w);
        states.push(core::mem::replace(&mut x, next));
    }
    Ok(Trajectory { states, inputs: u_seq[..steps].to_vec(), measurements, disturbances, noises, seed })
}

/// Simulates from a given initial state with uniform `w`, `v` drawn from a
/// ChaCha8 generator seeded with `seed`.
pub fn simulate(
    sys: &NonlinearDiscreteSystem,
    x0: &DVector<f64>,
    u_seq: &[DVector<f64>],
    steps: usize,
    seed: u64,
) -> Result<Trajectory, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(sys, x0.clone(), u_seq, steps, seed, &mut rng)
}

/// Draws `x_0` uniformly from `r0` (first draws of the generator), then
/// simulates as [`simulate`].
pub fn simulate_from_box(
    sys: &NonlinearDiscreteSystem,
    r0: &IntervalVector,
    u_seq: &[DVector<f64>],
    steps: usize,
    seed: u64,
) -> Result<Trajectory, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = sample_box(&mut rng, r0);
    simulate_with(sys, x0, u_seq, steps, seed, &mut rng)
}

/// Grid approximation of the one-step consistent set.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCloud {
    pub points: Vec<DVector<f64>>,
    /// True when no grid point is consistent with the measurement.
    pub empty: bool,
}

/// Grid points `x⁻` of `hull(prev)` at spacing `grid_res` that lie in `prev`
/// are mapped to `f(x⁻, u) + w` for `w` at the corners and center of `W`;
/// images with `y - C x ∈ V` are kept. Every returned point is consistent
/// with `prev`, the dynamics and `y`.
pub fn consistent_set_oracle(
    sys: &NonlinearDiscreteSystem,
    prev: &SetValue,
    u: &DVector<f64>,
    y: &DVector<f64>,
    grid_res: f64,
) -> Result<OracleCloud, ModelError> {
    let n = sys.n_states();
    if n > 2 || n == 0 {
        return Err(ModelError::OracleDimension(n));
    }
    let hull = prev.interval_hull()?;
    let axis = |i: usize| -> Vec<f64> {
        let iv = hull[i];
        let k = crate::math::floor(iv.width() / grid_res) as usize;
        let mut pts: Vec<f64> = (0..=k).map(|j| iv.lo + j as f64 * grid_res).collect();
        if pts.last().is_some_and(|&p| p < iv.hi) {
            pts.push(iv.hi);
        }
        pts
    };
    let grids: Vec<Vec<f64>> = (0..n).map(axis).collect();
    let mut w_pts = alloc::vec![sys.w.center()];
    for mask in 0..1usize << n {
        w_pts.push(DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { sys.w[i].hi } else { sys.w[i].lo }));
    }
    let consistent = |x: &DVector<f64>| {
        let r = y - &sys.c * x;
        (0..r.len()).all(|i| sys.v[i].contains(r[i]))
    };
    let mut points = Vec::new();
    let mut visit = |xm: DVector<f64>| -> Result<(), ModelError> {
        let fx = DVector::from_vec(sys.f.eval(xm.as_slice(), u.as_slice())?);
        let imgs: Vec<DVector<f64>> = w_pts.iter().map(|w| &fx + w).filter(|x| consistent(x)).collect();
        if imgs.is_empty() || !prev.contains_point(&xm)? {
            return Ok(());
        }
        points.extend(imgs);
        Ok(())
    };
    if n == 1 {
        for &a in &grids[0] {
            visit(DVector::from_element(1, a))?;
        }
    } else {
        for &a in &grids[0] {
            for &b in &grids[1] {
                visit(DVector::from_vec(alloc::vec![a, b]))?;
            }
        }
    }
    let empty = points.is_empty();
    Ok(OracleCloud { points, empty })
}
