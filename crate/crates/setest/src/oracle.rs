//! Brute-force consistent sets of two-dimensional benchmarks.

use std::collections::HashSet;

use nalgebra::DVector;
use setest_core::interval::IntervalVector;
use setest_core::sysmodel::{NonlinearDiscreteSystem, Trajectory};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("the oracle supports 1 or 2 states, the system has {0}")]
    Dimension(usize),
    #[error("grid resolution must be > 0")]
    Grid,
}

/// Consistent points per step; `empty_at` is the first step without any.
#[derive(Clone, Debug)]
pub struct Clouds {
    pub steps: Vec<Vec<DVector<f64>>>,
    pub empty_at: Option<usize>,
}

fn consistent(sys: &NonlinearDiscreteSystem, x: &DVector<f64>, y: &DVector<f64>) -> bool {
    let r = y - &sys.c * x;
    (0..r.len()).all(|i| sys.v[i].contains(r[i]))
}

/// Corners and center of `W`.
fn disturbance_samples(w: &IntervalVector) -> Vec<DVector<f64>> {
    let n = w.dim();
    let mut out: Vec<DVector<f64>> = (0..1usize << n)
        .map(|mask| DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { w[i].hi } else { w[i].lo }))
        .collect();
    out.push(w.center());
    out
}

/// Keeps the first point of every grid cell.
fn thin(points: Vec<DVector<f64>>, grid: f64) -> Vec<DVector<f64>> {
    let mut seen = HashSet::new();
    points
        .into_iter()
        .filter(|p| seen.insert(p.iter().map(|x| (x / grid).floor() as i64).collect::<Vec<_>>()))
        .collect()
}

/// Grid points of `r0` consistent with `y₀`, pushed through the dynamics with
/// the extreme and central disturbances and filtered by every later
/// measurement. Each point is a state that the trajectory's data cannot rule out.
pub fn consistent_clouds(
    sys: &NonlinearDiscreteSystem,
    r0: &IntervalVector,
    traj: &Trajectory,
    steps: usize,
    grid: f64,
) -> Result<Clouds, OracleError> {
    let n = sys.n_states();
    if n == 0 || n > 2 {
        return Err(OracleError::Dimension(n));
    }
    if !(grid > 0.0) {
        return Err(OracleError::Grid);
    }
    let axis = |i: usize| -> Vec<f64> {
        let iv = r0[i];
        let k = (iv.width() / grid).floor() as usize;
        let mut pts: Vec<f64> = (0..=k).map(|j| iv.lo + j as f64 * grid).collect();
        if pts.last().is_some_and(|&p| p < iv.hi) {
            pts.push(iv.hi);
        }
        pts
    };
    let mut cloud: Vec<DVector<f64>> = match n {
        1 => axis(0).into_iter().map(|a| DVector::from_element(1, a)).collect(),
        _ => {
            let (xs, ys) = (axis(0), axis(1));
            xs.iter().flat_map(|a| ys.iter().map(move |b| DVector::from_vec(vec![*a, *b]))).collect()
        }
    };
    cloud.retain(|x| consistent(sys, x, &traj.measurements[0]));
    let ws = disturbance_samples(&sys.w);
    let mut out = Clouds { steps: vec![cloud], empty_at: None };
    for k in 1..=steps.min(traj.steps()) {
        let prev = out.steps.last().expect("step 0 exists");
        if prev.is_empty() {
            out.empty_at = Some(k - 1);
            break;
        }
        let mut next = Vec::new();
        for p in prev {
            // Points leaving the model's domain cannot be states.
            let Ok(fx) = sys.step_truth(p, &traj.inputs[k - 1], &DVector::zeros(n)) else { continue };
            next.extend(ws.iter().map(|w| &fx + w).filter(|x| consistent(sys, x, &traj.measurements[k])));
        }
        out.steps.push(thin(next, grid));
    }
    if out.empty_at.is_none() && out.steps.last().is_some_and(Vec::is_empty) {
        out.empty_at = Some(out.steps.len() - 1);
    }
    Ok(out)
}
