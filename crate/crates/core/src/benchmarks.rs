//! Van der Pol and cascaded-tank benchmarks.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::expr::{ExprError, SymbolicDynamics};
use crate::interval::{Interval, IntervalVector};
use crate::rangebound::DcSplit;
use crate::setcore::ReductionMethod;
use crate::sysmodel::{ModelError, NonlinearDiscreteSystem};

pub const VDP_DT: f64 = 0.025;
pub const TANK_DT: f64 = 0.5;
pub const GRAVITY: f64 = 9.81;
pub const TANK_AREA: f64 = 1.0;
pub const TANK_KAPPA: f64 = 0.015;
/// Known inflow at every inflow tank.
pub const TANK_INFLOW: f64 = 0.1;
/// 1-based inflow tanks of the 30-tank layout.
pub const TANK30_INFLOW: [usize; 15] = [1, 4, 5, 7, 9, 10, 13, 15, 16, 19, 21, 22, 25, 27, 28];
/// 1-based measured tanks of the 30-tank layout.
pub const TANK30_MEASURED: [usize; 21] = [2, 4, 5, 7, 8, 10, 11, 13, 14, 16, 17, 19, 20, 21, 22, 23, 25, 26, 27, 28, 29];

/// Half-width of the `x₂` range on which the Van der Pol DC split is convex;
/// the split's domain is `[-R, R]²`.
pub const VDP_DC_RADIUS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{0}`")]
    Unknown(String),
    #[error("invalid benchmark parameter: {0}")]
    Parameter(String),
    #[error("redundant-state augmentation is not provided for {0}")]
    AugmentationRefused(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budgets {
    pub max_order: f64,
    pub max_constraints: usize,
    pub partitions: usize,
    pub reduction: ReductionMethod,
}

/// Lifted system with redundant states `z = T x` and the constraint
/// `G_aug [x; z] = 0`, `G_aug = [T  -I]`.
#[derive(Clone, Debug)]
pub struct Augmentation {
    pub system: NonlinearDiscreteSystem,
    pub r0: IntervalVector,
    pub g_aug: DMatrix<f64>,
    /// Number of original states (the leading coordinates).
    pub base_dim: usize,
}

#[derive(Clone, Debug)]
pub struct BenchmarkSpec {
    pub name: String,
    pub system: NonlinearDiscreteSystem,
    pub r0: IntervalVector,
    /// Constant input applied at every step.
    pub input: DVector<f64>,
    pub budgets: Budgets,
    pub steps: usize,
    pub dc_split: Option<DcSplit>,
    pub augmentation: Option<Augmentation>,
}

impl BenchmarkSpec {
    pub fn inputs(&self, steps: usize) -> Vec<DVector<f64>> {
        vec![self.input.clone(); steps]
    }
}

fn lit(x: f64) -> String {
    format!("{x:?}")
}

fn vdp_components(mu: f64) -> [String; 2] {
    let dt = lit(VDP_DT);
    [
        format!("x1 + {dt}*x2"),
        format!("x2 + {dt}*({}*(1 - x1^2)*x2 - x1)", lit(mu)),
    ]
}

/// Van der Pol oscillator, Euler-discretized.
pub fn make_vdp(mu: f64) -> Result<BenchmarkSpec, BenchmarkError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(BenchmarkError::Parameter(format!("mu must be positive, got {mu}")));
    }
    let f = SymbolicDynamics::parse(2, 0, &vdp_components(mu))?;
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let system = NonlinearDiscreteSystem::new(f, c, IntervalVector::unit(2, 0.001), IntervalVector::unit(1, 0.2))?;
    let r0 = IntervalVector::unit(2, 1.0);
    Ok(BenchmarkSpec {
        name: format!("vdp:{}", mu),
        augmentation: Some(augment(&system, &r0, &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]))?),
        dc_split: Some(vdp_dc_split(mu)?),
        system,
        r0,
        input: DVector::zeros(0),
        budgets: Budgets { max_order: 30.0, max_constraints: 5, partitions: 5, reduction: ReductionMethod::Pca },
        steps: 100,
    })
}

/// `µ x₁² x₂ = (µ/8)[(x₁² + s + 2x₂)² - (x₁² + s - 2x₂)²] - µ s x₂` with
/// `s = 2R`; both squares are convex where `|x₂| <= R`.
pub fn vdp_dc_split(mu: f64) -> Result<DcSplit, BenchmarkError> {
    let dt = lit(VDP_DT);
    let s = lit(2.0 * VDP_DC_RADIUS);
    let k = lit(VDP_DT * mu / 8.0);
    let lin = format!("x2 + {dt}*({}*x2 - x1) + {dt}*{}*{s}*x2", lit(mu), lit(mu));
    let g = SymbolicDynamics::parse(
        2,
        0,
        &[format!("x1 + {dt}*x2"), format!("{lin} + {k}*(x1^2 + {s} - 2*x2)^2")],
    )?;
    let h = SymbolicDynamics::parse(2, 0, &["0".to_string(), format!("{k}*(x1^2 + {s} + 2*x2)^2")])?;
    Ok(DcSplit { g, h, domain: IntervalVector::unit(2, VDP_DC_RADIUS) })
}

/// 1-based inflow and measured tank indices for an `n`-tank chain.
pub fn tank_layout(n: usize) -> (Vec<usize>, Vec<usize>) {
    let keep = |v: &[usize]| v.iter().copied().filter(|&i| i <= n).collect::<Vec<_>>();
    (keep(&TANK30_INFLOW), keep(&TANK30_MEASURED))
}

fn tank_components(n: usize, inflow: &[usize], with_inputs: bool) -> Vec<String> {
    let dt = lit(TANK_DT / TANK_AREA);
    let k = lit(TANK_KAPPA);
    let two_g = lit(2.0 * GRAVITY);
    (1..=n)
        .map(|i| {
            let mut inner = format!("-{k}*sqrt({two_g}*x{i})");
            if i > 1 {
                inner = format!("{k}*sqrt({two_g}*x{}) {inner}", i - 1);
            }
            if with_inputs {
                if let Some(j) = inflow.iter().position(|&t| t == i) {
                    inner = format!("{inner} + u{}", j + 1);
                }
            }
            format!("x{i} + {dt}*({inner})")
        })
        .collect()
}

/// Cascade of `n` tanks draining through Torricelli orifices.
pub fn make_tank(n: usize) -> Result<BenchmarkSpec, BenchmarkError> {
    if n < 2 {
        return Err(BenchmarkError::Parameter(format!("tank chain needs n >= 2, got {n}")));
    }
    let (inflow, measured) = tank_layout(n);
    let m = inflow.len();
    let f = SymbolicDynamics::parse(n, m, &tank_components(n, &inflow, true))?;
    let mut c = DMatrix::zeros(measured.len(), n);
    for (row, &t) in measured.iter().enumerate() {
        c[(row, t - 1)] = 1.0;
    }
    let r = measured.len();
    let system = NonlinearDiscreteSystem::new(f, c, IntervalVector::unit(n, 0.001), IntervalVector::unit(r, 0.2))?;
    let r0 = IntervalVector::new(vec![Interval::new(16.0, 24.0); n]);
    let max_constraints = match n {
        6 => 12,
        30 => 60,
        _ => 2 * n,
    };
    let augmentation = tank_augment_redundant_for(&system, &r0, n).ok();
    Ok(BenchmarkSpec {
        name: format!("tank:{n}"),
        dc_split: Some(tank_dc_split(n)?),
        augmentation,
        system,
        r0,
        input: DVector::from_element(m, TANK_INFLOW),
        budgets: Budgets { max_order: 20.0, max_constraints, partitions: 5, reduction: ReductionMethod::Pca },
        steps: 100,
    })
}

/// `gᵢ = xᵢ - d κ sqrt(2g xᵢ) + d uⱼ`, `hᵢ = -d κ sqrt(2g xᵢ₋₁)`.
pub fn tank_dc_split(n: usize) -> Result<DcSplit, BenchmarkError> {
    let (inflow, _) = tank_layout(n);
    let dt = lit(TANK_DT / TANK_AREA);
    let k = lit(TANK_KAPPA);
    let two_g = lit(2.0 * GRAVITY);
    let mut g = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 1..=n {
        let mut gi = format!("x{i} - {dt}*{k}*sqrt({two_g}*x{i})");
        if let Some(j) = inflow.iter().position(|&t| t == i) {
            gi = format!("{gi} + {dt}*u{}", j + 1);
        }
        g.push(gi);
        h.push(if i > 1 { format!("-{dt}*{k}*sqrt({two_g}*x{})", i - 1) } else { "0".to_string() });
    }
    let m = inflow.len();
    Ok(DcSplit {
        g: SymbolicDynamics::parse(n, m, &g)?,
        h: SymbolicDynamics::parse(n, m, &h)?,
        domain: IntervalVector::new(vec![Interval::new(0.0, 1e6); n]),
    })
}

/// Lifts `sys` with `z = T x`: `z⁺ = T f(x)`, `W̃ = W × |T| W`, `C̃ = [C 0]`.
pub fn augment(sys: &NonlinearDiscreteSystem, r0: &IntervalVector, t: &DMatrix<f64>) -> Result<Augmentation, BenchmarkError> {
    let n = sys.n_states();
    let p = t.nrows();
    let mut comps: Vec<String> = (0..n).map(|i| sys.f.component_text(i)).collect();
    for row in 0..p {
        let mut terms = Vec::new();
        for j in 0..n {
            let a = t[(row, j)];
            if a != 0.0 {
                terms.push(format!("{}*({})", lit(a), sys.f.component_text(j)));
            }
        }
        comps.push(if terms.is_empty() { "0".to_string() } else { terms.join(" + ") });
    }
    let f = SymbolicDynamics::parse(n + p, sys.n_inputs(), &comps)?;
    let c = crate::linalg::hcat(&sys.c, &DMatrix::zeros(sys.c.nrows(), p));
    let lift_box = |b: &IntervalVector| {
        let mut comps = b.comps().to_vec();
        comps.extend(b.linear_map(t).into_comps());
        IntervalVector::new(comps)
    };
    let system = NonlinearDiscreteSystem::new(f, c, lift_box(&sys.w), sys.v.clone())?;
    let g_aug = crate::linalg::hcat(t, &(-DMatrix::identity(p, p)));
    Ok(Augmentation { system, r0: lift_box(r0), g_aug, base_dim: n })
}

/// Redundant states `x₁ + x₂` and `x₁ - x₂`.
pub fn vdp_augment_redundant(mu: f64) -> Result<Augmentation, BenchmarkError> {
    make_vdp(mu)?.augmentation.ok_or_else(|| BenchmarkError::AugmentationRefused(format!("vdp:{mu}")))
}

fn tank_augment_redundant_for(sys: &NonlinearDiscreteSystem, r0: &IntervalVector, n: usize) -> Result<Augmentation, BenchmarkError> {
    if n != 6 {
        return Err(BenchmarkError::AugmentationRefused(format!("tank:{n}")));
    }
    let mut t = DMatrix::zeros(3, 6);
    for k in 0..3 {
        t[(k, 2 * k)] = 1.0;
        t[(k, 2 * k + 1)] = 1.0;
    }
    augment(sys, r0, &t)
}

/// Pairwise sums `x₁ + x₂`, `x₃ + x₄`, `x₅ + x₆`; only the 6-tank chain is augmented.
pub fn tank_augment_redundant(n: usize) -> Result<Augmentation, BenchmarkError> {
    if n != 6 {
        return Err(BenchmarkError::AugmentationRefused(format!("tank:{n}")));
    }
    let spec = make_tank(n)?;
    tank_augment_redundant_for(&spec.system, &spec.r0, n)
}

/// Parses `vdp:<mu>` or `tank:<n>`.
pub fn from_id(id: &str) -> Result<BenchmarkSpec, BenchmarkError> {
    let (kind, param) = id.split_once(':').ok_or_else(|| BenchmarkError::Unknown(id.to_string()))?;
    match kind.trim() {
        "vdp" => {
            let mu: f64 = param.trim().parse().map_err(|_| BenchmarkError::Parameter(format!("bad mu `{param}`")))?;
            make_vdp(mu)
        }
        "tank" => {
            let n: usize = param.trim().parse().map_err(|_| BenchmarkError::Parameter(format!("bad tank count `{param}`")))?;
            make_tank(n)
        }
        _ => Err(BenchmarkError::Unknown(id.to_string())),
    }
}

/// Identifiers of the four reference scenarios.
pub const SCENARIOS: [&str; 4] = ["vdp:0.1", "vdp:5", "tank:6", "tank:30"];
