//! Guaranteed state estimators behind one prediction-correction interface.
//!
//! An observer starts from `R₀` corrected with `y₀`; step `k` predicts with
//! `u_{k-1}` and corrects with `y_k`. Failures never propagate as errors past
//! [`observer_step`]: they mark the state diverged, and a diverged state stays
//! diverged.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::benchmarks::{Augmentation, BenchmarkSpec};
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{diag, hcat, nonzero_columns};
use crate::rangebound::{
    conservative_linearization, dc_bounds, dc_image, lifted_bounds, lifted_cz, mean_value_extension, DcSplit,
    RangeError,
};
use crate::setcore::{
    contract_box, correct_with_strip, enclose_ellipsoid, joint_frobenius_correction, reduce_zonotope,
    ConstrainedZonotope, GainSelector, ReductionMethod, SetError, SetValue, Strip, StripFusion, Zonotope,
    ZonotopeBundle,
};
use crate::sysmodel::NonlinearDiscreteSystem;

/// Hull radius above which an estimate counts as diverged.
pub const DIVERGENCE_RADIUS: f64 = 1e12;
/// Default member cap of zonotope bundles.
pub const BUNDLE_CAP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObserverMethod {
    EsoE,
    FRadA,
    FRadB,
    VolMinA,
    VolMinB,
    Zdc,
    Czdc,
    CznA,
    CznB,
    Czmv,
    FRadC,
    PDtdi,
    Czkh,
    Zbkh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Intersection,
    Propagation,
    Interval,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Intersection => "intersection",
            Category::Propagation => "propagation",
            Category::Interval => "interval",
        }
    }
}

impl ObserverMethod {
    pub const ALL: [ObserverMethod; 14] = [
        ObserverMethod::EsoE,
        ObserverMethod::FRadA,
        ObserverMethod::FRadB,
        ObserverMethod::VolMinA,
        ObserverMethod::VolMinB,
        ObserverMethod::Zdc,
        ObserverMethod::Czdc,
        ObserverMethod::CznA,
        ObserverMethod::CznB,
        ObserverMethod::Czmv,
        ObserverMethod::FRadC,
        ObserverMethod::PDtdi,
        ObserverMethod::Czkh,
        ObserverMethod::Zbkh,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ObserverMethod::EsoE => "ESO-E",
            ObserverMethod::FRadA => "FRad-A",
            ObserverMethod::FRadB => "FRad-B",
            ObserverMethod::VolMinA => "VolMin-A",
            ObserverMethod::VolMinB => "VolMin-B",
            ObserverMethod::Zdc => "ZDC",
            ObserverMethod::Czdc => "CZDC",
            ObserverMethod::CznA => "CZN-A",
            ObserverMethod::CznB => "CZN-B",
            ObserverMethod::Czmv => "CZMV",
            ObserverMethod::FRadC => "FRad-C",
            ObserverMethod::PDtdi => "pDTDI",
            ObserverMethod::Czkh => "CZKH",
            ObserverMethod::Zbkh => "ZBKH",
        }
    }

    pub fn category(self) -> Category {
        match self {
            ObserverMethod::FRadC => Category::Propagation,
            ObserverMethod::PDtdi | ObserverMethod::Czkh | ObserverMethod::Zbkh => Category::Interval,
            _ => Category::Intersection,
        }
    }

    /// [`SetValue::kind`] of the estimates this method produces.
    pub fn representation(self) -> &'static str {
        match self {
            ObserverMethod::EsoE => "ellipsoid",
            ObserverMethod::FRadA
            | ObserverMethod::FRadB
            | ObserverMethod::VolMinA
            | ObserverMethod::VolMinB
            | ObserverMethod::Zdc
            | ObserverMethod::FRadC => "zonotope",
            ObserverMethod::Czdc
            | ObserverMethod::CznA
            | ObserverMethod::CznB
            | ObserverMethod::Czmv
            | ObserverMethod::Czkh => "constrained_zonotope",
            ObserverMethod::PDtdi => "interval",
            ObserverMethod::Zbkh => "zonotope_bundle",
        }
    }

    pub fn needs_dc_split(self) -> bool {
        matches!(self, ObserverMethod::Zdc | ObserverMethod::Czdc)
    }
}

impl fmt::Display for ObserverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown observer method `{0}`")]
pub struct UnknownMethod(pub String);

impl FromStr for ObserverMethod {
    type Err = UnknownMethod;

    /// Case-insensitive; `-` and `_` are ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = |t: &str| t.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_lowercase();
        let key = norm(s);
        ObserverMethod::ALL
            .into_iter()
            .find(|m| norm(m.tag()) == key)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("max_order must be >= 1 (got {0})")]
    MaxOrder(f64),
    #[error("partitions must be >= 1 (got {0})")]
    Partitions(usize),
    #[error("bundle_cap must be >= 1")]
    BundleCap,
    #[error("{0} needs a DC split")]
    MissingSplit(ObserverMethod),
    #[error("method {method} expects a {expected} estimate, found {found}")]
    Representation { method: ObserverMethod, expected: &'static str, found: &'static str },
}

#[derive(Clone, Debug)]
pub struct ObserverConfig {
    pub method: ObserverMethod,
    pub max_order: f64,
    pub max_constraints: usize,
    pub partitions: usize,
    pub reduction: ReductionMethod,
    pub dc_split: Option<DcSplit>,
    /// Used by pDTDI only.
    pub augmentation: Option<Augmentation>,
    pub bundle_cap: usize,
}

impl ObserverConfig {
    pub fn new(method: ObserverMethod) -> Self {
        ObserverConfig {
            method,
            max_order: 20.0,
            max_constraints: 5,
            partitions: 5,
            reduction: ReductionMethod::Pca,
            dc_split: None,
            augmentation: None,
            bundle_cap: BUNDLE_CAP,
        }
    }

    /// Budgets, split and augmentation of a benchmark.
    pub fn for_benchmark(method: ObserverMethod, spec: &BenchmarkSpec) -> Self {
        ObserverConfig {
            method,
            max_order: spec.budgets.max_order,
            max_constraints: spec.budgets.max_constraints,
            partitions: spec.budgets.partitions,
            reduction: spec.budgets.reduction,
            dc_split: spec.dc_split.clone(),
            augmentation: if method == ObserverMethod::PDtdi { spec.augmentation.clone() } else { None },
            bundle_cap: BUNDLE_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.max_order >= 1.0) {
            return Err(ConfigError::MaxOrder(self.max_order));
        }
        if self.partitions < 1 {
            return Err(ConfigError::Partitions(self.partitions));
        }
        if self.bundle_cap < 1 {
            return Err(ConfigError::BundleCap);
        }
        if self.method.needs_dc_split() && self.dc_split.is_none() {
            return Err(ConfigError::MissingSplit(self.method));
        }
        Ok(())
    }

    fn lifted(&self) -> Option<&Augmentation> {
        if self.method == ObserverMethod::PDtdi {
            self.augmentation.as_ref()
        } else {
            None
        }
    }
}

/// Machine-readable cause of a divergence.
#[derive(Clone, Debug, PartialEq)]
pub enum DivergenceReason {
    InconsistentMeasurement,
    NonFinite,
    Unbounded,
    Domain(String),
    /// DC bounds refused because of the vertex enumeration cost.
    VertexLimit,
    Timeout,
    Numerical(String),
}

impl DivergenceReason {
    pub fn code(&self) -> &'static str {
        match self {
            DivergenceReason::InconsistentMeasurement => "inconsistent_measurement",
            DivergenceReason::NonFinite => "non_finite",
            DivergenceReason::Unbounded => "unbounded",
            DivergenceReason::Domain(_) => "domain_error",
            DivergenceReason::VertexLimit => "vertex_limit",
            DivergenceReason::Timeout => "timeout",
            DivergenceReason::Numerical(_) => "numerical",
        }
    }
}

impl fmt::Display for DivergenceReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceReason::Domain(m) | DivergenceReason::Numerical(m) => write!(f, "{}: {m}", self.code()),
            _ => f.write_str(self.code()),
        }
    }
}

impl From<SetError> for DivergenceReason {
    fn from(e: SetError) -> Self {
        match e {
            SetError::Empty => DivergenceReason::InconsistentMeasurement,
            other => DivergenceReason::Numerical(other.to_string()),
        }
    }
}

impl From<RangeError> for DivergenceReason {
    fn from(e: RangeError) -> Self {
        match e {
            RangeError::Eval(ev) => DivergenceReason::Domain(ev.to_string()),
            RangeError::OutsideSplitDomain => DivergenceReason::Domain(e.to_string()),
            RangeError::VertexLimit { .. } => DivergenceReason::VertexLimit,
            RangeError::Set(s) => s.into(),
            RangeError::InvalidSplit(m) => DivergenceReason::Numerical(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub step: usize,
    pub reason: DivergenceReason,
}

#[derive(Clone, Debug)]
pub struct ObserverState {
    set: SetValue,
    step: usize,
    diverged: Option<Divergence>,
    /// Last measurement, consumed by the Luenberger-type update.
    last_y: Option<DVector<f64>>,
    /// Leading coordinates reported when the estimate is lifted.
    base_dim: usize,
}

impl ObserverState {
    /// Estimate in the original state coordinates.
    pub fn estimate(&self) -> SetValue {
        if self.set.dim() == self.base_dim {
            return self.set.clone();
        }
        match &self.set {
            SetValue::Interval(b) => SetValue::Interval(IntervalVector::new(b.comps()[..self.base_dim].to_vec())),
            SetValue::Empty { .. } => SetValue::Empty { dim: self.base_dim },
            other => {
                let p = DMatrix::from_fn(self.base_dim, other.dim(), |i, j| if i == j { 1.0 } else { 0.0 });
                other.linear_map(&p).unwrap_or(SetValue::Empty { dim: self.base_dim })
            }
        }
    }

    /// The internal estimate (lifted for augmented pDTDI).
    pub fn internal(&self) -> &SetValue {
        &self.set
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn diverged(&self) -> Option<&Divergence> {
        self.diverged.as_ref()
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged.is_some()
    }

    /// Flags an externally detected failure (such as a timeout).
    pub fn mark_diverged(&mut self, reason: DivergenceReason) {
        if self.diverged.is_none() {
            self.diverged = Some(Divergence { step: self.step, reason });
        }
    }

    fn fail(mut self, step: usize, reason: DivergenceReason) -> Self {
        self.step = step;
        self.diverged = Some(Divergence { step, reason });
        self
    }
}

type StepResult<T> = Result<T, DivergenceReason>;

fn measurement_box(sys: &NonlinearDiscreteSystem, y: &DVector<f64>) -> IntervalVector {
    // C x = y - v with v ∈ V.
    IntervalVector::new((0..y.len()).map(|i| Interval::new(y[i] - sys.v[i].hi, y[i] - sys.v[i].lo)).collect())
}

fn strips(sys: &NonlinearDiscreteSystem, y: &DVector<f64>) -> StepResult<Vec<Strip>> {
    let mut out = Vec::with_capacity(y.len());
    for j in 0..y.len() {
        let row = sys.c.row(j).transpose();
        if row.iter().all(|v| *v == 0.0) {
            if !sys.v[j].contains(y[j]) {
                return Err(DivergenceReason::InconsistentMeasurement);
            }
            continue;
        }
        out.push(Strip::new(row, y[j], sys.v[j])?);
    }
    Ok(out)
}

fn box_zonotope(b: &IntervalVector) -> Zonotope {
    Zonotope::from_box(b)
}

fn expect_zonotope(s: SetValue) -> StepResult<Zonotope> {
    match s {
        SetValue::Zonotope(z) => Ok(z),
        SetValue::Empty { .. } => Err(DivergenceReason::InconsistentMeasurement),
        other => Err(DivergenceReason::Numerical(format!("expected zonotope, got {}", other.kind()))),
    }
}

fn expect_cz(s: SetValue) -> StepResult<ConstrainedZonotope> {
    match s {
        SetValue::ConstrainedZonotope(c) => Ok(c),
        SetValue::Zonotope(z) => Ok(z.into()),
        SetValue::Empty { .. } => Err(DivergenceReason::InconsistentMeasurement),
        other => Err(DivergenceReason::Numerical(format!("expected constrained zonotope, got {}", other.kind()))),
    }
}

/// Initial estimate: `R₀` in the method's representation, corrected with `y₀`.
pub fn initialize(
    config: &ObserverConfig,
    sys: &NonlinearDiscreteSystem,
    r0: &IntervalVector,
    y0: &DVector<f64>,
) -> Result<ObserverState, ConfigError> {
    config.validate()?;
    let base_dim = sys.n_states();
    let (r0, active) = match config.lifted() {
        Some(aug) => (aug.r0.clone(), &aug.system),
        None => (r0.clone(), sys),
    };
    let set = match config.method.representation() {
        "ellipsoid" => SetValue::Ellipsoid(enclose_ellipsoid(&r0)),
        "zonotope" => SetValue::Zonotope(box_zonotope(&r0)),
        "constrained_zonotope" => SetValue::ConstrainedZonotope(box_zonotope(&r0).into()),
        "zonotope_bundle" => SetValue::Bundle(ZonotopeBundle::new(alloc::vec![box_zonotope(&r0)]).expect("one member")),
        _ => SetValue::Interval(r0.clone()),
    };
    let state = ObserverState { set, step: 0, diverged: None, last_y: Some(y0.clone()), base_dim };
    if config.method == ObserverMethod::FRadC {
        return Ok(state);
    }
    let corrected = correct(config, active, state.set.clone(), y0).and_then(|s| finish(config, s));
    Ok(match corrected {
        Ok(set) => ObserverState { set, ..state },
        Err(reason) => state.fail(0, reason),
    })
}

/// One prediction with `u` followed by the correction with `y`.
pub fn observer_step(
    config: &ObserverConfig,
    state: &ObserverState,
    sys: &NonlinearDiscreteSystem,
    u: &DVector<f64>,
    y: &DVector<f64>,
) -> ObserverState {
    if state.is_diverged() {
        return state.clone();
    }
    let next_step = state.step + 1;
    let active = config.lifted().map(|a| &a.system).unwrap_or(sys);
    let result = match config.method {
        ObserverMethod::FRadC => {
            let prev_y = state.last_y.clone().unwrap_or_else(|| DVector::zeros(sys.n_outputs()));
            match &state.set {
                SetValue::Zonotope(z) => step_frad_c(active, z, u, &prev_y, None).map(SetValue::Zonotope),
                other => Err(mismatch(config.method, other)),
            }
        }
        _ => predict(config, active, &state.set, u).and_then(|p| correct(config, active, p, y)),
    }
    .and_then(|s| finish(config, s));
    match result {
        Ok(set) => ObserverState { set, step: next_step, diverged: None, last_y: Some(y.clone()), base_dim: state.base_dim },
        Err(reason) => state.clone().fail(next_step, reason),
    }
}

fn mismatch(method: ObserverMethod, found: &SetValue) -> DivergenceReason {
    DivergenceReason::Numerical(
        ConfigError::Representation { method, expected: method.representation(), found: found.kind() }.to_string(),
    )
}

/// Reduction and divergence checks, once per step after correction.
fn finish(config: &ObserverConfig, s: SetValue) -> StepResult<SetValue> {
    let s = match s {
        SetValue::Empty { .. } => return Err(DivergenceReason::InconsistentMeasurement),
        SetValue::Zonotope(z) => SetValue::Zonotope(reduce_zonotope(&z, config.max_order, config.reduction)),
        SetValue::ConstrainedZonotope(c) => {
            SetValue::ConstrainedZonotope(c.reduce_constraints(config.max_constraints, config.max_order, config.reduction))
        }
        SetValue::Bundle(b) => {
            // The first member is kept; the oldest of the others are dropped.
            let m = b.members();
            let cap = config.bundle_cap.max(1);
            let mut kept = alloc::vec![m[0].clone()];
            kept.extend(m[1..].iter().skip((m.len() - 1).saturating_sub(cap - 1)).cloned());
            SetValue::Bundle(ZonotopeBundle::new(kept)?)
        }
        other => other,
    };
    if !s.is_finite() {
        return Err(DivergenceReason::NonFinite);
    }
    let hull = s.interval_hull()?;
    if !hull.is_finite() {
        return Err(DivergenceReason::NonFinite);
    }
    if hull.radius().iter().any(|r| *r > DIVERGENCE_RADIUS) {
        return Err(DivergenceReason::Unbounded);
    }
    Ok(s)
}

fn add_disturbance(set: SetValue, sys: &NonlinearDiscreteSystem) -> StepResult<SetValue> {
    Ok(set.minkowski_sum(&SetValue::Interval(sys.w.clone()))?)
}

fn center_of(set: &SetValue) -> StepResult<DVector<f64>> {
    Ok(match set {
        SetValue::Zonotope(z) => z.center().clone(),
        SetValue::ConstrainedZonotope(c) => c.center().clone(),
        SetValue::Ellipsoid(e) => e.center().clone(),
        other => other.interval_hull()?.center(),
    })
}

/// `f(X, u) ⊕ W` by the mean-value extension.
pub fn predict_mve(sys: &NonlinearDiscreteSystem, x: &SetValue, u: &DVector<f64>) -> StepResult<SetValue> {
    let c = center_of(x)?;
    add_disturbance(mean_value_extension(&sys.f, x, &c, u.as_slice())?, sys)
}

/// `A X + affine ⊕ remainder ⊕ W` by conservative linearization. Ellipsoids
/// are mapped exactly and the boxes are enclosed by an outer ellipsoid.
pub fn predict_linremainder(sys: &NonlinearDiscreteSystem, x: &SetValue, u: &DVector<f64>) -> StepResult<SetValue> {
    let c = center_of(x)?;
    let lin = conservative_linearization(&sys.f, x, &c, u.as_slice())?;
    match x {
        SetValue::Ellipsoid(e) => {
            let img = e.linear_map(&lin.a)?.translate(&lin.affine);
            let extra = lin.remainder.add(&sys.w);
            if extra.radius().iter().all(|r| *r == 0.0) {
                return Ok(SetValue::Ellipsoid(img.translate(&extra.center())));
            }
            Ok(SetValue::Ellipsoid(img.minkowski_sum(&enclose_ellipsoid(&extra))?))
        }
        _ => add_disturbance(lin.image(x)?, sys),
    }
}

/// Enclosure from the DC tangent and envelope bounds over `hull(X)`, `⊕ W`.
pub fn predict_dc(sys: &NonlinearDiscreteSystem, x: &SetValue, u: &DVector<f64>, split: &DcSplit) -> StepResult<SetValue> {
    let hull = x.interval_hull()?;
    let c = center_of(x)?;
    let m = if hull.contains_point(c.as_slice(), 0.0) { c } else { hull.center() };
    let bounds = dc_bounds(split, &hull, &m, u.as_slice())?;
    add_disturbance(dc_image(&bounds, x)?, sys)
}

/// Mixed-monotone bounds of the lifted remainder over the unit generator box.
pub fn predict_mixed_monotone(sys: &NonlinearDiscreteSystem, x: &SetValue, u: &DVector<f64>) -> StepResult<SetValue> {
    match x {
        SetValue::ConstrainedZonotope(cz) => {
            // Same set with the unit box shrunk to the implied coefficient bounds.
            let cz = cz.rescaled().ok_or(DivergenceReason::InconsistentMeasurement)?;
            let (h, mu) = lifted_bounds(&sys.f, u.as_slice(), cz.center(), cz.generators())?;
            add_disturbance(SetValue::ConstrainedZonotope(lifted_cz(&cz, &h, &mu)?), sys)
        }
        SetValue::Bundle(b) => {
            // Every member holds the state, so members whose bounds fail are dropped.
            let mut members = Vec::with_capacity(b.len());
            let mut failure = None;
            for z in b.members() {
                match lifted_bounds(&sys.f, u.as_slice(), z.center(), z.generators()) {
                    Ok((h, mu)) => {
                        let gens = hcat(&h, &nonzero_columns(&diag(&mu.radius()), 0.0));
                        members.push(Zonotope::new(mu.center(), gens)?);
                    }
                    Err(e) => failure = failure.or(Some(e)),
                }
            }
            if members.is_empty() {
                return Err(failure.expect("bundles are nonempty").into());
            }
            add_disturbance(SetValue::Bundle(ZonotopeBundle::new(members)?), sys)
        }
        other => Err(DivergenceReason::Numerical(format!("mixed-monotone prediction needs a generator set, got {}", other.kind()))),
    }
}

/// Correction rules for strips.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StripRule {
    Gain(GainSelector),
    /// Strips appended as exact constraints, one at a time.
    CzStrip,
}

/// Sequential correction with each strip in row order.
pub fn correct_strip(predicted: SetValue, strips: &[Strip], rule: StripRule) -> StepResult<SetValue> {
    match (predicted, rule) {
        (SetValue::Zonotope(mut z), StripRule::Gain(sel)) => {
            for s in strips {
                z = correct_with_strip(&z, s, sel)?;
            }
            Ok(SetValue::Zonotope(z))
        }
        (SetValue::Ellipsoid(mut e), _) => {
            for s in strips {
                e = match e.intersect_strip(s)? {
                    StripFusion::Ellipsoid(next) => next,
                    StripFusion::Empty => return Err(DivergenceReason::InconsistentMeasurement),
                };
            }
            Ok(SetValue::Ellipsoid(e))
        }
        (set @ (SetValue::Zonotope(_) | SetValue::ConstrainedZonotope(_)), StripRule::CzStrip) => {
            let mut cz = expect_cz(set)?;
            for s in strips {
                let row = DMatrix::from_row_slice(1, s.normal().len(), s.normal().as_slice());
                let y = box_zonotope(&IntervalVector::new(alloc::vec![s.admissible()]));
                cz = cz.intersect_with(&row, &y.into())?;
            }
            if cz.is_empty()? {
                return Err(DivergenceReason::InconsistentMeasurement);
            }
            Ok(SetValue::ConstrainedZonotope(cz))
        }
        (SetValue::Interval(b), _) => {
            let mut b = b;
            for s in strips {
                let row = DMatrix::from_row_slice(1, s.normal().len(), s.normal().as_slice());
                b = contract_box(&b, &row, &IntervalVector::new(alloc::vec![s.admissible()]))
                    .ok_or(DivergenceReason::InconsistentMeasurement)?;
            }
            Ok(SetValue::Interval(b))
        }
        (other, rule) => Err(DivergenceReason::Numerical(format!("strip rule {rule:?} does not apply to {}", other.kind()))),
    }
}

/// `{ x ∈ X : C x ∈ y - V }` exactly.
pub fn correct_cz_exact(predicted: &ConstrainedZonotope, sys: &NonlinearDiscreteSystem, y: &DVector<f64>) -> StepResult<ConstrainedZonotope> {
    if y.is_empty() {
        return Ok(predicted.clone());
    }
    let meas = box_zonotope(&measurement_box(sys, y));
    let out = predicted.intersect_with(&sys.c, &meas.into())?;
    if out.is_empty()? {
        return Err(DivergenceReason::InconsistentMeasurement);
    }
    Ok(out)
}

/// Luenberger-type update
/// `X⁺ = (A - GC) X ⊕ (affine + G y) ⊕ (-G) V ⊕ W ⊕ remainder`, with the
/// gain `G = A H Hᵀ Cᵀ (C H Hᵀ Cᵀ + diag(rad V)²)⁻¹` (`H` the generators of
/// `X`) unless one is given.
pub fn step_frad_c(
    sys: &NonlinearDiscreteSystem,
    x: &Zonotope,
    u: &DVector<f64>,
    y: &DVector<f64>,
    gain: Option<&DMatrix<f64>>,
) -> StepResult<Zonotope> {
    let xs = SetValue::Zonotope(x.clone());
    let lin = conservative_linearization(&sys.f, &xs, x.center(), u.as_slice())?;
    let c = &sys.c;
    let r = c.nrows();
    let g = match gain {
        Some(g) => g.clone(),
        None if r == 0 => DMatrix::zeros(x.dim(), 0),
        None => {
            let h = x.generators();
            let ch = c * h;
            let mut s = &ch * ch.transpose();
            for j in 0..r {
                s[(j, j)] += sys.v[j].rad() * sys.v[j].rad();
            }
            match s.try_inverse() {
                Some(inv) => &lin.a * h * ch.transpose() * inv,
                None => DMatrix::zeros(x.dim(), r),
            }
        }
    };
    let a_cl = &lin.a - &g * c;
    let v_mid = sys.v.center();
    let shift = &lin.affine + &g * (y - &v_mid);
    let noise = nonzero_columns(&(-&g * diag(&sys.v.radius())), 0.0);
    let base = x.linear_map(&a_cl)?.translate(&shift);
    let base = Zonotope::new(base.center().clone(), hcat(base.generators(), &noise))?;
    let extra = box_zonotope(&lin.remainder.add(&sys.w));
    Ok(base.minkowski_sum(&extra)?)
}

/// Natural inclusion of `f` over `partitions` slabs per coordinate: component
/// `i` is bounded over slabs along axis `i`, each slab first contracted with
/// `G_aug x = 0` when a redundancy matrix is given.
pub fn predict_pdtdi(
    sys: &NonlinearDiscreteSystem,
    x: &IntervalVector,
    u: &DVector<f64>,
    partitions: usize,
    redundancy: Option<&DMatrix<f64>>,
) -> StepResult<IntervalVector> {
    let n = x.dim();
    let ub = IntervalVector::point(u.as_slice());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc: Option<Interval> = None;
        for slab in x.slabs(i, partitions.max(1)) {
            let slab = match redundancy {
                Some(g) => match contract_box(&slab, g, &IntervalVector::new(alloc::vec![Interval::ZERO; g.nrows()])) {
                    Some(s) => s,
                    None => continue,
                },
                None => slab,
            };
            let fi = sys.f.eval_interval(&slab, &ub).map_err(RangeError::from)?[i];
            acc = Some(match acc {
                Some(a) => a.hull(&fi),
                None => fi,
            });
        }
        let fi = acc.ok_or(DivergenceReason::InconsistentMeasurement)?;
        out.push(fi + sys.w[i]);
    }
    Ok(IntervalVector::new(out))
}

fn predict(config: &ObserverConfig, sys: &NonlinearDiscreteSystem, x: &SetValue, u: &DVector<f64>) -> StepResult<SetValue> {
    use ObserverMethod::*;
    let expected = config.method.representation();
    if x.kind() != expected {
        return Err(mismatch(config.method, x));
    }
    match config.method {
        FRadA | VolMinA | Czmv => predict_mve(sys, x, u),
        EsoE | FRadB | VolMinB | CznA | CznB => predict_linremainder(sys, x, u),
        Zdc | Czdc => {
            let split = config.dc_split.as_ref().ok_or(DivergenceReason::Numerical("missing DC split".into()))?;
            predict_dc(sys, x, u, split)
        }
        Czkh | Zbkh => predict_mixed_monotone(sys, x, u),
        PDtdi => {
            let SetValue::Interval(b) = x else { unreachable!() };
            let g = config.lifted().map(|a| &a.g_aug);
            Ok(SetValue::Interval(predict_pdtdi(sys, b, u, config.partitions, g)?))
        }
        FRadC => Err(DivergenceReason::Numerical("FRad-C has no separate prediction".into())),
    }
}

fn correct(config: &ObserverConfig, sys: &NonlinearDiscreteSystem, predicted: SetValue, y: &DVector<f64>) -> StepResult<SetValue> {
    use ObserverMethod::*;
    let strips = strips(sys, y)?;
    match config.method {
        FRadA | Zdc => correct_strip(predicted, &strips, StripRule::Gain(GainSelector::Frobenius)),
        VolMinA => correct_strip(predicted, &strips, StripRule::Gain(GainSelector::VolumeLineSearch)),
        VolMinB => correct_strip(predicted, &strips, StripRule::Gain(GainSelector::VolumeCandidates)),
        FRadB => Ok(SetValue::Zonotope(joint_frobenius_correction(&expect_zonotope(predicted)?, &strips)?)),
        EsoE => correct_strip(predicted, &strips, StripRule::Gain(GainSelector::Frobenius)),
        CznA => Ok(SetValue::ConstrainedZonotope(correct_cz_exact(&expect_cz(predicted)?, sys, y)?)),
        CznB | Czmv | Czdc | Czkh => correct_strip(predicted, &strips, StripRule::CzStrip),
        PDtdi => {
            let clipped = correct_strip(predicted, &strips, StripRule::CzStrip)?;
            match (clipped, config.lifted()) {
                (SetValue::Interval(b), Some(aug)) => {
                    let zero = IntervalVector::new(alloc::vec![Interval::ZERO; aug.g_aug.nrows()]);
                    Ok(SetValue::Interval(
                        contract_box(&b, &aug.g_aug, &zero).ok_or(DivergenceReason::InconsistentMeasurement)?,
                    ))
                }
                (other, _) => Ok(other),
            }
        }
        Zbkh => correct_bundle(config, predicted, &strips),
        FRadC => Ok(predicted),
    }
}

/// Frobenius strip correction of every member, then the box of the member
/// hulls clipped by the strips is appended as a new member.
fn correct_bundle(config: &ObserverConfig, predicted: SetValue, strips: &[Strip]) -> StepResult<SetValue> {
    let SetValue::Bundle(b) = predicted else {
        return Err(mismatch(ObserverMethod::Zbkh, &predicted));
    };
    // Z ∩ S ⊆ Z, so the predicted hulls also bound the corrected set.
    let prior = b.member_hull_intersection().ok_or(DivergenceReason::InconsistentMeasurement)?;
    let mut members = Vec::with_capacity(b.len() + 1);
    for z in b.members() {
        let mut z = z.clone();
        for s in strips {
            z = correct_with_strip(&z, s, GainSelector::Frobenius)?;
        }
        members.push(reduce_zonotope(&z, config.max_order, config.reduction));
    }
    let bundle = ZonotopeBundle::new(members)?;
    let mut hull = bundle
        .member_hull_intersection()
        .and_then(|h| h.intersect(&prior))
        .ok_or(DivergenceReason::InconsistentMeasurement)?;
    for s in strips {
        let row = DMatrix::from_row_slice(1, s.normal().len(), s.normal().as_slice());
        hull = contract_box(&hull, &row, &IntervalVector::new(alloc::vec![s.admissible()]))
            .ok_or(DivergenceReason::InconsistentMeasurement)?;
    }
    let mut bundle = bundle;
    bundle.push(box_zonotope(&hull))?;
    Ok(SetValue::Bundle(bundle))
}
