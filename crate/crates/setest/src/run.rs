//! Execution of (method, seed) cells and the comparison tables.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use setest_core::interval::IntervalVector;
use setest_core::metrics::{interval_volume_measure, mean_width_measure, normalize, sample_directions};
use setest_core::observers::{initialize, observer_step, Divergence, DivergenceReason, ObserverConfig, ObserverMethod};
use setest_core::setcore::SetValue;
use setest_core::sysmodel::{simulate_from_box, ModelError, Trajectory};

use crate::config::{RunConfig, SetDump, Timing};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("simulating seed {seed}: {source}")]
    Simulation { seed: u64, source: ModelError },
    #[error("{method}: {source}")]
    Observer { method: ObserverMethod, source: setest_core::observers::ConfigError },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Everything recorded for one observer on one trajectory.
#[derive(Clone, Debug)]
pub struct CellRecord {
    pub method: ObserverMethod,
    pub seed: u64,
    /// Interval hulls of the estimates at steps `0..=completed_steps`.
    pub hulls: Vec<IntervalVector>,
    /// Per-step volume and width terms for steps `1..=completed_steps`.
    pub volume_terms: Vec<f64>,
    pub width_terms: Vec<f64>,
    /// Wall time of every attempted step, including a failing one.
    pub step_ms: Vec<f64>,
    pub divergence: Option<Divergence>,
    /// Steps whose estimate misses the true state.
    pub violations: Vec<usize>,
    pub sets: Vec<(usize, SetValue)>,
    /// Hash of the measurements this cell consumed.
    pub measurements_sha256: String,
}

impl CellRecord {
    pub fn completed_steps(&self) -> usize {
        self.volume_terms.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: ObserverMethod,
    pub time_ms: f64,
    pub v_tilde: f64,
    pub w_tilde: f64,
    pub v_hat: f64,
    pub w_hat: f64,
    /// Smallest number of completed steps over the seeds, capped at the horizon.
    pub completed_steps: usize,
    pub diverged: bool,
    /// Code of the first divergence among the seeds.
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRow {
    pub method: ObserverMethod,
    pub seed: u64,
    pub time_ms: f64,
    pub v_tilde: f64,
    pub w_tilde: f64,
    pub completed_steps: usize,
    pub divergence: Option<Divergence>,
    pub violations: usize,
}

pub struct Comparison {
    pub config: RunConfig,
    pub trajectories: Vec<Trajectory>,
    pub directions: Vec<DVector<f64>>,
    pub cells: Vec<CellRecord>,
}

pub fn hash_vectors<'a>(vs: impl IntoIterator<Item = &'a DVector<f64>>) -> String {
    let mut h = Sha256::new();
    for v in vs {
        h.update((v.len() as u64).to_le_bytes());
        for x in v.iter() {
            h.update(x.to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Runs one observer along `traj`; the cell stops at the first divergence.
pub fn run_cell(
    cfg: &ObserverConfig,
    sys: &setest_core::sysmodel::NonlinearDiscreteSystem,
    r0: &IntervalVector,
    traj: &Trajectory,
    dirs: &[DVector<f64>],
    run: &RunSettings,
) -> Result<CellRecord, RunError> {
    let steps = run.steps.min(traj.steps());
    let mut rec = CellRecord {
        method: cfg.method,
        seed: traj.seed,
        hulls: Vec::with_capacity(steps + 1),
        volume_terms: Vec::with_capacity(steps),
        width_terms: Vec::with_capacity(steps),
        step_ms: Vec::with_capacity(steps),
        divergence: None,
        violations: Vec::new(),
        sets: Vec::new(),
        measurements_sha256: hash_vectors(&traj.measurements[..=steps]),
    };
    let mut state = initialize(cfg, sys, r0, &traj.measurements[0]).map_err(|source| RunError::Observer { method: cfg.method, source })?;
    let mut last = None;
    for k in 0..=steps {
        if k > 0 {
            let t0 = Instant::now();
            let next = observer_step(cfg, &state, sys, &traj.inputs[k - 1], &traj.measurements[k]);
            let elapsed = t0.elapsed().as_secs_f64();
            state = next;
            rec.step_ms.push(match run.timing {
                Timing::Wall => elapsed * 1e3,
                Timing::Off => f64::NAN,
            });
            if elapsed > run.step_timeout_s {
                state.mark_diverged(DivergenceReason::Timeout);
            }
        }
        if let Some(d) = state.diverged() {
            rec.divergence = Some(d.clone());
            break;
        }
        let est = state.estimate();
        let hull = match est.interval_hull() {
            Ok(h) if h.is_finite() => h,
            Ok(_) => {
                rec.divergence = Some(Divergence { step: k, reason: DivergenceReason::NonFinite });
                break;
            }
            Err(e) => {
                rec.divergence = Some(Divergence { step: k, reason: e.into() });
                break;
            }
        };
        if !est.contains_point(&traj.states[k]).unwrap_or(false) {
            rec.violations.push(k);
        }
        if k > 0 {
            let single = std::slice::from_ref(&est);
            match (interval_volume_measure(single), mean_width_measure(single, dirs)) {
                (Ok(v), Ok(w)) => {
                    rec.volume_terms.push(v);
                    rec.width_terms.push(w);
                }
                (Err(e), _) | (_, Err(e)) => {
                    rec.divergence = Some(Divergence { step: k, reason: DivergenceReason::Numerical(e.to_string()) });
                    break;
                }
            }
        }
        rec.hulls.push(hull);
        if run.dump_sets == SetDump::All {
            rec.sets.push((k, est.clone()));
        }
        last = Some((k, est));
    }
    if run.dump_sets == SetDump::Final {
        rec.sets.extend(last);
    }
    log::debug!("{} seed {}: {} steps, divergence {:?}", cfg.method, traj.seed, rec.completed_steps(), rec.divergence);
    Ok(rec)
}

/// Per-cell knobs taken from the run configuration.
#[derive(Clone, Copy, Debug)]
pub struct RunSettings {
    pub steps: usize,
    pub timing: Timing,
    pub step_timeout_s: f64,
    pub dump_sets: SetDump,
}

impl From<&RunConfig> for RunSettings {
    fn from(c: &RunConfig) -> Self {
        RunSettings { steps: c.steps, timing: c.timing, step_timeout_s: c.step_timeout_s, dump_sets: c.dump_sets }
    }
}

/// Simulates one trajectory per seed and runs every (method, seed) cell on
/// `jobs` worker threads (0 picks the number of cores).
pub fn run_comparison(config: RunConfig, jobs: usize) -> Result<Comparison, RunError> {
    let spec = &config.spec;
    let inputs = spec.inputs(config.steps);
    let trajectories = config
        .seeds
        .iter()
        .map(|&seed| {
            simulate_from_box(&spec.system, &spec.r0, &inputs, config.steps, seed).map_err(|source| RunError::Simulation { seed, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let directions = sample_directions(spec.system.n_states(), config.direction_seed);
    let settings = RunSettings::from(&config);
    let grid: Vec<(&ObserverConfig, &Trajectory)> =
        config.observers.iter().flat_map(|o| trajectories.iter().map(move |t| (o, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| RunError::Pool(e.to_string()))?;
    let cells = pool.install(|| {
        grid.par_iter()
            .map(|(o, t)| {
                let rec = run_cell(o, &spec.system, &spec.r0, t, &directions, &settings);
                if let Ok(r) = &rec {
                    log::info!("{} seed {} done ({} steps)", r.method, r.seed, r.completed_steps());
                }
                rec
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(Comparison { config, trajectories, directions, cells })
}

fn seed_row(c: &CellRecord, horizon: usize) -> SeedRow {
    let reached = c.completed_steps() >= horizon;
    let attempted = &c.step_ms[..c.step_ms.len().min(horizon)];
    SeedRow {
        method: c.method,
        seed: c.seed,
        time_ms: if attempted.is_empty() { f64::NAN } else { mean(attempted) },
        v_tilde: if reached { mean(&c.volume_terms[..horizon]) } else { f64::INFINITY },
        w_tilde: if reached { mean(&c.width_terms[..horizon]) } else { f64::INFINITY },
        completed_steps: c.completed_steps().min(horizon),
        divergence: c.divergence.clone().filter(|d| d.step <= horizon),
        violations: c.violations.iter().filter(|k| **k <= horizon).count(),
    }
}

impl Comparison {
    pub fn cells_of(&self, m: ObserverMethod) -> impl Iterator<Item = &CellRecord> {
        self.cells.iter().filter(move |c| c.method == m)
    }

    pub fn methods(&self) -> Vec<ObserverMethod> {
        let mut ms: Vec<ObserverMethod> = self.config.observers.iter().map(|o| o.method).collect();
        ms.sort_by_key(|m| m.category() as u8);
        ms
    }

    pub fn seed_rows(&self, horizon: usize) -> Vec<SeedRow> {
        self.methods().into_iter().flat_map(|m| self.cells_of(m).map(move |c| seed_row(c, horizon))).collect()
    }

    /// One row per method over steps `1..=horizon`, seeds averaged. With
    /// `only_completed`, methods that diverged on any seed are left out.
    pub fn table(&self, horizon: usize, only_completed: bool) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = Vec::new();
        for m in self.methods() {
            let seeds: Vec<SeedRow> = self.cells_of(m).map(|c| seed_row(c, horizon)).collect();
            let diverged = seeds.iter().any(|s| s.completed_steps < horizon);
            if only_completed && diverged {
                continue;
            }
            let times: Vec<f64> = seeds.iter().map(|s| s.time_ms).filter(|t| !t.is_nan()).collect();
            let avg = |f: fn(&SeedRow) -> f64| if diverged { f64::INFINITY } else { mean(&seeds.iter().map(f).collect::<Vec<_>>()) };
            rows.push(SummaryRow {
                method: m,
                time_ms: if times.is_empty() { f64::NAN } else { mean(&times) },
                v_tilde: avg(|s| s.v_tilde),
                w_tilde: avg(|s| s.w_tilde),
                v_hat: f64::INFINITY,
                w_hat: f64::INFINITY,
                completed_steps: seeds.iter().map(|s| s.completed_steps).min().unwrap_or(0),
                diverged,
                reason: seeds.iter().find_map(|s| s.divergence.as_ref()).map(|d| d.reason.code().to_string()),
            });
        }
        let vs: Vec<f64> = rows.iter().map(|r| r.v_tilde).collect();
        let ws: Vec<f64> = rows.iter().map(|r| r.w_tilde).collect();
        if let (Ok(vh), Ok(wh)) = (normalize(&vs), normalize(&ws)) {
            for (r, (v, w)) in rows.iter_mut().zip(vh.into_iter().zip(wh)) {
                r.v_hat = v;
                r.w_hat = w;
            }
        }
        rows
    }

    /// True when no method completes the full horizon on every seed.
    pub fn all_diverged(&self) -> bool {
        self.table(self.config.steps, true).is_empty()
    }
}
