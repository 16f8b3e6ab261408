//! Files written by a run.
//!
//! | file | columns |
//! |---|---|
//! | `summary.csv`, `summary_cutoff{K}.csv` | method, category, time_ms, v_hat, w_hat, v_tilde, w_tilde, completed_steps, diverged, reason |
//! | `per_seed.csv` | method, seed, horizon, time_ms, v_tilde, w_tilde, completed_steps, divergence_step, reason, violations |
//! | `hulls/{method}_seed{seed}.csv` | step, lo1, hi1, lo2, hi2, .. |
//! | `trajectories/seed{seed}.csv` | step, x.., u.., y.., w.., v.. |
//! | `sets/{method}_seed{seed}.json[l]` | `{"step": k, "set": {"type": .., "fields": ..}}` |
//! | `manifest.json` | versions, config, seeds, hashes |
//!
//! Infinite values are written as `inf`; `time_ms` is `nan` without timing.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::SetDump;
use crate::run::{hash_vectors, Comparison, SummaryRow};
use crate::serial::{fmt_f64, set_to_value, write_trajectory_csv, SerialError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Serial(#[from] SerialError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

struct Writer {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Writer {
    /// Writes to a temporary file next to the target, then renames it.
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<(), OutputError> {
        let path = self.root.join(rel);
        let dir = path.parent().unwrap_or(&self.root).to_path_buf();
        std::fs::create_dir_all(&dir).map_err(io(&dir))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io(&dir))?;
        tmp.write_all(bytes).map_err(io(&path))?;
        tmp.as_file().sync_all().map_err(io(&path))?;
        tmp.persist(&path).map_err(|e| OutputError::Io { path: path.clone(), source: e.error })?;
        self.hashes.insert(rel.to_string(), format!("{:x}", Sha256::digest(bytes)));
        Ok(())
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| OutputError::Csv(e.into_error().into()))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, OutputError> {
    csv_bytes(
        &["method", "category", "time_ms", "v_hat", "w_hat", "v_tilde", "w_tilde", "completed_steps", "diverged", "reason"],
        rows.iter().map(|r| {
            vec![
                r.method.tag().to_string(),
                r.method.category().as_str().to_string(),
                fmt_f64(r.time_ms),
                fmt_f64(r.v_hat),
                fmt_f64(r.w_hat),
                fmt_f64(r.v_tilde),
                fmt_f64(r.w_tilde),
                r.completed_steps.to_string(),
                r.diverged.to_string(),
                r.reason.clone().unwrap_or_default(),
            ]
        }),
    )
}

fn horizons(cmp: &Comparison) -> Vec<usize> {
    let mut h = vec![cmp.config.steps];
    h.extend(cmp.config.cutoff.filter(|c| *c != cmp.config.steps));
    h
}

fn per_seed_csv(cmp: &Comparison) -> Result<Vec<u8>, OutputError> {
    let rows = horizons(cmp).into_iter().flat_map(|h| {
        cmp.seed_rows(h).into_iter().map(move |s| {
            vec![
                s.method.tag().to_string(),
                s.seed.to_string(),
                h.to_string(),
                fmt_f64(s.time_ms),
                fmt_f64(s.v_tilde),
                fmt_f64(s.w_tilde),
                s.completed_steps.to_string(),
                s.divergence.as_ref().map(|d| d.step.to_string()).unwrap_or_default(),
                s.divergence.as_ref().map(|d| d.reason.to_string()).unwrap_or_default(),
                s.violations.to_string(),
            ]
        })
    });
    csv_bytes(
        &["method", "seed", "horizon", "time_ms", "v_tilde", "w_tilde", "completed_steps", "divergence_step", "reason", "violations"],
        rows.collect::<Vec<_>>(),
    )
}

pub fn hull_csv(hulls: &[setest_core::interval::IntervalVector], n: usize) -> Result<Vec<u8>, OutputError> {
    let mut header = vec!["step".to_string()];
    for i in 1..=n {
        header.push(format!("lo{i}"));
        header.push(format!("hi{i}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_bytes(
        &header,
        hulls.iter().enumerate().map(|(k, h)| {
            std::iter::once(k.to_string())
                .chain(h.comps().iter().flat_map(|iv| [fmt_f64(iv.lo), fmt_f64(iv.hi)]))
                .collect()
        }),
    )
}

/// Writes every output of `cmp` under its configured directory and returns
/// the relative paths with their SHA-256.
pub fn write_outputs(cmp: &Comparison) -> Result<BTreeMap<String, String>, OutputError> {
    let cfg = &cmp.config;
    let mut w = Writer { root: cfg.out.clone(), hashes: BTreeMap::new() };
    let n = cfg.spec.system.n_states();

    w.put("summary.csv", &summary_csv(&cmp.table(cfg.steps, cfg.cutoff.is_some()))?)?;
    if let Some(k) = cfg.cutoff {
        w.put(&format!("summary_cutoff{k}.csv"), &summary_csv(&cmp.table(k, false))?)?;
    }
    w.put("per_seed.csv", &per_seed_csv(cmp)?)?;
    for t in &cmp.trajectories {
        let mut buf = Vec::new();
        write_trajectory_csv(t, &mut buf)?;
        w.put(&format!("trajectories/seed{}.csv", t.seed), &buf)?;
    }
    for c in &cmp.cells {
        let stem = format!("{}_seed{}", c.method.tag(), c.seed);
        w.put(&format!("hulls/{stem}.csv"), &hull_csv(&c.hulls, n)?)?;
        let entry = |(k, s): &(usize, setest_core::setcore::SetValue)| json!({ "step": k, "set": set_to_value(s) });
        match cfg.dump_sets {
            SetDump::None => {}
            SetDump::Final => {
                if let Some(last) = c.sets.last() {
                    w.put(&format!("sets/{stem}.json"), serde_json::to_string(&entry(last)).map_err(SerialError::from)?.as_bytes())?;
                }
            }
            SetDump::All => {
                let mut text = String::new();
                for s in &c.sets {
                    text.push_str(&serde_json::to_string(&entry(s)).map_err(SerialError::from)?);
                    text.push('\n');
                }
                w.put(&format!("sets/{stem}.jsonl"), text.as_bytes())?;
            }
        }
    }

    let observers: Vec<_> = cfg
        .observers
        .iter()
        .map(|o| {
            json!({
                "method": o.method.tag(),
                "category": o.method.category().as_str(),
                "representation": o.method.representation(),
                "max_order": o.max_order,
                "max_constraints": o.max_constraints,
                "partitions": o.partitions,
                "reduction": format!("{:?}", o.reduction).to_lowercase(),
                "bundle_cap": o.bundle_cap,
                "augmented": o.augmentation.is_some(),
            })
        })
        .collect();
    let seeds: Vec<_> = cmp
        .trajectories
        .iter()
        .map(|t| {
            json!({
                "seed": t.seed,
                "measurements_sha256": hash_vectors(&t.measurements),
                "inputs_sha256": hash_vectors(&t.inputs),
                "states_sha256": hash_vectors(&t.states),
            })
        })
        .collect();
    let cells: Vec<_> = cmp
        .cells
        .iter()
        .map(|c| json!({ "method": c.method.tag(), "seed": c.seed, "measurements_sha256": c.measurements_sha256 }))
        .collect();
    let manifest = json!({
        "format_version": FORMAT_VERSION,
        "formats": {
            "summary_csv": 1, "per_seed_csv": 1, "hull_csv": 1, "trajectory_csv": 1, "set_json": 1,
        },
        "versions": { "setest": env!("CARGO_PKG_VERSION"), "setest-core": setest_core::VERSION },
        "config": cfg.file,
        "resolved": {
            "benchmark": cfg.benchmark,
            "steps": cfg.steps,
            "cutoff": cfg.cutoff,
            "seeds": cfg.seeds,
            "direction_seed": cfg.direction_seed,
            "timing": cfg.timing,
            "step_timeout_s": cfg.step_timeout_s,
            "input": cfg.spec.input.iter().copied().collect::<Vec<f64>>(),
            "observers": observers,
        },
        "seeds": seeds,
        "directions": { "count": cmp.directions.len(), "sha256": hash_vectors(&cmp.directions) },
        "cells": cells,
        "files": w.hashes.clone(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(SerialError::from)?;
    w.put("manifest.json", text.as_bytes())?;
    Ok(w.hashes)
}
