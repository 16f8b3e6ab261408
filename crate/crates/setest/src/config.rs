//! Run configuration files.
//!
//! ```toml
//! benchmark = "vdp:0.1"
//! steps = 100
//! seeds = [1, 2, 3, 4, 5]
//! cutoff = 40
//! direction_seed = 7
//! methods = ["all"]
//!
//! [defaults]
//! max_order = 20
//!
//! [observer.CZKH]
//! max_constraints = 8
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use setest_core::benchmarks::{from_id, BenchmarkError, BenchmarkSpec};
use setest_core::observers::{ConfigError, ObserverConfig, ObserverMethod};
use setest_core::setcore::ReductionMethod;

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("config syntax: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown method `{name}`{}", suggestion(.suggestions))]
    UnknownMethod { name: String, suggestions: Vec<String> },
    #[error("benchmark `{id}`: {source}{}", suggestion(.suggestions))]
    Benchmark { id: String, source: BenchmarkError, suggestions: Vec<String> },
    #[error("[observer.{method}]: {source}")]
    Observer { method: ObserverMethod, source: ConfigError },
    #[error("{0}")]
    Invalid(String),
}

fn suggestion(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!(" (did you mean {}?)", s.join(", "))
    }
}

fn similar<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let lower = name.to_lowercase();
    let mut scored: Vec<(f64, &str)> = candidates
        .into_iter()
        .map(|c| (strsim::jaro_winkler(&lower, &c.to_lowercase()), c))
        .filter(|(s, _)| *s > 0.75)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.into_iter().take(3).map(|(_, c)| format!("`{c}`")).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// Wall-clock time of every observer step.
    #[default]
    Wall,
    /// No timing; `time_ms` becomes `nan` and outputs are reproducible byte for byte.
    Off,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetDump {
    None,
    #[default]
    Final,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Pca,
    Girard,
}

impl From<Reduction> for ReductionMethod {
    fn from(r: Reduction) -> Self {
        match r {
            Reduction::Pca => ReductionMethod::Pca,
            Reduction::Girard => ReductionMethod::Girard,
        }
    }
}

/// Budget overrides, all optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub max_order: Option<f64>,
    pub max_constraints: Option<usize>,
    pub partitions: Option<usize>,
    pub reduction: Option<Reduction>,
    pub bundle_cap: Option<usize>,
    /// pDTDI only: use the benchmark's redundant states.
    pub augment: Option<bool>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ObserverConfig, spec: &BenchmarkSpec) {
        if let Some(v) = self.max_order {
            cfg.max_order = v;
        }
        if let Some(v) = self.max_constraints {
            cfg.max_constraints = v;
        }
        if let Some(v) = self.partitions {
            cfg.partitions = v;
        }
        if let Some(v) = self.reduction {
            cfg.reduction = v.into();
        }
        if let Some(v) = self.bundle_cap {
            cfg.bundle_cap = v;
        }
        if let Some(on) = self.augment {
            if cfg.method == ObserverMethod::PDtdi {
                cfg.augmentation = if on { spec.augmentation.clone() } else { None };
            }
        }
    }
}

/// The file schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub benchmark: String,
    pub steps: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub direction_seed: u64,
    #[serde(default)]
    pub timing: Timing,
    pub step_timeout_s: Option<f64>,
    #[serde(default)]
    pub dump_sets: SetDump,
    pub out: Option<PathBuf>,
    /// Constant input replacing the benchmark's.
    pub input: Option<Vec<f64>>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub defaults: Overrides,
    #[serde(default)]
    pub observer: BTreeMap<String, Overrides>,
}

/// A validated run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub benchmark: String,
    pub spec: BenchmarkSpec,
    pub observers: Vec<ObserverConfig>,
    pub steps: usize,
    pub seeds: Vec<u64>,
    pub cutoff: Option<usize>,
    pub direction_seed: u64,
    pub timing: Timing,
    pub step_timeout_s: f64,
    pub dump_sets: SetDump,
    pub out: PathBuf,
    /// The parsed file, echoed into the manifest.
    pub file: ConfigFile,
}

pub fn parse_method(name: &str) -> Result<ObserverMethod, ConfigFileError> {
    name.parse().map_err(|_| ConfigFileError::UnknownMethod {
        name: name.to_string(),
        suggestions: similar(name, ObserverMethod::ALL.iter().map(|m| m.tag())),
    })
}

pub fn load_benchmark(id: &str) -> Result<BenchmarkSpec, ConfigFileError> {
    from_id(id).map_err(|source| {
        let kind = id.split(':').next().unwrap_or(id);
        let suggestions = match source {
            BenchmarkError::Unknown(_) => similar(kind, ["vdp", "tank"]).into_iter().chain(similar(id, setest_core::benchmarks::SCENARIOS)).collect(),
            _ => vec![],
        };
        ConfigFileError::Benchmark { id: id.to_string(), source, suggestions }
    })
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn resolve(self) -> Result<RunConfig, ConfigFileError> {
        let mut spec = load_benchmark(&self.benchmark)?;
        if let Some(u) = &self.input {
            if u.len() != spec.input.len() {
                return Err(ConfigFileError::Invalid(format!(
                    "input has {} entries, {} expects {}",
                    u.len(),
                    self.benchmark,
                    spec.input.len()
                )));
            }
            spec.input = DVector::from_column_slice(u);
        }
        let steps = self.steps.unwrap_or(spec.steps);
        if steps == 0 {
            return Err(ConfigFileError::Invalid("steps must be >= 1".into()));
        }
        if let Some(c) = self.cutoff {
            if c == 0 || c > steps {
                return Err(ConfigFileError::Invalid(format!("cutoff must be in 1..={steps} (got {c})")));
            }
        }
        let seeds = self.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
        if seeds.is_empty() {
            return Err(ConfigFileError::Invalid("seeds must not be empty".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigFileError::Invalid("seeds must be distinct".into()));
        }
        let timeout = self.step_timeout_s.unwrap_or(60.0);
        if !(timeout > 0.0) {
            return Err(ConfigFileError::Invalid(format!("step_timeout_s must be > 0 (got {timeout})")));
        }

        let methods = if self.methods.is_empty() || self.methods.iter().any(|m| m.eq_ignore_ascii_case("all")) {
            ObserverMethod::ALL.to_vec()
        } else {
            let mut out = Vec::new();
            for name in &self.methods {
                let m = parse_method(name)?;
                if out.contains(&m) {
                    return Err(ConfigFileError::Invalid(format!("method {m} listed twice")));
                }
                out.push(m);
            }
            out
        };
        let mut sections = BTreeMap::new();
        for (name, o) in &self.observer {
            sections.insert(parse_method(name)?, o);
        }
        let mut observers = Vec::with_capacity(methods.len());
        for m in methods {
            let mut cfg = ObserverConfig::for_benchmark(m, &spec);
            self.defaults.apply(&mut cfg, &spec);
            if let Some(o) = sections.get(&m) {
                o.apply(&mut cfg, &spec);
            }
            cfg.validate().map_err(|source| ConfigFileError::Observer { method: m, source })?;
            observers.push(cfg);
        }
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(format!("out/{}", self.benchmark.replace(':', "_"))));
        Ok(RunConfig {
            benchmark: self.benchmark.clone(),
            spec,
            observers,
            steps,
            seeds,
            cutoff: self.cutoff,
            direction_seed: self.direction_seed,
            timing: self.timing,
            step_timeout_s: timeout,
            dump_sets: self.dump_sets,
            out,
            file: self,
        })
    }
}

pub fn load(text: &str) -> Result<RunConfig, ConfigFileError> {
    ConfigFile::parse(text)?.resolve()
}
