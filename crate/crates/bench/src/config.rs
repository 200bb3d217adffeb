use std::path::{Path, PathBuf};

use rechain::model::{NetworkShape, ProportionalWeights};
use rechain::scheduler::{Algorithm, SchedulerConfig};
use rechain::search::SearchConfig;
use rechain::traffic::{SyntheticParams, TrafficModel};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeConfig {
    pub m: usize,
    pub n: usize,
    /// Uniform link capacity; ignored when both weight vectors are given.
    pub c: u32,
    pub top_weights: Option<Vec<u32>>,
    pub low_weights: Option<Vec<u32>>,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            m: 32,
            n: 16,
            c: 4,
            top_weights: None,
            low_weights: None,
        }
    }
}

impl ShapeConfig {
    pub fn uniform(m: usize, n: usize, c: u32) -> Self {
        Self {
            m,
            n,
            c,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<NetworkShape, BenchError> {
        let shape = match (&self.top_weights, &self.low_weights) {
            (Some(top), Some(low)) => {
                NetworkShape::proportional(ProportionalWeights::new(top.clone(), low.clone())?)?
            }
            (None, None) => NetworkShape::uniform(self.m, self.n, self.c)?,
            _ => {
                return Err(BenchError::Config(
                    "top_weights and low_weights must be given together".into(),
                ))
            }
        };
        Ok(shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    /// Each phase starts from the scheme the previous phase produced.
    #[default]
    Continuous,
    /// Each phase starts from a random scheme built for the previous demand.
    Discontinuous,
}

/// Traffic source. For synthetic traces the rack count and length are set by
/// the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    pub model: TrafficModel,
    #[serde(flatten)]
    pub params: SyntheticParams,
    /// Replay a CSV trace instead of generating one.
    pub trace: Option<PathBuf>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            model: TrafficModel::Gravity,
            params: SyntheticParams::default(),
            trace: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub shape: ShapeConfig,
    pub loads: Vec<f64>,
    pub mode: TaskMode,
    pub algorithm: Algorithm,
    pub num_chains: usize,
    /// `None` disables breadth limiting.
    pub max_comp: Option<u64>,
    pub max_depth: Option<usize>,
    pub traffic: TrafficConfig,
    pub seed: u64,
    /// Demand phases for static runs; one fewer reconfigurations are recorded.
    pub phases: usize,
    /// Static aggregation window and step, in seconds.
    pub window: f64,
    pub step: f64,
    /// Sliding window of the dynamic generator, in seconds.
    pub dynamic_window: f64,
    /// Dynamic events before this time are applied but not measured.
    pub warmup: f64,
    /// Dynamic measurement length in seconds after the warm-up.
    pub duration: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            shape: ShapeConfig::default(),
            loads: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            mode: TaskMode::Continuous,
            algorithm: Algorithm::Plain,
            num_chains: 8,
            max_comp: Some(1_000_000),
            max_depth: None,
            traffic: TrafficConfig::default(),
            seed: 0,
            phases: 6,
            window: 3600.0,
            step: 600.0,
            dynamic_window: 600.0,
            warmup: 600.0,
            duration: 1800.0,
        }
    }
}

impl BenchConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |s: String| Err(BenchError::Config(s));
        if self.loads.is_empty() {
            return bad("at least one load is required".into());
        }
        if let Some(l) = self.loads.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return bad(format!("load {l} is outside (0, 1]"));
        }
        if self.phases < 2 {
            return bad("static runs need at least two phases".into());
        }
        if !(self.window > 0.0 && self.step > 0.0 && self.dynamic_window > 0.0) {
            return bad("windows and step must be positive".into());
        }
        if !(self.warmup >= 0.0 && self.duration > 0.0) {
            return bad("warm-up must be non-negative and duration positive".into());
        }
        if self.num_chains == 0 {
            return bad("num_chains must be at least 1".into());
        }
        self.shape.build()?;
        Ok(())
    }

    pub fn scheduler(&self) -> SchedulerConfig {
        SchedulerConfig {
            algorithm: self.algorithm,
            search: SearchConfig {
                max_depth: self.max_depth,
                max_comp: self.max_comp,
                num_chains: if self.algorithm == Algorithm::Refined {
                    self.num_chains
                } else {
                    1
                },
                seed: self.seed,
            },
        }
    }

    /// Trace length that covers every static phase.
    pub fn static_duration(&self) -> f64 {
        self.window + self.step * (self.phases as f64 - 1.0)
    }
}
