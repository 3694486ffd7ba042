//! Run configuration: an experiment (by id or inline), hyperparameter
//! overrides and the master seed. JSON, unknown keys rejected.
//!
//! ```json
//! {
//!   "experiment": "ex1",
//!   "seed": 7,
//!   "overrides": { "n_samples": 8, "steps": 3000, "bottom_ring": "frozen" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::driver::FunctionalNoise;
use crate::error::{Error, Result};
use crate::experiments::{registry, ExperimentSpec};
use crate::objective::BottomRingMode;
use crate::stochastic::BrownianVariance;

/// Every field replaces the matching hyperparameter when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_forward_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bottom_ring: Option<BottomRingMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_literal_volume: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional_noise: Option<FunctionalNoise>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brownian_variance: Option<BrownianVariance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        let h = &mut spec.hyper;
        macro_rules! set {
            ($($src:ident => $($dst:ident).+;)*) => {
                $(if let Some(v) = self.$src { h.$($dst).+ = v; })*
            };
        }
        set! {
            lambda => carleman.lambda;
            c0 => carleman.c0;
            kappa => kappa;
            n_samples => n_samples;
            n_outer => n_outer;
            steps => adam.steps;
            lr => adam.lr;
            delta => delta;
            n_forward_paths => n_forward_paths;
            bottom_ring => bottom_ring;
            paper_literal_volume => paper_literal_volume;
            functional_noise => functional_noise;
            brownian_variance => brownian_variance;
            trace_every => trace_every;
        }
    }

    /// Values set here win over `base`.
    pub fn merged_over(&self, base: &Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            lambda,
            c0,
            kappa,
            n_samples,
            n_outer,
            steps,
            lr,
            delta,
            n_forward_paths,
            bottom_ring,
            paper_literal_volume,
            functional_noise,
            brownian_variance,
            trace_every
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Registry id; mutually exclusive with `spec`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ExperimentSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
    /// Directory written by `forward`, used instead of simulating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

/// A fully resolved job, echoed verbatim into the output manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub spec: ExperimentSpec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let mut spec = match (&self.experiment, &self.spec) {
            (Some(id), None) => registry(id)?,
            (None, Some(spec)) => spec.clone(),
            (None, None) => registry("ex1")?,
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `experiment` or `spec`, not both".into()))
            }
        };
        self.overrides.apply(&mut spec);
        spec.hyper.validate()?;
        spec.forward_mesh()?;
        spec.inverse_mesh()?;
        Ok(ResolvedConfig {
            spec,
            seed: self.seed,
            data: self.data.clone(),
        })
    }
}
