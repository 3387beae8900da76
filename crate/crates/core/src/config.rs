//! Experiment configuration: a flat JSON document where every field has a
//! default, with presets for the three wall-world experiments.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::{Boundary, PolicyConfig};
use crate::rng::GENERATOR;
use crate::wallworld::{DynamicsMode, LatentDynamics, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Wall translates between five positions.
    Sim1,
    /// Wall drifts continuously.
    Sim2,
    /// Wall translates and rotates; lifted to transition states.
    Sim3,
    Custom,
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sim1" => Ok(Experiment::Sim1),
            "sim2" => Ok(Experiment::Sim2),
            "sim3" => Ok(Experiment::Sim3),
            "custom" => Ok(Experiment::Custom),
            other => Err(format!("unknown experiment '{other}' (expected sim1, sim2, sim3 or custom)")),
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Experiment::Sim1 => "sim1",
            Experiment::Sim2 => "sim2",
            Experiment::Sim3 => "sim3",
            Experiment::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsKind {
    DiscreteTranslate,
    ContinuousTranslate,
    DiscreteTranslateRotate,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dynamics: DynamicsKind,
    pub n_positions: usize,
    pub n_d: usize,
    pub n_phi: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub m_min: f64,
    pub m_max: f64,
    pub s_max: f64,
    pub sensor_noise: f64,
    pub change_prob: f64,
    pub sigma_e: f64,
    pub neighbor_steps: bool,
    pub sigma_m: f64,
    pub boundary: Boundary,
    /// Number of prototypes.
    pub r: usize,
    /// Number of contexts.
    pub k: usize,
    pub n_explore: usize,
    pub n_transition: usize,
    pub lifted: bool,
    pub symmetrize: bool,
    pub kmeans_restarts: usize,
    pub seed: u64,
    pub rng: String,
    /// Where artifacts go. Not echoed, so the artifacts of a run do not
    /// depend on where they are written.
    #[serde(skip_serializing, default)]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            dynamics: DynamicsKind::DiscreteTranslate,
            n_positions: 5,
            n_d: 3,
            n_phi: 2,
            d_min: 1.0,
            d_max: 3.0,
            phi_min: 0.0,
            phi_max: 0.0,
            m_min: -FRAC_PI_4,
            m_max: FRAC_PI_4,
            s_max: 6.0,
            sensor_noise: 0.0,
            change_prob: 0.1,
            sigma_e: 0.15,
            neighbor_steps: false,
            sigma_m: 1.0,
            boundary: Boundary::Reflect,
            r: 100,
            k: 5,
            n_explore: 20_000,
            n_transition: 50_000,
            lifted: false,
            symmetrize: true,
            kmeans_restarts: 10,
            seed: 42,
            rng: GENERATOR.to_string(),
            out_dir: PathBuf::from(format!("runs/{experiment}")),
        };
        match experiment {
            Experiment::Sim1 | Experiment::Custom => base,
            Experiment::Sim2 => Self { dynamics: DynamicsKind::ContinuousTranslate, k: 10, ..base },
            Experiment::Sim3 => Self {
                dynamics: DynamicsKind::DiscreteTranslateRotate,
                phi_min: -FRAC_PI_8,
                phi_max: FRAC_PI_8,
                s_max: 8.0,
                k: 6,
                lifted: true,
                ..base
            },
        }
    }

    pub fn world(&self) -> WorldConfig {
        let mode = match self.dynamics {
            DynamicsKind::DiscreteTranslate => DynamicsMode::DiscreteTranslate { n_positions: self.n_positions },
            DynamicsKind::ContinuousTranslate => DynamicsMode::ContinuousTranslate,
            DynamicsKind::DiscreteTranslateRotate => DynamicsMode::DiscreteTranslateRotate { n_d: self.n_d, n_phi: self.n_phi },
        };
        WorldConfig {
            d_min: self.d_min,
            d_max: self.d_max,
            phi_min: self.phi_min,
            phi_max: self.phi_max,
            m_min: self.m_min,
            m_max: self.m_max,
            s_max: self.s_max,
            sensor_noise: self.sensor_noise,
            dynamics: LatentDynamics {
                mode,
                change_prob: self.change_prob,
                sigma_e: self.sigma_e,
                neighbor_steps: self.neighbor_steps,
            },
        }
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig { sigma_m: self.sigma_m, boundary: self.boundary }
    }

    /// Every violated invariant; empty means the configuration is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.world().violations();
        if !(self.sigma_m > 0.0 && self.sigma_m.is_finite()) {
            out.push(format!("sigma_m must be > 0 (sigma_m={})", self.sigma_m));
        }
        if self.r < 2 {
            out.push("r ≥ 2 required".to_string());
        }
        if self.k < 2 {
            out.push("k ≥ 2 required".to_string());
        }
        if !self.lifted && self.k > self.r {
            out.push(format!("k must not exceed r (k={}, r={})", self.k, self.r));
        }
        if self.n_explore < self.r {
            out.push(format!("n_explore must be ≥ r (n_explore={}, r={})", self.n_explore, self.r));
        }
        if self.n_transition < 3 {
            out.push("n_transition ≥ 3 required".to_string());
        }
        if self.kmeans_restarts < 1 {
            out.push("kmeans_restarts ≥ 1 required".to_string());
        }
        if self.rng != GENERATOR {
            out.push(format!("rng must be '{GENERATOR}' (got '{}')", self.rng));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Resolves a config document: the experiment's preset, overridden by
    /// every field present in `text`. `experiment` forces the preset when given.
    pub fn from_json(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let overrides: ConfigOverrides = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let chosen = experiment.or(overrides.experiment).unwrap_or(Experiment::Sim1);
        let mut cfg = Self::preset(chosen);
        overrides.apply(&mut cfg);
        cfg.experiment = chosen;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

macro_rules! overrides {
    ($($field:ident : $ty:ty),* $(,)?) => {
        /// A config document as written: any subset of the fields.
        #[derive(Debug, Clone, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct ConfigOverrides {
            experiment: Option<Experiment>,
            $($field: Option<$ty>,)*
        }

        impl ConfigOverrides {
            fn apply(self, cfg: &mut ExperimentConfig) {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            }
        }
    };
}

overrides! {
    dynamics: DynamicsKind,
    n_positions: usize,
    n_d: usize,
    n_phi: usize,
    d_min: f64,
    d_max: f64,
    phi_min: f64,
    phi_max: f64,
    m_min: f64,
    m_max: f64,
    s_max: f64,
    sensor_noise: f64,
    change_prob: f64,
    sigma_e: f64,
    neighbor_steps: bool,
    sigma_m: f64,
    boundary: Boundary,
    r: usize,
    k: usize,
    n_explore: usize,
    n_transition: usize,
    lifted: bool,
    symmetrize: bool,
    kmeans_restarts: usize,
    seed: u64,
    rng: String,
    out_dir: PathBuf,
}

/// Parses a config file and lists its invariant violations.
pub fn validate_text(text: &str) -> Result<Vec<String>> {
    Ok(ExperimentConfig::from_json(text, None)?.violations())
}
