use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::objectives::GammaConfig;
use crate::train::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    IcaPcl,
    IcaDimsweep,
    IcaRobustness,
    GaussianRatio,
    Nuisance,
    Downstream,
    VerifyTheory,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::IcaPcl,
        Scenario::IcaDimsweep,
        Scenario::IcaRobustness,
        Scenario::GaussianRatio,
        Scenario::Nuisance,
        Scenario::Downstream,
        Scenario::VerifyTheory,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::IcaPcl => "ica_pcl",
            Scenario::IcaDimsweep => "ica_dimsweep",
            Scenario::IcaRobustness => "ica_robustness",
            Scenario::GaussianRatio => "gaussian_ratio",
            Scenario::Nuisance => "nuisance",
            Scenario::Downstream => "downstream",
            Scenario::VerifyTheory => "verify_theory",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("scenario: unknown scenario `{s}`")))
    }
}

/// Everything a run needs. Loaded from TOML; every key is optional and falls
/// back to the desk-scale default.
///
/// ```toml
/// scenario = "ica_pcl"
/// method = "dv"
/// d_x = 5
/// layers = 2
/// t = 20000
/// epsilon = 0.1
/// gamma_schedule = [[0, 0.1], [100, 1.0]]
/// seeds = [1, 2, 3]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub method: String,
    /// Methods compared by sweeps; empty means just `method`.
    pub methods: Vec<String>,
    pub d_x: usize,
    pub d_u: usize,
    /// `D_u` values for the dimensionality sweep; empty means just `d_u`.
    pub d_u_grid: Vec<usize>,
    /// Depth of the mixing network.
    pub layers: usize,
    /// Training sample size.
    pub t: usize,
    /// Held-out sample size for evaluation.
    pub t_test: usize,
    pub epsilon: f64,
    /// Outlier ratios for the robustness sweep; empty means just `epsilon`.
    pub epsilons: Vec<f64>,
    pub contamination_model: u8,
    /// `[[epoch, gamma], ...]`, piecewise constant. Empty selects the
    /// scenario default (see [`ExperimentConfig::gamma`]).
    pub gamma_schedule: Vec<(usize, f64)>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// γ for robust whitening of the observations; 0 is plain whitening.
    /// Unset selects the scenario default (see [`ExperimentConfig::whitening_gamma`]).
    pub whiten_gamma: Option<f64>,
    /// AR coefficient of the Laplace sources.
    pub source_rho: f64,
    /// Dimension of the informative sources in the nuisance scenario.
    pub d_s: usize,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Paper-scale sizes (D_x=10, T=100000, T_te=50000, 1600 epochs).
    pub paper_scale: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "ica_pcl".into(),
            method: "dv".into(),
            methods: Vec::new(),
            d_x: 5,
            d_u: 5,
            d_u_grid: Vec::new(),
            layers: 1,
            t: 20_000,
            t_test: 5_000,
            epsilon: 0.0,
            epsilons: Vec::new(),
            contamination_model: 2,
            gamma_schedule: Vec::new(),
            epochs: 400,
            batch_size: 256,
            learning_rate: 1e-3,
            l2: 1e-4,
            seeds: vec![0, 1, 2],
            output_dir: PathBuf::from("results"),
            whiten_gamma: None,
            source_rho: 0.7,
            d_s: 2,
            threads: 0,
            paper_scale: false,
        }
    }
}

pub const ENV_OUTPUT_DIR: &str = "RATIOREP_OUTPUT_DIR";
pub const ENV_THREADS: &str = "RATIOREP_THREADS";

impl ExperimentConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self { scenario: scenario.name().into(), ..Self::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config serialization: {e}")))
    }

    /// Output directory and thread count from the environment, when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
            self.output_dir = PathBuf::from(dir);
        }
        if let Ok(n) = std::env::var(ENV_THREADS) {
            self.threads = n.trim().parse().map_err(|_| Error::Config(format!("threads: {ENV_THREADS}={n} is not a count")))?;
        }
        Ok(())
    }

    /// Switch the sizes to the full-scale setting.
    pub fn apply_paper_scale(&mut self) {
        self.paper_scale = true;
        self.d_x = 10;
        self.t = 100_000;
        self.t_test = 50_000;
        self.epochs = 1600;
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.parse()
    }

    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    pub fn method_list(&self) -> Result<Vec<Method>> {
        if self.methods.is_empty() {
            return Ok(vec![self.method()?]);
        }
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn epsilon_list(&self) -> Vec<f64> {
        if self.epsilons.is_empty() {
            vec![self.epsilon]
        } else {
            self.epsilons.clone()
        }
    }

    pub fn d_u_list(&self) -> Vec<usize> {
        if self.d_u_grid.is_empty() {
            vec![self.d_u]
        } else {
            self.d_u_grid.clone()
        }
    }

    /// The explicit schedule, or the scenario default: for the ICA scenarios γ
    /// rises 0 → 5 and for the dimensionality sweep 0.1 → 3, each in 16 equal
    /// levels spread over the epochs; the downstream scenario warms up with γ = 0.1
    /// for ten epochs and then uses γ = 5; the rest use γ = 1.
    pub fn gamma(&self) -> GammaConfig {
        if !self.gamma_schedule.is_empty() {
            return GammaConfig { schedule: self.gamma_schedule.clone() };
        }
        let ramp = |from, to| GammaConfig::ramp(from, to, 15, (self.epochs / 16).max(1));
        match self.scenario() {
            Ok(Scenario::IcaPcl | Scenario::IcaRobustness) => ramp(0.0, 5.0),
            Ok(Scenario::IcaDimsweep) => ramp(0.1, 3.0),
            Ok(Scenario::Downstream) => GammaConfig { schedule: vec![(0, 0.1), (10, 5.0)] },
            _ => GammaConfig::constant(1.0),
        }
    }

    /// The explicit whitening γ, or 0.1 for the downstream scenario (its outliers
    /// sit far from the data) and 0 elsewhere.
    pub fn whitening_gamma(&self) -> f64 {
        self.whiten_gamma.unwrap_or(match self.scenario() {
            Ok(Scenario::Downstream) => 0.1,
            _ => 0.0,
        })
    }

    /// Each rejection names the offending field first.
    pub fn validate(&self) -> Result<()> {
        self.scenario()?;
        self.method_list()?;
        self.method()?;
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        for &e in std::iter::once(&self.epsilon).chain(&self.epsilons) {
            if !(0.0..1.0).contains(&e) {
                return bad("epsilon", format!("outlier ratio must lie in [0, 1), got {e}"));
            }
        }
        if self.d_u < 1 || self.d_u_grid.contains(&0) {
            return bad("d_u", "complementary dimension must be at least 1".into());
        }
        if self.d_x < 1 {
            return bad("d_x", "input dimension must be at least 1".into());
        }
        if self.scenario()? == Scenario::Nuisance && (self.d_s < 1 || self.d_s >= self.d_x) {
            return bad("d_s", format!("need 1 <= d_s < d_x, got d_s={} d_x={}", self.d_s, self.d_x));
        }
        if self.seeds.is_empty() {
            return bad("seeds", "seed list is empty".into());
        }
        if self.contamination_model != 1 && self.contamination_model != 2 {
            return bad("contamination_model", format!("must be 1 or 2, got {}", self.contamination_model));
        }
        if self.t < 2 || self.t_test < 2 {
            return bad("t", format!("need at least 2 samples, got t={} t_test={}", self.t, self.t_test));
        }
        if self.epochs == 0 {
            return bad("epochs", "must be positive".into());
        }
        if self.batch_size < 2 {
            return bad("batch_size", format!("must be at least 2, got {}", self.batch_size));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", format!("must be positive, got {}", self.learning_rate));
        }
        if !(self.l2 >= 0.0) {
            return bad("l2", format!("must be >= 0, got {}", self.l2));
        }
        if let Some(g) = self.whiten_gamma.filter(|g| !(*g >= 0.0)) {
            return bad("whiten_gamma", format!("must be >= 0, got {g}"));
        }
        if !(0.0..1.0).contains(&self.source_rho) {
            return bad("source_rho", format!("must lie in [0, 1), got {}", self.source_rho));
        }
        self.gamma().validate().map_err(|e| Error::Config(format!("gamma_schedule: {e}")))
    }

    /// SHA-256 over the fields that influence results (not the output location
    /// or the worker count).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.threads = 0;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
