//! Run configuration: a TOML file plus command-line overrides, resolved
//! into one fully-populated record that is echoed verbatim into the run
//! manifest.

use serde::{Deserialize, Serialize};
use spherical_chaos::MixtureSpec;

use crate::CliError;

/// Environment variable supplying the default output root.
pub const OUT_ROOT_ENV: &str = "SPHERICAL_CHAOS_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `(p, beta_sq)` pairs of the even mixture.
    #[serde(default)]
    pub terms: Vec<(u32, f64)>,
    #[serde(default)]
    pub h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub k_max: usize,
    pub tol_k: f64,
    pub grad_tol: f64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = spherical_chaos::cs::OptimizerSettings::default();
        OptimizerConfig {
            k_max: d.k_max,
            tol_k: d.tol_k,
            grad_tol: d.grad_tol,
            restarts: d.restarts,
            max_iter: d.max_iter,
        }
    }
}

impl OptimizerConfig {
    pub fn to_settings(&self, seed: u64) -> spherical_chaos::cs::OptimizerSettings {
        spherical_chaos::cs::OptimizerSettings {
            k_max: self.k_max,
            tol_k: self.tol_k,
            grad_tol: self.grad_tol,
            restarts: self.restarts,
            max_iter: self.max_iter,
            seed,
            force_full_k: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub u_step: f64,
}

impl Default for ChaosConfig {
    fn default() -> Self {
        ChaosConfig { u_min: -1.0, u_max: 1.0, u_step: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub cases: usize,
    pub tolerance: f64,
    pub tau_b: f64,
    pub tau_n: Vec<u64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            cases: 100,
            tolerance: 1e-5,
            tau_b: 2.0,
            tau_n: vec![100, 1000, 10_000],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n_list: Vec<usize>,
    pub replicas: usize,
    pub sweeps: usize,
    pub eps: Vec<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n_list: vec![8, 16, 24, 32],
            replicas: 50,
            sweeps: 4000,
            eps: vec![0.1, 0.2, 0.3],
        }
    }
}

/// The resolved configuration of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Where files land; excluded from the manifest echo so reruns into
    /// different directories stay byte-identical.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub chaos: ChaosConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
}

fn default_t() -> f64 {
    0.5
}

fn default_seed() -> u64 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig { terms: Vec::new(), h: 0.0 },
            t: default_t(),
            seed: default_seed(),
            out_dir: None,
            optimizer: OptimizerConfig::default(),
            chaos: ChaosConfig::default(),
            oracle: OracleConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Flag-level overrides; every field beats the config-file value when set.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub terms: Option<Vec<(u32, f64)>>,
    pub h: Option<f64>,
    pub t: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,
    pub replicas: Option<usize>,
    pub sweeps: Option<usize>,
    pub cases: Option<usize>,
    pub u_step: Option<f64>,
    pub k_max: Option<usize>,
    pub n_list: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: Option<&str>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config file {p}: {e}"))
                })?;
                toml::from_str::<RunConfig>(&text)
                    .map_err(|e| CliError::Config(format!("malformed config {p}: {e}")))?
            }
            None => RunConfig::default(),
        };
        if let Some(terms) = &overrides.terms {
            config.model.terms = terms.clone();
        }
        if let Some(h) = overrides.h {
            config.model.h = h;
        }
        if let Some(t) = overrides.t {
            config.t = t;
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(out) = &overrides.out_dir {
            config.out_dir = Some(out.clone());
        }
        if let Some(r) = overrides.replicas {
            config.simulate.replicas = r;
        }
        if let Some(s) = overrides.sweeps {
            config.simulate.sweeps = s;
        }
        if let Some(c) = overrides.cases {
            config.oracle.cases = c;
        }
        if let Some(step) = overrides.u_step {
            config.chaos.u_step = step;
        }
        if let Some(k) = overrides.k_max {
            config.optimizer.k_max = k;
        }
        if let Some(ns) = &overrides.n_list {
            config.simulate.n_list = ns.clone();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let report = self.spec().validate();
        if !report.is_valid() {
            return Err(CliError::Config(format!(
                "invalid model: {}",
                report.violations.join("; ")
            )));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(CliError::Config(format!("t = {} outside [0, 1]", self.t)));
        }
        if self.chaos.u_step <= 0.0 {
            return Err(CliError::Config("chaos.u_step must be positive".into()));
        }
        if self.chaos.u_min > self.chaos.u_max {
            return Err(CliError::Config("chaos.u_min exceeds chaos.u_max".into()));
        }
        if self.simulate.n_list.is_empty() {
            return Err(CliError::Config("simulate.n_list must not be empty".into()));
        }
        if self.simulate.replicas == 0 || self.simulate.sweeps == 0 {
            return Err(CliError::Config("simulate.replicas and simulate.sweeps must be positive".into()));
        }
        if self.oracle.cases == 0 {
            return Err(CliError::Config("oracle.cases must be positive".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> MixtureSpec {
        MixtureSpec::new(&self.model.terms, self.model.h)
    }

    /// Output directory: flag/config value, else the environment root,
    /// else the current directory.
    pub fn resolve_out_dir(&self) -> std::path::PathBuf {
        match &self.out_dir {
            Some(d) => std::path::PathBuf::from(d),
            None => match std::env::var(OUT_ROOT_ENV) {
                Ok(root) if !root.is_empty() => std::path::PathBuf::from(root),
                _ => std::path::PathBuf::from("."),
            },
        }
    }

    pub fn u_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut i = 0usize;
        loop {
            let u = self.chaos.u_min + self.chaos.u_step * i as f64;
            if u > self.chaos.u_max + 1e-12 {
                break;
            }
            grid.push(u.clamp(-1.0, 1.0));
            i += 1;
        }
        grid
    }
}

/// Parse a `p=beta_sq` term flag.
pub fn parse_term(s: &str) -> Result<(u32, f64), String> {
    let (p, beta) = s
        .split_once('=')
        .ok_or_else(|| format!("expected p=beta_sq, got '{s}'"))?;
    let p: u32 = p.trim().parse().map_err(|e| format!("bad degree in '{s}': {e}"))?;
    let beta: f64 = beta.trim().parse().map_err(|e| format!("bad coefficient in '{s}': {e}"))?;
    Ok((p, beta))
}
