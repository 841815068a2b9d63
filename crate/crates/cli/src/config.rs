//! JSON configuration for the simulator, fits and experiment sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use banditfit_core::shift::ShiftDemoConfig;
use banditfit_core::simulator::{FiniteTypeTable, SimMode};
use banditfit_core::{FitOptions, LoggingPolicy, Method, PriorSpec, SimConfig};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

fn parse_str<'de, D, T>(d: D) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(de::Error::custom)
}

fn show<S: Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn parse_methods<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Method>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(de::Error::custom))
        .collect()
}

fn show_methods<S: Serializer>(methods: &[Method], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(methods.iter().map(|m| m.name()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    LatentGaussian,
    FiniteType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteTypesFile {
    pub prior: Vec<f64>,
    pub organic: Vec<Vec<f64>>,
    pub click: Vec<Vec<f64>>,
}

/// The `sim` section. Keys mirror [`SimConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimFile {
    pub num_items: usize,
    pub latent_dim: usize,
    pub organic_mean_session: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_session_length: Option<u32>,
    pub bandit_events_per_user: usize,
    pub click_bias: f64,
    pub click_scale: f64,
    pub mode: ModeName,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_types: Option<FiniteTypesFile>,
}

impl Default for SimFile {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            num_items: d.num_items,
            latent_dim: d.latent_dim,
            organic_mean_session: d.organic_mean_session,
            fixed_session_length: d.fixed_session_length,
            bandit_events_per_user: d.bandit_events_per_user,
            click_bias: d.click_bias,
            click_scale: d.click_scale,
            mode: ModeName::LatentGaussian,
            seed: d.seed,
            finite_types: None,
        }
    }
}

impl SimFile {
    /// Builds and validates the simulator config with `seed` in place of
    /// the file's seed.
    pub fn to_sim_config(&self, seed: u64) -> Result<SimConfig, Error> {
        let mode = match (self.mode, &self.finite_types) {
            (ModeName::LatentGaussian, None) => SimMode::LatentGaussian,
            (ModeName::LatentGaussian, Some(_)) => {
                return Err(Error::Config(
                    "finite_types given but mode is latent-gaussian".into(),
                ))
            }
            (ModeName::FiniteType, Some(t)) => SimMode::FiniteType(FiniteTypeTable {
                prior: t.prior.clone(),
                organic: t.organic.clone(),
                click: t.click.clone(),
            }),
            (ModeName::FiniteType, None) => {
                return Err(Error::Config(
                    "mode finite-type requires finite_types".into(),
                ))
            }
        };
        let cfg = SimConfig {
            num_items: self.num_items,
            latent_dim: self.latent_dim,
            organic_mean_session: self.organic_mean_session,
            fixed_session_length: self.fixed_session_length,
            bandit_events_per_user: self.bandit_events_per_user,
            click_bias: self.click_bias,
            click_scale: self.click_scale,
            mode,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorFile {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for PriorFile {
    fn default() -> Self {
        Self {
            mu: -6.0,
            a: 0.01,
            b: 0.01,
        }
    }
}

impl PriorFile {
    pub fn to_spec(&self, num_items: usize) -> Result<PriorSpec, Error> {
        Ok(PriorSpec::new(self.mu, self.a, self.b, num_items)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitFile {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub l2_floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_cap: Option<f64>,
}

impl Default for FitFile {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            l2_floor: d.l2_floor,
            weight_cap: d.weight_cap,
        }
    }
}

impl FitFile {
    pub fn to_options(&self) -> Result<FitOptions, Error> {
        let opts = FitOptions {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            l2_floor: self.l2_floor,
            weight_cap: self.weight_cap,
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftFile {
    pub n_samples: usize,
    pub noise_sd: f64,
    pub seed: u64,
    /// Consecutive seeds starting at `seed`.
    pub n_seeds: u64,
}

impl Default for ShiftFile {
    fn default() -> Self {
        let d = ShiftDemoConfig::default();
        Self {
            n_samples: d.n_samples,
            noise_sd: d.noise_sd,
            seed: d.seed,
            n_seeds: 1,
        }
    }
}

impl ShiftFile {
    pub fn demo_config(&self, seed: u64) -> ShiftDemoConfig {
        ShiftDemoConfig {
            n_samples: self.n_samples,
            noise_sd: self.noise_sd,
            seed,
        }
    }
}

/// Everything the CLI reads from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub sim: SimFile,
    #[serde(deserialize_with = "parse_str", serialize_with = "show")]
    pub logging_policy: LoggingPolicy,
    #[serde(deserialize_with = "parse_methods", serialize_with = "show_methods")]
    pub methods: Vec<Method>,
    pub train_sizes: Vec<usize>,
    pub ab_test_size: usize,
    /// Cells use seeds `sim.seed, sim.seed + 1, ...`.
    pub n_seeds: u64,
    pub prior: PriorFile,
    pub fit: FitFile,
    /// Write measured wall time; when false the column is 0 so reruns are
    /// byte-identical.
    pub record_wall_time: bool,
    pub output_dir: PathBuf,
    pub shift: ShiftFile,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimFile::default(),
            logging_policy: LoggingPolicy::Popularity,
            methods: Method::ALL.to_vec(),
            train_sizes: vec![2000, 4000, 6000, 8000],
            ab_test_size: 10_000,
            n_seeds: 20,
            prior: PriorFile::default(),
            fit: FitFile::default(),
            record_wall_time: true,
            output_dir: PathBuf::from("out"),
            shift: ShiftFile::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        if self.train_sizes.is_empty() || self.train_sizes.contains(&0) {
            return Err(Error::Config(
                "train_sizes must be nonempty and positive".into(),
            ));
        }
        if self.ab_test_size == 0 {
            return Err(Error::Config("ab_test_size must be positive".into()));
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.shift.n_seeds == 0 {
            return Err(Error::Config("shift.n_seeds must be at least 1".into()));
        }
        self.sim.to_sim_config(self.sim.seed)?;
        self.prior.to_spec(self.sim.num_items)?;
        self.fit.to_options()?;
        Ok(())
    }

    /// Seeds of the experiment cells, in sweep order.
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_seeds).map(|i| self.sim.seed.wrapping_add(i))
    }
}
