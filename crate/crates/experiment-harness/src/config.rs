//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use boltzmann_sampler::PreparationSpec;
use ising_model::IsingProblem;
use open_dynamics::{BathModel, BathSpec};
use schedule::{Schedule, ScheduleSpec};
use serde::{Deserialize, Serialize};
use thermo_analysis::MomentConvention;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: ProblemSpec,
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub preparation: PreparationConfig,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub ft: FtSpec,
    #[serde(default)]
    pub input: InputSpec,
}

/// Problem given inline, by chain length, or by a file holding
/// `n`, `gamma`, `couplings` and `fields`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub chain_length: Option<usize>,
    pub n: Option<usize>,
    pub couplings: Option<Vec<(usize, usize, f64)>>,
    pub fields: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub file: Option<PathBuf>,
}

pub const DEFAULT_CHAIN_LENGTH: usize = 8;

impl ProblemSpec {
    fn is_empty(&self) -> bool {
        self.chain_length.is_none() && self.n.is_none() && self.couplings.is_none() && self.file.is_none()
    }

    /// Builds the problem; an empty spec gives a chain of `default_len`.
    pub fn build(&self, base: &Path, default_len: Option<usize>) -> Result<IsingProblem> {
        let specified = [self.chain_length.is_some(), self.n.is_some() || self.couplings.is_some(), self.file.is_some()]
            .iter()
            .filter(|&&x| x)
            .count();
        if specified > 1 {
            return Err(HarnessError::Config("problem: give only one of chain_length, inline n/couplings, or file".into()));
        }
        let mut p = if self.is_empty() {
            ising_model::chain_problem(default_len.unwrap_or(DEFAULT_CHAIN_LENGTH))?
        } else if let Some(l) = self.chain_length {
            ising_model::chain_problem(l)?
        } else if let Some(file) = &self.file {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| HarnessError::Config(format!("problem file {}: {e}", path.display())))?;
            let p: IsingProblem =
                toml::from_str(&text).map_err(|e| HarnessError::Config(format!("problem file {}: {e}", path.display())))?;
            p
        } else {
            let n = self.n.ok_or_else(|| HarnessError::Config("problem: inline form needs n".into()))?;
            IsingProblem::new(
                n,
                self.couplings.clone().unwrap_or_default(),
                self.fields.clone().unwrap_or_else(|| vec![0.0; n]),
                1.0,
            )?
        };
        if let Some(g) = self.gamma {
            p.gamma = g;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationConfig {
    #[serde(default)]
    pub beta1: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_configs")]
    pub n_configs: usize,
    #[serde(default = "default_repeats")]
    pub repeats_per_config: usize,
}

fn default_seed() -> u64 {
    1
}
fn default_configs() -> usize {
    1000
}
fn default_repeats() -> usize {
    10
}

impl Default for PreparationConfig {
    fn default() -> Self {
        PreparationConfig { beta1: 0.0, seed: default_seed(), n_configs: default_configs(), repeats_per_config: default_repeats() }
    }
}

impl PreparationConfig {
    pub fn spec(&self) -> PreparationSpec {
        PreparationSpec {
            beta1: self.beta1,
            seed: self.seed,
            n_configs: self.n_configs,
            repeats_per_config: self.repeats_per_config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathModelName {
    #[default]
    DaviesInstantaneous,
    LocalFlip,
}

impl From<BathModelName> for BathModel {
    fn from(m: BathModelName) -> Self {
        match m {
            BathModelName::DaviesInstantaneous => BathModel::DaviesInstantaneous,
            BathModelName::LocalFlip => BathModel::LocalFlip,
        }
    }
}

/// Bath with the rate given directly or as the product `γτ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    pub gamma_rate: Option<f64>,
    pub gamma_tau: Option<f64>,
    #[serde(default)]
    pub model: BathModelName,
}

fn default_beta2() -> f64 {
    3.25
}

pub const DEFAULT_GAMMA_TAU: f64 = 10.0;

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig { beta2: default_beta2(), gamma_rate: None, gamma_tau: None, model: BathModelName::default() }
    }
}

impl BathConfig {
    fn check(&self) -> Result<()> {
        if self.gamma_rate.is_some() && self.gamma_tau.is_some() {
            return Err(HarnessError::Config("bath: give gamma_rate or gamma_tau, not both".into()));
        }
        Ok(())
    }

    /// Bath for a protocol of duration `tau`.
    pub fn spec(&self, tau: f64) -> Result<BathSpec> {
        self.check()?;
        let rate = match (self.gamma_rate, self.gamma_tau) {
            (Some(r), _) => r,
            (None, Some(gt)) => gt / tau,
            (None, None) => DEFAULT_GAMMA_TAU / tau,
        };
        Ok(BathSpec::new(self.beta2, rate, self.model.into())?)
    }
}

/// Exactly one list is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub s_bar: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub gamma_tau: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVariable {
    SBar,
    Tau,
    GammaTau,
}

impl SweepSpec {
    pub fn variable(&self) -> Result<(SweepVariable, &[f64])> {
        let set: Vec<(SweepVariable, &Vec<f64>)> = [
            (SweepVariable::SBar, self.s_bar.as_ref()),
            (SweepVariable::Tau, self.tau.as_ref()),
            (SweepVariable::GammaTau, self.gamma_tau.as_ref()),
        ]
        .into_iter()
        .filter_map(|(v, l)| l.map(|l| (v, l)))
        .collect();
        match set.as_slice() {
            [(v, l)] if !l.is_empty() => Ok((*v, l.as_slice())),
            [_] => Err(HarnessError::Config("sweep list is empty".into())),
            [] => Err(HarnessError::Config("sweep: set one of s_bar, tau or gamma_tau".into())),
            _ => Err(HarnessError::Config("sweep: set exactly one sweep variable".into())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Defaults to the preparation `beta1`.
    pub beta1: Option<f64>,
    /// Defaults to the bath `beta2`.
    pub beta2: Option<f64>,
    #[serde(default)]
    pub convention: MomentConvention,
    #[serde(default)]
    pub per_spin_doubled: bool,
    /// Sign tolerance; three standard errors when absent.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    0.5
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec { dt: default_dt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(default = "default_s_points")]
    pub s_points: usize,
    /// Keep only the lowest eigenvalues; required above the dense limit.
    pub lowest: Option<usize>,
}

fn default_s_points() -> usize {
    101
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec { s_points: default_s_points(), lowest: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    #[serde(default = "default_beta_max")]
    pub beta_max: f64,
    #[serde(default = "default_s_cut")]
    pub s_cut: f64,
    /// Points of the `(β, Λ)` curve per `s̄`; zero skips the curve.
    #[serde(default)]
    pub curve_points: usize,
}

fn default_beta_max() -> f64 {
    20.0
}
fn default_s_cut() -> f64 {
    0.5
}

impl Default for EstimateSpec {
    fn default() -> Self {
        EstimateSpec { beta_max: default_beta_max(), s_cut: default_s_cut(), curve_points: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtSpec {
    #[serde(default = "default_ft_seeds")]
    pub seeds: u64,
    #[serde(default = "default_ft_qubits")]
    pub n_sys: usize,
    #[serde(default = "default_ft_qubits")]
    pub n_bath: usize,
    #[serde(default = "default_ft_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
}

fn default_ft_seeds() -> u64 {
    100
}
fn default_ft_qubits() -> usize {
    2
}
fn default_ft_beta1() -> f64 {
    0.2
}

impl Default for FtSpec {
    fn default() -> Self {
        FtSpec {
            seeds: default_ft_seeds(),
            n_sys: default_ft_qubits(),
            n_bath: default_ft_qubits(),
            beta1: default_ft_beta1(),
            beta2: default_beta2(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    /// Sample file for `analyze` and `estimate-beta`.
    pub samples: Option<PathBuf>,
}

pub const DEFAULT_TAU: f64 = 60.0;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Configured schedule or `default`.
    pub fn schedule_spec(&self, default: ScheduleSpec) -> ScheduleSpec {
        self.schedule.clone().unwrap_or(default)
    }

    pub fn build_schedule(&self, default: ScheduleSpec) -> Result<Schedule> {
        Ok(self.schedule_spec(default).build()?)
    }

    pub fn analysis_betas(&self) -> (f64, f64) {
        (
            self.analysis.beta1.unwrap_or(self.preparation.beta1),
            self.analysis.beta2.unwrap_or(self.bath.beta2),
        )
    }
}
