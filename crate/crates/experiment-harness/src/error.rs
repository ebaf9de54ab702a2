use boltzmann_sampler::SamplerError;
use ising_model::IsingError;
use open_dynamics::DynamicsError;
use schedule::ScheduleError;
use temp_estimate::EstimateError;
use thermo_analysis::ThermoError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("data format error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Data(_) => 4,
            HarnessError::Io(_) => 1,
        }
    }
}

impl From<DynamicsError> for HarnessError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Integrator { .. } | DynamicsError::Density(_) => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<IsingError> for HarnessError {
    fn from(e: IsingError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<ScheduleError> for HarnessError {
    fn from(e: ScheduleError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<SamplerError> for HarnessError {
    fn from(e: SamplerError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<ThermoError> for HarnessError {
    fn from(e: ThermoError) -> Self {
        match e {
            ThermoError::Statistics(_) => HarnessError::Data(e.to_string()),
            ThermoError::Convention { .. } => HarnessError::Config(e.to_string()),
            _ => HarnessError::Numerical(e.to_string()),
        }
    }
}

impl From<EstimateError> for HarnessError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::Interval(..) => HarnessError::Config(e.to_string()),
            EstimateError::Degenerate => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

impl From<ft_oracle::FtError> for HarnessError {
    fn from(e: ft_oracle::FtError) -> Self {
        HarnessError::Config(e.to_string())
    }
}
