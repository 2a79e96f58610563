use std::fmt;

use uavtour::energy::EnergyError;
use uavtour::exact::ExactError;
use uavtour::instance::InstanceError;
use uavtour::policy::PolicyError;
use uavtour::training::TrainError;
use uavtour::tour::TourError;

/// One variant per exit-code class, so every failure path maps to a
/// documented process status: usage 2, validation 3, capacity 4, I/O 5.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Capacity(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Capacity(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Validation(m) => write!(f, "validation: {m}"),
            CliError::Capacity(m) => write!(f, "capacity: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EnergyError> for CliError {
    fn from(e: EnergyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TourError> for CliError {
    fn from(e: TourError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::TooManyClusters { .. } | ExactError::SearchSpace { .. } => {
                CliError::Capacity(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Io { .. } => CliError::Io(e.to_string()),
            TrainError::Exact(inner) => inner.into(),
            TrainError::Policy(inner) => inner.into(),
            TrainError::Instance(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
