use loxodrome::damped_wave::DampedWaveError;
use loxodrome::flow::FlowError;
use loxodrome::resolvent::ResolventError;
use loxodrome::spectra::SpectraError;
use loxodrome::symplectic::SymplecticError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// bad flags, configs or inputs, unreadable or unwritable files
    #[error("validation error: {0}")]
    Validation(String),
    /// the computation itself failed
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl From<SymplecticError> for CliError {
    fn from(e: SymplecticError) -> Self {
        use SymplecticError::*;
        match e {
            DimensionMismatch(_) | NotSymmetric(_) | NotHamiltonian(_) | NotSymplectic(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidParameter(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::ConvergenceFailure(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ResolventError> for CliError {
    fn from(e: ResolventError) -> Self {
        use ResolventError::*;
        match e {
            SingularAtZ { .. } | SupportOverflow(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DampedWaveError> for CliError {
    fn from(e: DampedWaveError) -> Self {
        match e {
            DampedWaveError::GridTooCoarse(_) | DampedWaveError::InvalidParameter(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_real_eigenvalue_is_numerical() {
        assert_eq!(CliError::from(SymplecticError::NegativeRealEigenvalue(-1.0)).exit_code(), 3);
        assert_eq!(CliError::from(SymplecticError::NotSymplectic(1.0)).exit_code(), 2);
    }

    #[test]
    fn grid_errors_are_validation() {
        assert_eq!(CliError::from(DampedWaveError::GridTooCoarse(3)).exit_code(), 2);
        assert_eq!(CliError::from(SpectraError::GridTooCoarse { nodes: 8 }).exit_code(), 2);
        assert_eq!(CliError::from(FlowError::MaxIterations(4, 1.0)).exit_code(), 3);
    }
}
