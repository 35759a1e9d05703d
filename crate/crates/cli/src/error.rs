use lhs_core::conic::ConicError;
use lhs_core::geometry::GeometryError;
use lhs_core::lhs::LhsError;
use lhs_core::operator::OperatorError;
use lhs_core::states::StateError;
use lhs_core::witness::WitnessError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BAD_INPUT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("bad-bracket: {0}")]
    BadBracket(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_BAD_INPUT,
        }
    }
}

fn conic(e: ConicError) -> CliError {
    match e {
        ConicError::Backend(_) => CliError::Solver(e.to_string()),
        other => CliError::BadInput(other.to_string()),
    }
}

impl From<LhsError> for CliError {
    fn from(e: LhsError) -> Self {
        match e {
            LhsError::SolverFailure(_) | LhsError::Witness(_) => CliError::Solver(e.to_string()),
            LhsError::Conic(c) => conic(c),
            other => CliError::BadInput(other.to_string()),
        }
    }
}

impl From<WitnessError> for CliError {
    fn from(e: WitnessError) -> Self {
        match e {
            WitnessError::Solver(_) => CliError::Solver(e.to_string()),
            WitnessError::Conic(c) => conic(c),
            other => CliError::BadInput(other.to_string()),
        }
    }
}

impl From<ConicError> for CliError {
    fn from(e: ConicError) -> Self {
        conic(e)
    }
}

macro_rules! bad_input {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::BadInput(e.to_string())
            }
        }
    )*};
}

bad_input!(StateError, GeometryError, OperatorError);
