use std::fmt;

/// A failed command with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MISSING_ARTIFACT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_INFEASIBLE_REDUCTION: i32 = 5;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MISSING_ARTIFACT,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<gdp_core::Error> for CliError {
    fn from(e: gdp_core::Error) -> Self {
        use gdp_core::Error as E;
        let code = match &e {
            E::Io { .. } | E::Parse { .. } | E::Csv(_) | E::Json(_) => EXIT_INPUT,
            E::SolverStatus(_) | E::Lp(_) => EXIT_SOLVER,
            E::InfeasibleReduction { .. } => EXIT_INFEASIBLE_REDUCTION,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
