use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Infeasible(_) => "infeasible-pattern",
            CliError::Internal(_) => "internal",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            code: i32,
            message: String,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let w = Wrapper { error: Body { kind: self.kind(), code: self.exit_code(), message: self.to_string() } };
        serde_json::to_string(&w).unwrap_or_else(|_| format!("{{\"error\":\"{self}\"}}"))
    }
}

impl From<latticeway::Error> for CliError {
    fn from(e: latticeway::Error) -> Self {
        use latticeway::Error as E;
        match e {
            E::InfeasiblePattern(m) => {
                CliError::Infeasible(format!("{m} (run `latticeway rates` to see a truncated pattern)"))
            }
            E::DegenerateCoefficient { .. } => {
                CliError::Infeasible(format!("{e}; the power ratio is a multiple of the field size"))
            }
            E::InvalidParameter(_)
            | E::InvalidSpec(_)
            | E::InvalidVector
            | E::DimensionMismatch { .. }
            | E::EnumerationBoundExceeded { .. } => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("serialisation: {e}"))
    }
}
