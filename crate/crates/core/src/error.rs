use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("enumeration of {required} states exceeds the cap of {cap}")]
    CapExceeded { required: u128, cap: u64 },

    /// The optimum is zero, so an approximation ratio is undefined.
    #[error("degenerate instance: maximum objective value is 0")]
    DegenerateInstance,

    #[error("fraction r = {0} is outside the single-round kill range [0, 3/4)")]
    OutOfRange(f64),

    #[error("final-round angles are infeasible at this round (delta^2 = {0:e}); add a pi round")]
    Infeasible(f64),

    #[error("no marked states (r = 1)")]
    NoMarkedStates,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExceeded { .. } => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}
