use alloc::string::String;

use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    Input(String),
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    /// Order quantity outside the region where the worst-case grand profit is positive.
    #[error("order quantity {y} is outside Y(N): worst-case grand profit is {profit}")]
    Domain { y: f64, profit: f64 },
    #[error("joint support has {size} atoms, above the cap of {cap}")]
    Capacity { size: u128, cap: usize },
    /// The game is not well defined, e.g. Y(N) is empty.
    #[error("invalid game: {0}")]
    GameInvalid(String),
    /// Nonpositive realized grand profit when evaluating an excess.
    #[error("degenerate evaluation: grand profit {0} is not positive")]
    Degenerate(f64),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
