use thiserror::Error;

/// Errors produced by the channel, information and coding routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("{what} needs {size} entries, cap is {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },

    #[error("channel is not Markov-modulated: state transitions depend on the input")]
    NotMarkovian,

    #[error("state chain has no unique limiting distribution")]
    NoUniqueStationary,

    #[error("family is not uniformly ergodic within {max_n} steps at eps={eps}")]
    NotUniformlyErgodic { eps: f64, max_n: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default cap on the number of entries of any exhaustive table.
pub const DEFAULT_TABLE_CAP: u128 = 1 << 24;

pub(crate) fn checked_pow(base: usize, exp: usize, what: &'static str, cap: u128) -> Result<usize> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
        if acc > cap {
            return Err(Error::CapExceeded { what, size: acc, cap });
        }
    }
    Ok(acc as usize)
}
