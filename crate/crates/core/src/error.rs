use thiserror::Error;

pub type Result<T> = std::result::Result<T, GaitError>;

#[derive(Debug, Error)]
pub enum GaitError {
    #[error("target out of reach: distance {distance:.6} m exceeds leg reach {max_reach:.6} m")]
    Unreachable { distance: f64, max_reach: f64 },

    #[error("contact matrix J M^-1 J^T is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("swing foot is {height:.3e} m off the ground at impact")]
    SwingFootOffGround { height: f64 },

    #[error("time {t} s outside the step interval [0, {duration}] s")]
    OutOfRange { t: f64, duration: f64 },

    #[error("no ground contact of the swing foot within {horizon} s")]
    NoImpact { horizon: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed gait data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GaitError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GaitError::InvalidConfig(msg.into())
    }
}
