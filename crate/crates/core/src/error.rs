use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("altitude must be positive, got {0} m")]
    NonPositiveAltitude(f64),
    #[error("marker pixels coincide; heading and altitude are undefined")]
    CoincidentMarkers,
    #[error("observation is not valid (dropped frame)")]
    InvalidObservation,
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("send time {now} s precedes previous send at {last} s")]
    NonMonotonicSend { now: f64, last: f64 },
    #[error("pixel ({x}, {y}) lies outside the image")]
    OutOfFrame { x: f64, y: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("no camera frame has been received yet")]
    NoCameraFrame,
    #[error("unknown runtime parameter")]
    UnknownParameter,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
