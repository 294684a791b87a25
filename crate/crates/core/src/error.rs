use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("scenario invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ill-conditioned Gram matrix on subcarrier {subcarrier} (condition number {condition:.3e})")]
    IllConditioned { subcarrier: usize, condition: f64 },

    #[error("unknown window `{0}` (expected rect, hamming, hann or blackman)")]
    UnknownWindow(String),

    #[error("target {index} at {range_m:.3} m lies beyond the ISI-free range {limit_m:.3} m")]
    TargetBeyondCyclicPrefix {
        index: usize,
        range_m: f64,
        limit_m: f64,
    },

    #[error("peak at ({row}, {col}) touches the image border")]
    PeakOnBorder { row: usize, col: usize },

    #[error("azimuth {azimuth_rad:.6} rad is too close to endfire; cos(theta) vanishes")]
    EndfireSingularity { azimuth_rad: f64 },

    #[error("precoder problem infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
