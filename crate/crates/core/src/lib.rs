//! Simulation toolkit for MIMO-OFDM joint automotive radar-communication.
//!
//! The crate generates orthogonal preambles and precoded data frames,
//! simulates radar reflections and line-of-sight multi-user channels, forms
//! range-angle images on the MIMO virtual array, evaluates closed-form
//! accuracy bounds, and designs max-min SDP precoders that balance target
//! illumination against per-user SINR floors.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the command-line
//! tools use.

pub mod channel;
pub mod error;
pub mod imaging;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod precoder;
pub mod scalar;
pub mod scenario;
pub mod sdp;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use scenario::Scenario;

/// Default real scalar.
pub type Real = f64;
pub type Complex = nalgebra::Complex<Real>;
pub type CMatrix = linalg::CMat<Real>;
pub type CVector = linalg::CVec<Real>;

pub type SymbolFrame = waveform::SymbolFrame<Real>;
pub type PrecoderSet = waveform::PrecoderSet<Real>;
pub type TimeSignal = waveform::TimeSignal<Real>;
pub type RadarChannel = channel::RadarChannel<Real>;
pub type CommChannel = channel::CommChannel<Real>;
pub type CsiReport = channel::CsiReport<Real>;
pub type ReceivedRadarFrame = channel::ReceivedRadarFrame<Real>;
pub type RadarObservation = imaging::RadarObservation<Real>;
pub type RangeAngleImage = imaging::RangeAngleImage<Real>;
pub type Detection = imaging::Detection<Real>;
pub type CrlbReport = metrics::CrlbReport<Real>;
pub type SinrReport = metrics::SinrReport<Real>;
pub type PrecoderProblem = precoder::PrecoderProblem<Real>;
pub type BeamformerSolution = precoder::BeamformerSolution<Real>;
pub type SdpProblem = sdp::SdpProblem<Real>;
pub type SdpSolution = sdp::SdpSolution<Real>;
