//! Command-line orchestration of the joint radar-communication pipeline:
//! preamble imaging, CSI feedback, precoder design, precoded imaging and
//! SINR-floor sweeps, each writing its artifacts into a run directory.

pub mod artifacts;
pub mod commands;
pub mod pipeline;

use jrc_core::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_)
        | Error::Invariant(_)
        | Error::Dimension(_)
        | Error::UnknownWindow(_)
        | Error::Io(_) => EXIT_CONFIG,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Numerical(_)
        | Error::IllConditioned { .. }
        | Error::PeakOnBorder { .. }
        | Error::EndfireSingularity { .. }
        | Error::TargetBeyondCyclicPrefix { .. } => EXIT_NUMERICAL,
    }
}
