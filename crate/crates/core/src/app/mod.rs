//! Configuration, command implementations and reporting for the `sei` tool.

mod commands;
mod config;
mod report;

pub use commands::*;
pub use config::{parse_config, parse_config_str, Config, Preset, VoterKind};
pub use report::{run_report, FileReport, Report, REPORT_CSV};

use crate::error::Error;

/// Category of a failure, as reported to the user.
pub fn error_category(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => "config",
        Error::Io { .. } | Error::Format { .. } => "io",
        Error::Numeric(_) => "numeric",
    }
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
/// The identification finished without reaching the requested certainty.
pub const EXIT_INCONCLUSIVE: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match error_category(e) {
        "config" => EXIT_CONFIG,
        "io" => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}
