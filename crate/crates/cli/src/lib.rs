//! Front end for `purefilter`: a bit-exact bundle format for step filters,
//! versioned JSON reports, and the `generate`, `verify`, `classify` and
//! `spectrum` commands.
//!
//! Exit codes are part of the interface:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success; for `classify`, `PureCertified` |
//! | 1 | the bundle fails a filter or isometry check |
//! | 2 | usage, parse or parameter error |
//! | 3 | `NotPureCertified` |
//! | 4 | `PureAtResolution` or `Inconclusive` |

pub mod bundle;
pub mod commands;
pub mod report;

pub use bundle::{FilterBundle, Provenance};
pub use commands::run;
pub use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_PURE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Environment variable overriding the transfer-matrix dimension cap.
pub const DIMENSION_CAP_ENV: &str = "PUREFILTER_DIMENSION_CAP";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] purefilter::Error),
}

impl CliError {
    /// Every error that reaches the top level is a usage-class failure.
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}
