//! Command-line harness around `iopo-core`.

pub mod args;
pub mod commands;
pub mod output;
pub mod plot;

use std::fmt;

/// Errors the caller should fix (bad flags, unreadable or invalid config); exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for usage, config and oracle-size errors anywhere in the chain, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let usage = err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref(),
                Some(iopo_core::Error::Config { .. } | iopo_core::Error::EnumerationCap { .. })
            )
    });
    if usage {
        2
    } else {
        1
    }
}
