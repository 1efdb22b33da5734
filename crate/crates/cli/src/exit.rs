//! Process exit codes: 0 success, 1 usage, 2 numeric failure, 3 I/O.

use std::fmt;

pub const USAGE: u8 = 1;
pub const NUMERIC: u8 = 2;
pub const IO: u8 = 3;

/// Marks an error as a usage problem.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(e: impl fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

pub fn code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if let Some(g) = cause.downcast_ref::<gridsec::Error>() {
            return if g.is_numeric() {
                NUMERIC
            } else if g.is_io() {
                IO
            } else {
                USAGE
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return IO;
        }
    }
    USAGE
}
