//! Library surface of the experiment harness; the `sscl` binary is a thin
//! wrapper over these modules.

pub mod bundle;
pub mod config;
pub mod experiment;
