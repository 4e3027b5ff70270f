//! File formats and command plumbing for the `rsm` binary.

pub mod commands;
pub mod json;
