//! Command implementations behind the `etc-bench` binary.

pub mod bench;
pub mod commands;
pub mod config;
pub mod exit;
pub mod manifest;
