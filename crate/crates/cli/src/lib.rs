//! Library surface of the `dikey` command-line tool; the binary is a thin
//! wrapper so tests and the acceptance suite can call commands directly.

pub mod commands;
pub mod config;
pub mod report;
