//! Configuration, table runners and CSV output for the `erqm` binary.

pub mod config;
pub mod experiments;
pub mod table;
