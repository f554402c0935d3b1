//! Experiment harness, configuration files, tabular formats and the command
//! line front end built on [`omcr_core`].

pub mod config;
pub mod expkit;
pub mod manifest;
pub mod output;
pub mod tabular;
