//! Configuration, CSV tables, run manifests and the command-line front end.

pub mod cli;
pub mod config;
pub mod csv;
pub mod manifest;

pub use config::Config;
pub use manifest::RunManifest;
