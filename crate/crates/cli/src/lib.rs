//! Library side of the command-line client: configuration, the scenario
//! runner and the gas reporter. The `aiprov` binary is a thin dispatcher
//! over these plus the core client API.

pub mod config;
pub mod report;
pub mod scenario;
