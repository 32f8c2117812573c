//! Binary front end for the fockwalk engine: circuit-file ingestion, output
//! formats, threaded execution, and the complexity bench. The pieces live in
//! a library target so the integration suite can drive them directly.

pub mod bench;
pub mod commands;
pub mod io;
pub mod report;
pub mod schema;
pub mod threads;

pub use commands::{execute, Cli};
