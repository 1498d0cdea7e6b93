//! Library side of the `pcr` command-line tool: CSV ingestion, preprocessing,
//! report rendering and the `fit` / `compare` / `simulate` commands.

pub mod commands;
pub mod data;
pub mod error;
pub mod report;
pub mod simulate;

pub use error::AppError;
