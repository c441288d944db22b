//! File formats, plotting and the command-line front end of `reachgrid-core`.

pub mod bench;
pub mod commands;
pub mod export;
pub mod plot;
pub mod sweep;
pub mod taskfile;
