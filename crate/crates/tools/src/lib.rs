//! File formats, plot output and the `peerpred` command line for `vmi-core`.

pub mod cli;
pub mod emit;
pub mod formats;
