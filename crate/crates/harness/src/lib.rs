//! Experiment harness around `aslam_core`: config parsing, full exploration
//! runs with stopping-criterion bookkeeping and CSV artifacts, trace replay,
//! and the D-optimality micro-benchmark. The `aslam` binary is a thin CLI
//! over these modules.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod replay;
