//! Active pose-graph SLAM simulation with uncertainty-driven stopping.
//!
//! The crate layers as follows, bottom up:
//!
//! - [`se2`], [`graph`]: SE(2) poses and the pose-graph estimate.
//! - [`laplacian`], [`optimality`]: weighted spanning-tree counts and the
//!   D-optimality criterion, both the exact eigendecomposition route and the
//!   fast spanning-tree surrogate.
//! - [`world`], [`grid`], [`sensor`], [`slam`], [`optimizer`]: a 2D range
//!   simulator (ground-truth grid, lidar raycasting, noisy odometry, loop
//!   closures) and the Gauss-Newton graph optimizer.
//! - [`frontier`], [`planner`], [`explore`]: frontier extraction, grid A*,
//!   and the utility-driven action loop.
//! - [`stopping`]: the task-driven stopping rule and the baseline criteria,
//!   evaluated concurrently over one metric stream.
//! - [`graph_io`]: plain-text pose-graph serialization.
//!
//! The experiment runner and CLI live in the companion harness crate.

pub mod error;
pub mod explore;
pub mod frontier;
pub mod graph;
pub mod graph_io;
pub mod grid;
pub mod laplacian;
pub mod optimality;
pub mod optimizer;
pub mod planner;
pub mod se2;
pub mod sensor;
pub mod slam;
pub mod stopping;
pub mod synth;
pub mod world;

pub use error::{Error, Result};
