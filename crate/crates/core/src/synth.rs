//! Synthetic graph generators.
//!
//! Shared by unit tests, the acceptance suite, and the benchmark command so
//! that every consumer draws from the same family: a random spanning tree
//! (each node attaches to a uniformly chosen earlier node) plus up to three
//! chord edges. Connectivity is guaranteed by construction.

use std::ops::Range;

use rand::Rng;

use crate::graph::{EdgeKind, InfoMatrix3, PoseGraph};
use crate::laplacian::WeightedEdge;
use crate::se2::Pose2;

/// Random connected weighted graph on `n` nodes with weights drawn uniformly
/// from `weights`. Returns `(n, edges)`.
pub fn random_connected_weighted<R: Rng>(
    n: usize,
    weights: Range<f64>,
    rng: &mut R,
) -> (usize, Vec<WeightedEdge>) {
    let mut edges = Vec::with_capacity(n + 2);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push(WeightedEdge::new(u, v, rng.gen_range(weights.clone())));
    }
    if n >= 2 {
        let chords = rng.gen_range(0..=3);
        let mut tries = 0;
        let mut added = 0;
        while added < chords && tries < 50 {
            tries += 1;
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            edges.push(WeightedEdge::new(a.min(b), a.max(b), rng.gen_range(weights.clone())));
            added += 1;
        }
    }
    (n, edges)
}

/// Random connected pose graph whose edges all carry isotropic information
/// gamma * I3 with gamma drawn from `gammas`. Node poses are placed on a line;
/// spanning-tree and information quantities depend only on topology and
/// weights, not on the poses.
pub fn random_connected_isotropic<R: Rng>(
    n: usize,
    gammas: Range<f64>,
    rng: &mut R,
) -> PoseGraph {
    let mut g = PoseGraph::new();
    for i in 0..n {
        g.add_node(Pose2::new(i as f64, 0.0, 0.0), 0);
    }
    let add = |g: &mut PoseGraph, a: usize, b: usize, gamma: f64| {
        let info = InfoMatrix3::diagonal(gamma, gamma, gamma).expect("positive gamma");
        let kind = if b == a + 1 { EdgeKind::Odometry } else { EdgeKind::LoopClosure };
        g.add_edge(a, b, Pose2::identity(), info, kind).expect("valid endpoints");
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        add(&mut g, u, v, rng.gen_range(gammas.clone()));
    }
    if n >= 2 {
        let chords = rng.gen_range(0..=3);
        let mut tries = 0;
        let mut added = 0;
        while added < chords && tries < 50 {
            tries += 1;
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            add(&mut g, a.min(b), a.max(b), rng.gen_range(gammas.clone()));
            added += 1;
        }
    }
    g
}
