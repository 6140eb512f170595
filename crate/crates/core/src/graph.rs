//! Pose-graph containers.
//!
//! A `PoseGraph` is the SLAM estimate: nodes are stamped SE(2) poses with
//! contiguous ids, edges carry a relative-pose measurement plus its 3x3
//! information matrix. Parallel edges are allowed (repeated closures between
//! the same pair are meaningful); self-loops are rejected. Everything that
//! consumes graph topology (Laplacians, the system information matrix, the
//! optimizer) reads from this one structure.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::se2::Pose2;

/// Symmetric positive-semidefinite 3x3 information matrix, validated on
/// construction so downstream numerics can assume well-formed input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoMatrix3 {
    m: Matrix3<f64>,
}

impl InfoMatrix3 {
    /// Accepts `m` if it is finite, symmetric to 1e-12 relative tolerance,
    /// and has no eigenvalue below -1e-12 * trace.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("information matrix has non-finite entries".into()));
        }
        let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Domain(format!(
                        "information matrix asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let sym = (m + m.transpose()) * 0.5;
        let eigs = sym.symmetric_eigenvalues();
        let floor = -1e-12 * sym.trace().abs().max(1.0);
        if eigs.iter().any(|&l| l < floor) {
            return Err(Error::Domain(format!(
                "information matrix not positive semidefinite (min eigenvalue {:.3e})",
                eigs.min()
            )));
        }
        Ok(Self { m: sym })
    }

    pub fn diagonal(ixx: f64, iyy: f64, itt: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&nalgebra::Vector3::new(ixx, iyy, itt)))
    }

    pub fn identity() -> Self {
        Self { m: Matrix3::identity() }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.m * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseNode {
    pub id: usize,
    pub pose: Pose2,
    /// Active-SLAM step during which the node was created (0 before the
    /// first step, e.g. for imported or synthetic graphs).
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Odometry,
    LoopClosure,
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub measurement: Pose2,
    pub info: InfoMatrix3,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default)]
pub struct PoseGraph {
    nodes: Vec<PoseNode>,
    edges: Vec<GraphEdge>,
}

impl PoseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a node; ids are assigned contiguously from 0.
    pub fn add_node(&mut self, pose: Pose2, step: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(PoseNode { id, pose, step });
        id
    }

    pub fn add_edge(
        &mut self,
        from: usize,
        to: usize,
        measurement: Pose2,
        info: InfoMatrix3,
        kind: EdgeKind,
    ) -> Result<()> {
        if from == to {
            return Err(Error::Graph(format!("self-loop on node {from}")));
        }
        let n = self.nodes.len();
        if from >= n || to >= n {
            return Err(Error::Graph(format!(
                "edge ({from},{to}) references a node outside 0..{n}"
            )));
        }
        // Odometry is the dead-reckoning chain; anything else is a closure.
        if kind == EdgeKind::Odometry && to != from + 1 {
            return Err(Error::Graph(format!(
                "odometry edge ({from},{to}) must connect consecutive ids"
            )));
        }
        self.edges.push(GraphEdge { from, to, measurement, info, kind });
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[PoseNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn pose(&self, id: usize) -> Result<Pose2> {
        self.nodes
            .get(id)
            .map(|n| n.pose)
            .ok_or_else(|| Error::Graph(format!("no node {id}")))
    }

    pub fn set_pose(&mut self, id: usize, pose: Pose2) -> Result<()> {
        match self.nodes.get_mut(id) {
            Some(n) => {
                n.pose = pose;
                Ok(())
            }
            None => Err(Error::Graph(format!("no node {id}"))),
        }
    }

    /// Mean degree 2|E| / n; 0 for an empty graph.
    pub fn average_node_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.nodes.len() as f64
    }

    pub fn count_edges_of_kind(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}
