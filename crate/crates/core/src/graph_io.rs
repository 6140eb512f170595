//! Plain-text pose-graph serialization.
//!
//! `VERTEX_SE2 id x y theta` and
//! `EDGE_SE2 from to dx dy dtheta i11 i12 i13 i22 i23 i33`
//! (upper-triangular information), whitespace-separated, one record per
//! line. Floats print in Rust's shortest round-tripping form, so
//! export→import reproduces every value bit for bit.
//!
//! The format carries no edge-kind marker; on import an edge between
//! consecutive ids is odometry and anything else a loop closure, which is
//! exactly how this system ever creates edges (closures require a wide
//! index gap). Node step numbers are not serialized.

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, InfoMatrix3, PoseGraph};
use crate::se2::Pose2;
use nalgebra::Matrix3;
use std::fmt::Write as _;
use std::path::Path;

pub fn pose_graph_to_string(graph: &PoseGraph) -> String {
    let mut out = String::new();
    for node in graph.nodes() {
        writeln!(
            out,
            "VERTEX_SE2 {} {} {} {}",
            node.id, node.pose.x, node.pose.y, node.pose.theta
        )
        .expect("string writes cannot fail");
    }
    for edge in graph.edges() {
        let m = edge.info.matrix();
        writeln!(
            out,
            "EDGE_SE2 {} {} {} {} {} {} {} {} {} {} {}",
            edge.from,
            edge.to,
            edge.measurement.x,
            edge.measurement.y,
            edge.measurement.theta,
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 2)]
        )
        .expect("string writes cannot fail");
    }
    out
}

pub fn parse_pose_graph(text: &str) -> Result<PoseGraph> {
    let bad = |line: usize, what: &str| Error::Parse(format!("line {line}: {what}"));

    // Vertices may appear in any order; collect them first, then demand the
    // ids form exactly 0..n.
    let mut vertices: Vec<(usize, Pose2)> = Vec::new();
    let mut edges: Vec<(usize, usize, usize, Pose2, InfoMatrix3)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let number = |idx: usize| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .map_err(|_| bad(line, &format!("'{}' is not a number", fields[idx])))
        };
        let index = |idx: usize| -> Result<usize> {
            fields[idx]
                .parse::<usize>()
                .map_err(|_| bad(line, &format!("'{}' is not a node id", fields[idx])))
        };
        match fields[0] {
            "VERTEX_SE2" => {
                if fields.len() != 5 {
                    return Err(bad(line, "VERTEX_SE2 takes id x y theta"));
                }
                let id = index(1)?;
                vertices.push((id, Pose2::new(number(2)?, number(3)?, number(4)?)));
            }
            "EDGE_SE2" => {
                if fields.len() != 12 {
                    return Err(bad(
                        line,
                        "EDGE_SE2 takes from to dx dy dtheta and 6 information entries",
                    ));
                }
                let from = index(1)?;
                let to = index(2)?;
                let measurement = Pose2::new(number(3)?, number(4)?, number(5)?);
                let (i11, i12, i13) = (number(6)?, number(7)?, number(8)?);
                let (i22, i23) = (number(9)?, number(10)?);
                let i33 = number(11)?;
                let m = Matrix3::new(i11, i12, i13, i12, i22, i23, i13, i23, i33);
                let info = InfoMatrix3::new(m)
                    .map_err(|e| bad(line, &format!("bad information matrix: {e}")))?;
                edges.push((line, from, to, measurement, info));
            }
            tag => return Err(bad(line, &format!("unknown record '{tag}'"))),
        }
    }

    let n = vertices.len();
    let mut poses: Vec<Option<Pose2>> = vec![None; n];
    for (id, pose) in vertices {
        if id >= n {
            return Err(Error::Parse(format!(
                "vertex id {id} does not fit a graph of {n} vertices"
            )));
        }
        if poses[id].is_some() {
            return Err(Error::Parse(format!("vertex id {id} appears twice")));
        }
        poses[id] = Some(pose);
    }

    let mut graph = PoseGraph::new();
    for pose in poses {
        graph.add_node(pose.expect("all slots filled by the id check"), 0);
    }
    for (line, from, to, measurement, info) in edges {
        if from >= n || to >= n {
            return Err(Error::Parse(format!(
                "line {line}: edge ({from},{to}) references a vertex outside 0..{n}"
            )));
        }
        let kind = if to == from + 1 { EdgeKind::Odometry } else { EdgeKind::LoopClosure };
        graph
            .add_edge(from, to, measurement, info, kind)
            .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
    }
    Ok(graph)
}

pub fn export_pose_graph(graph: &PoseGraph, path: &Path) -> Result<()> {
    std::fs::write(path, pose_graph_to_string(graph))?;
    Ok(())
}

pub fn import_pose_graph(path: &Path) -> Result<PoseGraph> {
    parse_pose_graph(&std::fs::read_to_string(path)?)
}
