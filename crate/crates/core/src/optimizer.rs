//! Gauss-Newton pose-graph optimization over SE(2).
//!
//! Minimizes the sum of Mahalanobis norms of relative-pose residuals with
//! node 0 held fixed as the gauge anchor. A backtracking step acceptance
//! keeps chi-squared non-increasing across iterations. The normal system is
//! block sparse (a 3x3 block per node pair sharing an edge), and is solved
//! with block-Jacobi preconditioned conjugate gradient, which keeps each
//! Gauss-Newton iteration near linear in the edge count; graphs of a few
//! thousand nodes optimize in fractions of a second.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::graph::{GraphEdge, PoseGraph};
use crate::se2::{wrap_angle, Pose2};

pub const MAX_ITERATIONS: usize = 50;
pub const UPDATE_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Accepted Gauss-Newton iterations.
    pub iterations: usize,
    pub chi2: f64,
    pub converged: bool,
    /// Chi-squared after each accepted iteration, starting with the initial
    /// value; non-increasing by construction.
    pub chi2_trace: Vec<f64>,
}

/// Total weighted squared residual over all edges.
pub fn chi_squared(graph: &PoseGraph) -> f64 {
    let poses: Vec<Pose2> = graph.nodes().iter().map(|n| n.pose).collect();
    chi2_of(&poses, graph.edges())
}

fn chi2_of(poses: &[Pose2], edges: &[GraphEdge]) -> f64 {
    edges
        .iter()
        .map(|e| {
            let r = residual(poses[e.from], poses[e.to], e.measurement);
            (r.transpose() * e.info.matrix() * r)[(0, 0)]
        })
        .sum()
}

fn residual(xi: Pose2, xj: Pose2, z: Pose2) -> Vector3<f64> {
    let actual = xi.between(&xj);
    let rz_t = rotation(z.theta).transpose();
    let dt = rz_t * Vector2::new(actual.x - z.x, actual.y - z.y);
    Vector3::new(dt.x, dt.y, wrap_angle(actual.theta - z.theta))
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Jacobians of the residual w.r.t. the from-pose and to-pose.
fn residual_jacobians(xi: Pose2, xj: Pose2, z: Pose2) -> (Matrix3<f64>, Matrix3<f64>) {
    let ri_t = rotation(xi.theta).transpose();
    let rz_t = rotation(z.theta).transpose();
    let (s, c) = xi.theta.sin_cos();
    // d(Ri^T)/d(theta_i)
    let dri_t = Matrix2::new(-s, c, -c, -s);
    let dt = Vector2::new(xj.x - xi.x, xj.y - xi.y);
    let rot = rz_t * ri_t;
    let dtheta = rz_t * dri_t * dt;
    let mut a = Matrix3::zeros();
    a.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-rot));
    a.fixed_view_mut::<2, 1>(0, 2).copy_from(&dtheta);
    a[(2, 2)] = -1.0;
    let mut b = Matrix3::zeros();
    b.fixed_view_mut::<2, 2>(0, 0).copy_from(&rot);
    b[(2, 2)] = 1.0;
    (a, b)
}

/// Optimizes node poses in place. Node 0 never moves. A report with
/// `converged: false` means the iteration cap was reached; the best iterate
/// is kept either way.
pub fn optimize(graph: &mut PoseGraph) -> Result<ConvergenceReport> {
    let n = graph.node_count();
    let mut poses: Vec<Pose2> = graph.nodes().iter().map(|node| node.pose).collect();
    let edges: Vec<GraphEdge> = graph.edges().to_vec();
    let mut trace = vec![chi2_of(&poses, &edges)];
    if n <= 1 || edges.is_empty() {
        if n > 1 {
            return Err(Error::Disconnected("cannot optimize a graph with no edges".into()));
        }
        return Ok(ConvergenceReport {
            iterations: 0,
            chi2: trace[0],
            converged: true,
            chi2_trace: trace,
        });
    }
    check_connected(n, &edges)?;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..MAX_ITERATIONS {
        // Gradient and Hessian approximation in block-sparse form; rows and
        // columns of the anchor are dropped, indices shift down by one.
        let mut diag = vec![Matrix3::<f64>::zeros(); n - 1];
        let mut off: BTreeMap<(usize, usize), Matrix3<f64>> = BTreeMap::new();
        let mut rhs = vec![Vector3::<f64>::zeros(); n - 1];
        for e in &edges {
            let (xi, xj) = (poses[e.from], poses[e.to]);
            let r = residual(xi, xj, e.measurement);
            let (ja, jb) = residual_jacobians(xi, xj, e.measurement);
            let info = e.info.matrix();
            let blocks = [(e.from, ja), (e.to, jb)];
            for (id_r, j_r) in blocks {
                if id_r == 0 {
                    continue;
                }
                rhs[id_r - 1] -= j_r.transpose() * info * r;
                for (id_c, j_c) in blocks {
                    if id_c == 0 {
                        continue;
                    }
                    // Only the diagonal and the upper triangle are stored;
                    // the (c, r) mirror of each pair is implied by symmetry
                    // and adding it too would double the block.
                    let block = j_r.transpose() * info * j_c;
                    match id_r.cmp(&id_c) {
                        std::cmp::Ordering::Equal => diag[id_r - 1] += block,
                        std::cmp::Ordering::Less => {
                            *off.entry((id_r - 1, id_c - 1)).or_insert_with(Matrix3::zeros) +=
                                block
                        }
                        std::cmp::Ordering::Greater => {}
                    }
                }
            }
        }
        let off: Vec<(usize, usize, Matrix3<f64>)> =
            off.into_iter().map(|((i, j), m)| (i, j, m)).collect();
        let delta = solve_pcg(&diag, &off, &rhs)?;
        let update_norm = delta.iter().map(|d| d.norm_squared()).sum::<f64>().sqrt();
        if update_norm == 0.0 {
            converged = true;
            break;
        }
        // Backtrack until chi2 does not increase.
        let chi2_before = *trace.last().unwrap();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..16 {
            let candidate: Vec<Pose2> = (0..n)
                .map(|id| {
                    if id == 0 {
                        poses[0]
                    } else {
                        let d = delta[id - 1];
                        let p = poses[id];
                        Pose2::new(p.x + alpha * d[0], p.y + alpha * d[1], p.theta + alpha * d[2])
                    }
                })
                .collect();
            let chi2_after = chi2_of(&candidate, &edges);
            if chi2_after <= chi2_before {
                poses = candidate;
                trace.push(chi2_after);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // No descent even with a tiny step: already at a minimum.
            converged = true;
            break;
        }
        iterations += 1;
        // A sub-tolerance update was still worth applying; stop after it.
        if update_norm < UPDATE_NORM_TOLERANCE {
            converged = true;
            break;
        }
    }
    for (id, p) in poses.iter().enumerate() {
        graph.set_pose(id, *p)?;
    }
    Ok(ConvergenceReport { iterations, chi2: *trace.last().unwrap(), converged, chi2_trace: trace })
}

/// The anchored normal system is positive definite exactly when every node
/// connects to the anchor, so disconnection is checked up front instead of
/// being inferred from a failed factorization.
fn check_connected(n: usize, edges: &[GraphEdge]) -> Result<()> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for e in edges {
        let (a, b) = (root(&mut parent, e.from), root(&mut parent, e.to));
        parent[a] = b;
    }
    let anchor = root(&mut parent, 0);
    for i in 1..n {
        if root(&mut parent, i) != anchor {
            return Err(Error::Disconnected(format!(
                "node {i} has no path to the anchor; cannot optimize"
            )));
        }
    }
    Ok(())
}

/// Conjugate gradient on the block-sparse normal system, preconditioned by
/// the inverted 3x3 diagonal blocks. Connectivity is established before the
/// call, so the system is positive definite and failure here is numeric.
fn solve_pcg(
    diag: &[Matrix3<f64>],
    off: &[(usize, usize, Matrix3<f64>)],
    rhs: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    const RELATIVE_TOLERANCE: f64 = 1e-12;
    let n = diag.len();
    let dot = |a: &[Vector3<f64>], b: &[Vector3<f64>]| -> f64 {
        a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
    };
    let matvec = |v: &[Vector3<f64>]| -> Vec<Vector3<f64>> {
        let mut out: Vec<Vector3<f64>> = diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for &(i, j, m) in off {
            out[i] += m * v[j];
            out[j] += m.transpose() * v[i];
        }
        out
    };

    let precond: Vec<nalgebra::Cholesky<f64, nalgebra::U3>> = diag
        .iter()
        .map(|d| nalgebra::Cholesky::new(*d))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Domain("indefinite diagonal block in the normal system".into()))?;
    let apply = |r: &[Vector3<f64>]| -> Vec<Vector3<f64>> {
        r.iter().zip(&precond).map(|(x, c)| c.solve(x)).collect()
    };

    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(vec![Vector3::zeros(); n]);
    }
    let mut x = vec![Vector3::<f64>::zeros(); n];
    let mut r = rhs.to_vec();
    let mut z = apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    // Exact termination needs at most dim steps in exact arithmetic; the
    // slack covers floating-point drift.
    let cap = 10 * 3 * n + 100;
    for _ in 0..cap {
        let q = matvec(&p);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::Domain("normal system lost positive definiteness".into()));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if dot(&r, &r).sqrt() <= RELATIVE_TOLERANCE * rhs_norm {
            return Ok(x);
        }
        z = apply(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Domain("conjugate gradient failed to converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKind, InfoMatrix3};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn info() -> InfoMatrix3 {
        InfoMatrix3::diagonal(100.0, 100.0, 400.0).unwrap()
    }

    /// Chain + closing edge whose measurements exactly match the poses.
    fn consistent_triangle() -> PoseGraph {
        let poses = [
            Pose2::new(0.0, 0.0, 0.0),
            Pose2::new(1.0, 0.0, std::f64::consts::FRAC_PI_2),
            Pose2::new(1.0, 1.0, std::f64::consts::PI),
        ];
        let mut g = PoseGraph::new();
        for (step, p) in poses.iter().enumerate() {
            g.add_node(*p, step);
        }
        g.add_edge(0, 1, poses[0].between(&poses[1]), info(), EdgeKind::Odometry).unwrap();
        g.add_edge(1, 2, poses[1].between(&poses[2]), info(), EdgeKind::Odometry).unwrap();
        g.add_edge(2, 0, poses[2].between(&poses[0]), info(), EdgeKind::LoopClosure).unwrap();
        g
    }

    #[test]
    fn consistent_graph_is_a_fixed_point() {
        let mut g = consistent_triangle();
        let report = optimize(&mut g).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert!(report.chi2 < 1e-10);
    }

    #[test]
    fn perturbed_node_is_restored() {
        let mut g = consistent_triangle();
        let truth = g.pose(1).unwrap();
        g.set_pose(1, Pose2::new(truth.x + 0.1, truth.y - 0.05, truth.theta + 0.1)).unwrap();
        let report = optimize(&mut g).unwrap();
        assert!(report.converged);
        assert!(report.chi2 < 1e-10);
        let p = g.pose(1).unwrap();
        assert_abs_diff_eq!(p.x, truth.x, epsilon = 1e-6);
        assert_abs_diff_eq!(p.y, truth.y, epsilon = 1e-6);
        assert_abs_diff_eq!(p.theta, truth.theta, epsilon = 1e-6);
    }

    #[test]
    fn anchor_never_moves() {
        let mut g = consistent_triangle();
        for id in 1..3 {
            let p = g.pose(id).unwrap();
            g.set_pose(id, Pose2::new(p.x + 0.2, p.y + 0.2, p.theta - 0.15)).unwrap();
        }
        optimize(&mut g).unwrap();
        let a = g.pose(0).unwrap();
        assert_eq!((a.x, a.y, a.theta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn chi2_trace_is_non_increasing_on_random_graphs() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(4..12);
            let mut poses = vec![Pose2::identity()];
            for _ in 1..n {
                let prev = *poses.last().unwrap();
                poses.push(prev.compose(&Pose2::new(
                    rng.gen_range(0.2..0.6),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.5..0.5),
                )));
            }
            let mut g = PoseGraph::new();
            for (step, p) in poses.iter().enumerate() {
                g.add_node(*p, step);
            }
            for i in 1..n {
                g.add_edge(i - 1, i, poses[i - 1].between(&poses[i]), info(), EdgeKind::Odometry)
                    .unwrap();
            }
            let a = rng.gen_range(0..n - 2);
            let b = rng.gen_range(a + 2..n);
            g.add_edge(b, a, poses[b].between(&poses[a]), info(), EdgeKind::LoopClosure).unwrap();
            for id in 1..n {
                let p = g.pose(id).unwrap();
                g.set_pose(
                    id,
                    Pose2::new(
                        p.x + rng.gen_range(-0.1..0.1),
                        p.y + rng.gen_range(-0.1..0.1),
                        p.theta + rng.gen_range(-0.1..0.1),
                    ),
                )
                .unwrap();
            }
            let report = optimize(&mut g).unwrap();
            for w in report.chi2_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "chi2 increased: {:?}", report.chi2_trace);
            }
            assert!(report.chi2 < 1e-8, "failed to refit: chi2 {}", report.chi2);
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let mut g = PoseGraph::new();
        for i in 0..4 {
            g.add_node(Pose2::new(i as f64, 0.0, 0.0), 0);
        }
        g.add_edge(0, 1, Pose2::new(1.0, 0.0, 0.0), info(), EdgeKind::Odometry).unwrap();
        // Nodes 2 and 3 are linked to each other but not to the anchor side.
        g.add_edge(2, 3, Pose2::new(1.0, 0.0, 0.0), info(), EdgeKind::Odometry).unwrap();
        assert!(optimize(&mut g).is_err());
    }

    #[test]
    fn single_node_graph_is_trivially_converged() {
        let mut g = PoseGraph::new();
        g.add_node(Pose2::identity(), 0);
        let report = optimize(&mut g).unwrap();
        assert!(report.converged);
        assert_eq!(report.chi2, 0.0);
    }
}

