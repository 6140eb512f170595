//! Weighted graph Laplacians and spanning-tree counts.
//!
//! The weighted number of spanning trees t(G) = sum over spanning trees of
//! the product of edge weights equals any cofactor of the weighted Laplacian.
//! `log_weighted_spanning_trees` evaluates a cofactor in the log domain
//! (Cholesky of the reduced Laplacian) so chains of hundreds of strong edges
//! cannot overflow; `brute_force_spanning_trees` enumerates trees directly
//! and exists as an independent cross-check for small graphs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::PoseGraph;

/// Undirected weighted edge between node indices `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl WeightedEdge {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        Self { a, b, weight }
    }
}

/// Weighted Laplacian L = D - W of an undirected graph. Symmetric, rows sum
/// to zero, off-diagonals are negated edge-weight sums.
#[derive(Debug, Clone)]
pub struct WeightedLaplacian {
    n: usize,
    matrix: DMatrix<f64>,
}

impl WeightedLaplacian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

fn check_edges(n: usize, edges: &[WeightedEdge]) -> Result<()> {
    if n == 0 {
        return Err(Error::Graph("graph has no nodes".into()));
    }
    for e in edges {
        if e.a == e.b {
            return Err(Error::Graph(format!("self-loop on node {}", e.a)));
        }
        if e.a >= n || e.b >= n {
            return Err(Error::Graph(format!(
                "edge ({},{}) references a node outside 0..{n}",
                e.a, e.b
            )));
        }
        if !e.weight.is_finite() {
            return Err(Error::Domain(format!("edge ({},{}) weight not finite", e.a, e.b)));
        }
        if e.weight < 0.0 {
            return Err(Error::Domain(format!(
                "edge ({},{}) has negative weight {}",
                e.a, e.b, e.weight
            )));
        }
    }
    Ok(())
}

/// Laplacian of a pose graph under the given per-edge scalar weights.
/// `weights[j]` pairs with `graph.edges()[j]`; parallel edges sum.
pub fn build_weighted_laplacian(graph: &PoseGraph, weights: &[f64]) -> Result<WeightedLaplacian> {
    let edges = zip_weights(graph, weights)?;
    laplacian_from_edges(graph.node_count(), &edges)
}

/// t(G) by explicit enumeration over the pose graph's edges; oracle
/// counterpart of `build_weighted_laplacian` + `log_weighted_spanning_trees`.
pub fn brute_force_spanning_trees(graph: &PoseGraph, weights: &[f64]) -> Result<f64> {
    let edges = zip_weights(graph, weights)?;
    enumerate_spanning_trees(graph.node_count(), &edges)
}

fn zip_weights(graph: &PoseGraph, weights: &[f64]) -> Result<Vec<WeightedEdge>> {
    if weights.len() != graph.edge_count() {
        return Err(Error::Config(format!(
            "{} weights for {} edges",
            weights.len(),
            graph.edge_count()
        )));
    }
    Ok(graph
        .edges()
        .iter()
        .zip(weights)
        .map(|(e, &w)| WeightedEdge::new(e.from, e.to, w))
        .collect())
}

/// Laplacian from a bare weighted edge list (no pose graph required).
pub fn laplacian_from_edges(n: usize, edges: &[WeightedEdge]) -> Result<WeightedLaplacian> {
    check_edges(n, edges)?;
    let mut m = DMatrix::zeros(n, n);
    for e in edges {
        m[(e.a, e.a)] += e.weight;
        m[(e.b, e.b)] += e.weight;
        m[(e.a, e.b)] -= e.weight;
        m[(e.b, e.a)] -= e.weight;
    }
    Ok(WeightedLaplacian { n, matrix: m })
}

/// ln t(G) via the cofactor with node 0 deleted.
pub fn log_weighted_spanning_trees(lap: &WeightedLaplacian) -> Result<f64> {
    log_weighted_spanning_trees_anchored(lap, 0)
}

/// ln t(G) via the cofactor with `anchor` deleted. The matrix-tree theorem
/// makes the choice of anchor irrelevant; the parameter exists so that
/// invariance is testable.
pub fn log_weighted_spanning_trees_anchored(lap: &WeightedLaplacian, anchor: usize) -> Result<f64> {
    if anchor >= lap.n {
        return Err(Error::Graph(format!("anchor {anchor} outside 0..{}", lap.n)));
    }
    if lap.n == 1 {
        // Empty product: the single-node graph has exactly one spanning tree.
        return Ok(0.0);
    }
    let reduced = lap.matrix.clone().remove_row(anchor).remove_column(anchor);
    let scale = reduced.diagonal().iter().fold(0.0f64, |a, &v| a.max(v));
    if scale <= 0.0 {
        return Err(Error::Disconnected("reduced Laplacian has a zero diagonal".into()));
    }
    let chol = nalgebra::Cholesky::new(reduced)
        .ok_or_else(|| Error::Disconnected("reduced Laplacian is not positive definite".into()))?;
    let mut log_det = 0.0;
    for v in chol.l_dirty().diagonal().iter() {
        // A pivot collapsing relative to the diagonal scale means the graph
        // is disconnected up to roundoff, not that t(G) is genuinely tiny.
        if v * v < 1e-12 * scale {
            return Err(Error::Disconnected(
                "reduced Laplacian is singular within tolerance".into(),
            ));
        }
        log_det += v.ln();
    }
    Ok(2.0 * log_det)
}

const BRUTE_FORCE_MAX_NODES: usize = 10;

/// t(G) by explicit enumeration: sum over (n-1)-edge subsets that form a
/// spanning tree of the product of their weights. Exponential; guarded to
/// n <= 10 so it stays a practical oracle.
pub fn enumerate_spanning_trees(n: usize, edges: &[WeightedEdge]) -> Result<f64> {
    check_edges(n, edges)?;
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::Refused(format!(
            "brute-force enumeration capped at {BRUTE_FORCE_MAX_NODES} nodes, got {n}"
        )));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let k = n - 1;
    if edges.len() < k {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut chosen = vec![0usize; k];
    enumerate_subsets(edges, n, k, 0, 0, &mut chosen, &mut total);
    Ok(total)
}

fn enumerate_subsets(
    edges: &[WeightedEdge],
    n: usize,
    k: usize,
    depth: usize,
    start: usize,
    chosen: &mut [usize],
    total: &mut f64,
) {
    if depth == k {
        if spans(edges, n, chosen) {
            *total += chosen.iter().map(|&i| edges[i].weight).product::<f64>();
        }
        return;
    }
    let remaining = k - depth;
    for i in start..=(edges.len() - remaining) {
        chosen[depth] = i;
        enumerate_subsets(edges, n, k, depth + 1, i + 1, chosen, total);
    }
}

/// True iff the chosen n-1 edges connect all n nodes (hence form a tree).
fn spans(edges: &[WeightedEdge], n: usize, chosen: &[usize]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merged = 0;
    for &i in chosen {
        let (ra, rb) = (find(&mut parent, edges[i].a), find(&mut parent, edges[i].b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
        merged += 1;
    }
    merged == n - 1
}
