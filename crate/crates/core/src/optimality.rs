//! D-optimality of information matrices and pose graphs.
//!
//! The D-optimality criterion used throughout is the geometric mean of the
//! eigenvalue spectrum, exp((1/d) * sum_k ln lambda_k). It carries the units
//! of the eigenvalues (a scale factor c multiplies the criterion by c) and is
//! exactly zero for singular matrices, so "no information along some
//! direction" reads as zero rather than as a large-magnitude log.
//!
//! Two evaluation routes exist for a pose graph. `dopt_exact` assembles the
//! full system information matrix (anchored at node 0) and takes the
//! geometric eigenvalue mean over all 3(n-1) dimensions. `dopt_graph` is the
//! fast surrogate: collapse each edge to the scalar geometric mean of its
//! 3x3 information, then evaluate (n * t)^(1/n) from the weighted
//! spanning-tree count t of the resulting scalar graph. The surrogate tracks
//! the ranking of the exact value, not its level, and runs in the log domain
//! end to end. The two routes are deliberately kept separate so each can
//! check the other in tests.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{InfoMatrix3, PoseGraph};
use crate::laplacian::{build_weighted_laplacian, log_weighted_spanning_trees};

/// Relative threshold below which an eigenvalue counts as zero.
pub const EIGENVALUE_CLAMP_REL: f64 = 1e-12;

/// Eigenvalue multiset of a symmetric matrix, ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Eigendecomposition of `m`. Rejects non-finite entries and asymmetry
    /// beyond 1e-9 relative to the largest entry.
    pub fn of(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Domain(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        let scale = m.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::Domain(format!("matrix asymmetric at ({i},{j})")));
                }
            }
        }
        let sym = (m + m.transpose()) * 0.5;
        let mut eigenvalues: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

fn geometric_mean_of_spectrum(spec: &Spectrum) -> f64 {
    let max_abs = spec.max_abs();
    if max_abs == 0.0 {
        return 0.0;
    }
    let clamp = EIGENVALUE_CLAMP_REL * max_abs;
    let d = spec.eigenvalues().len() as f64;
    let mut log_sum = 0.0;
    for &l in spec.eigenvalues() {
        if l <= clamp {
            return 0.0;
        }
        log_sum += l.ln();
    }
    (log_sum / d).exp()
}

/// Geometric mean of the eigenvalues of a symmetric PSD matrix of side `d`.
/// Exactly 0 when any eigenvalue is zero (or clamps to zero).
pub fn dopt_matrix(m: &DMatrix<f64>, d: usize) -> Result<f64> {
    if d == 0 || m.nrows() != d || m.ncols() != d {
        return Err(Error::Domain(format!(
            "expected a {d}x{d} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(geometric_mean_of_spectrum(&Spectrum::of(m)?))
}

/// Scalar weight of an edge: the geometric eigenvalue mean of its 3x3
/// information matrix. Infallible because `InfoMatrix3` is validated on
/// construction.
pub fn edge_weight(info: &InfoMatrix3) -> f64 {
    let mut eigs: Vec<f64> = info.matrix().symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    geometric_mean_of_spectrum(&Spectrum { eigenvalues: eigs })
}

/// Spanning-tree surrogate for the graph's D-optimality: (n * t)^(1/n) with
/// t the weighted spanning-tree count over scalar edge weights. Evaluated as
/// exp((ln n + ln t) / n); never materializes t.
pub fn dopt_graph(graph: &PoseGraph) -> Result<f64> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::Graph(format!("need at least 2 nodes, got {n}")));
    }
    let weights: Vec<f64> = graph.edges().iter().map(|e| edge_weight(&e.info)).collect();
    let lap = build_weighted_laplacian(graph, &weights)?;
    let log_t = log_weighted_spanning_trees(&lap)?;
    Ok((((n as f64).ln() + log_t) / n as f64).exp())
}

/// Full system information matrix with node 0 anchored (its rows and columns
/// deleted), so the result is positive definite for connected graphs.
#[derive(Debug, Clone)]
pub struct SystemFIM {
    matrix: DMatrix<f64>,
}

impl SystemFIM {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Assembles sum_j A_j^T Phi_j A_j over all edges with the measurement
/// Jacobians taken as +/- identity: each edge (a,b) adds Phi to both diagonal
/// blocks and -Phi to both off-diagonal blocks, anchor rows/columns dropped.
pub fn assemble_fim(graph: &PoseGraph) -> Result<SystemFIM> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::Graph(format!("need at least 2 nodes, got {n}")));
    }
    let dim = 3 * (n - 1);
    let mut m = DMatrix::zeros(dim, dim);
    // Anchored block index: node id i > 0 occupies rows 3(i-1)..3i.
    let block = |id: usize| -> Option<usize> { (id > 0).then(|| 3 * (id - 1)) };
    for e in graph.edges() {
        let phi = e.info.matrix();
        let (ba, bb) = (block(e.from), block(e.to));
        if let Some(ra) = ba {
            for i in 0..3 {
                for j in 0..3 {
                    m[(ra + i, ra + j)] += phi[(i, j)];
                }
            }
        }
        if let Some(rb) = bb {
            for i in 0..3 {
                for j in 0..3 {
                    m[(rb + i, rb + j)] += phi[(i, j)];
                }
            }
        }
        if let (Some(ra), Some(rb)) = (ba, bb) {
            for i in 0..3 {
                for j in 0..3 {
                    m[(ra + i, rb + j)] -= phi[(i, j)];
                    m[(rb + i, ra + j)] -= phi[(i, j)];
                }
            }
        }
    }
    Ok(SystemFIM { matrix: m })
}

/// Reference D-optimality: geometric eigenvalue mean of the assembled system
/// information matrix over all 3(n-1) dimensions. Costs a full
/// eigendecomposition; exists as ground truth for the surrogate.
pub fn dopt_exact(graph: &PoseGraph) -> Result<f64> {
    let fim = assemble_fim(graph)?;
    let d = fim.dim();
    dopt_matrix(fim.matrix(), d)
}
