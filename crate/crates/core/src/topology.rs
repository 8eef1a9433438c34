//! Communication graphs and doubly stochastic mixing weights.
//!
//! Agents are indexed from 0 internally. Configuration files and reports use
//! 1-based agent numbers; the conversion happens at the I/O boundary.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Tolerance used when validating row/column sums and symmetry of `W`.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Retry budget for [`Graph::random_connected`].
pub const MAX_SAMPLE_ATTEMPTS: usize = 1000;

const GRAPH_STREAM: u64 = 0x4752_4150_4800_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Complete,
    General,
}

/// Connected undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    kind: GraphKind,
}

impl Graph {
    /// All `n(n-1)/2` edges on `n >= 2` agents.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "complete graph needs at least 2 agents, got {n}"
            )));
        }
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Ok(Self {
            n,
            edges,
            kind: GraphKind::Complete,
        })
    }

    /// Erdős–Rényi sample `G(n, edge_prob)` conditioned on connectivity.
    ///
    /// Each attempt draws from its own stream keyed by `(seed, attempt)`, so
    /// the result depends only on the arguments. Fails once
    /// [`MAX_SAMPLE_ATTEMPTS`] samples have all been disconnected.
    pub fn random_connected(n: usize, edge_prob: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "random graph needs at least 2 agents, got {n}"
            )));
        }
        if !(edge_prob > 0.0 && edge_prob <= 1.0) {
            return Err(Error::invalid(format!(
                "edge probability must lie in (0, 1], got {edge_prob}"
            )));
        }
        for attempt in 0..MAX_SAMPLE_ATTEMPTS {
            let mut rng = seed::rng_for(&[GRAPH_STREAM, seed, attempt as u64]);
            let mut edges = BTreeSet::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < edge_prob {
                        edges.insert((i, j));
                    }
                }
            }
            let candidate = Self {
                n,
                edges,
                kind: GraphKind::General,
            };
            if candidate.is_connected() {
                return Ok(candidate);
            }
        }
        Err(Error::NoConnectedSample {
            n,
            edge_prob,
            attempts: MAX_SAMPLE_ATTEMPTS,
        })
    }

    /// Builds a graph from 0-based edge pairs. Duplicates and reversed pairs
    /// collapse onto one undirected edge.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one agent"));
        }
        let mut edges = BTreeSet::new();
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) references an agent outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop on agent {}", i + 1)));
            }
            edges.insert((i.min(j), i.max(j)));
        }
        let kind = if edges.len() == n * (n - 1) / 2 && n >= 2 {
            GraphKind::Complete
        } else {
            GraphKind::General
        };
        let g = Self { n, edges, kind };
        if !g.is_connected() {
            return Err(Error::Disconnected { n });
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Edges as `(i, j)` with `i < j`, 0-based.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| j != i && self.has_edge(i, j))
            .collect()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    queue.push_back(v);
                }
            }
        }
        visited == self.n
    }
}

/// Symmetric doubly stochastic mixing matrix supported on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
}

impl WeightMatrix {
    /// Wraps an arbitrary matrix after checking it against `graph`.
    pub fn from_matrix(graph: &Graph, entries: DMatrix<f64>) -> Result<Self> {
        let w = Self { entries };
        w.validate(graph)?;
        Ok(w)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Checks nonnegativity, sparsity pattern, symmetry and unit row/column
    /// sums.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let n = graph.n();
        if self.entries.nrows() != n || self.entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.entries.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let w = self.entries[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!(
                        "weight W[{},{}] = {w} is negative or non-finite",
                        i + 1,
                        j + 1
                    )));
                }
                if i != j && w > 0.0 && !graph.has_edge(i, j) {
                    return Err(Error::invalid(format!(
                        "weight W[{},{}] is positive but the agents are not adjacent",
                        i + 1,
                        j + 1
                    )));
                }
                if (w - self.entries[(j, i)]).abs() > STOCHASTIC_TOL {
                    return Err(Error::invalid(format!(
                        "weight matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
            let row: f64 = self.entries.row(i).sum();
            let col: f64 = self.entries.column(i).sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL || (col - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid(format!(
                    "row/column {} sums to {row}/{col}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Eigenvalues of `W`, sorted in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// Spectral radius of `W` restricted to the mean-zero subspace, i.e. the
    /// largest eigenvalue magnitude of `W - (1/n) 1 1^T`.
    pub fn second_eigenvalue_magnitude(&self) -> f64 {
        let n = self.n();
        let projected = &self.entries - DMatrix::from_element(n, n, 1.0 / n as f64);
        SymmetricEigen::new(projected)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.entries * v
    }
}

/// Metropolis–Hastings weights: `W_ij = 1 / (1 + max(d_i, d_j))` on edges,
/// diagonal takes the remaining mass.
pub fn metropolis_weights(graph: &Graph) -> WeightMatrix {
    let n = graph.n();
    let deg = graph.degrees();
    let mut w = DMatrix::zeros(n, n);
    for (i, j) in graph.edges() {
        let wij = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        w[(i, j)] = wij;
        w[(j, i)] = wij;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    WeightMatrix { entries: w }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn complete_graph_edges() {
        let g = Graph::complete(3).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(g.kind(), GraphKind::Complete);
        assert_eq!(Graph::complete(10).unwrap().edge_count(), 45);
    }

    #[test]
    fn complete_graph_rejects_single_agent() {
        assert!(matches!(
            Graph::complete(1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Graph::complete(0).is_err());
    }

    #[test]
    fn two_agent_random_graph_is_the_single_edge() {
        for s in 0..20 {
            let g = Graph::random_connected(2, 1.0, s).unwrap();
            assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
            assert_eq!(g.kind(), GraphKind::General);
        }
    }

    #[test]
    fn random_graph_is_reproducible() {
        let a = Graph::random_connected(10, 0.4, 7).unwrap();
        let b = Graph::random_connected(10, 0.4, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_graph_rejects_bad_probability() {
        assert!(Graph::random_connected(5, 0.0, 1).is_err());
        assert!(Graph::random_connected(5, 1.5, 1).is_err());
        assert!(Graph::random_connected(5, f64::NAN, 1).is_err());
        assert!(Graph::random_connected(1, 0.5, 1).is_err());
    }

    #[test]
    fn random_graph_gives_up_on_hopeless_density() {
        let err = Graph::random_connected(60, 1e-6, 3).unwrap_err();
        assert!(matches!(err, Error::NoConnectedSample { attempts: 1000, .. }));
    }

    #[test]
    fn explicit_graph_validation() {
        assert!(matches!(
            Graph::from_edges(4, &[(0, 1), (2, 3)]),
            Err(Error::Disconnected { n: 4 })
        ));
        assert!(Graph::from_edges(3, &[(0, 0), (1, 2)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        let g = Graph::from_edges(3, &[(1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), vec![0, 2]);
        let single = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(single.n(), 1);
    }

    #[test]
    fn metropolis_on_complete_four() {
        let w = metropolis_weights(&Graph::complete(4).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                assert!((w.get(i, j) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_on_path() {
        let w = metropolis_weights(&path3());
        let expected = [
            [2.0 / 3.0, 1.0 / 3.0, 0.0],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [0.0, 1.0 / 3.0, 2.0 / 3.0],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((w.get(i, j) - want).abs() < 1e-15);
            }
        }
        w.validate(&path3()).unwrap();
    }

    #[test]
    fn second_eigenvalue_of_averaging_projector_is_zero() {
        let w = metropolis_weights(&Graph::complete(7).unwrap());
        assert!(w.second_eigenvalue_magnitude() < 1e-12);
    }

    /// Roots of the characteristic polynomial of a symmetric 3x3 matrix via
    /// the trigonometric cubic formula.
    fn cubic_eigenvalues(m: [[f64; 3]; 3]) -> [f64; 3] {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2]
            - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        // lambda^3 - tr lambda^2 + minors lambda - det = 0, shift lambda = t + tr/3
        let shift = tr / 3.0;
        let p = minors - tr * tr / 3.0;
        let q = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = ((3.0 * q / (p * r)).clamp(-1.0, 1.0)).acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        [
            shift + r * phi.cos(),
            shift + r * (phi - two_pi_3).cos(),
            shift + r * (phi - 2.0 * two_pi_3).cos(),
        ]
    }

    #[test]
    fn second_eigenvalue_of_path_matches_cubic_oracle() {
        let m = [
            [2.0 / 3.0, 1.0 / 3.0, 0.0],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [0.0, 1.0 / 3.0, 2.0 / 3.0],
        ];
        let mut roots = cubic_eigenvalues(m);
        roots.sort_by(|a, b| b.total_cmp(a));
        assert!((roots[0] - 1.0).abs() < 1e-12);
        let oracle = roots[1].abs().max(roots[2].abs());
        // frozen: eigenvalues are 1, 2/3, 0
        assert!((oracle - 2.0 / 3.0).abs() < 1e-12);
        let w = metropolis_weights(&path3());
        assert!((w.second_eigenvalue_magnitude() - oracle).abs() < 1e-12);
        let eig = w.eigenvalues();
        assert!((eig[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_matrix_rejects_off_pattern_weights() {
        let g = path3();
        let mut m = metropolis_weights(&g).as_matrix().clone();
        m[(0, 2)] = 0.1;
        m[(2, 0)] = 0.1;
        assert!(WeightMatrix::from_matrix(&g, m).is_err());
        let bad_sum = DMatrix::from_element(3, 3, 0.5);
        assert!(WeightMatrix::from_matrix(&Graph::complete(3).unwrap(), bad_sum).is_err());
    }
}
