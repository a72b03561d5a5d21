//! Weighted undirected graphs, their Laplacians and connectivity.
//!
//! Vertices are 0-based internally. Anything that crosses the crate boundary
//! (parsed files, reports, error messages) uses 1-based vertex ids.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::linalg::Matrix;

/// Relative tolerance for accepting a nearly symmetric adjacency matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: edge weight must be positive, got {weight}")]
    NonPositiveWeight { line: usize, weight: f64 },
    #[error("line {line}: duplicate edge ({u}, {v}), first given on line {first_line}")]
    DuplicateEdge {
        line: usize,
        u: usize,
        v: usize,
        first_line: usize,
    },
    #[error("adjacency matrix is not square: row {row} has {got} entries, expected {expected}")]
    NotSquare { row: usize, got: usize, expected: usize },
    #[error("adjacency matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative weight {weight} at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },
    #[error("non-zero diagonal entry {weight} at vertex {vertex} (self-loops are not allowed)")]
    NonZeroDiagonal { vertex: usize, weight: f64 },
    #[error("non-finite weight at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("empty input")]
    Empty,
}

/// Undirected graph given by a symmetric, nonnegative, zero-diagonal weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: Matrix,
}

impl WeightedGraph {
    /// Validates a weight matrix. Entries that disagree with their transpose
    /// by at most [`SYMMETRY_TOL`] (relative) are averaged.
    pub fn from_weights(mut weights: Matrix) -> Result<Self, GraphError> {
        let n = weights.rows();
        if !weights.is_square() {
            return Err(GraphError::NotSquare {
                row: 1,
                got: weights.cols(),
                expected: n,
            });
        }
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(GraphError::NonFinite { i: i + 1, j: j + 1 });
                }
                if w < 0.0 {
                    return Err(GraphError::NegativeWeight {
                        i: i + 1,
                        j: j + 1,
                        weight: w,
                    });
                }
            }
            if weights[(i, i)] != 0.0 {
                return Err(GraphError::NonZeroDiagonal {
                    vertex: i + 1,
                    weight: weights[(i, i)],
                });
            }
        }
        let scale = weights.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (weights[(i, j)], weights[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(GraphError::Asymmetric {
                        i: i + 1,
                        j: j + 1,
                        a,
                        b,
                    });
                }
                let avg = 0.5 * (a + b);
                weights[(i, j)] = avg;
                weights[(j, i)] = avg;
            }
        }
        Ok(WeightedGraph { weights })
    }

    /// Builds a graph from 1-indexed `(u, v, w)` triples.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut w = Matrix::zeros(n, n);
        for &(u, v, weight) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(GraphError::Parse {
                    line: 0,
                    msg: format!("vertex id out of range 1..={n} in edge ({u}, {v})"),
                });
            }
            w[(u - 1, v - 1)] = weight;
            w[(v - 1, u - 1)] = weight;
        }
        Self::from_weights(w)
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Undirected edges with positive weight as 1-indexed `(u, v, w)`, `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i + 1, j + 1, w));
                }
            }
        }
        out
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.weights.row(i).iter().sum()).collect()
    }

    /// Relabels vertices: old vertex `i` (0-based) becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> WeightedGraph {
        WeightedGraph {
            weights: self.weights.permute_symmetric(perm),
        }
    }
}

/// Graph Laplacian `L = D − W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: Matrix,
}

impl Laplacian {
    /// Wraps an arbitrary square matrix. No Laplacian structure is checked;
    /// used for degenerate single-agent systems and tests.
    pub fn from_matrix(matrix: Matrix) -> Self {
        assert!(matrix.is_square(), "Laplacian must be square");
        Laplacian { matrix }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn laplacian(g: &WeightedGraph) -> Laplacian {
    let n = g.n();
    let mut l = g.weights().scale(-1.0);
    for (i, d) in g.degrees().into_iter().enumerate() {
        // W has a zero diagonal, so this is exactly the degree.
        l[(i, i)] = d;
    }
    debug_assert_eq!(l.rows(), n);
    Laplacian { matrix: l }
}

/// Connected components as sorted 1-indexed vertex lists, ordered by smallest member.
pub fn connected_components(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let w = g.weights();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start + 1];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && w[(u, v)] > 0.0 {
                    seen[v] = true;
                    comp.push(v + 1);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

pub fn is_connected(g: &WeightedGraph) -> bool {
    connected_components(g).len() == 1
}

/// Parses the edge-list format: one `u v w` triple per line with 1-indexed
/// vertices, `#` comments, and an optional `n <N>` header line.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph, GraphError> {
    let mut declared_n: Option<(usize, usize)> = None;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut first_seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut max_id = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "n" {
            if fields.len() != 2 {
                return Err(parse_err(line_no, "header must be `n <N>`"));
            }
            if declared_n.is_some() {
                return Err(parse_err(line_no, "repeated `n` header"));
            }
            let n = fields[1]
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, &format!("bad vertex count `{}`", fields[1])))?;
            declared_n = Some((n, line_no));
            continue;
        }
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                &format!("expected `u v w`, found {} fields", fields.len()),
            ));
        }
        let parse_id = |s: &str| -> Result<usize, GraphError> {
            match s.parse::<usize>() {
                Ok(0) | Err(_) => Err(parse_err(
                    line_no,
                    &format!("bad vertex id `{s}` (ids are 1-indexed integers)"),
                )),
                Ok(v) => Ok(v),
            }
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let w = fields[2]
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, &format!("bad weight `{}`", fields[2])))?;
        if u == v {
            return Err(GraphError::SelfLoop {
                line: line_no,
                vertex: u,
            });
        }
        if w <= 0.0 || !w.is_finite() {
            return Err(GraphError::NonPositiveWeight {
                line: line_no,
                weight: w,
            });
        }
        let key = (u.min(v), u.max(v));
        if let Some(&first_line) = first_seen.get(&key) {
            return Err(GraphError::DuplicateEdge {
                line: line_no,
                u: key.0,
                v: key.1,
                first_line,
            });
        }
        first_seen.insert(key, line_no);
        max_id = max_id.max(key.1);
        edges.push((u, v, w));
    }

    let n = match declared_n {
        Some((n, line)) => {
            if max_id > n {
                return Err(parse_err(
                    line,
                    &format!("header declares {n} vertices but vertex {max_id} is used"),
                ));
            }
            n
        }
        None if edges.is_empty() => return Err(GraphError::Empty),
        None => max_id,
    };
    if n < 2 {
        return Err(GraphError::TooFewVertices(n));
    }
    WeightedGraph::from_edges(n, &edges)
}

/// Parses a plain CSV square matrix of weights (no header row).
pub fn parse_adjacency(csv: &str) -> Result<WeightedGraph, GraphError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in csv.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .map_err(|_| parse_err(idx + 1, &format!("bad number `{s}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GraphError::Empty);
    }
    let n = rows.len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(GraphError::NotSquare {
                row: i + 1,
                got: r.len(),
                expected: n,
            });
        }
    }
    WeightedGraph::from_weights(Matrix::from_rows(&rows))
}

/// Renders the weight matrix as CSV using shortest round-trip float formatting.
pub fn render_adjacency(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for i in 0..g.n() {
        let row: Vec<String> = g.weights().row(i).iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Renders the edge-list format, always including the `n` header.
pub fn render_edge_list(g: &WeightedGraph) -> String {
    let mut out = format!("n {}\n", g.n());
    for (u, v, w) in g.edges() {
        let _ = writeln!(out, "{u} {v} {w}");
    }
    out
}

fn parse_err(line: usize, msg: &str) -> GraphError {
    GraphError::Parse {
        line,
        msg: msg.to_string(),
    }
}
