//! Reference graphs and agent dynamics: the two worked six-vertex examples
//! plus a few small textbook graphs used by tests and the CLI demos.

use crate::dynamics::AgentDynamics;
use crate::graph::WeightedGraph;
use crate::linalg::Matrix;

/// Two unit-weight triangles {1,2,3} and {4,5,6}, joined by three 0.1 edges
/// (1,5), (2,6), (3,4).
pub fn example1_graph() -> WeightedGraph {
    WeightedGraph::from_weights(Matrix::from_rows(&[
        [0.0, 1.0, 1.0, 0.0, 0.1, 0.0],
        [1.0, 0.0, 1.0, 0.0, 0.0, 0.1],
        [1.0, 1.0, 0.0, 0.1, 0.0, 0.0],
        [0.0, 0.0, 0.1, 0.0, 1.0, 1.0],
        [0.1, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.1, 0.0, 1.0, 0.0, 0.0],
    ]))
    .expect("valid fixture")
}

/// Triangle {1,2,3} and star centred at 4 with leaves 5, 6, joined by a single
/// 0.1 edge (3,4).
pub fn example2_graph() -> WeightedGraph {
    WeightedGraph::from_weights(Matrix::from_rows(&[
        [0.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.1, 0.0, 0.0],
        [0.0, 0.0, 0.1, 0.0, 1.0, 1.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    ]))
    .expect("valid fixture")
}

pub fn example1_dynamics() -> AgentDynamics {
    AgentDynamics::new(
        Matrix::from_rows(&[[0.25, 1.0], [-1.0, 0.25]]),
        Matrix::from_rows(&[[0.0, -1.0], [0.5, 1.0]]),
    )
    .expect("valid fixture")
}

pub fn example2_dynamics() -> AgentDynamics {
    AgentDynamics::new(
        Matrix::from_rows(&[[0.25, 2.0], [-2.0, 0.25]]),
        Matrix::from_rows(&[[0.5, -1.0], [4.0, 0.5]]),
    )
    .expect("valid fixture")
}

pub fn complete_graph(n: usize, weight: f64) -> WeightedGraph {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[(i, j)] = weight;
            }
        }
    }
    WeightedGraph::from_weights(w).expect("valid complete graph")
}

pub fn path_graph(n: usize) -> WeightedGraph {
    let edges: Vec<_> = (1..n).map(|i| (i, i + 1, 1.0)).collect();
    WeightedGraph::from_edges(n, &edges).expect("valid path graph")
}

/// Two disjoint unit triangles on {1,2,3} and {4,5,6}.
pub fn two_triangles() -> WeightedGraph {
    WeightedGraph::from_edges(
        6,
        &[
            (1, 2, 1.0),
            (1, 3, 1.0),
            (2, 3, 1.0),
            (4, 5, 1.0),
            (4, 6, 1.0),
            (5, 6, 1.0),
        ],
    )
    .expect("valid fixture")
}
