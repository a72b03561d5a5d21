#![allow(dead_code)]

use consensus_cluster::graph::{self, WeightedGraph};
use consensus_cluster::linalg::Matrix;
use consensus_cluster::spectral::{self, SpectralData};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random connected graph: a random spanning tree plus extra edges with
/// probability `p`, weights uniform in [0.1, 2).
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedGraph {
    let mut w = Matrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        let child = order[k];
        let weight = rng.gen_range(0.1..2.0);
        w[(parent, child)] = weight;
        w[(child, parent)] = weight;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if w[(i, j)] == 0.0 && rng.gen_bool(p) {
                let weight = rng.gen_range(0.1..2.0);
                w[(i, j)] = weight;
                w[(j, i)] = weight;
            }
        }
    }
    WeightedGraph::from_weights(w).unwrap()
}

/// Erdős–Rényi style graph; may be disconnected.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedGraph {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                let weight = rng.gen_range(0.1..2.0);
                w[(i, j)] = weight;
                w[(j, i)] = weight;
            }
        }
    }
    WeightedGraph::from_weights(w).unwrap()
}

/// Two equal blocks of size `m` (vertices 1..=m and m+1..=2m), each a random
/// connected graph with heavy weights, joined by a perfect matching of weight
/// `eps`. Every vertex has the same total weight to the other block, so
/// the block indicator is an exact Laplacian eigenvector with eigenvalue 2·eps.
pub fn planted_two_block<R: Rng>(rng: &mut R, m: usize, eps: f64) -> WeightedGraph {
    let n = 2 * m;
    let mut w = Matrix::zeros(n, n);
    for block in 0..2 {
        let inner = random_connected_graph(rng, m, 0.6);
        for i in 0..m {
            for j in 0..m {
                w[(block * m + i, block * m + j)] = 2.0 * inner.weights()[(i, j)];
            }
        }
    }
    let mut partner: Vec<usize> = (0..m).collect();
    partner.shuffle(rng);
    for (i, &j) in partner.iter().enumerate() {
        w[(i, m + j)] = eps;
        w[(m + j, i)] = eps;
    }
    WeightedGraph::from_weights(w).unwrap()
}

pub fn spectrum(g: &WeightedGraph) -> SpectralData {
    spectral::eigendecompose(&graph::laplacian(g)).unwrap()
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
