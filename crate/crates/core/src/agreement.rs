//! Pairwise agreement from the zero pattern of `PT`.
//!
//! `P = Γ L†` solves `P L = Γ`, where `Γ` maps stacked states to the cyclic
//! consecutive differences `x_i − x_{i+1}`. Row `i` of `PT` expresses that
//! difference in the Laplacian eigenbasis, scaled by the mode eigenvalues.
//! Pair `(i, i+1)` agrees exactly when the row carries no weight on the
//! columns of nonzero modes that do not decay (the required-zero set `Z`).
//!
//! Entries of `PT` inside a repeated eigenvalue depend on the arbitrary basis
//! chosen for that eigenspace, so those columns are tested jointly through the
//! Euclidean norm of the row restricted to the whole block.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::StabilityPartition;
use crate::linalg::Matrix;
use crate::spectral::{SpectralData, SpectralError};

/// Default zero tolerance, relative to the largest entry of `PT`.
pub const RELATIVE_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum AgreementError {
    #[error("the agreement test needs a connected graph: {0}")]
    Spectral(#[from] SpectralError),
    #[error("vertex {vertex} out of range 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("required-zero column {column} out of range 2..={n}")]
    ColumnOutOfRange { column: usize, n: usize },
}

/// The cyclic difference matrix: row `i < N` is `e_i − e_{i+1}`, row `N` is `e_N − e_1`.
pub fn gamma(n: usize) -> Matrix {
    assert!(n >= 2, "gamma needs N >= 2");
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        g[(i, (i + 1) % n)] = -1.0;
    }
    g
}

/// Minimal solution `P = Γ L†` of `P L = Γ`.
pub fn compute_p(s: &SpectralData) -> Result<Matrix, AgreementError> {
    s.require_connected()?;
    Ok(gamma(s.n()).matmul(s.pseudoinverse()))
}

pub fn compute_pt(p: &Matrix, s: &SpectralData) -> Matrix {
    p.matmul(s.basis())
}

/// `RELATIVE_ZERO_TOL · max|PT|`.
pub fn default_zero_tolerance(pt: &Matrix) -> f64 {
    RELATIVE_ZERO_TOL * pt.max_abs()
}

/// Column groups (0-based) the Z-mass is taken over: every eigenvalue block
/// that intersects `Z`, taken whole.
fn mass_blocks(s: &SpectralData, required_zero: &[usize]) -> Vec<Vec<usize>> {
    s.eigenvalue_blocks()
        .into_iter()
        .filter(|b| b.iter().any(|k| required_zero.contains(&(k + 1))))
        .collect()
}

/// Gauge-invariant mass of a row over the required-zero columns: the largest
/// block norm, which for a simple eigenvalue is just `|row[k]|`.
fn z_mass(row: &[f64], blocks: &[Vec<usize>]) -> f64 {
    blocks
        .iter()
        .map(|b| b.iter().map(|&k| row[k] * row[k]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn check_columns(n: usize, required_zero: &[usize]) -> Result<(), AgreementError> {
    for &c in required_zero {
        if c < 2 || c > n {
            return Err(AgreementError::ColumnOutOfRange { column: c, n });
        }
    }
    Ok(())
}

/// Per-row Z-masses of `PT`.
pub fn consecutive_masses(pt: &Matrix, s: &SpectralData, required_zero: &[usize]) -> Vec<f64> {
    let blocks = mass_blocks(s, required_zero);
    (0..pt.rows()).map(|i| z_mass(pt.row(i), &blocks)).collect()
}

/// Entry `i` (0-based) tells whether pair `(i+1, i+2)` agrees; the last entry
/// is the wrap-around pair `(N, 1)`.
pub fn consecutive_agreements(
    pt: &Matrix,
    s: &SpectralData,
    required_zero: &[usize],
    zero_tolerance: f64,
) -> Vec<bool> {
    consecutive_masses(pt, s, required_zero)
        .into_iter()
        .map(|m| m < zero_tolerance)
        .collect()
}

/// Z-mass of the pair `(i, j)` (1-indexed): `p = (e_i − e_j)ᵀ L†` solves
/// `p L = e_i − e_j`, and `pT` is tested like a row of `PT`.
pub fn pair_mass(i: usize, j: usize, s: &SpectralData, required_zero: &[usize]) -> Result<f64, AgreementError> {
    let n = s.n();
    for v in [i, j] {
        if v == 0 || v > n {
            return Err(AgreementError::VertexOutOfRange { vertex: v, n });
        }
    }
    check_columns(n, required_zero)?;
    s.require_connected()?;
    if i == j {
        return Ok(0.0);
    }
    let row = pair_row(i - 1, j - 1, s);
    Ok(z_mass(&row, &mass_blocks(s, required_zero)))
}

fn pair_row(i: usize, j: usize, s: &SpectralData) -> Vec<f64> {
    let pinv = s.pseudoinverse();
    let p: Vec<f64> = pinv.row(i).iter().zip(pinv.row(j)).map(|(a, b)| a - b).collect();
    s.basis().vec_mul(&p)
}

pub fn pair_agreement(
    i: usize,
    j: usize,
    s: &SpectralData,
    required_zero: &[usize],
    zero_tolerance: f64,
) -> Result<bool, AgreementError> {
    Ok(pair_mass(i, j, s, required_zero)? < zero_tolerance)
}

/// All-pairs Z-masses (0-based, symmetric, zero diagonal).
pub fn pair_masses(s: &SpectralData, required_zero: &[usize]) -> Matrix {
    let n = s.n();
    let blocks = mass_blocks(s, required_zero);
    // Rows of L† T; the row for pair (i, j) is their difference.
    let lt = s.pseudoinverse().matmul(s.basis());
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let row: Vec<f64> = lt.row(i).iter().zip(lt.row(j)).map(|(a, b)| a - b).collect();
            let m = z_mass(&row, &blocks);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    out
}

/// Symmetric, reflexive agreement relation over 0-based vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementRelation {
    n: usize,
    agree: Vec<bool>,
}

impl AgreementRelation {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut agree = vec![false; n * n];
        for i in 0..n {
            agree[i * n + i] = true;
            for j in (i + 1)..n {
                let v = f(i, j);
                agree[i * n + j] = v;
                agree[j * n + i] = v;
            }
        }
        AgreementRelation { n, agree }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_fn(n, |_, _| true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based lookup.
    pub fn agrees(&self, i: usize, j: usize) -> bool {
        self.agree[i * self.n + j]
    }

    /// Agreeing pairs as 1-indexed `[i, j]` with `i < j`.
    pub fn pairs(&self) -> Vec<[usize; 2]> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.agrees(i, j) {
                    out.push([i + 1, j + 1]);
                }
            }
        }
        out
    }
}

/// Disjoint clusters covering all vertices (1-indexed, sorted, ordered by smallest member).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Partition {
    clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// Normalizes arbitrary 1-indexed clusters into canonical order.
    pub fn new(mut clusters: Vec<Vec<usize>>) -> Self {
        for c in clusters.iter_mut() {
            c.sort_unstable();
        }
        clusters.retain(|c| !c.is_empty());
        clusters.sort_by_key(|c| c[0]);
        Partition { clusters }
    }

    pub fn single(n: usize) -> Self {
        Partition {
            clusters: vec![(1..=n).collect()],
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            clusters: (1..=n).map(|v| vec![v]).collect(),
        }
    }

    /// Groups 0-based vertices by root label.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (v, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(v + 1);
        }
        Partition::new(groups.into_values().collect())
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn alpha(&self) -> usize {
        self.clusters.len()
    }

    /// Applies a vertex relabeling (`perm[old] = new`, 0-based).
    pub fn relabeled(&self, perm: &[usize]) -> Partition {
        Partition::new(
            self.clusters
                .iter()
                .map(|c| c.iter().map(|&v| perm[v - 1] + 1).collect())
                .collect(),
        )
    }
}

/// Disjoint-set forest over 0-based indices.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub(crate) fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }
}

/// Connected components of the agreement relation.
pub fn extract_clusters(rel: &AgreementRelation) -> Partition {
    let n = rel.n();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rel.agrees(i, j) {
                uf.union(i, j);
            }
        }
    }
    Partition::from_labels(&uf.labels())
}

/// Full output of the zero-pattern test for one required-zero set.
#[derive(Debug, Clone)]
pub struct AgreementReport {
    pub p: Matrix,
    pub pt: Matrix,
    pub zero_tolerance: f64,
    /// 1-indexed required-zero columns.
    pub required_zero: Vec<usize>,
    pub consecutive: Vec<bool>,
    pub pair_masses: Matrix,
    pub pairs: AgreementRelation,
    pub partition: Partition,
}

/// Runs the test for a given `Z`. `zero_tolerance = None` uses the relative default.
pub fn analyze(
    s: &SpectralData,
    required_zero: &[usize],
    zero_tolerance: Option<f64>,
) -> Result<AgreementReport, AgreementError> {
    check_columns(s.n(), required_zero)?;
    let p = compute_p(s)?;
    let pt = compute_pt(&p, s);
    let tol = zero_tolerance.unwrap_or_else(|| default_zero_tolerance(&pt));
    let consecutive = consecutive_agreements(&pt, s, required_zero, tol);
    let masses = pair_masses(s, required_zero);
    let pairs = AgreementRelation::from_fn(s.n(), |i, j| masses[(i, j)] < tol);
    let partition = extract_clusters(&pairs);
    Ok(AgreementReport {
        p,
        pt,
        zero_tolerance: tol,
        required_zero: required_zero.to_vec(),
        consecutive,
        pair_masses: masses,
        pairs,
        partition,
    })
}

pub fn analyze_partition(
    s: &SpectralData,
    stability: &StabilityPartition,
    zero_tolerance: Option<f64>,
) -> Result<AgreementReport, AgreementError> {
    analyze(s, &stability.required_zero, zero_tolerance)
}

/// A distinct partition together with the range of `h` producing it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEntry {
    pub h_min: usize,
    pub h_max: usize,
    pub clusters: Partition,
}

/// Partitions for every hypothetical `h ∈ 2..=N`, merged into ranges of
/// equal partitions, in increasing `h`.
pub fn scan_h(s: &SpectralData, zero_tolerance: Option<f64>) -> Result<Vec<ScanEntry>, AgreementError> {
    let n = s.n();
    let p = compute_p(s)?;
    let pt = compute_pt(&p, s);
    let tol = zero_tolerance.unwrap_or_else(|| default_zero_tolerance(&pt));
    let mut out: Vec<ScanEntry> = Vec::new();
    for h in 2..=n {
        let z: Vec<usize> = (2..h).collect();
        let masses = pair_masses(s, &z);
        let rel = AgreementRelation::from_fn(n, |i, j| masses[(i, j)] < tol);
        let part = extract_clusters(&rel);
        match out.iter_mut().find(|e| e.clusters == part) {
            Some(e) => e.h_max = h,
            None => out.push(ScanEntry {
                h_min: h,
                h_max: h,
                clusters: part,
            }),
        }
    }
    Ok(out)
}
