//! Orthonormal eigendecomposition of the Laplacian and its pseudoinverse.
//!
//! Eigenpairs come from a cyclic Jacobi sweep, which always returns an
//! orthonormal basis. Outputs are put in a fixed gauge so that repeated runs
//! and different machines agree:
//!
//! * eigenvalues ascending;
//! * the first column is exactly `1/√N · 1` (the consensus direction);
//! * every other column is flipped so its largest-magnitude entry is
//!   positive (ties go to the earliest index).
//!
//! Inside a repeated eigenvalue the basis is still arbitrary; consumers must
//! only use quantities that are invariant under rotations within such blocks.

use thiserror::Error;

use crate::graph::Laplacian;
use crate::linalg::{dot, norm2, Matrix};

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to the
/// Frobenius norm of the input.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e}, input norm {scale:e})")]
    NoConvergence { sweeps: usize, off_norm: f64, scale: f64 },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("graph declared connected but the Laplacian has {count} near-zero eigenvalues; a connected graph has exactly one")]
    NotConnected { count: usize },
}

/// Eigendecomposition of a symmetric matrix as `(eigenvalues, vectors)` with
/// eigenvectors in the columns, in no particular order.
pub fn jacobi_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), SpectralError> {
    let n = a.rows();
    assert!(a.is_square());
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.norm_frobenius();
    let threshold = OFF_DIAGONAL_TOL * scale.max(f64::MIN_POSITIVE);

    let off_norm = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= threshold || n < 2 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(SpectralError::NoConvergence {
                sweeps,
                off_norm: off,
                scale,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Rotation angle chosen to zero m[p][q]; stable tangent formula.
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[(i, i)]).collect();
    Ok((values, v))
}

/// Spectral data of a graph Laplacian in the canonical gauge.
#[derive(Debug, Clone)]
pub struct SpectralData {
    laplacian: Laplacian,
    eigenvalues: Vec<f64>,
    basis: Matrix,
    pseudoinverse: Matrix,
    zero_tol: f64,
}

impl SpectralData {
    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector matrix `T`; column `k` belongs to eigenvalue `k`.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pseudoinverse(&self) -> &Matrix {
        &self.pseudoinverse
    }

    /// `1e-9 · max(1, λ_N)`.
    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn zero_eigenvalue_count(&self) -> usize {
        zero_eigenvalue_count(self)
    }

    pub fn is_connected(&self) -> bool {
        self.zero_eigenvalue_count() == 1
    }

    /// Errors unless exactly one eigenvalue is (numerically) zero.
    pub fn require_connected(&self) -> Result<(), SpectralError> {
        match self.zero_eigenvalue_count() {
            1 => Ok(()),
            count => Err(SpectralError::NotConnected { count }),
        }
    }

    /// Groups of 0-based column indices whose eigenvalues coincide to within
    /// `1e-8 · max(1, λ_N)`. Groups are contiguous since eigenvalues are sorted.
    pub fn eigenvalue_blocks(&self) -> Vec<Vec<usize>> {
        let tol = 1e-8 * self.eigenvalues.last().copied().unwrap_or(0.0).max(1.0);
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            match blocks.last_mut() {
                Some(b) if lam - self.eigenvalues[*b.last().unwrap()] <= tol => b.push(k),
                _ => blocks.push(vec![k]),
            }
        }
        blocks
    }
}

/// Eigendecomposes a Laplacian and puts the result in the canonical gauge.
pub fn eigendecompose(l: &Laplacian) -> Result<SpectralData, SpectralError> {
    let m = l.matrix();
    let n = m.rows();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(SpectralError::NotSymmetric { i: i + 1, j: j + 1 });
            }
        }
    }

    let (raw_values, raw_vectors) = jacobi_eigen(m)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| raw_values[k]).collect();
    let mut columns: Vec<Vec<f64>> = order.iter().map(|&k| raw_vectors.column(k)).collect();

    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
    let zero_tol = 1e-9 * lambda_max.max(1.0);
    let zero_count = eigenvalues.iter().take_while(|&&v| v < zero_tol).count();

    if zero_count >= 1 {
        fix_consensus_column(&mut columns[..zero_count], n);
    }
    for col in columns.iter_mut().skip(1) {
        normalize_sign(col);
    }
    // A zero-count of 0 cannot happen for a Laplacian, but the gauge on
    // column 1 only makes sense when it is the consensus mode.
    if zero_count == 0 {
        normalize_sign(&mut columns[0]);
    }

    let mut basis = Matrix::zeros(n, n);
    for (k, col) in columns.iter().enumerate() {
        basis.set_column(k, col);
    }
    let pseudoinverse = spectral_pseudoinverse(&eigenvalues, &basis, zero_tol);
    Ok(SpectralData {
        laplacian: l.clone(),
        eigenvalues,
        basis,
        pseudoinverse,
        zero_tol,
    })
}

/// Replaces the first null-space column by the exact constant vector and
/// re-orthonormalizes the rest of the null block against it.
fn fix_consensus_column(block: &mut [Vec<f64>], n: usize) {
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let mut kept: Vec<Vec<f64>> = vec![ones];
    let mut candidates: Vec<Vec<f64>> = block.to_vec();
    // Greedy Gram–Schmidt: the candidate with the largest residual after
    // projection is the best-conditioned one to keep next.
    while kept.len() < block.len() {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (idx, c) in candidates.iter().enumerate() {
            let mut r = c.clone();
            for _ in 0..2 {
                for k in &kept {
                    let proj = dot(&r, k);
                    for (ri, ki) in r.iter_mut().zip(k) {
                        *ri -= proj * ki;
                    }
                }
            }
            let nrm = norm2(&r);
            if best.as_ref().is_none_or(|b| nrm > b.2) {
                best = Some((idx, r, nrm));
            }
        }
        let (idx, mut r, nrm) = best.expect("candidates remain");
        candidates.remove(idx);
        for v in r.iter_mut() {
            *v /= nrm;
        }
        kept.push(r);
    }
    for (dst, src) in block.iter_mut().zip(kept) {
        *dst = src;
    }
}

fn normalize_sign(col: &mut [f64]) {
    let mut best = 0;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        for v in col.iter_mut() {
            *v = -*v;
        }
    }
}

fn spectral_pseudoinverse(eigenvalues: &[f64], basis: &Matrix, zero_tol: f64) -> Matrix {
    let inv: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| if l < zero_tol { 0.0 } else { 1.0 / l })
        .collect();
    let n = eigenvalues.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| basis[(i, k)] * inv[k] * basis[(j, k)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

/// Moore–Penrose pseudoinverse `L† = T · diag(0, 1/λ₂, …) · Tᵀ`.
///
/// With `expect_connected`, more than one near-zero eigenvalue is an error:
/// a connected graph's Laplacian has a simple zero eigenvalue.
pub fn pseudoinverse(s: &SpectralData, expect_connected: bool) -> Result<Matrix, SpectralError> {
    if expect_connected {
        s.require_connected()?;
    }
    Ok(s.pseudoinverse.clone())
}

/// Number of eigenvalues below `zero_tol`; equals the number of connected components.
pub fn zero_eigenvalue_count(s: &SpectralData) -> usize {
    s.eigenvalues.iter().filter(|&&v| v < s.zero_tol).count()
}
