//! Agent dynamics `(A, F)`, Hurwitz tests and the stability split of the
//! Laplacian modes.
//!
//! Each Laplacian eigenvalue `λ_k` gives one decoupled mode with matrix
//! `A − λ_k F`. Modes whose matrix is Hurwitz die out; the remaining nonzero
//! modes carry the differences that separate clusters.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::spectral::SpectralData;

/// Largest agent dimension accepted; the characteristic polynomial recurrence
/// loses accuracy quickly beyond this.
pub const MAX_DIM: usize = 12;

/// First-column Routh entries below this magnitude count as marginal.
pub const ROUTH_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("A and F must be square with the same dimension (A is {a_rows}x{a_cols}, F is {f_rows}x{f_cols})")]
    Shape {
        a_rows: usize,
        a_cols: usize,
        f_rows: usize,
        f_cols: usize,
    },
    #[error("agent dimension must be between 1 and {MAX_DIM}, got {0}")]
    Dimension(usize),
    #[error("dynamics matrices contain non-finite values")]
    NonFinite,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is not connected ({components} components); designing gains needs a single zero eigenvalue")]
    Disconnected { components: usize },
    #[error("target h = {h} out of range 3..={n}")]
    TargetOutOfRange { h: usize, n: usize },
    #[error("degenerate gap: λ_{lo} = {lam_lo} and λ_{hi} = {lam_hi} coincide", lo = .h - 1, hi = .h)]
    DegenerateGap { h: usize, lam_lo: f64, lam_hi: f64 },
    #[error("designed gains realize h = {realized:?} instead of {target} (flags {flags:?})")]
    PartitionMismatch {
        target: usize,
        realized: Option<usize>,
        flags: Vec<bool>,
    },
}

/// Homogeneous agent model `ẋ_i = A x_i + F Σ_j w_ij (x_j − x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDynamics {
    a: Matrix,
    f: Matrix,
}

impl AgentDynamics {
    pub fn new(a: Matrix, f: Matrix) -> Result<Self, DynamicsError> {
        if !a.is_square() || !f.is_square() || a.rows() != f.rows() {
            return Err(DynamicsError::Shape {
                a_rows: a.rows(),
                a_cols: a.cols(),
                f_rows: f.rows(),
                f_cols: f.cols(),
            });
        }
        let d = a.rows();
        if d == 0 || d > MAX_DIM {
            return Err(DynamicsError::Dimension(d));
        }
        if !a.is_finite() || !f.is_finite() {
            return Err(DynamicsError::NonFinite);
        }
        Ok(AgentDynamics { a, f })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    /// `A − λF`.
    pub fn mode_matrix(&self, lambda: f64) -> Matrix {
        self.a.sub(&self.f.scale(lambda))
    }

    /// Parses the dynamics file: `d <d>`, then `d` rows of `A`, then `d` rows of `F`.
    pub fn parse(text: &str) -> Result<Self, DynamicsError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: String| DynamicsError::Parse { line, msg };

        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty dynamics file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 || fields[0] != "d" {
            return Err(perr(hline, format!("expected `d <dim>`, found `{header}`")));
        }
        let d: usize = fields[1]
            .parse()
            .map_err(|_| perr(hline, format!("bad dimension `{}`", fields[1])))?;
        if d == 0 || d > MAX_DIM {
            return Err(DynamicsError::Dimension(d));
        }
        let mut read_block = |name: &str| -> Result<Matrix, DynamicsError> {
            let mut rows = Vec::with_capacity(d);
            for r in 0..d {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| perr(0, format!("missing row {} of {name}", r + 1)))?;
                let row = l
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| perr(ln, format!("bad number `{s}`"))))
                    .collect::<Result<Vec<f64>, _>>()?;
                if row.len() != d {
                    return Err(perr(
                        ln,
                        format!("row of {name} has {} entries, expected {d}", row.len()),
                    ));
                }
                rows.push(row);
            }
            Ok(Matrix::from_rows(&rows))
        };
        let a = read_block("A")?;
        let f = read_block("F")?;
        if let Some((ln, l)) = lines.next() {
            return Err(perr(ln, format!("unexpected trailing content `{l}`")));
        }
        AgentDynamics::new(a, f)
    }

    /// Renders the dynamics file format (shortest round-trip float text).
    pub fn render(&self) -> String {
        let mut out = format!("d {}\n", self.dim());
        for m in [&self.a, &self.f] {
            for i in 0..m.rows() {
                let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Monic coefficients of `det(sI − M)`, highest degree first
/// (Faddeev–LeVerrier recurrence).
pub fn characteristic_polynomial(m: &Matrix) -> Vec<f64> {
    assert!(m.is_square());
    let n = m.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let identity = Matrix::identity(n);
    // aux_k = M·aux_{k−1} + c_{k−1}·I, with aux_0 = 0
    let mut aux = Matrix::zeros(n, n);
    for k in 1..=n {
        aux = m.matmul(&aux).add(&identity.scale(coeffs[k - 1]));
        coeffs[k] = -m.matmul(&aux).trace() / k as f64;
    }
    coeffs
}

/// First column of the Routh array for a polynomial given highest degree first.
/// Stops early (returning the partial column) once a marginal pivot appears.
pub fn routh_first_column(coeffs: &[f64]) -> Vec<f64> {
    let degree = coeffs.len().saturating_sub(1);
    let width = degree / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|j| *coeffs.get(2 * j).unwrap_or(&0.0)).collect();
    let mut cur: Vec<f64> = (0..width).map(|j| *coeffs.get(2 * j + 1).unwrap_or(&0.0)).collect();
    let mut column = vec![prev[0]];
    if degree == 0 {
        return column;
    }
    column.push(cur[0]);
    for _ in 2..=degree {
        let pivot = cur[0];
        if pivot.abs() < ROUTH_MARGIN {
            break;
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = *prev.get(j + 1).unwrap_or(&0.0);
                let b = *cur.get(j + 1).unwrap_or(&0.0);
                (pivot * a - prev[0] * b) / pivot
            })
            .collect();
        column.push(next[0]);
        prev = cur;
        cur = next;
    }
    column
}

/// True iff every eigenvalue of `m` has strictly negative real part, decided
/// by the Routh–Hurwitz criterion. Marginal cases are reported as not Hurwitz.
pub fn is_hurwitz(m: &Matrix) -> bool {
    let coeffs = characteristic_polynomial(m);
    let column = routh_first_column(&coeffs);
    column.len() == coeffs.len() && column.iter().all(|&c| c >= ROUTH_MARGIN)
}

/// Hurwitz flags of the modes `A − λ_k F` in ascending eigenvalue order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPartition {
    pub flags: Vec<bool>,
    /// 1-indexed first Hurwitz mode, present only when every non-Hurwitz mode
    /// precedes every Hurwitz mode.
    pub h: Option<usize>,
    /// 1-indexed columns `k ≥ 2` whose mode is not Hurwitz.
    pub required_zero: Vec<usize>,
    pub warnings: Vec<String>,
}

impl StabilityPartition {
    /// Builds the partition from per-mode flags (index 0 is the `λ = 0` mode).
    pub fn from_flags(flags: Vec<bool>) -> Self {
        let required_zero: Vec<usize> = flags
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &f)| !f)
            .map(|(k, _)| k + 1)
            .collect();
        let mut warnings = Vec::new();
        let first_hurwitz = flags.iter().position(|&f| f);
        let h = match first_hurwitz {
            None => {
                warnings.push("no Hurwitz modes".to_string());
                None
            }
            Some(p) if flags[p..].iter().all(|&f| f) => Some(p + 1),
            Some(_) => {
                warnings.push(
                    "non-monotone stability split; using every non-Hurwitz nonzero mode as a required-zero column"
                        .to_string(),
                );
                None
            }
        };
        StabilityPartition {
            flags,
            h,
            required_zero,
            warnings,
        }
    }

    /// Required-zero columns for a hypothetical `h`: `{2, …, h−1}`.
    pub fn for_h(n: usize, h: usize) -> Self {
        let flags = (0..n).map(|k| k + 1 >= h).collect();
        StabilityPartition::from_flags(flags)
    }
}

pub fn stability_partition(dyn_: &AgentDynamics, s: &SpectralData) -> StabilityPartition {
    let flags = s
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &lam)| {
            // λ₁ is zero by construction; use A itself rather than a rounding residue.
            let lam = if k == 0 { 0.0 } else { lam };
            is_hurwitz(&dyn_.mode_matrix(lam))
        })
        .collect();
    StabilityPartition::from_flags(flags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignCheck {
    pub principle: u8,
    pub status: CheckStatus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub checks: Vec<DesignCheck>,
}

impl DesignReport {
    pub fn warnings(&self) -> impl Iterator<Item = &DesignCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warn)
    }

    pub fn all_pass(&self) -> bool {
        self.warnings().next().is_none()
    }
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Warn => "warn",
            };
            writeln!(f, "[{tag}] principle {}: {}", c.principle, c.message)?;
        }
        Ok(())
    }
}

/// Checks a design against the clustering principles: homogeneous agents,
/// an unstable `A`, a mix of stable and unstable nonzero modes, and a
/// monotone split.
pub fn validate_design(dyn_: &AgentDynamics, s: &SpectralData) -> DesignReport {
    let part = stability_partition(dyn_, s);
    let mut checks = vec![DesignCheck {
        principle: 1,
        status: CheckStatus::Pass,
        message: "homogeneous agents: a single (A, F) pair is shared by all agents".into(),
    }];

    checks.push(if part.flags[0] {
        DesignCheck {
            principle: 2,
            status: CheckStatus::Warn,
            message:
                "A is Hurwitz; A is better unstable so clusters drift apart instead of all collapsing to the origin"
                    .into(),
        }
    } else {
        DesignCheck {
            principle: 2,
            status: CheckStatus::Pass,
            message: "A is not Hurwitz".into(),
        }
    });

    let any_stable_nonzero = part.flags.iter().skip(1).any(|&f| f);
    checks.push(match (part.required_zero.is_empty(), any_stable_nonzero) {
        (false, true) => DesignCheck {
            principle: 3,
            status: CheckStatus::Pass,
            message: format!(
                "mixed stability: {} unstable and {} Hurwitz nonzero modes",
                part.required_zero.len(),
                part.flags.iter().skip(1).filter(|&&f| f).count()
            ),
        },
        (true, _) => DesignCheck {
            principle: 3,
            status: CheckStatus::Warn,
            message: "every nonzero mode is Hurwitz (h = 2): the whole graph reaches consensus as one cluster".into(),
        },
        (false, false) => DesignCheck {
            principle: 3,
            status: CheckStatus::Warn,
            message: "no nonzero mode is Hurwitz: no pair of agents reaches agreement".into(),
        },
    });

    checks.push(match part.h {
        Some(h) => DesignCheck {
            principle: 4,
            status: CheckStatus::Pass,
            message: format!("monotone stability split with h = {h}"),
        },
        None => DesignCheck {
            principle: 4,
            status: CheckStatus::Warn,
            message: "stability split is not monotone in λ; h is undefined".into(),
        },
    });

    DesignReport { checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConsensusVerdict {
    pub holds: bool,
    /// Set when `A` is Hurwitz: the criterion assumes an unstable `A`, and
    /// with a Hurwitz `A` every agent decays to the origin regardless.
    pub a_is_hurwitz: bool,
}

/// Consensus test for undirected graphs: connected and every nonzero mode Hurwitz.
pub fn check_consensus_condition(dyn_: &AgentDynamics, s: &SpectralData, connected: bool) -> ConsensusVerdict {
    let part = stability_partition(dyn_, s);
    ConsensusVerdict {
        holds: connected && part.flags.iter().skip(1).all(|&f| f),
        a_is_hurwitz: part.flags[0],
    }
}

/// Second-order gains realizing a given `h` on a connected graph.
///
/// `A = [[λ*/2, ω], [−ω, λ*/2]]`, `F = [[0, −1], [0.5, 1]]` with
/// `λ* = √(λ_{h−1} λ_h)` and `ω = max(omega, λ*)`. Since
/// `trace(A − λF) = λ* − λ` and the determinant stays positive, exactly the
/// modes with `λ > λ*` are Hurwitz.
pub fn design_second_order(s: &SpectralData, target_h: usize, omega: f64) -> Result<AgentDynamics, DynamicsError> {
    let n = s.n();
    let components = s.zero_eigenvalue_count();
    if components != 1 {
        return Err(DynamicsError::Disconnected { components });
    }
    if target_h < 3 || target_h > n {
        return Err(DynamicsError::TargetOutOfRange { h: target_h, n });
    }
    let lam = s.eigenvalues();
    let (lo, hi) = (lam[target_h - 2], lam[target_h - 1]);
    if hi - lo <= s.zero_tol() {
        return Err(DynamicsError::DegenerateGap {
            h: target_h,
            lam_lo: lo,
            lam_hi: hi,
        });
    }
    let star = (lo * hi).sqrt();
    let w = omega.max(star);
    let a = Matrix::from_rows(&[[star / 2.0, w], [-w, star / 2.0]]);
    let f = Matrix::from_rows(&[[0.0, -1.0], [0.5, 1.0]]);
    let dyn_ = AgentDynamics::new(a, f)?;
    let part = stability_partition(&dyn_, s);
    if part.h != Some(target_h) {
        return Err(DynamicsError::PartitionMismatch {
            target: target_h,
            realized: part.h,
            flags: part.flags,
        });
    }
    Ok(dyn_)
}
