//! Simulation of the stacked agent system `ẋ = (I_N ⊗ A − L ⊗ F) x` and
//! trajectory analytics.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::agreement::{Partition, UnionFind};
use crate::dynamics::AgentDynamics;
use crate::graph::Laplacian;
use crate::linalg::{norm2, Matrix};
use crate::spectral::SpectralData;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_RECORD_STRIDE: usize = 10;
pub const DEFAULT_BLOWUP_CAP: f64 = 1e12;
/// Below this merge-height ratio the quasi-cluster split is not trusted.
pub const QUASI_GAP_THRESHOLD: f64 = 2.0;
/// Default fraction of the recorded span used by [`quasi_clusters`].
pub const DEFAULT_EVAL_WINDOW: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite state encountered after t = {last_time}")]
    NonFinite { last_time: f64 },
    #[error("malformed trajectory CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("agent index {index} out of range 1..={n}")]
    AgentOutOfRange { index: usize, n: usize },
    #[error("coordinate {coord} out of range 1..={d}")]
    CoordOutOfRange { coord: usize, d: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Agent-major `N × d` matrix.
    Explicit(Matrix),
    /// Independent uniform(−1, 1) coordinates drawn from ChaCha8 seeded with `SimConfig::seed`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub init: InitialState,
    pub blowup_cap: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_end: 5.0,
            dt: DEFAULT_DT,
            record_stride: DEFAULT_RECORD_STRIDE,
            seed: 0,
            init: InitialState::Uniform,
            blowup_cap: DEFAULT_BLOWUP_CAP,
        }
    }
}

impl SimConfig {
    pub fn new(t_end: f64, dt: f64, seed: u64) -> Self {
        SimConfig {
            t_end,
            dt,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.t_end <= 0.0 || !self.t_end.is_finite() {
            return Err(SimError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.dt.is_nan() || self.dt <= 0.0 || self.dt > self.t_end * (1.0 + 1e-12) {
            return Err(SimError::Config(format!(
                "dt must satisfy 0 < dt <= t_end, got dt = {} with t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(SimError::Config("record_stride must be at least 1".into()));
        }
        if self.blowup_cap.is_nan() || self.blowup_cap <= 0.0 {
            return Err(SimError::Config("blowup_cap must be positive".into()));
        }
        Ok(())
    }

    /// Stacked initial state of length `n·d`.
    pub fn initial_state(&self, n: usize, d: usize) -> Result<Vec<f64>, SimError> {
        match &self.init {
            InitialState::Explicit(m) => {
                if m.rows() != n || m.cols() != d {
                    return Err(SimError::Dimension(format!(
                        "initial state is {}x{}, expected {n}x{d}",
                        m.rows(),
                        m.cols()
                    )));
                }
                Ok(m.as_slice().to_vec())
            }
            InitialState::Uniform => Ok(uniform_initial_state(n, d, self.seed)),
        }
    }
}

pub fn uniform_initial_state(n: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `M = I_N ⊗ A − L ⊗ F`; block `(i, j)` is `δ_ij A − L_ij F`.
pub fn build_system_matrix(l: &Laplacian, dyn_: &AgentDynamics) -> Matrix {
    let n = l.n();
    Matrix::identity(n).kron(dyn_.a()).sub(&l.matrix().kron(dyn_.f()))
}

/// Recorded agent states over time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    d: usize,
    times: Vec<f64>,
    /// Stacked states, one `n·d` vector per recorded time.
    states: Vec<Vec<f64>>,
    truncated: bool,
}

impl Trajectory {
    pub fn new(n: usize, d: usize, times: Vec<f64>, states: Vec<Vec<f64>>, truncated: bool) -> Self {
        assert_eq!(times.len(), states.len());
        assert!(states.iter().all(|s| s.len() == n * d));
        Trajectory {
            n,
            d,
            times,
            states,
            truncated,
        }
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn stacked(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    /// State of agent `i` (0-based) at record `k`.
    pub fn agent(&self, k: usize, i: usize) -> &[f64] {
        &self.states[k][i * self.d..(i + 1) * self.d]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    fn check_agent(&self, i: usize) -> Result<(), SimError> {
        if i == 0 || i > self.n {
            return Err(SimError::AgentOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    /// CSV with header `t,x_1_1,…,x_N_d` and 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            for c in 1..=self.d {
                let _ = write!(out, ",x_{i}_{c}");
            }
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&sig9(*t));
            for v in s {
                out.push(',');
                out.push_str(&sig9(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let csv_err = |line: usize, msg: String| SimError::Csv { line, msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| csv_err(1, "empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(csv_err(
                1,
                "header must start with `t` followed by state columns".into(),
            ));
        }
        let mut n = 0;
        let mut d = 0;
        for (idx, name) in cols[1..].iter().enumerate() {
            let parts: Vec<&str> = name.split('_').collect();
            let parsed = match parts.as_slice() {
                ["x", i, c] => i.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            let (i, c) = parsed.ok_or_else(|| csv_err(1, format!("bad column name `{name}`")))?;
            if idx == 0 && (i, c) != (1, 1) {
                return Err(csv_err(1, "first state column must be x_1_1".into()));
            }
            n = n.max(i);
            d = d.max(c);
        }
        if n * d != cols.len() - 1 {
            return Err(csv_err(1, "state columns do not form a complete N x d grid".into()));
        }
        for (idx, name) in cols[1..].iter().enumerate() {
            let want = format!("x_{}_{}", idx / d + 1, idx % d + 1);
            if *name != want {
                return Err(csv_err(1, format!("expected column `{want}`, found `{name}`")));
            }
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (idx, line) in lines {
            let vals = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| csv_err(idx + 1, format!("bad number `{}`", s.trim())))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if vals.len() != cols.len() {
                return Err(csv_err(
                    idx + 1,
                    format!("expected {} fields, found {}", cols.len(), vals.len()),
                ));
            }
            if let Some(&prev) = times.last() {
                if vals[0] <= prev {
                    return Err(csv_err(idx + 1, "times must be strictly increasing".into()));
                }
            }
            times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        if times.is_empty() {
            return Err(csv_err(2, "no data rows".into()));
        }
        Ok(Trajectory::new(n, d, times, states, false))
    }
}

/// Formats with 9 significant digits, dropping trailing zeros.
fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

/// Classical fixed-step RK4 on `ẋ = M x`.
///
/// Records `t = 0`, every `record_stride`-th step and the final time. The
/// last step is shortened so the run ends exactly at `t_end`. If a state
/// entry exceeds `blowup_cap` the run stops after recording that state and
/// the trajectory is marked truncated.
pub fn integrate(m: &Matrix, x0: &[f64], n: usize, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    if !m.is_square() || m.rows() != x0.len() || n == 0 || !x0.len().is_multiple_of(n) {
        return Err(SimError::Dimension(format!(
            "system matrix is {}x{}, state has length {}, agents {n}",
            m.rows(),
            m.cols(),
            x0.len()
        )));
    }
    let d = x0.len() / n;
    let len = x0.len();
    let steps = ((cfg.t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;

    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut tmp = vec![0.0; len];
    let mut t = 0.0;
    let mut truncated = false;

    for step in 1..=steps {
        let t_next = if step == steps { cfg.t_end } else { step as f64 * cfg.dt };
        let h = t_next - t;
        m.mul_vec_into(&x, &mut k1);
        for i in 0..len {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        m.mul_vec_into(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        m.mul_vec_into(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = x[i] + h * k3[i];
        }
        m.mul_vec_into(&tmp, &mut k4);
        for i in 0..len {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { last_time: t });
        }
        t = t_next;
        let blown = x.iter().any(|v| v.abs() > cfg.blowup_cap);
        if step % cfg.record_stride == 0 || step == steps || blown {
            times.push(t);
            states.push(x.clone());
        }
        if blown {
            truncated = true;
            break;
        }
    }
    Ok(Trajectory::new(n, d, times, states, truncated))
}

/// Convenience: assemble the system, draw initial states and integrate.
pub fn simulate(l: &Laplacian, dyn_: &AgentDynamics, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    let n = l.n();
    let d = dyn_.dim();
    let x0 = cfg.initial_state(n, d)?;
    integrate(&build_system_matrix(l, dyn_), &x0, n, cfg)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(m: &Matrix) -> Matrix {
    assert!(m.is_square());
    let n = m.rows();
    let norm = m.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scale(1.0 / 2f64.powi(squarings as i32));
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    // ‖scaled‖ ≤ 0.5, so 20 terms are far below double precision.
    for k in 1..=20 {
        term = term.matmul(&scaled).scale(1.0 / k as f64);
        result = result.add(&term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Mean-mode trajectory `e^{At} x̄(0)`, the motion every agent follows once
/// the graph reaches consensus.
pub fn consensus_mode(x0: &[f64], n: usize, dyn_: &AgentDynamics, t: f64) -> Vec<f64> {
    let d = dyn_.dim();
    assert_eq!(x0.len(), n * d);
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for c in 0..d {
            mean[c] += x0[i * d + c] / n as f64;
        }
    }
    expm(&dyn_.a().scale(t)).mul_vec(&mean)
}

fn agent_distance(tr: &Trajectory, k: usize, i: usize, j: usize) -> f64 {
    tr.agent(k, i)
        .iter()
        .zip(tr.agent(k, j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn state_scale(tr: &Trajectory, k: usize) -> f64 {
    1.0 + (0..tr.n).map(|i| norm2(tr.agent(k, i))).fold(0.0, f64::max)
}

/// `‖x_i − x_j‖ / (1 + max_k ‖x_k‖)` at each record; agents are 1-indexed.
pub fn normalized_distance_series(tr: &Trajectory, i: usize, j: usize) -> Result<Vec<(f64, f64)>, SimError> {
    tr.check_agent(i)?;
    tr.check_agent(j)?;
    Ok((0..tr.len())
        .map(|k| (tr.times[k], agent_distance(tr, k, i - 1, j - 1) / state_scale(tr, k)))
        .collect())
}

/// Raw signed difference `x_{i,c} − x_{j,c}`; all indices 1-based.
pub fn difference_series(tr: &Trajectory, i: usize, j: usize, coord: usize) -> Result<Vec<(f64, f64)>, SimError> {
    tr.check_agent(i)?;
    tr.check_agent(j)?;
    if coord == 0 || coord > tr.d {
        return Err(SimError::CoordOutOfRange { coord, d: tr.d });
    }
    Ok((0..tr.len())
        .map(|k| {
            (
                tr.times[k],
                tr.agent(k, i - 1)[coord - 1] - tr.agent(k, j - 1)[coord - 1],
            )
        })
        .collect())
}

/// Modal coordinates `x̃ = (Tᵀ ⊗ I_d) x` at record `k`, one `d`-vector per Laplacian mode.
pub fn modal_coordinates(tr: &Trajectory, k: usize, s: &SpectralData) -> Vec<Vec<f64>> {
    let t = s.basis();
    let (n, d) = (tr.n, tr.d);
    (0..n)
        .map(|mode| {
            let mut v = vec![0.0; d];
            for i in 0..n {
                let w = t[(i, mode)];
                for (c, out) in v.iter_mut().enumerate() {
                    *out += w * tr.agent(k, i)[c];
                }
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiClusterReport {
    pub clusters: Partition,
    pub gap_ratio: f64,
    pub evaluation_time: f64,
    /// Sorted single-linkage merge heights (geometric-mean normalized distances).
    pub merge_heights: Vec<f64>,
}

/// Clusters agents by how fast they separate.
///
/// Each pair's normalized distance is averaged on a log scale over the last
/// `eval_window` fraction of the run. Single linkage on these dissimilarities
/// gives a dendrogram, which is cut at the largest ratio between successive
/// merge heights. Ratios below [`QUASI_GAP_THRESHOLD`] yield one cluster.
pub fn quasi_clusters(tr: &Trajectory, eval_window: f64) -> Result<QuasiClusterReport, SimError> {
    if tr.len() < 10 {
        return Err(SimError::Config(format!(
            "quasi-cluster extraction needs at least 10 recorded points, got {}",
            tr.len()
        )));
    }
    if !(eval_window > 0.0 && eval_window <= 1.0) {
        return Err(SimError::Config(format!(
            "eval_window must be in (0, 1], got {eval_window}"
        )));
    }
    let n = tr.n;
    let t_end = tr.final_time();
    let t_start = t_end - eval_window * (t_end - tr.times[0]);
    let window: Vec<usize> = (0..tr.len()).filter(|&k| tr.times[k] >= t_start - 1e-12).collect();

    let mut log_dist = Matrix::zeros(n, n);
    let mut max_raw: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for &k in &window {
                let dist = agent_distance(tr, k, i, j) / state_scale(tr, k);
                max_raw = max_raw.max(dist);
                acc += dist.max(f64::MIN_POSITIVE).ln();
            }
            let v = acc / window.len() as f64;
            log_dist[(i, j)] = v;
            log_dist[(j, i)] = v;
        }
    }
    let single = |ratio: f64, heights: Vec<f64>| QuasiClusterReport {
        clusters: Partition::single(n),
        gap_ratio: ratio,
        evaluation_time: t_end,
        merge_heights: heights,
    };
    if max_raw < 1e-12 {
        return Ok(single(1.0, Vec::new()));
    }

    let merges = single_linkage(&log_dist);
    let heights: Vec<f64> = merges.iter().map(|m| m.0.exp()).collect();
    if merges.len() < 2 {
        return Ok(single(1.0, heights));
    }
    let (cut, log_gap) =
        merges
            .windows(2)
            .enumerate()
            .map(|(k, w)| (k, w[1].0 - w[0].0))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    let gap_ratio = log_gap.exp();
    if gap_ratio < QUASI_GAP_THRESHOLD {
        return Ok(single(gap_ratio, heights));
    }
    let mut uf = UnionFind::new(n);
    for &(_, a, b) in &merges[..=cut] {
        uf.union(a, b);
    }
    Ok(QuasiClusterReport {
        clusters: Partition::from_labels(&uf.labels()),
        gap_ratio,
        evaluation_time: t_end,
        merge_heights: heights,
    })
}

/// Single-linkage merges `(height, a, b)` in ascending height, computed as
/// a minimum spanning tree (Prim).
fn single_linkage(dist: &Matrix) -> Vec<(f64, usize, usize)> {
    let n = dist.rows();
    let mut in_tree = vec![false; n];
    let mut best: Vec<(f64, usize)> = (0..n).map(|j| (dist[(0, j)], 0)).collect();
    in_tree[0] = true;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("vertices remain");
        in_tree[next] = true;
        edges.push((best[next].0, best[next].1, next));
        for j in 0..n {
            if !in_tree[j] && dist[(next, j)] < best[j].0 {
                best[j] = (dist[(next, j)], next);
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}
