//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the per-criterion report is
//! always printed by `cargo test`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use consensus_cluster::agreement::{self, Partition};
use consensus_cluster::dynamics::{self, AgentDynamics};
use consensus_cluster::fixtures;
use consensus_cluster::graph::{self, WeightedGraph};
use consensus_cluster::linalg::Matrix;
use consensus_cluster::sim::{self, InitialState, SimConfig, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

/// Seeds standing in for "any seed" in the simulation criteria.
const SIM_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn two_clusters() -> Partition {
    Partition::new(vec![vec![1, 2, 3], vec![4, 5, 6]])
}

fn last_normalized(tr: &Trajectory, i: usize, j: usize) -> f64 {
    sim::normalized_distance_series(tr, i, j).unwrap().last().unwrap().1
}

fn criterion_1() -> Outcome {
    let s = common::spectrum(&fixtures::example1_graph());
    let want = [0.0, 0.2, 1.095, 3.0, 3.105, 3.2];
    let err = max_abs_diff(s.eigenvalues(), &want);
    ensure!(err < 1e-3, "eigenvalues {:?}, max error {err:.2e}", s.eigenvalues());
    Ok(format!("max |λ − printed| = {err:.2e} < 1e-3"))
}

fn criterion_2() -> Outcome {
    let s = common::spectrum(&fixtures::example1_graph());
    let p = dynamics::stability_partition(&fixtures::example1_dynamics(), &s);
    ensure!(p.flags == [false, false, true, true, true, true], "flags {:?}", p.flags);
    ensure!(p.h == Some(3), "h = {:?}", p.h);
    Ok("flags (F,F,T,T,T,T), h = 3".into())
}

fn criterion_3() -> Outcome {
    let s = common::spectrum(&fixtures::example1_graph());
    let r = agreement::analyze(&s, &[2], None).map_err(|e| e.to_string())?;
    for row in [0, 1, 3, 4] {
        let m = r.pt[(row, 1)].abs();
        ensure!(
            m < r.zero_tolerance,
            "row {} mass {m:e} ≥ tol {:e}",
            row + 1,
            r.zero_tolerance
        );
    }
    for row in [2, 5] {
        let m = r.pt[(row, 1)].abs();
        ensure!(m >= 1.0, "row {} |entry| {m} < 1", row + 1);
    }
    ensure!(r.partition == two_clusters(), "partition {:?}", r.partition);
    Ok(format!(
        "rows 1,2,4,5 below tol {:.1e}; |PT[3,2]| = {:.4}; partition {{1,2,3}},{{4,5,6}}",
        r.zero_tolerance,
        r.pt[(2, 1)].abs()
    ))
}

fn criterion_4() -> Outcome {
    let printed_p = Matrix::from_rows(&[
        [0.3235, -0.3235, 0.0, 0.0, 0.0294, -0.0294],
        [-0.0003, 0.3232, -0.3229, -0.0104, -0.0095, 0.0199],
        [1.5625, 1.5625, 1.8750, -1.8750, -1.5625, -1.5625],
        [-0.0199, 0.0095, 0.0104, 0.3229, -0.6173, 0.2944],
        [0.0294, -0.0294, 0.0, 0.0, 0.9118, -0.9118],
        [-1.8952, -1.5423, -1.5625, 1.5625, 1.2482, 2.1893],
    ]);
    let printed_pt = Matrix::from_rows(&[
        [0.0, 0.0, 0.0643, 0.0, -0.4549, 0.0],
        [0.0, 0.0, -0.0322, -0.2887, 0.2274, 0.2706],
        [0.0, -4.0825, 0.0, 0.0, 0.0, -0.3608],
        [0.0, 0.0, -0.6450, 0.2887, -0.0113, 0.2706],
        [0.0, 0.0, 1.2899, 0.0, 0.0227, 0.0],
        [0.0, 4.0825, -0.6771, 0.0, 0.2161, -0.1804],
    ]);
    let s = common::spectrum(&fixtures::example1_graph());
    let p = agreement::compute_p(&s).map_err(|e| e.to_string())?;
    let perr = p.max_abs_diff(&printed_p);
    ensure!(perr < 1e-3, "max |P − printed| = {perr:e}");
    let pt = agreement::compute_pt(&p, &s);
    let mut worst: f64 = 0.0;
    // all eigenvalues of the first example are simple
    for block in s.eigenvalue_blocks().iter().filter(|b| b.len() == 1) {
        let k = block[0];
        let got = pt.column(k);
        let want = printed_pt.column(k);
        let same = max_abs_diff(&got, &want);
        let flipped = got.iter().zip(&want).map(|(g, w)| (g + w).abs()).fold(0.0, f64::max);
        worst = worst.max(same.min(flipped));
    }
    ensure!(worst < 1e-2, "PT column mismatch {worst:e}");
    Ok(format!(
        "max |P − printed| = {perr:.1e}; max PT column error (up to sign) = {worst:.1e}"
    ))
}

fn criterion_5() -> Outcome {
    let s = common::spectrum(&fixtures::example2_graph());
    let err = max_abs_diff(s.eigenvalues(), &[0.0, 0.0638, 1.0, 3.0, 3.0, 3.1362]);
    ensure!(err < 1e-3, "eigenvalues {:?}", s.eigenvalues());
    let part = dynamics::stability_partition(&fixtures::example2_dynamics(), &s);
    ensure!(part.h == Some(3), "h = {:?}", part.h);
    let r = agreement::analyze_partition(&s, &part, None).map_err(|e| e.to_string())?;
    ensure!(r.pairs.pairs() == vec![[1, 2], [5, 6]], "pairs {:?}", r.pairs.pairs());
    let want = Partition::new(vec![vec![1, 2], vec![3], vec![4], vec![5, 6]]);
    ensure!(r.partition == want, "partition {:?}", r.partition);
    Ok(format!(
        "spectrum error {err:.1e}; h = 3; pairs {{(1,2),(5,6)}}; partition {{1,2}},{{3}},{{4}},{{5,6}}"
    ))
}

fn simulate_example(g: &WeightedGraph, d: &AgentDynamics, t_end: f64, seed: u64) -> Trajectory {
    sim::simulate(&graph::laplacian(g), d, &SimConfig::new(t_end, 1e-3, seed)).unwrap()
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for seed in SIM_SEEDS {
        let tr = simulate_example(&fixtures::example1_graph(), &fixtures::example1_dynamics(), 5.0, seed);
        let mut within: f64 = 0.0;
        for c in [[1, 2, 3], [4, 5, 6]] {
            for a in 0..3 {
                for b in (a + 1)..3 {
                    within = within.max(last_normalized(&tr, c[a], c[b]));
                }
            }
        }
        let mut cross = f64::INFINITY;
        for i in 1..=3 {
            for j in 4..=6 {
                cross = cross.min(last_normalized(&tr, i, j));
            }
        }
        let q = sim::quasi_clusters(&tr, sim::DEFAULT_EVAL_WINDOW).unwrap();
        let ok = within < 0.1 * cross && q.clusters == two_clusters() && q.gap_ratio >= 2.0;
        let line = format!(
            "seed {seed}: within/cross = {:.3}, quasi {:?} gap {:.2}",
            within / cross,
            q.clusters.clusters(),
            q.gap_ratio
        );
        if !ok {
            failures.push(line.clone());
        }
        notes.push(line);
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok(notes.join("; "))
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for seed in SIM_SEEDS {
        let tr = simulate_example(&fixtures::example2_graph(), &fixtures::example2_dynamics(), 3.0, seed);
        let q = sim::quasi_clusters(&tr, sim::DEFAULT_EVAL_WINDOW).unwrap();
        let d12 = last_normalized(&tr, 1, 2);
        let d23 = last_normalized(&tr, 2, 3);
        let ok = q.clusters == two_clusters() && d12 < 0.2 * d23;
        let line = format!(
            "seed {seed}: quasi {:?}, d12/d23 = {:.3}",
            q.clusters.clusters(),
            d12 / d23
        );
        if !ok {
            failures.push(line.clone());
        }
        notes.push(line);
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok(notes.join("; "))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_pair: f64 = 0.0;
    let mut worst_track: f64 = 0.0;
    for trial in 0..20 {
        let n = rng.gen_range(3..=12);
        let g = common::random_connected_graph(&mut rng, n, 0.3);
        let s = common::spectrum(&g);
        let (l2, ln) = (s.eigenvalues()[1], s.eigenvalues()[n - 1]);
        // A unstable (growth 0.1), F = I/λ₂: every nonzero mode decays relative to
        // the consensus mode at rate ≥ 1.
        let d = AgentDynamics::new(
            Matrix::from_rows(&[[0.1, 1.0], [-1.0, 0.1]]),
            Matrix::identity(2).scale(1.0 / l2),
        )
        .unwrap();
        let verdict = dynamics::check_consensus_condition(&d, &s, true);
        ensure!(verdict.holds, "trial {trial}: consensus condition fails");
        let rate = 1.0;
        let horizon = 14.0 / rate;
        let dt = (0.5 * l2 / ln).min(1e-2);
        let cfg = SimConfig {
            record_stride: 100,
            ..SimConfig::new(horizon, dt, 100 + trial)
        };
        let tr = sim::simulate(&graph::laplacian(&g), &d, &cfg).unwrap();
        let k = tr.len() - 1;
        for i in 1..=n {
            for j in (i + 1)..=n {
                worst_pair = worst_pair.max(last_normalized(&tr, i, j));
            }
        }
        let x0 = tr.stacked(0).to_vec();
        let mode = sim::consensus_mode(&x0, n, &d, tr.final_time());
        let scale = 1.0 + mode.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..n {
            let dev = tr
                .agent(k, i)
                .iter()
                .zip(&mode)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst_track = worst_track.max(dev / scale);
        }
    }
    ensure!(worst_pair < 1e-3, "worst pairwise normalized distance {worst_pair:e}");
    ensure!(
        worst_track < 1e-3,
        "worst consensus-mode tracking error {worst_track:e}"
    );
    Ok(format!(
        "20 graphs: max pair distance {worst_pair:.1e}, max tracking error {worst_track:.1e}"
    ))
}

fn criterion_9() -> Outcome {
    let g = fixtures::two_triangles();
    let d = fixtures::example1_dynamics();
    let mut min_cross = (f64::INFINITY, 0, 0.0);
    let mut min_final = f64::INFINITY;
    for seed in 0..10 {
        let tr = simulate_example(&g, &d, 5.0, seed);
        for i in 1..=3 {
            for j in 4..=6 {
                let series = sim::normalized_distance_series(&tr, i, j).unwrap();
                for &(t, v) in &series {
                    if v < min_cross.0 {
                        min_cross = (v, seed, t);
                    }
                }
                min_final = min_final.min(series.last().unwrap().1);
            }
        }
    }
    let detail = format!(
        "min cross-component normalized distance over [0,5] = {:.4} (seed {}, t = {:.2}); min at t = 5 is {min_final:.3}",
        min_cross.0, min_cross.1, min_cross.2
    );
    ensure!(min_cross.0 > 0.1, "{detail}");
    Ok(detail)
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut nontrivial = 0;
    for trial in 0..100 {
        let g = if trial % 2 == 0 {
            let n = rng.gen_range(3..=30);
            let p = rng.gen_range(0.05..0.5);
            common::random_connected_graph(&mut rng, n, p)
        } else {
            let m = rng.gen_range(2..=6);
            common::planted_two_block(&mut rng, m, 0.02)
        };
        let n = g.n();
        let s = common::spectrum(&g);
        let l = s.laplacian().matrix();
        let lp = s.pseudoinverse();
        let scale = l.max_abs().max(1.0);
        let pscale = lp.max_abs().max(1.0);

        let ll = l.matmul(lp);
        let lpl = lp.matmul(l);
        ensure!(ll.matmul(l).max_abs_diff(l) < 1e-8 * scale, "trial {trial}: LL†L ≠ L");
        ensure!(
            lpl.matmul(lp).max_abs_diff(lp) < 1e-8 * pscale,
            "trial {trial}: L†LL† ≠ L†"
        );
        ensure!(
            ll.max_abs_diff(&ll.transpose()) < 1e-8,
            "trial {trial}: LL† not symmetric"
        );
        ensure!(
            lpl.max_abs_diff(&lpl.transpose()) < 1e-8,
            "trial {trial}: L†L not symmetric"
        );

        let p = agreement::compute_p(&s).map_err(|e| e.to_string())?;
        let resid = p.matmul(l).sub(&agreement::gamma(n)).norm_inf();
        ensure!(resid < 1e-8 * scale, "trial {trial}: ‖PL − Γ‖∞ = {resid:e}");

        let t = s.basis();
        let ortho = t.transpose().matmul(t).max_abs_diff(&Matrix::identity(n));
        ensure!(ortho < 1e-10, "trial {trial}: ‖TᵀT − I‖ = {ortho:e}");

        let pt = agreement::compute_pt(&p, &s);
        let col1 = pt.column(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure!(col1 < 1e-10, "trial {trial}: PT column 1 = {col1:e}");

        let h = if trial % 2 == 0 { rng.gen_range(2..=n) } else { 3 };
        let z: Vec<usize> = (2..h).collect();
        let tol = agreement::default_zero_tolerance(&pt);
        let consecutive = agreement::consecutive_agreements(&pt, &s, &z, tol);
        for i in 1..=n {
            let j = i % n + 1;
            let pair = agreement::pair_agreement(i, j, &s, &z, tol).map_err(|e| e.to_string())?;
            ensure!(
                pair == consecutive[i - 1],
                "trial {trial}: consecutive/pair mismatch at {i}"
            );
        }

        let base = agreement::analyze(&s, &z, None).map_err(|e| e.to_string())?;
        if base.partition.alpha() > 1 && base.partition.alpha() < n {
            nontrivial += 1;
        }
        let perm = common::random_permutation(&mut rng, n);
        let sp = common::spectrum(&g.permuted(&perm));
        let relabeled = agreement::analyze(&sp, &z, None).map_err(|e| e.to_string())?;
        ensure!(
            relabeled.partition == base.partition.relabeled(&perm),
            "trial {trial}: partition not relabeling invariant"
        );
    }
    ensure!(nontrivial >= 25, "only {nontrivial} graphs had non-trivial partitions");
    Ok(format!(
        "100 graphs, N in [3, 30]; {nontrivial} with non-trivial partitions"
    ))
}

fn criterion_11() -> Outcome {
    let a = Matrix::from_rows(&[[0.25, 1.0], [-1.0, 0.25]]);
    let t_end: f64 = 5.0;
    let exact = {
        let e = (0.25 * t_end).exp();
        [e * t_end.cos(), -e * t_end.sin()]
    };
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| {
            let cfg = SimConfig {
                init: InitialState::Explicit(Matrix::from_rows(&[[1.0, 0.0]])),
                ..SimConfig::new(t_end, dt, 0)
            };
            let tr = sim::integrate(&a, &[1.0, 0.0], 1, &cfg).unwrap();
            max_abs_diff(tr.stacked(tr.len() - 1), &exact)
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!(min_order >= 3.8, "observed orders {orders:?} (errors {errs:?})");
    Ok(format!(
        "errors {:?}, observed orders {:?}",
        errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
        orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "Example 1 spectrum", criterion_1),
        (2, "Example 1 stability split", criterion_2),
        (3, "Example 1 zero-pattern clustering", criterion_3),
        (4, "Example 1 P and PT reproduction", criterion_4),
        (5, "Example 2 spectrum, h and agreements", criterion_5),
        (6, "Example 1 simulation concordance", criterion_6),
        (7, "Example 2 quasi-consensus", criterion_7),
        (8, "consensus and mean-mode tracking", criterion_8),
        (9, "disconnected components never agree", criterion_9),
        (10, "oracle invariant suite", criterion_10),
        (11, "RK4 convergence order", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(format!(
                "panicked: {:?}",
                e.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(e.downcast_ref::<&str>().copied())
            ))
        });
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
