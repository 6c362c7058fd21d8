//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails. Numeric arguments select criteria, e.g.
//! `cargo test -p gne-core --test acceptance -- 1 4`.

use std::process::ExitCode;
use std::time::Instant;

use gne_core::game::{payload_points, GameModel, GameSpec, Player, Vec2};
use gne_core::harness::{check_scenario, run_monte_carlo, run_scenario, MetricsReport, MonteCarloOptions, ScenarioConfig};
use gne_core::kkt::{assemble_kkt, brute_force_nash_check, GameKkt};
use gne_core::mcp::{check_jacobian, solve_mcp, AffineProblem, DenseMatrix, McProblem, SolverOptions, VariableBounds};
use gne_core::sim::{EpisodeLog, JointState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn(&mut Shared) -> Outcome); 10] = [
        (1, "solver matches active-set enumeration", c1_solver_correctness),
        (2, "KKT Jacobian matches finite differences", c2_jacobian_fidelity),
        (3, "converged solves certify as GNE", c3_certificates),
        (4, "alpha 0.5 recovers the symmetric-dual system", c4_normalized_recovery),
        (5, "no unilateral grid improvement on one-step games", c5_brute_force),
        (6, "scenario 1 closed loop", c6_scenario1),
        (7, "scenario 2 closed loop", c7_scenario2),
        (8, "scenario 3 Monte-Carlo trends", c8_monte_carlo),
        (9, "median plan time below one tick", c9_latency),
        (10, "repeated Monte-Carlo is bit-identical", c10_determinism),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = run(&mut shared);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

/// Results reused across criteria.
#[derive(Default)]
struct Shared {
    monte_carlo: Option<MetricsReport>,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// 1. Affine MCPs against active-set enumeration

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-12 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Every solution of the affine MCP `F(w) = M w + q`, `l ≤ w ≤ u`, found by
/// trying each assignment of variables to {at lower, at upper, F = 0}.
fn enumerate_mcp(m: &[Vec<f64>], q: &[f64], lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = q.len();
    let tol = 1e-10;
    let mut found = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let pattern: Vec<usize> = (0..n).map(|j| code / 3usize.pow(j as u32) % 3).collect();
        // 0: w = l, 1: w = u, 2: F = 0.
        if (0..n).any(|j| (pattern[j] == 0 && lower[j].is_infinite()) || (pattern[j] == 1 && upper[j].is_infinite())) {
            continue;
        }
        let free: Vec<usize> = (0..n).filter(|&j| pattern[j] == 2).collect();
        let mut w: Vec<f64> = (0..n)
            .map(|j| match pattern[j] {
                0 => lower[j],
                1 => upper[j],
                _ => 0.0,
            })
            .collect();
        if !free.is_empty() {
            let a: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| m[i][j]).collect()).collect();
            let b: Vec<f64> = free
                .iter()
                .map(|&i| -q[i] - (0..n).filter(|j| pattern[*j] != 2).map(|j| m[i][j] * w[j]).sum::<f64>())
                .collect();
            let Some(x) = gauss(a, b) else { continue };
            for (&j, v) in free.iter().zip(x) {
                w[j] = v;
            }
        }
        let f: Vec<f64> = (0..n).map(|i| q[i] + (0..n).map(|j| m[i][j] * w[j]).sum::<f64>()).collect();
        let ok = (0..n).all(|j| match pattern[j] {
            0 => f[j] >= -tol,
            1 => f[j] <= tol,
            _ => w[j] >= lower[j] - tol && w[j] <= upper[j] + tol,
        });
        if ok {
            found.push(w);
        }
    }
    found
}

fn affine(m: &[Vec<f64>], q: &[f64], lower: &[f64], upper: &[f64]) -> AffineProblem {
    AffineProblem {
        matrix: DenseMatrix::from_rows(m),
        offset: q.to_vec(),
        bounds: VariableBounds::new(lower.to_vec(), upper.to_vec()).unwrap(),
    }
}

fn c1_solver_correctness(_: &mut Shared) -> Outcome {
    let inf = f64::INFINITY;
    let mut cases: Vec<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = vec![
        (vec![vec![1.0]], vec![-1.0], vec![0.0], vec![inf], vec![5.0]),
        (vec![vec![1.0]], vec![1.0], vec![0.0], vec![inf], vec![5.0]),
        (
            vec![vec![2.0, -1.0], vec![-1.0, 2.0]],
            vec![-1.0, 0.0],
            vec![0.0, 0.0],
            vec![inf, inf],
            vec![0.0, 0.0],
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..12 {
        let n = rng.random_range(2..=6);
        // Symmetric positive definite part plus a skew part keeps M positive
        // definite, so the solution is unique.
        let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let s: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let sym: f64 = (0..n).map(|k| a[i][k] * a[j][k]).sum();
                        sym + if i == j { 0.5 } else { 0.0 } + 0.5 * (s[i][j] - s[j][i])
                    })
                    .collect()
            })
            .collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (mut lower, mut upper) = (vec![-inf; n], vec![inf; n]);
        for j in 0..n {
            match rng.random_range(0..4) {
                0 => {}
                1 => lower[j] = rng.random_range(-1.0..0.5),
                2 => upper[j] = rng.random_range(-0.5..1.0),
                _ => {
                    lower[j] = rng.random_range(-1.0..0.0);
                    upper[j] = lower[j] + rng.random_range(0.2..1.5);
                }
            }
        }
        let w0 = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        cases.push((m, q, lower, upper, w0));
    }
    let opts = SolverOptions {
        tol_residual: 1e-11,
        ..Default::default()
    };
    let mut worst = 0.0_f64;
    for (k, (m, q, lower, upper, w0)) in cases.iter().enumerate() {
        let oracle = enumerate_mcp(m, q, lower, upper);
        ensure(oracle.len() == 1, || format!("case {k}: oracle found {} solutions", oracle.len()))?;
        let sol = solve_mcp(&affine(m, q, lower, upper), w0, &opts).map_err(|e| e.to_string())?;
        ensure(sol.status.is_converged(), || format!("case {k}: {:?}", sol.status))?;
        let gap = inf_dist(&sol.w_star, &oracle[0]);
        ensure(gap <= 1e-8, || format!("case {k}: |dw| = {gap:e}"))?;
        worst = worst.max(gap);
    }
    let expected = [vec![1.0], vec![0.0], vec![2.0 / 3.0, 1.0 / 3.0]];
    for (k, e) in expected.iter().enumerate() {
        let oracle = enumerate_mcp(&cases[k].0, &cases[k].1, &cases[k].2, &cases[k].3);
        ensure(inf_dist(&oracle[0], e) <= 1e-12, || format!("oracle disagrees with example {k}"))?;
    }
    Ok(format!("{} problems, worst |dw| = {worst:.1e} (tol 1e-8)", cases.len()))
}

// ---------------------------------------------------------------------------
// 2. Jacobian fidelity

fn random_interior(kkt: &GameKkt, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let l = kkt.layout();
    let first_inequality_dual = l.lam(Player::Human).start;
    (0..l.len())
        .map(|i| {
            if i < first_inequality_dual {
                rng.random_range(-3.0..3.0)
            } else {
                rng.random_range(0.1..2.0)
            }
        })
        .collect()
}

fn c2_jacobian_fidelity(_: &mut Shared) -> Outcome {
    let mut worst = 0.0_f64;
    let mut points = 0;
    for name in ["scenario1", "scenario2", "scenario3"] {
        let config = ScenarioConfig::preset(name).map_err(|e| e.to_string())?;
        let kkt = assemble_kkt(config.game.clone()).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = random_interior(&kkt, &mut rng);
            let err = check_jacobian(&kkt, &w, 1e-6);
            ensure(err <= 1e-5, || format!("{name}: relative error {err:e}"))?;
            worst = worst.max(err);
            points += 1;
        }
    }
    Ok(format!("{points} points, worst relative error {worst:.1e} (tol 1e-5)"))
}

// ---------------------------------------------------------------------------
// 3. Certificates

fn c3_certificates(_: &mut Shared) -> Outcome {
    let mut converged = 0;
    let mut worst = 0.0_f64;
    for name in ["scenario1", "scenario2", "scenario3"] {
        let config = ScenarioConfig::preset(name).map_err(|e| e.to_string())?;
        for alpha in [0.05, 0.5] {
            let report = check_scenario(&config, alpha, 0, 1e-5).map_err(|e| e.to_string())?;
            ensure(report.certificate_failures == 0, || {
                format!(
                    "{name} alpha {alpha}: {} of {} converged ticks failed (worst {:e})",
                    report.certificate_failures, report.converged_ticks, report.worst_certificate
                )
            })?;
            converged += report.converged_ticks;
            worst = worst.max(report.worst_certificate);
        }
    }
    ensure(converged > 0, || "no converged solves".into())?;
    Ok(format!("{converged} converged solves certified, worst residual {worst:.1e} (tol 1e-5)"))
}

// ---------------------------------------------------------------------------
// 4. Normalized recovery

fn c4_normalized_recovery(_: &mut Shared) -> Outcome {
    let mut entries = 0;
    for name in ["scenario1", "scenario2"] {
        let mut spec = ScenarioConfig::preset(name).map_err(|e| e.to_string())?.game;
        spec.alpha = 0.5;
        let kkt = assemble_kkt(spec).map_err(|e| e.to_string())?;
        let l = kkt.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let w = random_interior(&kkt, &mut rng);
            let mut f = vec![0.0; kkt.dim()];
            kkt.residual(&w, &mut f);
            let half: Vec<f64> = w[l.sigma()].iter().map(|s| 0.5 * s).collect();
            let symmetric = kkt.stationarity_with_scaled_duals(
                &w[l.z()],
                [&w[l.mu(Player::Human)], &w[l.mu(Player::Robot)]],
                [&w[l.lam(Player::Human)], &w[l.lam(Player::Robot)]],
                [&half, &half],
            );
            ensure(f[l.z()] == symmetric[..], || format!("{name}: stationarity differs from symmetric duals"))?;
            // Independent rebuild from the public per-constraint gradients.
            let oracle = stationarity_oracle(kkt.model(), &w, &kkt, [&half, &half]);
            for (i, (a, b)) in f[l.z()].iter().zip(&oracle).enumerate() {
                ensure((a - b).abs() <= 1e-12 * b.abs().max(1.0), || format!("{name} row {i}: {a} vs {b}"))?;
            }
            entries += oracle.len();
        }
    }
    Ok(format!("{entries} stationarity entries equal (bit-exact against sigma/2 on both players)"))
}

fn stationarity_oracle(model: &GameModel, w: &[f64], kkt: &GameKkt, sigma: [&[f64]; 2]) -> Vec<f64> {
    let l = kkt.layout();
    let z = gne_core::game::DecisionVector::from_vec(model.layout(), w[l.z()].to_vec()).unwrap();
    let grads = model.constraint_gradients(&z).unwrap();
    let mut out = vec![0.0; model.layout().len()];
    for p in Player::BOTH {
        let mut own = vec![0.0; out.len()];
        model.add_cost_gradient(p, z.as_slice(), &mut own);
        let mut add = |rows: &[Vec<(usize, f64)>], duals: &[f64]| {
            for (row, y) in rows.iter().zip(duals) {
                for &(i, g) in row {
                    own[i] += y * g;
                }
            }
        };
        add(&grads.equality[p.index()], &w[l.mu(p)]);
        add(&grads.private[p.index()], &w[l.lam(p)]);
        add(&grads.shared, sigma[p.index()]);
        for i in model.player_indices(p) {
            out[i] = own[i];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 5. Brute-force Nash check

fn c5_brute_force(_: &mut Shared) -> Outcome {
    let base = ScenarioConfig::preset("scenario1").map_err(|e| e.to_string())?.game;
    let instances: [(f64, Vec2, Vec2); 6] = [
        (0.05, Vec2::new(0.02, -0.01), Vec2::new(0.03, 0.02)),
        (0.5, Vec2::new(0.02, -0.01), Vec2::new(0.03, 0.02)),
        (0.3, Vec2::new(-0.03, 0.02), Vec2::new(0.01, -0.04)),
        (0.1, Vec2::new(0.05, 0.05), Vec2::new(0.05, 0.05)),
        (0.8, Vec2::new(0.0, -0.04), Vec2::new(-0.02, 0.01)),
        (0.05, Vec2::new(1.0, -0.5), Vec2::new(1.2, 0.1)),
    ];
    let mut worst = f64::NEG_INFINITY;
    for (k, (alpha, dh, dr)) in instances.iter().enumerate() {
        let mut spec: GameSpec = base.clone();
        spec.horizon = 1;
        spec.alpha = *alpha;
        spec.human.target = spec.human.x0 + *dh;
        spec.robot.target = spec.robot.x0 + *dr;
        let kkt = assemble_kkt(spec).map_err(|e| e.to_string())?;
        let sol = solve_mcp(&kkt, &kkt.straight_line_guess(), &SolverOptions::default()).map_err(|e| e.to_string())?;
        ensure(sol.status.is_converged(), || format!("instance {k}: {:?}", sol.status))?;
        let point = kkt.point(&sol.w_star).map_err(|e| e.to_string())?;
        let report = brute_force_nash_check(kkt.model(), &point.z, 21).map_err(|e| e.to_string())?;
        ensure(report.passed, || format!("instance {k}: {report:?}"))?;
        worst = worst.max(report.best_improvement[0].max(report.best_improvement[1]));
    }
    Ok(format!("{} instances, 21x21 grid, best improvement {worst:.1e}", instances.len()))
}

// ---------------------------------------------------------------------------
// 6, 7. Closed-loop scenarios

fn positions(log: &EpisodeLog, p: Player) -> Vec<Vec2> {
    log.executed_states()
        .iter()
        .map(|s| if p == Player::Human { s.x1 } else { s.x2 })
        .collect()
}

/// ∞-norm gap between two paths sampled per tick; the shorter one holds its
/// last point.
fn path_gap(a: &[Vec2], b: &[Vec2]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| (a[k.min(a.len() - 1)] - b[k.min(b.len() - 1)]).norm())
        .fold(0.0, f64::max)
}

/// Each executed state after a tick, paired with the slack planned for it.
fn states_with_slack(log: &EpisodeLog) -> Vec<(JointState, f64)> {
    log.ticks
        .iter()
        .enumerate()
        .map(|(i, t)| (log.ticks.get(i + 1).map_or(log.final_state, |n| n.state), t.slack))
        .collect()
}

fn c6_scenario1(_: &mut Shared) -> Outcome {
    let config = ScenarioConfig::preset("scenario1").map_err(|e| e.to_string())?;
    let low = run_scenario(&config, 0.05, 0).map_err(|e| e.to_string())?;
    let high = run_scenario(&config, 0.5, 0).map_err(|e| e.to_string())?;
    let spec = &config.game;
    let straight = (spec.human.target - spec.human.x0).norm();
    let path = positions(&low, Player::Human);
    let length: f64 = path.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    ensure(length <= 1.05 * straight, || format!("human path {length:.3} m > 1.05 x {straight:.3} m"))?;
    let gap = path_gap(&path, &positions(&high, Player::Human));
    ensure(gap > 0.1, || format!("alpha 0.05 and 0.5 human paths differ by only {gap:.3} m"))?;
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for log in [&low, &high] {
        for (s, slack) in states_with_slack(log) {
            if slack <= 1e-9 {
                worst = worst.max((s.distance() - spec.payload_length).abs());
                checked += 1;
            }
        }
    }
    ensure(worst <= spec.band_epsilon + 1e-3, || format!("band deviation {worst:.4} m"))?;
    Ok(format!(
        "human path {length:.3} m vs straight {straight:.3} m, alpha gap {gap:.3} m, band deviation {worst:.4} m over {checked} states"
    ))
}

fn c7_scenario2(_: &mut Shared) -> Outcome {
    let config = ScenarioConfig::preset("scenario2").map_err(|e| e.to_string())?;
    let spec = &config.game;
    let mut logs = Vec::new();
    let mut clearance = f64::INFINITY;
    for alpha in [0.05, 0.5] {
        let log = run_scenario(&config, alpha, 0).map_err(|e| e.to_string())?;
        for s in log.executed_states() {
            for p in payload_points(s.x1, s.x2, spec.segment_divisions) {
                for o in &spec.obstacles {
                    clearance = clearance.min((p - o.center).norm() - o.radius);
                }
            }
        }
        logs.push(log);
    }
    ensure(clearance >= -1e-6, || format!("payload entered the obstacle by {:.2e} m", -clearance))?;
    let gap = path_gap(&positions(&logs[0], Player::Robot), &positions(&logs[1], Player::Robot))
        .max(path_gap(&positions(&logs[0], Player::Human), &positions(&logs[1], Player::Human)));
    ensure(gap > 0.1, || format!("trajectories differ by only {gap:.3} m"))?;
    Ok(format!("min clearance {clearance:.4} m, alpha gap {gap:.3} m"))
}

// ---------------------------------------------------------------------------
// 8, 10. Monte-Carlo

fn monte_carlo() -> Result<MetricsReport, String> {
    let config = ScenarioConfig::preset("scenario3").map_err(|e| e.to_string())?;
    let options = MonteCarloOptions {
        threads: None,
        export_dir: None,
    };
    run_monte_carlo(&config, &config.monte_carlo.alphas, config.monte_carlo.runs, &options).map_err(|e| e.to_string())
}

fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] < w[0]).count()
}

fn c8_monte_carlo(shared: &mut Shared) -> Outcome {
    let report = monte_carlo()?;
    println!("{}", report.to_table().trim_end());
    let alphas: Vec<f64> = report.rows.iter().map(|r| r.alpha).collect();
    ensure(alphas == [0.05, 0.1, 0.3, 0.5], || format!("alphas {alphas:?}"))?;
    ensure(report.rows.iter().all(|r| r.runs == 200), || "expected 200 runs per alpha".into())?;
    let success: Vec<f64> = report.rows.iter().map(|r| r.success_pct).collect();
    let dist: Vec<f64> = report.rows.iter().map(|r| r.mean_distance_dev).collect();
    let effort: Vec<f64> = report.rows.iter().map(|r| r.mean_effort).collect();
    shared.monte_carlo = Some(report);
    ensure(success.windows(2).all(|w| w[1] <= w[0]), || format!("success not non-increasing: {success:?}"))?;
    let drop = success[0] - success[3];
    ensure(drop >= 5.0, || format!("success drop {drop:.1} points < 5"))?;
    ensure(inversions(&dist) <= 1, || format!("distance deviation trend {dist:?}"))?;
    ensure(inversions(&effort) <= 1, || format!("effort trend {effort:?}"))?;
    Ok(format!(
        "success {success:?} (drop {drop:.1} points), distance inversions {}, effort inversions {}",
        inversions(&dist),
        inversions(&effort)
    ))
}

fn c10_determinism(shared: &mut Shared) -> Outcome {
    let first = match shared.monte_carlo.take() {
        Some(r) => r,
        None => monte_carlo()?,
    };
    let second = monte_carlo()?;
    let bits = |r: &MetricsReport| {
        r.rows
            .iter()
            .flat_map(|row| {
                [row.success_pct, row.mean_distance_dev, row.mean_max_distance_dev, row.mean_effort, row.std_effort]
                    .map(f64::to_bits)
            })
            .collect::<Vec<_>>()
    };
    ensure(first == second && bits(&first) == bits(&second), || "reports differ".into())?;
    let hash = second.rows[0].config_hash.clone().unwrap_or_default();
    Ok(format!("{} rows identical, config hash {}", second.rows.len(), &hash[..hash.len().min(12)]))
}

// ---------------------------------------------------------------------------
// 9. Latency

fn c9_latency(_: &mut Shared) -> Outcome {
    let config = ScenarioConfig::preset("scenario2").map_err(|e| e.to_string())?;
    let mut times = Vec::new();
    for alpha in [0.05, 0.5] {
        let log = run_scenario(&config, alpha, 0).map_err(|e| e.to_string())?;
        times.extend(log.ticks.iter().map(|t| t.wall_time_ms));
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    let budget = config.game.dt * 1e3;
    ensure(median < budget, || format!("median {median:.2} ms >= {budget} ms"))?;
    Ok(format!(
        "median {median:.2} ms, max {:.2} ms over {} ticks (budget {budget} ms)",
        times[times.len() - 1],
        times.len()
    ))
}
