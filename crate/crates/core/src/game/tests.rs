use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table_ii_spec() -> GameSpec {
    GameSpec::with_agents(
        AgentParams {
            v_max: 1.5,
            a_max: 5.0,
            x0: Vec2::new(-1.5, 6.5),
            v0: Vec2::ZERO,
            target: Vec2::new(8.0, 2.0),
        },
        AgentParams {
            v_max: 3.0,
            a_max: 25.0,
            x0: Vec2::new(-3.62, 4.38),
            v0: Vec2::ZERO,
            target: Vec2::new(8.0, 5.0),
        },
    )
}

fn with_obstacle(mut spec: GameSpec) -> GameSpec {
    spec.obstacles.push(Obstacle {
        center: Vec2::new(2.5, 4.0),
        radius: 1.0,
    });
    spec
}

/// Decision vector with both players resting at their initial positions.
fn resting(model: &GameModel) -> DecisionVector {
    let s = model.spec();
    let h = PlayerPlan::stationary(s.human.x0, s.horizon);
    let r = PlayerPlan::stationary(s.robot.x0, s.horizon);
    DecisionVector::pack([&h, &r], &vec![0.0; s.horizon + 1]).unwrap()
}

fn random_z(model: &GameModel, seed: u64) -> DecisionVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..model.layout().len()).map(|_| rng.random_range(-4.0..4.0)).collect();
    DecisionVector::from_vec(model.layout(), data).unwrap()
}

#[test]
fn step_dynamics_examples() {
    let (x, v) = step_dynamics(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::ZERO, 0.1);
    assert_eq!((x, v), (Vec2::new(0.1, 0.0), Vec2::new(1.0, 0.0)));
    let (x, v) = step_dynamics(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), 0.1);
    assert!(x.max_abs_diff(Vec2::new(0.11, 0.0)) < 1e-15);
    assert!(v.max_abs_diff(Vec2::new(1.2, 0.0)) < 1e-15);
    let p = Vec2::new(5.0, 5.0);
    assert_eq!(step_dynamics(p, Vec2::ZERO, Vec2::ZERO, 0.37), (p, Vec2::ZERO));
}

#[test]
fn payload_points_examples() {
    let pts = payload_points(Vec2::new(1.0, 0.0), Vec2::ZERO, 2);
    assert_eq!(pts, vec![Vec2::ZERO, Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0)]);
    let same = Vec2::new(3.0, 3.0);
    assert!(payload_points(same, same, 5).iter().all(|&p| p == same));
    let (x1, x2) = (Vec2::new(-1.5, 6.5), Vec2::new(-3.62, 4.38));
    let ends = payload_points(x1, x2, 1);
    assert_eq!(ends[0], x2);
    assert!(ends[1].max_abs_diff(x1) < 1e-15);
}

#[test]
fn segment_coefficients_are_exact() {
    let c = segment_coefficients(6);
    assert_eq!(c.len(), 7);
    assert_eq!(c[0], 0.0);
    assert_eq!(c[6], 1.0);
}

#[test]
fn band_residuals_at_table_ii_start() {
    let model = GameModel::new(table_ii_spec()).unwrap();
    let res = model.evaluate_constraints(&resting(&model)).unwrap();
    // Hand arithmetic: ‖Δx‖² = 2.12² + 2.12² = 8.9888; (2.95)² = 8.7025; (3.05)² = 9.3025.
    let (lower, upper) = (res.shared[0], res.shared[1]);
    assert!((lower - (-0.2863)).abs() < 1e-12, "{lower}");
    assert!((upper - (-0.3137)).abs() < 1e-12, "{upper}");
    // d − ε ≤ √8.9888 ≈ 2.9981 ≤ d + ε
    let dist = 8.9888_f64.sqrt();
    assert!((dist - 2.9981).abs() < 1e-4);
    assert!(dist > 2.95 && dist < 3.05);
}

#[test]
fn clearance_residual_example() {
    let mut spec = table_ii_spec();
    spec.obstacles.push(Obstacle {
        center: Vec2::ZERO,
        radius: 1.0,
    });
    spec.human.x0 = Vec2::new(2.0, 0.0);
    spec.robot.x0 = Vec2::new(2.0, 0.0);
    let model = GameModel::new(spec).unwrap();
    let res = model.evaluate_constraints(&resting(&model)).unwrap();
    let clearance = &res.shared[2 * model.spec().horizon..];
    assert!(clearance.iter().all(|&c| (c - (-3.0)).abs() < 1e-12));
}

#[test]
fn speed_violation_example() {
    let model = GameModel::new(table_ii_spec()).unwrap();
    let mut z = resting(&model);
    z.set_vel(Player::Human, 1, Vec2::new(3.0, 0.0));
    let res = model.evaluate_constraints(&z).unwrap();
    // First private entry of the human is speed at k = 1.
    assert!((res.g(Player::Human)[0] - 6.75).abs() < 1e-12);
}

#[test]
fn evaluate_rejects_mismatched_layout() {
    let model = GameModel::new(table_ii_spec()).unwrap();
    let z = DecisionVector::zeros(Layout::new(3));
    assert!(matches!(
        model.evaluate_constraints(&z),
        Err(GameError::Dimension { .. })
    ));
    assert!(model.evaluate_costs(&z).is_err());
}

#[test]
fn cost_examples() {
    let spec = table_ii_spec();
    let n = spec.horizon;
    let model = GameModel::new(spec.clone()).unwrap();
    let h = PlayerPlan::stationary(spec.human.target, n);
    let r = PlayerPlan::stationary(spec.robot.target, n);
    let slacks = vec![0.0; n + 1];
    let at_targets = DecisionVector::pack([&h, &r], &slacks).unwrap();
    assert_eq!(model.evaluate_costs(&at_targets).unwrap(), [0.0, 0.0]);

    let mut off = at_targets.clone();
    off.set_pos(Player::Human, 1, spec.human.target + Vec2::new(1.0, 0.0));
    assert_eq!(model.evaluate_costs(&off).unwrap()[0], 1.0);

    // N·‖(8, 2)‖² = 10·68
    let zero = DecisionVector::zeros(model.layout());
    assert!((model.evaluate_costs(&zero).unwrap()[0] - 680.0).abs() < 1e-12);
}

#[test]
fn gradient_examples() {
    let mut spec = table_ii_spec();
    spec.human.v0 = Vec2::new(1.0, 2.0);
    let model = GameModel::new(spec).unwrap();
    let mut z = resting(&model);
    z.set_vel(Player::Human, 1, Vec2::new(1.0, 2.0));
    let speed = &model.catalog().private[0][0];
    assert_eq!(speed.kind, ConstraintKind::Speed);
    let d = model.constraint_derivs(speed, z.as_slice());
    let l = model.layout();
    let vi = l.vel(Player::Human, 1);
    assert_eq!(d.grad.as_slice(), &[(vi, 2.0), (vi + 1, 4.0)]);

    let upper = &model.catalog().shared[1];
    assert_eq!((upper.kind, upper.step), (ConstraintKind::BandUpper, 1));
    let d = model.constraint_derivs(upper, z.as_slice());
    let xi = l.pos(Player::Human, 1);
    let gx: Vec<f64> = d.grad.iter().filter(|(i, _)| *i == xi || *i == xi + 1).map(|g| g.1).collect();
    assert!((gx[0] - 4.24).abs() < 1e-12 && (gx[1] - 4.24).abs() < 1e-12);
}

#[test]
fn derivative_values_match_plain_evaluation() {
    let model = GameModel::new(with_obstacle(table_ii_spec())).unwrap();
    let z = random_z(&model, 3);
    let res = model.evaluate_constraints(&z).unwrap();
    let c = model.catalog();
    for p in Player::BOTH {
        for (e, v) in c.equalities[p.index()].iter().zip(res.h(p)) {
            assert!((model.constraint_derivs(e, z.as_slice()).value - v).abs() < 1e-12);
        }
        for (e, v) in c.private[p.index()].iter().zip(res.g(p)) {
            assert!((model.constraint_derivs(e, z.as_slice()).value - v).abs() < 1e-12);
        }
    }
    for (e, v) in c.shared.iter().zip(res.c_shared()) {
        assert!((model.constraint_derivs(e, z.as_slice()).value - v).abs() < 1e-12);
    }
}

#[test]
fn gradients_and_hessians_match_central_differences() {
    let model = GameModel::new(with_obstacle(table_ii_spec())).unwrap();
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for seed in 0..3 {
        let z = random_z(&model, seed).into_vec();
        let entries: Vec<_> = model
            .catalog()
            .equalities
            .iter()
            .chain(&model.catalog().private)
            .flatten()
            .chain(&model.catalog().shared)
            .copied()
            .collect();
        for e in &entries {
            let d = model.constraint_derivs(e, &z);
            let mut dense = vec![0.0; z.len()];
            for &(i, g) in &d.grad {
                dense[i] += g;
            }
            let touched: Vec<usize> = d.grad.iter().map(|g| g.0).collect();
            for &i in &touched {
                let mut zp = z.clone();
                zp[i] += h;
                let mut zm = z.clone();
                zm[i] -= h;
                let fd = (model.constraint_derivs(e, &zp).value - model.constraint_derivs(e, &zm).value) / (2.0 * h);
                worst = worst.max((fd - dense[i]).abs() / dense[i].abs().max(1.0));
                // Hessian column i from differences of the analytic gradient.
                let (gp, gm) = (model.constraint_derivs(e, &zp), model.constraint_derivs(e, &zm));
                for &j in &touched {
                    let grad_at = |d: &LocalDerivs| d.grad.iter().filter(|g| g.0 == j).map(|g| g.1).sum::<f64>();
                    let fd2 = (grad_at(&gp) - grad_at(&gm)) / (2.0 * h);
                    let exact: f64 = d.hess.iter().filter(|t| t.0 == j && t.1 == i).map(|t| t.2).sum();
                    worst = worst.max((fd2 - exact).abs() / exact.abs().max(1.0));
                }
            }
        }
        // Costs.
        for p in Player::BOTH {
            let mut g = vec![0.0; z.len()];
            model.add_cost_gradient(p, &z, &mut g);
            for i in 0..z.len() {
                let mut zp = z.clone();
                zp[i] += h;
                let mut zm = z.clone();
                zm[i] -= h;
                let fd = (model.cost_values(&zp)[p.index()] - model.cost_values(&zm)[p.index()]) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
            }
        }
    }
    assert!(worst <= 1e-6, "worst relative error {worst}");
}

#[test]
fn cost_gradient_only_touches_own_variables() {
    let model = GameModel::new(table_ii_spec()).unwrap();
    let z = random_z(&model, 9);
    for p in Player::BOTH {
        let mut g = vec![0.0; z.as_slice().len()];
        model.add_cost_gradient(p, z.as_slice(), &mut g);
        for (i, gi) in g.iter().enumerate() {
            if model.owner(i) != p {
                assert_eq!(*gi, 0.0);
            }
        }
    }
    let grads = model.cost_gradients(&z).unwrap();
    assert_eq!(grads[0].len(), model.layout().block_len());
    assert_eq!(grads[1].len(), model.layout().block_len() + model.spec().horizon + 1);
}

#[test]
fn catalog_counts() {
    for (n, divisions, obstacles) in [(10, 6, 1), (3, 2, 2), (1, 1, 0)] {
        let mut spec = table_ii_spec();
        spec.horizon = n;
        spec.segment_divisions = divisions;
        for i in 0..obstacles {
            spec.obstacles.push(Obstacle {
                center: Vec2::new(i as f64, 0.0),
                radius: 0.5,
            });
        }
        let model = GameModel::new(spec).unwrap();
        let c = model.catalog();
        for p in Player::BOTH {
            assert_eq!(c.equality_count(p), 4 * n + 4);
        }
        assert_eq!(c.private_count(Player::Human), 2 * n);
        assert_eq!(c.private_count(Player::Robot), 2 * n + n + 1);
        assert_eq!(c.shared_count(), 2 * n + n * (divisions + 1) * obstacles);
    }
}

#[test]
fn catalog_golden_order() {
    let mut spec = table_ii_spec();
    spec.horizon = 2;
    spec.segment_divisions = 1;
    spec.obstacles.push(Obstacle {
        center: Vec2::ZERO,
        radius: 1.0,
    });
    let model = GameModel::new(spec).unwrap();
    let c = model.catalog();
    use ConstraintKind::*;
    let eq: Vec<_> = c.equalities[0].iter().map(|e| (e.kind, e.step, e.axis)).collect();
    assert_eq!(
        eq,
        vec![
            (PinPosition, 0, Some(0)),
            (PinPosition, 0, Some(1)),
            (PinVelocity, 0, Some(0)),
            (PinVelocity, 0, Some(1)),
            (DynamicsPosition, 0, Some(0)),
            (DynamicsPosition, 0, Some(1)),
            (DynamicsVelocity, 0, Some(0)),
            (DynamicsVelocity, 0, Some(1)),
            (DynamicsPosition, 1, Some(0)),
            (DynamicsPosition, 1, Some(1)),
            (DynamicsVelocity, 1, Some(0)),
            (DynamicsVelocity, 1, Some(1)),
        ]
    );
    let robot: Vec<_> = c.private[1].iter().map(|e| (e.kind, e.step)).collect();
    assert_eq!(
        robot,
        vec![
            (Speed, 1),
            (Speed, 2),
            (Acceleration, 0),
            (Acceleration, 1),
            (SlackSign, 0),
            (SlackSign, 1),
            (SlackSign, 2),
        ]
    );
    let shared: Vec<_> = c.shared.iter().map(|e| (e.kind, e.step, e.obstacle, e.sample)).collect();
    assert_eq!(
        shared,
        vec![
            (BandLower, 1, None, None),
            (BandUpper, 1, None, None),
            (BandLower, 2, None, None),
            (BandUpper, 2, None, None),
            (Clearance, 1, Some(0), Some(0)),
            (Clearance, 1, Some(0), Some(1)),
            (Clearance, 2, Some(0), Some(0)),
            (Clearance, 2, Some(0), Some(1)),
        ]
    );
}

#[test]
fn rollout_has_zero_dynamics_defect() {
    let mut spec = table_ii_spec();
    spec.human.v0 = Vec2::new(0.3, -0.2);
    let model = GameModel::new(spec.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let plans: Vec<PlayerPlan> = Player::BOTH
        .iter()
        .map(|&p| {
            let agent = spec.agent(p);
            let mut plan = PlayerPlan::stationary(agent.x0, spec.horizon);
            plan.velocities[0] = agent.v0;
            for k in 0..spec.horizon {
                let a = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                plan.accelerations[k] = a;
                let (x, v) = step_dynamics(plan.positions[k], plan.velocities[k], a, spec.dt);
                plan.positions[k + 1] = x;
                plan.velocities[k + 1] = v;
            }
            plan
        })
        .collect();
    let z = DecisionVector::pack([&plans[0], &plans[1]], &vec![0.0; spec.horizon + 1]).unwrap();
    let res = model.evaluate_constraints(&z).unwrap();
    for p in Player::BOTH {
        assert!(res.h(p).iter().all(|h| h.abs() <= 1e-12), "{:?}", res.h(p));
    }
}

#[test]
fn invalid_specs_name_the_field() {
    let mut spec = table_ii_spec();
    spec.alpha = 1.0;
    match GameModel::new(spec) {
        Err(GameError::Invalid { field, .. }) => assert_eq!(field, "alpha"),
        other => panic!("{other:?}"),
    }
    let mut spec = table_ii_spec();
    spec.robot.a_max = 0.0;
    match GameModel::new(spec) {
        Err(GameError::Invalid { field, .. }) => assert_eq!(field, "robot.a_max"),
        other => panic!("{other:?}"),
    }
    let mut spec = table_ii_spec();
    spec.band_epsilon = 4.0;
    assert!(GameModel::new(spec).is_err());
}

#[test]
fn mirrored_model_swaps_roles() {
    let model = GameModel::new(with_obstacle(table_ii_spec())).unwrap();
    let m = model.mirrored();
    assert_eq!(m.slack_owner(), Player::Human);
    assert_eq!(m.spec().human, model.spec().robot);
    assert!((m.spec().alpha - 0.95).abs() < 1e-15);
    assert_eq!(m.catalog().private_count(Player::Human), model.catalog().private_count(Player::Robot));
}

fn swap_blocks(model: &GameModel, z: &DecisionVector) -> DecisionVector {
    let (plans, slacks) = z.unpack();
    let _ = model;
    DecisionVector::pack([&plans[1], &plans[0]], &slacks).unwrap()
}

proptest! {
    #[test]
    fn band_is_symmetric_under_player_swap(seed in 0u64..1000) {
        let model = GameModel::new(table_ii_spec()).unwrap();
        let z = random_z(&model, seed);
        let swapped = swap_blocks(&model, &z);
        let a = model.evaluate_constraints(&z).unwrap();
        let b = model.evaluate_constraints(&swapped).unwrap();
        let band = 2 * model.spec().horizon;
        for (x, y) in a.shared[..band].iter().zip(&b.shared[..band]) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn larger_obstacles_never_decrease_clearance(seed in 0u64..1000, grow in 0.0f64..2.0) {
        let small = GameModel::new(with_obstacle(table_ii_spec())).unwrap();
        let mut big_spec = small.spec().clone();
        big_spec.obstacles[0].radius += grow;
        let big = GameModel::new(big_spec).unwrap();
        let z = random_z(&small, seed);
        let a = small.evaluate_constraints(&z).unwrap();
        let b = big.evaluate_constraints(&z).unwrap();
        let band = 2 * small.spec().horizon;
        for (x, y) in a.shared[band..].iter().zip(&b.shared[band..]) {
            prop_assert!(y >= x);
        }
    }
}
