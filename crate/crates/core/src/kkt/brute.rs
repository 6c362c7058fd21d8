//! Exhaustive unilateral-deviation search for one-step games.

use serde::{Deserialize, Serialize};

use crate::game::{step_dynamics, DecisionVector, GameError, GameModel, Player, Vec2};

/// Feasibility slack allowed for a grid deviation.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub passed: bool,
    /// Largest cost decrease found over all feasible unilateral deviations
    /// (negative when every deviation is worse).
    pub worst_improvement: f64,
    /// Player achieving `worst_improvement`.
    pub worst_player: Player,
    /// Best cost decrease found for each player.
    pub best_improvement: [f64; 2],
    /// Pass threshold used for each player: `1e-6·(1 + |Ĵ_p|)`. The grid is a
    /// subset of the continuous feasible set, so at an equilibrium no grid
    /// point beats the candidate beyond the solver's own accuracy.
    pub tolerance: [f64; 2],
    pub deviations_checked: usize,
}

/// Enumerates, for each player, accelerations on a `grid × grid` lattice
/// over `[−a_max, a_max]²` (inside the acceleration ball), rolls out one step
/// from the initial state and keeps deviations that satisfy the player's
/// private constraints and the shared constraints at the opponent's fixed
/// plan. The slack owner picks its optimal slacks for each deviation.
pub fn brute_force_nash_check(
    model: &GameModel,
    candidate: &DecisionVector,
    grid: usize,
) -> Result<BruteForceReport, GameError> {
    let spec = model.spec();
    if spec.horizon != 1 {
        return Err(GameError::Invalid {
            field: "horizon".into(),
            reason: format!("brute-force check needs horizon 1, got {}", spec.horizon),
        });
    }
    if grid < 2 {
        return Err(GameError::Invalid {
            field: "grid".into(),
            reason: "need at least 2 points per axis".into(),
        });
    }
    let base_costs = model.evaluate_costs(candidate)?;
    let tolerance = base_costs.map(|j| 1e-6 * (1.0 + j.abs()));
    let mut best = [f64::NEG_INFINITY; 2];
    let mut checked = 0;
    for p in Player::BOTH {
        let agent = spec.agent(p);
        let axis: Vec<f64> = (0..grid)
            .map(|i| -agent.a_max + 2.0 * agent.a_max * i as f64 / (grid - 1) as f64)
            .collect();
        for &ax in &axis {
            for &ay in &axis {
                let a = Vec2::new(ax, ay);
                if a.norm() > agent.a_max * (1.0 + 1e-12) {
                    continue;
                }
                let mut z = candidate.clone();
                let (x1, v1) = step_dynamics(agent.x0, agent.v0, a, spec.dt);
                z.set_pos(p, 0, agent.x0);
                z.set_vel(p, 0, agent.v0);
                z.set_acc(p, 0, a);
                z.set_pos(p, 1, x1);
                z.set_vel(p, 1, v1);
                if p == model.slack_owner() {
                    let dist_sq = (z.pos(Player::Human, 1) - z.pos(Player::Robot, 1)).norm_sq();
                    let lower = (spec.payload_length - spec.band_epsilon).powi(2) - dist_sq;
                    let upper = dist_sq - (spec.payload_length + spec.band_epsilon).powi(2);
                    z.set_slack(0, 0.0);
                    z.set_slack(1, lower.max(upper).max(0.0));
                }
                let res = model.evaluate_constraints(&z)?;
                let feasible = res.g(p).iter().chain(res.c_shared()).all(|&g| g <= FEAS_TOL);
                if !feasible {
                    continue;
                }
                checked += 1;
                let improvement = base_costs[p.index()] - model.evaluate_costs(&z)?[p.index()];
                best[p.index()] = best[p.index()].max(improvement);
            }
        }
    }
    let passed = Player::BOTH.iter().all(|p| best[p.index()] <= tolerance[p.index()]);
    let worst_player = if best[1] > best[0] { Player::Robot } else { Player::Human };
    Ok(BruteForceReport {
        passed,
        worst_improvement: best[worst_player.index()],
        worst_player,
        best_improvement: best,
        tolerance,
        deviations_checked: checked,
    })
}
