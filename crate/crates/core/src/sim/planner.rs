use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::game::{step_dynamics, ConstraintEntry, ConstraintKind, GameSpec, Player, Vec2};
use crate::kkt::{GameKkt, KktPoint};
use crate::mcp::{solve_mcp, McSolution, SolveStatus, SolverOptions};

use super::{JointState, SimError};

/// Shared constraints at the first planned step that hold with equality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveFlags {
    pub band_lower: bool,
    pub band_upper: bool,
    pub clearance: bool,
}

/// Residual above which a constraint counts as active.
const ACTIVE_TOL: f64 = -1e-6;

/// Result of one receding-horizon solve.
#[derive(Debug, Clone)]
pub struct PlanStep {
    pub point: KktPoint,
    /// Solution in MCP coordinates; feed back as the next warm start.
    pub w: Vec<f64>,
    pub status: SolveStatus,
    pub residual: f64,
    /// Newton iterations, summed over the warm attempt and any cold retry.
    pub iterations: usize,
    pub warm_started: bool,
    /// The warm start failed and a cold start was tried.
    pub cold_retry: bool,
    /// First planned acceleration of each player.
    pub human_command: Vec2,
    pub robot_command: Vec2,
    /// Planned slack `s(1)`.
    pub slack: f64,
    pub human_plan: Vec<Vec2>,
    pub robot_plan: Vec<Vec2>,
    pub active: ActiveFlags,
    pub wall_time: Duration,
}

impl PlanStep {
    pub fn infeasible(&self) -> bool {
        !self.status.is_converged()
    }
}

/// Solves the game posed from `state` and returns the first controls.
///
/// With `warm` (the previous tick's [`PlanStep::w`]) the guess is the previous
/// solution shifted by one step, last step duplicated, with the initial
/// state overwritten by the measurement. Without it, or when the warm solve
/// fails, a straight-line cold start is used.
pub fn plan_step(
    spec: &GameSpec,
    state: &JointState,
    warm: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<PlanStep, SimError> {
    if !state.is_finite() {
        return Err(SimError::NonFinite { t: state.t });
    }
    let started = Instant::now();
    let kkt = GameKkt::new(crate::game::GameModel::new(state.as_initial(spec))?);
    let mut iterations = 0;
    let mut cold_retry = false;
    let warm_started = warm.is_some_and(|w| w.len() == kkt.layout().len());

    let mut best: Option<McSolution> = None;
    if warm_started {
        let guess = shift_warm_start(&kkt, warm.unwrap(), state);
        let sol = solve_mcp(&kkt, &guess, options)?;
        iterations += sol.iterations;
        best = Some(sol);
    }
    if !best.as_ref().is_some_and(|s| s.status.is_converged()) {
        cold_retry = warm_started;
        let sol = solve_mcp(&kkt, &kkt.straight_line_guess(), options)?;
        iterations += sol.iterations;
        let better = match &best {
            Some(prev) => sol.status.is_converged() || sol.residual_inf_norm < prev.residual_inf_norm,
            None => true,
        };
        if better {
            best = Some(sol);
        }
    }
    let sol = best.expect("at least one solve ran");
    let point = kkt.point(&sol.w_star)?;
    let z = &point.z;
    let n = spec.horizon;
    let model = kkt.model();
    let values = model.constraint_values(z.as_slice());
    let mut active = ActiveFlags::default();
    for (e, c) in model.catalog().shared.iter().zip(values.c_shared()) {
        if e.step != 1 || *c < ACTIVE_TOL {
            continue;
        }
        match e.kind {
            ConstraintKind::BandLower => active.band_lower = true,
            ConstraintKind::BandUpper => active.band_upper = true,
            ConstraintKind::Clearance => active.clearance = true,
            _ => {}
        }
    }
    Ok(PlanStep {
        human_command: z.acc(Player::Human, 0),
        robot_command: z.acc(Player::Robot, 0),
        slack: z.slack(1.min(n)),
        human_plan: (0..=n).map(|k| z.pos(Player::Human, k)).collect(),
        robot_plan: (0..=n).map(|k| z.pos(Player::Robot, k)).collect(),
        active,
        status: sol.status,
        residual: sol.residual_inf_norm,
        iterations,
        warm_started,
        cold_retry,
        w: sol.w_star,
        point,
        wall_time: started.elapsed(),
    })
}

/// Previous solution advanced by one step: every primal and dual entry
/// indexed by a time step takes the value of step `k + 1`; entries with no
/// successor keep their own value, except the final state, which is
/// propagated with the repeated last acceleration. Initial conditions come
/// from `state`.
pub fn shift_warm_start(kkt: &GameKkt, prev: &[f64], state: &JointState) -> Vec<f64> {
    let model = kkt.model();
    let layout = model.layout();
    let n = layout.horizon();
    let dt = model.spec().dt;
    let mut w = prev.to_vec();
    for p in Player::BOTH {
        for k in 0..n {
            for a in 0..2 {
                w[layout.pos(p, k) + a] = prev[layout.pos(p, k + 1) + a];
                w[layout.vel(p, k) + a] = prev[layout.vel(p, k + 1) + a];
            }
        }
        for k in 0..n.saturating_sub(1) {
            for a in 0..2 {
                w[layout.acc(p, k) + a] = prev[layout.acc(p, k + 1) + a];
            }
        }
        // The final step repeats the last acceleration and is rolled out
        // through the dynamics, so the guess has no dynamics defect.
        let at = |i: usize| Vec2::new(prev[i], prev[i + 1]);
        let (x, v) = step_dynamics(at(layout.pos(p, n)), at(layout.vel(p, n)), at(layout.acc(p, n - 1)), dt);
        for (i, value) in [(layout.pos(p, n), x), (layout.vel(p, n), v)] {
            w[i] = value.x;
            w[i + 1] = value.y;
        }
    }
    for k in 0..n {
        w[layout.slack(k)] = prev[layout.slack(k + 1)];
    }
    let catalog = model.catalog();
    let l = kkt.layout();
    for p in Player::BOTH {
        shift_duals(&catalog.equalities[p.index()], l.mu(p).start, prev, &mut w);
        shift_duals(&catalog.private[p.index()], l.lam(p).start, prev, &mut w);
    }
    shift_duals(&catalog.shared, l.sigma().start, prev, &mut w);
    // The first slack relaxes no band constraint, so its optimum is zero.
    w[layout.slack(0)] = 0.0;
    if let Some(i) = catalog.private[model.slack_owner().index()]
        .iter()
        .position(|e| e.kind == ConstraintKind::SlackSign && e.step == 0)
    {
        w[l.lam(model.slack_owner()).start + i] = 0.0;
    }
    for p in Player::BOTH {
        let (x, v) = (state.pos(p), state.vel(p));
        w[layout.pos(p, 0)] = x.x;
        w[layout.pos(p, 0) + 1] = x.y;
        w[layout.vel(p, 0)] = v.x;
        w[layout.vel(p, 0) + 1] = v.y;
    }
    kkt.fit_equality_duals(&mut w);
    w
}

fn shift_duals(entries: &[ConstraintEntry], offset: usize, prev: &[f64], w: &mut [f64]) {
    let index: HashMap<ConstraintEntry, usize> = entries.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    for (i, e) in entries.iter().enumerate() {
        // Initial-condition pins have no time successor.
        if matches!(e.kind, ConstraintKind::PinPosition | ConstraintKind::PinVelocity) {
            continue;
        }
        let next = ConstraintEntry { step: e.step + 1, ..*e };
        if let Some(&j) = index.get(&next) {
            w[offset + i] = prev[offset + j];
        }
    }
}
