use arrayvec::ArrayVec;

use super::catalog::{ConstraintCatalog, ConstraintEntry, ConstraintKind};
use super::layout::{DecisionVector, Layout};
use super::{GameError, GameSpec, Player, Vec2};

/// Double-integrator step: `x⁺ = x + dt·v + ½dt²·a`, `v⁺ = v + dt·a`.
pub fn step_dynamics(x: Vec2, v: Vec2, a: Vec2, dt: f64) -> (Vec2, Vec2) {
    (x + dt * v + (0.5 * dt * dt) * a, v + dt * a)
}

/// Payload sample points `c·x1 + (1 − c)·x2` for `c = 0, 1/n, …, 1`.
pub fn payload_points(x1: Vec2, x2: Vec2, divisions: usize) -> Vec<Vec2> {
    (0..=divisions)
        .map(|q| {
            let c = q as f64 / divisions as f64;
            x2 + c * (x1 - x2)
        })
        .collect()
}

/// Constraint residuals grouped as in the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResiduals {
    pub equality: [Vec<f64>; 2],
    pub private: [Vec<f64>; 2],
    pub shared: Vec<f64>,
}

impl ConstraintResiduals {
    pub fn h(&self, p: Player) -> &[f64] {
        &self.equality[p.index()]
    }
    pub fn g(&self, p: Player) -> &[f64] {
        &self.private[p.index()]
    }
    pub fn c_shared(&self) -> &[f64] {
        &self.shared
    }
}

/// Value, gradient and (constant) Hessian of one constraint at a point.
/// Gradient and Hessian entries are indexed into the decision vector.
#[derive(Debug, Clone, Default)]
pub struct LocalDerivs {
    pub value: f64,
    pub grad: ArrayVec<(usize, f64), 6>,
    pub hess: ArrayVec<(usize, usize, f64), 8>,
}

/// Borrowed decision vector.
#[derive(Clone, Copy)]
pub(crate) struct ZView<'a> {
    pub layout: Layout,
    pub data: &'a [f64],
}

impl ZView<'_> {
    fn at(&self, i: usize) -> Vec2 {
        Vec2::new(self.data[i], self.data[i + 1])
    }
    pub fn pos(&self, p: Player, k: usize) -> Vec2 {
        self.at(self.layout.pos(p, k))
    }
    pub fn vel(&self, p: Player, k: usize) -> Vec2 {
        self.at(self.layout.vel(p, k))
    }
    pub fn acc(&self, p: Player, k: usize) -> Vec2 {
        self.at(self.layout.acc(p, k))
    }
    pub fn slack(&self, k: usize) -> f64 {
        self.data[self.layout.slack(k)]
    }
}

/// A validated game with its layout and constraint catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct GameModel {
    spec: GameSpec,
    layout: Layout,
    catalog: ConstraintCatalog,
    slack_owner: Player,
}

impl GameModel {
    pub fn new(spec: GameSpec) -> Result<Self, GameError> {
        spec.validate()?;
        Ok(Self::build(spec, Player::Robot))
    }

    fn build(spec: GameSpec, slack_owner: Player) -> Self {
        let layout = Layout::new(spec.horizon);
        let catalog = ConstraintCatalog::new(&spec, slack_owner);
        Self {
            spec,
            layout,
            catalog,
            slack_owner,
        }
    }

    /// The same game with the players' roles exchanged: agent parameters
    /// swapped, `α ↦ 1 − α`, and the slack block owned by the new player 1.
    pub fn mirrored(&self) -> Self {
        let mut spec = self.spec.clone();
        std::mem::swap(&mut spec.human, &mut spec.robot);
        spec.alpha = 1.0 - spec.alpha;
        Self::build(spec, self.slack_owner.other())
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn catalog(&self) -> &ConstraintCatalog {
        &self.catalog
    }

    pub fn slack_owner(&self) -> Player {
        self.slack_owner
    }

    pub fn owner(&self, i: usize) -> Player {
        self.layout.owner(i, self.slack_owner)
    }

    /// Decision-vector indices controlled by `p`, in increasing order.
    pub fn player_indices(&self, p: Player) -> Vec<usize> {
        let mut idx: Vec<usize> = self.layout.block(p).collect();
        if p == self.slack_owner {
            idx.extend(self.layout.slack_block());
        }
        idx
    }

    pub(crate) fn view<'a>(&self, z: &'a [f64]) -> ZView<'a> {
        debug_assert_eq!(z.len(), self.layout.len());
        ZView {
            layout: self.layout,
            data: z,
        }
    }

    fn check(&self, z: &DecisionVector) -> Result<(), GameError> {
        if z.layout() != self.layout {
            return Err(GameError::Dimension {
                expected: self.layout.len(),
                got: z.as_slice().len(),
            });
        }
        Ok(())
    }

    /// All constraint residuals in `≤ 0` / `= 0` form.
    pub fn evaluate_constraints(&self, z: &DecisionVector) -> Result<ConstraintResiduals, GameError> {
        self.check(z)?;
        Ok(self.constraint_values(z.as_slice()))
    }

    pub(crate) fn constraint_values(&self, z: &[f64]) -> ConstraintResiduals {
        let v = self.view(z);
        let eval = |list: &[ConstraintEntry]| list.iter().map(|e| self.value(e, v)).collect::<Vec<_>>();
        ConstraintResiduals {
            equality: [
                eval(&self.catalog.equalities[0]),
                eval(&self.catalog.equalities[1]),
            ],
            private: [eval(&self.catalog.private[0]), eval(&self.catalog.private[1])],
            shared: eval(&self.catalog.shared),
        }
    }

    fn value(&self, e: &ConstraintEntry, z: ZView<'_>) -> f64 {
        let s = &self.spec;
        let k = e.step;
        let dt = s.dt;
        match e.kind {
            ConstraintKind::PinPosition => {
                let p = e.player.unwrap();
                let a = e.axis.unwrap();
                z.pos(p, 0).component(a) - s.agent(p).x0.component(a)
            }
            ConstraintKind::PinVelocity => {
                let p = e.player.unwrap();
                let a = e.axis.unwrap();
                z.vel(p, 0).component(a) - s.agent(p).v0.component(a)
            }
            ConstraintKind::DynamicsPosition => {
                let p = e.player.unwrap();
                let (next, _) = step_dynamics(z.pos(p, k), z.vel(p, k), z.acc(p, k), dt);
                (z.pos(p, k + 1) - next).component(e.axis.unwrap())
            }
            ConstraintKind::DynamicsVelocity => {
                let p = e.player.unwrap();
                let (_, next) = step_dynamics(z.pos(p, k), z.vel(p, k), z.acc(p, k), dt);
                (z.vel(p, k + 1) - next).component(e.axis.unwrap())
            }
            ConstraintKind::Speed => {
                let p = e.player.unwrap();
                z.vel(p, k).norm_sq() - s.agent(p).v_max.powi(2)
            }
            ConstraintKind::Acceleration => {
                let p = e.player.unwrap();
                z.acc(p, k).norm_sq() - s.agent(p).a_max.powi(2)
            }
            ConstraintKind::SlackSign => -z.slack(k),
            ConstraintKind::BandLower => {
                let dist_sq = (z.pos(Player::Human, k) - z.pos(Player::Robot, k)).norm_sq();
                (s.payload_length - s.band_epsilon).powi(2) - z.slack(k) - dist_sq
            }
            ConstraintKind::BandUpper => {
                let dist_sq = (z.pos(Player::Human, k) - z.pos(Player::Robot, k)).norm_sq();
                dist_sq - (s.payload_length + s.band_epsilon).powi(2) - z.slack(k)
            }
            ConstraintKind::Clearance => {
                let obs = &s.obstacles[e.obstacle.unwrap()];
                let c = e.sample.unwrap() as f64 / s.segment_divisions as f64;
                let point = c * z.pos(Player::Human, k) + (1.0 - c) * z.pos(Player::Robot, k);
                obs.radius.powi(2) - (point - obs.center).norm_sq()
            }
        }
    }

    /// Closed-form value, gradient and Hessian of one constraint.
    pub fn constraint_derivs(&self, e: &ConstraintEntry, z: &[f64]) -> LocalDerivs {
        let s = &self.spec;
        let l = self.layout;
        let zv = self.view(z);
        let k = e.step;
        let dt = s.dt;
        let mut d = LocalDerivs::default();
        match e.kind {
            ConstraintKind::PinPosition | ConstraintKind::PinVelocity => {
                let p = e.player.unwrap();
                let a = e.axis.unwrap();
                let (i, target) = if e.kind == ConstraintKind::PinPosition {
                    (l.pos(p, 0) + a, s.agent(p).x0.component(a))
                } else {
                    (l.vel(p, 0) + a, s.agent(p).v0.component(a))
                };
                d.value = z[i] - target;
                d.grad.push((i, 1.0));
            }
            ConstraintKind::DynamicsPosition => {
                let p = e.player.unwrap();
                let a = e.axis.unwrap();
                let (xn, x, v, u) = (l.pos(p, k + 1) + a, l.pos(p, k) + a, l.vel(p, k) + a, l.acc(p, k) + a);
                let half = 0.5 * dt * dt;
                d.value = z[xn] - z[x] - dt * z[v] - half * z[u];
                d.grad.extend([(xn, 1.0), (x, -1.0), (v, -dt), (u, -half)]);
            }
            ConstraintKind::DynamicsVelocity => {
                let p = e.player.unwrap();
                let a = e.axis.unwrap();
                let (vn, v, u) = (l.vel(p, k + 1) + a, l.vel(p, k) + a, l.acc(p, k) + a);
                d.value = z[vn] - z[v] - dt * z[u];
                d.grad.extend([(vn, 1.0), (v, -1.0), (u, -dt)]);
            }
            ConstraintKind::Speed | ConstraintKind::Acceleration => {
                let p = e.player.unwrap();
                let (i, bound) = if e.kind == ConstraintKind::Speed {
                    (l.vel(p, k), s.agent(p).v_max)
                } else {
                    (l.acc(p, k), s.agent(p).a_max)
                };
                d.value = z[i] * z[i] + z[i + 1] * z[i + 1] - bound * bound;
                d.grad.extend([(i, 2.0 * z[i]), (i + 1, 2.0 * z[i + 1])]);
                d.hess.extend([(i, i, 2.0), (i + 1, i + 1, 2.0)]);
            }
            ConstraintKind::SlackSign => {
                let i = l.slack(k);
                d.value = -z[i];
                d.grad.push((i, -1.0));
            }
            ConstraintKind::BandLower | ConstraintKind::BandUpper => {
                let (h, r, si) = (l.pos(Player::Human, k), l.pos(Player::Robot, k), l.slack(k));
                let delta = zv.pos(Player::Human, k) - zv.pos(Player::Robot, k);
                let dist_sq = delta.norm_sq();
                // sign = +1 for the upper bound, −1 for the lower.
                let sign = if e.kind == ConstraintKind::BandUpper { 1.0 } else { -1.0 };
                d.value = if sign > 0.0 {
                    dist_sq - (s.payload_length + s.band_epsilon).powi(2) - z[si]
                } else {
                    (s.payload_length - s.band_epsilon).powi(2) - z[si] - dist_sq
                };
                for a in 0..2 {
                    let g = sign * 2.0 * delta.component(a);
                    d.grad.push((h + a, g));
                    d.grad.push((r + a, -g));
                }
                d.grad.push((si, -1.0));
                for a in 0..2 {
                    let c = sign * 2.0;
                    d.hess.extend([(h + a, h + a, c), (r + a, r + a, c), (h + a, r + a, -c), (r + a, h + a, -c)]);
                }
            }
            ConstraintKind::Clearance => {
                let obs = &s.obstacles[e.obstacle.unwrap()];
                let c = e.sample.unwrap() as f64 / s.segment_divisions as f64;
                let (h, r) = (l.pos(Player::Human, k), l.pos(Player::Robot, k));
                let point = c * zv.pos(Player::Human, k) + (1.0 - c) * zv.pos(Player::Robot, k);
                let off = point - obs.center;
                d.value = obs.radius.powi(2) - off.norm_sq();
                let wc = [c, 1.0 - c];
                for a in 0..2 {
                    d.grad.push((h + a, -2.0 * c * off.component(a)));
                    d.grad.push((r + a, -2.0 * (1.0 - c) * off.component(a)));
                }
                let base = [h, r];
                for a in 0..2 {
                    for (bi, wi) in base.iter().zip(wc) {
                        for (bj, wj) in base.iter().zip(wc) {
                            d.hess.push((bi + a, bj + a, -2.0 * wi * wj));
                        }
                    }
                }
            }
        }
        d
    }

    /// Costs `(Ĵ₁, Ĵ₂)`.
    pub fn evaluate_costs(&self, z: &DecisionVector) -> Result<[f64; 2], GameError> {
        self.check(z)?;
        Ok(self.cost_values(z.as_slice()))
    }

    pub(crate) fn cost_values(&self, z: &[f64]) -> [f64; 2] {
        let zv = self.view(z);
        let s = &self.spec;
        let n = s.horizon;
        Player::BOTH.map(|p| {
            let target = s.agent(p).target;
            let tracking: f64 = (1..=n).map(|k| (zv.pos(p, k) - target).norm_sq()).sum();
            let effort: f64 = (0..n).map(|k| zv.acc(p, k).norm_sq()).sum();
            let mut cost = tracking + s.effort_weight * effort;
            if p == self.slack_owner {
                cost += s.slack_weight * (0..=n).map(|k| zv.slack(k).powi(2)).sum::<f64>();
            }
            cost
        })
    }

    /// Adds `∇Ĵ_p` into `out` (full decision-vector length; only `p`'s
    /// entries are touched).
    pub fn add_cost_gradient(&self, p: Player, z: &[f64], out: &mut [f64]) {
        let s = &self.spec;
        let l = self.layout;
        let target = s.agent(p).target;
        for k in 1..=s.horizon {
            let i = l.pos(p, k);
            out[i] += 2.0 * (z[i] - target.x);
            out[i + 1] += 2.0 * (z[i + 1] - target.y);
        }
        for k in 0..s.horizon {
            let i = l.acc(p, k);
            out[i] += 2.0 * s.effort_weight * z[i];
            out[i + 1] += 2.0 * s.effort_weight * z[i + 1];
        }
        if p == self.slack_owner {
            for i in l.slack_block() {
                out[i] += 2.0 * s.slack_weight * z[i];
            }
        }
    }

    /// Diagonal of `∇²Ĵ_p`; the costs are separable quadratics.
    pub fn cost_hessian_diagonal(&self, p: Player) -> Vec<(usize, f64)> {
        let s = &self.spec;
        let l = self.layout;
        let mut out = Vec::new();
        for k in 1..=s.horizon {
            let i = l.pos(p, k);
            out.extend([(i, 2.0), (i + 1, 2.0)]);
        }
        for k in 0..s.horizon {
            let i = l.acc(p, k);
            out.extend([(i, 2.0 * s.effort_weight), (i + 1, 2.0 * s.effort_weight)]);
        }
        if p == self.slack_owner {
            out.extend(l.slack_block().map(|i| (i, 2.0 * s.slack_weight)));
        }
        out
    }

    /// Gradient of each player's cost restricted to that player's own
    /// variables (ordered as [`GameModel::player_indices`]).
    pub fn cost_gradients(&self, z: &DecisionVector) -> Result<[Vec<f64>; 2], GameError> {
        self.check(z)?;
        Ok(Player::BOTH.map(|p| {
            let mut full = vec![0.0; self.layout.len()];
            self.add_cost_gradient(p, z.as_slice(), &mut full);
            self.player_indices(p).into_iter().map(|i| full[i]).collect()
        }))
    }

    /// Sparse gradients of every constraint residual, grouped like
    /// [`ConstraintResiduals`].
    pub fn constraint_gradients(&self, z: &DecisionVector) -> Result<ConstraintGradients, GameError> {
        self.check(z)?;
        let zs = z.as_slice();
        let rows = |list: &[ConstraintEntry]| {
            list.iter()
                .map(|e| self.constraint_derivs(e, zs).grad.to_vec())
                .collect::<Vec<_>>()
        };
        Ok(ConstraintGradients {
            equality: [
                rows(&self.catalog.equalities[0]),
                rows(&self.catalog.equalities[1]),
            ],
            private: [rows(&self.catalog.private[0]), rows(&self.catalog.private[1])],
            shared: rows(&self.catalog.shared),
        })
    }

    /// Initial-guess trajectory for one player: straight line toward the
    /// target at top speed, stopping on arrival.
    pub fn straight_line_plan(&self, p: Player, x0: Vec2) -> (Vec<Vec2>, Vec<Vec2>) {
        let agent = self.spec.agent(p);
        let to_go = agent.target - x0;
        let dist = to_go.norm();
        let dir = if dist > 0.0 { to_go * (1.0 / dist) } else { Vec2::ZERO };
        let n = self.spec.horizon;
        let mut xs = Vec::with_capacity(n + 1);
        let mut vs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let travelled = (k as f64 * self.spec.dt * agent.v_max).min(dist);
            xs.push(x0 + travelled * dir);
            let moving = travelled < dist;
            vs.push(if moving && k > 0 { agent.v_max * dir } else { Vec2::ZERO });
        }
        (xs, vs)
    }
}

/// Sparse constraint gradients, one `(index, ∂/∂z_index)` list per constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGradients {
    pub equality: [Vec<Vec<(usize, f64)>>; 2],
    pub private: [Vec<Vec<(usize, f64)>>; 2],
    pub shared: Vec<Vec<(usize, f64)>>,
}
