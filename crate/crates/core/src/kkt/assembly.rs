use crate::game::{ConstraintEntry, DecisionVector, GameError, GameModel, GameSpec, Player};
use crate::mcp::linalg::{factor_in_place, lu_solve};
use crate::mcp::{DenseMatrix, McProblem, VariableBounds};

use super::{KktLayout, KktPoint, MultiplierSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Equality(Player),
    Private(Player),
    /// Index into the shared list.
    Shared(usize),
}

#[derive(Debug, Clone)]
struct Row {
    entry: ConstraintEntry,
    role: Role,
    /// Position of the dual variable (and of the complementarity row) in `w`.
    dual: usize,
}

/// The joint KKT system as a mixed complementarity problem.
#[derive(Debug, Clone)]
pub struct GameKkt {
    model: GameModel,
    layout: KktLayout,
    /// Per-shared-constraint weight carried by each player.
    weights: [Vec<f64>; 2],
    rows: Vec<Row>,
    bounds: VariableBounds,
}

/// Validates `spec` and builds its KKT system with scalar `α` weights.
pub fn assemble_kkt(spec: GameSpec) -> Result<GameKkt, GameError> {
    Ok(GameKkt::new(GameModel::new(spec)?))
}

impl GameKkt {
    pub fn new(model: GameModel) -> Self {
        let m = model.catalog().shared_count();
        let weights = Player::BOTH.map(|p| vec![model.spec().shared_share(p); m]);
        Self::build(model, weights)
    }

    /// Diagonal weight matrices given entry-wise; each pair of weights must
    /// be positive. Scalar `α` corresponds to `[α; m]` and `[1 − α; m]`.
    #[doc(hidden)]
    pub fn with_shared_weights(model: GameModel, weights: [Vec<f64>; 2]) -> Result<Self, GameError> {
        let m = model.catalog().shared_count();
        for w in &weights {
            if w.len() != m {
                return Err(GameError::Dimension {
                    expected: m,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(GameError::Invalid {
                    field: "shared_weights".into(),
                    reason: "weights must be positive".into(),
                });
            }
        }
        Ok(Self::build(model, weights))
    }

    fn build(model: GameModel, weights: [Vec<f64>; 2]) -> Self {
        let layout = KktLayout::new(&model);
        let c = model.catalog();
        let mut rows = Vec::new();
        for p in Player::BOTH {
            let base = layout.mu(p).start;
            rows.extend(c.equalities[p.index()].iter().enumerate().map(|(j, e)| Row {
                entry: *e,
                role: Role::Equality(p),
                dual: base + j,
            }));
        }
        for p in Player::BOTH {
            let base = layout.lam(p).start;
            rows.extend(c.private[p.index()].iter().enumerate().map(|(j, e)| Row {
                entry: *e,
                role: Role::Private(p),
                dual: base + j,
            }));
        }
        let base = layout.sigma().start;
        rows.extend(c.shared.iter().enumerate().map(|(j, e)| Row {
            entry: *e,
            role: Role::Shared(j),
            dual: base + j,
        }));

        let n = layout.len();
        let mut lower = vec![f64::NEG_INFINITY; n];
        for i in layout.lam(Player::Human).start..n {
            lower[i] = 0.0;
        }
        let bounds = VariableBounds::new(lower, vec![f64::INFINITY; n]).expect("valid bounds");
        Self {
            model,
            layout,
            weights,
            rows,
            bounds,
        }
    }

    pub fn model(&self) -> &GameModel {
        &self.model
    }

    pub fn layout(&self) -> &KktLayout {
        &self.layout
    }

    pub fn alpha(&self) -> f64 {
        self.model.spec().alpha
    }

    pub fn shared_weights(&self) -> &[Vec<f64>; 2] {
        &self.weights
    }

    /// Splits an MCP vector into primal and dual parts.
    pub fn point(&self, w: &[f64]) -> Result<KktPoint, GameError> {
        self.layout.unpack(&self.model, w, self.alpha())
    }

    pub fn pack(&self, point: &KktPoint) -> Result<Vec<f64>, GameError> {
        self.layout.pack(point)
    }

    /// Cold-start guess: each player on a straight line toward its target at
    /// top speed, zero accelerations, slacks and duals.
    pub fn straight_line_guess(&self) -> Vec<f64> {
        let spec = self.model.spec();
        let mut z = DecisionVector::zeros(self.model.layout());
        for p in Player::BOTH {
            let (xs, vs) = self.model.straight_line_plan(p, spec.agent(p).x0);
            for (k, (x, v)) in xs.into_iter().zip(vs).enumerate() {
                z.set_pos(p, k, x);
                z.set_vel(p, k, v);
            }
            z.set_vel(p, 0, spec.agent(p).v0);
        }
        let point = KktPoint {
            z,
            duals: MultiplierSet::zeros(self.model.catalog()),
            alpha: self.alpha(),
        };
        self.layout.pack(&point).expect("consistent layout")
    }

    /// Overwrites the equality duals in `w` with the values that zero the
    /// stationarity rows of every position and velocity, given the primal
    /// part and the inequality duals. Those rows form a square, invertible
    /// system in the equality duals because the dynamics are linear; this is
    /// the discrete costate recursion.
    pub fn fit_equality_duals(&self, w: &mut [f64]) {
        let l = &self.layout;
        let z = w[l.z()].to_vec();
        let z = &z[..];
        let sigma = &w[l.sigma()];
        let scaled: [Vec<f64>; 2] = [0, 1].map(|p| sigma.iter().zip(&self.weights[p]).map(|(s, a)| a * s).collect());
        let zero = [vec![0.0; l.mu(Player::Human).len()], vec![0.0; l.mu(Player::Robot).len()]];
        let r = self.stationarity_with_scaled_duals(
            z,
            [&zero[0], &zero[1]],
            [&w[l.lam(Player::Human)], &w[l.lam(Player::Robot)]],
            [&scaled[0], &scaled[1]],
        );
        let layout = self.model.layout();
        let n = layout.horizon();
        for p in Player::BOTH {
            let vars: Vec<usize> = (0..=n)
                .flat_map(|k| [layout.pos(p, k), layout.pos(p, k) + 1, layout.vel(p, k), layout.vel(p, k) + 1])
                .collect();
            let slot: std::collections::HashMap<usize, usize> = vars.iter().enumerate().map(|(r, &v)| (v, r)).collect();
            let eqs = &self.model.catalog().equalities[p.index()];
            let mut a = DenseMatrix::zeros(vars.len(), eqs.len());
            for (j, e) in eqs.iter().enumerate() {
                for &(i, g) in &self.model.constraint_derivs(e, z).grad {
                    if let Some(&row) = slot.get(&i) {
                        a.row_mut(row)[j] += g;
                    }
                }
            }
            let rhs: Vec<f64> = vars.iter().map(|&v| -r[v]).collect();
            if let Ok(pivots) = factor_in_place(&mut a) {
                let mut mu = vec![0.0; eqs.len()];
                lu_solve(&a, &pivots, &rhs, &mut mu);
                w[l.mu(p)].copy_from_slice(&mu);
            }
        }
    }

    /// Stationarity rows `∇Ĵ_p + ∇h_pᵀμ_p + ∇g_pᵀλ_p + ∇cᵀσ_p` over the whole
    /// decision vector, each row taken from the player owning that entry.
    /// The shared duals are given already scaled, one vector per player.
    pub fn stationarity_with_scaled_duals(
        &self,
        z: &[f64],
        mu: [&[f64]; 2],
        lam: [&[f64]; 2],
        sigma_scaled: [&[f64]; 2],
    ) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for p in Player::BOTH {
            self.model.add_cost_gradient(p, z, &mut out);
        }
        for row in &self.rows {
            let d = self.model.constraint_derivs(&row.entry, z);
            let y = match row.role {
                Role::Equality(p) => {
                    let j = row.dual - self.layout.mu(p).start;
                    per_player(p, mu[p.index()][j])
                }
                Role::Private(p) => {
                    let j = row.dual - self.layout.lam(p).start;
                    per_player(p, lam[p.index()][j])
                }
                Role::Shared(j) => [sigma_scaled[0][j], sigma_scaled[1][j]],
            };
            for &(i, g) in &d.grad {
                out[i] += y[self.model.owner(i).index()] * g;
            }
        }
        out
    }
}

/// Dual value seen by each player's stationarity rows for a constraint
/// owned by `p` alone.
fn per_player(p: Player, y: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    out[p.index()] = y;
    out
}

impl McProblem for GameKkt {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn bounds(&self) -> &VariableBounds {
        &self.bounds
    }

    fn residual(&self, w: &[f64], out: &mut [f64]) {
        let l = &self.layout;
        let z = &w[l.z()];
        let sigma = &w[l.sigma()];
        let scaled: [Vec<f64>; 2] = [0, 1].map(|p| sigma.iter().zip(&self.weights[p]).map(|(s, a)| a * s).collect());
        let stat = self.stationarity_with_scaled_duals(
            z,
            [&w[l.mu(Player::Human)], &w[l.mu(Player::Robot)]],
            [&w[l.lam(Player::Human)], &w[l.lam(Player::Robot)]],
            [&scaled[0], &scaled[1]],
        );
        out[l.z()].copy_from_slice(&stat);
        let values = self.model.constraint_values(z);
        for p in Player::BOTH {
            out[l.mu(p)].copy_from_slice(values.h(p));
            for (o, g) in out[l.lam(p)].iter_mut().zip(values.g(p)) {
                *o = -g;
            }
        }
        for (o, c) in out[l.sigma()].iter_mut().zip(values.c_shared()) {
            *o = -c;
        }
    }

    fn jacobian(&self, w: &[f64], out: &mut DenseMatrix) {
        let z = &w[self.layout.z()];
        for p in Player::BOTH {
            for (i, v) in self.model.cost_hessian_diagonal(p) {
                out.row_mut(i)[i] += v;
            }
        }
        for row in &self.rows {
            let d = self.model.constraint_derivs(&row.entry, z);
            let y = w[row.dual];
            // Column weight of this dual in each player's rows, and the sign of
            // its own complementarity row.
            let (col, sign) = match row.role {
                Role::Equality(p) => (per_player(p, 1.0), 1.0),
                Role::Private(p) => (per_player(p, 1.0), -1.0),
                Role::Shared(j) => ([self.weights[0][j], self.weights[1][j]], -1.0),
            };
            for &(i, g) in &d.grad {
                out.row_mut(i)[row.dual] += col[self.model.owner(i).index()] * g;
                out.row_mut(row.dual)[i] += sign * g;
            }
            for &(i, j, h) in &d.hess {
                out.row_mut(i)[j] += col[self.model.owner(i).index()] * y * h;
            }
        }
    }

    /// Time-stage ordering: the primal entries of step `k`, then the duals of
    /// constraints indexed by `k`. Every constraint couples at most two
    /// neighbouring steps, so the reordered Newton matrix is banded.
    fn ordering(&self) -> Option<Vec<usize>> {
        let layout = self.model.layout();
        let n = layout.horizon();
        let mut stage = vec![(0, 0); self.layout.len()];
        for k in 0..=n {
            for p in Player::BOTH {
                for axis in 0..2 {
                    stage[layout.pos(p, k) + axis] = (k, 0);
                    stage[layout.vel(p, k) + axis] = (k, 0);
                    if k < n {
                        stage[layout.acc(p, k) + axis] = (k, 0);
                    }
                }
            }
            stage[layout.slack(k)] = (k, 0);
        }
        for row in &self.rows {
            stage[row.dual] = (row.entry.step, 1);
        }
        let mut order: Vec<usize> = (0..stage.len()).collect();
        order.sort_by_key(|&i| stage[i]);
        Some(order)
    }
}
