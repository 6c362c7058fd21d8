//! Flat index layout of the joint decision vector.
//!
//! Order: human block, robot block, slack block. Each player block holds
//! positions `x(0..=N)`, then velocities `v(0..=N)`, then accelerations
//! `a(0..N)`, every vector stored as consecutive `(x, y)` pairs. The slack
//! block holds `s(0..=N)`.

use serde::{Deserialize, Serialize};

use super::{GameError, Player, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    horizon: usize,
}

impl Layout {
    pub fn new(horizon: usize) -> Self {
        Self { horizon }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Length of one player block, `6N + 4`.
    pub fn block_len(&self) -> usize {
        6 * self.horizon + 4
    }

    /// Total length, `2(6N + 4) + N + 1`.
    pub fn len(&self) -> usize {
        2 * self.block_len() + self.horizon + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn offset(&self, p: Player) -> usize {
        p.index() * self.block_len()
    }

    /// Index of the x-component of `x_p(k)`.
    pub fn pos(&self, p: Player, k: usize) -> usize {
        debug_assert!(k <= self.horizon);
        self.offset(p) + 2 * k
    }

    pub fn vel(&self, p: Player, k: usize) -> usize {
        debug_assert!(k <= self.horizon);
        self.offset(p) + 2 * (self.horizon + 1) + 2 * k
    }

    pub fn acc(&self, p: Player, k: usize) -> usize {
        debug_assert!(k < self.horizon);
        self.offset(p) + 4 * (self.horizon + 1) + 2 * k
    }

    pub fn slack(&self, k: usize) -> usize {
        debug_assert!(k <= self.horizon);
        2 * self.block_len() + k
    }

    pub fn block(&self, p: Player) -> std::ops::Range<usize> {
        self.offset(p)..self.offset(p) + self.block_len()
    }

    pub fn slack_block(&self) -> std::ops::Range<usize> {
        2 * self.block_len()..self.len()
    }

    /// Player owning entry `i`, given which player owns the slacks.
    pub fn owner(&self, i: usize, slack_owner: Player) -> Player {
        let b = self.block_len();
        if i < b {
            Player::Human
        } else if i < 2 * b {
            Player::Robot
        } else {
            slack_owner
        }
    }
}

/// One player's planned trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerPlan {
    /// `x(0..=N)`
    pub positions: Vec<Vec2>,
    /// `v(0..=N)`
    pub velocities: Vec<Vec2>,
    /// `a(0..N)`
    pub accelerations: Vec<Vec2>,
}

impl PlayerPlan {
    /// Plan at rest at `x` over `horizon` steps.
    pub fn stationary(x: Vec2, horizon: usize) -> Self {
        Self {
            positions: vec![x; horizon + 1],
            velocities: vec![Vec2::ZERO; horizon + 1],
            accelerations: vec![Vec2::ZERO; horizon],
        }
    }
}

/// Joint decision vector with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    layout: Layout,
    data: Vec<f64>,
}

impl DecisionVector {
    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            data: vec![0.0; layout.len()],
        }
    }

    pub fn from_vec(layout: Layout, data: Vec<f64>) -> Result<Self, GameError> {
        if data.len() != layout.len() {
            return Err(GameError::Dimension {
                expected: layout.len(),
                got: data.len(),
            });
        }
        Ok(Self { layout, data })
    }

    pub fn pack(plans: [&PlayerPlan; 2], slacks: &[f64]) -> Result<Self, GameError> {
        let horizon = plans[0].accelerations.len();
        let layout = Layout::new(horizon);
        let mut z = Self::zeros(layout);
        for (p, plan) in Player::BOTH.into_iter().zip(plans) {
            let ok = plan.positions.len() == horizon + 1
                && plan.velocities.len() == horizon + 1
                && plan.accelerations.len() == horizon;
            if !ok {
                return Err(GameError::Dimension {
                    expected: horizon,
                    got: plan.accelerations.len(),
                });
            }
            for k in 0..=horizon {
                z.set_pos(p, k, plan.positions[k]);
                z.set_vel(p, k, plan.velocities[k]);
            }
            for k in 0..horizon {
                z.set_acc(p, k, plan.accelerations[k]);
            }
        }
        if slacks.len() != horizon + 1 {
            return Err(GameError::Dimension {
                expected: horizon + 1,
                got: slacks.len(),
            });
        }
        z.data[layout.slack_block()].copy_from_slice(slacks);
        Ok(z)
    }

    pub fn unpack(&self) -> ([PlayerPlan; 2], Vec<f64>) {
        let n = self.layout.horizon();
        let plan = |p| PlayerPlan {
            positions: (0..=n).map(|k| self.pos(p, k)).collect(),
            velocities: (0..=n).map(|k| self.vel(p, k)).collect(),
            accelerations: (0..n).map(|k| self.acc(p, k)).collect(),
        };
        (
            [plan(Player::Human), plan(Player::Robot)],
            self.data[self.layout.slack_block()].to_vec(),
        )
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn get2(&self, i: usize) -> Vec2 {
        Vec2::new(self.data[i], self.data[i + 1])
    }

    fn set2(&mut self, i: usize, v: Vec2) {
        self.data[i] = v.x;
        self.data[i + 1] = v.y;
    }

    pub fn pos(&self, p: Player, k: usize) -> Vec2 {
        self.get2(self.layout.pos(p, k))
    }

    pub fn vel(&self, p: Player, k: usize) -> Vec2 {
        self.get2(self.layout.vel(p, k))
    }

    pub fn acc(&self, p: Player, k: usize) -> Vec2 {
        self.get2(self.layout.acc(p, k))
    }

    pub fn slack(&self, k: usize) -> f64 {
        self.data[self.layout.slack(k)]
    }

    pub fn set_pos(&mut self, p: Player, k: usize, v: Vec2) {
        self.set2(self.layout.pos(p, k), v)
    }

    pub fn set_vel(&mut self, p: Player, k: usize, v: Vec2) {
        self.set2(self.layout.vel(p, k), v)
    }

    pub fn set_acc(&mut self, p: Player, k: usize, v: Vec2) {
        self.set2(self.layout.acc(p, k), v)
    }

    pub fn set_slack(&mut self, k: usize, s: f64) {
        let i = self.layout.slack(k);
        self.data[i] = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn length_formula() {
        for n in 1..15 {
            let l = Layout::new(n);
            assert_eq!(l.len(), 2 * (6 * n + 4) + n + 1);
        }
        assert_eq!(Layout::new(10).len(), 139);
    }

    #[test]
    fn index_map_is_bijective() {
        let n = 4;
        let l = Layout::new(n);
        let mut seen = vec![0usize; l.len()];
        for p in Player::BOTH {
            for k in 0..=n {
                seen[l.pos(p, k)] += 1;
                seen[l.pos(p, k) + 1] += 1;
                seen[l.vel(p, k)] += 1;
                seen[l.vel(p, k) + 1] += 1;
            }
            for k in 0..n {
                seen[l.acc(p, k)] += 1;
                seen[l.acc(p, k) + 1] += 1;
            }
        }
        for k in 0..=n {
            seen[l.slack(k)] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn pack_rejects_wrong_slack_length() {
        let p = PlayerPlan::stationary(Vec2::ZERO, 3);
        assert!(DecisionVector::pack([&p, &p], &[0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(n in 1usize..6, values in proptest::collection::vec(-10.0f64..10.0, 200)) {
            let l = Layout::new(n);
            let z = DecisionVector::from_vec(l, values[..l.len()].to_vec()).unwrap();
            let (plans, slacks) = z.unpack();
            let back = DecisionVector::pack([&plans[0], &plans[1]], &slacks).unwrap();
            prop_assert_eq!(back, z);
        }
    }
}
