//! Enumeration of every constraint in the game, in a fixed order.
//!
//! Multiplier vectors are indexed by position in these lists, so the order
//! below is part of the public contract.
//!
//! - equalities of each player: `x(0)` pin (x, y), `v(0)` pin (x, y), then for
//!   `k = 0..N`: position dynamics (x, y), velocity dynamics (x, y);
//! - private inequalities of each player: speed `k = 1..=N`, acceleration
//!   `k = 0..N`, and for the slack owner, slack sign `k = 0..=N`;
//! - shared inequalities: band lower and upper for `k = 1..=N` (interleaved
//!   per step), then clearance for `k = 1..=N`, each obstacle, each payload
//!   sample `c = 0, 1/n, …, 1`.
//!
//! Every inequality is written as `g ≤ 0`.

use serde::{Deserialize, Serialize};

use super::{GameSpec, Player};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    PinPosition,
    PinVelocity,
    DynamicsPosition,
    DynamicsVelocity,
    Speed,
    Acceleration,
    SlackSign,
    BandLower,
    BandUpper,
    Clearance,
}

impl ConstraintKind {
    pub fn is_shared(self) -> bool {
        matches!(
            self,
            ConstraintKind::BandLower | ConstraintKind::BandUpper | ConstraintKind::Clearance
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub kind: ConstraintKind,
    /// Time index the constraint refers to (`k` of the dynamics step).
    pub step: usize,
    /// Owning player; `None` for shared constraints.
    pub player: Option<Player>,
    /// Axis for per-component equalities.
    pub axis: Option<usize>,
    pub obstacle: Option<usize>,
    /// Payload sample index `q`, coefficient `q / n`.
    pub sample: Option<usize>,
}

impl ConstraintEntry {
    fn owned(kind: ConstraintKind, p: Player, step: usize, axis: Option<usize>) -> Self {
        Self {
            kind,
            step,
            player: Some(p),
            axis,
            obstacle: None,
            sample: None,
        }
    }

    fn shared(kind: ConstraintKind, step: usize) -> Self {
        Self {
            kind,
            step,
            player: None,
            axis: None,
            obstacle: None,
            sample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCatalog {
    pub equalities: [Vec<ConstraintEntry>; 2],
    pub private: [Vec<ConstraintEntry>; 2],
    pub shared: Vec<ConstraintEntry>,
}

impl ConstraintCatalog {
    pub fn new(spec: &GameSpec, slack_owner: Player) -> Self {
        let n = spec.horizon;
        let eq = |p: Player| {
            let mut v = Vec::with_capacity(4 * n + 4);
            for axis in 0..2 {
                v.push(ConstraintEntry::owned(ConstraintKind::PinPosition, p, 0, Some(axis)));
            }
            for axis in 0..2 {
                v.push(ConstraintEntry::owned(ConstraintKind::PinVelocity, p, 0, Some(axis)));
            }
            for k in 0..n {
                for axis in 0..2 {
                    v.push(ConstraintEntry::owned(ConstraintKind::DynamicsPosition, p, k, Some(axis)));
                }
                for axis in 0..2 {
                    v.push(ConstraintEntry::owned(ConstraintKind::DynamicsVelocity, p, k, Some(axis)));
                }
            }
            v
        };
        let private = |p: Player| {
            let mut v = Vec::new();
            for k in 1..=n {
                v.push(ConstraintEntry::owned(ConstraintKind::Speed, p, k, None));
            }
            for k in 0..n {
                v.push(ConstraintEntry::owned(ConstraintKind::Acceleration, p, k, None));
            }
            if p == slack_owner {
                for k in 0..=n {
                    v.push(ConstraintEntry::owned(ConstraintKind::SlackSign, p, k, None));
                }
            }
            v
        };
        let mut shared = Vec::new();
        for k in 1..=n {
            shared.push(ConstraintEntry::shared(ConstraintKind::BandLower, k));
            shared.push(ConstraintEntry::shared(ConstraintKind::BandUpper, k));
        }
        for k in 1..=n {
            for o in 0..spec.obstacles.len() {
                for q in 0..=spec.segment_divisions {
                    shared.push(ConstraintEntry {
                        obstacle: Some(o),
                        sample: Some(q),
                        ..ConstraintEntry::shared(ConstraintKind::Clearance, k)
                    });
                }
            }
        }
        Self {
            equalities: [eq(Player::Human), eq(Player::Robot)],
            private: [private(Player::Human), private(Player::Robot)],
            shared,
        }
    }

    pub fn equality_count(&self, p: Player) -> usize {
        self.equalities[p.index()].len()
    }

    pub fn private_count(&self, p: Player) -> usize {
        self.private[p.index()].len()
    }

    pub fn shared_count(&self) -> usize {
        self.shared.len()
    }
}
