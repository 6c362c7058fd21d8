//! Joint KKT system of the two-player game with α-scaled shared multipliers,
//! plus independent equilibrium checks.
//!
//! The MCP variable vector is `w = (z, μ₁, μ₂, λ₁, λ₂, σ)`. Player 1 carries
//! the shared duals `σ₁ = α·σ` and player 2 carries `σ₂ = (1 − α)·σ`, and the
//! shared complementarity is written once against the unscaled `σ`.

mod assembly;
mod brute;
mod certify;

pub use assembly::{assemble_kkt, GameKkt};
pub use brute::{brute_force_nash_check, BruteForceReport};
pub use certify::{certify_gne, CertificateReport, PlayerCertificate};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::game::{ConstraintCatalog, ConstraintKind, DecisionVector, GameError, GameModel, Player};

/// Dual variables, indexed like the constraint catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSet {
    /// Equality duals of player 1 (free).
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    /// Private inequality duals of player 1 (`≥ 0`).
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
    /// Unscaled shared duals (`≥ 0`), one per shared constraint.
    pub sigma: Vec<f64>,
}

impl MultiplierSet {
    pub fn zeros(catalog: &ConstraintCatalog) -> Self {
        Self {
            mu1: vec![0.0; catalog.equality_count(Player::Human)],
            mu2: vec![0.0; catalog.equality_count(Player::Robot)],
            lam1: vec![0.0; catalog.private_count(Player::Human)],
            lam2: vec![0.0; catalog.private_count(Player::Robot)],
            sigma: vec![0.0; catalog.shared_count()],
        }
    }

    pub fn mu(&self, p: Player) -> &[f64] {
        match p {
            Player::Human => &self.mu1,
            Player::Robot => &self.mu2,
        }
    }

    pub fn lam(&self, p: Player) -> &[f64] {
        match p {
            Player::Human => &self.lam1,
            Player::Robot => &self.lam2,
        }
    }

    /// `σ₁ = α·σ` for the human, `σ₂ = (1 − α)·σ` for the robot.
    pub fn scaled_sigma(&self, p: Player, alpha: f64) -> Vec<f64> {
        let share = match p {
            Player::Human => alpha,
            Player::Robot => 1.0 - alpha,
        };
        self.sigma.iter().map(|s| share * s).collect()
    }

    pub fn matches(&self, catalog: &ConstraintCatalog) -> bool {
        self.mu1.len() == catalog.equality_count(Player::Human)
            && self.mu2.len() == catalog.equality_count(Player::Robot)
            && self.lam1.len() == catalog.private_count(Player::Human)
            && self.lam2.len() == catalog.private_count(Player::Robot)
            && self.sigma.len() == catalog.shared_count()
    }
}

/// A primal-dual point of the joint KKT system.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub z: DecisionVector,
    pub duals: MultiplierSet,
    pub alpha: f64,
}

impl KktPoint {
    /// The same point expressed in [`GameModel::mirrored`] coordinates:
    /// player blocks and duals exchanged, `α ↦ 1 − α`, payload samples
    /// reversed.
    pub fn mirrored(&self, model: &GameModel) -> KktPoint {
        let (plans, slacks) = self.z.unpack();
        let z = DecisionVector::pack([&plans[1], &plans[0]], &slacks).expect("layout preserved");
        let catalog = model.catalog();
        let divisions = model.spec().segment_divisions;
        let sigma = catalog
            .shared
            .iter()
            .map(|e| {
                let target = if e.kind == ConstraintKind::Clearance {
                    let q = divisions - e.sample.unwrap();
                    catalog
                        .shared
                        .iter()
                        .position(|o| o.step == e.step && o.obstacle == e.obstacle && o.sample == Some(q))
                        .unwrap()
                } else {
                    catalog.shared.iter().position(|o| o == e).unwrap()
                };
                self.duals.sigma[target]
            })
            .collect();
        KktPoint {
            z,
            duals: MultiplierSet {
                mu1: self.duals.mu2.clone(),
                mu2: self.duals.mu1.clone(),
                lam1: self.duals.lam2.clone(),
                lam2: self.duals.lam1.clone(),
                sigma,
            },
            alpha: 1.0 - self.alpha,
        }
    }
}

/// Offsets of the blocks inside the MCP vector `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KktLayout {
    z: usize,
    eq: [usize; 2],
    private: [usize; 2],
    shared: usize,
}

impl KktLayout {
    pub fn new(model: &GameModel) -> Self {
        let c = model.catalog();
        Self {
            z: model.layout().len(),
            eq: [c.equality_count(Player::Human), c.equality_count(Player::Robot)],
            private: [c.private_count(Player::Human), c.private_count(Player::Robot)],
            shared: c.shared_count(),
        }
    }

    pub fn len(&self) -> usize {
        self.sigma().end
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn z(&self) -> Range<usize> {
        0..self.z
    }

    pub fn mu(&self, p: Player) -> Range<usize> {
        let start = self.z + if p == Player::Robot { self.eq[0] } else { 0 };
        start..start + self.eq[p.index()]
    }

    pub fn lam(&self, p: Player) -> Range<usize> {
        let base = self.z + self.eq[0] + self.eq[1];
        let start = base + if p == Player::Robot { self.private[0] } else { 0 };
        start..start + self.private[p.index()]
    }

    pub fn sigma(&self) -> Range<usize> {
        let start = self.z + self.eq[0] + self.eq[1] + self.private[0] + self.private[1];
        start..start + self.shared
    }

    pub fn pack(&self, point: &KktPoint) -> Result<Vec<f64>, GameError> {
        let d = &point.duals;
        let parts: [&[f64]; 6] = [
            point.z.as_slice(),
            &d.mu1,
            &d.mu2,
            &d.lam1,
            &d.lam2,
            &d.sigma,
        ];
        let w: Vec<f64> = parts.concat();
        let sizes_ok = point.z.as_slice().len() == self.z
            && d.mu1.len() == self.eq[0]
            && d.mu2.len() == self.eq[1]
            && d.lam1.len() == self.private[0]
            && d.lam2.len() == self.private[1]
            && d.sigma.len() == self.shared;
        if !sizes_ok {
            return Err(GameError::Dimension {
                expected: self.len(),
                got: w.len(),
            });
        }
        Ok(w)
    }

    pub fn unpack(&self, model: &GameModel, w: &[f64], alpha: f64) -> Result<KktPoint, GameError> {
        if w.len() != self.len() {
            return Err(GameError::Dimension {
                expected: self.len(),
                got: w.len(),
            });
        }
        let z = DecisionVector::from_vec(model.layout(), w[self.z()].to_vec())?;
        Ok(KktPoint {
            z,
            duals: MultiplierSet {
                mu1: w[self.mu(Player::Human)].to_vec(),
                mu2: w[self.mu(Player::Robot)].to_vec(),
                lam1: w[self.lam(Player::Human)].to_vec(),
                lam2: w[self.lam(Player::Robot)].to_vec(),
                sigma: w[self.sigma()].to_vec(),
            },
            alpha,
        })
    }
}
