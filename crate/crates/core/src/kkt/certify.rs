//! Equilibrium certificate computed from constraint and cost values only.
//!
//! Each player's Lagrangian is differentiated numerically over that player's
//! own variables, so the check shares no derivative code with the assembled
//! system. Central differences are exact for the quadratic costs and
//! constraints of this game up to rounding.

use serde::{Deserialize, Serialize};

use crate::game::{GameError, GameModel, Player};

use super::KktPoint;

const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerCertificate {
    pub player: Player,
    /// `‖∇_{z_p} L_p‖∞`
    pub stationarity: f64,
    /// Largest violation of `h_p = 0`, `g_p ≤ 0` and `c ≤ 0`.
    pub primal_infeasibility: f64,
    /// Largest negative part of `λ_p` and of the scaled shared duals.
    pub dual_infeasibility: f64,
    /// `max |min(y, −g)|` over the player's inequalities.
    pub complementarity: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub alpha: f64,
    pub tol: f64,
    pub players: [PlayerCertificate; 2],
    pub passed: bool,
}

impl CertificateReport {
    /// Largest of all reported residuals.
    pub fn worst(&self) -> f64 {
        self.players
            .iter()
            .map(|c| c.stationarity.max(c.primal_infeasibility).max(c.dual_infeasibility).max(c.complementarity))
            .fold(0.0, f64::max)
    }
}

/// Checks each player's own KKT conditions, with shared duals `α·σ` for the
/// human and `(1 − α)·σ` for the robot.
pub fn certify_gne(model: &GameModel, point: &KktPoint, tol: f64) -> Result<CertificateReport, GameError> {
    if point.z.layout() != model.layout() {
        return Err(GameError::Dimension {
            expected: model.layout().len(),
            got: point.z.as_slice().len(),
        });
    }
    if !point.duals.matches(model.catalog()) {
        return Err(GameError::Invalid {
            field: "duals".into(),
            reason: "multiplier lengths do not match the constraint catalog".into(),
        });
    }
    let z = point.z.as_slice();
    let values = model.constraint_values(z);
    let players = Player::BOTH.map(|p| {
        let mu = point.duals.mu(p);
        let lam = point.duals.lam(p);
        let sigma = point.duals.scaled_sigma(p, point.alpha);
        let lagrangian = |zz: &[f64]| {
            let v = model.constraint_values(zz);
            model.cost_values(zz)[p.index()] + dot(mu, v.h(p)) + dot(lam, v.g(p)) + dot(&sigma, v.c_shared())
        };
        let mut work = z.to_vec();
        let mut stationarity = 0.0_f64;
        for i in model.player_indices(p) {
            let orig = work[i];
            work[i] = orig + FD_STEP;
            let up = lagrangian(&work);
            work[i] = orig - FD_STEP;
            let down = lagrangian(&work);
            work[i] = orig;
            stationarity = stationarity.max(((up - down) / (2.0 * FD_STEP)).abs());
        }

        let primal = values
            .h(p)
            .iter()
            .map(|h| h.abs())
            .chain(values.g(p).iter().chain(values.c_shared()).map(|g| g.max(0.0)))
            .fold(0.0, f64::max);
        let dual = lam.iter().chain(&sigma).map(|y| (-y).max(0.0)).fold(0.0, f64::max);
        let complementarity = lam
            .iter()
            .zip(values.g(p))
            .chain(sigma.iter().zip(values.c_shared()))
            .map(|(y, g)| y.min(-g).abs())
            .fold(0.0, f64::max);
        let passed = stationarity <= tol && primal <= tol && dual <= tol && complementarity <= tol;
        PlayerCertificate {
            player: p,
            stationarity,
            primal_infeasibility: primal,
            dual_infeasibility: dual,
            complementarity,
            passed,
        }
    });
    let passed = players.iter().all(|c| c.passed);
    Ok(CertificateReport {
        alpha: point.alpha,
        tol,
        players,
        passed,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
