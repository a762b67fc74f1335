//! Backscatter-coefficient block.
//!
//! At fixed trajectory and time split, the delivered bits `G(eta)` appear both
//! as the objective and on the relayed side of the caching constraint, so the
//! block optimum makes that constraint tight (or sits at `eta_max`). Each
//! iteration replaces `G` by its tangent at the current point and solves the
//! linearized equality in closed form, which is a common shift of all
//! coefficients followed by clipping to `[0, eta_max]`.

use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;

use crate::channel::{distance_sq, path_loss, Trajectory};
use crate::math;
use crate::scenario::Scenario;

/// Stop when no coefficient moves by more than this.
pub const ETA_TOL: f64 = 1e-8;
pub const MAX_ETA_ITERS: usize = 100;

/// Fixed per-slot coefficients of the block problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaCoeffs {
    /// `B tau_n dt`.
    pub weight: Vec<f64>,
    /// Backscatter SNR per unit coefficient, `Theta P_s / (d_s^a d_d^a)`.
    pub phi1: Vec<f64>,
    /// Uplink SNR, `omega0 P_s / d_s^a`.
    pub phi2: Vec<f64>,
    /// Received bits plus the cached share.
    pub budget: f64,
}

impl EtaCoeffs {
    pub fn new(traj: &Trajectory, tau: &[f64], sc: &Scenario) -> Self {
        let a = sc.path_loss_exp;
        let mut phi1 = Vec::with_capacity(tau.len());
        let mut phi2 = Vec::with_capacity(tau.len());
        for &q in traj.serving_points() {
            let ls = path_loss(distance_sq(q, sc.source, sc.altitude), a);
            let ld = path_loss(distance_sq(q, sc.destination, sc.altitude), a);
            phi1.push(sc.theta() * sc.p_source / (ls * ld));
            phi2.push(sc.omega0 * sc.p_source / ls);
        }
        let weight: Vec<f64> = tau.iter().map(|t| sc.bandwidth * t * sc.slot_length()).collect();
        let budget = weight.iter().zip(&phi2).map(|(w, p)| w * math::log2_1p(*p)).sum::<f64>() + sc.caching * sc.demand;
        Self { weight, phi1, phi2, budget }
    }

    /// Delivered bits `G(eta)`.
    pub fn delivered(&self, eta: &[f64]) -> f64 {
        self.weight.iter().zip(&self.phi1).zip(eta).map(|((w, p), e)| w * math::log2_1p(p * e)).sum()
    }

    /// Slope of `G` along each coordinate at `eta`.
    pub fn slopes(&self, eta: &[f64]) -> Vec<f64> {
        self.weight.iter().zip(&self.phi1).zip(eta).map(|((w, p), e)| w * p / (LN_2 * (1.0 + p * e))).collect()
    }
}

/// Tangent of the delivered-bit sum at `eta_ref`, evaluated at `eta`.
///
/// Upper-bounds the true sum by concavity, with equality at `eta_ref`.
pub fn surrogate_rate_upper(eta: &[f64], eta_ref: &[f64], tau: &[f64], traj: &Trajectory, sc: &Scenario) -> f64 {
    let c = EtaCoeffs::new(traj, tau, sc);
    c.delivered(eta_ref) + c.slopes(eta_ref).iter().zip(eta.iter().zip(eta_ref)).map(|(s, (e, r))| s * (e - r)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaSolution {
    pub eta: Vec<f64>,
    /// Tangent iterations performed.
    pub iterations: usize,
    /// Delivered bits after each iteration.
    pub trace: Vec<f64>,
    /// Delivered bits at `eta`.
    pub objective: f64,
    /// Received plus cached bits minus delivered bits (non-negative when feasible).
    pub caching_slack: f64,
    /// Delivered bits minus demand.
    pub demand_slack: f64,
    /// The coefficients had to be lowered after the iterations to restore the
    /// caching constraint.
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EtaError {
    Length { tau: usize, slots: usize },
    /// Every slot harvests all the time, so nothing depends on `eta`.
    Degenerate,
    /// The demand cannot be met even at the best coefficients. Carries them.
    DemandUnreachable { best: EtaSolution },
}

impl fmt::Display for EtaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaError::Length { tau, slots } => write!(f, "{tau} ratios for {slots} slots"),
            EtaError::Degenerate => write!(f, "all time-splitting ratios are zero"),
            EtaError::DemandUnreachable { best } => {
                write!(f, "demand unreachable, best coefficients deliver {:e} bits", best.objective)
            }
        }
    }
}

impl core::error::Error for EtaError {}

fn shifted(eta: &[f64], s: f64, hi: f64) -> Vec<f64> {
    eta.iter().map(|e| math::clamp(e + s, 0.0, hi)).collect()
}

/// Iterates the closed-form tangent update from `eta_init`.
pub fn solve_eta(traj: &Trajectory, tau: &[f64], sc: &Scenario, eta_init: &[f64]) -> Result<EtaSolution, EtaError> {
    let slots = traj.slots();
    if tau.len() != slots || eta_init.len() != slots {
        return Err(EtaError::Length { tau: tau.len(), slots });
    }
    let c = EtaCoeffs::new(traj, tau, sc);
    solve_eta_on(&c, sc, eta_init)
}

/// [`solve_eta`] on precomputed coefficients.
pub fn solve_eta_on(c: &EtaCoeffs, sc: &Scenario, eta_init: &[f64]) -> Result<EtaSolution, EtaError> {
    let hi = sc.eta_max;
    let mut eta: Vec<f64> = eta_init.iter().map(|&e| math::clamp(e, 0.0, hi)).collect();
    let mut iterations = 0;
    let mut trace = Vec::new();
    for _ in 0..MAX_ETA_ITERS {
        let phi4 = c.delivered(&eta);
        let phi5: f64 = c.slopes(&eta).iter().sum();
        if !(phi5 > 0.0) {
            return Err(EtaError::Degenerate);
        }
        let next = shifted(&eta, (c.budget - phi4) / phi5, hi);
        iterations += 1;
        let moved = next.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        eta = next;
        trace.push(c.delivered(&eta));
        if moved < ETA_TOL {
            break;
        }
    }

    // The tangent step lands on or below the constraint except when the box
    // cut it short; close any remaining gap by a common downward shift.
    let tol = 1e-12 * c.budget.max(1.0);
    let mut repaired = false;
    if c.delivered(&eta) > c.budget + tol {
        repaired = true;
        let (mut lo, mut up) = (-hi, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if c.delivered(&shifted(&eta, mid, hi)) > c.budget {
                up = mid;
            } else {
                lo = mid;
            }
        }
        eta = shifted(&eta, lo, hi);
    }

    let objective = c.delivered(&eta);
    let sol = EtaSolution {
        objective,
        caching_slack: c.budget - objective,
        demand_slack: objective - sc.demand,
        eta,
        iterations,
        trace,
        repaired,
    };
    if objective < sc.demand * (1.0 - 1e-9) {
        return Err(EtaError::DemandUnreachable { best: sol });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests;
