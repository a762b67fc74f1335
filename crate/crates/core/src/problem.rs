//! Objective, bit budgets and constraint residuals of the full problem.

use alloc::vec::Vec;

use crate::channel::{RateVectors, Trajectory};
use crate::dts::Allocation;
use crate::energy::{self, LEDGER_TOL};
use crate::scenario::Scenario;

/// Per-slot quantities the resource blocks work with.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotData {
    pub rates: RateVectors,
    /// Full-slot harvest `chi_n` (J).
    pub chi: Vec<f64>,
    /// Circuit energy for a fully reflecting slot, `dt P_c` (J).
    pub spend: f64,
    pub dt: f64,
}

impl SlotData {
    pub fn new(traj: &Trajectory, eta: &[f64], sc: &Scenario) -> Self {
        let rates = RateVectors::compute(traj, eta, sc);
        let chi = traj.serving_points().iter().map(|&q| energy::chi(q, sc)).collect();
        Self { rates, chi, spend: sc.slot_length() * sc.p_circuit, dt: sc.slot_length() }
    }

    pub fn slots(&self) -> usize {
        self.chi.len()
    }

    /// `sum tau_n dt R_d^n`.
    pub fn delivered(&self, tau: &[f64]) -> f64 {
        tau.iter().zip(&self.rates.r_d).map(|(t, r)| t * self.dt * r).sum()
    }

    /// `sum tau_n dt R_u^n`.
    pub fn received(&self, tau: &[f64]) -> f64 {
        tau.iter().zip(&self.rates.r_u).map(|(t, r)| t * self.dt * r).sum()
    }

    /// Most negative running energy balance (J).
    pub fn min_energy_slack(&self, tau: &[f64]) -> f64 {
        let mut bal = 0.0;
        let mut worst = f64::INFINITY;
        for (t, c) in tau.iter().zip(&self.chi) {
            bal += (1.0 - t) * c - t * self.spend;
            worst = worst.min(bal);
        }
        worst
    }
}

/// Bits delivered to the destination, the quantity being maximized.
pub fn objective(traj: &Trajectory, alloc: &Allocation, sc: &Scenario) -> f64 {
    SlotData::new(traj, &alloc.eta, sc).delivered(&alloc.tau)
}

/// Largest violation per constraint family, in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// Bits relayed beyond what was received plus cached.
    pub caching: f64,
    /// Bits short of the demand.
    pub demand: f64,
    /// Most negative cumulative energy balance, as a positive number (J).
    pub energy: f64,
    /// Largest step beyond `V_max dt` (m).
    pub mobility: f64,
    /// Distance of the pinned waypoints from `q_I`, `q_F` (m).
    pub endpoints: f64,
    /// Largest excursion of tau or eta outside its box.
    pub boxes: f64,
}

/// Caching residual relative tolerance used by feasibility checks.
pub const REL_TOL: f64 = 1e-6;

impl Residuals {
    /// All families except demand hold: caching and mobility within `rel`,
    /// the energy ledger within [`LEDGER_TOL`], boxes and endpoints exactly.
    pub fn feasible_except_demand(&self, sc: &Scenario, delivered: f64, rel: f64) -> bool {
        let bits = delivered.max(sc.caching * sc.demand).max(1.0);
        self.caching <= rel * bits
            && self.energy <= LEDGER_TOL
            && self.mobility <= rel * sc.max_step().max(1e-12)
            && self.endpoints <= 1e-9
            && self.boxes <= 1e-12
    }

    pub fn demand_met(&self, sc: &Scenario, rel: f64) -> bool {
        self.demand <= rel * sc.demand.max(1.0)
    }
}

pub fn residuals(traj: &Trajectory, alloc: &Allocation, sc: &Scenario) -> Residuals {
    let data = SlotData::new(traj, &alloc.eta, sc);
    let delivered = data.delivered(&alloc.tau);
    let received = data.received(&alloc.tau);
    let limit = sc.max_step();
    let mobility = (0..traj.slots()).map(|i| traj.step(i) - limit).fold(0.0, f64::max);
    let endpoints = (traj.points[0] - sc.start).norm().max((traj.points[traj.slots()] - sc.end).norm());
    let tau_box = alloc.tau.iter().map(|&t| (-t).max(t - 1.0)).fold(0.0, f64::max);
    let eta_box = alloc.eta.iter().map(|&e| (-e).max(e - sc.eta_max)).fold(0.0, f64::max);
    Residuals {
        caching: (delivered - received - sc.caching * sc.demand).max(0.0),
        demand: (sc.demand - delivered).max(0.0),
        energy: (-data.min_energy_slack(&alloc.tau)).max(0.0),
        mobility,
        endpoints,
        boxes: tau_box.max(eta_box),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;
    use alloc::vec;

    #[test]
    fn objective_matches_hand_sum() {
        let sc = Scenario { slots: 4, duration: 2.0, v_max: 40.0, ..default_scenario() };
        let traj = Trajectory::straight(&sc);
        let alloc = Allocation { tau: vec![0.2, 0.4, 0.6, 0.8], eta: vec![0.1, 0.2, 0.3, 0.4] };
        let mut expect = 0.0;
        for n in 1..=4 {
            expect += alloc.tau[n - 1] * 0.5 * crate::channel::rate_backscatter(traj.points[n], alloc.eta[n - 1], &sc);
        }
        assert!((objective(&traj, &alloc, &sc) - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn residuals_of_zero_schedule() {
        let sc = Scenario { slots: 4, duration: 2.0, v_max: 40.0, ..default_scenario() };
        let traj = Trajectory::straight(&sc);
        let alloc = Allocation { tau: vec![0.0; 4], eta: vec![0.0; 4] };
        let r = residuals(&traj, &alloc, &sc);
        assert_eq!(r.caching, 0.0);
        assert_eq!(r.demand, sc.demand);
        assert_eq!(r.energy, 0.0);
        assert!(r.feasible_except_demand(&sc, 0.0, REL_TOL));
        assert!(!r.demand_met(&sc, REL_TOL));
    }
}
