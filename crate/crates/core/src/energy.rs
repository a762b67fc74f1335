//! Harvested energy under the linear and sigmoid models, and the cumulative
//! energy-causality ledger.

use alloc::vec::Vec;
use core::fmt;

use crate::channel::{input_power, Trajectory};
use crate::math;
use crate::math::Point2;
use crate::scenario::{EhModel, Scenario};

/// Ledger slack below which a schedule counts as energy infeasible (J).
pub const LEDGER_TOL: f64 = 1e-12;

/// Linear-model harvested power for a given input power (W).
pub fn linear_power(p_in: f64, mu: f64) -> f64 {
    mu * p_in
}

/// Sigmoid-model harvested power, `Xi/(1-phi) (logistic(beta (P_in - nu)) - phi)`.
///
/// Returns the value and whether it had to be clamped at zero.
pub fn nonlinear_power(p_in: f64, xi: f64, beta: f64, nu: f64) -> (f64, bool) {
    let phi = math::logistic(-beta * nu);
    let raw = xi / (1.0 - phi) * (math::logistic(beta * (p_in - nu)) - phi);
    if raw < 0.0 {
        (0.0, true)
    } else {
        (raw, false)
    }
}

/// Energy harvested in one slot if the whole slot were spent harvesting (J).
///
/// Harvest in slot `n` is `(1 - tau_n) * chi(q_n)`.
pub fn chi(q: Point2, sc: &Scenario) -> f64 {
    chi_with_clamp(q, sc).0
}

pub fn chi_with_clamp(q: Point2, sc: &Scenario) -> (f64, bool) {
    let p_in = input_power(q, sc);
    let dt = sc.slot_length();
    match sc.eh_model {
        EhModel::Linear => (dt * linear_power(p_in, sc.mu), false),
        EhModel::NonLinear => {
            let (p, clamped) = nonlinear_power(p_in, sc.xi, sc.beta, sc.nu);
            (dt * p, clamped)
        }
    }
}

/// `mu (1 - tau) dt omega0 P_s / d^alpha`.
pub fn harvest_linear(tau: f64, q: Point2, sc: &Scenario) -> f64 {
    (1.0 - tau) * sc.slot_length() * linear_power(input_power(q, sc), sc.mu)
}

pub fn harvest_nonlinear(tau: f64, q: Point2, sc: &Scenario) -> f64 {
    let (p, _) = nonlinear_power(input_power(q, sc), sc.xi, sc.beta, sc.nu);
    (1.0 - tau) * sc.slot_length() * p
}

/// Per-slot harvest and spend with running balance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub harvested: Vec<f64>,
    pub consumed: Vec<f64>,
    /// `sum_{i<=n} harvested_i - sum_{i<=n} consumed_i`.
    pub cumulative_slack: Vec<f64>,
    /// Slots where the sigmoid model had to be clamped at zero.
    pub clamps: usize,
}

impl EnergyLedger {
    pub fn min_slack(&self) -> f64 {
        self.cumulative_slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn feasible(&self) -> bool {
        self.min_slack() >= -LEDGER_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthMismatch {
    pub tau: usize,
    pub slots: usize,
}

impl fmt::Display for LengthMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ratios for {} slots", self.tau, self.slots)
    }
}

impl core::error::Error for LengthMismatch {}

/// Builds the cumulative ledger for a schedule. The battery starts empty.
pub fn energy_causality(tau: &[f64], traj: &Trajectory, sc: &Scenario) -> Result<EnergyLedger, LengthMismatch> {
    let slots = traj.slots();
    if tau.len() != slots {
        return Err(LengthMismatch { tau: tau.len(), slots });
    }
    let spend = sc.slot_length() * sc.p_circuit;
    let mut ledger = EnergyLedger {
        harvested: Vec::with_capacity(slots),
        consumed: Vec::with_capacity(slots),
        cumulative_slack: Vec::with_capacity(slots),
        clamps: 0,
    };
    let (mut got, mut used) = (0.0, 0.0);
    for (&t, &q) in tau.iter().zip(traj.serving_points()) {
        let (c, clamped) = chi_with_clamp(q, sc);
        ledger.clamps += clamped as usize;
        let h = (1.0 - t) * c;
        let u = t * spend;
        got += h;
        used += u;
        ledger.harvested.push(h);
        ledger.consumed.push(u);
        ledger.cumulative_slack.push(got - used);
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn linear_examples() {
        let sc = default_scenario();
        assert_eq!(harvest_linear(1.0, sc.source, &sc), 0.0);
        let e = harvest_linear(0.0, sc.source, &sc);
        assert!((e - 4.5e-6 * sc.p_source).abs() < 1e-18);
        let q = Point2::new(2.0, 7.0);
        for t in [0.0, 0.3, 0.9] {
            let lhs = harvest_linear(t, q, &sc);
            let rhs = 2.0 * harvest_linear((1.0 + t) / 2.0, q, &sc);
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs());
        }
    }

    #[test]
    fn nonlinear_zero_input() {
        let (p, clamped) = nonlinear_power(0.0, 2.8e-3, 1500.0, 0.0022);
        assert!(p.abs() < 1e-18);
        assert!(!clamped);
    }

    #[test]
    fn nonlinear_saturates_at_xi() {
        let (p, _) = nonlinear_power(10.0, 2.8e-3, 1500.0, 0.0022);
        assert!((p - 2.8e-3).abs() < 1e-15);
    }

    #[test]
    fn low_power_agreement_with_matched_slope() {
        // Initial slope of the sigmoid model, per watt of input.
        let (xi, beta, nu) = (2.8e-3, 1500.0, 0.0022);
        let phi = 1.0 / (1.0 + libm::exp(beta * nu));
        let slope = xi / (1.0 - phi) * beta * phi * (1.0 - phi);
        let mut p = 1e-7;
        while p <= 1e-4 {
            let lin = linear_power(p, slope);
            let (nl, _) = nonlinear_power(p, xi, beta, nu);
            assert!((lin - nl).abs() / nl <= 0.15, "gap at {p}");
            p *= 1.5;
        }
    }

    #[test]
    fn ledger_trivial_schedules() {
        let sc = Scenario { slots: 10, duration: 5.0, ..default_scenario() };
        let t = Trajectory::straight(&sc);
        let l0 = energy_causality(&vec![0.0; 10], &t, &sc).unwrap();
        assert!(l0.consumed.iter().all(|&c| c == 0.0));
        assert!(l0.feasible());
        let l1 = energy_causality(&vec![1.0; 10], &t, &sc).unwrap();
        assert!(l1.harvested.iter().all(|&h| h == 0.0));
        assert!(!l1.feasible());
        assert!(energy_causality(&vec![0.0; 9], &t, &sc).is_err());
    }

    #[test]
    fn energy_active_ratio_is_tight() {
        for model in [EhModel::Linear, EhModel::NonLinear] {
            let sc = Scenario { slots: 8, duration: 4.0, start: Point2::new(5.0, 3.0), end: Point2::new(5.0, 3.0), eh_model: model, ..default_scenario() };
            let t = Trajectory::straight(&sc);
            let c = chi(sc.start, &sc);
            let tau = c / (c + sc.slot_length() * sc.p_circuit);
            let l = energy_causality(&vec![tau; 8], &t, &sc).unwrap();
            assert!(l.cumulative_slack.iter().all(|s| s.abs() < 1e-12));
        }
    }

    proptest! {
        #[test]
        fn nonlinear_monotone_and_bounded(p in 0.0f64..0.1, dp in 0.0f64..0.05, tau in 0.0f64..=1.0) {
            let sc = Scenario { eh_model: EhModel::NonLinear, ..default_scenario() };
            let (a, _) = nonlinear_power(p, sc.xi, sc.beta, sc.nu);
            let (b, _) = nonlinear_power(p + dp, sc.xi, sc.beta, sc.nu);
            prop_assert!(b >= a);
            prop_assert!((1.0 - tau) * sc.slot_length() * b <= (1.0 - tau) * sc.slot_length() * sc.xi * (1.0 + 1e-12));
        }

        #[test]
        fn harvest_affine_in_one_minus_tau(x in -20.0f64..40.0, y in -20.0f64..30.0, t in 0.0f64..=1.0) {
            let q = Point2::new(x, y);
            for model in [EhModel::Linear, EhModel::NonLinear] {
                let sc = Scenario { eh_model: model, ..default_scenario() };
                let full = chi(q, &sc);
                let h = match model {
                    EhModel::Linear => harvest_linear(t, q, &sc),
                    EhModel::NonLinear => harvest_nonlinear(t, q, &sc),
                };
                prop_assert!((h - (1.0 - t) * full).abs() <= 1e-15 * full.max(1e-300));
            }
        }
    }
}
