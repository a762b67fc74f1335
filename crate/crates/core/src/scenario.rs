//! Problem parameters. Everything is stored in SI base units.

use core::fmt;

use crate::math::{self, Point2};

/// Energy-harvesting model used by the energy-causality constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EhModel {
    Linear,
    NonLinear,
}

impl EhModel {
    pub fn name(self) -> &'static str {
        match self {
            EhModel::Linear => "Linear",
            EhModel::NonLinear => "NonLinear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Linear" | "linear" | "LEH" => Some(EhModel::Linear),
            "NonLinear" | "nonlinear" | "Nonlinear" | "NLEH" => Some(EhModel::NonLinear),
            _ => None,
        }
    }
}

/// All fixed parameters of one mission.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Source position `w_s` (m).
    pub source: Point2,
    /// Destination position `w_d` (m).
    pub destination: Point2,
    /// UAV initial position `q_I` (m).
    pub start: Point2,
    /// UAV final position `q_F` (m).
    pub end: Point2,
    /// Flight altitude `H` (m).
    pub altitude: f64,
    /// Maximum horizontal speed (m/s).
    pub v_max: f64,
    /// Mission duration `T` (s).
    pub duration: f64,
    /// Number of slots `N`.
    pub slots: usize,
    /// Source transmit power (W).
    pub p_source: f64,
    /// Backscatter circuit power (W).
    pub p_circuit: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// Demanded data `S` (bits).
    pub demand: f64,
    /// Caching coefficient `sigma`, fraction of each file already cached on board.
    pub caching: f64,
    /// Channel power gain at 1 m, linear.
    pub omega0: f64,
    /// Path-loss exponent.
    pub path_loss_exp: f64,
    /// Destination noise power (W).
    pub noise_power: f64,
    /// Linear EH efficiency.
    pub mu: f64,
    /// Non-linear EH saturation power `Xi` (W).
    pub xi: f64,
    pub beta: f64,
    pub nu: f64,
    /// Ceiling on the backscatter coefficient.
    pub eta_max: f64,
    pub eh_model: EhModel,
    /// Relative objective change that stops the outer loop.
    pub epsilon: f64,
}

/// A violated scenario invariant. `field` uses the config-file key.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.reason)
    }
}

impl core::error::Error for ScenarioError {}

fn invalid(field: &'static str, reason: &'static str) -> ScenarioError {
    ScenarioError { field, reason }
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            source: Point2::new(5.0, 0.0),
            destination: Point2::new(15.0, 0.0),
            start: Point2::new(0.0, 10.0),
            end: Point2::new(20.0, 10.0),
            altitude: 10.0,
            v_max: 20.0,
            duration: 100.0,
            slots: 200,
            p_source: 5.0,
            p_circuit: 1e-6,
            bandwidth: 1e6,
            demand: 2e6,
            caching: 0.5,
            // -30 dB
            omega0: 1e-3,
            path_loss_exp: 2.0,
            // -90 dBm
            noise_power: 1e-12,
            mu: 0.9,
            xi: 2.8e-3,
            beta: 1500.0,
            nu: 0.0022,
            eta_max: 0.5,
            eh_model: EhModel::Linear,
            epsilon: 1e-4,
        }
    }
}

/// The reference parameter set used throughout the experiments.
pub fn default_scenario() -> Scenario {
    Scenario::default()
}

/// Converts a dB ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    math::powf(10.0, db / 10.0)
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

impl Scenario {
    /// Slot length `T / N` in seconds.
    pub fn slot_length(&self) -> f64 {
        self.duration / self.slots as f64
    }

    /// Maximum distance covered in one slot.
    pub fn max_step(&self) -> f64 {
        self.v_max * self.slot_length()
    }

    /// `e^{-E} omega0^2 / sigma_d^2`.
    pub fn theta(&self) -> f64 {
        math::exp(-math::EULER_GAMMA) * self.omega0 * self.omega0 / self.noise_power
    }

    /// `1 / (1 + e^{beta nu})`, the sigmoid value at zero input power.
    pub fn phi(&self) -> f64 {
        math::logistic(-self.beta * self.nu)
    }

    /// Checks every invariant and returns the scenario unchanged when valid.
    pub fn validated(self) -> Result<Self, ScenarioError> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn finite_pos(v: f64) -> bool {
            v.is_finite() && v > 0.0
        }
        let points = [
            ("w_s", self.source),
            ("w_d", self.destination),
            ("q_I", self.start),
            ("q_F", self.end),
        ];
        for (name, p) in points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if !finite_pos(self.duration) {
            return Err(invalid("T", "must be positive"));
        }
        if self.slots == 0 {
            return Err(invalid("N", "must be at least 1"));
        }
        if !finite_pos(self.altitude) {
            return Err(invalid("H", "must be positive"));
        }
        if !self.v_max.is_finite() || self.v_max < 0.0 {
            return Err(invalid("V_max", "must be non-negative"));
        }
        if !finite_pos(self.p_source) {
            return Err(invalid("P_s", "must be positive"));
        }
        if !finite_pos(self.p_circuit) {
            return Err(invalid("P_c", "must be positive"));
        }
        if !finite_pos(self.bandwidth) {
            return Err(invalid("B", "must be positive"));
        }
        if !self.demand.is_finite() || self.demand < 0.0 {
            return Err(invalid("S", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.caching) {
            return Err(invalid("sigma", "out of range [0, 1]"));
        }
        if !finite_pos(self.omega0) {
            return Err(invalid("omega0", "must be positive"));
        }
        if !self.path_loss_exp.is_finite() || self.path_loss_exp < 2.0 {
            return Err(invalid("alpha", "must be at least 2"));
        }
        if !finite_pos(self.noise_power) {
            return Err(invalid("sigma_d2", "must be positive"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(invalid("mu", "out of range (0, 1]"));
        }
        if !finite_pos(self.xi) {
            return Err(invalid("Xi", "must be positive"));
        }
        if !finite_pos(self.beta) {
            return Err(invalid("beta", "must be positive"));
        }
        if !self.nu.is_finite() || self.nu < 0.0 {
            return Err(invalid("nu", "must be non-negative"));
        }
        if !(self.eta_max > 0.0 && self.eta_max < 1.0) {
            return Err(invalid("eta_max", "out of range (0, 1)"));
        }
        if !finite_pos(self.epsilon) {
            return Err(invalid("epsilon", "must be positive"));
        }
        let gap = (self.end - self.start).norm();
        let reach = self.slots as f64 * self.max_step();
        if gap > reach * (1.0 + 1e-12) {
            return Err(invalid("q_F", "unreachable from q_I within T at V_max"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let sc = default_scenario();
        assert_eq!(sc.omega0, 1e-3);
        assert_eq!(sc.mu, 0.9);
        assert_eq!(sc.path_loss_exp, 2.0);
        assert_eq!(sc.slot_length(), 0.5);
        assert_eq!(sc.eta_max, 0.5);
        assert_eq!(sc.xi, 2.8e-3);
        assert_eq!((sc.beta, sc.nu), (1500.0, 0.0022));
        assert_eq!(sc.epsilon, 1e-4);
        assert!(sc.validate().is_ok());
    }

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(-30.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-27);
    }

    #[test]
    fn theta_constant() {
        let th = default_scenario().theta();
        let expect = libm::exp(-0.5772156649) * 1e6;
        assert!((th - expect).abs() / expect < 1e-9);
        assert!((th - 5.6146e5).abs() < 1.0);
    }

    #[test]
    fn phi_constant() {
        let phi = default_scenario().phi();
        assert!((phi - 0.03557).abs() < 1e-5);
    }

    #[test]
    fn sigma_out_of_range() {
        let sc = Scenario { caching: 1.5, ..Scenario::default() };
        let err = sc.validate().unwrap_err();
        assert_eq!(err.field, "sigma");
        assert_eq!(alloc::format!("{err}"), "sigma out of range [0, 1]");
    }

    #[test]
    fn hover_mission_is_valid() {
        let p = Point2::new(3.0, 4.0);
        let sc = Scenario { start: p, end: p, v_max: 0.0, ..Scenario::default() };
        assert!(sc.validate().is_ok());
    }

    #[test]
    fn unreachable_endpoint() {
        let sc = Scenario { v_max: 0.1, ..Scenario::default() };
        assert_eq!(sc.validate().unwrap_err().field, "q_F");
    }

    #[test]
    fn eta_max_bounds() {
        for bad in [0.0, 1.0, -0.2] {
            let sc = Scenario { eta_max: bad, ..Scenario::default() };
            assert_eq!(sc.validate().unwrap_err().field, "eta_max");
        }
    }

    #[test]
    fn slot_length_times_slots_is_duration() {
        for (t, n) in [(100.0, 200usize), (6.0, 30), (250.0, 7), (1.0 / 3.0, 11)] {
            let sc = Scenario { duration: t, slots: n, ..Scenario::default() };
            let back = sc.slot_length() * n as f64;
            assert!((back - t).abs() <= f64::EPSILON * t);
        }
    }
}
