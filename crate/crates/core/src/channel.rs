//! Geometry and the deterministic (large-scale averaged) link rates.

use alloc::vec::Vec;
use core::fmt;

use crate::math::{self, Point2};
use crate::scenario::Scenario;

/// `H^2 + |q - w|^2`.
#[inline]
pub fn distance_sq(q: Point2, w: Point2, h: f64) -> f64 {
    h * h + (q - w).norm_sq()
}

/// `(H^2 + |q - w|^2)^{alpha/2}`, the path-loss denominator.
#[inline]
pub fn path_loss(d2: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        d2
    } else {
        math::powf(d2, alpha / 2.0)
    }
}

/// Received power at a UAV hovering at `q` (W).
pub fn input_power(q: Point2, sc: &Scenario) -> f64 {
    sc.omega0 * sc.p_source / path_loss(distance_sq(q, sc.source, sc.altitude), sc.path_loss_exp)
}

/// Source-to-UAV rate `B log2(1 + omega0 P_s / d_s^alpha)` (bits/s).
pub fn rate_uplink(q: Point2, sc: &Scenario) -> f64 {
    sc.bandwidth * math::log2_1p(input_power(q, sc))
}

/// Backscatter SNR at the destination.
pub fn backscatter_snr(q: Point2, eta: f64, sc: &Scenario) -> f64 {
    let a = sc.path_loss_exp;
    let ls = path_loss(distance_sq(q, sc.source, sc.altitude), a);
    let ld = path_loss(distance_sq(q, sc.destination, sc.altitude), a);
    sc.theta() * eta * sc.p_source / (ls * ld)
}

/// UAV-to-destination backscatter rate (bits/s).
pub fn rate_backscatter(q: Point2, eta: f64, sc: &Scenario) -> f64 {
    sc.bandwidth * math::log2_1p(backscatter_snr(q, eta, sc))
}

/// Waypoints `q_0 .. q_N`. Slot `n` (1-based) is served from `points[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryError {
    Length { expected: usize, got: usize },
    Endpoint { index: usize },
    Speed { segment: usize, step: f64, limit: f64 },
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryError::Length { expected, got } => {
                write!(f, "trajectory has {got} points, expected {expected}")
            }
            TrajectoryError::Endpoint { index } => write!(f, "waypoint {index} is not the pinned endpoint"),
            TrajectoryError::Speed { segment, step, limit } => {
                write!(f, "segment {segment} covers {step} m, limit is {limit} m")
            }
        }
    }
}

impl core::error::Error for TrajectoryError {}

/// Relative slack allowed on the per-slot speed limit.
pub const SPEED_TOL: f64 = 1e-9;

impl Trajectory {
    pub fn new(points: Vec<Point2>) -> Self {
        Self { points }
    }

    /// Evenly spaced straight flight from `q_I` to `q_F`.
    pub fn straight(sc: &Scenario) -> Self {
        let n = sc.slots;
        let points = (0..=n).map(|i| sc.start.lerp(sc.end, i as f64 / n as f64)).collect();
        Self { points }
    }

    /// Number of slots.
    pub fn slots(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// Waypoint used by slot `n` in `1..=N`.
    pub fn slot_point(&self, n: usize) -> Point2 {
        self.points[n]
    }

    pub fn serving_points(&self) -> &[Point2] {
        &self.points[1..]
    }

    pub fn step(&self, segment: usize) -> f64 {
        (self.points[segment + 1] - self.points[segment]).norm()
    }

    /// Largest `|q_{n+1} - q_n|` over the path.
    pub fn max_step(&self) -> f64 {
        (0..self.slots()).map(|i| self.step(i)).fold(0.0, f64::max)
    }

    /// Checks length, pinned endpoints and the speed limit.
    pub fn validate(&self, sc: &Scenario) -> Result<(), TrajectoryError> {
        if self.points.len() != sc.slots + 1 {
            return Err(TrajectoryError::Length { expected: sc.slots + 1, got: self.points.len() });
        }
        if self.points[0] != sc.start {
            return Err(TrajectoryError::Endpoint { index: 0 });
        }
        if self.points[sc.slots] != sc.end {
            return Err(TrajectoryError::Endpoint { index: sc.slots });
        }
        let limit = sc.max_step();
        for i in 0..sc.slots {
            let step = self.step(i);
            if step > limit * (1.0 + SPEED_TOL) + 1e-12 {
                return Err(TrajectoryError::Speed { segment: i, step, limit });
            }
        }
        Ok(())
    }
}

/// Per-slot uplink and backscatter rates (bits/s), index `n - 1` for slot `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVectors {
    pub r_u: Vec<f64>,
    pub r_d: Vec<f64>,
}

impl RateVectors {
    pub fn compute(traj: &Trajectory, eta: &[f64], sc: &Scenario) -> Self {
        let pts = traj.serving_points();
        debug_assert_eq!(pts.len(), eta.len());
        let r_u = pts.iter().map(|&q| rate_uplink(q, sc)).collect();
        let r_d = pts.iter().zip(eta).map(|(&q, &e)| rate_backscatter(q, e, sc)).collect();
        Self { r_u, r_d }
    }
}
