//! Throughput maximization for a cache-assisted UAV backscatter relay.
//!
//! A UAV carrying a backscatter circuit flies from `q_I` to `q_F` while a
//! ground source illuminates it. In every slot the UAV splits time between
//! harvesting energy and reflecting the source signal toward a destination.
//! The solver alternates three blocks:
//!
//! * [`dts`]: the dynamic time-splitting ratios, in closed form,
//! * [`eta`]: the backscatter coefficients, by a tangent fixed-point iteration,
//! * [`trajectory`]: the waypoints, by successive convex approximation on top
//!   of the log-barrier solver in [`convex`].
//!
//! [`bcd`] drives the loop for the proposed schemes and the benchmark variants.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the fading
//! Monte-Carlo oracle and the CLI live in the `ubopt` companion crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bcd;
pub mod channel;
pub mod convex;
pub mod dts;
pub mod energy;
pub mod eta;
pub mod math;
pub mod problem;
pub mod scenario;
pub mod trajectory;

pub use bcd::{make_fixed_trajectory, solve, BcdError, SchemeId, Solution, SolveReport};
pub use channel::{RateVectors, Trajectory};
pub use dts::Allocation;
pub use math::Point2;
pub use scenario::{EhModel, Scenario, ScenarioError};
