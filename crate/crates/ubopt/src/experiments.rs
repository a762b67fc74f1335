//! Sweeps, trajectory dumps and the harvesting-model comparison, all written
//! as plain CSV.
//!
//! Floats are written with 12 significant digits in exponent form, so that
//! identical runs give byte-identical files.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use ubopt_core::energy::{energy_causality, linear_power, nonlinear_power};
use ubopt_core::problem::REL_TOL;
use ubopt_core::{make_fixed_trajectory, solve, BcdError, Scenario, SchemeId, Solution, Trajectory};

use crate::config::{ConfigError, SweepSpec};

/// Worker cap read from the environment.
pub const THREADS_ENV: &str = "UBOPT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{scheme} at {value}: {source}")]
    Solve { scheme: SchemeId, value: f64, source: BcdError },
    #[error("{0} returned a point that violates its constraints")]
    Infeasible(SchemeId),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.11e}")
}

/// Starting path for the free-trajectory schemes: the fixed benchmark path
/// when it can be flown, so every proposed scheme starts no worse than its
/// fixed-path counterpart, else the straight line.
pub fn initial_trajectory(sc: &Scenario) -> Trajectory {
    make_fixed_trajectory(sc).unwrap_or_else(|_| Trajectory::straight(sc))
}

/// Runs one scheme from [`initial_trajectory`] and records the wall time.
pub fn solve_scheme(sc: &Scenario, scheme: SchemeId) -> Result<Solution, BcdError> {
    let t0 = Instant::now();
    let mut sol = solve(sc, scheme, &initial_trajectory(sc))?;
    sol.report.wall_time = t0.elapsed().as_secs_f64();
    Ok(sol)
}

/// Whether every constraint except the demand holds at the returned point.
pub fn output_feasible(sol: &Solution) -> bool {
    let r = &sol.report;
    r.residuals.feasible_except_demand(&sol.scenario, r.objective(), REL_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: SchemeId,
    pub swept_value: f64,
    pub objective_bits: f64,
    pub throughput_bps: f64,
    pub converged: bool,
    pub iterations: usize,
    pub demand_met: bool,
    /// Not written to the CSV, which must not depend on timing.
    pub wall_time: f64,
}

pub const SWEEP_HEADER: [&str; 7] =
    ["scheme", "swept_value", "objective_bits", "throughput_bps", "converged", "iterations", "demand_met"];

impl SweepRow {
    fn record(&self) -> [String; 7] {
        [
            self.scheme.name().to_string(),
            fmt_f64(self.swept_value),
            fmt_f64(self.objective_bits),
            fmt_f64(self.throughput_bps),
            self.converged.to_string(),
            self.iterations.to_string(),
            self.demand_met.to_string(),
        ]
    }
}

/// Worker count: `UBOPT_THREADS` when set and positive, else all cores.
pub fn worker_count() -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => cores,
    }
}

fn sweep_point(sc: &Scenario, scheme: SchemeId, value: f64) -> Result<SweepRow, ExperimentError> {
    let sol = solve_scheme(sc, scheme).map_err(|source| ExperimentError::Solve { scheme, value, source })?;
    if !output_feasible(&sol) {
        return Err(ExperimentError::Infeasible(scheme));
    }
    let r = &sol.report;
    Ok(SweepRow {
        scheme,
        swept_value: value,
        objective_bits: r.objective(),
        throughput_bps: r.objective() / sc.duration,
        converged: r.converged,
        iterations: r.iterations,
        demand_met: r.demand_met,
        wall_time: r.wall_time,
    })
}

/// One row per `(scheme, value)`, ordered scheme-major as listed in the spec
/// regardless of which worker finishes first.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<Vec<SweepRow>, ExperimentError> {
    let scenarios = spec.scenarios()?;
    let jobs: Vec<(SchemeId, f64, &Scenario)> = spec
        .schemes
        .iter()
        .flat_map(|&s| spec.values.iter().zip(&scenarios).map(move |(&v, sc)| (s, v, sc)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    pool.install(|| jobs.par_iter().map(|&(s, v, sc)| sweep_point(sc, s, v)).collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Per-waypoint rows `(n, x, y, tau_n, eta_n, harvested_J, consumed_J)`.
/// Row 0 is the take-off point, which serves no slot.
pub fn write_trajectory_csv<W: Write>(sol: &Solution, out: W) -> Result<(), ExperimentError> {
    let ledger = energy_causality(&sol.allocation.tau, &sol.trajectory, &sol.scenario)
        .expect("solver keeps one ratio per slot");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "x", "y", "tau_n", "eta_n", "harvested_J", "consumed_J"])?;
    for (n, p) in sol.trajectory.points.iter().enumerate() {
        let (tau, eta, got, used) = match n.checked_sub(1) {
            Some(i) => (sol.allocation.tau[i], sol.allocation.eta[i], ledger.harvested[i], ledger.consumed[i]),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        w.write_record([n.to_string(), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(tau), fmt_f64(eta), fmt_f64(got), fmt_f64(used)])?;
    }
    w.flush()?;
    Ok(())
}

/// Objective after each outer iteration.
pub fn write_trace_csv<W: Write>(sol: &Solution, out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "objective_bits"])?;
    for (i, v) in sol.report.objective_trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Settings for comparing the two harvesting models on one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhCompareParams {
    pub tau: f64,
    pub slot: f64,
    pub mu: f64,
    pub xi: f64,
    pub beta: f64,
    pub nu: f64,
}

impl EhCompareParams {
    /// `tau = 0.5`, a 1 s slot, `mu = 0.7`, `Xi = 2.8 mW`; the sigmoid shape
    /// comes from the scenario.
    pub fn reference(sc: &Scenario) -> Self {
        Self { tau: 0.5, slot: 1.0, mu: 0.7, xi: 2.8e-3, beta: sc.beta, nu: sc.nu }
    }

    /// Harvest of the nonlinear model at saturation, `(1 - tau) dt Xi`.
    pub fn plateau(&self) -> f64 {
        (1.0 - self.tau) * self.slot * self.xi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhRow {
    pub p_in: f64,
    pub linear_j: f64,
    pub nonlinear_j: f64,
}

impl EhRow {
    /// `|linear - nonlinear| / nonlinear`, 0 where both vanish.
    pub fn relative_gap(&self) -> f64 {
        let d = (self.linear_j - self.nonlinear_j).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.nonlinear_j.abs().max(f64::MIN_POSITIVE)
        }
    }
}

/// Input powers from 0 to 100 mW in 0.5 mW steps.
pub fn default_power_grid() -> Vec<f64> {
    (0..=200).map(|i| i as f64 * 0.5e-3).collect()
}

pub fn eh_compare(grid: &[f64], p: &EhCompareParams) -> Vec<EhRow> {
    let harvest = (1.0 - p.tau) * p.slot;
    grid.iter()
        .map(|&p_in| EhRow {
            p_in,
            linear_j: harvest * linear_power(p_in, p.mu),
            nonlinear_j: harvest * nonlinear_power(p_in, p.xi, p.beta, p.nu).0,
        })
        .collect()
}

pub fn write_eh_csv<W: Write>(rows: &[EhRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["P_in", "E_linear_J", "E_nonlinear_J"])?;
    for r in rows {
        w.write_record([fmt_f64(r.p_in), fmt_f64(r.linear_j), fmt_f64(r.nonlinear_j)])?;
    }
    w.flush()?;
    Ok(())
}

/// Smallest horizontal distance from the path to `target`.
pub fn min_distance(traj: &Trajectory, target: ubopt_core::Point2) -> f64 {
    traj.points.iter().map(|p| (*p - target).norm()).fold(f64::INFINITY, f64::min)
}
