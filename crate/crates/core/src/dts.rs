//! Time-splitting block: per-slot reflect/harvest ratios `tau_n` at fixed
//! trajectory and backscatter coefficients.
//!
//! Two closed-form candidates exist, one making the caching constraint tight
//! and one making every slot's energy budget tight. With a cumulative energy
//! ledger and clipping neither is optimal in general, so the best feasible
//! candidate is then refined by solving the (linear) block problem exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::channel::Trajectory;
use crate::convex::{solve_convex, Constraint, ConvexError, ConvexProgram, Linear, SolverOptions};
use crate::energy::LEDGER_TOL;
use crate::math;
use crate::problem::SlotData;
use crate::scenario::Scenario;

/// Per-slot DTS ratios and backscatter coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Allocation {
    pub fn uniform(slots: usize, tau: f64, eta: f64) -> Self {
        Self { tau: vec![tau; slots], eta: vec![eta; slots] }
    }

    pub fn in_bounds(&self, sc: &Scenario) -> bool {
        self.tau.iter().all(|t| (0.0..=1.0).contains(t)) && self.eta.iter().all(|e| (0.0..=sc.eta_max).contains(e))
    }
}

/// Which constraint a closed-form candidate makes active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauCase {
    CachingActive,
    EnergyActive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauCandidate {
    pub value: f64,
    pub case: TauCase,
    /// The caching-active candidate is only defined when every slot relays
    /// faster than it receives.
    pub admissible: bool,
}

/// Where the returned ratios came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauChoice {
    CachingActive,
    EnergyActive,
    Incumbent,
    Polished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSolution {
    pub tau: Vec<f64>,
    pub choice: TauChoice,
    /// Delivered bits `sum tau dt R_d`.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DtsError {
    Length { eta: usize, slots: usize },
    /// No feasible ratio meets the demand; carries the best feasible schedule.
    DemandUnreachable { best: TauSolution },
}

impl fmt::Display for DtsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtsError::Length { eta, slots } => write!(f, "{eta} coefficients for {slots} slots"),
            DtsError::DemandUnreachable { best } => {
                write!(f, "demand unreachable, best schedule delivers {:e} bits", best.objective)
            }
        }
    }
}

impl core::error::Error for DtsError {}

#[derive(Debug, Clone, PartialEq)]
pub struct DtsOptions {
    /// Refine the closed-form pick with an exact solve of the block problem.
    pub polish: bool,
    /// Enforce the caching constraint (otherwise left for the eta block).
    pub enforce_caching: bool,
}

impl Default for DtsOptions {
    fn default() -> Self {
        Self { polish: true, enforce_caching: true }
    }
}

fn caching_candidate(data: &SlotData, n: usize, sc: &Scenario) -> TauCandidate {
    let admissible = data.rates.r_d.iter().zip(&data.rates.r_u).all(|(d, u)| d > u);
    let num = sc.caching * sc.demand;
    let gap = data.rates.r_d[n] - data.rates.r_u[n];
    let raw = if num == 0.0 { 0.0 } else { num / (sc.slots as f64 * data.dt * gap) };
    let value = if raw.is_nan() { 0.0 } else { math::clamp(raw, 0.0, 1.0) };
    TauCandidate { value, case: TauCase::CachingActive, admissible }
}

fn energy_candidate(data: &SlotData, n: usize) -> TauCandidate {
    let c = data.chi[n];
    let value = if c + data.spend > 0.0 { math::clamp(c / (c + data.spend), 0.0, 1.0) } else { 0.0 };
    TauCandidate { value, case: TauCase::EnergyActive, admissible: true }
}

/// Both closed-form candidates for slot `n` (1-based).
pub fn tau_candidates(n: usize, traj: &Trajectory, eta: &[f64], sc: &Scenario) -> [TauCandidate; 2] {
    let data = SlotData::new(traj, eta, sc);
    [caching_candidate(&data, n - 1, sc), energy_candidate(&data, n - 1)]
}

fn caching_slack_tol(data: &SlotData, tau: &[f64], sc: &Scenario) -> f64 {
    1e-9 * data.delivered(tau).max(sc.caching * sc.demand).max(1.0)
}

/// Checks the energy ledger and, if requested, the caching constraint.
pub fn tau_feasible(data: &SlotData, tau: &[f64], sc: &Scenario, enforce_caching: bool) -> bool {
    if tau.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return false;
    }
    if data.min_energy_slack(tau) < -LEDGER_TOL {
        return false;
    }
    if enforce_caching {
        let excess = data.delivered(tau) - data.received(tau) - sc.caching * sc.demand;
        if excess > caching_slack_tol(data, tau, sc) {
            return false;
        }
    }
    true
}

/// Exact solve of the linear block problem by the barrier method.
///
/// Variables interleave `tau_n` and the stored energy `e_n` after slot `n`.
fn polish(data: &SlotData, sc: &Scenario, enforce_caching: bool) -> Option<Vec<f64>> {
    let n = data.slots();
    let unit = data.chi.iter().copied().fold(data.spend, f64::max);
    let bit_scale = data.rates.r_d.iter().map(|r| r * data.dt).fold(0.0, f64::max) * n as f64;
    if !(unit > 0.0) || !(bit_scale > 0.0) {
        return None;
    }
    let tau_b: Vec<f64> = (0..n).map(|i| energy_candidate(data, i).value).collect();

    // Strictly interior start: shrink the energy-tight ratios, more so on
    // slots that eat into the caching budget.
    let contrib: Vec<f64> = (0..n).map(|i| data.dt * (data.rates.r_d[i] - data.rates.r_u[i])).collect();
    let mut s = vec![0.5; n];
    if enforce_caching {
        let budget = sc.caching * sc.demand + contrib.iter().zip(&tau_b).filter(|(c, _)| **c < 0.0).map(|(c, t)| -c * t * 0.5).sum::<f64>();
        let pos: f64 = contrib.iter().zip(&tau_b).filter(|(c, _)| **c > 0.0).map(|(c, t)| c * t).sum();
        if pos > 0.0 {
            if !(budget > 0.0) {
                return None;
            }
            let theta = (0.5 * budget / pos).min(0.5);
            for i in 0..n {
                if contrib[i] > 0.0 {
                    s[i] = theta;
                }
            }
        }
    }
    let mut x0 = vec![0.0; 2 * n];
    let mut prev = 0.0;
    for i in 0..n {
        let t = s[i] * tau_b[i];
        let room = prev + (data.chi[i] - (data.chi[i] + data.spend) * t) / unit;
        if !(t > 0.0 && t < 1.0 && room > 0.0) {
            return None;
        }
        x0[2 * i] = t;
        x0[2 * i + 1] = 0.5 * room;
        prev = 0.5 * room;
    }

    let mut prog = ConvexProgram::new(2 * n);
    let (tv, ev) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
    prog.add_objective(Linear::new(
        (0..n).map(tv).collect(),
        (0..n).map(|i| data.dt * data.rates.r_d[i] / bit_scale).collect(),
    ));
    for i in 0..n {
        prog.add_constraint(Constraint::new(0.0).with(Linear::new(vec![tv(i)], vec![-1.0])));
        prog.add_constraint(Constraint::new(-1.0).with(Linear::new(vec![tv(i)], vec![1.0])));
        prog.add_constraint(Constraint::new(0.0).with(Linear::new(vec![ev(i)], vec![-1.0])));
        let k = (data.chi[i] + data.spend) / unit;
        let c = Constraint::new(-data.chi[i] / unit);
        let c = if i == 0 {
            c.with(Linear::new(vec![tv(i), ev(i)], vec![k, 1.0]))
        } else {
            c.with(Linear::new(vec![ev(i - 1), tv(i), ev(i)], vec![-1.0, k, 1.0]))
        };
        prog.add_constraint(c);
    }
    if enforce_caching {
        let cs = bit_scale;
        prog.add_constraint(
            Constraint::new(-sc.caching * sc.demand / cs)
                .with(Linear::new((0..n).map(tv).collect(), contrib.iter().map(|c| c / cs).collect())),
        );
    }
    let sol = match solve_convex(&prog, &x0, &SolverOptions::default()) {
        Ok(s) => s,
        Err(ConvexError::MaxIterations { best }) => best,
        Err(_) => return None,
    };
    Some((0..n).map(|i| math::clamp(sol.x[tv(i)], 0.0, 1.0)).collect())
}

/// Optimal DTS ratios at fixed trajectory and coefficients.
///
/// `incumbent` (e.g. the previous block output) competes with the closed-form
/// candidates and wins ties, which makes repeated calls a fixed point.
pub fn solve_tau(
    traj: &Trajectory,
    eta: &[f64],
    sc: &Scenario,
    incumbent: Option<&[f64]>,
    opts: &DtsOptions,
) -> Result<TauSolution, DtsError> {
    let slots = traj.slots();
    if eta.len() != slots {
        return Err(DtsError::Length { eta: eta.len(), slots });
    }
    let data = SlotData::new(traj, eta, sc);
    solve_tau_on(&data, sc, incumbent, opts)
}

/// [`solve_tau`] on precomputed slot data.
pub fn solve_tau_on(
    data: &SlotData,
    sc: &Scenario,
    incumbent: Option<&[f64]>,
    opts: &DtsOptions,
) -> Result<TauSolution, DtsError> {
    let n = data.slots();
    let energy: Vec<f64> = (0..n).map(|i| energy_candidate(data, i).value).collect();
    let caching: Vec<TauCandidate> = (0..n).map(|i| caching_candidate(data, i, sc)).collect();

    // Energy-active first so that it wins exact ties.
    let mut pool: Vec<(Vec<f64>, TauChoice)> = vec![(energy, TauChoice::EnergyActive)];
    if caching.iter().all(|c| c.admissible) {
        pool.push((caching.iter().map(|c| c.value).collect(), TauChoice::CachingActive));
    }
    let mut best: Option<TauSolution> = None;
    let consider = |tau: Vec<f64>, choice: TauChoice, margin: f64, best: &mut Option<TauSolution>| {
        if !tau_feasible(data, &tau, sc, opts.enforce_caching) {
            return;
        }
        let obj = data.delivered(&tau);
        let better = match best {
            None => true,
            Some(b) => obj > b.objective + margin * b.objective.abs(),
        };
        if better {
            *best = Some(TauSolution { tau, choice, objective: obj });
        }
    };
    if let Some(inc) = incumbent.filter(|t| t.len() == n) {
        consider(inc.to_vec(), TauChoice::Incumbent, 0.0, &mut best);
    }
    for (tau, choice) in pool {
        consider(tau, choice, 1e-12, &mut best);
    }
    if opts.polish {
        if let Some(tau) = polish(data, sc, opts.enforce_caching) {
            consider(tau, TauChoice::Polished, 1e-9, &mut best);
        }
    }
    // tau = 0 is always feasible.
    let best = best.unwrap_or_else(|| TauSolution { tau: vec![0.0; n], choice: TauChoice::EnergyActive, objective: 0.0 });
    if best.objective < sc.demand * (1.0 - 1e-9) {
        return Err(DtsError::DemandUnreachable { best });
    }
    Ok(best)
}
