//! Outer alternating loop over the three blocks, and the benchmark schemes.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::channel::{Trajectory, TrajectoryError};
use crate::dts::{solve_tau_on, Allocation, DtsError, DtsOptions, TauChoice};
use crate::energy::energy_causality;
use crate::eta::{solve_eta_on, EtaCoeffs, EtaError};
use crate::math::Point2;
use crate::problem::{residuals, Residuals, SlotData, REL_TOL};
use crate::scenario::{EhModel, Scenario, ScenarioError};
use crate::trajectory::solve_trajectory;

pub const MAX_OUTER_ITERS: usize = 200;

/// Proposed schemes and their benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Leh,
    Nleh,
    /// No caching (`sigma = 0`).
    Lnc,
    Nlnc,
    /// Fixed time split `tau = 0.5`.
    LfTau,
    NlfTau,
    /// Fixed source-destination midpoint path.
    LfTra,
    NlfTra,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::Leh,
        SchemeId::Nleh,
        SchemeId::Lnc,
        SchemeId::Nlnc,
        SchemeId::LfTau,
        SchemeId::NlfTau,
        SchemeId::LfTra,
        SchemeId::NlfTra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Leh => "LEH",
            SchemeId::Nleh => "NLEH",
            SchemeId::Lnc => "LNC",
            SchemeId::Nlnc => "NLNC",
            SchemeId::LfTau => "LFTau",
            SchemeId::NlfTau => "NLFTau",
            SchemeId::LfTra => "LFTra",
            SchemeId::NlfTra => "NLFTra",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name().eq_ignore_ascii_case(s))
    }

    pub fn eh_model(self) -> EhModel {
        match self {
            SchemeId::Leh | SchemeId::Lnc | SchemeId::LfTau | SchemeId::LfTra => EhModel::Linear,
            _ => EhModel::NonLinear,
        }
    }

    pub fn caching(self) -> bool {
        !matches!(self, SchemeId::Lnc | SchemeId::Nlnc)
    }

    pub fn fixed_tau(self) -> bool {
        matches!(self, SchemeId::LfTau | SchemeId::NlfTau)
    }

    pub fn fixed_trajectory(self) -> bool {
        matches!(self, SchemeId::LfTra | SchemeId::NlfTra)
    }

    /// The scenario this scheme actually solves.
    pub fn apply(self, sc: &Scenario) -> Scenario {
        let mut out = sc.clone();
        out.eh_model = self.eh_model();
        if !self.caching() {
            out.caching = 0.0;
        }
        out
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Time split used by the fixed-ratio benchmarks.
pub const FIXED_TAU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum BcdError {
    Scenario(ScenarioError),
    InitialTrajectory(TrajectoryError),
    /// The fixed path cannot be flown within `T` at `V_max`.
    FixedPathUnreachable { length: f64, reach: f64 },
}

impl fmt::Display for BcdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcdError::Scenario(e) => write!(f, "invalid scenario: {e}"),
            BcdError::InitialTrajectory(e) => write!(f, "invalid initial trajectory: {e}"),
            BcdError::FixedPathUnreachable { length, reach } => {
                write!(f, "fixed path is {length} m long but only {reach} m can be flown")
            }
        }
    }
}

impl core::error::Error for BcdError {}

impl From<ScenarioError> for BcdError {
    fn from(e: ScenarioError) -> Self {
        BcdError::Scenario(e)
    }
}

/// `q_I -> (w_s + w_d)/2 -> q_F` at constant speed, sampled at every slot.
pub fn make_fixed_trajectory(sc: &Scenario) -> Result<Trajectory, BcdError> {
    let mid = (sc.source + sc.destination) * 0.5;
    let l1 = (mid - sc.start).norm();
    let l2 = (sc.end - mid).norm();
    let total = l1 + l2;
    let n = sc.slots;
    let reach = n as f64 * sc.max_step();
    if total > reach * (1.0 + 1e-12) {
        return Err(BcdError::FixedPathUnreachable { length: total, reach });
    }
    let mut points: Vec<Point2> = (0..=n)
        .map(|k| {
            let s = total * k as f64 / n as f64;
            if total == 0.0 {
                mid
            } else if s <= l1 {
                sc.start.lerp(mid, if l1 > 0.0 { s / l1 } else { 1.0 })
            } else {
                mid.lerp(sc.end, if l2 > 0.0 { (s - l1) / l2 } else { 1.0 })
            }
        })
        .collect();
    points[0] = sc.start;
    points[n] = sc.end;
    Ok(Trajectory::new(points))
}

/// Sub-iteration tallies across the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InnerCounts {
    /// Time-split block solves.
    pub tau: usize,
    /// Tangent iterations of the coefficient block.
    pub eta: usize,
    /// SCA rounds of the trajectory block.
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub scheme: SchemeId,
    /// Delivered bits after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub demand_met: bool,
    pub residuals: Residuals,
    pub inner_counts: InnerCounts,
    /// Seconds; filled in by callers that have a clock.
    pub wall_time: f64,
    /// Slots where the sigmoid harvest had to be clamped at zero.
    pub clamps: usize,
    /// Time-split solves won by the exact refinement over the closed forms.
    pub polished: usize,
}

impl SolveReport {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub allocation: Allocation,
    pub report: SolveReport,
    /// The scenario after the scheme's overrides.
    pub scenario: Scenario,
}

struct Candidate {
    tau: Vec<f64>,
    eta: Vec<f64>,
    feasible: bool,
    objective: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        (self.feasible && !other.feasible) || (self.feasible == other.feasible && self.objective > other.objective)
    }
}

fn feasible(traj: &Trajectory, tau: &[f64], eta: &[f64], sc: &Scenario) -> Option<f64> {
    let alloc = Allocation { tau: tau.to_vec(), eta: eta.to_vec() };
    let r = residuals(traj, &alloc, sc);
    let obj = SlotData::new(traj, eta, sc).delivered(tau);
    r.feasible_except_demand(sc, obj, REL_TOL).then_some(obj)
}

/// Runs the coefficient block, falling back to the best coefficients when the
/// demand is out of reach.
fn eta_block(traj: &Trajectory, tau: &[f64], eta: &[f64], sc: &Scenario, counts: &mut InnerCounts) -> Vec<f64> {
    let c = EtaCoeffs::new(traj, tau, sc);
    match solve_eta_on(&c, sc, eta) {
        Ok(s) => {
            counts.eta += s.iterations;
            s.eta
        }
        Err(EtaError::DemandUnreachable { best }) => {
            counts.eta += best.iterations;
            best.eta
        }
        Err(_) => eta.to_vec(),
    }
}

fn tau_block(
    traj: &Trajectory,
    eta: &[f64],
    sc: &Scenario,
    incumbent: &[f64],
    enforce_caching: bool,
    counts: &mut InnerCounts,
    polished: &mut usize,
) -> Vec<f64> {
    counts.tau += 1;
    let data = SlotData::new(traj, eta, sc);
    let opts = DtsOptions { polish: true, enforce_caching };
    let sol = match solve_tau_on(&data, sc, Some(incumbent), &opts) {
        Ok(s) => s,
        Err(DtsError::DemandUnreachable { best }) => best,
        Err(DtsError::Length { .. }) => unreachable!("slot data built from the same trajectory"),
    };
    if sol.choice == TauChoice::Polished {
        *polished += 1;
    }
    sol.tau
}

/// Alternates the time-split, coefficient and trajectory blocks.
///
/// `init_traj` seeds the free-trajectory schemes; the fixed-path schemes fly
/// [`make_fixed_trajectory`]. Unmet demand does not abort the run: the loop
/// keeps maximizing delivered bits and reports `demand_met = false`.
pub fn solve(sc: &Scenario, scheme: SchemeId, init_traj: &Trajectory) -> Result<Solution, BcdError> {
    sc.validate()?;
    let sc = scheme.apply(sc);
    let mut traj = if scheme.fixed_trajectory() { make_fixed_trajectory(&sc)? } else { init_traj.clone() };
    traj.validate(&sc).map_err(BcdError::InitialTrajectory)?;

    let n = sc.slots;
    let mut eta = vec![sc.eta_max / 2.0; n];
    let mut tau = if scheme.fixed_tau() {
        vec![FIXED_TAU; n]
    } else {
        let c = sc.slot_length() * sc.p_circuit;
        SlotData::new(&traj, &eta, &sc).chi.iter().map(|x| x / (x + c)).collect()
    };
    let mut counts = InnerCounts::default();
    let mut polished = 0;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;

    for _ in 0..MAX_OUTER_ITERS {
        // Resource blocks. The incumbent competes only when feasible, so the
        // objective never drops once a feasible point is found.
        let mut cands: Vec<Candidate> = Vec::new();
        let mut routes: Vec<Vec<f64>> = Vec::new();
        if scheme.fixed_tau() {
            routes.push(tau.clone());
        } else {
            routes.push(tau_block(&traj, &eta, &sc, &tau, true, &mut counts, &mut polished));
            routes.push(tau_block(&traj, &eta, &sc, &tau, false, &mut counts, &mut polished));
        }
        for t in routes {
            let e = eta_block(&traj, &t, &eta, &sc, &mut counts);
            match feasible(&traj, &t, &e, &sc) {
                Some(obj) => cands.push(Candidate { tau: t, eta: e, feasible: true, objective: obj }),
                None => {
                    // Kept only as a last resort when nothing is feasible yet.
                    let obj = SlotData::new(&traj, &e, &sc).delivered(&t);
                    cands.push(Candidate { tau: t, eta: e, feasible: false, objective: obj });
                }
            }
        }
        if let Some(obj) = feasible(&traj, &tau, &eta, &sc) {
            cands.push(Candidate { tau: tau.clone(), eta: eta.clone(), feasible: true, objective: obj });
        }
        // Stable pick: earlier candidates win ties, the incumbent comes last.
        let mut pick: Option<Candidate> = None;
        for c in cands {
            if pick.as_ref().map_or(true, |p| c.beats(p)) {
                pick = Some(c);
            }
        }
        if let Some(p) = pick {
            tau = p.tau;
            eta = p.eta;
        }

        if !scheme.fixed_trajectory() {
            let out = solve_trajectory(&traj, &tau, &eta, &sc);
            counts.q += out.iterations;
            traj = out.traj;
        }

        let obj = SlotData::new(&traj, &eta, &sc).delivered(&tau);
        let prev = trace.last().copied();
        trace.push(obj);
        if let Some(p) = prev {
            if (obj - p).abs() <= sc.epsilon * p.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
    }

    let allocation = Allocation { tau, eta };
    let res = residuals(&traj, &allocation, &sc);
    let clamps = energy_causality(&allocation.tau, &traj, &sc).map(|l| l.clamps).unwrap_or(0);
    let report = SolveReport {
        scheme,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
        demand_met: res.demand_met(&sc, REL_TOL),
        residuals: res,
        inner_counts: counts,
        wall_time: 0.0,
        clamps,
        polished,
    };
    Ok(Solution { trajectory: traj, allocation, report, scenario: sc })
}
