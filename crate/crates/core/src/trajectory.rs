//! Trajectory block by successive convex approximation.
//!
//! Each round linearizes the problem around the current waypoints and solves
//! the resulting convex program with [`crate::convex`]. Per slot the program
//! carries the waypoint, two path-loss slacks `z1 >= d_s^a`, `z2 >= d_d^a`,
//! two distance under-estimates `y1, y2 <= d^2` used on the relayed side of the
//! caching constraint, and the stored energy after the slot.
//!
//! Every surrogate is a global bound in the conservative direction, so a
//! solution of the convex program is feasible for the true block problem and
//! its true objective is at least the surrogate value.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::channel::{distance_sq, path_loss, Trajectory};
use crate::convex::{solve_convex, Constraint, ConvexError, ConvexProgram, FnTerm, Linear, Quadratic, SolverOptions};
use crate::energy::LEDGER_TOL;
use crate::math::{self, Point2};
use crate::problem::SlotData;
use crate::scenario::{EhModel, Scenario};

pub const MAX_SCA_ITERS: usize = 30;
pub const SCA_TOL: f64 = 1e-6;

/// Energy a slot may borrow inside the convex program (J). Well inside the
/// ledger tolerance, it only exists to keep an energy-tight schedule strictly
/// feasible for the barrier.
const ENERGY_SLACK: f64 = 5e-13;

/// Per-slot path-loss slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackState {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

/// Tight slacks `z = (H^2 + |q - w|^2)^{a/2}` for every serving waypoint.
pub fn init_slack(traj: &Trajectory, sc: &Scenario) -> SlackState {
    let a = sc.path_loss_exp;
    let pts = traj.serving_points();
    SlackState {
        z1: pts.iter().map(|&q| path_loss(distance_sq(q, sc.source, sc.altitude), a)).collect(),
        z2: pts.iter().map(|&q| path_loss(distance_sq(q, sc.destination, sc.altitude), a)).collect(),
    }
}

/// `log2(1 + a / z)` and its derivative in `z`.
fn log_inv(a: f64, z: f64) -> (f64, f64) {
    (math::log2_1p(a / z), -a / (LN_2 * z * (z + a)))
}

/// Tangent lower bound of `log2(1 + omega0 P_s / z1)` at `z1_ref`.
pub fn theta1(z1: f64, z1_ref: f64, sc: &Scenario) -> f64 {
    let (v, d) = log_inv(sc.omega0 * sc.p_source, z1_ref);
    v + d * (z1 - z1_ref)
}

/// Partial derivatives of `log2(1 + a / (z1 z2))`.
fn log_inv2(a: f64, z1: f64, z2: f64) -> (f64, f64, f64) {
    let p = z1 * z2;
    let v = math::log2_1p(a / p);
    let k = -a / (LN_2 * (p + a));
    (v, k / z1, k / z2)
}

/// Joint tangent lower bound of `log2(1 + Theta eta P_s / (z1 z2))` at the
/// reference slacks.
pub fn theta2(z1: f64, z2: f64, z1_ref: f64, z2_ref: f64, eta: f64, sc: &Scenario) -> f64 {
    let a = sc.theta() * eta * sc.p_source;
    let (v, d1, d2) = log_inv2(a, z1_ref, z2_ref);
    v + d1 * (z1 - z1_ref) + d2 * (z2 - z2_ref)
}

/// Tangent lower bound of `1 / z1` at `z1_ref`.
pub fn z1_inverse_lb(z1: f64, z1_ref: f64) -> f64 {
    1.0 / z1_ref - (z1 - z1_ref) / (z1_ref * z1_ref)
}

/// The sigmoid after replacing `1/z1` by its tangent at `z_ref`:
/// `F(z) = 1 / (1 + exp(theta3 z + theta4))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidSurrogate {
    pub theta3: f64,
    pub theta4: f64,
    pub z_ref: f64,
}

impl SigmoidSurrogate {
    pub fn new(z_ref: f64, sc: &Scenario) -> Self {
        let k = sc.beta * sc.p_source * sc.omega0;
        Self { theta3: k / (z_ref * z_ref), theta4: -2.0 * k / z_ref + sc.beta * sc.nu, z_ref }
    }

    /// `-theta4 / theta3`: `F` is concave below, convex above.
    pub fn inflection(&self) -> f64 {
        -self.theta4 / self.theta3
    }

    pub fn value(&self, z: f64) -> f64 {
        math::logistic(-(self.theta3 * z + self.theta4))
    }

    /// Value, first and second derivative.
    fn derivs(&self, z: f64) -> (f64, f64, f64) {
        let f = self.value(z);
        let s = f * (1.0 - f);
        (f, -self.theta3 * s, self.theta3 * self.theta3 * s * (1.0 - 2.0 * f))
    }

    /// Tangent at the expansion point; a lower bound on the convex branch.
    pub fn tangent(&self, z: f64) -> f64 {
        let (f, d, _) = self.derivs(self.z_ref);
        f + d * (z - self.z_ref)
    }

    /// `F` on the concave branch, continued linearly past the inflection
    /// point. Concave everywhere and never above `F`.
    fn concave_hull(&self, z: f64) -> (f64, f64, f64) {
        let zs = self.inflection();
        if z <= zs {
            self.derivs(z)
        } else {
            (0.5 - self.theta3 / 4.0 * (z - zs), -self.theta3 / 4.0, 0.0)
        }
    }

    pub fn on_convex_branch(&self) -> bool {
        self.z_ref >= self.inflection()
    }
}

/// Harvest coefficient `(1 - tau) dt Xi / (1 - phi)` of the sigmoid model.
fn nleh_scale(tau: f64, sc: &Scenario) -> f64 {
    (1.0 - tau) * sc.slot_length() * sc.xi / (1.0 - sc.phi())
}

/// Surrogate harvested energy of one slot under the sigmoid model (J): the
/// tangent of `F` on the convex branch, `F` itself on the concave branch.
pub fn nleh_sigmoid_constraint(z1: f64, z1_ref: f64, tau: f64, sc: &Scenario) -> f64 {
    let s = SigmoidSurrogate::new(z1_ref, sc);
    let f = if s.on_convex_branch() { s.tangent(z1) } else { s.concave_hull(z1).0 };
    nleh_scale(tau, sc) * (f - sc.phi())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaStatus {
    /// Relative objective change fell below the tolerance.
    Converged,
    IterationLimit,
    /// The reference has no strictly feasible neighbourhood (e.g. `V_max = 0`).
    NoInterior,
    /// The convex solver failed; the reference is returned.
    SubproblemFailed,
    /// The candidate did not improve the true objective; the reference is kept.
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub traj: Trajectory,
    pub slack: SlackState,
    pub iterations: usize,
    /// True objective at the reference and after every accepted round.
    pub objective_trace: Vec<f64>,
    pub newton_steps: usize,
    pub status: ScaStatus,
    /// Whether the demand constraint was part of the last convex program.
    pub demand_enforced: bool,
}

const VARS: usize = 7;
const X: usize = 0;
const Y: usize = 1;
const Z1: usize = 2;
const Z2: usize = 3;
const Y1: usize = 4;
const Y2: usize = 5;
const E: usize = 6;

fn var(slot: usize, k: usize) -> usize {
    VARS * slot + k
}

/// Truth checks on a candidate waypoint set at fixed `tau`, `eta`.
struct Truth {
    objective: f64,
    caching_excess: f64,
    min_energy: f64,
}

fn truth(traj: &Trajectory, tau: &[f64], eta: &[f64], sc: &Scenario) -> Truth {
    let d = SlotData::new(traj, eta, sc);
    let delivered = d.delivered(tau);
    Truth {
        objective: delivered,
        caching_excess: delivered - d.received(tau) - sc.caching * sc.demand,
        min_energy: d.min_energy_slack(tau),
    }
}

struct Round {
    traj: Trajectory,
    /// Path-loss slacks at the subproblem optimum.
    #[cfg_attr(not(test), allow(dead_code))]
    slack: SlackState,
    newton_steps: usize,
    demand_enforced: bool,
}

enum RoundError {
    NoInterior,
    Failed,
}

/// Builds and solves one convexified program around `reference`.
fn round(reference: &Trajectory, tau: &[f64], eta: &[f64], sc: &Scenario) -> Result<Round, RoundError> {
    let n = sc.slots;
    let a = sc.path_loss_exp;
    let h2 = sc.altitude * sc.altitude;
    let dt = sc.slot_length();
    let step = sc.max_step();
    if !(step > 0.0) {
        return Err(RoundError::NoInterior);
    }

    // Interior start: pull tight segments slightly toward the straight line.
    let line = Trajectory::straight(sc);
    let tight = (0..n).any(|i| reference.step(i) >= step * (1.0 - 1e-9));
    let start = if tight {
        if line.max_step() >= step * (1.0 - 1e-9) {
            return Err(RoundError::NoInterior);
        }
        let theta = 1e-10;
        let mut pts: Vec<Point2> = reference.points.iter().zip(&line.points).map(|(&p, &l)| p.lerp(l, theta)).collect();
        pts[0] = sc.start;
        pts[n] = sc.end;
        Trajectory::new(pts)
    } else {
        reference.clone()
    };

    let refs = init_slack(reference, sc);
    let weight: Vec<f64> = tau.iter().map(|t| sc.bandwidth * t * dt).collect();
    let a1 = sc.omega0 * sc.p_source;
    let a2: Vec<f64> = eta.iter().map(|e| sc.theta() * e * sc.p_source).collect();
    let ref_pts = reference.serving_points();

    let ref_delivered: f64 = (0..n).map(|i| weight[i] * log_inv2(a2[i], refs.z1[i], refs.z2[i]).0).sum();
    let obj_scale = ref_delivered.max(1e-300);
    let cache = sc.caching * sc.demand;
    let bit_scale = ref_delivered.max(cache).max(1.0);

    let chi_ref: Vec<f64> = ref_pts.iter().map(|&q| crate::energy::chi(q, sc)).collect();
    let spend: Vec<f64> = tau.iter().map(|t| t * dt * sc.p_circuit).collect();
    let unit = chi_ref.iter().chain(&spend).copied().fold(0.0, f64::max).max(1e-300);

    let mut prog = ConvexProgram::new(VARS * n);
    prog.fix(var(n - 1, X), sc.end.x);
    prog.fix(var(n - 1, Y), sc.end.y);

    // Objective: maximize the tangent of the delivered bits in the slacks.
    for i in 0..n {
        let (_, d1, d2) = log_inv2(a2[i], refs.z1[i], refs.z2[i]);
        let s = weight[i] / obj_scale;
        prog.add_objective(Linear::new(vec![var(i, Z1), var(i, Z2)], vec![s * d1, s * d2]));
    }

    for i in 0..n {
        // d^2 <= z^{2/a}, one constraint per ground node.
        for (w, zk) in [(sc.source, Z1), (sc.destination, Z2)] {
            let p = 2.0 / a;
            prog.add_constraint(Constraint::new(0.0).with(FnTerm::new(
                vec![var(i, X), var(i, Y), var(i, zk)],
                move |x: &[f64], g: Option<&mut [f64]>, hs: Option<&mut [f64]>| {
                    let (dx, dy, z) = (x[0] - w.x, x[1] - w.y, x[2]);
                    let zp = if p == 1.0 { z } else { math::powf(z, p) };
                    if let Some(g) = g {
                        g[0] = 2.0 * dx / h2;
                        g[1] = 2.0 * dy / h2;
                        g[2] = if p == 1.0 { -1.0 / h2 } else { -p * zp / z / h2 };
                    }
                    if let Some(hs) = hs {
                        hs.fill(0.0);
                        hs[0] = 2.0 / h2;
                        hs[4] = 2.0 / h2;
                        hs[8] = if p == 1.0 { 0.0 } else { -p * (p - 1.0) * zp / (z * z) / h2 };
                    }
                    (dx * dx + dy * dy + h2 - zp) / h2
                },
            )));
        }
        // y <= tangent plane of d^2 at the reference, and y > 0.
        let q = ref_pts[i];
        for (w, yk) in [(sc.source, Y1), (sc.destination, Y2)] {
            let d2 = distance_sq(q, w, sc.altitude);
            let gx = 2.0 * (q.x - w.x);
            let gy = 2.0 * (q.y - w.y);
            let off = -(d2 - gx * q.x - gy * q.y) / h2;
            prog.add_constraint(
                Constraint::new(off).with(Linear::new(vec![var(i, yk), var(i, X), var(i, Y)], vec![1.0 / h2, -gx / h2, -gy / h2])),
            );
            prog.add_constraint(Constraint::new(0.0).with(Linear::new(vec![var(i, yk)], vec![-1.0 / h2])));
        }
    }

    // Mobility, squared and normalized.
    let r2 = step * step;
    for k in 0..n {
        let c = if k == 0 {
            let q0 = sc.start;
            Constraint::new(q0.norm_sq() / r2 - 1.0).with(Quadratic::new(
                vec![var(0, X), var(0, Y)],
                vec![2.0 / r2, 0.0, 0.0, 2.0 / r2],
                vec![-2.0 * q0.x / r2, -2.0 * q0.y / r2],
            ))
        } else {
            let s = 2.0 / r2;
            Constraint::new(-1.0).with(Quadratic::new(
                vec![var(k - 1, X), var(k - 1, Y), var(k, X), var(k, Y)],
                vec![s, 0.0, -s, 0.0, 0.0, s, 0.0, -s, -s, 0.0, s, 0.0, 0.0, -s, 0.0, s],
                vec![0.0; 4],
            ))
        };
        prog.add_constraint(c);
    }

    // Energy ledger with stored-energy variables.
    let mut floors = Vec::new();
    let mut energy_rows = Vec::with_capacity(n);
    for i in 0..n {
        let r = refs.z1[i];
        let e_vars = if i == 0 { vec![var(0, E)] } else { vec![var(i - 1, E), var(i, E)] };
        let e_coefs = if i == 0 { vec![1.0] } else { vec![-1.0, 1.0] };
        let mut c = Constraint::new(spend[i] / unit).with(Linear::new(e_vars, e_coefs));
        match sc.eh_model {
            EhModel::Linear => {
                let k = (1.0 - tau[i]) * sc.mu * dt * a1 / unit;
                // -k (2/r - z/r^2)
                c.offset -= 2.0 * k / r;
                c.push(Linear::new(vec![var(i, Z1)], vec![k / (r * r)]));
            }
            EhModel::NonLinear => {
                let k = nleh_scale(tau[i], sc) / unit;
                let s = SigmoidSurrogate::new(r, sc);
                c.offset += k * sc.phi();
                if s.on_convex_branch() && s.z_ref > s.inflection() * (1.0 + 1e-9) {
                    let (f, d, _) = s.derivs(r);
                    c.offset -= k * (f - d * r);
                    c.push(Linear::new(vec![var(i, Z1)], vec![-k * d]));
                    if s.inflection() > 0.0 {
                        floors.push((i, s.inflection()));
                    }
                } else {
                    c.push(FnTerm::new(vec![var(i, Z1)], move |x: &[f64], g: Option<&mut [f64]>, hs: Option<&mut [f64]>| {
                        let (f, d, dd) = s.concave_hull(x[0]);
                        if let Some(g) = g {
                            g[0] = -k * d;
                        }
                        if let Some(hs) = hs {
                            hs[0] = -k * dd;
                        }
                        -k * f
                    }));
                }
            }
        }
        energy_rows.push(prog.constraints.len());
        prog.add_constraint(c);
        prog.add_constraint(Constraint::new(-ENERGY_SLACK / unit).with(Linear::new(vec![var(i, E)], vec![-1.0])));
    }
    for &(i, zs) in &floors {
        let s = 1.0 / zs;
        prog.add_constraint(Constraint::new(1.0).with(Linear::new(vec![var(i, Z1)], vec![-s])));
    }

    // Caching: sum w Rup(y) - sum w theta1(z1) - sigma S - tol <= 0. Every
    // term is written as a deviation from the reference so the row does not
    // lose its last digits to cancellation near the optimum.
    let tol_c = 1e-9 * bit_scale;
    let pw = a / 2.0;
    let rup_ref: Vec<f64> = (0..n).map(|i| math::log2_1p(a2[i] / (refs.z1[i] * refs.z2[i]))).collect();
    let excess: f64 = (0..n).map(|i| weight[i] * (rup_ref[i] - log_inv(a1, refs.z1[i]).0)).sum::<f64>() - cache;
    let mut cach = Constraint::new((excess - tol_c) / bit_scale);
    for i in 0..n {
        let (_, d) = log_inv(a1, refs.z1[i]);
        let s = weight[i] / bit_scale;
        cach.offset += s * d * refs.z1[i];
        cach.push(Linear::new(vec![var(i, Z1)], vec![-s * d]));
        if a2[i] > 0.0 && s > 0.0 {
            let amp = a2[i];
            let u0 = amp / (refs.z1[i] * refs.z2[i]);
            cach.push(FnTerm::new(vec![var(i, Y1), var(i, Y2)], move |x: &[f64], g: Option<&mut [f64]>, hs: Option<&mut [f64]>| {
                let (y1, y2) = (x[0], x[1]);
                let u = amp * math::powf(y1 * y2, -pw);
                let d1 = -pw * u / (LN_2 * (1.0 + u));
                let d2 = pw * pw * u / (LN_2 * (1.0 + u) * (1.0 + u));
                if let Some(g) = g {
                    g[0] = s * d1 / y1;
                    g[1] = s * d1 / y2;
                }
                if let Some(hs) = hs {
                    hs[0] = s * (d2 - d1) / (y1 * y1);
                    hs[1] = s * d2 / (y1 * y2);
                    hs[2] = hs[1];
                    hs[3] = s * (d2 - d1) / (y2 * y2);
                }
                if y1 > 0.0 && y2 > 0.0 {
                    // log2(1 + u) - log2(1 + u0) without cancellation.
                    s * math::log2_1p((u - u0) / (1.0 + u0))
                } else {
                    f64::INFINITY
                }
            }));
        }
    }
    prog.add_constraint(cach);

    // Starting point.
    let sl = init_slack(&start, sc);
    let mut x0 = vec![0.0; VARS * n];
    let start_pts = start.serving_points();
    for i in 0..n {
        let q = start_pts[i];
        x0[var(i, X)] = q.x;
        x0[var(i, Y)] = q.y;
        x0[var(i, Z1)] = sl.z1[i] * (1.0 + 1e-12);
        x0[var(i, Z2)] = sl.z2[i] * (1.0 + 1e-12);
        for (w, yk) in [(sc.source, Y1), (sc.destination, Y2)] {
            let qr = ref_pts[i];
            let plane = distance_sq(qr, w, sc.altitude) + 2.0 * (qr - w).dot(q - qr);
            x0[var(i, yk)] = plane * (1.0 - 1e-12);
        }
    }
    // Stored energy: the exact running balance minus a margin that grows
    // strictly from slot to slot, so every ledger row has room to spare.
    let floor = -ENERGY_SLACK / unit;
    let mut balance = Vec::with_capacity(n);
    for i in 0..n {
        // The row reads `offset + e_i - e_{i-1} - harvest`, so at e_i = 0 its
        // negated value is the largest admissible e_i.
        x0[var(i, E)] = 0.0;
        let hi = -prog.constraints[energy_rows[i]].value(&x0);
        x0[var(i, E)] = hi;
        balance.push(hi);
    }
    let room = balance.iter().map(|b| b - floor).fold(f64::INFINITY, f64::min);
    if !(room > 0.0) {
        return Err(RoundError::NoInterior);
    }
    for (i, b) in balance.iter().enumerate() {
        x0[var(i, E)] = b - room * (i + 1) as f64 / (n + 1) as f64;
    }

    // Demand, only when the reference already meets it.
    let tol_d = 1e-9 * sc.demand.max(1.0);
    let start_obj: f64 = (0..n).map(|i| weight[i] * theta2(x0[var(i, Z1)], x0[var(i, Z2)], refs.z1[i], refs.z2[i], eta[i], sc)).sum();
    let demand_enforced = sc.demand > 0.0 && start_obj > sc.demand - tol_d;
    if demand_enforced {
        let s = 1.0 / sc.demand;
        let mut c = Constraint::new((sc.demand - tol_d) * s);
        for i in 0..n {
            let (v, d1, d2) = log_inv2(a2[i], refs.z1[i], refs.z2[i]);
            let wv = weight[i] * s;
            c.offset -= wv * (v - d1 * refs.z1[i] - d2 * refs.z2[i]);
            c.push(Linear::new(vec![var(i, Z1), var(i, Z2)], vec![-wv * d1, -wv * d2]));
        }
        prog.add_constraint(c);
    }

    if prog.max_violation(&x0) >= 0.0 {
        return Err(RoundError::NoInterior);
    }
    // Start close to the central path: the reference is already near-optimal,
    // so a large first barrier weight would only drag the iterate away.
    let opts = SolverOptions {
        mu_init: 1e-2 / prog.constraints.len() as f64,
        mu_final: 1e-10,
        max_newton_per_stage: 200,
        max_newton_total: 5000,
        mu_factor: 4.0,
        ..SolverOptions::default()
    };
    let sol = match solve_convex(&prog, &x0, &opts) {
        Ok(s) => s,
        Err(ConvexError::MaxIterations { best }) => best,
        Err(ConvexError::InfeasibleStart { .. }) => return Err(RoundError::NoInterior),
        Err(_) => return Err(RoundError::Failed),
    };
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(sc.start);
    for i in 0..n {
        pts.push(Point2::new(sol.x[var(i, X)], sol.x[var(i, Y)]));
    }
    pts[n] = sc.end;
    Ok(Round {
        traj: Trajectory::new(pts),
        slack: SlackState {
            z1: (0..n).map(|i| sol.x[var(i, Z1)]).collect(),
            z2: (0..n).map(|i| sol.x[var(i, Z2)]).collect(),
        },
        newton_steps: sol.newton_steps,
        demand_enforced,
    })
}

/// Runs SCA rounds from `traj_ref` at fixed `tau`, `eta`.
///
/// Rounds stop at [`MAX_SCA_ITERS`] or once the true objective improves by
/// less than [`SCA_TOL`] relative. A round is only accepted if its waypoints
/// satisfy the true constraints and do not lower the true objective, so the
/// result is never worse than `traj_ref`.
pub fn solve_trajectory(traj_ref: &Trajectory, tau: &[f64], eta: &[f64], sc: &Scenario) -> TrajectoryOutcome {
    let mut current = traj_ref.clone();
    let base = truth(&current, tau, eta, sc);
    let mut trace = vec![base.objective];
    let mut best = base;
    let mut outcome_status = ScaStatus::IterationLimit;
    let mut newton_steps = 0;
    let mut iterations = 0;
    let mut demand_enforced = false;
    let bit_scale = best.objective.max(sc.caching * sc.demand).max(1.0);
    let caching_ok = |t: &Truth, reference: &Truth| t.caching_excess <= reference.caching_excess.max(0.0) + 1e-8 * bit_scale;

    for _ in 0..MAX_SCA_ITERS {
        iterations += 1;
        let r = match round(&current, tau, eta, sc) {
            Ok(r) => r,
            Err(RoundError::NoInterior) => {
                outcome_status = ScaStatus::NoInterior;
                break;
            }
            Err(RoundError::Failed) => {
                outcome_status = ScaStatus::SubproblemFailed;
                break;
            }
        };
        newton_steps += r.newton_steps;
        demand_enforced = r.demand_enforced;
        let t = truth(&r.traj, tau, eta, sc);
        let demand_ok = !r.demand_enforced || t.objective >= sc.demand * (1.0 - 1e-9);
        let ok = r.traj.validate(sc).is_ok()
            && t.objective >= best.objective
            && t.min_energy >= -LEDGER_TOL
            && caching_ok(&t, &best)
            && demand_ok;
        if !ok {
            outcome_status = ScaStatus::NoImprovement;
            break;
        }
        let gain = (t.objective - best.objective) / best.objective.abs().max(1e-300);
        current = r.traj;
        trace.push(t.objective);
        best = t;
        if gain < SCA_TOL {
            outcome_status = ScaStatus::Converged;
            break;
        }
    }
    TrajectoryOutcome {
        slack: init_slack(&current, sc),
        traj: current,
        iterations,
        objective_trace: trace,
        newton_steps,
        status: outcome_status,
        demand_enforced,
    }
}

#[cfg(test)]
mod tests;
