use super::*;
use crate::bcd::make_fixed_trajectory;
use crate::dts::{solve_tau, DtsOptions};
use crate::energy::energy_causality;
use crate::eta::solve_eta;
use crate::scenario::default_scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_term(a: f64, z1: f64, z2: f64) -> f64 {
    libm::log2(1.0 + a / (z1 * z2))
}

#[test]
fn slack_initialization() {
    let sc = Scenario { slots: 2, duration: 1.0, start: Point2::new(5.0, 0.0), end: Point2::new(5.0, 0.0), ..default_scenario() };
    let traj = Trajectory::straight(&sc);
    let s = init_slack(&traj, &sc);
    assert!(s.z1.iter().all(|&z| z == 100.0));
    let sc3 = Scenario { path_loss_exp: 3.0, ..sc.clone() };
    let s3 = init_slack(&traj, &sc3);
    assert!(s3.z1.iter().all(|&z| (z - 1000.0).abs() < 1e-9));
    let sc = default_scenario();
    let traj = Trajectory::straight(&sc);
    let s = init_slack(&traj, &sc);
    for (i, &q) in traj.serving_points().iter().enumerate() {
        let d2 = distance_sq(q, sc.source, sc.altitude);
        assert!((d2 - s.z1[i]).abs() <= 1e-12 * d2);
    }
}

#[test]
fn theta1_tangent_below() {
    let sc = default_scenario();
    let h = sc.altitude * sc.altitude;
    let a = sc.omega0 * sc.p_source;
    for r in [h, 3.0 * h, 9.0 * h] {
        let exact = math::log2_1p(a / r);
        assert!((theta1(r, r, &sc) - exact).abs() <= 1e-12 * exact);
        for k in 0..1000 {
            let z = h + 9.0 * h * k as f64 / 999.0;
            assert!(theta1(z, r, &sc) <= math::log2_1p(a / z) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn theta2_tangent_below() {
    let sc = default_scenario();
    let h = sc.altitude * sc.altitude;
    let eta = 0.3;
    let a = sc.theta() * eta * sc.p_source;
    let (r1, r2) = (2.0 * h, 1.3 * h);
    let exact = log_term(a, r1, r2);
    assert!((theta2(r1, r2, r1, r2, eta, &sc) - exact).abs() <= 1e-12 * exact);
    for i in 0..40 {
        for j in 0..25 {
            let z1 = h + 9.0 * h * i as f64 / 39.0;
            let z2 = h + 9.0 * h * j as f64 / 24.0;
            assert!(theta2(z1, z2, r1, r2, eta, &sc) <= log_term(a, z1, z2) + 1e-12);
        }
    }
    assert_eq!(theta2(3.0 * h, h, r1, r2, 0.0, &sc), 0.0);
}

#[test]
fn inverse_tangent_below() {
    let r = 150.0;
    assert_eq!(z1_inverse_lb(r, r), 1.0 / r);
    assert_eq!(z1_inverse_lb(2.0 * r, r), 0.0);
    for k in 1..1000 {
        let z = k as f64;
        assert!(z1_inverse_lb(z, r) <= 1.0 / z);
    }
}

#[test]
fn sigmoid_surrogate() {
    let sc = default_scenario();
    let s = SigmoidSurrogate::new(200.0, &sc);
    // Default powers sit far below nu: the whole range is the convex branch.
    assert!(s.on_convex_branch() && s.inflection() < 0.0);
    assert!((s.tangent(200.0) - s.value(200.0)).abs() < 1e-15);
    for k in 0..1000 {
        let z = s.inflection().max(1.0) + k as f64;
        assert!(s.tangent(z) <= s.value(z) + 1e-15);
    }
    // Strong link: the expansion point lies on the concave side.
    let hot = Scenario { omega0: 1.0, p_source: 10.0, ..default_scenario() };
    let s = SigmoidSurrogate::new(100.0, &hot);
    assert!(!s.on_convex_branch());
    assert!((s.value(s.inflection()) - 0.5).abs() < 1e-15);
    // Convex-branch tangent on a strong link.
    let s = SigmoidSurrogate::new(20_000.0, &hot);
    assert!(s.on_convex_branch());
    for k in 0..1000 {
        let z = s.inflection() + 40.0 * k as f64;
        assert!(s.tangent(z) <= s.value(z) + 1e-15);
    }
}

#[test]
fn sigmoid_surrogate_bounds_true_harvest() {
    let sc = Scenario { eh_model: EhModel::NonLinear, ..default_scenario() };
    for zr in [100.0, 300.0, 900.0] {
        let exact = crate::energy::harvest_nonlinear(0.2, Point2::new(5.0, libm::sqrt(zr - 100.0)), &sc);
        assert!((nleh_sigmoid_constraint(zr, zr, 0.2, &sc) - exact).abs() <= 1e-12 * exact.abs().max(1e-18));
        for k in 0..200 {
            let z = 100.0 + 5.0 * k as f64;
            let truth = crate::energy::harvest_nonlinear(0.2, Point2::new(5.0, libm::sqrt(z - 100.0)), &sc);
            assert!(nleh_sigmoid_constraint(z, zr, 0.2, &sc) <= truth + 1e-18);
        }
    }
}

#[test]
fn frozen_when_hovering() {
    let p = Point2::new(3.0, 4.0);
    let sc = Scenario { slots: 6, duration: 3.0, v_max: 0.0, start: p, end: p, demand: 0.0, ..default_scenario() };
    let traj = Trajectory::straight(&sc);
    let out = solve_trajectory(&traj, &[0.5; 6], &[0.2; 6], &sc);
    assert_eq!(out.traj, traj);
    assert_eq!(out.status, ScaStatus::NoInterior);
}

/// One free waypoint: compare against a dense grid over the reachable lens.
#[test]
fn single_free_waypoint_matches_grid() {
    let sc = Scenario { slots: 2, duration: 1.0, v_max: 30.0, demand: 0.0, caching: 0.0, ..default_scenario() };
    let tau = [0.5, 0.5];
    let eta = [1e-7, 1e-7];
    let start = Trajectory::new(vec![sc.start, Point2::new(10.0, 10.0), sc.end]);
    let out = solve_trajectory(&start, &tau, &eta, &sc);
    let got = *out.objective_trace.last().unwrap();

    let limit = sc.max_step();
    let mut best = f64::NEG_INFINITY;
    let mut arg = Point2::default();
    let h = 0.02;
    for i in 0..=2000 {
        for j in 0..=1500 {
            let q = Point2::new(-10.0 + i as f64 * h, -10.0 + j as f64 * h);
            if (q - sc.start).norm() > limit || (sc.end - q).norm() > limit {
                continue;
            }
            let t = Trajectory::new(vec![sc.start, q, sc.end]);
            let tr = truth(&t, &tau, &eta, &sc);
            if tr.caching_excess <= 0.0 && tr.min_energy >= -LEDGER_TOL && tr.objective > best {
                best = tr.objective;
                arg = q;
            }
        }
    }
    assert!(got >= best * (1.0 - 1e-6), "{got} vs {best}");
    assert!((out.traj.points[1] - arg).norm() <= 2.0 * h, "{:?} vs {:?}", out.traj.points[1], arg);
}

fn block_inputs(sc: &Scenario) -> (Trajectory, Vec<f64>, Vec<f64>) {
    let traj = make_fixed_trajectory(sc).unwrap();
    let n = sc.slots;
    let eta0 = vec![sc.eta_max / 2.0; n];
    let tau = match solve_tau(&traj, &eta0, sc, None, &DtsOptions::default()) {
        Ok(s) => s.tau,
        Err(crate::dts::DtsError::DemandUnreachable { best }) => best.tau,
        Err(e) => panic!("{e}"),
    };
    let eta = match solve_eta(&traj, &tau, sc, &eta0) {
        Ok(s) => s.eta,
        Err(crate::eta::EtaError::DemandUnreachable { best }) => best.eta,
        Err(e) => panic!("{e}"),
    };
    (traj, tau, eta)
}

#[test]
fn ascent_and_feasibility_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..12 {
        let n = rng.random_range(4..30);
        let mut sc = Scenario { slots: n, duration: n as f64 * 0.5, ..default_scenario() };
        sc.eh_model = if k % 2 == 0 { EhModel::Linear } else { EhModel::NonLinear };
        sc.p_source = rng.random_range(1.0..20.0);
        sc.caching = rng.random_range(0.0..1.0);
        sc.demand = rng.random_range(1e3..1e6);
        let (traj, tau, eta) = block_inputs(&sc);
        let out = solve_trajectory(&traj, &tau, &eta, &sc);
        for w in out.objective_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        out.traj.validate(&sc).unwrap();
        assert!(energy_causality(&tau, &out.traj, &sc).unwrap().feasible());
        let t = truth(&out.traj, &tau, &eta, &sc);
        assert!(t.caching_excess <= 1e-8 * t.objective.max(sc.caching * sc.demand).max(1.0));
    }
}

#[test]
fn slacks_are_active_at_solution() {
    let sc = Scenario { slots: 20, duration: 10.0, ..default_scenario() };
    let (traj, tau, eta) = block_inputs(&sc);
    let Ok(r) = round(&traj, &tau, &eta, &sc) else { panic!("round failed") };
    let refs = init_slack(&traj, &sc);
    let tight = init_slack(&r.traj, &sc);
    let w: Vec<f64> = tau.iter().map(|t| sc.bandwidth * t * sc.slot_length()).collect();
    let surrogate = |s: &SlackState| -> f64 {
        (0..sc.slots).map(|i| w[i] * theta2(s.z1[i], s.z2[i], refs.z1[i], refs.z2[i], eta[i], &sc)).sum()
    };
    let (a, b) = (surrogate(&r.slack), surrogate(&tight));
    assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
}
