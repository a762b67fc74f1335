use super::*;
use crate::math::Point2;
use crate::scenario::default_scenario;
use alloc::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(n: usize, rng: &mut ChaCha8Rng) -> (Scenario, Trajectory, Vec<f64>) {
    let sc = Scenario { slots: n, duration: n as f64 * 0.5, v_max: 100.0, ..default_scenario() };
    let pts = (0..=n)
        .map(|i| {
            if i == 0 {
                sc.start
            } else if i == n {
                sc.end
            } else {
                Point2::new(rng.random_range(-10.0..30.0), rng.random_range(-10.0..20.0))
            }
        })
        .collect();
    let tau = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    (sc, Trajectory::new(pts), tau)
}

#[test]
fn surrogate_is_tight_and_above() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (sc, traj, tau) = setup(3, &mut rng);
    let c = EtaCoeffs::new(&traj, &tau, &sc);
    let r: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..sc.eta_max)).collect();
    let exact = c.delivered(&r);
    let at_ref = surrogate_rate_upper(&r, &r, &tau, &traj, &sc);
    assert!((at_ref - exact).abs() <= 1e-12 * exact);
    let h = sc.eta_max / 99.0;
    for i in 0..100 {
        let e = vec![i as f64 * h, sc.eta_max - i as f64 * h, (i % 10) as f64 * h * 10.0];
        assert!(surrogate_rate_upper(&e, &r, &tau, &traj, &sc) >= c.delivered(&e) * (1.0 - 1e-12));
    }
}

#[test]
fn large_cache_saturates_at_eta_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut sc, traj, tau) = setup(5, &mut rng);
    sc.caching = 1.0;
    sc.demand = 1e12;
    let c = EtaCoeffs::new(&traj, &tau, &sc);
    sc.demand = 0.0;
    let sol = solve_eta_on(&EtaCoeffs { budget: c.budget + 1e12, ..c }, &sc, &[0.25; 5]).unwrap();
    assert!(sol.eta.iter().all(|&e| e == sc.eta_max));
}

#[test]
fn no_cache_makes_relay_match_reception() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut sc, traj, tau) = setup(4, &mut rng);
    sc.caching = 0.0;
    sc.demand = 0.0;
    let c = EtaCoeffs::new(&traj, &tau, &sc);
    let sol = solve_eta(&traj, &tau, &sc, &[sc.eta_max / 2.0; 4]).unwrap();
    // Bisection on the common value solving G(e, .., e) = budget.
    let (mut lo, mut hi) = (0.0, sc.eta_max);
    assert!(c.delivered(&[hi; 4]) > c.budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c.delivered(&[mid; 4]) > c.budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for e in &sol.eta {
        assert!((e - lo).abs() <= 1e-6 * lo, "{e} vs {lo}");
    }
    assert!(sol.caching_slack >= 0.0 && sol.caching_slack <= 1e-6 * c.budget);
}

fn grid_best(c: &EtaCoeffs, sc: &Scenario, steps: usize) -> f64 {
    let h = sc.eta_max / steps as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            for k in 0..=steps {
                let g = c.delivered(&[i as f64 * h, j as f64 * h, k as f64 * h]);
                if g <= c.budget && g >= sc.demand && g > best {
                    best = g;
                }
            }
        }
    }
    best
}

#[test]
fn matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let (mut sc, traj, tau) = setup(3, &mut rng);
        sc.caching = rng.random_range(0.0..1.0);
        sc.demand = rng.random_range(1e3..2e6);
        let c = EtaCoeffs::new(&traj, &tau, &sc);
        let best = grid_best(&c, &sc, 200);
        match solve_eta_on(&c, &sc, &[sc.eta_max / 2.0; 3]) {
            Ok(sol) => {
                assert!(sol.caching_slack >= -1e-9 * c.budget);
                assert!(sol.objective >= best * (1.0 - 5e-3));
            }
            Err(EtaError::DemandUnreachable { .. }) => assert_eq!(best, f64::NEG_INFINITY),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn trace_is_monotone_once_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(2..30);
        let (mut sc, traj, tau) = setup(n, &mut rng);
        sc.caching = rng.random_range(0.0..0.01);
        sc.demand = rng.random_range(1e3..1e5);
        let init: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..sc.eta_max)).collect();
        let c = EtaCoeffs::new(&traj, &tau, &sc);
        sc.demand = 0.0;
        let sol = solve_eta_on(&c, &sc, &init).unwrap();
        let first = sol.trace.iter().position(|&g| g <= c.budget * (1.0 + 1e-12)).unwrap_or(sol.trace.len());
        for w in sol.trace[first..].windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
    }
}

/// KKT check at the returned point: the caching multiplier recovered from
/// interior coordinates is positive and common to all of them, the constraint
/// is then tight, and boundary coordinates carry correctly signed box
/// multipliers. This rules out the cases with an inactive caching constraint.
#[test]
fn stationarity_at_returned_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let (mut sc, traj, tau) = setup(6, &mut rng);
        sc.caching = rng.random_range(0.0..0.3);
        sc.demand = rng.random_range(1e3..1e6);
        let c = EtaCoeffs::new(&traj, &tau, &sc);
        sc.demand = 0.0;
        let sol = solve_eta_on(&c, &sc, &[sc.eta_max / 2.0; 6]).unwrap();
        if sol.eta.iter().all(|&e| e == sc.eta_max) {
            continue;
        }
        // Objective gradient and linearized-constraint gradient coincide at
        // the fixed point; the multiplier is their ratio.
        let grad = c.slopes(&sol.eta);
        let expansion = shifted(&sol.eta, 0.0, sc.eta_max);
        let lin = c.slopes(&expansion);
        let interior: Vec<usize> = (0..6).filter(|&n| sol.eta[n] > 0.0 && sol.eta[n] < sc.eta_max).collect();
        assert!(!interior.is_empty());
        let lambda5 = interior.iter().map(|&n| grad[n] / lin[n]).sum::<f64>() / interior.len() as f64;
        assert!(lambda5 > 0.0);
        assert!(sol.caching_slack.abs() <= 1e-6 * c.budget, "constraint must be tight");
        let scale = grad.iter().copied().fold(0.0, f64::max);
        for n in 0..6 {
            let r = grad[n] - lambda5 * lin[n];
            let e = sol.eta[n];
            if e > 0.0 && e < sc.eta_max {
                assert!(r.abs() <= 1e-6 * scale);
            } else if e == sc.eta_max {
                assert!(r >= -1e-6 * scale);
            } else {
                assert!(r <= 1e-6 * scale);
            }
        }
    }
}

#[test]
fn all_zero_tau_is_degenerate() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (sc, traj, _) = setup(3, &mut rng);
    assert_eq!(solve_eta(&traj, &[0.0; 3], &sc, &[0.1; 3]), Err(EtaError::Degenerate));
}

proptest! {
    #[test]
    fn output_stays_in_box(seed in 0u64..1000, cache in 0.0f64..1.0, init in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sc, traj, tau) = setup(5, &mut rng);
        sc.caching = cache;
        sc.demand = 1e4;
        let c = EtaCoeffs::new(&traj, &tau, &sc);
        sc.demand = 0.0;
        let sol = solve_eta_on(&c, &sc, &[init; 5]).unwrap();
        prop_assert!(sol.eta.iter().all(|&e| (0.0..=sc.eta_max).contains(&e)));
        prop_assert!(sol.caching_slack >= -1e-9 * c.budget.max(1.0));
    }
}
