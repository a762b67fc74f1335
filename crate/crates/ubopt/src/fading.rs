//! Monte-Carlo ergodic rates under small-scale fading, used to check the
//! deterministic rate expressions the optimizer works with.
//!
//! Uplink `s -> u`: Rician with factor `K` around the path-loss mean.
//! Backscatter `s -> u -> d`: exponential (Rayleigh) power on `s -> u`, Rician
//! `u -> d`. Every fading power has unit mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use ubopt_core::channel::{distance_sq, path_loss};
use ubopt_core::{Point2, Scenario};

/// Default Rician factor, 10 dB.
pub const DEFAULT_RICIAN_K: f64 = 10.0;

/// `|h|^2` for `h = sqrt(K/(K+1)) + sqrt(1/(K+1)) CN(0, 1)`.
fn rician_power<R: Rng>(rng: &mut R, k: f64) -> f64 {
    let (los, nlos) = if k.is_infinite() { (1.0, 0.0) } else { ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt()) };
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2 * nlos;
    let a = los + s * re;
    let b = s * im;
    a * a + b * b
}

/// Estimated `(uplink, backscatter)` rates in bits/s at waypoint `q` with
/// coefficient `eta`. Deterministic for a given seed.
pub fn mc_ergodic_rates(q: Point2, eta: f64, sc: &Scenario, k: f64, draws: usize, seed: u64) -> (f64, f64) {
    assert!(draws >= 1, "at least one draw");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g_su = sc.omega0 / path_loss(distance_sq(q, sc.source, sc.altitude), sc.path_loss_exp);
    let g_ud = sc.omega0 / path_loss(distance_sq(q, sc.destination, sc.altitude), sc.path_loss_exp);
    let snr_u = g_su * sc.p_source;
    let snr_d = eta * sc.p_source * g_su * g_ud / sc.noise_power;
    let (mut up, mut down) = (0.0, 0.0);
    for _ in 0..draws {
        up += (snr_u * rician_power(&mut rng, k)).ln_1p();
        let x: f64 = rng.sample(Exp1);
        let y = rician_power(&mut rng, k);
        down += (snr_d * x * y).ln_1p();
    }
    let scale = sc.bandwidth / (draws as f64 * std::f64::consts::LN_2);
    (up * scale, down * scale)
}
