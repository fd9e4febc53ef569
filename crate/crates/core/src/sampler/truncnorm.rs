//! Truncated normal draws for the probit latent variables.
//!
//! Inverse-CDF through the complementary error function while the truncation
//! point is within `TAIL_SWITCH` standard deviations, and Robert's
//! exponential-proposal rejection sampler further out in the tail.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use statrs::function::erf::{erfc, erfc_inv};

const TAIL_SWITCH: f64 = 8.0;

/// Standard normal conditioned on exceeding `lower`.
pub fn std_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower <= TAIL_SWITCH {
        // Upper-tail mass Q(a) = erfc(a / sqrt 2) / 2; draw q ~ U(0, Q(a)) and invert.
        let sqrt2 = std::f64::consts::SQRT_2;
        let tail = 0.5 * erfc(lower / sqrt2);
        let u: f64 = Open01.sample(rng);
        let z = sqrt2 * erfc_inv(2.0 * u * tail);
        // Guard the last ulp so the draw always honours the truncation.
        z.max(lower)
    } else {
        let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
        loop {
            let e: f64 = Exp1.sample(rng);
            let z = lower + e / rate;
            let u: f64 = Open01.sample(rng);
            if u.ln() <= -0.5 * (z - rate) * (z - rate) {
                return z;
            }
        }
    }
}

/// Latent `z ~ N(mean, 1)` restricted to `(0, inf)` when `positive`, else to
/// `(-inf, 0]`.
pub fn draw_latent<R: Rng + ?Sized>(mean: f64, positive: bool, rng: &mut R) -> f64 {
    if positive {
        mean + std_normal_above(-mean, rng)
    } else {
        mean - std_normal_above(mean, rng)
    }
}
