//! Shared helpers for unit tests.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{CMat, CVec, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| cn(rng))
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cn(rng))
}

/// `G G^H + shift I`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> CMat {
    let g = random_mat(rng, n, n);
    &g * g.adjoint() + CMat::identity(n, n) * C64::new(shift, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Periodic trapezoid rule on `[-pi, pi)`, spectrally accurate for smooth
/// periodic integrands.
pub fn circle_mean(n: usize, mut f: impl FnMut(f64) -> C64) -> C64 {
    let h = 2.0 * core::f64::consts::PI / n as f64;
    let s: C64 = (0..n).map(|k| f(-core::f64::consts::PI + h * k as f64)).sum();
    s * (h / (2.0 * core::f64::consts::PI))
}
