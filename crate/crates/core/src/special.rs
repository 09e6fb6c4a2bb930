//! Bessel function of the first kind, order zero, for complex arguments.
//!
//! The von Mises correlation closed forms evaluate `J0` at points such as
//! `j * sqrt(kappa^2 - x^2 - 2j kappa x cos(..))`, so the argument ranges over
//! the whole complex plane, not just the real line.

use core::f64::consts::PI;

use alloc::format;

use crate::{Error, Result, C64};

/// Below this modulus the power series is used.
const SERIES_RADIUS: f64 = 12.0;

/// `J0(z)` for complex `z`.
///
/// Power series for `|z| <= 12`, otherwise the defining integral
/// `(1/2pi) * int_0^{2pi} exp(-j z sin t) dt` by trapezoid refinement, which
/// converges geometrically for this periodic integrand.
pub fn complex_bessel_j0(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid_arg(format!("bessel J0 of non-finite argument {z}")));
    }
    if z.norm() <= SERIES_RADIUS {
        Ok(j0_series(z))
    } else {
        Ok(j0_integral(z))
    }
}

/// Modified Bessel `I0(x) = J0(jx)` for real `x`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    complex_bessel_j0(C64::new(0.0, x)).map(|v| v.re)
}

fn j0_series(z: C64) -> C64 {
    // sum_k (-z^2/4)^k / (k!)^2
    let w = -(z * z) / 4.0;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200u32 {
        let kf = k as f64;
        term = term * w / (kf * kf);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum
}

fn j0_integral(z: C64) -> C64 {
    let integrand = |t: f64| (C64::new(0.0, -1.0) * z * libm::sin(t)).exp();
    let mut n = 256usize;
    let mut prev = trapezoid(&integrand, n);
    loop {
        n *= 2;
        let next = trapezoid(&integrand, n);
        let done = (next - prev).norm() <= 1e-14 * next.norm().max(1e-300) || n >= 1 << 14;
        prev = next;
        if done {
            return prev;
        }
    }
}

fn trapezoid(f: &impl Fn(f64) -> C64, n: usize) -> C64 {
    let h = 2.0 * PI / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        acc += f(k as f64 * h);
    }
    acc / n as f64
}
