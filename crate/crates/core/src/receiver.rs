//! Aging-aware MMSE combining and instantaneous SINR.
//!
//! At data slot `i` the receiver holds two estimates of each user, `h_hat(i)`
//! and `h_hat(i_p)` for an earlier anchor slot `i_p`. Conditioning the
//! channel on both gives a mean `z` and a residual covariance `Q`; the SINR
//! of the tagged user then follows from `F = sum_k w_k (Q_k + z_k z_k^H) +
//! sigma_d^2 I` with `w_k = alpha_k^2 P_d,k`.

use alloc::format;

use nalgebra::RowDVector;

use crate::corrmodel::{ar_transition, CovarianceSet};
use crate::linalg::{self, hermitize, pinv_hermitian, repair_psd};
use crate::{CMat, CVec, Error, Result, C64};

/// Relative eigenvalue cutoff of the stacked-estimate covariance inverse.
pub const GAMMA_PINV_TOL: f64 = 1e-10;

/// `A(i_p -> i) = A(i-1) ... A(i_p)`.
pub fn multi_step_transition(ip: usize, i: usize, cov: &CovarianceSet) -> Result<CMat> {
    if ip >= i {
        return Err(Error::misuse(format!("anchor slot {ip} must precede slot {i}")));
    }
    let mut a = ar_transition(ip, cov)?;
    for t in ip + 1..i {
        a = ar_transition(t, cov)? * a;
    }
    Ok(a)
}

/// Stacked estimates `[h_hat(i); h_hat(i_p)]` of one user.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorStack {
    pub slot: usize,
    pub anchor: usize,
    pub current: CVec,
    pub anchored: CVec,
}

/// Statistics of the channel given the stacked estimates.
#[derive(Clone, Debug)]
pub struct ConditionalMoments {
    pub slot: usize,
    pub anchor: usize,
    /// `Psi`, `N_r x 2 N_r`.
    pub gain: CMat,
    /// `Q = C_h(i) - Psi [C_h_hat(i); C_h_hat(i_p) A^H]`.
    pub residual: CMat,
    /// `R_z = E[z z^H]`.
    pub r_z: CMat,
    pub mean: CVec,
    pub anchor_mean: CVec,
    /// Directions dropped by the pseudo-inverse of the stacked covariance.
    pub dropped: usize,
}

impl ConditionalMoments {
    /// `z = h_bar(i) + Psi zeta~` with `zeta~` centered on each slot's own mean.
    pub fn conditional_mean(&self, prior: &PriorStack) -> Result<CVec> {
        if prior.slot != self.slot || prior.anchor != self.anchor {
            return Err(Error::misuse(format!(
                "prior for slots ({}, {}) used with moments of ({}, {})",
                prior.slot, prior.anchor, self.slot, self.anchor
            )));
        }
        let n = self.mean.len();
        let mut centered = CVec::zeros(2 * n);
        centered.rows_mut(0, n).copy_from(&(&prior.current - &self.mean));
        centered.rows_mut(n, n).copy_from(&(&prior.anchored - &self.anchor_mean));
        Ok(&self.mean + &self.gain * centered)
    }
}

/// Moments for slot `i` with anchor `i_p` from the estimate covariances.
pub fn conditional_moments(
    cov: &CovarianceSet,
    i: usize,
    ip: usize,
    c_hat_i: &CMat,
    c_hat_ip: &CMat,
) -> Result<ConditionalMoments> {
    let n = cov.antennas();
    if c_hat_i.shape() != (n, n) || c_hat_ip.shape() != (n, n) {
        return Err(linalg::dims_error("estimate covariance", (n, n), c_hat_i.shape()));
    }
    let a = multi_step_transition(ip, i, cov)?;
    conditional_moments_with(&a, cov, i, ip, c_hat_i, c_hat_ip)
}

/// [`conditional_moments`] with a precomputed `A(i_p -> i)`.
pub fn conditional_moments_with(
    a: &CMat,
    cov: &CovarianceSet,
    i: usize,
    ip: usize,
    c_hat_i: &CMat,
    c_hat_ip: &CMat,
) -> Result<ConditionalMoments> {
    let n = cov.antennas();
    if c_hat_i.shape() != (n, n) || c_hat_ip.shape() != (n, n) || a.shape() != (n, n) {
        return Err(linalg::dims_error("estimate covariance", (n, n), c_hat_i.shape()));
    }
    let off = a * c_hat_ip;
    let mut top = CMat::zeros(n, 2 * n);
    top.view_mut((0, 0), (n, n)).copy_from(c_hat_i);
    top.view_mut((0, n), (n, n)).copy_from(&off);
    let mut gamma = CMat::zeros(2 * n, 2 * n);
    gamma.view_mut((0, 0), (n, 2 * n)).copy_from(&top);
    gamma.view_mut((n, 0), (n, n)).copy_from(&off.adjoint());
    gamma.view_mut((n, n), (n, n)).copy_from(c_hat_ip);
    let (gamma_inv, dropped) = pinv_hermitian(&gamma, GAMMA_PINV_TOL);
    let gain = &top * gamma_inv;
    let explained = hermitize(&(&gain * top.adjoint()));
    let c_i = cov.auto(i)?;
    let residual = repair_psd(&(&c_i - &explained), "conditional residual covariance Q")?;
    let mean = cov.mean(i)?.clone();
    let r_z = hermitize(&(&mean * mean.adjoint() + explained));
    Ok(ConditionalMoments {
        slot: i,
        anchor: ip,
        gain,
        residual,
        r_z,
        mean,
        anchor_mean: cov.mean(ip)?.clone(),
        dropped,
    })
}

/// Interference-plus-noise structure seen by the tagged user.
#[derive(Clone, Debug)]
pub struct SinrContext {
    /// `F`.
    pub f: CMat,
    /// `alpha_1^2 P_d` of the tagged user.
    pub tagged_weight: f64,
    pub z1: CVec,
}

impl SinrContext {
    /// `terms[k] = (w_k, Q_k, z_k)`, tagged user first.
    pub fn new(terms: &[(f64, &CMat, &CVec)], noise: f64) -> Result<Self> {
        let Some(&(w1, _, z1)) = terms.first() else {
            return Err(Error::invalid_arg("SINR context needs at least one user"));
        };
        let n = z1.len();
        let mut f = CMat::identity(n, n) * C64::new(noise, 0.0);
        for &(w, q, z) in terms {
            if q.shape() != (n, n) || z.len() != n {
                return Err(linalg::dims_error("user term", (n, n), q.shape()));
            }
            f += (q + z * z.adjoint()) * C64::new(w, 0.0);
        }
        Ok(SinrContext { f: hermitize(&f), tagged_weight: w1, z1: z1.clone() })
    }

    /// From a precomputed `S + sigma_d^2 I` and the conditional means.
    pub fn with_floor(floor: &CMat, terms: &[(f64, &CVec)]) -> Result<Self> {
        let Some(&(w1, z1)) = terms.first() else {
            return Err(Error::invalid_arg("SINR context needs at least one user"));
        };
        let mut f = floor.clone();
        for &(w, z) in terms {
            f += z * z.adjoint() * C64::new(w, 0.0);
        }
        Ok(SinrContext { f, tagged_weight: w1, z1: z1.clone() })
    }

    /// `F_1 = F - w_1 z_1 z_1^H`.
    pub fn f1(&self) -> CMat {
        &self.f - &self.z1 * self.z1.adjoint() * C64::new(self.tagged_weight, 0.0)
    }
}

/// `g = alpha_1 sqrt(P_d) z_1^H F^{-1}`.
pub fn mmse_combiner(ctx: &SinrContext) -> Result<RowDVector<C64>> {
    if ctx.tagged_weight == 0.0 {
        return Ok(RowDVector::zeros(ctx.z1.len()));
    }
    let x = linalg::solve_pd(&ctx.f, &CMat::from_column_slice(ctx.z1.len(), 1, ctx.z1.as_slice()), "F")?;
    Ok(x.column(0).adjoint() * C64::new(libm::sqrt(ctx.tagged_weight), 0.0))
}

/// `gamma = w_1 z_1^H F_1^{-1} z_1`.
pub fn instantaneous_sinr(ctx: &SinrContext) -> Result<f64> {
    if ctx.tagged_weight == 0.0 {
        return Ok(0.0);
    }
    let z = CMat::from_column_slice(ctx.z1.len(), 1, ctx.z1.as_slice());
    let x = linalg::solve_pd(&ctx.f1(), &z, "F_1")?;
    let q = (z.adjoint() * x)[(0, 0)].re;
    Ok((ctx.tagged_weight * q).max(0.0))
}

/// `u / (1 - u)` with `u = w_1 z_1^H F^{-1} z_1`.
pub fn instantaneous_sinr_ratio(ctx: &SinrContext) -> Result<f64> {
    if ctx.tagged_weight == 0.0 {
        return Ok(0.0);
    }
    let z = CMat::from_column_slice(ctx.z1.len(), 1, ctx.z1.as_slice());
    let x = linalg::solve_pd(&ctx.f, &z, "F")?;
    let u = ctx.tagged_weight * (z.adjoint() * x)[(0, 0)].re;
    if u >= 1.0 {
        return Err(Error::NotPd { what: "F_1".into() });
    }
    Ok(u / (1.0 - u))
}

/// `ln(1 + gamma)` in nats.
pub fn instantaneous_se(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid_arg(format!("SINR must be non-negative, got {gamma}")));
    }
    Ok(libm::log1p(gamma))
}
