//! LMMSE channel estimation from the pilots of neighbouring frames.
//!
//! Pilot slot observations are `y_p = alpha sqrt(P_p) (I ⊗ s) h + n_p` with a
//! unit-modulus sequence `s` of length `tau_p`. After despreading, each pilot
//! gives `h(p_j) + noise` with noise variance `c = sigma_p^2 / (alpha^2 P_p
//! tau_p)`, and the estimate of slot `i` is the Wiener interpolation of the
//! window's despread pilots.

use alloc::format;
use alloc::vec::Vec;

use crate::corrmodel::CovarianceSet;
use crate::layout::{FrameLayout, SlotKind};
use crate::linalg::{self, hermitize};
use crate::scenario::WindowRule;
use crate::{CMat, CVec, Error, Result, C64};

/// Pilots used to estimate the slots of one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PilotWindow {
    pub frame: usize,
    /// Pilot slots, strictly increasing.
    pub slots: Vec<usize>,
}

impl PilotWindow {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Length of the stacked pilot observation, `p N_r tau_p`.
    pub fn stack_size(&self, antennas: usize, pilot_length: usize) -> usize {
        self.slots.len() * antennas * pilot_length
    }
}

/// Window of frame `m` under `rule`.
pub fn pilot_window(layout: &FrameLayout, m: usize, rule: WindowRule) -> Result<PilotWindow> {
    let frames = layout.frame_count();
    if m == 0 || m > frames {
        return Err(Error::misuse(format!("frame {m} outside 1..={frames}")));
    }
    let range = match rule {
        WindowRule::OwnFrame => m..=m,
        WindowRule::NearestThree if frames <= 3 => 1..=frames,
        WindowRule::NearestThree => {
            let start = (m.max(2) - 1).min(frames - 2);
            start..=start + 2
        }
    };
    Ok(PilotWindow { frame: m, slots: range.map(|f| layout.pilot_slot(f)).collect() })
}

/// Pilot sequence `s_k = exp(j pi k^2 / tau)`, unit modulus.
pub fn pilot_sequence(tau: usize) -> Vec<C64> {
    (0..tau)
        .map(|k| C64::from_polar(1.0, core::f64::consts::PI * (k * k) as f64 / tau as f64))
        .collect()
}

/// `S = I_n ⊗ s` as an explicit `(n tau) x n` matrix.
pub fn pilot_matrix(antennas: usize, tau: usize) -> CMat {
    let s = pilot_sequence(tau);
    let mut out = CMat::zeros(antennas * tau, antennas);
    for n in 0..antennas {
        for (k, v) in s.iter().enumerate() {
            out[(n * tau + k, n)] = *v;
        }
    }
    out
}

/// Per-slot pilot transmission parameters of one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotConfig {
    pub amplitude: f64,
    /// Power of one pilot slot, `P_p`.
    pub power: f64,
    pub noise: f64,
    pub length: usize,
}

impl PilotConfig {
    /// `alpha sqrt(P_p)`.
    pub fn gain(&self) -> f64 {
        self.amplitude * libm::sqrt(self.power)
    }

    /// Despread noise variance `c`; infinite when no pilot energy arrives.
    pub fn regularizer(&self) -> f64 {
        let energy = self.amplitude * self.amplitude * self.power * self.length as f64;
        if energy > 0.0 {
            self.noise / energy
        } else {
            f64::INFINITY
        }
    }

    /// `S^H y / (alpha sqrt(P_p) tau)`, i.e. `h + noise`.
    pub fn despread(&self, y: &CVec, antennas: usize) -> Result<CVec> {
        if y.len() != antennas * self.length {
            return Err(linalg::dims_error("pilot observation", (antennas * self.length, 1), y.shape()));
        }
        let s = pilot_sequence(self.length);
        let scale = 1.0 / (self.gain() * self.length as f64);
        Ok(CVec::from_fn(antennas, |n, _| {
            let acc: C64 = s.iter().enumerate().map(|(k, sk)| sk.conj() * y[n * self.length + k]).sum();
            acc * scale
        }))
    }
}

/// Interpolation kernel for slot `i` from the pilots of a window.
#[derive(Clone, Debug)]
pub struct EstimationKernel {
    pub slot: usize,
    pub window: PilotWindow,
    /// `[C_h(i, p_1), ..., C_h(i, p_p)]`, `N_r x p N_r`.
    pub e: CMat,
    /// Blocks `C_h(p_j, p_l)`, `p N_r x p N_r`.
    pub m: CMat,
    pub regularizer: f64,
    pub pilot: PilotConfig,
    /// `E (M + c I)^{-1}`; `None` without pilot information.
    gain: Option<CMat>,
}

impl EstimationKernel {
    pub fn antennas(&self) -> usize {
        self.e.nrows()
    }

    /// `E (M + c I)^{-1}`, zero without pilot information.
    pub fn gain(&self) -> CMat {
        self.gain.clone().unwrap_or_else(|| CMat::zeros(self.e.nrows(), self.e.ncols()))
    }

    pub fn has_pilot_information(&self) -> bool {
        self.gain.is_some()
    }
}

/// Kernel for slot `i` of frame `m`.
pub fn build_kernel(
    layout: &FrameLayout,
    m: usize,
    i: usize,
    cov: &CovarianceSet,
    pilot: PilotConfig,
    rule: WindowRule,
) -> Result<EstimationKernel> {
    if layout.frame_of(i) != Some(m) {
        return Err(Error::misuse(format!("slot {i} is not in frame {m} of {layout}")));
    }
    if layout.horizon() > cov.horizon() {
        return Err(Error::misuse(format!(
            "statistics cover {} slots, layout {layout} needs {}",
            cov.horizon(),
            layout.horizon()
        )));
    }
    let window = pilot_window(layout, m, rule)?;
    kernel_for_window(i, window, cov, pilot)
}

/// Kernel for slot `i` from an explicit window.
pub fn kernel_for_window(i: usize, window: PilotWindow, cov: &CovarianceSet, pilot: PilotConfig) -> Result<EstimationKernel> {
    if !(pilot.noise >= 0.0 && pilot.power >= 0.0 && pilot.amplitude >= 0.0 && pilot.length >= 1) {
        return Err(Error::invalid_arg(format!("invalid pilot configuration {pilot:?}")));
    }
    let n = cov.antennas();
    let p = window.len();
    let mut e = CMat::zeros(n, p * n);
    for (j, &pj) in window.slots.iter().enumerate() {
        e.view_mut((0, j * n), (n, n)).copy_from(&cov.cross(i, pj)?);
    }
    let m = cov.stacked(&window.slots)?;
    let c = pilot.regularizer();
    let gain = if c.is_finite() && e.iter().any(|v| *v != C64::new(0.0, 0.0)) {
        let reg = &m + CMat::identity(p * n, p * n) * C64::new(c, 0.0);
        let x = linalg::solve_pd(&reg, &e.adjoint(), "pilot covariance M + cI")?;
        Some(x.adjoint())
    } else if c.is_finite() {
        Some(CMat::zeros(n, p * n))
    } else {
        None
    };
    Ok(EstimationKernel { slot: i, window, e, m, regularizer: c, pilot, gain })
}

/// Estimate and its covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEstimate {
    pub estimate: CVec,
    pub covariance: CMat,
}

/// Despread and interpolate the window's pilot observations (one
/// `N_r tau_p` vector per window slot, in window order).
pub fn lmmse_estimate(kernel: &EstimationKernel, cov: &CovarianceSet, observations: &[CVec]) -> Result<ChannelEstimate> {
    Ok(ChannelEstimate {
        estimate: lmmse_point(kernel, cov, observations)?,
        covariance: estimate_covariance(kernel),
    })
}

/// Point estimate only.
pub fn lmmse_point(kernel: &EstimationKernel, cov: &CovarianceSet, observations: &[CVec]) -> Result<CVec> {
    let n = kernel.antennas();
    if observations.len() != kernel.window.len() {
        return Err(Error::misuse(format!(
            "expected {} pilot observations, got {}",
            kernel.window.len(),
            observations.len()
        )));
    }
    let mut estimate = cov.mean(kernel.slot)?.clone();
    let Some(gain) = &kernel.gain else {
        return Ok(estimate);
    };
    let mut centered = CVec::zeros(n * kernel.window.len());
    for (j, (y, &pj)) in observations.iter().zip(&kernel.window.slots).enumerate() {
        let d = kernel.pilot.despread(y, n)? - cov.mean(pj)?;
        centered.rows_mut(j * n, n).copy_from(&d);
    }
    estimate += gain * centered;
    Ok(estimate)
}

/// `C_h_hat(i) = E (M + c I)^{-1} E^H`.
pub fn estimate_covariance(kernel: &EstimationKernel) -> CMat {
    match &kernel.gain {
        Some(g) => hermitize(&(g * kernel.e.adjoint())),
        None => CMat::zeros(kernel.antennas(), kernel.antennas()),
    }
}

/// Check that `i` is a slot of the layout and return its kind.
pub fn slot_kind(layout: &FrameLayout, i: usize) -> Result<SlotKind> {
    layout
        .slot_kind(i)
        .ok_or_else(|| Error::misuse(format!("slot {i} outside layout {layout}")))
}
