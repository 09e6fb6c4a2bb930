//! Deterministic-equivalent spectral efficiency and the ASE objective.
//!
//! For each data slot the interferers' Stieltjes-type parameters `m_k` solve
//!
//! ```text
//! m_k = < w_k R_z_k, T(m)^{-1} >,   T(m) = sum_l w_l R_z_l / (1 + m_l) + S + rho I
//! ```
//!
//! over the interferers `k >= 2`, with `S = sum_k w_k Q_k` and `rho =
//! sigma_d^2`. The tagged user's SE is `ln(1 + < w_1 R_z_1, T(m)^{-1} >)`,
//! and the ASE averages it over every slot of the layout (pilot slots count
//! as zero).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corrmodel::CovarianceSet;
use crate::layout::FrameLayout;
use crate::linalg::{self, hermitize};
use crate::model::{build_link_model, LinkModel};
use crate::scenario::{FixedPointVariant, Scenario};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FixedPointConfig {
    /// Sup-norm bound on the last update.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relaxation factor in `(0, 1]`; halved to 0.5 on detected oscillation.
    pub damping: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig { tolerance: 1e-9, max_iterations: 500, damping: 1.0 }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid_arg("fixed-point tolerance must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid_arg("fixed-point damping must lie in (0, 1]"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid_arg("fixed-point max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FixedPointSolution {
    pub m: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub damping: f64,
}

/// `S = sum_k w_k Q_k`.
pub fn interference_floor(weights: &[f64], residuals: &[&CMat]) -> Result<CMat> {
    if weights.len() != residuals.len() || residuals.is_empty() {
        return Err(Error::misuse("interference floor needs one weight per residual covariance"));
    }
    let n = residuals[0].nrows();
    let mut s = CMat::zeros(n, n);
    for (w, q) in weights.iter().zip(residuals) {
        if q.shape() != (n, n) {
            return Err(linalg::dims_error("residual covariance", (n, n), q.shape()));
        }
        s += *q * C64::new(*w, 0.0);
    }
    Ok(hermitize(&s))
}

/// `T(m)^{-1}`; `scale[l]` multiplies `R_z_l / (1 + m_l)`.
fn resolvent(r_z: &[&CMat], scale: &[f64], m: &[f64], floor: &CMat, rho: f64) -> Result<CMat> {
    let n = floor.nrows();
    let mut t = floor + CMat::identity(n, n) * C64::new(rho, 0.0);
    for ((r, s), mk) in r_z.iter().zip(scale).zip(m) {
        t += *r * C64::new(s / (1.0 + mk), 0.0);
    }
    match linalg::cholesky_pd(&t) {
        Some(ch) => Ok(ch.inverse()),
        None => Err(Error::NotPd { what: "fixed-point resolvent T(m)".into() }),
    }
}

fn pairing(r: &CMat, inv: &CMat) -> f64 {
    linalg::trace_of_product(r, inv).re
}

/// Solve for the interferers' `m` (one entry per element of `r_z`).
pub fn solve_fixed_point(
    r_z: &[&CMat],
    weights: &[f64],
    floor: &CMat,
    rho: f64,
    variant: FixedPointVariant,
    cfg: &FixedPointConfig,
    init: Option<&[f64]>,
) -> Result<FixedPointSolution> {
    cfg.validate()?;
    let k = r_z.len();
    if weights.len() != k {
        return Err(Error::misuse("one weight per interferer is required"));
    }
    if k == 0 {
        return Ok(FixedPointSolution {
            m: Vec::new(),
            iterations: 0,
            residual: 0.0,
            residual_history: Vec::new(),
            damping: cfg.damping,
        });
    }
    let scale: Vec<f64> = match variant {
        FixedPointVariant::Weighted => weights.to_vec(),
        FixedPointVariant::Literal => vec![1.0; k],
    };
    let mut m = match init {
        Some(v) if v.len() == k => v.to_vec(),
        Some(v) => return Err(Error::misuse(format!("initial point has {} entries, expected {k}", v.len()))),
        None => vec![0.0; k],
    };
    let mut damping = cfg.damping;
    let mut history = Vec::new();
    let mut rising = 0;
    for it in 1..=cfg.max_iterations {
        let inv = resolvent(r_z, &scale, &m, floor, rho)?;
        let mut residual = 0.0f64;
        for l in 0..k {
            let target = (scale[l] * pairing(r_z[l], &inv)).max(0.0);
            let next = (1.0 - damping) * m[l] + damping * target;
            residual = residual.max((target - m[l]).abs());
            m[l] = next;
        }
        if !residual.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residuals: history });
        }
        if history.last().is_some_and(|&prev| residual > prev) {
            rising += 1;
        } else {
            rising = 0;
        }
        history.push(residual);
        if residual <= cfg.tolerance {
            return Ok(FixedPointSolution { m, iterations: it, residual, residual_history: history, damping });
        }
        if rising >= 3 && damping > 0.5 {
            damping = 0.5;
            rising = 0;
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iterations, residuals: history })
}

/// `ln(1 + < w_1 R_z_1, T(m)^{-1} >)` with the weighted resolvent.
pub fn deterministic_se(
    r_z1: &CMat,
    w1: f64,
    r_z: &[&CMat],
    weights: &[f64],
    m: &[f64],
    floor: &CMat,
    rho: f64,
) -> Result<f64> {
    if w1 == 0.0 {
        return Ok(0.0);
    }
    let inv = resolvent(r_z, weights, m, floor, rho)?;
    Ok(libm::log1p((w1 * pairing(r_z1, &inv)).max(0.0)))
}

/// Deterministic SE of one data slot.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SlotSolution {
    pub slot: usize,
    pub anchor: usize,
    /// Nats per channel use.
    pub se: f64,
    pub fixed_point: FixedPointSolution,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DetEqResult {
    pub layout: Vec<usize>,
    /// Tagged user's `[Pp_max, Pd_max]`.
    pub powers: [f64; 2],
    pub data_noise: f64,
    /// SE of every slot `1..=horizon`; zero at pilot slots.
    pub slot_se: Vec<f64>,
    pub data_slots: Vec<SlotSolution>,
    /// Average over the whole horizon.
    pub ase: f64,
}

impl DetEqResult {
    pub fn max_iterations(&self) -> usize {
        self.data_slots.iter().map(|s| s.fixed_point.iterations).max().unwrap_or(0)
    }

    pub fn max_residual(&self) -> f64 {
        self.data_slots.iter().map(|s| s.fixed_point.residual).fold(0.0, f64::max)
    }
}

/// Deterministic SE of every slot of a link model.
pub fn evaluate_link(
    link: &LinkModel,
    variant: FixedPointVariant,
    cfg: &FixedPointConfig,
    powers: [f64; 2],
) -> Result<DetEqResult> {
    let horizon = link.layout.horizon();
    let weights: Vec<f64> = link.users.iter().map(|u| u.weight).collect();
    let mut slot_se = vec![0.0; horizon];
    let mut data_slots = Vec::with_capacity(link.data_slots.len());
    for slot in &link.data_slots {
        let residuals: Vec<&CMat> = slot.users.iter().map(|u| &u.moments.residual).collect();
        let floor = interference_floor(&weights, &residuals)?;
        let r_int: Vec<&CMat> = slot.users[1..].iter().map(|u| &u.moments.r_z).collect();
        let fp = solve_fixed_point(&r_int, &weights[1..], &floor, link.noise, variant, cfg, None)?;
        let se = deterministic_se(&slot.users[0].moments.r_z, weights[0], &r_int, &weights[1..], &fp.m, &floor, link.noise)?;
        slot_se[slot.slot - 1] = se;
        data_slots.push(SlotSolution { slot: slot.slot, anchor: slot.anchor, se, fixed_point: fp });
    }
    let ase = slot_se.iter().sum::<f64>() / horizon as f64;
    Ok(DetEqResult {
        layout: link.layout.sizes().to_vec(),
        powers,
        data_noise: link.noise,
        slot_se,
        data_slots,
        ase,
    })
}

/// ASE of `layout` with the tagged user's maxima set to `powers`.
pub fn ase(
    scenario: &Scenario,
    stats: &[CovarianceSet],
    layout: &FrameLayout,
    powers: [f64; 2],
    cfg: &FixedPointConfig,
) -> Result<DetEqResult> {
    let link = build_link_model(scenario, stats, layout, powers)?;
    evaluate_link(&link, scenario.options.fixed_point, cfg, powers)
}

/// ASE with the scenario's configured powers, building the statistics.
pub fn evaluate_layout(scenario: &Scenario, layout: &FrameLayout, cfg: &FixedPointConfig) -> Result<DetEqResult> {
    scenario.validate()?;
    let stats = scenario.statistics(layout.horizon())?;
    let t = scenario.tagged();
    ase(scenario, &stats, layout, [t.pilot_power, t.data_power], cfg)
}
