//! Joint frame and power design: exhaustive enumeration of frame layouts
//! with projected-gradient ascent of the ASE over the tagged user's
//! `[Pp_max, Pd_max]` for each candidate.

use core::cell::OnceCell;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corrmodel::CovarianceSet;
use crate::deteq::{evaluate_link, FixedPointConfig};
use crate::model::{build_link_model_cached, LinkCache};
use crate::layout::{build_layout, FrameLayout};
use crate::scenario::Scenario;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OptimizerConfig {
    pub q_max: usize,
    pub m_max: usize,
    /// Bound on the step length and on the objective change.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial step `mu_w` as a fraction of `P_tot`.
    pub step: f64,
    /// Finite-difference step as a fraction of `P_tot`.
    pub fd_step: f64,
    /// Power floor `epsilon_power` as a fraction of `P_tot`.
    pub power_floor: f64,
    /// Keep the configured powers; only the layout is searched.
    pub fixed_powers: bool,
    /// Fixed-step ascent without backtracking.
    pub literal_alg1: bool,
    /// Additional starting points as fractions of `P_tot`.
    pub extra_starts: Vec<[f64; 2]>,
    pub fixed_point: FixedPointConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            q_max: 12,
            m_max: 4,
            tolerance: 1e-6,
            max_iterations: 200,
            step: 0.05,
            fd_step: 1e-4,
            power_floor: 1e-6,
            fixed_powers: false,
            literal_alg1: false,
            extra_starts: Vec::new(),
            fixed_point: FixedPointConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_max < 2 {
            return Err(Error::invalid_arg("q_max must be at least 2"));
        }
        if self.m_max < 1 {
            return Err(Error::invalid_arg("m_max must be at least 1"));
        }
        for (v, what) in [
            (self.tolerance, "tolerance"),
            (self.step, "step"),
            (self.fd_step, "fd_step"),
            (self.power_floor, "power_floor"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid_arg(format!("optimizer {what} must be positive, got {v}")));
            }
        }
        if self.power_floor >= 0.5 {
            return Err(Error::invalid_arg("power_floor must be below half the budget"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid_arg("optimizer max_iterations must be positive"));
        }
        self.fixed_point.validate()
    }
}

/// Largest frame size for `m` frames, `ceil(q_max / m)`.
fn frame_bound(q_max: usize, m: usize) -> usize {
    q_max.div_ceil(m)
}

/// All layouts with `M <= m_max` frames of sizes `2..=ceil(q_max / M)`, by
/// `M` then lexicographically.
pub fn enumerate_layouts(cfg: &OptimizerConfig) -> Vec<FrameLayout> {
    let mut out = Vec::new();
    for m in 1..=cfg.m_max {
        let hi = frame_bound(cfg.q_max, m);
        if hi < 2 {
            continue;
        }
        let base = hi - 1;
        for idx in 0..base.pow(m as u32) {
            let mut q = vec![2; m];
            let mut r = idx;
            for p in (0..m).rev() {
                q[p] = 2 + r % base;
                r /= base;
            }
            out.push(build_layout(&q).expect("frame sizes are at least 2"));
        }
    }
    out
}

/// `sum_M (ceil(q_max / M) - 1)^M` over feasible `M`.
pub fn candidate_count(cfg: &OptimizerConfig) -> usize {
    (1..=cfg.m_max)
        .map(|m| (m, frame_bound(cfg.q_max, m)))
        .filter(|&(_, hi)| hi >= 2)
        .map(|(m, hi)| (hi - 1).pow(m as u32))
        .sum()
}

/// Euclidean projection onto `{x : x >= floor, sum(x) <= total}`.
pub fn project_powers(w: [f64; 2], total: f64, floor: f64) -> Result<[f64; 2]> {
    if !(total > 0.0 && floor >= 0.0 && 2.0 * floor <= total) {
        return Err(Error::invalid_arg(format!("cannot project onto budget {total} with floor {floor}")));
    }
    let clamped = [w[0].max(floor), w[1].max(floor)];
    if clamped[0] + clamped[1] <= total * (1.0 + 4.0 * f64::EPSILON) {
        return Ok(clamped);
    }
    // on the budget line: x_i = max(floor, w_i - lambda)
    let lambda = (w[0] + w[1] - total) / 2.0;
    let x0 = w[0] - lambda;
    Ok(if x0 < floor {
        [floor, total - floor]
    } else if total - x0 < floor {
        [total - floor, floor]
    } else {
        [x0, total - x0]
    })
}

/// Why an ascent stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    FixedPowers,
    StepBelowTolerance,
    ObjectiveBelowTolerance,
    MaxIterations,
}

/// Ascent from one starting point.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PowerAscent {
    pub start: [f64; 2],
    pub powers: [f64; 2],
    pub ase: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Every accepted iterate, starting point included.
    pub iterates: Vec<[f64; 2]>,
}

/// ASE of one layout as a function of the tagged user's powers.
pub struct Objective<'a> {
    scenario: &'a Scenario,
    /// Same scenario with the budget check relaxed for finite differences.
    probe: Scenario,
    stats: &'a [CovarianceSet],
    layout: &'a FrameLayout,
    fixed_point: FixedPointConfig,
    cache: OnceCell<LinkCache>,
}

impl<'a> Objective<'a> {
    pub fn new(scenario: &'a Scenario, stats: &'a [CovarianceSet], layout: &'a FrameLayout, fixed_point: FixedPointConfig) -> Self {
        let mut probe = scenario.clone();
        probe.total_power = Some(f64::INFINITY);
        Objective { scenario, probe, stats, layout, fixed_point, cache: OnceCell::new() }
    }

    pub fn eval(&self, w: [f64; 2]) -> Result<f64> {
        self.eval_in(self.scenario, w)
    }

    fn eval_probe(&self, w: [f64; 2]) -> Result<f64> {
        self.eval_in(&self.probe, w)
    }

    fn eval_in(&self, scenario: &Scenario, w: [f64; 2]) -> Result<f64> {
        let cache = match self.cache.get() {
            Some(c) => c,
            None => {
                let c = LinkCache::new(self.scenario, self.stats, self.layout)?;
                self.cache.get_or_init(|| c)
            }
        };
        let link = build_link_model_cached(scenario, self.stats, cache, w)?;
        Ok(evaluate_link(&link, scenario.options.fixed_point, &self.fixed_point, w)?.ase)
    }

    /// Central differences, one-sided where the backward point is negative.
    pub fn gradient(&self, w: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let mut g = [0.0; 2];
        for i in 0..2 {
            let mut up = w;
            up[i] += h;
            let mut down = w;
            if w[i] >= h {
                down[i] -= h;
            }
            g[i] = (self.eval_probe(up)? - self.eval_probe(down)?) / (up[i] - down[i]);
        }
        Ok(g)
    }
}

/// Largest multiple of the initial step the backtracking search may grow to.
const MAX_STEP_GROWTH: f64 = 64.0;

/// Projected-gradient ascent of the ASE over `w = [Pp_max, Pd_max]`.
pub fn optimize_powers(objective: &Objective<'_>, start: [f64; 2], cfg: &OptimizerConfig) -> Result<PowerAscent> {
    let total = objective.scenario.total_power();
    let floor = cfg.power_floor * total;
    let mut w = project_powers(start, total, floor)?;
    let mut f = objective.eval(w)?;
    let mut iterates = vec![w];
    if cfg.fixed_powers {
        return Ok(PowerAscent { start, powers: w, ase: f, iterations: 0, stop: StopReason::FixedPowers, iterates });
    }
    let step = cfg.step * total;
    let h = cfg.fd_step * total;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut mu = step;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let g = objective.gradient(w, h)?;
        if cfg.literal_alg1 {
            mu = step;
        }
        let (next, f_next) = loop {
            let cand = project_powers([w[0] + mu * g[0], w[1] + mu * g[1]], total, floor)?;
            let f_cand = objective.eval(cand)?;
            if cfg.literal_alg1 || f_cand >= f {
                break (cand, f_cand);
            }
            mu *= 0.5;
            if mu < step * 1e-12 {
                break (w, f);
            }
        };
        if !cfg.literal_alg1 {
            // regrow the step after an accepted move
            mu = (2.0 * mu).min(MAX_STEP_GROWTH * step);
        }
        let dw = libm::hypot(next[0] - w[0], next[1] - w[1]);
        let df = (f_next - f).abs();
        w = next;
        f = f_next;
        iterates.push(w);
        if dw <= cfg.tolerance {
            stop = StopReason::StepBelowTolerance;
            break;
        }
        if df <= cfg.tolerance {
            stop = StopReason::ObjectiveBelowTolerance;
            break;
        }
    }
    Ok(PowerAscent { start, powers: w, ase: f, iterations, stop, iterates })
}

/// Outcome of one layout.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CandidateResult {
    pub layout: Vec<usize>,
    pub powers: [f64; 2],
    pub ase: f64,
    /// One ascent per starting point; the best is reported above.
    pub ascents: Vec<PowerAscent>,
}

impl CandidateResult {
    pub fn frames(&self) -> usize {
        self.layout.len()
    }
}

/// Starting points: the configured powers, then the extra fractions.
pub fn starting_points(scenario: &Scenario, cfg: &OptimizerConfig) -> Vec<[f64; 2]> {
    let t = scenario.tagged();
    let total = scenario.total_power();
    let mut out = vec![[t.pilot_power, t.data_power]];
    if !cfg.fixed_powers {
        out.extend(cfg.extra_starts.iter().map(|s| [s[0] * total, s[1] * total]));
    }
    out
}

/// Optimize the powers of one layout from every starting point.
pub fn evaluate_candidate(
    scenario: &Scenario,
    stats: &[CovarianceSet],
    layout: &FrameLayout,
    cfg: &OptimizerConfig,
) -> Result<CandidateResult> {
    let wrap = |e: Error| Error::Candidate { layout: layout.sizes().to_vec(), source: Box::new(e) };
    let objective = Objective::new(scenario, stats, layout, cfg.fixed_point);
    let mut ascents = Vec::new();
    for start in starting_points(scenario, cfg) {
        ascents.push(optimize_powers(&objective, start, cfg).map_err(wrap)?);
    }
    let best = ascents
        .iter()
        .fold(None::<&PowerAscent>, |b, a| match b {
            Some(b) if b.ase >= a.ase => Some(b),
            _ => Some(a),
        })
        .expect("at least one start");
    Ok(CandidateResult { layout: layout.sizes().to_vec(), powers: best.powers, ase: best.ase, ascents })
}

/// `true` when `a` is preferred over `b`: higher ASE, then fewer frames,
/// then the lexicographically smaller layout.
pub fn prefer(a: &CandidateResult, b: &CandidateResult) -> bool {
    let scale = 1.0f64.max(a.ase.abs()).max(b.ase.abs());
    if (a.ase - b.ase).abs() > 1e-12 * scale {
        return a.ase > b.ase;
    }
    (a.frames(), &a.layout) < (b.frames(), &b.layout)
}

/// Stable argmax of `candidates` under [`prefer`].
pub fn select_best(candidates: &[CandidateResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if !c.ase.is_finite() {
            continue;
        }
        match best {
            Some(b) if !prefer(c, &candidates[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OptResult {
    pub layout: Vec<usize>,
    pub frames: usize,
    pub pilot_power: f64,
    pub data_power: f64,
    pub ase: f64,
    /// Successful candidates in enumeration order.
    pub candidates: Vec<CandidateResult>,
    /// Failed candidates and their errors.
    pub failures: Vec<(Vec<usize>, alloc::string::String)>,
}

/// Statistics covering every layout of `layouts`, or `None` when the
/// schedules cannot be evaluated over the longest horizon.
pub fn shared_statistics(scenario: &Scenario, layouts: &[FrameLayout]) -> Option<Vec<CovarianceSet>> {
    let horizon = layouts.iter().map(FrameLayout::horizon).max()?;
    scenario.statistics(horizon).ok()
}

/// Evaluate one layout with shared statistics when available, otherwise with
/// statistics over the layout's own horizon.
pub fn evaluate_with(
    scenario: &Scenario,
    shared: Option<&[CovarianceSet]>,
    layout: &FrameLayout,
    cfg: &OptimizerConfig,
) -> Result<CandidateResult> {
    match shared {
        Some(stats) => evaluate_candidate(scenario, stats, layout, cfg),
        None => {
            let stats = scenario
                .statistics(layout.horizon())
                .map_err(|e| Error::Candidate { layout: layout.sizes().to_vec(), source: Box::new(e) })?;
            evaluate_candidate(scenario, &stats, layout, cfg)
        }
    }
}

/// Assemble the result from per-layout outcomes in enumeration order.
pub fn collect_result(outcomes: Vec<(FrameLayout, Result<CandidateResult>)>) -> Result<OptResult> {
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    let mut errors = Vec::new();
    for (layout, r) in outcomes {
        match r {
            Ok(c) => candidates.push(c),
            Err(e) => {
                failures.push((layout.sizes().to_vec(), format!("{e}")));
                errors.push((layout.sizes().to_vec(), e));
            }
        }
    }
    let Some(best) = select_best(&candidates) else {
        return Err(Error::AllCandidatesFailed(errors));
    };
    let b = &candidates[best];
    Ok(OptResult {
        layout: b.layout.clone(),
        frames: b.frames(),
        pilot_power: b.powers[0],
        data_power: b.powers[1],
        ase: b.ase,
        candidates,
        failures,
    })
}

/// Search `layouts` sequentially.
pub fn search_layouts(scenario: &Scenario, layouts: &[FrameLayout], cfg: &OptimizerConfig) -> Result<OptResult> {
    scenario.validate()?;
    cfg.validate()?;
    let shared = shared_statistics(scenario, layouts);
    let outcomes = layouts
        .iter()
        .map(|l| (l.clone(), evaluate_with(scenario, shared.as_deref(), l, cfg)))
        .collect();
    collect_result(outcomes)
}

/// Exhaustive search over [`enumerate_layouts`], sequential.
pub fn opt_resource(scenario: &Scenario, cfg: &OptimizerConfig) -> Result<OptResult> {
    search_layouts(scenario, &enumerate_layouts(cfg), cfg)
}
