//! Command implementations shared by the CLI and the acceptance tests.

use std::collections::BTreeMap;

use aging_core::deteq::{ase, evaluate_layout, DetEqResult};
use aging_core::layout::{build_layout, FrameLayout};
use aging_core::model::build_link_model;
use aging_core::montecarlo::{summarize, MonteCarlo, MonteCarloSummary, TrialOutcome};
use aging_core::optimizer::{collect_result, enumerate_layouts, evaluate_with, shared_statistics, OptResult};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, SweepParam};

/// Parse `3,3,3,2`.
pub fn parse_layout(text: &str) -> Result<FrameLayout> {
    let sizes = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad frame size {s:?} in layout {text:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(build_layout(&sizes)?)
}

/// Deterministic SE of every slot of `layout` at the configured powers.
pub fn run_deteq(cfg: &ScenarioConfig, layout: &FrameLayout) -> Result<DetEqResult> {
    Ok(evaluate_layout(&cfg.scenario, layout, &cfg.optimizer.fixed_point)?)
}

/// Search every layout of the optimizer configuration in parallel.
pub fn run_optimize(cfg: &ScenarioConfig) -> Result<OptResult> {
    optimize_layouts(cfg, &enumerate_layouts(&cfg.optimizer))
}

/// Search `layouts` in parallel; the reduction follows the input order.
pub fn optimize_layouts(cfg: &ScenarioConfig, layouts: &[FrameLayout]) -> Result<OptResult> {
    cfg.scenario.validate()?;
    cfg.optimizer.validate()?;
    let shared = shared_statistics(&cfg.scenario, layouts);
    let outcomes = layouts
        .par_iter()
        .map(|l| (l.clone(), evaluate_with(&cfg.scenario, shared.as_deref(), l, &cfg.optimizer)))
        .collect();
    Ok(collect_result(outcomes)?)
}

/// Monte Carlo against deterministic SE for one data slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotComparison {
    pub slot: usize,
    pub deterministic: f64,
    pub mean: f64,
    pub std: f64,
    /// `|mean - deterministic| / deterministic`.
    pub relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub layout: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub deterministic: DetEqResult,
    pub summary: MonteCarloSummary,
    pub slots: Vec<SlotComparison>,
    pub max_relative_gap: f64,
    /// `|mean ASE - ASE| / ASE`.
    pub ase_relative_gap: f64,
}

/// Full-chain Monte Carlo of `layout`, trials spread over the thread pool.
pub fn run_montecarlo(cfg: &ScenarioConfig, layout: &FrameLayout, trials: u64, seed: u64) -> Result<MonteCarloReport> {
    if trials == 0 {
        bail!("at least one trial is required");
    }
    let s = &cfg.scenario;
    s.validate()?;
    let stats = s.statistics(layout.horizon())?;
    let t = s.tagged();
    let powers = [t.pilot_power, t.data_power];
    let link = build_link_model(s, &stats, layout, powers)?;
    let deterministic = ase(s, &stats, layout, powers, &cfg.optimizer.fixed_point)?;
    let mut mc = MonteCarlo::new(&link, &stats, cfg.sampler)?;
    mc.constellation = cfg.constellation;
    let outcomes: Vec<TrialOutcome> =
        (0..trials).into_par_iter().map(|k| mc.trial(seed, k)).collect::<aging_core::Result<_>>()?;
    let summary = summarize(&link, &outcomes)?;
    let slots: Vec<SlotComparison> = deterministic
        .data_slots
        .iter()
        .map(|d| {
            let m = summary.slots[d.slot - 1].se;
            SlotComparison { slot: d.slot, deterministic: d.se, mean: m.mean, std: m.std, relative_gap: relative(m.mean, d.se) }
        })
        .collect();
    let max_relative_gap = slots.iter().map(|s| s.relative_gap).fold(0.0, f64::max);
    let ase_relative_gap = relative(summary.ase.mean, deterministic.ase);
    Ok(MonteCarloReport {
        layout: layout.sizes().to_vec(),
        trials,
        seed,
        deterministic,
        summary,
        slots,
        max_relative_gap,
        ase_relative_gap,
    })
}

fn relative(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if x == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (x - reference).abs() / reference.abs()
    }
}

/// Copy of `cfg` with `param` set to `value`.
pub fn apply_param(cfg: &ScenarioConfig, param: SweepParam, value: f64) -> Result<ScenarioConfig> {
    use aging_core::scenario::DataNoise;
    use aging_core::schedule::ParamSchedule;
    let mut c = cfg.clone();
    let users = &mut c.scenario.users;
    let interferer = |users: &mut Vec<aging_core::scenario::UserConfig>| -> Result<usize> {
        if users.len() < 2 {
            bail!("parameter {param:?} needs an interfering user");
        }
        Ok(1)
    };
    let split = |u: &mut aging_core::scenario::UserConfig, r: f64| {
        let total = u.pilot_power + u.data_power;
        u.pilot_power = total * r / (1.0 + r);
        u.data_power = total - u.pilot_power;
    };
    match param {
        SweepParam::Fd1 => users[0].stats.doppler = ParamSchedule::constant(value),
        SweepParam::Kf1 => users[0].stats.rician_factor = ParamSchedule::constant(value),
        SweepParam::Snr => c.scenario.data_noise = DataNoise::SnrDb(value),
        SweepParam::Rp => split(&mut users[0], value),
        SweepParam::Pl2 => {
            let k = interferer(users)?;
            users[k].stats.path_loss_db = value;
        }
        SweepParam::Fd2 => {
            let k = interferer(users)?;
            users[k].stats.doppler = ParamSchedule::constant(value);
        }
        SweepParam::Rp2 => {
            let k = interferer(users)?;
            split(&mut users[k], value);
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Nats.
    pub ase: f64,
    pub layout: Vec<usize>,
    pub frames: usize,
    pub pilot_power: f64,
    pub data_power: f64,
}

/// Optimize at every value of `param`.
pub fn run_sweep(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    let layouts = enumerate_layouts(&cfg.optimizer);
    values
        .iter()
        .map(|&v| {
            let c = apply_param(cfg, param, v)?;
            let r = optimize_layouts(&c, &layouts).with_context(|| format!("{param:?} = {v}"))?;
            Ok(SweepRow {
                value: v,
                ase: r.ase,
                layout: r.layout,
                frames: r.frames,
                pilot_power: r.pilot_power,
                data_power: r.data_power,
            })
        })
        .collect()
}

/// Layout-only summary of a sweep: distinct `(q*, M*)` choices.
pub fn distinct_layouts(rows: &[SweepRow]) -> BTreeMap<Vec<usize>, usize> {
    let mut out = BTreeMap::new();
    for r in rows {
        *out.entry(r.layout.clone()).or_insert(0) += 1;
    }
    out
}
