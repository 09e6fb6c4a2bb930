//! CLI commands: each returns a report, its output files and a text summary.

use std::fmt::Write as _;
use std::path::Path;

use aging_core::channelsim::{substream, Purpose, TrajectorySampler};
use aging_core::layout::FrameLayout;
use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::json;

use crate::bundled;
use crate::config::{ScenarioConfig, SweepParam, ValidationError};
use crate::report::{OutputSet, RunReport, Stopwatch};
use crate::run::{distinct_layouts, run_deteq, run_montecarlo, run_optimize, run_sweep};
use crate::table1::{run_table1, Table1Set};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

pub struct CommandOutput {
    pub report: RunReport,
    pub files: OutputSet,
    pub text: String,
    /// Set when an assertion-mode comparison failed.
    pub mismatch: Option<String>,
}

impl CommandOutput {
    pub fn exit_code(&self) -> i32 {
        if self.mismatch.is_some() {
            EXIT_MISMATCH
        } else {
            EXIT_OK
        }
    }
}

/// Exit code for a failed command.
pub fn error_exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ValidationError>().is_some() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<aging_core::Error>() {
            use aging_core::Error as E;
            if matches!(e, E::InvalidArgument(_) | E::InvalidScenario(_) | E::InvalidLayout(_)) {
                return EXIT_VALIDATION;
            }
        }
    }
    EXIT_FAILURE
}

/// Load `bundled:NAME` or a JSON file.
pub fn load_scenario(spec: &str) -> Result<ScenarioConfig> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        return bundled::figure(name).ok_or_else(|| {
            let names: Vec<&str> = bundled::FIGURES.iter().map(|(n, _)| *n).collect();
            anyhow!("no bundled scenario {name:?}; available: {}", names.join(", "))
        });
    }
    ScenarioConfig::from_file(Path::new(spec))
}

fn config_value(cfg: &ScenarioConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("configuration serializes")
}

fn fmt_layout(q: &[usize]) -> String {
    let inner: Vec<String> = q.iter().map(|v| v.to_string()).collect();
    format!("[{}]", inner.join(","))
}

#[derive(Serialize)]
struct SlotRow {
    slot: usize,
    kind: &'static str,
    se: f64,
    fixed_point_iterations: usize,
    fixed_point_residual: f64,
}

pub fn deteq(cfg: &ScenarioConfig, layout: &FrameLayout) -> Result<CommandOutput> {
    let clock = Stopwatch::start();
    let r = run_deteq(cfg, layout)?;
    let u = cfg.se_units;
    let mut rows = Vec::new();
    for t in 1..=layout.horizon() {
        let d = r.data_slots.iter().find(|s| s.slot == t);
        rows.push(SlotRow {
            slot: t,
            kind: if d.is_some() { "data" } else { "pilot" },
            se: u.from_nats(r.slot_se[t - 1]),
            fixed_point_iterations: d.map_or(0, |d| d.fixed_point.iterations),
            fixed_point_residual: d.map_or(0.0, |d| d.fixed_point.residual),
        });
    }
    let mut text = format!("layout {layout}  ASE {:.6} {}\n", u.from_nats(r.ase), u.label());
    text.push_str("slot  kind   SE\n");
    for row in &rows {
        let _ = writeln!(text, "{:>4}  {:<5}  {:.6}", row.slot, row.kind, row.se);
    }
    let mut report = RunReport::new("deteq", config_value(cfg), cfg.assumptions.clone(), u.label());
    report.results = json!({ "layout": layout.sizes(), "ase": u.from_nats(r.ase), "slots": &rows });
    report.diagnostics = json!({ "max_iterations": r.max_iterations(), "max_residual": r.max_residual() });
    report.wall_clock_seconds = clock.seconds();
    let mut files = OutputSet::default();
    files.csv("deteq_slots", &rows)?;
    files.json("report.json", &report)?;
    Ok(CommandOutput { report, files, text, mismatch: None })
}

#[derive(Serialize)]
struct CandidateRow {
    layout: String,
    frames: usize,
    pilot_power: f64,
    data_power: f64,
    ase: f64,
    iterations: usize,
}

pub fn optimize(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let clock = Stopwatch::start();
    let r = run_optimize(cfg)?;
    let u = cfg.se_units;
    let rows: Vec<CandidateRow> = r
        .candidates
        .iter()
        .map(|c| CandidateRow {
            layout: fmt_layout(&c.layout),
            frames: c.frames(),
            pilot_power: c.powers[0],
            data_power: c.powers[1],
            ase: u.from_nats(c.ase),
            iterations: c.ascents.iter().map(|a| a.iterations).sum(),
        })
        .collect();
    let mut text = format!(
        "q* = {}  M* = {}  Pp* = {:.6}  Pd* = {:.6}  ASE* = {:.6} {}\n{} candidates evaluated, {} failed\n",
        fmt_layout(&r.layout),
        r.frames,
        r.pilot_power,
        r.data_power,
        u.from_nats(r.ase),
        u.label(),
        r.candidates.len(),
        r.failures.len()
    );
    for (l, e) in &r.failures {
        let _ = writeln!(text, "  failed {}: {e}", fmt_layout(l));
    }
    let mut report = RunReport::new("optimize", config_value(cfg), cfg.assumptions.clone(), u.label());
    report.results = json!({
        "layout": r.layout, "frames": r.frames, "pilot_power": r.pilot_power,
        "data_power": r.data_power, "ase": u.from_nats(r.ase), "candidates": &rows,
    });
    report.diagnostics = json!({ "failures": r.failures, "ascents": r.candidates.iter().map(|c| &c.ascents).collect::<Vec<_>>() });
    report.wall_clock_seconds = clock.seconds();
    let mut files = OutputSet::default();
    files.csv("candidates", &rows)?;
    files.json("report.json", &report)?;
    Ok(CommandOutput { report, files, text, mismatch: None })
}

#[derive(Serialize)]
struct McRow {
    slot: usize,
    deterministic: f64,
    mean: f64,
    std: f64,
    relative_gap: f64,
}

#[derive(Serialize)]
struct TrajectoryRow {
    slot: usize,
    user: usize,
    antenna: usize,
    re: f64,
    im: f64,
}

pub fn montecarlo(cfg: &ScenarioConfig, layout: &FrameLayout, trials: u64, seed: u64, dump_trajectory: bool) -> Result<CommandOutput> {
    let clock = Stopwatch::start();
    let r = run_montecarlo(cfg, layout, trials, seed)?;
    let u = cfg.se_units;
    let rows: Vec<McRow> = r
        .slots
        .iter()
        .map(|s| McRow {
            slot: s.slot,
            deterministic: u.from_nats(s.deterministic),
            mean: u.from_nats(s.mean),
            std: u.from_nats(s.std),
            relative_gap: s.relative_gap,
        })
        .collect();
    let mut text = format!(
        "layout {layout}  trials {trials}  seed {seed}\nASE deterministic {:.6}  Monte Carlo {:.6} {}  (gap {:.3}%)\nslot  SE°        mean       std        gap\n",
        u.from_nats(r.deterministic.ase),
        u.from_nats(r.summary.ase.mean),
        u.label(),
        100.0 * r.ase_relative_gap
    );
    for row in &rows {
        let _ = writeln!(text, "{:>4}  {:<9.6}  {:<9.6}  {:<9.6}  {:.3}%", row.slot, row.deterministic, row.mean, row.std, 100.0 * row.relative_gap);
    }
    let mut report = RunReport::new("montecarlo", config_value(cfg), cfg.assumptions.clone(), u.label());
    report.results = json!({
        "layout": layout.sizes(), "trials": trials, "seed": seed,
        "ase_deterministic": u.from_nats(r.deterministic.ase), "ase_monte_carlo": u.from_nats(r.summary.ase.mean),
        "slots": &rows,
    });
    report.diagnostics = json!({ "max_relative_gap": r.max_relative_gap, "ase_relative_gap": r.ase_relative_gap });
    report.wall_clock_seconds = clock.seconds();
    let mut files = OutputSet::default();
    files.csv("montecarlo_slots", &rows)?;
    if dump_trajectory {
        let stats = cfg.scenario.statistics(layout.horizon())?;
        let mut traj = Vec::new();
        for (k, c) in stats.iter().enumerate() {
            let sampler = TrajectorySampler::new(c, layout.horizon(), cfg.sampler)?;
            let h = sampler.sample(&mut substream(seed, 0, k, 0, Purpose::Trajectory), seed);
            for (t, v) in h.h.iter().enumerate() {
                for (a, x) in v.iter().enumerate() {
                    traj.push(TrajectoryRow { slot: t + 1, user: k, antenna: a, re: x.re, im: x.im });
                }
            }
        }
        files.csv("trajectory", &traj)?;
    }
    files.json("report.json", &report)?;
    Ok(CommandOutput { report, files, text, mismatch: None })
}

#[derive(Serialize)]
struct Table1CsvRow {
    block: usize,
    layout: String,
    frames: usize,
    ase: Option<f64>,
    reference_se: f64,
    relative_difference: Option<f64>,
    bold: bool,
    argmax: bool,
}

pub fn table1(set: &Table1Set, assert_argmax: bool) -> Result<CommandOutput> {
    let clock = Stopwatch::start();
    let blocks = run_table1(set);
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut mismatched = Vec::new();
    for b in &blocks {
        let _ = writeln!(
            text,
            "block {}: argmax {} (reference {}) {}",
            b.block,
            b.argmax.as_deref().map_or("none".into(), fmt_layout),
            fmt_layout(&b.bold),
            if b.argmax_matches { "match" } else { "MISMATCH" }
        );
        if !b.argmax_matches {
            mismatched.push(b.block);
        }
        for r in &b.rows {
            let _ = writeln!(
                text,
                "  {:<10} {:>10} {:>10}  {}",
                fmt_layout(&r.layout),
                r.ase.map_or("-".into(), |v| format!("{v:.4}")),
                format!("{:.4}", r.reference_se),
                r.relative_difference.map_or_else(|| r.error.clone().unwrap_or_default(), |d| format!("{:.1}%", 100.0 * d))
            );
            rows.push(Table1CsvRow {
                block: b.block,
                layout: fmt_layout(&r.layout),
                frames: r.layout.len(),
                ase: r.ase,
                reference_se: r.reference_se,
                relative_difference: r.relative_difference,
                bold: r.layout == b.bold,
                argmax: b.argmax.as_ref() == Some(&r.layout),
            });
        }
    }
    let units = blocks.first().and_then(|b| b.rows.first()).map_or("nats", |r| r.units.label());
    let mut report = RunReport::new("table1", serde_json::to_value(set)?, set.assumptions.clone(), units);
    report.results = serde_json::to_value(&blocks)?;
    report.diagnostics = json!({ "mismatched_blocks": mismatched });
    report.wall_clock_seconds = clock.seconds();
    let mut files = OutputSet::default();
    files.csv("table1", &rows)?;
    files.json("report.json", &report)?;
    let mismatch = (assert_argmax && !mismatched.is_empty()).then(|| format!("argmax mismatch in blocks {mismatched:?}"));
    Ok(CommandOutput { report, files, text, mismatch })
}

#[derive(Serialize)]
struct SweepCsvRow {
    value: f64,
    ase: f64,
    layout: String,
    frames: usize,
    pilot_power: f64,
    data_power: f64,
}

pub fn sweep(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<CommandOutput> {
    let clock = Stopwatch::start();
    let rows = run_sweep(cfg, param, values)?;
    let u = cfg.se_units;
    let csv_rows: Vec<SweepCsvRow> = rows
        .iter()
        .map(|r| SweepCsvRow {
            value: r.value,
            ase: u.from_nats(r.ase),
            layout: fmt_layout(&r.layout),
            frames: r.frames,
            pilot_power: r.pilot_power,
            data_power: r.data_power,
        })
        .collect();
    let mut text = format!("{:?} sweep ({} points)\nvalue       ASE*        q*         M*  Pp*       Pd*\n", param, rows.len());
    for r in &csv_rows {
        let _ = writeln!(text, "{:<10} {:<11.6} {:<10} {:<3} {:<9.5} {:.5}", r.value, r.ase, r.layout, r.frames, r.pilot_power, r.data_power);
    }
    let distinct = distinct_layouts(&rows);
    let _ = writeln!(text, "distinct optimal layouts: {}", distinct.len());
    let mut report = RunReport::new("sweep", config_value(cfg), cfg.assumptions.clone(), u.label());
    report.results = json!({ "param": param, "rows": &csv_rows });
    report.diagnostics = json!({ "distinct_layouts": distinct.keys().map(|k| fmt_layout(k)).collect::<Vec<_>>() });
    report.wall_clock_seconds = clock.seconds();
    let mut files = OutputSet::default();
    files.csv("sweep", &csv_rows)?;
    files.json("report.json", &report)?;
    Ok(CommandOutput { report, files, text, mismatch: None })
}

/// Sweep parameters and values from the command line or the scenario file.
pub fn sweep_spec(cfg: &ScenarioConfig, param: Option<SweepParam>, values: Option<Vec<f64>>) -> Result<(SweepParam, Vec<f64>)> {
    let default = cfg.sweep.clone();
    let param = param.or(default.as_ref().map(|s| s.param)).context("no --param given and the scenario has no sweep")?;
    let values = match values {
        Some(v) => v,
        None => default
            .filter(|s| s.param == param)
            .map(|s| s.values)
            .context("no --values given and the scenario has no sweep over this parameter")?,
    };
    if values.is_empty() {
        anyhow::bail!("sweep needs at least one value");
    }
    Ok((param, values))
}
