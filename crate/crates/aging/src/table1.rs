//! The bundled Table I scenario set and its reproduction.

use aging_core::layout::build_layout;
use aging_core::optimizer::{select_best, CandidateResult};
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundled;
use crate::config::{ScenarioConfig, SeUnits};
use crate::run::run_deteq;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Row {
    pub layout: Vec<usize>,
    /// Printed SE of the row.
    pub reference_se: f64,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Block {
    pub block: usize,
    /// Layout printed in bold.
    pub bold: Vec<usize>,
    pub rows: Vec<Table1Row>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Set {
    pub assumptions: Vec<String>,
    pub blocks: Vec<Table1Block>,
}

impl Table1Set {
    pub fn bundled() -> Self {
        Self::from_json(bundled::TABLE1).expect("bundled Table I set parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: Table1Set = serde_json::from_str(text).context("parsing Table I set")?;
        for b in &set.blocks {
            for (i, r) in b.rows.iter().enumerate() {
                r.config.validate().with_context(|| format!("block {} row {}", b.block, i + 1))?;
            }
        }
        Ok(set)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub layout: Vec<usize>,
    /// Computed ASE in the row's units, `None` when the row cannot be evaluated.
    pub ase: Option<f64>,
    pub units: SeUnits,
    pub reference_se: f64,
    /// `|ase - reference| / reference`.
    pub relative_difference: Option<f64>,
    pub error: Option<String>,
    pub fixed_point_iterations: usize,
    pub fixed_point_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub block: usize,
    pub rows: Vec<RowResult>,
    pub bold: Vec<usize>,
    pub argmax: Option<Vec<usize>>,
    pub argmax_matches: bool,
    /// Every evaluated row within 15% of the printed value.
    pub values_within_15pct: bool,
}

impl BlockResult {
    /// Rows ranked by computed ASE, best first.
    pub fn ranking(&self) -> Vec<Vec<usize>> {
        let mut rows: Vec<&RowResult> = self.rows.iter().filter(|r| r.ase.is_some()).collect();
        rows.sort_by(|a, b| b.ase.partial_cmp(&a.ase).expect("finite ASE"));
        rows.into_iter().map(|r| r.layout.clone()).collect()
    }
}

/// Evaluate every row of `block` at its fixed powers.
pub fn run_block(block: &Table1Block) -> BlockResult {
    let rows: Vec<RowResult> = block
        .rows
        .par_iter()
        .map(|row| {
            let units = row.config.se_units;
            let r = build_layout(&row.layout).map_err(anyhow::Error::from).and_then(|l| run_deteq(&row.config, &l));
            match r {
                Ok(d) => {
                    let v = units.from_nats(d.ase);
                    RowResult {
                        layout: row.layout.clone(),
                        ase: Some(v),
                        units,
                        reference_se: row.reference_se,
                        relative_difference: Some((v - row.reference_se).abs() / row.reference_se),
                        error: None,
                        fixed_point_iterations: d.max_iterations(),
                        fixed_point_residual: d.max_residual(),
                    }
                }
                Err(e) => RowResult {
                    layout: row.layout.clone(),
                    ase: None,
                    units,
                    reference_se: row.reference_se,
                    relative_difference: None,
                    error: Some(format!("{e:#}")),
                    fixed_point_iterations: 0,
                    fixed_point_residual: 0.0,
                },
            }
        })
        .collect();
    let candidates: Vec<CandidateResult> = rows
        .iter()
        .filter_map(|r| {
            r.ase.map(|a| CandidateResult { layout: r.layout.clone(), powers: [0.0, 0.0], ase: a, ascents: Vec::new() })
        })
        .collect();
    let argmax = select_best(&candidates).map(|i| candidates[i].layout.clone());
    let values_within_15pct = rows.iter().all(|r| r.relative_difference.is_none_or(|d| d <= 0.15));
    BlockResult {
        block: block.block,
        argmax_matches: argmax.as_deref() == Some(&block.bold[..]),
        argmax,
        bold: block.bold.clone(),
        rows,
        values_within_15pct,
    }
}

pub fn run_table1(set: &Table1Set) -> Vec<BlockResult> {
    set.blocks.iter().map(run_block).collect()
}
