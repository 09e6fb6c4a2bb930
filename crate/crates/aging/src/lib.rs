//! Scenario files, parallel drivers and reports on top of `aging-core`.
//!
//! - [`config`]: JSON scenario files with path-located validation errors.
//! - [`run`]: deterministic, optimization, Monte Carlo and sweep runs.
//! - [`table1`]: the bundled Table I scenario set.
//! - [`commands`]: CLI commands producing a report and output files.
//!
//! Parallel work goes through rayon; results are reduced in input order so
//! they do not depend on the thread count.

pub mod bundled;
pub mod commands;
pub mod config;
pub mod report;
pub mod run;
pub mod table1;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "AGING_THREADS";

/// Size the global pool from `AGING_THREADS` when set. Safe to call more
/// than once; only the first call takes effect.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("{THREADS_ENV} must be positive");
        }
        // an already-initialized pool is not an error
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
