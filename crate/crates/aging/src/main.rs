//! `aging` command-line interface.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use aging::commands::{self, CommandOutput, EXIT_FAILURE};
use aging::config::SweepParam;
use aging::run::parse_layout;
use aging::table1::Table1Set;
use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aging", version, about = "Frame-length and pilot/data power optimization under channel aging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file, or `bundled:NAME` for a bundled scenario.
    #[arg(long)]
    scenario: String,
    /// Directory for the JSON report and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic-equivalent SE of one layout at the configured powers.
    Deteq {
        #[command(flatten)]
        common: Common,
        /// Frame sizes, e.g. `3,3,3,2`.
        #[arg(long)]
        layout: String,
    },
    /// Joint frame-layout and power optimization.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Keep the configured powers, search layouts only.
        #[arg(long)]
        fixed_powers: bool,
        /// Plain projected gradient with a fixed step.
        #[arg(long)]
        literal_alg1: bool,
    },
    /// Full-chain Monte Carlo of one layout against the deterministic SE.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        layout: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Defaults to the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the first trial's channel trajectory as CSV.
        #[arg(long)]
        dump_trajectory: bool,
    },
    /// Reproduce the Table I comparison.
    Table1 {
        /// Table I scenario set; the bundled set by default.
        #[arg(long)]
        set: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with code 3 when any block's argmax differs from the bold layout.
        #[arg(long)]
        assert: bool,
    },
    /// Optimize over a range of one scenario parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Defaults to the scenario's sweep.
        #[arg(long, value_enum)]
        param: Option<SweepParam>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
}

fn execute(cmd: Command) -> Result<(CommandOutput, Option<PathBuf>)> {
    Ok(match cmd {
        Command::Deteq { common, layout } => {
            let cfg = commands::load_scenario(&common.scenario)?;
            (commands::deteq(&cfg, &parse_layout(&layout)?)?, common.out)
        }
        Command::Optimize { common, fixed_powers, literal_alg1 } => {
            let mut cfg = commands::load_scenario(&common.scenario)?;
            cfg.optimizer.fixed_powers |= fixed_powers;
            cfg.optimizer.literal_alg1 |= literal_alg1;
            (commands::optimize(&cfg)?, common.out)
        }
        Command::Montecarlo { common, layout, trials, seed, dump_trajectory } => {
            let cfg = commands::load_scenario(&common.scenario)?;
            let seed = seed.unwrap_or(cfg.seed);
            (commands::montecarlo(&cfg, &parse_layout(&layout)?, trials, seed, dump_trajectory)?, common.out)
        }
        Command::Table1 { set, out, assert } => {
            let set = match set {
                Some(p) => Table1Set::from_json(&std::fs::read_to_string(&p)?)?,
                None => Table1Set::bundled(),
            };
            (commands::table1(&set, assert)?, out)
        }
        Command::Sweep { common, param, values } => {
            let cfg = commands::load_scenario(&common.scenario)?;
            let (param, values) = commands::sweep_spec(&cfg, param, values)?;
            (commands::sweep(&cfg, param, &values)?, common.out)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = aging::init_threads().and_then(|_| execute(cli.command)).and_then(|(output, out)| {
        // a closed stdout (e.g. piped into `head`) must not abort the run
        let mut stdout = std::io::stdout().lock();
        let _ = write!(stdout, "{}", output.text);
        if let Some(dir) = out {
            for p in output.files.write(&dir)? {
                let _ = writeln!(stdout, "wrote {}", p.display());
            }
        }
        let _ = writeln!(stdout, "wall clock {:.2} s", output.report.wall_clock_seconds);
        Ok(output)
    });
    match result {
        Ok(output) => {
            if let Some(m) = &output.mismatch {
                eprintln!("assertion failed: {m}");
            }
            ExitCode::from(output.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = commands::error_exit_code(&e);
            ExitCode::from(if code == 0 { EXIT_FAILURE as u8 } else { code as u8 })
        }
    }
}
