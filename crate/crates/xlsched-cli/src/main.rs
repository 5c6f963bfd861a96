//! `xlsched` - run cross-layer scheduling simulations and score how well
//! assigned rates respect per-user rate bounds.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use xlsched::engine::TbrmMode;
use xlsched::metrics::DEFAULT_WARMUP_SLOTS;
use xlsched::tbrm::AdditiveShape;
use xlsched_cli::orchestrate::{
    self, RunOptions, RunSummary, SweepOptions, TbrmChoice,
};
use xlsched_cli::scenario::{self, ScenarioDoc};

#[derive(Parser)]
#[command(
    name = "xlsched",
    version,
    about = "Slotted cross-layer scheduling simulator with token-bucket rate constraining",
    after_help = "Bundled preset scenarios: s1, s2, s3, s4, s5."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags every subcommand shares.
#[derive(Args)]
struct Common {
    /// Bundled preset name (s1..s5) or path to a scenario file
    /// (`.json` for the JSON mirror, anything else as `key = value` text).
    #[arg(long)]
    scenario: String,
    /// Comma-separated scheduler list, or `all`
    /// (mw, mlwdf, exp/pf, mdu, md, mdv).
    #[arg(long, default_value = "all")]
    schedulers: String,
    /// Directory the CSV files land in.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Slots dropped before any metric is computed.
    #[arg(long, default_value_t = DEFAULT_WARMUP_SLOTS)]
    warmup: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scheduler x modifier matrix; write rate files, metric
    /// tables and per-setting aggregates.
    Run {
        #[command(flatten)]
        common: Common,
        /// Run with the rate modifier `on`, `off`, or `both`.
        #[arg(long, default_value = "both")]
        tbrm: String,
        /// Weight correction: `multiplicative`, `additive-identity` or
        /// `additive-cubic`.
        #[arg(long, default_value = "multiplicative")]
        variant: String,
        /// Override the scenario's horizon (slots).
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Sweep the bucket-scale multiplier (modifier on) and report slot
    /// conformance per multiplier.
    SweepSigma {
        #[command(flatten)]
        common: Common,
        /// Comma-separated multipliers; defaults to ten log-spaced points
        /// in 0.01..10000.
        #[arg(long)]
        multipliers: Option<String>,
    },
    /// Sweep the slot length (modifier on) and report slot conformance per
    /// slot length. Bucket scales keep their multipliers, so they track tau.
    SweepTau {
        #[command(flatten)]
        common: Common,
        /// Comma-separated slot lengths in seconds; defaults to
        /// 0.05,0.1,0.2,0.5,1.
        #[arg(long)]
        taus: Option<String>,
    },
    /// Recompute metric tables from a previously written rate file, judged
    /// against the scenario's bounds.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Rate file written by `run`.
        #[arg(long)]
        rates: PathBuf,
    },
}

fn parse_variant(text: &str) -> anyhow::Result<TbrmMode> {
    match text.to_ascii_lowercase().as_str() {
        "multiplicative" => Ok(TbrmMode::Multiplicative),
        "additive-identity" => Ok(TbrmMode::Additive(AdditiveShape::Identity)),
        "additive-cubic" => Ok(TbrmMode::Additive(AdditiveShape::Cubic)),
        other => bail!(
            "unknown variant `{other}` (expected multiplicative, additive-identity or additive-cubic)"
        ),
    }
}

fn parse_float_list(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("bad {what} `{s}`"))
        })
        .collect()
}

fn load_scenario(common: &Common) -> anyhow::Result<ScenarioDoc> {
    let doc = scenario::load(&common.scenario)
        .with_context(|| format!("loading scenario `{}`", common.scenario))?;
    Ok(doc)
}

fn report(summary: &RunSummary) {
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    for file in &summary.files {
        println!("{}", file.display());
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            common,
            tbrm,
            variant,
            horizon,
        } => {
            let mut doc = load_scenario(&common)?;
            if let Some(horizon) = horizon {
                doc.horizon_slots = horizon;
            }
            let options = RunOptions {
                schedulers: scenario::parse_scheduler_list(&common.schedulers)?,
                tbrm: TbrmChoice::parse(&tbrm)
                    .with_context(|| format!("unknown tbrm setting `{tbrm}` (expected on, off or both)"))?,
                mode: parse_variant(&variant)?,
                seed: common.seed,
                warmup: common.warmup,
            };
            let summary = orchestrate::run_regular(&doc, &options, &common.out)?;
            report(&summary);
        }
        Command::SweepSigma {
            common,
            multipliers,
        } => {
            let doc = load_scenario(&common)?;
            let multipliers = match multipliers {
                Some(list) => parse_float_list(&list, "multiplier")?,
                None => orchestrate::sigma_multiplier_grid(),
            };
            let options = SweepOptions {
                schedulers: scenario::parse_scheduler_list(&common.schedulers)?,
                mode: TbrmMode::Multiplicative,
                seed: common.seed,
                warmup: common.warmup,
            };
            let summary = orchestrate::sweep_sigma(&doc, &multipliers, &options, &common.out)?;
            report(&summary);
        }
        Command::SweepTau { common, taus } => {
            let doc = load_scenario(&common)?;
            let taus = match taus {
                Some(list) => parse_float_list(&list, "slot length")?,
                None => orchestrate::tau_grid(),
            };
            let options = SweepOptions {
                schedulers: scenario::parse_scheduler_list(&common.schedulers)?,
                mode: TbrmMode::Multiplicative,
                seed: common.seed,
                warmup: common.warmup,
            };
            let summary = orchestrate::sweep_tau(&doc, &taus, &options, &common.out)?;
            report(&summary);
        }
        Command::Metrics { common, rates } => {
            let doc = load_scenario(&common)?;
            let summary =
                orchestrate::recompute_metrics(&doc, &rates, common.warmup, &common.out)?;
            report(&summary);
        }
    }
    Ok(())
}
