use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hlmt_core::simlab::{Dof, Method, TestKind};
use hlmt_core::{MedianConvention, PValueMode};
use serde::{Deserialize, Serialize};

use crate::data::HeaderMode;

/// Robust location inference with Hodges-Lehmann estimators and the
/// weighted bootstrap.
#[derive(Debug, Parser)]
#[command(name = "hlmt", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Master seed. Falls back to $HLMT_SEED, then to a fixed default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Output does not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write a run manifest for later replay.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Output format (json for everything except simulate, which defaults to csv).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    One,
    Two,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV with one row per observation and one column per variable.
    pub input: PathBuf,
    /// Second sample, same columns as INPUT.
    #[arg(long, value_name = "FILE")]
    pub y: Option<PathBuf>,
    /// 1-based column of INPUT holding 0/1 group labels (1 marks the second sample).
    #[arg(long, value_name = "COL")]
    pub group_column: Option<usize>,
    #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
    pub header: HeaderMode,
    /// one or two; inferred from --y / --group-column when omitted.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, default_value = "midpoint")]
    pub convention: MedianConvention,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// HL point estimate per column.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Bootstrap confidence interval per column.
    Ci {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Bootstrap replicates.
        #[arg(long, default_value_t = hlmt_core::boot::DEFAULT_REPLICATES)]
        boot: usize,
    },
    /// Global null test over all columns.
    GlobalTest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = hlmt_core::boot::DEFAULT_REPLICATES)]
        boot: usize,
        /// hl or mean.
        #[arg(long, default_value = "hl")]
        method: Method,
    },
    /// Per-column p-values with Benjamini-Hochberg selection.
    Fdp {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = hlmt_core::boot::DEFAULT_REPLICATES)]
        boot: usize,
        /// hl or student-t.
        #[arg(long, default_value = "hl")]
        method: Method,
        /// smoothed or raw.
        #[arg(long, default_value = "smoothed")]
        pvalue_mode: PValueMode,
        /// File of 1-based null column indices; enables FDP/TPP output.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
    },
    /// Run a simulation experiment and emit one row per alpha.
    Simulate(SimulateArgs),
    /// Monte-Carlo efficiency of HL relative to the sample median under t noise.
    Are {
        /// Degrees of freedom; repeatable, `inf` for the normal law.
        #[arg(long = "nu", value_name = "NU", num_args = 1.., default_values = ["1", "2", "4", "8", "16", "inf"])]
        nu: Vec<Dof>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 20_000)]
        reps: usize,
    },
    /// Re-run a manifest and check that the output digest matches.
    Replay {
        manifest_path: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment config; inline flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long = "case")]
    pub case_id: Option<u8>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub signal_count: Option<usize>,
    /// Significance level; repeatable.
    #[arg(long = "alpha", num_args = 1..)]
    pub alphas: Vec<f64>,
    /// Bootstrap replicates per data set.
    #[arg(long = "boot")]
    pub replicates: Option<usize>,
    /// Monte-Carlo replications.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub test: Option<TestKind>,
    #[arg(long)]
    pub convention: Option<MedianConvention>,
    #[arg(long)]
    pub pvalue_mode: Option<PValueMode>,
}
