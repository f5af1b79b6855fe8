//! Turns parsed arguments into a fully specified [`Invocation`].

use std::path::{Path, PathBuf};

use hlmt_core::simlab::{Method, SimulationConfig};
use serde_json::{Map, Value};

use crate::args::{Command, Format, GlobalOpts, InputArgs, Mode, SimulateArgs};
use crate::commands::{AreRun, CiRun, EstimateRun, FdpRun, GlobalTestRun, Invocation, SimulateRun};
use crate::data::DataSpec;
use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "HLMT_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Seed from $HLMT_SEED, if set.
pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{s}` is not an unsigned 64-bit integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

fn data_spec(input: &InputArgs) -> CliResult<(DataSpec, Mode)> {
    let spec = DataSpec {
        x: absolute(&input.input)?,
        y: input.y.as_deref().map(absolute).transpose()?,
        group_column: input.group_column,
        header: input.header,
    };
    if spec.y.is_some() && spec.group_column.is_some() {
        return Err(CliError::Usage("use either --y or --group-column, not both".into()));
    }
    let inferred = if spec.is_two_sample() { Mode::Two } else { Mode::One };
    match input.mode {
        Some(m) if m != inferred => Err(CliError::Usage(match m {
            Mode::Two => "--mode two needs a second sample via --y or --group-column".into(),
            Mode::One => "--mode one conflicts with --y / --group-column".into(),
        })),
        _ => Ok((spec, inferred)),
    }
}

fn check_replicates(boot: usize) -> CliResult<()> {
    if boot == 0 {
        Err(CliError::Usage("--boot must be at least 1".into()))
    } else {
        Ok(())
    }
}

pub fn resolve(command: Command, global: &GlobalOpts) -> CliResult<Invocation> {
    let seed = || -> CliResult<u64> { Ok(global.seed.or(env_seed()?).unwrap_or(DEFAULT_SEED)) };
    let format = global.format.unwrap_or(Format::Json);
    Ok(match command {
        Command::Estimate { input } => {
            let (data, mode) = data_spec(&input)?;
            Invocation::Estimate(EstimateRun { data, mode, convention: input.convention, format })
        }
        Command::Ci { input, alpha, boot } => {
            check_replicates(boot)?;
            let (data, mode) = data_spec(&input)?;
            Invocation::Ci(CiRun { data, mode, convention: input.convention, alpha, replicates: boot, seed: seed()?, format })
        }
        Command::GlobalTest { input, alpha, boot, method } => {
            check_replicates(boot)?;
            if method == Method::StudentT {
                return Err(CliError::Usage("global-test supports --method hl or mean".into()));
            }
            let (data, mode) = data_spec(&input)?;
            Invocation::GlobalTest(GlobalTestRun {
                data,
                mode,
                convention: input.convention,
                alpha,
                replicates: boot,
                method,
                seed: seed()?,
                format,
            })
        }
        Command::Fdp { input, alpha, boot, method, pvalue_mode, truth } => {
            check_replicates(boot)?;
            if method == Method::Mean {
                return Err(CliError::Usage("fdp supports --method hl or student-t".into()));
            }
            let (data, mode) = data_spec(&input)?;
            Invocation::Fdp(FdpRun {
                data,
                mode,
                convention: input.convention,
                alpha,
                replicates: boot,
                method,
                pvalue_mode,
                truth: truth.as_deref().map(absolute).transpose()?,
                seed: seed()?,
                format,
            })
        }
        Command::Simulate(args) => {
            let config = simulation_config(&args, global.seed, seed()?)?;
            Invocation::Simulate(SimulateRun { config, format: global.format.unwrap_or(Format::Csv) })
        }
        Command::Are { nu, n, reps } => Invocation::Are(AreRun { nu, n, reps, seed: seed()?, format }),
        Command::Replay { .. } => unreachable!("replay is handled before resolution"),
    })
}

/// Config file fields, overridden by inline flags. The seed comes from
/// --seed, then the file, then $HLMT_SEED / the default.
fn simulation_config(args: &SimulateArgs, flag_seed: Option<u64>, fallback_seed: u64) -> CliResult<SimulationConfig> {
    let mut obj = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => {
                    return Err(CliError::Config { field: "config".into(), message: "expected a JSON object".into() })
                }
                Err(e) => {
                    return Err(CliError::Config { field: "config".into(), message: format!("invalid JSON: {e}") })
                }
            }
        }
        None => Map::new(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            obj.insert(key.to_string(), v);
        }
    };
    set("case_id", args.case_id.map(Value::from));
    set("n", args.n.map(Value::from));
    set("m", args.m.map(Value::from));
    set("p", args.p.map(Value::from));
    set("mu", args.mu.map(Value::from));
    set("signal_count", args.signal_count.map(Value::from));
    set("alphas", (!args.alphas.is_empty()).then(|| Value::from(args.alphas.clone())));
    set("replicates", args.replicates.map(Value::from));
    set("reps", args.reps.map(Value::from));
    set("method", args.method.map(|m| Value::from(m.as_str())));
    set("test", args.test.map(|t| Value::from(t.as_str())));
    set("convention", args.convention.map(|c| serde_json::to_value(c).expect("enum serializes")));
    set("pvalue_mode", args.pvalue_mode.map(|c| serde_json::to_value(c).expect("enum serializes")));
    match flag_seed {
        Some(s) => {
            obj.insert("seed".into(), Value::from(s));
        }
        None => {
            obj.entry("seed").or_insert(Value::from(fallback_seed));
        }
    }
    let cfg: SimulationConfig = serde_json::from_value(Value::Object(obj)).map_err(config_error)?;
    cfg.validate().map_err(CliError::config_from)?;
    Ok(cfg)
}

/// serde messages look like "missing field `n`" or "unknown field `x`, ...";
/// pull the backquoted name out as the offending field.
fn config_error(e: serde_json::Error) -> CliError {
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("field"))
        .unwrap_or("config")
        .to_string();
    CliError::Config { field, message: msg }
}
