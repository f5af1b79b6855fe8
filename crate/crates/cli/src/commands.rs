//! Resolved invocations and their execution.
//!
//! Argument parsing produces an [`Invocation`] with every default, seed and
//! path filled in. Executing it is a pure function of the invocation and
//! the input files, which is what makes manifests replayable.

use std::path::PathBuf;

use hlmt_core::boot::{confidence_interval, BootstrapConfig};
use hlmt_core::multitest::{bh_threshold, coordinate_pvalues_one, coordinate_pvalues_two, fdp_hat, fdp_tpp};
use hlmt_core::simlab::{are_monte_carlo, mean_global_test, rows_to_csv, run_experiment, student_t_pvalues, Dof, Method, SimulationConfig};
use hlmt_core::{
    global_test_one_sample, global_test_two_sample, hl_one_sample, hl_two_sample, MedianConvention, PValueMode,
    PairedSamples, UnivariateSample,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{Format, Mode};
use crate::data::{load, read_truth, DataSpec, Loaded};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    Estimate(EstimateRun),
    Ci(CiRun),
    GlobalTest(GlobalTestRun),
    Fdp(FdpRun),
    Simulate(SimulateRun),
    Are(AreRun),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRun {
    pub data: DataSpec,
    pub mode: Mode,
    pub convention: MedianConvention,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRun {
    pub data: DataSpec,
    pub mode: Mode,
    pub convention: MedianConvention,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTestRun {
    pub data: DataSpec,
    pub mode: Mode,
    pub convention: MedianConvention,
    pub alpha: f64,
    pub replicates: usize,
    pub method: Method,
    pub seed: u64,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdpRun {
    pub data: DataSpec,
    pub mode: Mode,
    pub convention: MedianConvention,
    pub alpha: f64,
    pub replicates: usize,
    pub method: Method,
    pub pvalue_mode: PValueMode,
    pub truth: Option<PathBuf>,
    pub seed: u64,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRun {
    pub config: SimulationConfig,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreRun {
    pub nu: Vec<Dof>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub format: Format,
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Estimate(_) => "estimate",
            Invocation::Ci(_) => "ci",
            Invocation::GlobalTest(_) => "global-test",
            Invocation::Fdp(_) => "fdp",
            Invocation::Simulate(_) => "simulate",
            Invocation::Are(_) => "are",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Estimate(_) => None,
            Invocation::Ci(r) => Some(r.seed),
            Invocation::GlobalTest(r) => Some(r.seed),
            Invocation::Fdp(r) => Some(r.seed),
            Invocation::Simulate(r) => Some(r.config.seed),
            Invocation::Are(r) => Some(r.seed),
        }
    }

    /// Files read during execution.
    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Invocation::Estimate(r) => r.data.paths(),
            Invocation::Ci(r) => r.data.paths(),
            Invocation::GlobalTest(r) => r.data.paths(),
            Invocation::Fdp(r) => r.data.paths().into_iter().chain(r.truth.clone()).collect(),
            Invocation::Simulate(_) | Invocation::Are(_) => Vec::new(),
        }
    }

    pub fn execute(&self) -> CliResult<String> {
        match self {
            Invocation::Estimate(r) => estimate(r),
            Invocation::Ci(r) => ci(r),
            Invocation::GlobalTest(r) => global_test(r),
            Invocation::Fdp(r) => fdp(r),
            Invocation::Simulate(r) => simulate(r),
            Invocation::Are(r) => are(r),
        }
    }
}

fn schema(command: &str) -> String {
    format!("hlmt.{command}/1")
}

fn render_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values always serialize");
    s.push('\n');
    s
}

fn render_csv(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Data(format!("csv output: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::One => "one",
        Mode::Two => "two",
    }
}

/// Per-column samples of a loaded data set.
enum ColumnData {
    One(UnivariateSample),
    Two(PairedSamples),
}

fn column(loaded: &Loaded, j: usize) -> CliResult<ColumnData> {
    let x = UnivariateSample::new(loaded.x.columns[j].clone())?;
    Ok(match &loaded.y {
        None => ColumnData::One(x),
        Some(y) => ColumnData::Two(PairedSamples::new(x, UnivariateSample::new(y.columns[j].clone())?)),
    })
}

fn estimate(r: &EstimateRun) -> CliResult<String> {
    let loaded = load(&r.data)?;
    let mut cols = Vec::new();
    for j in 0..loaded.p() {
        let est = match column(&loaded, j)? {
            ColumnData::One(x) => hl_one_sample(&x, r.convention)?,
            ColumnData::Two(s) => hl_two_sample(&s, r.convention)?,
        };
        cols.push((j, est));
    }
    match r.format {
        Format::Json => Ok(render_json(&json!({
            "schema_version": schema("estimate"),
            "mode": mode_name(r.mode),
            "convention": r.convention,
            "columns": cols.iter().map(|(j, e)| json!({
                "column": j + 1,
                "name": loaded.names[*j],
                "estimate": e.value,
                "pair_count": e.pair_count,
            })).collect::<Vec<_>>(),
        }))),
        Format::Csv => render_csv(
            &["column", "name", "estimate", "pair_count"],
            cols.iter()
                .map(|(j, e)| vec![(j + 1).to_string(), loaded.names[*j].clone(), e.value.to_string(), e.pair_count.to_string()])
                .collect(),
        ),
    }
}

fn ci(r: &CiRun) -> CliResult<String> {
    let loaded = load(&r.data)?;
    let cfg = BootstrapConfig::new(r.replicates, r.seed);
    let mut cols = Vec::new();
    for j in 0..loaded.p() {
        // Every column gets the same master seed; columns are analysed
        // separately, exactly as if each were passed on its own.
        let ci = match column(&loaded, j)? {
            ColumnData::One(x) => confidence_interval(&x, &cfg, r.alpha, r.convention)?,
            ColumnData::Two(s) => confidence_interval(&s, &cfg, r.alpha, r.convention)?,
        };
        cols.push((j, ci));
    }
    match r.format {
        Format::Json => Ok(render_json(&json!({
            "schema_version": schema("ci"),
            "mode": mode_name(r.mode),
            "convention": r.convention,
            "alpha": r.alpha,
            "replicates": r.replicates,
            "seed": r.seed,
            "columns": cols.iter().map(|(j, c)| json!({
                "column": j + 1,
                "name": loaded.names[*j],
                "estimate": c.center,
                "lower": c.lower,
                "upper": c.upper,
                "level": c.level,
            })).collect::<Vec<_>>(),
        }))),
        Format::Csv => render_csv(
            &["column", "name", "estimate", "lower", "upper", "level", "replicates", "seed"],
            cols.iter()
                .map(|(j, c)| {
                    vec![
                        (j + 1).to_string(),
                        loaded.names[*j].clone(),
                        c.center.to_string(),
                        c.lower.to_string(),
                        c.upper.to_string(),
                        c.level.to_string(),
                        r.replicates.to_string(),
                        r.seed.to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

fn global_test(r: &GlobalTestRun) -> CliResult<String> {
    let loaded = load(&r.data)?;
    let x = loaded.x.clone().into_matrix()?;
    let y = loaded.y.clone().map(|t| t.into_matrix()).transpose()?;
    let res = match r.method {
        Method::Hl => {
            let cfg = BootstrapConfig::new(r.replicates, r.seed);
            match &y {
                None => global_test_one_sample(&x, r.alpha, &cfg, r.convention)?,
                Some(y) => global_test_two_sample(&x, y, r.alpha, &cfg, r.convention)?,
            }
        }
        Method::Mean => mean_global_test(&x, y.as_ref(), r.alpha, r.replicates, r.seed)?,
        Method::StudentT => unreachable!("rejected during resolution"),
    };
    match r.format {
        Format::Json => Ok(render_json(&json!({
            "schema_version": schema("global-test"),
            "method": r.method.as_str(),
            "mode": mode_name(r.mode),
            "alpha": r.alpha,
            "replicates": r.replicates,
            "seed": r.seed,
            "max_stat": res.max_stat,
            "critical_value": res.critical_value,
            "reject": res.reject,
            "estimates": res.estimates,
        }))),
        Format::Csv => render_csv(
            &["method", "mode", "alpha", "replicates", "seed", "max_stat", "critical_value", "reject"],
            vec![vec![
                r.method.as_str().to_string(),
                mode_name(r.mode).to_string(),
                r.alpha.to_string(),
                r.replicates.to_string(),
                r.seed.to_string(),
                res.max_stat.to_string(),
                res.critical_value.to_string(),
                res.reject.to_string(),
            ]],
        ),
    }
}

fn fdp(r: &FdpRun) -> CliResult<String> {
    let loaded = load(&r.data)?;
    let p = loaded.p();
    let nulls = r.truth.as_ref().map(|t| read_truth(t, p)).transpose()?;
    let x = loaded.x.clone().into_matrix()?;
    let y = loaded.y.clone().map(|t| t.into_matrix()).transpose()?;
    let pvalues = match r.method {
        Method::Hl => {
            let cfg = BootstrapConfig::new(r.replicates, r.seed);
            match &y {
                None => coordinate_pvalues_one(&x, &cfg, r.convention, r.pvalue_mode)?,
                Some(y) => coordinate_pvalues_two(&x, y, &cfg, r.convention, r.pvalue_mode)?,
            }
        }
        Method::StudentT => student_t_pvalues(&x, y.as_ref())?,
        Method::Mean => unreachable!("rejected during resolution"),
    };
    let res = bh_threshold(&pvalues, r.alpha)?;
    let report = nulls.as_ref().map(|n| fdp_tpp(&res, n)).transpose()?;
    let mut is_rejected = vec![false; p];
    for &i in &res.rejected {
        is_rejected[i] = true;
    }
    match r.format {
        Format::Json => {
            let mut out = json!({
                "schema_version": schema("fdp"),
                "method": r.method.as_str(),
                "mode": mode_name(r.mode),
                "alpha": r.alpha,
                "replicates": r.replicates,
                "pvalue_mode": r.pvalue_mode,
                "seed": r.seed,
                "t_bh": res.t_bh,
                "fdp_hat": fdp_hat(&res.pvalues, res.t_bh),
                "rejected": res.rejected.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "pvalues": res.pvalues,
            });
            if let Some(rep) = report {
                out["report"] = json!({
                    "false_rejections": rep.false_rejections,
                    "rejections": rep.rejections,
                    "fdp": rep.fdp,
                    "tpp": rep.tpp,
                    "tpp_vacuous": rep.tpp_vacuous,
                });
            }
            Ok(render_json(&out))
        }
        Format::Csv => {
            let mut header = vec!["column", "name", "pvalue", "rejected"];
            let null_flags = nulls.map(|n| {
                let mut flags = vec![false; p];
                n.into_iter().for_each(|i| flags[i] = true);
                flags
            });
            if null_flags.is_some() {
                header.push("null");
            }
            let rows = (0..p)
                .map(|j| {
                    let mut row = vec![
                        (j + 1).to_string(),
                        loaded.names[j].clone(),
                        res.pvalues[j].to_string(),
                        u8::from(is_rejected[j]).to_string(),
                    ];
                    if let Some(flags) = &null_flags {
                        row.push(u8::from(flags[j]).to_string());
                    }
                    row
                })
                .collect();
            render_csv(&header, rows)
        }
    }
}

fn simulate(r: &SimulateRun) -> CliResult<String> {
    r.config.validate().map_err(CliError::config_from)?;
    let rows = run_experiment(&r.config)?;
    match r.format {
        Format::Csv => Ok(rows_to_csv(&rows)),
        Format::Json => Ok(render_json(&json!({
            "schema_version": schema("simulate"),
            "config": r.config,
            "rows": rows,
        }))),
    }
}

fn are(r: &AreRun) -> CliResult<String> {
    let mut results = Vec::new();
    for &nu in &r.nu {
        results.push((nu, are_monte_carlo(nu, r.n, r.reps, r.seed)?));
    }
    match r.format {
        Format::Json => Ok(render_json(&json!({
            "schema_version": schema("are"),
            "n": r.n,
            "reps": r.reps,
            "seed": r.seed,
            "results": results.iter().map(|(nu, v)| json!({ "nu": nu.to_string(), "are": v })).collect::<Vec<_>>(),
        }))),
        Format::Csv => render_csv(
            &["nu", "are", "n", "reps", "seed"],
            results
                .iter()
                .map(|(nu, v)| vec![nu.to_string(), v.to_string(), r.n.to_string(), r.reps.to_string(), r.seed.to_string()])
                .collect(),
        ),
    }
}
