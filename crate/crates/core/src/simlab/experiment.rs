use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boot::{check_alpha, BootstrapConfig, PValueMode, DEFAULT_REPLICATES};
use crate::error::{HlError, Result};
use crate::matrix::MultivariateDataset;
use crate::multitest::{
    bh_threshold, coordinate_pvalues_one, coordinate_pvalues_two, fdp_tpp, global_bootstrap_one_sample,
    global_bootstrap_two_sample, GlobalBootstrap,
};
use crate::rng::{derive_seed, substream, tag};
use crate::sample::MedianConvention;

use super::baseline::{mean_global_bootstrap, student_t_pvalues};
use super::noise::{sample_noise, NoiseModel};

/// Default Monte-Carlo replications per experiment.
pub const DEFAULT_REPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Hl,
    Mean,
    StudentT,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hl => "hl",
            Method::Mean => "mean",
            Method::StudentT => "student-t",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hl" => Ok(Method::Hl),
            "mean" => Ok(Method::Mean),
            "student-t" | "studentt" | "t" => Ok(Method::StudentT),
            other => Err(HlError::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Which inference task an experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// Global-null test; rows report the rejection rate (size or power).
    Global,
    /// BH multiple testing; rows report mean FDP and mean TPP.
    Fdp,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Global => "global",
            TestKind::Fdp => "fdp",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(TestKind::Global),
            "fdp" => Ok(TestKind::Fdp),
            other => Err(HlError::InvalidParameter(format!("unknown test kind `{other}`"))),
        }
    }
}

/// Noise of the X sample and, for two-sample cases, of the Y sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseNoise {
    pub x: NoiseModel,
    pub y: Option<NoiseModel>,
}

const T3: NoiseModel = NoiseModel::ScaledT { dof: 3.0, scale: 0.3 };
const T1: NoiseModel = NoiseModel::ScaledT { dof: 1.0, scale: 0.3 };
const PARETO_MIX: NoiseModel = NoiseModel::DiffParetoGaussMix { shape: 2.0, mix_weight: 0.2 };
const GAUSS_MIX: NoiseModel = NoiseModel::GaussianARMix { rho: 0.7, inflation: 10.0, mix_weight: 0.2 };

/// Noise laws of the eight simulation cases.
pub fn case_noise(case_id: u8) -> Result<CaseNoise> {
    let (x, y) = match case_id {
        1 => (T3, None),
        2 => (PARETO_MIX, None),
        3 => (GAUSS_MIX, None),
        4 => (NoiseModel::GaussianAR { rho: 0.7, scale: 1.5 }, Some(NoiseModel::GaussianAR { rho: 0.7, scale: 1.0 })),
        5 => (GAUSS_MIX, Some(PARETO_MIX)),
        6 => (T3, Some(T3)),
        7 => (T1, None),
        8 => (T1, Some(T1)),
        other => return Err(HlError::InvalidParameter(format!("case_id {other} not in 1..=8"))),
    };
    Ok(CaseNoise { x, y })
}

fn default_signal_count() -> usize {
    50
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

/// Declarative description of one simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub case_id: u8,
    pub n: usize,
    /// Size of the second sample; required for the two-sample cases 4, 5, 6, 8.
    #[serde(default)]
    pub m: Option<usize>,
    pub p: usize,
    /// Signal strength placed on the first `signal_count` coordinates.
    pub mu: f64,
    #[serde(default = "default_signal_count")]
    pub signal_count: usize,
    pub alphas: Vec<f64>,
    /// Bootstrap replicates B per data set.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Monte-Carlo replications.
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub seed: u64,
    pub method: Method,
    pub test: TestKind,
    #[serde(default)]
    pub convention: MedianConvention,
    #[serde(default)]
    pub pvalue_mode: PValueMode,
}

impl SimulationConfig {
    pub fn is_two_sample(&self) -> bool {
        matches!(self.case_id, 4 | 5 | 6 | 8)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(HlError::InvalidParameter(format!("{field}: {msg}")));
        if case_noise(self.case_id).is_err() {
            return bad("case_id", format!("{} not in 1..=8", self.case_id));
        }
        if self.n < 4 {
            return bad("n", format!("must be at least 4, got {}", self.n));
        }
        match (self.is_two_sample(), self.m) {
            (true, None) => return bad("m", format!("case {} is two-sample and needs m", self.case_id)),
            (true, Some(m)) if m < 4 => return bad("m", format!("must be at least 4, got {m}")),
            (false, Some(_)) => return bad("m", format!("case {} is one-sample; remove m", self.case_id)),
            _ => {}
        }
        if self.p == 0 {
            return bad("p", "must be at least 1".into());
        }
        if self.signal_count > self.p {
            return bad("signal_count", format!("{} exceeds p = {}", self.signal_count, self.p));
        }
        if !self.mu.is_finite() {
            return bad("mu", format!("{} is not finite", self.mu));
        }
        if self.alphas.is_empty() {
            return bad("alphas", "must list at least one level".into());
        }
        for &a in &self.alphas {
            if check_alpha(a).is_err() {
                return bad("alphas", format!("{a} outside (0, 1)"));
            }
        }
        if self.replicates == 0 {
            return bad("replicates", "must be at least 1".into());
        }
        if self.reps == 0 {
            return bad("reps", "must be at least 1".into());
        }
        match (self.method, self.test) {
            (Method::Mean, TestKind::Fdp) => bad("method", "the mean baseline is a global test; use hl or student-t".into()),
            (Method::StudentT, TestKind::Global) => {
                bad("method", "student-t is a multiple-testing baseline; use hl or mean".into())
            }
            _ => Ok(()),
        }
    }

    /// Coordinates with no signal (0-based).
    pub fn null_coordinates(&self) -> Vec<usize> {
        (self.signal_count..self.p).collect()
    }
}

/// Synthesizes the data set of replication `rep`: X = θ + noise with θ
/// equal to `mu` on the first `signal_count` coordinates, and for
/// two-sample cases Y = noise (θ° = 0).
pub fn build_dataset(cfg: &SimulationConfig, rep: usize) -> Result<MultivariateDataset> {
    cfg.validate()?;
    let noise = case_noise(cfg.case_id)?;
    let mut rng = substream(cfg.seed, &[tag::DATASET, rep as u64]);
    let mut x = sample_noise(&noise.x, cfg.n, cfg.p, &mut rng)?;
    for j in 0..cfg.signal_count {
        x.column_mut(j).iter_mut().for_each(|v| *v += cfg.mu);
    }
    match (noise.y, cfg.m) {
        (Some(ny), Some(m)) => {
            let y = sample_noise(&ny, m, cfg.p, &mut rng)?;
            MultivariateDataset::two_sample(x, y)
        }
        _ => MultivariateDataset::one_sample(x),
    }
}

/// Aggregated result for one significance level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub case_id: u8,
    pub method: Method,
    pub test: TestKind,
    pub n: usize,
    pub m: Option<usize>,
    pub p: usize,
    pub mu: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub reps: usize,
    pub seed: u64,
    /// Fraction of replications rejecting the global null.
    pub rejection_rate: Option<f64>,
    pub mean_fdp: Option<f64>,
    pub mean_tpp: Option<f64>,
}

impl ExperimentRow {
    pub const CSV_HEADER: &'static str =
        "case,method,test,n,m,p,mu,alpha,replicates,reps,seed,rejection_rate,mean_fdp,mean_tpp";

    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.case_id,
            self.method.as_str(),
            self.test.as_str(),
            self.n,
            self.m.map(|m| m.to_string()).unwrap_or_default(),
            self.p,
            self.mu,
            self.alpha,
            self.replicates,
            self.reps,
            self.seed,
            opt(self.rejection_rate),
            opt(self.mean_fdp),
            opt(self.mean_tpp),
        )
    }
}

/// Renders rows as CSV with a header line.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(ExperimentRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Per-replication outcome for every configured α.
enum RepOutcome {
    Global(Vec<bool>),
    Fdp(Vec<(f64, f64)>),
}

fn global_for(cfg: &SimulationConfig, data: &MultivariateDataset, seed: u64) -> Result<GlobalBootstrap> {
    match cfg.method {
        Method::Hl => {
            let boot = BootstrapConfig::new(cfg.replicates, seed);
            match &data.y {
                None => global_bootstrap_one_sample(&data.x, &boot, cfg.convention),
                Some(y) => global_bootstrap_two_sample(&data.x, y, &boot, cfg.convention),
            }
        }
        Method::Mean => mean_global_bootstrap(&data.x, data.y.as_ref(), cfg.replicates, seed),
        Method::StudentT => unreachable!("rejected by validate"),
    }
}

fn pvalues_for(cfg: &SimulationConfig, data: &MultivariateDataset, seed: u64) -> Result<Vec<f64>> {
    match cfg.method {
        Method::Hl => {
            let boot = BootstrapConfig::new(cfg.replicates, seed);
            match &data.y {
                None => coordinate_pvalues_one(&data.x, &boot, cfg.convention, cfg.pvalue_mode),
                Some(y) => coordinate_pvalues_two(&data.x, y, &boot, cfg.convention, cfg.pvalue_mode),
            }
        }
        Method::StudentT => student_t_pvalues(&data.x, data.y.as_ref()),
        Method::Mean => unreachable!("rejected by validate"),
    }
}

/// Runs one replication: data synthesis plus the configured test at every α.
fn run_rep(cfg: &SimulationConfig, rep: usize, nulls: &[usize]) -> Result<RepOutcome> {
    let data = build_dataset(cfg, rep)?;
    let seed = derive_seed(cfg.seed, &[tag::EXPERIMENT, rep as u64]);
    match cfg.test {
        TestKind::Global => {
            let boot = global_for(cfg, &data, seed)?;
            let decisions = cfg.alphas.iter().map(|&a| boot.decide(a).map(|r| r.reject)).collect::<Result<_>>()?;
            Ok(RepOutcome::Global(decisions))
        }
        TestKind::Fdp => {
            let pvalues = pvalues_for(cfg, &data, seed)?;
            let metrics = cfg
                .alphas
                .iter()
                .map(|&a| {
                    let res = bh_threshold(&pvalues, a)?;
                    let rep = fdp_tpp(&res, nulls)?;
                    Ok((rep.fdp, rep.tpp))
                })
                .collect::<Result<_>>()?;
            Ok(RepOutcome::Fdp(metrics))
        }
    }
}

/// Runs all replications and aggregates one row per α. Any failing
/// replication aborts the whole experiment.
pub fn run_experiment(cfg: &SimulationConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let nulls = cfg.null_coordinates();
    let outcomes: Vec<RepOutcome> =
        (0..cfg.reps).into_par_iter().map(|rep| run_rep(cfg, rep, &nulls)).collect::<Result<_>>()?;
    let reps = cfg.reps as f64;
    let rows = cfg
        .alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let mut row = ExperimentRow {
                case_id: cfg.case_id,
                method: cfg.method,
                test: cfg.test,
                n: cfg.n,
                m: cfg.m,
                p: cfg.p,
                mu: cfg.mu,
                alpha,
                replicates: cfg.replicates,
                reps: cfg.reps,
                seed: cfg.seed,
                rejection_rate: None,
                mean_fdp: None,
                mean_tpp: None,
            };
            match cfg.test {
                TestKind::Global => {
                    let hits = outcomes
                        .iter()
                        .filter(|o| matches!(o, RepOutcome::Global(d) if d[k]))
                        .count();
                    row.rejection_rate = Some(hits as f64 / reps);
                }
                TestKind::Fdp => {
                    let (mut fdp, mut tpp) = (0.0, 0.0);
                    for o in &outcomes {
                        if let RepOutcome::Fdp(m) = o {
                            fdp += m[k].0;
                            tpp += m[k].1;
                        }
                    }
                    row.mean_fdp = Some(fdp / reps);
                    row.mean_tpp = Some(tpp / reps);
                }
            }
            row
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small(case_id: u8, method: Method, test: TestKind) -> SimulationConfig {
        SimulationConfig {
            case_id,
            n: 20,
            m: if matches!(case_id, 4 | 5 | 6 | 8) { Some(18) } else { None },
            p: 6,
            mu: 0.0,
            signal_count: 2,
            alphas: vec![0.05, 0.1],
            replicates: 20,
            reps: 3,
            seed: 17,
            method,
            test,
            convention: MedianConvention::Midpoint,
            pvalue_mode: PValueMode::Smoothed,
        }
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = small(1, Method::Hl, TestKind::Global);
        cfg.signal_count = 7;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("signal_count"), "{msg}");

        let mut cfg = small(4, Method::Hl, TestKind::Global);
        cfg.m = None;
        assert!(cfg.validate().unwrap_err().to_string().contains("m:"));

        let cfg = small(1, Method::Mean, TestKind::Fdp);
        assert!(cfg.validate().unwrap_err().to_string().contains("method"));

        let mut cfg = small(9, Method::Hl, TestKind::Global);
        cfg.m = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dataset_is_deterministic_and_shaped() {
        let cfg = small(5, Method::Hl, TestKind::Global);
        let a = build_dataset(&cfg, 2).unwrap();
        let b = build_dataset(&cfg, 2).unwrap();
        let c = build_dataset(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!((a.x.nrows(), a.x.ncols()), (20, 6));
        assert_eq!(a.y.as_ref().unwrap().nrows(), 18);
    }

    #[test]
    fn smoke_every_case_and_method() {
        for case in 1..=8u8 {
            for (method, test) in [
                (Method::Hl, TestKind::Global),
                (Method::Mean, TestKind::Global),
                (Method::Hl, TestKind::Fdp),
                (Method::StudentT, TestKind::Fdp),
            ] {
                let mut cfg = small(case, method, test);
                cfg.reps = 1;
                let rows = run_experiment(&cfg).unwrap();
                assert_eq!(rows.len(), cfg.alphas.len());
                for row in rows {
                    for v in [row.rejection_rate, row.mean_fdp, row.mean_tpp].into_iter().flatten() {
                        assert!((0.0..=1.0).contains(&v));
                    }
                }
            }
        }
    }

    #[test]
    fn csv_schema_is_method_agnostic() {
        let hl = run_experiment(&small(1, Method::Hl, TestKind::Global)).unwrap();
        let mean = run_experiment(&small(1, Method::Mean, TestKind::Global)).unwrap();
        let cols = |rows: &[ExperimentRow]| rows_to_csv(rows).lines().map(|l| l.split(',').count()).collect::<Vec<_>>();
        assert_eq!(cols(&hl), cols(&mean));
        assert!(rows_to_csv(&hl).starts_with(ExperimentRow::CSV_HEADER));
    }
}
