//! Large-scale inference over the columns of a data matrix.
//!
//! Two weight constructions are used and must not be mixed up:
//!
//! * the global tests draw ONE weight vector per replicate and apply it to
//!   every coordinate, so the bootstrap maximum keeps the cross-coordinate
//!   dependence of the estimates;
//! * the per-coordinate p-values draw independent weights for every
//!   coordinate, from streams keyed by the column position.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boot::{
    bootstrap_distribution, bootstrap_pvalue, check_alpha, draw_admissible, empirical_quantile, BootstrapConfig,
    PValueMode, SortedIndex,
};
use crate::error::{HlError, Result};
use crate::hl::{hl_diff_sorted, hl_sorted};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, substream, tag};
use crate::sample::{MedianConvention, PairedSamples, UnivariateSample};

/// Outcome of a global-null test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTestResult {
    /// Per-coordinate point estimates.
    pub estimates: Vec<f64>,
    /// max over coordinates of |estimate|.
    pub max_stat: f64,
    /// Bootstrap (1 − α) quantile of the maximal deviation.
    pub critical_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub replicates: usize,
}

/// Bootstrap law of the maximal coordinate deviation, reusable across
/// significance levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBootstrap {
    pub estimates: Vec<f64>,
    pub max_stat: f64,
    /// Sorted max_ℓ |θ̂*_ℓ − θ̂_ℓ| over replicates.
    pub max_deviations: Vec<f64>,
}

impl GlobalBootstrap {
    pub fn decide(&self, alpha: f64) -> Result<GlobalTestResult> {
        check_alpha(alpha)?;
        let critical_value = empirical_quantile(&self.max_deviations, 1.0 - alpha)?;
        Ok(GlobalTestResult {
            estimates: self.estimates.clone(),
            max_stat: self.max_stat,
            critical_value,
            reject: self.max_stat > critical_value,
            alpha,
            replicates: self.max_deviations.len(),
        })
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn require_rows(m: &Matrix, needed: usize) -> Result<()> {
    if m.nrows() < needed {
        return Err(HlError::SampleTooSmall { needed, got: m.nrows() });
    }
    if m.ncols() == 0 {
        return Err(HlError::DimensionMismatch("data matrix has no columns".into()));
    }
    if let Some((i, j)) = m.find_non_finite() {
        return Err(HlError::NonFiniteInput { index: j * m.nrows() + i, value: m.get(i, j) });
    }
    Ok(())
}

fn check_same_dim(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.ncols() != y.ncols() {
        return Err(HlError::DimensionMismatch(format!("x has {} columns but y has {}", x.ncols(), y.ncols())));
    }
    Ok(())
}

fn into_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Bootstrap of max_ℓ |θ̂*_ℓ − θ̂_ℓ| with one shared weight draw per replicate.
pub fn global_bootstrap_one_sample(x: &Matrix, cfg: &BootstrapConfig, conv: MedianConvention) -> Result<GlobalBootstrap> {
    require_rows(x, 4)?;
    if cfg.replicates == 0 {
        return Err(HlError::InvalidParameter("bootstrap replicates must be at least 1".into()));
    }
    let min = cfg.min_subsample.max(2);
    let columns: Vec<SortedIndex> = x.columns().map(SortedIndex::new).collect();
    let estimates: Vec<f64> = columns.iter().map(|c| hl_sorted(c.ascending(), conv)).collect();
    let n = x.nrows();
    let max_deviations = (0..cfg.replicates)
        .into_par_iter()
        .map_init(Vec::new, |buf, b| {
            let mut rng = substream(cfg.seed, &[tag::GLOBAL_REPLICATE, b as u64]);
            let draw = draw_admissible(n, min, cfg.max_redraws, b, &mut rng)?;
            let mut worst = 0.0f64;
            for (col, &est) in columns.iter().zip(&estimates) {
                col.gather(&draw, buf);
                worst = worst.max((hl_sorted(buf, conv) - est).abs());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GlobalBootstrap { max_stat: max_abs(&estimates), estimates, max_deviations: into_sorted(max_deviations) })
}

/// Two-sample analogue: one shared pair of draws (x side, y side) per
/// replicate.
pub fn global_bootstrap_two_sample(
    x: &Matrix,
    y: &Matrix,
    cfg: &BootstrapConfig,
    conv: MedianConvention,
) -> Result<GlobalBootstrap> {
    require_rows(x, 4)?;
    require_rows(y, 4)?;
    check_same_dim(x, y)?;
    if cfg.replicates == 0 {
        return Err(HlError::InvalidParameter("bootstrap replicates must be at least 1".into()));
    }
    let min = cfg.min_subsample.max(1);
    let xs: Vec<SortedIndex> = x.columns().map(SortedIndex::new).collect();
    let ys: Vec<SortedIndex> = y.columns().map(SortedIndex::new).collect();
    let estimates: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(cx, cy)| {
            let desc: Vec<f64> = cy.ascending().iter().rev().copied().collect();
            hl_diff_sorted(cx.ascending(), &desc, conv)
        })
        .collect();
    let (n, m) = (x.nrows(), y.nrows());
    let max_deviations = (0..cfg.replicates)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(bx, by), b| {
                let mut rng = substream(cfg.seed, &[tag::GLOBAL_REPLICATE, b as u64]);
                let dx = draw_admissible(n, min, cfg.max_redraws, b, &mut rng)?;
                let dy = draw_admissible(m, min, cfg.max_redraws, b, &mut rng)?;
                let mut worst = 0.0f64;
                for ((cx, cy), &est) in xs.iter().zip(&ys).zip(&estimates) {
                    cx.gather(&dx, bx);
                    cy.gather_desc(&dy, by);
                    worst = worst.max((hl_diff_sorted(bx, by, conv) - est).abs());
                }
                Ok(worst)
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    Ok(GlobalBootstrap { max_stat: max_abs(&estimates), estimates, max_deviations: into_sorted(max_deviations) })
}

/// Tests θ_ℓ = 0 for every coordinate ℓ; rejects when max_ℓ |θ̂_ℓ| exceeds
/// the bootstrap (1 − α) quantile of max_ℓ |θ̂*_ℓ − θ̂_ℓ|.
pub fn global_test_one_sample(
    x: &Matrix,
    alpha: f64,
    cfg: &BootstrapConfig,
    conv: MedianConvention,
) -> Result<GlobalTestResult> {
    check_alpha(alpha)?;
    global_bootstrap_one_sample(x, cfg, conv)?.decide(alpha)
}

/// Tests θ_ℓ = θ°_ℓ for every coordinate via the two-sample HL shifts.
pub fn global_test_two_sample(
    x: &Matrix,
    y: &Matrix,
    alpha: f64,
    cfg: &BootstrapConfig,
    conv: MedianConvention,
) -> Result<GlobalTestResult> {
    check_alpha(alpha)?;
    global_bootstrap_two_sample(x, y, cfg, conv)?.decide(alpha)
}

/// Seed of the independent bootstrap attached to column `col`.
pub fn coordinate_seed(seed: u64, col: usize) -> u64 {
    derive_seed(seed, &[tag::COORDINATE, col as u64])
}

/// Per-coordinate bootstrap p-values for H0: θ_ℓ = 0, each coordinate with
/// its own independent weights.
pub fn coordinate_pvalues_one(
    x: &Matrix,
    cfg: &BootstrapConfig,
    conv: MedianConvention,
    mode: PValueMode,
) -> Result<Vec<f64>> {
    require_rows(x, 4)?;
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let sample = UnivariateSample::new(x.column(j).to_vec())?;
            let dist = bootstrap_distribution(&sample, &cfg.with_seed(coordinate_seed(cfg.seed, j)), conv)?;
            bootstrap_pvalue(&dist, mode)
        })
        .collect()
}

/// Two-sample per-coordinate p-values for H0: θ_ℓ = θ°_ℓ.
pub fn coordinate_pvalues_two(
    x: &Matrix,
    y: &Matrix,
    cfg: &BootstrapConfig,
    conv: MedianConvention,
    mode: PValueMode,
) -> Result<Vec<f64>> {
    require_rows(x, 4)?;
    require_rows(y, 4)?;
    check_same_dim(x, y)?;
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let pair = PairedSamples::from_vecs(x.column(j).to_vec(), y.column(j).to_vec())?;
            let dist = bootstrap_distribution(&pair, &cfg.with_seed(coordinate_seed(cfg.seed, j)), conv)?;
            bootstrap_pvalue(&dist, mode)
        })
        .collect()
}

/// Benjamini-Hochberg step-up decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTestResult {
    pub pvalues: Vec<f64>,
    /// The largest sorted p-value P₍ℓ₎ with P₍ℓ₎ ≤ αℓ/p, or 0 when none.
    pub t_bh: f64,
    /// Rejected coordinates (0-based), ascending.
    pub rejected: Vec<usize>,
    pub alpha: f64,
}

fn check_pvalues(pvalues: &[f64]) -> Result<()> {
    match pvalues.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(index) => Err(HlError::InvalidPValue { index, value: pvalues[index] }),
        None => Ok(()),
    }
}

/// Rejects every coordinate with P_ℓ ≤ t_BH, where t_BH = P₍ℓ_BH₎ and
/// ℓ_BH = max{ℓ : P₍ℓ₎ ≤ αℓ/p}.
pub fn bh_threshold(pvalues: &[f64], alpha: f64) -> Result<MultiTestResult> {
    check_alpha(alpha)?;
    check_pvalues(pvalues)?;
    let p = pvalues.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(rank, &idx)| pvalues[idx] <= alpha * (rank + 1) as f64 / p as f64)
        .map(|(_, &idx)| pvalues[idx]);
    let (t_bh, rejected) = match cutoff {
        Some(t) => (t, (0..p).filter(|&i| pvalues[i] <= t).collect()),
        None => (0.0, Vec::new()),
    };
    Ok(MultiTestResult { pvalues: pvalues.to_vec(), t_bh, rejected, alpha })
}

/// Error counts of a rejection set against the known null coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDPReport {
    /// False rejections.
    pub false_rejections: usize,
    /// Total rejections.
    pub rejections: usize,
    pub fdp: f64,
    pub tpp: f64,
    /// Set when there are no true signals, in which case TPP is 1 by convention.
    pub tpp_vacuous: bool,
}

/// FDP = V / max(R, 1) and TPP = (R − V) / |H₁| for the null set `nulls`
/// (0-based coordinates).
pub fn fdp_tpp(result: &MultiTestResult, nulls: &[usize]) -> Result<FDPReport> {
    let p = result.pvalues.len();
    let mut is_null = vec![false; p];
    for &i in nulls {
        if i >= p {
            return Err(HlError::DimensionMismatch(format!("null index {i} out of range for p = {p}")));
        }
        is_null[i] = true;
    }
    let signals = is_null.iter().filter(|&&z| !z).count();
    let r = result.rejected.len();
    let v = result.rejected.iter().filter(|&&i| is_null[i]).count();
    let tpp_vacuous = signals == 0;
    let tpp = if tpp_vacuous { 1.0 } else { (r - v) as f64 / signals as f64 };
    Ok(FDPReport { false_rejections: v, rejections: r, fdp: v as f64 / r.max(1) as f64, tpp, tpp_vacuous })
}

/// Plug-in FDP estimate p·t / max(R(t), 1), R(t) = #{ℓ : P_ℓ ≤ t}.
pub fn fdp_hat(pvalues: &[f64], t: f64) -> f64 {
    let r = pvalues.iter().filter(|&&p| p <= t).count();
    pvalues.len() as f64 * t / r.max(1) as f64
}
