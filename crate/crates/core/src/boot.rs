//! Weighted bootstrap with 2·Bernoulli(1/2) weights.
//!
//! With weights in {0, 2} the weighted HL objective is minimized by the HL
//! estimate of the subsample whose weights are nonzero, so each replicate is
//! a plain subsample estimate. Replicate `b` draws its weights from the
//! substream keyed by `(seed, b)`, which makes the distribution independent
//! of how replicates are scheduled across threads.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};
use crate::hl::{hl_diff_sorted, hl_one_sample, hl_sorted, hl_two_sample};
use crate::rng::{substream, tag, StreamRng};
use crate::sample::{MedianConvention, PairedSamples, UnivariateSample};

/// Default number of bootstrap replicates.
pub const DEFAULT_REPLICATES: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of replicates B.
    pub replicates: usize,
    /// Master seed.
    pub seed: u64,
    /// Smallest admissible subsample (per side for two-sample data).
    pub min_subsample: usize,
    /// Weight redraws allowed per replicate before giving up.
    pub max_redraws: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: DEFAULT_REPLICATES, seed: 0, min_subsample: 2, max_redraws: 100 }
    }
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, seed, ..Self::default() }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self, min_allowed: usize) -> Result<()> {
        if self.replicates == 0 {
            return Err(HlError::InvalidParameter("bootstrap replicates must be at least 1".into()));
        }
        if self.min_subsample < min_allowed {
            return Err(HlError::InvalidParameter(format!(
                "min_subsample must be at least {min_allowed}, got {}",
                self.min_subsample
            )));
        }
        Ok(())
    }
}

/// Bootstrap weights, each exactly 0 or 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDraw {
    weights: Vec<u8>,
}

impl WeightDraw {
    /// Builds a draw from explicit weights; every entry must be 0 or 2.
    pub fn from_weights(weights: Vec<u8>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|&w| w != 0 && w != 2) {
            return Err(HlError::InvalidParameter(format!("weight {} at index {i} is not 0 or 2", weights[i])));
        }
        Ok(Self { weights })
    }

    /// The draw selecting exactly the given (0-based) indices out of `n`.
    pub fn from_subset(n: usize, subset: &[usize]) -> Result<Self> {
        let mut weights = vec![0u8; n];
        for &i in subset {
            if i >= n {
                return Err(HlError::DimensionMismatch(format!("subset index {i} out of range for n = {n}")));
            }
            weights[i] = 2;
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn is_selected(&self, i: usize) -> bool {
        self.weights[i] != 0
    }

    /// Size of the subset S of nonzero weights.
    pub fn subset_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0).count()
    }

    /// Indices with nonzero weight, ascending.
    pub fn subset(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.is_selected(i)).collect()
    }
}

/// Draws n i.i.d. weights from 2·Bernoulli(1/2), one random bit per weight.
pub fn gen_weight_draw<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> WeightDraw {
    let mut weights = Vec::with_capacity(n);
    while weights.len() < n {
        let bits = rng.next_u64();
        let take = (n - weights.len()).min(64);
        weights.extend((0..take).map(|b| (((bits >> b) & 1) as u8) << 1));
    }
    WeightDraw { weights }
}

/// Subsample HL estimate θ̂* over the observations with nonzero weight.
pub fn bootstrap_replicate_one(
    x: &UnivariateSample,
    draw: &WeightDraw,
    conv: MedianConvention,
) -> Result<f64> {
    check_draw_len(draw, x.len())?;
    let sub: Vec<f64> = x.values().iter().enumerate().filter(|(i, _)| draw.is_selected(*i)).map(|(_, &v)| v).collect();
    if sub.len() < 2 {
        return Err(HlError::DegenerateSubsample { size: sub.len() });
    }
    Ok(hl_one_sample(&UnivariateSample::new(sub)?, conv)?.value)
}

/// Two-sample subsample estimate Θ̂* from independent draws on each side.
pub fn bootstrap_replicate_two(
    s: &PairedSamples,
    draw_x: &WeightDraw,
    draw_y: &WeightDraw,
    conv: MedianConvention,
) -> Result<f64> {
    check_draw_len(draw_x, s.x.len())?;
    check_draw_len(draw_y, s.y.len())?;
    let pick = |sample: &UnivariateSample, draw: &WeightDraw| -> Vec<f64> {
        sample.values().iter().enumerate().filter(|(i, _)| draw.is_selected(*i)).map(|(_, &v)| v).collect()
    };
    let (sx, sy) = (pick(&s.x, draw_x), pick(&s.y, draw_y));
    if sx.is_empty() || sy.is_empty() {
        return Err(HlError::DegenerateSubsample { size: sx.len().min(sy.len()) });
    }
    let sub = PairedSamples::from_vecs(sx, sy)?;
    Ok(hl_two_sample(&sub, conv)?.value)
}

fn check_draw_len(draw: &WeightDraw, n: usize) -> Result<()> {
    if draw.len() != n {
        return Err(HlError::DimensionMismatch(format!("weight draw has length {}, sample has {n}", draw.len())));
    }
    Ok(())
}

/// Draws weights until at least `min` of them are nonzero.
pub(crate) fn draw_admissible(
    n: usize,
    min: usize,
    max_redraws: usize,
    replicate: usize,
    rng: &mut StreamRng,
) -> Result<WeightDraw> {
    for _ in 0..=max_redraws {
        let draw = gen_weight_draw(n, rng);
        if draw.subset_size() >= min {
            return Ok(draw);
        }
    }
    Err(HlError::TooManyRedraws { replicate, max_redraws })
}

/// Ascending values paired with their original positions, so that a weight
/// draw over original indices yields an already sorted subsample.
#[derive(Debug, Clone)]
pub(crate) struct SortedIndex {
    values: Vec<f64>,
    origin: Vec<usize>,
}

impl SortedIndex {
    pub(crate) fn new(values: &[f64]) -> Self {
        let mut origin: Vec<usize> = (0..values.len()).collect();
        origin.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        Self { values: origin.iter().map(|&i| values[i]).collect(), origin }
    }

    pub(crate) fn ascending(&self) -> &[f64] {
        &self.values
    }

    /// Selected values in ascending order, written into `out`.
    pub(crate) fn gather(&self, draw: &WeightDraw, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.origin.iter().zip(&self.values).filter(|(&o, _)| draw.is_selected(o)).map(|(_, &v)| v));
    }

    /// Selected values in descending order.
    pub(crate) fn gather_desc(&self, draw: &WeightDraw, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.origin.iter().zip(&self.values).rev().filter(|(&o, _)| draw.is_selected(o)).map(|(_, &v)| v),
        );
    }
}

/// Data that can be resampled by the weighted bootstrap.
pub trait BootstrapData: Sync {
    /// Point estimate on the full data.
    fn estimate(&self, conv: MedianConvention) -> Result<f64>;

    /// Bootstrap estimates for every replicate, in replicate order.
    fn replicates(&self, cfg: &BootstrapConfig, conv: MedianConvention) -> Result<Vec<f64>>;
}

impl BootstrapData for UnivariateSample {
    fn estimate(&self, conv: MedianConvention) -> Result<f64> {
        Ok(hl_one_sample(self, conv)?.value)
    }

    fn replicates(&self, cfg: &BootstrapConfig, conv: MedianConvention) -> Result<Vec<f64>> {
        cfg.validate(2)?;
        self.require(cfg.min_subsample.max(2))?;
        let index = SortedIndex::new(self.values());
        let n = self.len();
        (0..cfg.replicates)
            .into_par_iter()
            .map_init(Vec::new, |buf, b| {
                let mut rng = substream(cfg.seed, &[tag::BOOT_REPLICATE, b as u64]);
                let draw = draw_admissible(n, cfg.min_subsample, cfg.max_redraws, b, &mut rng)?;
                index.gather(&draw, buf);
                Ok(hl_sorted(buf, conv))
            })
            .collect()
    }
}

impl BootstrapData for PairedSamples {
    fn estimate(&self, conv: MedianConvention) -> Result<f64> {
        Ok(hl_two_sample(self, conv)?.value)
    }

    fn replicates(&self, cfg: &BootstrapConfig, conv: MedianConvention) -> Result<Vec<f64>> {
        cfg.validate(1)?;
        self.x.require(cfg.min_subsample)?;
        self.y.require(cfg.min_subsample)?;
        let ix = SortedIndex::new(self.x.values());
        let iy = SortedIndex::new(self.y.values());
        let (n, m) = (self.x.len(), self.y.len());
        (0..cfg.replicates)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(bx, by), b| {
                    let mut rng = substream(cfg.seed, &[tag::BOOT_REPLICATE, b as u64]);
                    let dx = draw_admissible(n, cfg.min_subsample, cfg.max_redraws, b, &mut rng)?;
                    let dy = draw_admissible(m, cfg.min_subsample, cfg.max_redraws, b, &mut rng)?;
                    ix.gather(&dx, bx);
                    iy.gather_desc(&dy, by);
                    Ok(hl_diff_sorted(bx, by, conv))
                },
            )
            .collect()
    }
}

/// Empirical law of |θ̂* − θ̂| over B replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDistribution {
    /// The full-data estimate the deviations are measured from.
    pub center: f64,
    deviations: Vec<f64>,
    pub seed: u64,
}

impl BootstrapDistribution {
    /// Builds a distribution from raw (unsorted) absolute deviations.
    pub fn from_deviations(center: f64, mut deviations: Vec<f64>, seed: u64) -> Result<Self> {
        if let Some((index, &value)) = deviations.iter().enumerate().find(|(_, d)| !d.is_finite() || **d < 0.0) {
            return Err(HlError::InvalidParameter(format!("deviation {value} at index {index} is not a finite nonnegative number")));
        }
        deviations.sort_unstable_by(f64::total_cmp);
        Ok(Self { center, deviations, seed })
    }

    /// Deviations sorted ascending.
    pub fn deviations(&self) -> &[f64] {
        &self.deviations
    }

    /// Number of replicates B.
    pub fn replicates(&self) -> usize {
        self.deviations.len()
    }
}

/// Runs the bootstrap and collects the sorted absolute deviations around
/// the full-data estimate.
pub fn bootstrap_distribution<D: BootstrapData + ?Sized>(
    data: &D,
    cfg: &BootstrapConfig,
    conv: MedianConvention,
) -> Result<BootstrapDistribution> {
    let center = data.estimate(conv)?;
    let deviations = data.replicates(cfg, conv)?.into_iter().map(|t| (t - center).abs()).collect();
    BootstrapDistribution::from_deviations(center, deviations, cfg.seed)
}

/// One-based rank of the inf-quantile at `level` among `count` sorted values.
pub(crate) fn quantile_rank(count: usize, level: f64) -> usize {
    // Shave off representation error so that e.g. 100 × 0.95 maps to 95.
    let raw = count as f64 * level;
    let rank = (raw - raw.abs() * 1e-12).ceil() as usize;
    rank.clamp(1, count)
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(HlError::InvalidParameter(format!("quantile level {level} outside (0, 1]")))
    }
}

/// Empirical quantile over sorted values: the smallest value z with at
/// least a `level` fraction of the values at or below z.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> Result<f64> {
    check_level(level)?;
    if sorted.is_empty() {
        return Err(HlError::EmptyDistribution);
    }
    Ok(sorted[quantile_rank(sorted.len(), level) - 1])
}

/// The ⌈B·level⌉-th smallest deviation.
pub fn bootstrap_quantile(dist: &BootstrapDistribution, level: f64) -> Result<f64> {
    empirical_quantile(&dist.deviations, level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage 1 − α.
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) * 0.5
    }
}

/// Symmetric interval θ̂ ± q*, with q* the (1 − α) bootstrap quantile of
/// |θ̂* − θ̂|.
pub fn confidence_interval<D: BootstrapData + ?Sized>(
    data: &D,
    cfg: &BootstrapConfig,
    alpha: f64,
    conv: MedianConvention,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let dist = bootstrap_distribution(data, cfg, conv)?;
    interval_from(&dist, alpha)
}

/// Interval from an existing distribution.
pub fn interval_from(dist: &BootstrapDistribution, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let q = bootstrap_quantile(dist, 1.0 - alpha)?;
    Ok(ConfidenceInterval { center: dist.center, lower: dist.center - q, upper: dist.center + q, level: 1.0 - alpha })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HlError::InvalidParameter(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// How exceedances are turned into a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMode {
    /// (1 + #{deviation ≥ |center|}) / (B + 1); never zero.
    #[default]
    Smoothed,
    /// #{deviation > |center|} / B.
    Raw,
}

impl std::str::FromStr for PValueMode {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smoothed" => Ok(Self::Smoothed),
            "raw" => Ok(Self::Raw),
            other => Err(HlError::InvalidParameter(format!("unknown p-value mode `{other}`"))),
        }
    }
}

/// Bootstrap p-value for the null that the location (shift) is zero.
pub fn bootstrap_pvalue(dist: &BootstrapDistribution, mode: PValueMode) -> Result<f64> {
    let b = dist.deviations.len();
    if b == 0 {
        return Err(HlError::EmptyDistribution);
    }
    let t = dist.center.abs();
    let p = match mode {
        PValueMode::Raw => {
            let exceed = b - dist.deviations.partition_point(|&d| d <= t);
            exceed as f64 / b as f64
        }
        PValueMode::Smoothed => {
            let exceed = b - dist.deviations.partition_point(|&d| d < t);
            (1 + exceed) as f64 / (b + 1) as f64
        }
    };
    Ok(p)
}
