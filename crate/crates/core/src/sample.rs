use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};

/// A vector of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSample {
    values: Vec<f64>,
}

impl UnivariateSample {
    /// Wraps `values`, rejecting empty input and non-finite entries.
    ///
    /// Operations that need more than one observation (Walsh averages,
    /// bootstrap) check their own minimum size.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(HlError::SampleTooSmall { needed: 1, got: 0 });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(HlError::NonFiniteInput { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            Err(HlError::SampleTooSmall { needed, got: self.len() })
        } else {
            Ok(())
        }
    }

    /// Values sorted ascending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_unstable_by(f64::total_cmp);
        v
    }
}

impl TryFrom<Vec<f64>> for UnivariateSample {
    type Error = HlError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Two independent samples `x` (size n) and `y` (size m).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub x: UnivariateSample,
    pub y: UnivariateSample,
}

impl PairedSamples {
    pub fn new(x: UnivariateSample, y: UnivariateSample) -> Self {
        Self { x, y }
    }

    pub fn from_vecs(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Ok(Self { x: UnivariateSample::new(x)?, y: UnivariateSample::new(y)? })
    }
}

/// How the median of an even number of values is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MedianConvention {
    /// Average of the two middle order statistics when the count is even.
    #[default]
    Midpoint,
    /// Smallest value with at least half of the values at or below it,
    /// i.e. the ⌈K/2⌉-th order statistic.
    LowerInf,
}

impl MedianConvention {
    /// One-based ranks of the order statistics that define the median of
    /// `count` values. The second rank equals the first unless an average
    /// is needed.
    pub fn ranks(self, count: u64) -> (u64, u64) {
        debug_assert!(count > 0);
        let lower = count.div_ceil(2);
        match self {
            MedianConvention::Midpoint if count.is_multiple_of(2) => (lower, lower + 1),
            _ => (lower, lower),
        }
    }
}

impl std::str::FromStr for MedianConvention {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midpoint" => Ok(Self::Midpoint),
            "lower-inf" | "lowerinf" | "lower_inf" => Ok(Self::LowerInf),
            other => Err(HlError::InvalidParameter(format!("unknown median convention `{other}`"))),
        }
    }
}

/// A Hodges-Lehmann point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HLEstimate {
    pub value: f64,
    /// Number of Walsh averages (one-sample) or differences (two-sample).
    pub pair_count: u64,
    pub convention: MedianConvention,
}
