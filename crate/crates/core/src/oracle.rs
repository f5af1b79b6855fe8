//! Full-enumeration reference implementations.
//!
//! These materialize every pair and sort, so they are quadratic in memory
//! and time. They exist to cross-check the selection kernels and are kept
//! free of any shared code with them.

use crate::sample::MedianConvention;

/// All Walsh averages `(x_i + x_j) / 2`, `i < j`, sorted ascending.
pub fn walsh_averages(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * x.len().saturating_sub(1) / 2);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            out.push((x[i] + x[j]) / 2.0);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// All differences `x_i - y_j`, sorted ascending.
pub fn differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().flat_map(|a| y.iter().map(move |b| a - b)).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Median of an already sorted vector under `conv`.
pub fn median_of_sorted(sorted: &[f64], conv: MedianConvention) -> f64 {
    let k = sorted.len();
    match conv {
        MedianConvention::LowerInf => sorted[k.div_ceil(2) - 1],
        MedianConvention::Midpoint if k % 2 == 1 => sorted[k / 2],
        MedianConvention::Midpoint => (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0,
    }
}

pub fn hl_one_sample(x: &[f64], conv: MedianConvention) -> f64 {
    median_of_sorted(&walsh_averages(x), conv)
}

pub fn hl_two_sample(x: &[f64], y: &[f64], conv: MedianConvention) -> f64 {
    median_of_sorted(&differences(x, y), conv)
}

/// Fraction of Walsh averages `<= t`.
pub fn u_process(x: &[f64], t: f64) -> f64 {
    let all = walsh_averages(x);
    all.iter().filter(|&&v| v <= t).count() as f64 / all.len() as f64
}
