//! Hodges-Lehmann point estimators and related order statistics.

use rand::seq::SliceRandom;

use crate::error::{HlError, Result};
use crate::rng::{substream, tag};
use crate::sample::{HLEstimate, MedianConvention, PairedSamples, UnivariateSample};
use crate::select::{self, DiffGrid, MonotoneGrid, WalshGrid};

fn walsh_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

fn grid_median<G: MonotoneGrid>(grid: &G, conv: MedianConvention) -> f64 {
    let (lo, hi) = conv.ranks(grid.count());
    if lo == hi {
        select::select_kth(grid, lo)
    } else {
        let (a, b) = select::select_kth_and_next(grid, lo);
        let b = b.expect("even count has a successor");
        (a + b) * 0.5
    }
}

/// Median of the Walsh averages of an ascending slice with at least two
/// entries. Used directly by the bootstrap, whose subsamples of a sorted
/// column are already sorted.
pub fn hl_sorted(sorted: &[f64], conv: MedianConvention) -> f64 {
    debug_assert!(sorted.len() >= 2);
    grid_median(&WalshGrid::new(sorted), conv)
}

/// Median of the differences `x[i] - y[j]` for ascending `x` and descending
/// `y_desc`, both nonempty.
pub fn hl_diff_sorted(x: &[f64], y_desc: &[f64], conv: MedianConvention) -> f64 {
    debug_assert!(!x.is_empty() && !y_desc.is_empty());
    grid_median(&DiffGrid::new(x, y_desc), conv)
}

/// One-sample HL estimate: the median of all n(n-1)/2 Walsh averages
/// `(X_i + X_j) / 2`, `i < j`.
pub fn hl_one_sample(x: &UnivariateSample, conv: MedianConvention) -> Result<HLEstimate> {
    x.require(2)?;
    let sorted = x.sorted();
    Ok(HLEstimate {
        value: hl_sorted(&sorted, conv),
        pair_count: walsh_count(x.len()),
        convention: conv,
    })
}

fn sorted_desc(y: &UnivariateSample) -> Vec<f64> {
    let mut v = y.values().to_vec();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

/// Two-sample HL estimate of the shift: the median of all n·m differences
/// `X_i - Y_j`.
pub fn hl_two_sample(s: &PairedSamples, conv: MedianConvention) -> Result<HLEstimate> {
    let x = s.x.sorted();
    let y = sorted_desc(&s.y);
    Ok(HLEstimate {
        value: hl_diff_sorted(&x, &y, conv),
        pair_count: (x.len() * y.len()) as u64,
        convention: conv,
    })
}

/// The k-th smallest Walsh average (1-based) without enumerating all pairs.
pub fn select_walsh_kth(x: &UnivariateSample, k: u64) -> Result<f64> {
    let count = walsh_count(x.len());
    if k == 0 || k > count {
        return Err(HlError::RankOutOfRange { k, count });
    }
    let sorted = x.sorted();
    Ok(select::select_kth(&WalshGrid::new(&sorted), k))
}

/// The k-th smallest difference `X_i - Y_j` (1-based).
pub fn select_diff_kth(s: &PairedSamples, k: u64) -> Result<f64> {
    let count = (s.x.len() * s.y.len()) as u64;
    if k == 0 || k > count {
        return Err(HlError::RankOutOfRange { k, count });
    }
    let x = s.x.sorted();
    let y = sorted_desc(&s.y);
    Ok(select::select_kth(&DiffGrid::new(&x, &y), k))
}

/// The U-process at `t`: the fraction of Walsh averages `<= t`.
pub fn u_process_eval(x: &UnivariateSample, t: f64) -> Result<f64> {
    x.require(2)?;
    let sorted = x.sorted();
    let grid = WalshGrid::new(&sorted);
    Ok(select::count_le(&grid, t) as f64 / grid.count() as f64)
}

/// Median of an ascending slice under `conv`.
pub fn median_sorted(sorted: &[f64], conv: MedianConvention) -> f64 {
    let (lo, hi) = conv.ranks(sorted.len() as u64);
    let (a, b) = (sorted[lo as usize - 1], sorted[hi as usize - 1]);
    if lo == hi {
        a
    } else {
        (a + b) * 0.5
    }
}

/// Median of the raw observations.
pub fn sample_median(x: &UnivariateSample, conv: MedianConvention) -> f64 {
    median_sorted(&x.sorted(), conv)
}

/// Cheap approximation of the one-sample HL estimate.
///
/// Each of `num_permutations` random permutations pairs the observations
/// off into ⌊n/2⌋ disjoint pairs (an odd leftover is dropped) and takes the
/// midpoint median of the pair averages; the result is the mean over
/// permutations. Linear cost per permutation apart from the median.
pub fn nonoverlap_pair_estimate(
    x: &UnivariateSample,
    num_permutations: usize,
    seed: u64,
) -> Result<f64> {
    x.require(4)?;
    if num_permutations == 0 {
        return Err(HlError::InvalidParameter("num_permutations must be at least 1".into()));
    }
    let mut rng = substream(seed, &[tag::PERMUTATION]);
    let mut order: Vec<f64> = x.values().to_vec();
    let mut averages = Vec::with_capacity(order.len() / 2);
    let mut total = 0.0;
    for _ in 0..num_permutations {
        order.shuffle(&mut rng);
        averages.clear();
        averages.extend(order.chunks_exact(2).map(|p| select::walsh_average(p[0], p[1])));
        averages.sort_unstable_by(f64::total_cmp);
        total += median_sorted(&averages, MedianConvention::Midpoint);
    }
    Ok(total / num_permutations as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> UnivariateSample {
        UnivariateSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn three_points() {
        let est = hl_one_sample(&s(&[1.0, 2.0, 3.0]), MedianConvention::Midpoint).unwrap();
        assert_eq!(est.value, 2.0);
        assert_eq!(est.pair_count, 3);
    }

    #[test]
    fn constant_sample() {
        let est = hl_one_sample(&s(&[5.0; 4]), MedianConvention::Midpoint).unwrap();
        assert_eq!(est.value, 5.0);
    }

    #[test]
    fn conventions_differ_on_even_pair_count() {
        let x = s(&[0.0, 1.0, 2.0, 4.0]);
        assert_eq!(hl_one_sample(&x, MedianConvention::Midpoint).unwrap().value, 1.75);
        assert_eq!(hl_one_sample(&x, MedianConvention::LowerInf).unwrap().value, 1.5);
    }

    #[test]
    fn too_small() {
        let err = hl_one_sample(&s(&[1.0]), MedianConvention::Midpoint).unwrap_err();
        assert_eq!(err, HlError::SampleTooSmall { needed: 2, got: 1 });
        assert!(u_process_eval(&s(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn two_sample_examples() {
        let p = PairedSamples::from_vecs(vec![3.0, 5.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(hl_two_sample(&p, MedianConvention::Midpoint).unwrap().value, 2.5);
        assert_eq!(hl_two_sample(&p, MedianConvention::LowerInf).unwrap().value, 2.0);
        assert_eq!(hl_two_sample(&p, MedianConvention::Midpoint).unwrap().pair_count, 4);

        let same = PairedSamples::from_vecs(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        for conv in [MedianConvention::Midpoint, MedianConvention::LowerInf] {
            assert_eq!(hl_two_sample(&same, conv).unwrap().value, 0.0);
        }

        let shifted = PairedSamples::from_vecs(vec![13.0, 15.0], vec![4.0, 5.0]).unwrap();
        assert_eq!(hl_two_sample(&shifted, MedianConvention::Midpoint).unwrap().value, 9.5);
    }

    #[test]
    fn selection_examples() {
        assert_eq!(select_walsh_kth(&s(&[1.0, 2.0, 3.0]), 1).unwrap(), 1.5);
        assert_eq!(select_walsh_kth(&s(&[4.0, -1.0, 9.0, 2.0]), 1).unwrap(), 0.5);
        let p = PairedSamples::from_vecs(vec![3.0, 5.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(select_diff_kth(&p, 2).unwrap(), 2.0);
        assert_eq!(select_diff_kth(&p, 1).unwrap(), 3.0 - 2.0);
    }

    #[test]
    fn rank_out_of_range() {
        let x = s(&[1.0, 2.0, 3.0]);
        assert_eq!(select_walsh_kth(&x, 0).unwrap_err(), HlError::RankOutOfRange { k: 0, count: 3 });
        assert!(select_walsh_kth(&x, 4).is_err());
        let p = PairedSamples::from_vecs(vec![3.0, 5.0], vec![1.0, 2.0]).unwrap();
        assert!(select_diff_kth(&p, 5).is_err());
        // A single observation has no Walsh pair at all.
        assert!(select_walsh_kth(&s(&[1.0]), 1).is_err());
    }

    #[test]
    fn u_process_extremes() {
        let x = s(&[0.0, 1.0, 2.0, 4.0]);
        assert_eq!(u_process_eval(&x, 3.0).unwrap(), 1.0);
        assert_eq!(u_process_eval(&x, 100.0).unwrap(), 1.0);
        assert_eq!(u_process_eval(&x, 0.49).unwrap(), 0.0);
        assert_eq!(u_process_eval(&x, 1.5).unwrap(), 0.5);
        assert_eq!(u_process_eval(&x, 1.49).unwrap(), 2.0 / 6.0);
    }

    #[test]
    fn sample_median_conventions() {
        assert_eq!(sample_median(&s(&[1.0, 2.0, 3.0]), MedianConvention::Midpoint), 2.0);
        assert_eq!(sample_median(&s(&[4.0, 1.0, 3.0, 2.0]), MedianConvention::Midpoint), 2.5);
        assert_eq!(sample_median(&s(&[4.0, 1.0, 3.0, 2.0]), MedianConvention::LowerInf), 2.0);
        assert_eq!(sample_median(&s(&[7.0]), MedianConvention::Midpoint), 7.0);
    }

    #[test]
    fn nonoverlap_constant_and_shift() {
        let c = s(&[2.5; 9]);
        assert_eq!(nonoverlap_pair_estimate(&c, 5, 1).unwrap(), 2.5);

        let base: Vec<f64> = (0..21).map(|i| ((i * 7) % 13) as f64).collect();
        let a = nonoverlap_pair_estimate(&s(&base), 4, 9).unwrap();
        let shifted: Vec<f64> = base.iter().map(|v| v + 8.0).collect();
        let b = nonoverlap_pair_estimate(&s(&shifted), 4, 9).unwrap();
        assert_eq!(b, a + 8.0);
    }

    #[test]
    fn nonoverlap_rejects_small_input() {
        assert!(nonoverlap_pair_estimate(&s(&[1.0, 2.0, 3.0]), 5, 1).is_err());
        assert!(nonoverlap_pair_estimate(&s(&[1.0, 2.0, 3.0, 4.0]), 0, 1).is_err());
    }
}
