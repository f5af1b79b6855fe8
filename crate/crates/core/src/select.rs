//! Order-statistic selection over implicit pair sets.
//!
//! Walsh averages of a sorted vector and differences between two sorted
//! vectors both form a matrix whose entries are nondecreasing along rows and
//! down columns. The k-th smallest entry is found by repeatedly drawing a
//! pivot among the remaining candidates, counting the entries below and at
//! the pivot with a single monotone sweep, and shrinking the per-row candidate
//! windows. Expected cost is O(n log n) on top of the initial sort; nothing
//! quadratic is ever materialized.

/// A matrix with nondecreasing rows and columns, given implicitly.
///
/// Row `i` holds columns `start(i)..end()`. `start` must be nondecreasing in
/// `i`, and `value(i, j)` must be nondecreasing in both `i` and `j`.
pub(crate) trait MonotoneGrid {
    fn rows(&self) -> usize;
    fn start(&self, row: usize) -> usize;
    fn end(&self) -> usize;
    fn value(&self, row: usize, col: usize) -> f64;

    fn count(&self) -> u64 {
        (0..self.rows()).map(|i| (self.end() - self.start(i).min(self.end())) as u64).sum()
    }
}

/// Walsh averages `(a[i] + a[j]) / 2`, `i < j`, of an ascending slice.
pub(crate) struct WalshGrid<'a> {
    sorted: &'a [f64],
}

impl<'a> WalshGrid<'a> {
    pub(crate) fn new(sorted: &'a [f64]) -> Self {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        Self { sorted }
    }
}

impl MonotoneGrid for WalshGrid<'_> {
    #[inline]
    fn rows(&self) -> usize {
        self.sorted.len()
    }

    #[inline]
    fn start(&self, row: usize) -> usize {
        row + 1
    }

    #[inline]
    fn end(&self) -> usize {
        self.sorted.len()
    }

    #[inline]
    fn value(&self, row: usize, col: usize) -> f64 {
        walsh_average(self.sorted[row], self.sorted[col])
    }
}

/// Differences `x[i] - y[j]` with `x` ascending and `y_desc` descending.
pub(crate) struct DiffGrid<'a> {
    x: &'a [f64],
    y_desc: &'a [f64],
}

impl<'a> DiffGrid<'a> {
    pub(crate) fn new(x: &'a [f64], y_desc: &'a [f64]) -> Self {
        debug_assert!(x.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(y_desc.windows(2).all(|w| w[0] >= w[1]));
        Self { x, y_desc }
    }
}

impl MonotoneGrid for DiffGrid<'_> {
    #[inline]
    fn rows(&self) -> usize {
        self.x.len()
    }

    #[inline]
    fn start(&self, _row: usize) -> usize {
        0
    }

    #[inline]
    fn end(&self) -> usize {
        self.y_desc.len()
    }

    #[inline]
    fn value(&self, row: usize, col: usize) -> f64 {
        self.x[row] - self.y_desc[col]
    }
}

/// The Walsh average of two observations.
#[inline]
pub fn walsh_average(a: f64, b: f64) -> f64 {
    (a + b) * 0.5
}

/// For every row, the first column `>= start(row)` whose value fails
/// `keep(value)`. `keep` must be a downward-closed predicate (true on a
/// prefix of every row), which holds for `<= t` and `< t`.
fn row_boundaries<G: MonotoneGrid>(grid: &G, keep: impl Fn(f64) -> bool, out: &mut Vec<usize>) {
    out.clear();
    let end = grid.end();
    let mut p = end;
    for i in 0..grid.rows() {
        let s = grid.start(i).min(end);
        if p < s {
            p = s;
        }
        while p > s && !keep(grid.value(i, p - 1)) {
            p -= 1;
        }
        out.push(p);
    }
}

/// Number of entries `<= t`.
pub(crate) fn count_le<G: MonotoneGrid>(grid: &G, t: f64) -> u64 {
    let end = grid.end();
    let mut p = end;
    let mut total = 0u64;
    for i in 0..grid.rows() {
        let s = grid.start(i).min(end);
        if p < s {
            p = s;
        }
        while p > s && grid.value(i, p - 1) > t {
            p -= 1;
        }
        total += (p - s) as u64;
    }
    total
}

/// Smallest entry strictly greater than `t`, if any.
pub(crate) fn next_above<G: MonotoneGrid>(grid: &G, t: f64) -> Option<f64> {
    let mut bounds = Vec::with_capacity(grid.rows());
    row_boundaries(grid, |v| v <= t, &mut bounds);
    let end = grid.end();
    bounds
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b < end)
        .map(|(i, &b)| grid.value(i, b))
        .min_by(f64::total_cmp)
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, bound: u64) -> u64 {
        ((self.next() as u128 * bound as u128) >> 64) as u64
    }
}

/// The k-th smallest entry (1-based). The caller guarantees
/// `1 <= k <= grid.count()`.
pub(crate) fn select_kth<G: MonotoneGrid>(grid: &G, k: u64) -> f64 {
    let rows = grid.rows();
    let end = grid.end();
    debug_assert!(k >= 1 && k <= grid.count());

    let mut lo: Vec<usize> = (0..rows).map(|i| grid.start(i).min(end)).collect();
    let mut hi: Vec<usize> = vec![end; rows];
    let mut lt_bounds = Vec::with_capacity(rows);
    let mut le_bounds = Vec::with_capacity(rows);
    // Entries known to lie below every remaining candidate.
    let mut below = 0u64;
    let cutoff = (rows as u64).max(64);
    // The result does not depend on the pivot sequence; a fixed seed keeps
    // the running time reproducible.
    let mut rng = SplitMix(0x5eed ^ k ^ ((rows as u64) << 32));

    loop {
        let remaining: u64 = lo.iter().zip(&hi).map(|(&l, &h)| (h - l) as u64).sum();
        debug_assert!(k > below && k - below <= remaining);

        if remaining <= cutoff {
            let mut values = Vec::with_capacity(remaining as usize);
            for i in 0..rows {
                values.extend((lo[i]..hi[i]).map(|j| grid.value(i, j)));
            }
            let idx = (k - below - 1) as usize;
            let (_, v, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
            return *v;
        }

        let mut r = rng.below(remaining);
        let mut pivot = f64::NAN;
        for i in 0..rows {
            let w = (hi[i] - lo[i]) as u64;
            if r < w {
                pivot = grid.value(i, lo[i] + r as usize);
                break;
            }
            r -= w;
        }

        row_boundaries(grid, |v| v < pivot, &mut lt_bounds);
        row_boundaries(grid, |v| v <= pivot, &mut le_bounds);
        let mut n_lt = below;
        let mut n_le = below;
        for i in 0..rows {
            lt_bounds[i] = lt_bounds[i].clamp(lo[i], hi[i]);
            le_bounds[i] = le_bounds[i].clamp(lo[i], hi[i]);
            n_lt += (lt_bounds[i] - lo[i]) as u64;
            n_le += (le_bounds[i] - lo[i]) as u64;
        }

        if k <= n_lt {
            hi.copy_from_slice(&lt_bounds);
        } else if k <= n_le {
            return pivot;
        } else {
            below = n_le;
            lo.copy_from_slice(&le_bounds);
        }
    }
}

/// The k-th and (k+1)-th smallest entries. The second is `None` when
/// `k == grid.count()`.
pub(crate) fn select_kth_and_next<G: MonotoneGrid>(grid: &G, k: u64) -> (f64, Option<f64>) {
    let v = select_kth(grid, k);
    if k >= grid.count() {
        return (v, None);
    }
    if count_le(grid, v) > k {
        (v, Some(v))
    } else {
        (v, next_above(grid, v))
    }
}
