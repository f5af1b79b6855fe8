//! Comparison methods: the sample-mean global test calibrated by Gaussian
//! draws, coordinatewise Student t p-values, and the Monte-Carlo efficiency
//! ratio between the HL estimator and the sample median.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::boot::check_alpha;
use crate::error::{HlError, Result};
use crate::hl::{hl_sorted, median_sorted};
use crate::matrix::Matrix;
use crate::multitest::{GlobalBootstrap, GlobalTestResult};
use crate::rng::{substream, tag};
use crate::sample::MedianConvention;

fn column_means(m: &Matrix) -> Vec<f64> {
    m.columns().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

fn centered(m: &Matrix, means: &[f64]) -> Matrix {
    let mut out = m.clone();
    for (j, &mu) in means.iter().enumerate() {
        out.column_mut(j).iter_mut().for_each(|v| *v -= mu);
    }
    out
}

/// Accumulates `scale · Cᵀ g` into `acc` for centered data `C` and a fresh
/// standard normal vector `g` of length `C.nrows()`.
fn add_projection<R: Rng + ?Sized>(c: &Matrix, scale: f64, rng: &mut R, g: &mut Vec<f64>, acc: &mut [f64]) {
    g.clear();
    g.extend((0..c.nrows()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    for (j, slot) in acc.iter_mut().enumerate() {
        let dot: f64 = c.column(j).iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        *slot += scale * dot;
    }
}

/// Critical-value distribution for the sample-mean global test.
///
/// The statistic is max_ℓ √n |X̄_ℓ| (one-sample) or
/// max_ℓ √(nm/(n+m)) |X̄_ℓ − Ȳ_ℓ| (two-sample). Its null law is approximated
/// by max_ℓ |Z_ℓ| with Z ~ N(0, Σ̂), Σ̂ the sample covariance with
/// denominator n − 1, or the pooled scatter over n + m − 2. Each Z is drawn
/// as Cᵀg/√(denominator) with C the centered data and g standard normal,
/// which has covariance exactly Σ̂ even when Σ̂ is singular (p ≥ n).
pub fn mean_global_bootstrap(x: &Matrix, y: Option<&Matrix>, replicates: usize, seed: u64) -> Result<GlobalBootstrap> {
    if replicates == 0 {
        return Err(HlError::InvalidParameter("bootstrap replicates must be at least 1".into()));
    }
    let n = x.nrows();
    let p = x.ncols();
    let mx = column_means(x);
    let cx = centered(x, &mx);
    let (estimates, scale, cy, denom) = match y {
        None => {
            if n < 2 {
                return Err(HlError::SampleTooSmall { needed: 2, got: n });
            }
            (mx.clone(), (n as f64).sqrt(), None, (n - 1) as f64)
        }
        Some(y) => {
            if y.ncols() != p {
                return Err(HlError::DimensionMismatch(format!("x has {p} columns but y has {}", y.ncols())));
            }
            let m = y.nrows();
            if n == 0 || m == 0 || n + m < 3 {
                return Err(HlError::SampleTooSmall { needed: 3, got: n + m });
            }
            let my = column_means(y);
            let diff: Vec<f64> = mx.iter().zip(&my).map(|(a, b)| a - b).collect();
            let scale = ((n * m) as f64 / (n + m) as f64).sqrt();
            (diff, scale, Some(centered(y, &my)), (n + m - 2) as f64)
        }
    };
    let max_stat = estimates.iter().fold(0.0f64, |acc, v| acc.max((scale * v).abs()));
    let norm = 1.0 / denom.sqrt();
    let mut draws: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map_init(
            || (Vec::new(), vec![0.0; p]),
            |(g, z), b| {
                let mut rng = substream(seed, &[tag::MEAN_BASELINE, b as u64]);
                z.iter_mut().for_each(|v| *v = 0.0);
                add_projection(&cx, norm, &mut rng, g, z);
                if let Some(cy) = &cy {
                    add_projection(cy, norm, &mut rng, g, z);
                }
                z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
            },
        )
        .collect();
    draws.sort_unstable_by(f64::total_cmp);
    Ok(GlobalBootstrap { estimates, max_stat, max_deviations: draws })
}

/// Sample-mean global test at level α.
pub fn mean_global_test(
    x: &Matrix,
    y: Option<&Matrix>,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<GlobalTestResult> {
    check_alpha(alpha)?;
    mean_global_bootstrap(x, y, replicates, seed)?.decide(alpha)
}

fn mean_var(c: &[f64]) -> (f64, f64) {
    let n = c.len() as f64;
    let mean = c.iter().sum::<f64>() / n;
    let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided normal-reference p-value 2(1 − Φ(|t|)).
pub fn normal_two_sided(t: f64) -> f64 {
    erfc(t.abs() / std::f64::consts::SQRT_2).min(1.0)
}

fn t_pvalue(numerator: f64, se: f64) -> f64 {
    if se > 0.0 {
        normal_two_sided(numerator / se)
    } else if numerator == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Coordinatewise Student t p-values referred to the standard normal.
///
/// One-sample: t = √n·X̄/s. Two-sample: Welch's statistic
/// (X̄ − Ȳ)/√(s²_x/n + s²_y/m). A zero standard error yields p = 1 for a zero
/// numerator and p = 0 otherwise.
pub fn student_t_pvalues(x: &Matrix, y: Option<&Matrix>) -> Result<Vec<f64>> {
    if x.nrows() < 2 {
        return Err(HlError::SampleTooSmall { needed: 2, got: x.nrows() });
    }
    match y {
        None => {
            let n = x.nrows() as f64;
            Ok(x.columns()
                .map(|c| {
                    let (mean, var) = mean_var(c);
                    t_pvalue(mean, (var / n).sqrt())
                })
                .collect())
        }
        Some(y) => {
            if y.nrows() < 2 {
                return Err(HlError::SampleTooSmall { needed: 2, got: y.nrows() });
            }
            if y.ncols() != x.ncols() {
                return Err(HlError::DimensionMismatch(format!(
                    "x has {} columns but y has {}",
                    x.ncols(),
                    y.ncols()
                )));
            }
            let (n, m) = (x.nrows() as f64, y.nrows() as f64);
            Ok(x.columns()
                .zip(y.columns())
                .map(|(cx, cy)| {
                    let (mx, vx) = mean_var(cx);
                    let (my, vy) = mean_var(cy);
                    t_pvalue(mx - my, (vx / n + vy / m).sqrt())
                })
                .collect())
        }
    }
}

/// Degrees of freedom of a t law, with the normal limit as its own variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dof {
    Finite(f64),
    Infinite,
}

impl std::str::FromStr for Dof {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Dof::Infinite),
            other => match other.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(Dof::Finite(v)),
                _ => Err(HlError::InvalidParameter(format!("degrees of freedom `{s}` must be positive or `inf`"))),
            },
        }
    }
}

impl std::fmt::Display for Dof {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dof::Finite(v) => write!(f, "{v}"),
            Dof::Infinite => f.write_str("inf"),
        }
    }
}

/// Minimum replication count accepted by [`are_monte_carlo`].
pub const ARE_MIN_REPS: usize = 1000;

fn sample_var(v: &[f64]) -> f64 {
    mean_var(v).1
}

/// Monte-Carlo relative efficiency Var(sample median) / Var(HL) over `reps`
/// samples of `n` i.i.d. t_ν draws.
pub fn are_monte_carlo(dof: Dof, n: usize, reps: usize, seed: u64) -> Result<f64> {
    if reps < ARE_MIN_REPS {
        return Err(HlError::InvalidParameter(format!("reps must be at least {ARE_MIN_REPS}, got {reps}")));
    }
    if n < 2 {
        return Err(HlError::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let student = match dof {
        Dof::Finite(v) if v > 0.0 && v.is_finite() => {
            Some(StudentT::new(v).map_err(|e| HlError::InvalidParameter(e.to_string()))?)
        }
        Dof::Finite(v) => return Err(HlError::InvalidParameter(format!("degrees of freedom {v} must be positive"))),
        Dof::Infinite => None,
    };
    let pairs: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map_init(Vec::new, |buf, r| {
            let mut rng = substream(seed, &[tag::ARE, r as u64]);
            buf.clear();
            match &student {
                Some(t) => buf.extend((0..n).map(|_| t.sample(&mut rng))),
                None => buf.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal))),
            }
            buf.sort_unstable_by(f64::total_cmp);
            (median_sorted(buf, MedianConvention::Midpoint), hl_sorted(buf, MedianConvention::Midpoint))
        })
        .collect();
    let medians: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let hls: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(sample_var(&medians) / sample_var(&hls))
}
