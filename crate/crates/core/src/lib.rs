//! Tuning-free robust location inference with Hodges-Lehmann estimators.
//!
//! * [`hl`]: one- and two-sample HL estimates, order statistics of the
//!   implicit pair sets, the U-process, and a subsampling approximation.
//! * [`boot`]: the 2·Bernoulli(1/2) weighted bootstrap, confidence
//!   intervals and bootstrap p-values.
//! * [`multitest`]: global-null tests over many coordinates and
//!   Benjamini-Hochberg thresholding with FDP/TPP evaluation.
//! * [`simlab`]: noise models, baselines and the simulation runner.
//!
//! Every random routine takes an explicit seed; results do not depend on
//! the number of rayon worker threads.

pub mod boot;
pub mod error;
pub mod hl;
pub mod matrix;
pub mod multitest;
pub mod oracle;
pub mod rng;
pub mod sample;
mod select;
pub mod simlab;

pub use boot::{
    bootstrap_distribution, bootstrap_pvalue, bootstrap_quantile, bootstrap_replicate_one, bootstrap_replicate_two,
    confidence_interval, gen_weight_draw, BootstrapConfig, BootstrapData, BootstrapDistribution, ConfidenceInterval,
    PValueMode, WeightDraw,
};
pub use error::{HlError, Result};
pub use hl::{
    hl_one_sample, hl_two_sample, nonoverlap_pair_estimate, sample_median, select_diff_kth, select_walsh_kth,
    u_process_eval,
};
pub use matrix::{Matrix, MultivariateDataset};
pub use multitest::{
    bh_threshold, coordinate_pvalues_one, coordinate_pvalues_two, fdp_hat, fdp_tpp, global_test_one_sample,
    global_test_two_sample, FDPReport, GlobalTestResult, MultiTestResult,
};
pub use sample::{HLEstimate, MedianConvention, PairedSamples, UnivariateSample};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
