use hlmt_core::rng::StreamRng;
use hlmt_core::simlab::{
    build_dataset, case_noise, mean_global_test, normal_two_sided, rows_to_csv, run_experiment, sample_noise,
    student_t_pvalues, ExperimentRow, Method, NoiseModel, SimulationConfig, TestKind,
};
use hlmt_core::{hl_one_sample, nonoverlap_pair_estimate, Matrix, MedianConvention, PValueMode, UnivariateSample};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn config(case_id: u8, method: Method, test: TestKind) -> SimulationConfig {
    SimulationConfig {
        case_id,
        n: 60,
        m: matches!(case_id, 4 | 5 | 6 | 8).then_some(50),
        p: 20,
        mu: 0.5,
        signal_count: 5,
        alphas: vec![0.05, 0.1],
        replicates: 40,
        reps: 3,
        seed: 17,
        method,
        test,
        convention: MedianConvention::Midpoint,
        pvalue_mode: PValueMode::Smoothed,
    }
}

fn normal_matrix(n: usize, p: usize, seed: u64) -> Matrix {
    let mut rng = StreamRng::seed_from_u64(seed);
    Matrix::from_columns((0..p).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()).unwrap()
}

#[test]
fn dataset_signal_placement() {
    let mut cfg = config(1, Method::Hl, TestKind::Global);
    cfg.n = 2000;
    cfg.p = 8;
    cfg.mu = 0.7;
    cfg.signal_count = 3;
    let d = build_dataset(&cfg, 0).unwrap();
    for j in 0..8 {
        let est = hl_one_sample(&UnivariateSample::new(d.x.column(j).to_vec()).unwrap(), MedianConvention::Midpoint)
            .unwrap()
            .value;
        let target = if j < 3 { 0.7 } else { 0.0 };
        assert!((est - target).abs() < 0.05, "column {j}: {est}");
    }
    assert_eq!(build_dataset(&cfg, 0).unwrap(), d);
    assert_ne!(build_dataset(&cfg, 1).unwrap(), d);
}

#[test]
fn null_dataset_is_centered() {
    let mut cfg = config(3, Method::Hl, TestKind::Global);
    cfg.mu = 0.0;
    cfg.n = 4000;
    let d = build_dataset(&cfg, 2).unwrap();
    for col in d.x.columns() {
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 0.15, "{mean}");
    }
}

#[test]
fn two_sample_cases_have_y() {
    for case in 1..=8u8 {
        let cfg = config(case, Method::Hl, TestKind::Global);
        let d = build_dataset(&cfg, 0).unwrap();
        assert_eq!(d.y.is_some(), case_noise(case).unwrap().y.is_some());
        if let Some(y) = &d.y {
            assert_eq!((y.nrows(), y.ncols()), (50, 20));
        }
    }
}

#[test]
fn every_case_and_method_runs() {
    for case in 1..=8u8 {
        for (method, test) in [
            (Method::Hl, TestKind::Global),
            (Method::Mean, TestKind::Global),
            (Method::Hl, TestKind::Fdp),
            (Method::StudentT, TestKind::Fdp),
        ] {
            let rows = run_experiment(&config(case, method, test)).unwrap();
            assert_eq!(rows.len(), 2);
            for r in &rows {
                for v in [r.rejection_rate, r.mean_fdp, r.mean_tpp].into_iter().flatten() {
                    assert!((0.0..=1.0).contains(&v), "case {case} {method:?}: {v}");
                }
            }
        }
    }
}

#[test]
fn schema_is_method_agnostic() {
    let a = rows_to_csv(&run_experiment(&config(7, Method::Hl, TestKind::Fdp)).unwrap());
    let b = rows_to_csv(&run_experiment(&config(7, Method::StudentT, TestKind::Fdp)).unwrap());
    assert_eq!(a.lines().next(), b.lines().next());
    assert_eq!(a.lines().next().unwrap(), ExperimentRow::CSV_HEADER);
    let cols = |s: &str| s.lines().nth(1).unwrap().split(',').count();
    assert_eq!(cols(&a), cols(&b));
}

#[test]
fn single_rep_emits_one_row_per_alpha() {
    let mut cfg = config(2, Method::Hl, TestKind::Global);
    cfg.reps = 1;
    cfg.alphas = vec![0.01, 0.05, 0.1];
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![0.01, 0.05, 0.1]);
}

#[test]
fn experiment_deterministic_across_thread_counts() {
    let cfg = config(5, Method::Hl, TestKind::Fdp);
    let run = || rows_to_csv(&run_experiment(&cfg).unwrap());
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(one, four);
}

#[test]
fn config_round_trips_through_json() {
    let cfg = config(4, Method::Mean, TestKind::Global);
    let text = serde_json::to_string(&cfg).unwrap();
    let back: SimulationConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    let err = serde_json::from_str::<SimulationConfig>(r#"{"case_id":1}"#).unwrap_err();
    assert!(err.to_string().contains("missing field"));
}

#[test]
fn noise_rows_are_independent_of_columns_drawn_later() {
    // Row-level mixture: the inflated component scales a whole row.
    let model = NoiseModel::GaussianARMix { rho: 0.0, inflation: 100.0, mix_weight: 0.5 };
    let m = sample_noise(&model, 4000, 6, &mut StreamRng::seed_from_u64(3)).unwrap();
    let big: Vec<bool> = (0..4000).map(|i| m.row(i)[0].abs() > 4.0).collect();
    let agree = (0..4000).filter(|&i| big[i] && m.row(i)[1..].iter().any(|v| v.abs() > 4.0)).count();
    let total = big.iter().filter(|&&b| b).count();
    assert!(agree as f64 > 0.7 * total as f64, "{agree} of {total}");
}

#[test]
fn student_t_null_uniform() {
    let x = normal_matrix(300, 10_000, 21);
    let mut p = student_t_pvalues(&x, None).unwrap();
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let ks = p
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 0.05, "KS {ks}");
}

#[test]
fn student_t_zero_mean_column() {
    let x = Matrix::from_columns(vec![vec![-1.0, 1.0, -2.0, 2.0], vec![0.0; 4]]).unwrap();
    let p = student_t_pvalues(&x, None).unwrap();
    assert_eq!(p, vec![1.0, 1.0]);
    assert!((normal_two_sided(1.959963984540054) - 0.05).abs() < 1e-10);
}

#[test]
fn mean_test_size_on_gaussian_data() {
    let rejections = (0..500u64)
        .filter(|&r| {
            let x = normal_matrix(100, 1, 10_000 + r);
            mean_global_test(&x, None, 0.05, 300, r).unwrap().reject
        })
        .count();
    let rate = rejections as f64 / 500.0;
    assert!((0.02..=0.09).contains(&rate), "{rate}");
}

#[test]
fn nonoverlap_tracks_exact_estimate() {
    let t3 = NoiseModel::ScaledT { dof: 3.0, scale: 1.0 };
    let diffs: Vec<f64> = (0..200u64)
        .map(|r| {
            let m = sample_noise(&t3, 500, 1, &mut StreamRng::seed_from_u64(r)).unwrap();
            let x = UnivariateSample::new(m.column(0).to_vec()).unwrap();
            nonoverlap_pair_estimate(&x, 5, r).unwrap() - hl_one_sample(&x, MedianConvention::Midpoint).unwrap().value
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / 200.0;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
    assert!(mean.abs() <= 3.0 * sd / 200f64.sqrt(), "mean diff {mean}, se {}", sd / 200f64.sqrt());
}
