use ptmoments::bounds::{
    error_scaling_sweep, sample_size_p2, sample_size_p3, trial_estimates, variance_bound_p2,
    ErrorStats, TrialSetup,
};
use ptmoments::qstate::{make_ghz, PartitionSpec};
use ptmoments::shadows::Statistic;
use ptmoments::stats::{loglog_slope, sample_variance};

fn half(n: usize) -> PartitionSpec {
    PartitionSpec::new((1..=n / 2).collect(), (n / 2 + 1..=n).collect()).unwrap()
}

fn failure_rate(estimates: &[f64], exact: f64, eps: f64) -> f64 {
    estimates
        .iter()
        .filter(|v| (*v - exact).abs() > eps)
        .count() as f64
        / estimates.len() as f64
}

#[test]
fn empirical_variance_respects_bound() {
    for ab in [2, 4] {
        let psi = make_ghz(ab).unwrap();
        for m in [50, 100, 400] {
            let setup = TrialSetup::new(200, 61 + ab as u64);
            let est = trial_estimates(&psi, &half(ab), Statistic::P2, m, setup).unwrap();
            let var = sample_variance(&est);
            let slack = 3.0 * var * (2.0 / (est.len() - 1) as f64).sqrt();
            let bound = variance_bound_p2(ab, 1.0, m).unwrap();
            assert!(var <= bound + slack, "|AB|={ab} M={m}: {var} > {bound}");
        }
    }
}

#[test]
fn sample_sizes_meet_their_guarantee() {
    let psi = make_ghz(2).unwrap();
    let part = half(2);
    let trials = 400;
    let binomial_slack = |delta: f64| 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();

    let m2 = sample_size_p2(2, 1.0, 0.2, 0.25).unwrap();
    let est = trial_estimates(&psi, &part, Statistic::P2, m2, TrialSetup::new(trials, 62)).unwrap();
    assert!(failure_rate(&est, 1.0, 0.2) <= 0.25 + binomial_slack(0.25));

    let m3 = sample_size_p3(2, 1.0, 0.5, 0.5).unwrap();
    assert_eq!(m3, 1248);
    let est = trial_estimates(&psi, &part, Statistic::P3, m3, TrialSetup::new(trials, 63)).unwrap();
    assert!(failure_rate(&est, 0.25, 0.5) <= 0.5 + binomial_slack(0.5));
}

#[test]
fn ghz_four_reaches_target_accuracy() {
    let psi = make_ghz(4).unwrap();
    let est =
        trial_estimates(&psi, &half(4), Statistic::P2, 1600, TrialSetup::new(50, 64)).unwrap();
    let err = ErrorStats::from_estimates(&est, 1.0);
    assert!(err.mean_abs_err <= 0.15, "{err:?}");
}

#[test]
fn large_m_regime_slope() {
    let psi = make_ghz(4).unwrap();
    let grid = [2000, 4000, 8000, 20_000];
    let sweep = error_scaling_sweep(
        &psi,
        &half(4),
        Statistic::P2,
        &grid,
        TrialSetup::new(40, 65),
    )
    .unwrap();
    let xs: Vec<f64> = grid.iter().map(|&m| m as f64).collect();
    let ys: Vec<f64> = sweep.grid.iter().map(|p| p.errors.mean_abs_err).collect();
    let slope = loglog_slope(&xs, &ys);
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
}
