use dudley::flow::{self, path_seed, PathAnalysis, Window};
use dudley::levy::{closed_form_alpha, LevyMeasure, LevySpec};
use dudley::poincare::{MetricParams, PoincareAlg};

fn diffusion() -> LevySpec {
    LevySpec::new(3, 1.0, LevyMeasure::Zero).unwrap()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn alpha_rate(spec: &LevySpec, horizon: f64, dt: f64, seed: u64) -> f64 {
    let p = flow::simulate_path(spec, horizon, dt, seed).unwrap();
    let last = p.len() - 1;
    p.u(last) / p.times()[last]
}

#[test]
fn weak_drift_of_abelian_coordinate() {
    let spec = diffusion();
    let rates: Vec<f64> = (0..10_000).map(|i| alpha_rate(&spec, 0.01, 1e-3, path_seed(77, i))).collect();
    let (m, se) = mean_se(&rates);
    let a = closed_form_alpha(&spec).unwrap();
    assert!((m - a).abs() <= 4.0 * se, "{m} +- {se}");
}

#[test]
fn weak_drift_with_jumps() {
    let spec = LevySpec::new(3, 0.5, LevyMeasure::Atomic(vec![(0.7, 3.0)])).unwrap();
    let rates: Vec<f64> = (0..4_000).map(|i| alpha_rate(&spec, 0.5, 1e-3, path_seed(78, i))).collect();
    let (m, se) = mean_se(&rates);
    let a = closed_form_alpha(&spec).unwrap();
    assert!((m - a).abs() <= 4.0 * se, "{m} +- {se} vs {a}");
}

#[test]
fn constraint_over_long_path() {
    let p = flow::simulate_path(&diffusion(), 100.0, 1e-3, 3).unwrap();
    let worst = (0..p.len()).step_by(11).map(|i| p.g(i).constraint_residual()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
    assert!(p.max_k_defect() < 1e-12);
}

#[test]
fn halving_dt_keeps_alpha() {
    let spec = diffusion();
    let run = |dt: f64, base: u64| -> Vec<f64> { (0..100).map(|i| alpha_rate(&spec, 20.0, dt, path_seed(base, i))).collect() };
    let (m1, s1) = mean_se(&run(1e-3, 5));
    let (m2, s2) = mean_se(&run(5e-4, 6));
    // independent ensembles: compare against the combined standard error
    assert!((m1 - m2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt(), "{m1} +- {s1} vs {m2} +- {s2}");
}

#[test]
fn graded_lyapunov_matches_direct_on_short_paths() {
    let p = flow::simulate_path(&diffusion(), 8.0, 1e-3, 21).unwrap();
    let a = PathAnalysis::new(&p, 0.5).unwrap();
    let w = Window::tail(8.0, 0.5, 0.0);
    let mut a = a;
    a.guard_fraction = 0.0;
    let metric = MetricParams::default();
    for i in [0, 3, 5, 7, 9] {
        let x = PoincareAlg::basis(3, i);
        let graded = a.lyapunov_exponent(&x, &metric).unwrap();
        let direct = flow::lyapunov_exponent_direct(&p, &x, &metric, w).unwrap();
        assert!((graded - direct).abs() < 1e-6, "basis {i}: {graded} vs {direct}");
    }
}

#[test]
fn estimates_are_reproducible() {
    let p = flow::simulate_path(&diffusion(), 30.0, 1e-3, 9).unwrap();
    let q = flow::simulate_path(&diffusion(), 30.0, 1e-3, 9).unwrap();
    assert_eq!(p, q);
    let e = flow::estimate_asymptotics(&p, 0.5).unwrap();
    assert_eq!(e, flow::estimate_asymptotics(&q, 0.5).unwrap());
    assert!(e.diagnostics.flag.is_none());
}
