use derw_core::model::{AInfOptions, ModelParams, Normalizers};
use derw_core::simulate::{run_ensemble, EnsembleConfig, PathRun, SimBackend};
use derw_core::stats::{
    clt_report, lemma1_ratio_report, lil_report, m_convergence_report, normalized_samples,
    summability_report, two_sample_ks, variance_floor_report, CltOptions, LilOptions, ScaleKind,
    TailVariance, XiSource,
};
use derw_core::Error;

fn ensemble(params: &ModelParams, norm: &Normalizers, n_max: usize, cps: Vec<usize>, n_paths: usize) -> Vec<PathRun> {
    let cfg = EnsembleConfig {
        n_max,
        checkpoints: cps,
        n_paths,
        master_seed: 42,
        backend: SimBackend::StateOnly,
        worker_count: 1,
    };
    run_ensemble(params, norm, &cfg).unwrap()
}

fn deterministic() -> (ModelParams, Normalizers) {
    let params = ModelParams::constant(1.0, 1.0, 1.0, 0.5).unwrap();
    let norm = Normalizers::compute_with_a_inf(&params, 1000, &AInfOptions::default()).unwrap();
    (params, norm)
}

#[test]
fn classical_walk_weak_clt() {
    let params = ModelParams::constant(0.5, 0.5, 1.0, 0.5).unwrap();
    let norm = Normalizers::compute(&params, 10_000).unwrap();
    let runs = ensemble(&params, &norm, 10_000, vec![10_000], 10_000);
    let report = clt_report(&runs, &norm, &params, &CltOptions::new(ScaleKind::Thm1Weak)).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.n, 10_000);
    assert!(row.ks_p_value > 1e-3, "{row:?}");
    assert!((0.0..=1.0).contains(&row.ks_statistic));
}

#[test]
fn degenerate_walk_reports() {
    let (params, norm) = deterministic();
    let runs = ensemble(&params, &norm, 1000, vec![5, 10, 20, 40, 80, 160, 320, 640], 60);
    let err = clt_report(&runs, &norm, &params, &CltOptions::new(ScaleKind::Thm3Strong)).unwrap_err();
    assert!(matches!(err, Error::ScaleDegenerate { .. }));
    let mut literal = CltOptions::new(ScaleKind::Thm3Strong);
    literal.drift_horizon = false;
    assert!(matches!(
        clt_report(&runs, &norm, &params, &literal),
        Err(Error::ScaleDegenerate { .. })
    ));

    let lil = lil_report(&runs, &norm, &LilOptions::new((10, 640), 0.5, 0.1)).unwrap_err();
    assert!(matches!(lil, Error::WindowEmpty { .. }));

    let m = m_convergence_report(&runs, &norm).unwrap();
    assert!(m.rows.iter().all(|r| r.mean_sq == 0.0));
    assert_eq!(m.m_hat_variance, 0.0);
    assert!(m.degenerate);

    let floor = variance_floor_report(&norm, (1, 1000), &[10, 100], None).unwrap();
    assert_eq!(floor.floor, 0.0);
}

#[test]
fn sign_flip_symmetry_of_drift_subtracted_samples() {
    let params = ModelParams::constant(1.0, 0.5, 0.8, 0.5).unwrap();
    let mut norm = Normalizers::compute(&params, 20_000).unwrap();
    norm.attach_a_inf(&params, &AInfOptions::with_rel_tol(1e-3)).unwrap();
    let runs = ensemble(&params, &norm, 20_000, vec![100, 200], 4000);
    let opts = CltOptions::new(ScaleKind::Thm3Strong);
    let z = normalized_samples(&runs, &norm, &params, &opts, 200).unwrap();
    let neg: Vec<f64> = z.iter().map(|x| -x).collect();
    assert!(two_sample_ks(&z, &neg).unwrap().p_value > 1e-3);
}

#[test]
fn reports_are_pure() {
    let params = ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap();
    let mut norm = Normalizers::compute(&params, 10_000).unwrap();
    norm.attach_a_inf(&params, &AInfOptions::with_rel_tol(5e-3)).unwrap();
    let cps: Vec<usize> = (3..=13).map(|k| 1usize << k).chain([10_000]).collect();
    let runs = ensemble(&params, &norm, 10_000, cps, 500);
    let opts = CltOptions::new(ScaleKind::Thm3Strong);
    let a = serde_json::to_string(&clt_report(&runs, &norm, &params, &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&clt_report(&runs, &norm, &params, &opts).unwrap()).unwrap();
    assert_eq!(a, b);
    let m1 = m_convergence_report(&runs, &norm).unwrap();
    let m2 = m_convergence_report(&runs, &norm).unwrap();
    assert_eq!(m1, m2);
    assert!(!m1.degenerate);
    let lil = LilOptions::new((2048, 8192), 0.5, 0.1);
    let l1 = lil_report(&runs, &norm, &lil).unwrap();
    assert_eq!(l1, lil_report(&runs, &norm, &lil).unwrap());
    let s = &l1.summary;
    for f in [s.exceed_plus, s.exceed_minus, s.reach_plus, s.reach_minus] {
        assert!((0.0..=1.0).contains(&f));
    }
}

#[test]
fn lemma_one_is_exact_without_memory() {
    let params = ModelParams::constant(0.9, 0.5, 0.0, 0.7).unwrap();
    let norm = Normalizers::compute(&params, 5000).unwrap();
    let runs = ensemble(&params, &norm, 5000, vec![10, 100, 1000, 5000], 100);
    for source in [XiSource::Exact, XiSource::Ensemble(&runs)] {
        let tail = TailVariance::new(&params, &norm, source).unwrap();
        let grid: Vec<usize> = (1..5000).step_by(7).collect();
        let report = lemma1_ratio_report(&tail, &grid);
        assert!(!report.rows.is_empty());
        assert!(report.rows.iter().all(|r| r.ratio == 1.0));
    }
    let floor = variance_floor_report(&norm, (1, 5000), &[1, 10, 100], None).unwrap();
    assert!(floor.rows.iter().all(|r| (r.exact - 0.84).abs() < 1e-15));
}

#[test]
fn lemma_one_ratio_with_ensemble_variances() {
    let params = ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap();
    let mut norm = Normalizers::compute(&params, 20_000).unwrap();
    norm.attach_a_inf(&params, &AInfOptions::with_rel_tol(5e-3)).unwrap();
    let cps: Vec<usize> = (1..=14).map(|k| 1usize << k).chain([20_000]).collect();
    let runs = ensemble(&params, &norm, 20_000, cps, 1000);
    let ens = TailVariance::new(&params, &norm, XiSource::Ensemble(&runs)).unwrap();
    let exact = TailVariance::new(&params, &norm, XiSource::Exact).unwrap();
    let grid = [10, 100, 1000, 10_000];
    let r_ens = lemma1_ratio_report(&ens, &grid);
    let r_exact = lemma1_ratio_report(&exact, &grid);
    for (a, b) in r_ens.rows.iter().zip(&r_exact.rows) {
        assert!(a.ratio > 0.5 && a.ratio <= 1.0);
        assert!((a.ratio - b.ratio).abs() < 0.05, "{a:?} {b:?}");
    }
    let last = r_ens.rows.last().unwrap();
    assert_eq!(last.n, 10_000);
    assert!((0.9..=1.1).contains(&last.ratio));
}

#[test]
fn summability_classical_and_zeta_four() {
    let params = ModelParams::constant(0.5, 0.5, 1.0, 0.5).unwrap();
    let norm = Normalizers::compute(&params, 1000).unwrap();
    let report = summability_report(&norm, None, &[10, 100, 1000]);
    for row in &report.rows {
        assert_eq!(row.sum_inv_a2, row.n as f64);
    }
    let params = ModelParams::constant(1.0, 0.5, 1.0, 0.5).unwrap();
    let norm = Normalizers::compute(&params, 10_000).unwrap();
    let report = summability_report(&norm, None, &[]);
    let zeta4 = std::f64::consts::PI.powi(4) / 90.0;
    assert!((report.rows[0].sum_inv_a4 - zeta4).abs() < 1e-8);
    assert!((norm.sum_inv_a4() - zeta4).abs() < 1e-8);
}

#[test]
fn variance_floor_strong_elephant() {
    let params = ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap();
    let norm = Normalizers::compute(&params, 100_000).unwrap();
    let report = variance_floor_report(&norm, (100, 100_000), &[100, 1000], None).unwrap();
    assert!(report.floor > 0.1, "{report:?}");
    let cps = vec![99, 100, 999, 1000];
    let runs = ensemble(&params, &norm, 1000, cps, 20_000);
    let report = variance_floor_report(&norm, (100, 1000), &[100, 1000], Some(&runs)).unwrap();
    for row in &report.rows {
        assert!((row.ensemble.unwrap() - row.exact).abs() < 0.02, "{row:?}");
    }
}
