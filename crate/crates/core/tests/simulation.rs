use gabba::ber_analytics::QuadratureConfig;
use gabba::fading_sim::{ChannelModel, PowerProfile};
use gabba::harness::{
    analyze, analyze_csv, capacity_csv, capacity_sweep, esno_grid, run_sweep, AnalyzeConfig, CapacityConfig,
    ExperimentConfig, SweepResult, CAPACITY_MODULATIONS,
};
use gabba::GabbaError;

fn config(k: usize, modulation: &str, n_r: usize) -> ExperimentConfig {
    ExperimentConfig {
        k,
        n_t: k,
        n_r,
        modulation: modulation.parse().unwrap(),
        channel: ChannelModel::Rayleigh,
        profile: PowerProfile::Equipower,
        esno_db: vec![0.0, 6.0],
        trials: 2000,
        target_errors: 100,
        seed: 42,
        quadrature: QuadratureConfig::with_points(1000),
    }
}

fn without_timing(result: &SweepResult) -> Vec<(f64, f64, f64, u64, u64)> {
    result.rows.iter().map(|r| (r.esno_db, r.ber_sim, r.ber_analytic, r.trials, r.bit_errors)).collect()
}

#[test]
fn same_seed_same_counts() {
    let cfg = config(4, "qpsk", 2);
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(without_timing(&a), without_timing(&b));
    let other = run_sweep(&ExperimentConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(without_timing(&a), without_timing(&other));
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = config(8, "qam16", 1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_sweep(&cfg).unwrap())
    };
    assert_eq!(without_timing(&run(1)), without_timing(&run(4)));
}

#[test]
fn stopping_rule() {
    let mut cfg = config(2, "bpsk", 1);
    cfg.trials = 100_000;
    cfg.target_errors = 50;
    let result = run_sweep(&cfg).unwrap();
    for row in &result.rows {
        assert!(row.bit_errors >= 50);
        assert_eq!(row.trials % 256, 0, "points stop on batch boundaries");
        assert!(row.trials < cfg.trials);
    }
    cfg.trials = 300;
    cfg.target_errors = u64::MAX;
    assert!(run_sweep(&cfg).unwrap().rows.iter().all(|r| r.trials == 300));
}

#[test]
fn noiseless_points_are_error_free() {
    let mut cfg = config(16, "qam64", 1);
    cfg.esno_db = vec![f64::INFINITY];
    cfg.trials = 64;
    let row = &run_sweep(&cfg).unwrap().rows[0];
    assert_eq!(row.bit_errors, 0);
    assert_eq!(row.ber_analytic, 0.0);
}

#[test]
fn alamouti_tracks_analytic_curve() {
    let mut cfg = config(2, "bpsk", 1);
    cfg.esno_db = vec![4.0, 10.0];
    cfg.trials = 400_000;
    cfg.target_errors = 400;
    for row in run_sweep(&cfg).unwrap().rows {
        let bits = row.trials as f64 * 2.0;
        let sigma = (row.ber_analytic * (1.0 - row.ber_analytic) / bits).sqrt();
        assert!((row.ber_sim - row.ber_analytic).abs() < 4.0 * sigma, "{row:?}");
    }
}

#[test]
fn configuration_errors() {
    let base = config(4, "qpsk", 1);
    let bad = [
        ExperimentConfig { k: 6, ..base.clone() },
        ExperimentConfig { n_t: 5, ..base.clone() },
        ExperimentConfig { n_t: 0, ..base.clone() },
        ExperimentConfig { n_r: 0, ..base.clone() },
        ExperimentConfig { trials: 0, ..base.clone() },
        ExperimentConfig { esno_db: vec![], ..base.clone() },
        ExperimentConfig { esno_db: vec![f64::NAN], ..base.clone() },
        ExperimentConfig { channel: ChannelModel::Rice { m: 0.2 }, ..base.clone() },
    ];
    for cfg in bad {
        assert!(matches!(run_sweep(&cfg), Err(GabbaError::Config(_))), "{cfg:?}");
    }
    assert!(esno_grid(0.0, 10.0, 0.0).is_err());
    assert!(esno_grid(5.0, 0.0, 1.0).is_err());
    assert_eq!(esno_grid(0.0, 1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
}

#[test]
fn csv_and_json_outputs() {
    let result = run_sweep(&config(2, "psk8", 1)).unwrap();
    let csv = result.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("esno_db,ber_sim,ber_analytic,trials,bit_errors,seconds"));
    assert_eq!(lines.count(), 2);
    let json: serde_json::Value = serde_json::from_str(&result.config_json().unwrap()).unwrap();
    assert_eq!(json["k"], 2);
    assert_eq!(json["seed"], 42);
    let back: ExperimentConfig = serde_json::from_value(json).unwrap();
    assert_eq!(back, result.config);
}

#[test]
fn analyze_sweep() {
    let cfg = AnalyzeConfig {
        modulation: "qam16".parse().unwrap(),
        n_t: 4,
        n_r: 2,
        rho: 1.0,
        eta: 1.0,
        channel: ChannelModel::Rice { m: 2.0 },
        profile: PowerProfile::Linear { pmax: 2.0 },
        severities: None,
        esno_db: vec![0.0, 10.0, 20.0],
        quadrature: QuadratureConfig::default(),
    };
    let rows = analyze(&cfg).unwrap();
    assert!(rows.windows(2).all(|w| w[1].ber < w[0].ber));
    assert!(analyze_csv(&rows).unwrap().starts_with("esno_db,ber\n"));
    let mixed = AnalyzeConfig { severities: Some(vec![0.7, 1.0, 2.0, 3.0]), ..cfg.clone() };
    assert_eq!(analyze(&mixed).unwrap().len(), 3);
    assert!(analyze(&AnalyzeConfig { severities: Some(vec![1.0]), ..cfg }).is_err());
}

#[test]
fn capacity_envelope() {
    let cfg = CapacityConfig {
        n_t: 4,
        n_r: 4,
        channel: ChannelModel::Rayleigh,
        profile: PowerProfile::Equipower,
        esno_db: esno_grid(-10.0, 40.0, 5.0).unwrap(),
        quadrature: QuadratureConfig::default(),
    };
    let rows = capacity_sweep(&cfg).unwrap();
    for row in &rows {
        let best = row.rates.iter().copied().fold(0.0, f64::max);
        assert_eq!(row.envelope, best);
    }
    assert!(rows.windows(2).all(|w| w[1].envelope >= w[0].envelope));
    let header = capacity_csv(&rows).lines().next().unwrap().to_string();
    assert_eq!(header, format!("esno_db,{},envelope", CAPACITY_MODULATIONS.join(",")));
}
