mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windrisk_core::experiment::run_phase_report;
use windrisk_core::fragility::{sample_wind_speed, ProfileLabel, WindProfile};
use windrisk_core::mcengine::{run_trials, SimParams};
use windrisk_core::FeederNetwork;

#[test]
fn weibull_samples_pass_ks() {
    for label in [ProfileLabel::Extreme, ProfileLabel::High, ProfileLabel::Normal] {
        let profile = WindProfile::preset(label).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut xs: Vec<f64> = (0..100_000).map(|_| sample_wind_speed(&profile, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = profile.cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 0.01, "{label}: D = {d}");
    }
}

#[test]
fn mean_loss_matches_per_line_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut text = String::from(
        "[curves.c]\np_normal = 0.3\nomega_critical = 20.0\nomega_collapse = 60.0\n[[buses]]\nid = \"b0\"\nis_substation = true\n",
    );
    let mut depth = vec![0usize];
    let mut loads = vec![0.0];
    for i in 1..=100 {
        let parent = if i < 10 {
            rng.random_range(0..i)
        } else {
            rng.random_range(i - 10..i)
        };
        depth.push(depth[parent] + 1);
        let load = rng.random_range(1..10) as f64 * 5.0;
        loads.push(load);
        text.push_str(&format!(
            "[[buses]]\nid = \"b{i}\"\nload_kw = {load}\n[[lines]]\nid = \"l{i}\"\nfrom_bus = \"b{parent}\"\nto_bus = \"b{i}\"\nfragility = \"c\"\n"
        ));
    }
    let net = FeederNetwork::from_toml_str(&text, "tree").unwrap();
    // a bus is lost unless every line on its path survives; at 10 m/s the
    // base loss is 3 h times the lost load
    let expected_kw: f64 = (1..=100).map(|b| loads[b] * (1.0 - 0.7f64.powi(depth[b] as i32))).sum();
    let expected = 3.0 * expected_kw / 1000.0;
    let n = 20_000;
    let batch = run_trials(&net, 10.0, n, 5, &SimParams::default());
    let mean = batch.mean();
    let var = batch.losses_mwh.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma = (var / n as f64).sqrt();
    assert!(
        (mean - expected).abs() < 3.0 * sigma,
        "mean {mean} expected {expected} σ {sigma}"
    );
}

#[test]
fn calm_wind_phase_report_is_zero() {
    let mut cfg = common::scenario("ieee123_smart.toml");
    cfg.fragility.curves.insert(
        "still".into(),
        windrisk_core::FragilityCurve::linear(0.0, 20.0, 60.0).unwrap(),
    );
    cfg.fragility.default = Some("still".into());
    cfg.n_trials = 50;
    let r = run_phase_report(&cfg, 10.0).unwrap();
    assert_eq!(r.phase1_load_loss_kw, 0.0);
    assert_eq!(r.phase3_restored_kw, 0.0);
    assert_eq!(r.loss_mwh, 0.0);
}

#[test]
fn phase_report_at_25_ms() {
    let mut smart = common::scenario("ieee123_smart.toml");
    let mut base = common::scenario("ieee123_base.toml");
    smart.n_trials = 500;
    base.n_trials = 500;
    let s = run_phase_report(&smart, 25.0).unwrap();
    let b = run_phase_report(&base, 25.0).unwrap();
    assert!(s.phase3_restored_kw > 0.0);
    assert_eq!(b.phase3_restored_kw, 0.0);
    assert_eq!(s.phase1_load_loss_kw, b.phase1_load_loss_kw);
    assert!(s.phase2_duration_h < b.phase2_duration_h);
}
