//! Shipped scenarios: they load, validate and reproduce their documented
//! regimes.

use std::path::Path;

use thzjitter::commands::{analyze_values, simulate_envelopes};
use thzjitter::io::{read_capture, write_capture, CaptureMeta};
use thzjitter::misalignment::MisalignmentModel;
use thzjitter::scenario::{load_scenario, NoiseSpec, Scenario};
use thzjitter::stats::{ks_distance, summary_stats, LinkScale};

const SHIPPED: [&str; 4] = [
    "paper_baseline.ini",
    "paper_gaussian_jitter.ini",
    "paper_driven_1mode.ini",
    "paper_driven_4mode.ini",
];

fn scenario(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(&path).unwrap()
}

fn link(sc: &Scenario) -> LinkScale {
    LinkScale {
        w_eq: sc.beam().w_eq,
        distance: sc.geometry.distance(),
    }
}

#[test]
fn shipped_scenarios_load_and_validate() {
    for name in SHIPPED {
        let sc = scenario(name);
        sc.validate().unwrap();
        assert_eq!(sc.name, name.trim_end_matches(".ini"));
        let aligned = sc.aligned_amplitude().unwrap();
        assert!((aligned - 0.0512).abs() < 5e-4, "{name}: {aligned}");
    }
}

#[test]
fn baseline_variance_is_noise_floor() {
    let sc = scenario("paper_baseline.ini");
    let values = simulate_envelopes(&sc, sc.seed).unwrap().normalized(&sc.analysis);
    let s = summary_stats(&values).unwrap();
    assert!((s.mean - 1.0).abs() < 1e-3, "{}", s.mean);
    assert!(s.variance > 0.8e-5 && s.variance < 3.2e-5, "{}", s.variance);
}

#[test]
fn gaussian_jitter_matches_analytic_model() {
    let sc = scenario("paper_gaussian_jitter.ini");
    let sigma_az = sc.motion.gaussian_sigma_az;
    let model = MisalignmentModel::from_geometry(&sc.beam(), sc.geometry.distance(), sigma_az)
        .unwrap()
        .to_normalized();
    for seed in [1, 2] {
        let values = simulate_envelopes(&sc, seed).unwrap().normalized(&sc.analysis);
        let ks = ks_distance(&values, &model).unwrap();
        assert!(ks <= 0.02, "seed {seed}: ks {ks}");
    }
}

#[test]
fn driven_single_mode_is_bimodal_and_rejects_the_model() {
    let sc = scenario("paper_driven_1mode.ini");
    let values = simulate_envelopes(&sc, sc.seed).unwrap().normalized(&sc.analysis);
    let a = analyze_values(&values, &sc.analysis, &link(&sc)).unwrap();
    assert_eq!(a.modes.len(), 2);
    assert!(!a.analytic_fit_ok());
}

#[test]
fn offset_bias_puts_mass_above_one() {
    let mut sc = scenario("paper_driven_1mode.ini");
    sc.motion = sc.motion.clone().with_bias(0.05f64.to_radians(), 0.0);
    sc.noise = NoiseSpec::SigmaVolts(0.0);
    let run = simulate_envelopes(&sc, 1).unwrap();
    assert!(run.epsilon_0 < sc.aligned_amplitude().unwrap());
    let values = run.normalized(&sc.analysis);
    assert!(values.iter().any(|&v| v > 1.01));
}

#[test]
fn capture_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let meta = CaptureMeta {
        sample_rate: 5e6,
        f_if: 400e3,
        description: "round trip".into(),
        seed: 7,
    };
    let volts: Vec<f64> = (0..1000)
        .map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1e-17 * i as f64)
        .collect();
    write_capture(&path, &meta, &volts).unwrap();
    let (m, v) = read_capture(&path).unwrap();
    assert_eq!(m, meta);
    assert_eq!(v, volts);
}
