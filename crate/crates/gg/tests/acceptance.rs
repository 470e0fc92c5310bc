//! End-to-end acceptance gate. Each test checks one release criterion at
//! its stated tolerance and prints a single PASS line; assertion messages
//! carry the measured values for the FAIL side.

use gg::bounds::{build_embedding, full_certificate, measure_generator_rows};
use gg::braid::BraidWord;
use gg::dynamics::{
    area_distortion, compose, twist_strength_for_rotation, DiffeoTrace, HamiltonianSystem,
    DEFAULT_STEP,
};
use gg::estimator::{
    additivity_experiment, estimate_phi_bar, scaling_estimates, scaling_experiment,
    vanishing_experiment, Observable, Sampling, TruncationMode,
};
use gg::quasimorphism::QuasimorphismSpec;
use gg::sphere::{uniform_point, uniform_sample, ConfigTuple, SpherePoint, SphericalCap, DELTA_COLLISION};
use gg::trace::{build_loops, default_pole, extract_braid, suggested_time_steps};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::process::Command;
use std::time::Instant;

fn north_twist(area: f64, turns: f64) -> DiffeoTrace {
    let cap = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), area);
    let s = twist_strength_for_rotation(&cap, 0.3, TAU * turns);
    compose(&[HamiltonianSystem::twist_map(cap, s)], &[1], DEFAULT_STEP).unwrap()
}

#[test]
fn acceptance_01_entropy_oracle_through_the_cli() {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_gg"))
        .args(["braid", "entropy", "3; 1 -2"])
        .output()
        .expect("binary runs");
    let elapsed = started.elapsed();
    assert!(out.status.success(), "exit status {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.trim().parse().expect("numeric entropy output");
    assert!(
        (value - 0.9624).abs() < 1e-3,
        "entropy {value} is not within 1e-3 of 0.9624"
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!(
        "ACCEPTANCE 01: PASS - entropy(\"3; 1 -2\") = {value} in {} ms",
        elapsed.as_millis()
    );
}

#[test]
fn acceptance_02_signature_oracles() {
    let q = QuasimorphismSpec::Signature;
    let cases = [
        ("2; 1 1 1", -2i64),
        ("3; 1 -2 1 -2", 0),
        ("2;", 0),
    ];
    for (text, expected) in cases {
        let word = if text.ends_with(';') {
            BraidWord::empty(text.split(';').next().unwrap().parse().unwrap())
        } else {
            BraidWord::from_text(text).unwrap()
        };
        let started = Instant::now();
        let value = q.evaluate(&word).unwrap();
        let elapsed = started.elapsed();
        assert_eq!(
            value,
            Rational64::from_integer(expected),
            "signature of {text:?}"
        );
        assert!(
            elapsed.as_millis() < 100,
            "signature of {text:?} took {elapsed:?}, budget 100 ms"
        );
    }
    println!("ACCEPTANCE 02: PASS - signature oracles -2, 0, 0 hold exactly");
}

#[test]
fn acceptance_03_extraction_roundtrip_and_purity() {
    // Two points inside the support of one full positive twist, traced
    // from themselves, braid into the square of the positive generator.
    let f = north_twist(0.1, 1.0);
    let cap = f.support_caps()[0];
    let up = |rho: f64, angle: f64| {
        let r = rho * cap.half_angle();
        SpherePoint::from_coords(r.sin() * angle.cos(), r.sin() * angle.sin(), r.cos())
    };
    let x = ConfigTuple::new(vec![up(0.2, 0.0), up(0.45, 2.5)], DELTA_COLLISION).unwrap();
    let pole = default_pole(&f);
    let loops = build_loops(&f, &x, &x).unwrap();
    let word = extract_braid(&loops, &pole, suggested_time_steps(1)).unwrap();
    let reduced = word.reduced();
    assert_eq!(reduced.to_text(), "2; 1 1", "full twist on two points");
    assert_eq!(reduced.exponent_sum(), 2);

    // Purity sweep: randomized supports, strengths, strand counts, and
    // tuples. Every successfully extracted braid must have the identity
    // permutation; degenerate draws are resampled, never skipped.
    let scenes = 10_000usize;
    let violations: usize = (0..scenes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
            rng.set_stream(k as u64);
            let center = uniform_point(&mut rng);
            let area = rng.random_range(0.05..0.3);
            let turns = rng.random_range(-2.0..2.0);
            let cap = SphericalCap::new(center, area);
            let s = twist_strength_for_rotation(&cap, 0.3, TAU * turns);
            let f =
                compose(&[HamiltonianSystem::twist_map(cap, s)], &[1], DEFAULT_STEP).unwrap();
            let pole = default_pole(&f);
            let n = rng.random_range(2..=4usize);
            let steps = suggested_time_steps(1);
            for _ in 0..64 {
                let Ok(x) = uniform_sample(&mut rng, n, DELTA_COLLISION) else {
                    continue;
                };
                let Ok(z) = uniform_sample(&mut rng, n, DELTA_COLLISION) else {
                    continue;
                };
                let Ok(loops) = build_loops(&f, &x, &z) else {
                    continue;
                };
                let Ok(word) = extract_braid(&loops, &pole, steps) else {
                    continue;
                };
                return usize::from(!word.is_pure());
            }
            panic!("scene {k} exhausted its retry budget");
        })
        .sum();
    assert_eq!(violations, 0, "purity violations in {scenes} scenes");
    println!("ACCEPTANCE 03: PASS - roundtrip word \"2; 1 1\", 0 purity violations in {scenes} scenes");
}

#[test]
fn acceptance_04_vanishing_stratum_is_reducible() {
    let f = north_twist(0.1, 1.0);
    let report =
        vanishing_experiment(&f, &QuasimorphismSpec::Signature, 4, 2000, 0xD1CE).unwrap();
    assert_eq!(
        report.delete_violations, 0,
        "outside-strand sub-braids must vanish ({} considered)",
        report.considered
    );
    assert!(
        report.flagged_fraction >= 0.99,
        "only {:.4} of {} stratum braids flagged reducible-or-periodic",
        report.flagged_fraction,
        report.considered
    );
    println!(
        "ACCEPTANCE 04: PASS - 0 sub-braid violations, {:.2}% of {} flagged",
        100.0 * report.flagged_fraction,
        report.considered
    );
}

#[test]
fn acceptance_05_scaling_fit_matches_the_closed_form() {
    let started = Instant::now();
    let area = 0.1;
    let n = 4;
    let grid = [1.0, 0.8, 0.6, 0.4];
    let f = north_twist(area, 1.0);
    let c = 0.7;
    let synthetic = Observable::Synthetic {
        all_inside: 1.0,
        one_outside: c,
    };
    let fit = scaling_experiment(
        &f,
        &synthetic,
        n,
        &grid,
        2000,
        &[2, 4],
        Sampling::Stratified,
        0x5CA1,
    )
    .unwrap();
    let expect_a = area.powi(n as i32);
    let expect_b = c * area.powi(n as i32 - 1);
    let tol_a = (3.0 * fit.err_a).max(1e-10);
    let tol_b = (3.0 * fit.err_b).max(1e-10);
    assert!(
        (fit.coeff_a - expect_a).abs() <= tol_a,
        "A = {} vs closed form {expect_a} (tol {tol_a:.3e})",
        fit.coeff_a
    );
    assert!(
        (fit.coeff_b - expect_b).abs() <= tol_b,
        "B = {} vs closed form {expect_b} (tol {tol_b:.3e})",
        fit.coeff_b
    );

    // With the one-outside stratum value forced to zero the model is a
    // pure power law, so the log-log slope across the grid recovers n.
    let pure = Observable::Synthetic {
        all_inside: 1.0,
        one_outside: 0.0,
    };
    let cells = scaling_estimates(
        &f,
        &pure,
        n,
        &grid,
        2000,
        &[2, 4],
        Sampling::Stratified,
        0x5CA1,
    )
    .unwrap();
    let logs: Vec<(f64, f64)> = cells
        .iter()
        .map(|(eps, est)| (eps.ln(), est.value.ln()))
        .collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / logs.len() as f64;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / logs.len() as f64;
    let slope = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum::<f64>();
    assert!(
        (slope - n as f64).abs() <= 0.05 * n as f64,
        "log-log slope {slope} vs n = {n}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() <= 600, "took {elapsed:?}, budget 10 min");
    println!(
        "ACCEPTANCE 05: PASS - A, B within 3 sigma of closed form, slope {slope:.4} vs n = {n}, {} ms",
        elapsed.as_millis()
    );
}

#[test]
fn acceptance_06_disjoint_supports_add() {
    let f1 = north_twist(0.05, 1.0);
    let south = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, -1.0), 0.05);
    let s = twist_strength_for_rotation(&south, 0.3, TAU);
    let f2 = compose(&[HamiltonianSystem::twist_map(south, s)], &[1], DEFAULT_STEP).unwrap();
    let report = additivity_experiment(
        &f1,
        &f2,
        &Observable::Braid(QuasimorphismSpec::Signature),
        4,
        2000,
        &[2, 4],
        0xADD,
    )
    .unwrap();
    assert!(
        report.within_tolerance,
        "gap {} exceeds 3 x combined stderr {}",
        report.gap, report.combined_stderr
    );
    println!(
        "ACCEPTANCE 06: PASS - additivity gap {:.5} within 3 x stderr {:.5}",
        report.gap, report.combined_stderr
    );
}

#[test]
fn acceptance_07_certificate_algebra_on_the_lattice() {
    let spec = build_embedding(2, 0.2, 1.0, DEFAULT_STEP).unwrap();
    let rows = measure_generator_rows(&spec, 3, 200, &[1, 2], 100, 71).unwrap();
    let mut checked = 0usize;
    for k1 in -8i64..=8 {
        let budget = 8 - k1.abs();
        for k2 in -budget..=budget {
            let k = [k1, k2];
            let cert = full_certificate(&spec, &k, &rows).unwrap();
            let l1 = (k1.abs() + k2.abs()) as f64;
            let lower = cert.lower.unwrap();
            let upper = cert.upper.unwrap();
            assert_eq!(upper, l1, "upper bound for k = {k:?}");
            assert!(lower <= upper, "lower {lower} > upper {upper} for k = {k:?}");
            let doubled = full_certificate(&spec, &[2 * k1, 2 * k2], &rows).unwrap();
            assert_eq!(doubled.lower.unwrap(), 2.0 * lower, "doubling k = {k:?}");
            assert_eq!(doubled.upper.unwrap(), 2.0 * upper, "doubling k = {k:?}");
            checked += 1;
        }
    }
    println!(
        "ACCEPTANCE 07: PASS - lower <= upper = |k|_1 and exact doubling on {checked} lattice vectors"
    );
}

#[test]
fn acceptance_08_homogeneity_under_squaring() {
    let f = north_twist(0.2, 1.0);
    let q = Observable::Braid(QuasimorphismSpec::Signature);
    let mode = TruncationMode::EnforceReducibleVanishing;
    let squared = estimate_phi_bar(&f.power(2), &q, 3, 2000, &[2, 4], mode, 0x40).unwrap();
    let single = estimate_phi_bar(&f, &q, 3, 2000, &[2, 4], mode, 0x40).unwrap();
    let gap = (squared.value - 2.0 * single.value).abs();
    let combined = (squared.stderr.powi(2) + (2.0 * single.stderr).powi(2)).sqrt();
    assert!(
        gap <= 3.0 * combined,
        "phibar(f^2) = {} vs 2 phibar(f) = {} (gap {gap}, combined stderr {combined})",
        squared.value,
        2.0 * single.value
    );
    println!(
        "ACCEPTANCE 08: PASS - phibar(f^2) = {:.5} matches 2 phibar(f) = {:.5} within {:.5}",
        squared.value,
        2.0 * single.value,
        3.0 * combined
    );
}

#[test]
fn acceptance_09_numerical_dynamics_diagnostics() {
    let cap = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), 0.1);
    let strength = twist_strength_for_rotation(&cap, 0.3, TAU);
    let sys = HamiltonianSystem::twist_map(cap, strength);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_area = 0.0f64;
    let mut worst_energy = 0.0f64;
    let mut worst_reverse = 0.0f64;
    for _ in 0..100 {
        let p = uniform_point(&mut rng);
        let log_det = area_distortion(|q| sys.flow(1.0, q, DEFAULT_STEP).unwrap(), &p, 1e-5);
        worst_area = worst_area.max((log_det.exp() - 1.0).abs());
        let h0 = sys.value(&p);
        let mut x = p;
        for _ in 0..10 {
            x = sys.flow(0.1, &x, DEFAULT_STEP).unwrap();
            worst_energy = worst_energy.max((sys.value(&x) - h0).abs());
        }
        let back = sys.flow(-1.0, &x, DEFAULT_STEP).unwrap();
        worst_reverse = worst_reverse.max(back.chordal_distance(&p));
    }
    assert!(worst_area < 1e-4, "|det DF - 1| reached {worst_area:e}");
    assert!(worst_energy < 1e-8, "energy drift reached {worst_energy:e}");
    assert!(worst_reverse < 1e-8, "reversibility error reached {worst_reverse:e}");
    println!(
        "ACCEPTANCE 09: PASS - |det DF - 1| {:.2e}, energy drift {:.2e}, reversibility {:.2e}",
        worst_area, worst_energy, worst_reverse
    );
}

#[test]
fn acceptance_10_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
experiment = "phibar"
seed = 9
n = 4
samples = 300

[system]
preset = "twist"
cap_area = 0.1
turns = 1.0
"#,
    )
    .unwrap();
    let run = |out: &str, workers: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_gg"))
            .args([
                "run",
                config_path.to_str().unwrap(),
                "--out",
                dir.path().join(out).to_str().unwrap(),
                "--workers",
                workers,
            ])
            .output()
            .expect("binary runs");
        assert!(status.status.success(), "{:?}", status);
    };
    run("first", "4");
    run("second", "1");
    let a = std::fs::read(dir.path().join("first/estimates.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("second/estimates.jsonl")).unwrap();
    assert_eq!(a, b, "estimate streams differ between reruns");

    let manifest = |name: &str| -> serde_json::Value {
        let text = std::fs::read_to_string(dir.path().join(name).join("manifest.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("wall_time_ms");
        obj.remove("unix_time_secs");
        v
    };
    assert_eq!(manifest("first"), manifest("second"), "manifests differ beyond clock fields");
    println!("ACCEPTANCE 10: PASS - byte-identical estimates across reruns and worker counts");
}
