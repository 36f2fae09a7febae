use num_complex::Complex64;
use pitslab::evaluator::{self, Method};
use pitslab::pits::{self, Overall, Thresholds, Verdict, VerifyConfig};
use pitslab::sequences::{Kind, SequenceSpec};
use pitslab::zeros;
use proptest::prelude::*;

fn poly_sqrt2() -> SequenceSpec {
    SequenceSpec::polynomial_phase(&["sqrt2"]).unwrap()
}

/// Kuiper statistic by brute force over all arcs with sample endpoints.
fn brute_discrepancy(angles: &[f64]) -> f64 {
    let n = angles.len() as f64;
    let mut worst: f64 = 0.0;
    for &a in angles {
        for &b in angles {
            let len = (b - a).rem_euclid(1.0);
            // closed arc [a, b] and open arc (a, b)
            let inside = |x: &f64| (x - a).rem_euclid(1.0) <= len;
            let strictly = |x: &f64| {
                let r = (x - a).rem_euclid(1.0);
                r > 0.0 && r < len
            };
            let closed = angles.iter().filter(|x| inside(x)).count() as f64 / n;
            let open = angles.iter().filter(|x| strictly(x)).count() as f64 / n;
            worst = worst.max(closed - len).max(len - open);
        }
    }
    worst.min(1.0)
}

#[test]
fn probe_on_the_exponential() {
    let spec = SequenceSpec::constant();
    let at_zero = pits::lower_bound_probe(&spec, 400.0, 0.05, 0.0, 1.0, 0.3).unwrap();
    assert!(at_zero.pass);
    // the window sum peaks at theta = 0 with value close to sqrt(2 pi r)
    assert!(at_zero.value > (400.0f64).powf(0.25));
    let opposite = pits::lower_bound_probe(&spec, 400.0, 0.01, 0.5, 1.0, 0.3).unwrap();
    assert!(!opposite.pass);
    assert!(pits::lower_bound_probe(&spec, 50.0, 0.05, 0.0, 1.0, 0.3).is_err());
    assert!(pits::lower_bound_probe(&spec, 400.0, 0.6, 0.0, 1.0, 0.3).is_err());
}

#[test]
fn pits_profile_of_the_quadratic_phase() {
    let radii: Vec<f64> = (0..64).map(|i| 780.0 + 40.0 * i as f64 / 63.0).collect();
    let field = evaluator::indicator_field(&poly_sqrt2(), &radii, 256, Method::default()).unwrap();
    let p = pits::pits_profile(&field).unwrap();
    assert!(p.q50 >= 0.97, "median {}", p.q50);
    assert!(p.pits_area <= 0.05, "pits area {}", p.pits_area);
    assert!(p.q01 <= p.q05 && p.q05 <= p.q25 && p.q25 <= p.q50 && p.q50 <= p.q95);
}

#[test]
fn pits_profile_needs_enough_cells() {
    let field = evaluator::indicator_field(&poly_sqrt2(), &[100.0], 256, Method::default()).unwrap();
    assert!(pits::pits_profile(&field).is_err());
}

#[test]
fn cosh_zero_angles_are_two_atoms() {
    let zs = zeros::find_zeros(&SequenceSpec::cosh_data(), (1.0, 10.0), zeros::TRUNCATION_TOL).unwrap();
    let e = pits::equidistribution(&zs, 16, &Thresholds::default()).unwrap();
    assert!((e.star_discrepancy - 0.5).abs() < 1e-9);
    // six zeros are too few for a verdict
    assert_eq!(e.verdict(), Verdict::Inconclusive);
}

#[test]
fn evidence_does_not_weaken_with_radius() {
    let th = Thresholds::default();
    let small = zeros::find_zeros(&poly_sqrt2(), (50.0, 150.0), zeros::TRUNCATION_TOL).unwrap();
    let large = zeros::find_zeros(&poly_sqrt2(), (50.0, 300.0), zeros::TRUNCATION_TOL).unwrap();
    let d_small = pits::equidistribution(&small, 16, &th).unwrap().star_discrepancy;
    let d_large = pits::equidistribution(&large, 16, &th).unwrap().star_discrepancy;
    assert!(d_large <= 1.25 * d_small, "{d_large} vs {d_small}");
}

#[test]
fn verify_verdicts() {
    let cfg = VerifyConfig::default();
    let poly = pits::verify(&poly_sqrt2(), &cfg).unwrap();
    assert_eq!(poly.verdict, Overall::ConsistentWithTheorem1);
    assert!(poly.equidistribution.star_discrepancy <= 0.08);
    assert_eq!(pits::verify(&SequenceSpec::constant(), &cfg).unwrap().verdict, Overall::HypothesisFails);
    let frac = pits::verify(&SequenceSpec::fractional_power("1", "1/2").unwrap(), &cfg).unwrap();
    assert_eq!(frac.verdict, Overall::HypothesisFails);
    assert_eq!(frac.verdicts.conclusion, Verdict::Fail);
}

#[test]
fn verify_is_scale_invariant() {
    let cfg = VerifyConfig::default();
    for (spec, c) in [
        (poly_sqrt2(), Complex64::new(0.0, 3.0)),
        (SequenceSpec::new(Kind::Moebius), Complex64::new(-0.02, 0.0)),
        (SequenceSpec::constant(), Complex64::new(7.0, 7.0)),
    ] {
        let a = pits::verify(&spec, &cfg).unwrap();
        let b = pits::verify(&spec.clone().with_scale(c), &cfg).unwrap();
        assert_eq!(a.verdicts, b.verdicts);
        assert_eq!(a.verdict, b.verdict);
    }
}

#[test]
fn report_serialization() {
    let mut cfg = VerifyConfig::default();
    cfg.probes = 2;
    let r = pits::verify(&SequenceSpec::new(Kind::Moebius), &cfg).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["schema"], "pits-report/1");
    assert_eq!(v["spec"]["kind"], "moebius");
    assert_eq!(v["probes"].as_array().unwrap().len(), 2);
    let text = pits::render_text(&r);
    assert!(text.starts_with("verdict: ConsistentWithTheorem1\n"));
    assert_eq!(text, pits::render_text(&r));
}

#[test]
fn stage_errors_carry_labels() {
    let mut cfg = VerifyConfig::default();
    cfg.annulus = (300.0, 50.0);
    let err = pits::verify(&poly_sqrt2(), &cfg).unwrap_err();
    assert!(err.to_string().starts_with("zeros: "), "{err}");
    assert_eq!(err.exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discrepancy_matches_brute_force(angles in proptest::collection::vec(0.0f64..1.0, 1..40)) {
        let d = pits::circular_discrepancy(&angles);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - brute_discrepancy(&angles)).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_is_rotation_invariant(angles in proptest::collection::vec(0.0f64..1.0, 1..200), shift in 0u32..64) {
        // dyadic shifts keep the arithmetic exact
        let s = shift as f64 / 64.0;
        let rotated: Vec<f64> = angles.iter().map(|a| (a + s).rem_euclid(1.0)).collect();
        let a = pits::circular_discrepancy(&angles);
        let b = pits::circular_discrepancy(&rotated);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn decision_is_total(h in 0u8..3, c in 0u8..3, p in 0u8..3) {
        let v = |i: u8| [Verdict::Pass, Verdict::Fail, Verdict::Inconclusive][i as usize];
        let o = pits::decide(v(h), v(c), v(p));
        let expect = match (v(h), v(c), v(p)) {
            (Verdict::Fail, _, _) => Overall::HypothesisFails,
            (Verdict::Pass, Verdict::Fail, _) => Overall::ConclusionFails,
            (Verdict::Pass, Verdict::Pass, Verdict::Pass) => Overall::ConsistentWithTheorem1,
            _ => Overall::Inconclusive,
        };
        prop_assert_eq!(o, expect);
    }
}
