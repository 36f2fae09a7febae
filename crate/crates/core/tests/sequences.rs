use num_complex::Complex64;
use pitslab::sequences::{generate, IidDist, Kind, SequenceSpec};
use proptest::prelude::*;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Moebius by trial division.
fn mu(mut n: u64) -> i64 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn unimodular_specs() -> Vec<SequenceSpec> {
    vec![
        SequenceSpec::constant(),
        SequenceSpec::pure_exponential("golden/2").unwrap(),
        SequenceSpec::polynomial_phase(&["sqrt2", "pi"]).unwrap(),
        SequenceSpec::fractional_power("e", "3/2").unwrap(),
        SequenceSpec::new(Kind::SignBesicovitch {
            alpha: pitslab::dd::Real::parse("sqrt2").unwrap(),
        }),
        SequenceSpec::new(Kind::IidRandom {
            dist: IidDist::Steinhaus,
            seed: 3,
        }),
    ]
}

#[test]
fn moebius_matches_trial_division() {
    let w = generate(&SequenceSpec::new(Kind::Moebius), 999_000, 2000).unwrap();
    for (i, v) in w.values.iter().enumerate() {
        assert_eq!(v.re as i64, mu(999_000 + i as u64), "n = {}", 999_000 + i);
        assert_eq!(v.im, 0.0);
    }
}

#[test]
fn steinhaus_is_completely_multiplicative() {
    let spec = SequenceSpec::new(Kind::SteinhausMultiplicative { seed: 5 });
    let w = generate(&spec, 0, 10_001).unwrap().values;
    for m in 1..100u64 {
        for n in 1..100u64 {
            let d = (w[(m * n) as usize] - w[m as usize] * w[n as usize]).norm();
            assert!(d < 1e-12, "m={m} n={n} d={d}");
        }
    }
}

#[test]
fn rademacher_is_multiplicative_on_coprime_pairs() {
    let spec = SequenceSpec::new(Kind::RademacherMultiplicative { seed: 9 });
    let w = generate(&spec, 0, 10_001).unwrap().values;
    for m in 1..100u64 {
        for n in 1..100u64 {
            if gcd(m, n) == 1 {
                assert_eq!(w[(m * n) as usize], w[m as usize] * w[n as usize]);
            }
        }
    }
    // vanishes exactly off the square-free integers
    for n in 1..10_000u64 {
        assert_eq!(w[n as usize].norm() == 0.0, mu(n) == 0, "n = {n}");
    }
}

#[test]
fn polynomial_phase_small_indices() {
    // for n < 200 the phase sqrt2 n^2 is below 1e5, so f64 gives ~1e-11
    let spec = SequenceSpec::polynomial_phase(&["sqrt2"]).unwrap();
    let w = generate(&spec, 0, 200).unwrap().values;
    for (n, v) in w.iter().enumerate() {
        let t = std::f64::consts::SQRT_2 * (n * n) as f64;
        let expect = Complex64::from_polar(1.0, std::f64::consts::TAU * t.fract());
        assert!((v - expect).norm() < 1e-9, "n = {n}");
    }
}

#[test]
fn twist_and_scale_compose() {
    let base = SequenceSpec::new(Kind::Moebius);
    let c = Complex64::new(0.5, -2.0);
    let twisted = base.clone().with_scale(c).with_twist(pitslab::dd::Real::parse("1/4").unwrap());
    let a = generate(&base, 0, 64).unwrap().values;
    let b = generate(&twisted, 0, 64).unwrap().values;
    let quarter = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    for n in 0..64 {
        assert_eq!(b[n], a[n] * c * quarter[n % 4]);
    }
}

#[test]
fn explicit_data_is_zero_beyond_support() {
    let spec = SequenceSpec::explicit(&[1.0, -2.0, 3.0]);
    let w = generate(&spec, 0, 6).unwrap().values;
    let re: Vec<f64> = w.iter().map(|v| v.re).collect();
    assert_eq!(re, vec![1.0, -2.0, 3.0, 0.0, 0.0, 0.0]);
}

#[test]
fn capacity_is_enforced_by_length_hint() {
    let spec = SequenceSpec::constant().with_length_hint(100);
    assert!(generate(&spec, 0, 101).is_ok());
    let err = generate(&spec, 50, 60).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn windows_agree_with_longer_windows(start in 0u64..1_000_000, len in 1usize..300, cut in 0usize..300) {
        let cut = cut.min(len);
        let mut specs = unimodular_specs();
        specs.push(SequenceSpec::new(Kind::Moebius));
        specs.push(SequenceSpec::new(Kind::RademacherMultiplicative { seed: 1 }));
        for spec in &specs {
            let whole = generate(spec, start, len).unwrap().values;
            let tail = generate(spec, start + cut as u64, len - cut).unwrap().values;
            prop_assert_eq!(&whole[cut..], &tail[..]);
        }
    }

    #[test]
    fn unimodular_kinds_have_unit_modulus(start in 0u64..10_000_000, len in 1usize..200) {
        for spec in unimodular_specs() {
            prop_assert!(spec.is_unimodular());
            for v in generate(&spec, start, len).unwrap().values {
                prop_assert!((v.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn spec_json_round_trips(seed in any::<u64>(), a in 2u64..10) {
        let specs = vec![
            SequenceSpec::new(Kind::GeometricPhase { a, x: pitslab::dd::Real::parse("pi/4").unwrap(), seed }),
            SequenceSpec::new(Kind::IidRandom { dist: IidDist::Gaussian, seed }),
            SequenceSpec::polynomial_phase(&["-sqrt2/3", "0.125"]).unwrap().with_twist(pitslab::dd::Real::parse("golden/2").unwrap()),
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: SequenceSpec = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(generate(&back, 0, 50).unwrap().values, generate(&spec, 0, 50).unwrap().values);
            prop_assert_eq!(back, spec);
        }
    }
}

/// One spec per kind, with every optional field set.
fn one_of_each() -> Vec<SequenceSpec> {
    let r = |s: &str| pitslab::dd::Real::parse(s).unwrap();
    let c = Complex64::new(1.0, -1.0);
    vec![
        SequenceSpec::constant().with_scale(c).with_twist(r("1/3")),
        SequenceSpec::pure_exponential("golden/2").unwrap(),
        SequenceSpec::cosh_data(),
        SequenceSpec::new(Kind::SignBesicovitch { alpha: r("sqrt2") }),
        SequenceSpec::polynomial_phase(&["sqrt2", "pi"]).unwrap(),
        SequenceSpec::fractional_power("e", "3/2").unwrap(),
        SequenceSpec::new(Kind::GeometricPhase { a: 3, x: r("pi/4"), seed: 2 }),
        SequenceSpec::new(Kind::IidRandom { dist: IidDist::Rademacher, seed: 1 }),
        SequenceSpec::new(Kind::SteinhausMultiplicative { seed: 1 }),
        SequenceSpec::new(Kind::RademacherMultiplicative { seed: 1 }),
        SequenceSpec::new(Kind::Moebius),
        SequenceSpec::explicit(&[1.0, 2.0]),
    ]
}

#[test]
fn schema_file_matches_serialization() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/sequence-spec.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let variants = schema["oneOf"].as_array().unwrap();
    let common: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    let listed = schema["properties"]["kind"]["enum"].as_array().unwrap();
    assert_eq!(listed.len(), variants.len());
    let specs = one_of_each();
    assert_eq!(specs.len(), variants.len());
    for spec in specs {
        let v = serde_json::to_value(&spec).unwrap();
        let kind = &v["kind"];
        assert!(listed.contains(kind), "{kind} not listed");
        let variant = variants.iter().find(|s| &s["properties"]["kind"]["const"] == kind).unwrap();
        let props = variant["properties"].as_object().unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(props.contains_key(key) || common.contains(&key), "{kind}: undocumented field {key}");
        }
        for req in variant["required"].as_array().into_iter().flatten() {
            assert!(v.get(req.as_str().unwrap()).is_some(), "{kind}: missing {req}");
        }
    }
}
