use std::f64::consts::TAU;

use num_complex::Complex64;
use pitslab::dd::Real;
use pitslab::emit;
use pitslab::sequences::{Kind, SequenceSpec};
use pitslab::zeros::{self, Sector};
use proptest::prelude::*;

/// Taylor data `xi(k) = k! c_k` of the monic polynomial with the given roots.
fn polynomial_with_roots(roots: &[Complex64]) -> SequenceSpec {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * r;
        }
        c = next;
    }
    let mut fact = 1.0;
    let values = c
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if k > 0 {
                fact *= k as f64;
            }
            a * fact
        })
        .collect();
    SequenceSpec::new(Kind::Explicit { values })
}

fn polar(r: f64, turns: f64) -> Complex64 {
    Complex64::from_polar(r, TAU * turns)
}

#[test]
fn recovers_planted_roots() {
    let roots = [polar(1.5, 0.1), polar(2.0, 0.55), polar(3.25, 0.8), polar(4.0, 0.3), polar(0.5, 0.0)];
    let spec = polynomial_with_roots(&roots);
    let zs = zeros::find_zeros(&spec, (1.0, 5.0), zeros::TRUNCATION_TOL).unwrap();
    assert_eq!(zs.count(), 4);
    for r in &roots[..4] {
        let best = zs.zeros.iter().map(|z| (z.z() - r).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-10, "root {r} missed by {best}");
    }
}

#[test]
fn empty_annulus_gives_header_only_csv() {
    let zs = zeros::find_zeros(&SequenceSpec::constant(), (1.0, 100.0), zeros::TRUNCATION_TOL).unwrap();
    assert_eq!(zs.count(), 0);
    assert_eq!(emit::zeros_csv(&zs), "modulus,angle_turns,multiplicity,residual\n");
}

#[test]
fn twist_rotates_zeros() {
    // F_lambda(z) = F(z e(lambda)): every zero moves by -lambda turns
    let base = SequenceSpec::polynomial_phase(&["sqrt2"]).unwrap();
    let twisted = base.clone().with_twist(Real::parse("1/8").unwrap());
    let a = zeros::find_zeros(&base, (60.0, 120.0), zeros::TRUNCATION_TOL).unwrap();
    let b = zeros::find_zeros(&twisted, (60.0, 120.0), zeros::TRUNCATION_TOL).unwrap();
    assert_eq!(a.count(), b.count());
    for z in &a.zeros {
        let moved = z.z() * polar(1.0, -0.125);
        let best = b.zeros.iter().map(|w| (w.z() - moved).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-8 * z.modulus, "zero {} unmatched ({best})", z.z());
    }
}

#[test]
fn sector_counts_partition_the_zero_set() {
    let spec = SequenceSpec::new(Kind::Moebius);
    let zs = zeros::find_zeros(&spec, (50.0, 150.0), zeros::TRUNCATION_TOL).unwrap();
    let counts = zeros::sector_counts(&zs, 12, 150.0).unwrap();
    assert_eq!(counts.iter().map(|c| c.count).sum::<u64>(), zs.count());
    let expected: f64 = counts.iter().map(|c| c.expected).sum();
    assert!((expected - 100.0).abs() < 1e-9);
}

#[test]
fn winding_matches_count_on_moebius_sectors() {
    let spec = SequenceSpec::new(Kind::Moebius);
    let zs = zeros::find_zeros(&spec, (50.0, 150.0), zeros::TRUNCATION_TOL).unwrap();
    for j in 0..8 {
        let s = Sector {
            rho_in: 60.0 + 5.0 * j as f64,
            rho_out: 140.0 - 3.0 * j as f64,
            t1: 0.013 + j as f64 / 8.0,
            t2: 0.013 + j as f64 / 8.0 + 0.2,
        };
        let (w, used) = zeros::winding_count_jittered(&spec, &s, j).unwrap();
        assert_eq!(w, zeros::count_in_sector(&zs, &used) as i64, "sector {used:?}");
    }
}

#[test]
fn zeros_csv_parses_back() {
    let zs = zeros::find_zeros(&SequenceSpec::new(Kind::Moebius), (50.0, 120.0), zeros::TRUNCATION_TOL).unwrap();
    let text = emit::zeros_csv(&zs);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["modulus", "angle_turns", "multiplicity", "residual"]);
    let rows: Vec<(f64, f64, u32, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), zs.zeros.len());
    for (row, z) in rows.iter().zip(&zs.zeros) {
        // shortest round-trip formatting reproduces the doubles exactly
        assert_eq!(row.0, z.modulus);
        assert_eq!(row.1, z.angle);
        assert!((0.0..1.0).contains(&row.1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn winding_equals_planted_root_count(
        moduli in proptest::collection::vec(0.6f64..5.5, 1..7),
        angles in proptest::collection::vec(0.0f64..1.0, 7),
        r1 in 0.5f64..3.0, width in 0.5f64..3.0, t1 in 0.0f64..1.0, span in 0.05f64..0.9,
    ) {
        let roots: Vec<Complex64> = moduli.iter().zip(&angles).map(|(&m, &a)| polar(m, a)).collect();
        let spec = polynomial_with_roots(&roots);
        let sector = Sector { rho_in: r1, rho_out: r1 + width, t1, t2: t1 + span };
        let (w, used) = zeros::winding_count_jittered(&spec, &sector, 1).unwrap();
        let planted = roots
            .iter()
            .filter(|z| {
                let rel = (z.arg() / TAU - used.t1).rem_euclid(1.0);
                z.norm() > used.rho_in && z.norm() < used.rho_out && rel < used.t2 - used.t1
            })
            .count();
        prop_assert_eq!(w, planted as i64);
    }

    #[test]
    fn truncation_degree_grows_with_radius(r in 1.0f64..500.0, extra in 1.0f64..100.0) {
        let spec = SequenceSpec::new(Kind::Moebius);
        let a = zeros::truncation_degree(&spec, r, 1e-16).unwrap();
        let b = zeros::truncation_degree(&spec, r + extra, 1e-16).unwrap();
        prop_assert!(a <= b);
        prop_assert!(a as f64 >= r);
    }
}
