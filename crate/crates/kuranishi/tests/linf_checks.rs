//! Bracket-generated charts: the potential must integrate the section under
//! the pairing, expansion must truncate honestly, and the JSON form must
//! round-trip.

use std::collections::BTreeMap;

use kuranishi::chart::SymTensor;
use kuranishi::poly::Term;
use kuranishi::{Error, LinfChart, PolyMap};
use nalgebra::DMatrix;

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

fn multi_indices(n: usize, degree: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in 0..=degree {
        for mut rest in multi_indices(n - 1, degree - first) {
            let mut mu = vec![first];
            mu.append(&mut rest);
            out.push(mu);
        }
    }
    out
}

/// Brackets built so that `<l_k(x_1..x_k), x_0>` is a fully symmetric form:
/// a scalar coefficient per degree-(k+1) multi-index is contracted against
/// the inverse pairing. The potential then recovers the section exactly.
fn random_chart(n: usize, arities: &[u32], rng: &mut SplitMix) -> LinfChart {
    let mut pairing = vec![vec![0.0; n]; n];
    for (i, row) in pairing.iter_mut().enumerate() {
        for (j, p) in row.iter_mut().enumerate() {
            *p = rng.unit();
            if i == j {
                *p += n as f64 + 1.0;
            }
        }
    }
    let pm = DMatrix::from_fn(n, n, |i, j| pairing[i][j]);
    let inv = pm.try_inverse().expect("diagonally dominant pairing");

    let mut brackets = BTreeMap::new();
    for &k in arities {
        let mut scalar: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for nu in multi_indices(n, k + 1) {
            scalar.insert(nu, rng.unit());
        }
        let mut entries = Vec::new();
        for mu in multi_indices(n, k) {
            let mut v = vec![0.0; n];
            for (a, slot) in v.iter_mut().enumerate() {
                for b in 0..n {
                    let mut nu = mu.clone();
                    nu[b] += 1;
                    *slot += inv[(b, a)] * scalar[&nu];
                }
            }
            entries.push((mu, v));
        }
        brackets.insert(k, SymTensor::from_multi(k, n, n, &entries).unwrap());
    }
    LinfChart::new(n, n, brackets, pairing, 0.5).unwrap()
}

#[test]
fn random_charts_satisfy_the_gradient_identity() {
    let mut rng = SplitMix(7);
    let start = std::time::Instant::now();
    for case in 0..100u64 {
        let n = 1 + (case % 3) as usize;
        let arities: &[u32] = match case % 4 {
            0 => &[2],
            1 => &[2, 3],
            2 => &[3, 4],
            _ => &[2, 3, 4],
        };
        let chart = random_chart(n, arities, &mut rng);
        let pot = chart.potential(None).unwrap();
        assert!(
            pot.gradient_matches_section,
            "case {case}: residual {:.3e}",
            pot.residual
        );
        assert!(pot.residual <= 1e-9, "case {case}: {:.3e}", pot.residual);
    }
    assert!(start.elapsed().as_secs() < 10, "{:?}", start.elapsed());
}

#[test]
fn truncation_keeps_the_gradient_identity_consistent() {
    let mut rng = SplitMix(11);
    let chart = random_chart(2, &[2, 3, 4], &mut rng);
    for k in [2u32, 3, 4] {
        let pot = chart.potential(Some(k)).unwrap();
        assert!(pot.gradient_matches_section, "k={k}: {:.3e}", pot.residual);
    }
}

#[test]
fn cubic_fixture_expands_and_its_potential_integrates_the_section() {
    let linf = LinfChart::from_json(&fixture("linf_cubic.json")).unwrap();
    assert_eq!((linf.h1, linf.h2), (1, 1));

    // s(x) = 2x^2/2! + 6x^3/3! = x^2 + x^3.
    let chart = linf.expand("cubic", None).unwrap();
    let want = PolyMap::new(
        1,
        1,
        vec![vec![
            Term { exp: vec![2], c: 1.0 },
            Term { exp: vec![3], c: 1.0 },
        ]],
    )
    .unwrap();
    assert!(chart.section.coeff_distance(&want) <= 1e-12);
    assert_eq!(chart.m, 1);
    assert_eq!(chart.footprint.len(), 1);
    assert_eq!(chart.footprint[0].x, vec![0.0]);
    assert!(chart.domain.contains(&[0.49]));
    assert!(!chart.domain.contains(&[0.51]));
    assert!(chart.notes.iter().any(|n| n.contains("truncated")));

    // f(x) = x^3/3 + x^4/4 and grad f recovers s.
    let pot = linf.potential(None).unwrap();
    assert!(pot.gradient_matches_section, "{:.3e}", pot.residual);
    let want_f = PolyMap::new(
        1,
        1,
        vec![vec![
            Term { exp: vec![3], c: 1.0 / 3.0 },
            Term { exp: vec![4], c: 0.25 },
        ]],
    )
    .unwrap();
    assert!(pot.f.coeff_distance(&want_f) <= 1e-12);
}

#[test]
fn json_round_trip_preserves_bracket_charts() {
    let mut rng = SplitMix(23);
    for case in 0..10u64 {
        let n = 1 + (case % 3) as usize;
        let chart = random_chart(n, &[2, 3], &mut rng);
        let back = LinfChart::from_json(&chart.to_json()).unwrap();
        assert_eq!(chart, back, "case {case}");
    }
    let text = fixture("linf_cubic.json");
    let linf = LinfChart::from_json(&text).unwrap();
    let back = LinfChart::from_json(&linf.to_json()).unwrap();
    assert_eq!(linf, back);
}

#[test]
fn asymmetric_dense_tensor_is_rejected() {
    // l(e1, e2) = 1 but l(e2, e1) = 0.
    let flat = vec![0.0, 1.0, 0.0, 0.0];
    let err = SymTensor::from_dense(2, 2, 1, &flat).unwrap_err();
    assert!(err.to_string().contains("symmetric"), "{err}");
}

#[test]
fn rectangular_chart_refuses_a_potential() {
    let bracket = SymTensor::from_dense(2, 2, 1, &[1.0, 0.0, 0.0, 1.0]).unwrap();
    let chart = LinfChart::new(
        2,
        1,
        [(2u32, bracket)].into(),
        vec![vec![1.0, 0.0]],
        1.0,
    )
    .unwrap();
    let err = chart.potential(None).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)), "{err}");
    // Expansion still works: the section is an honest 2 -> 1 map.
    let expanded = chart.expand("rect", None).unwrap();
    assert_eq!((expanded.n(), expanded.m), (2, 1));
    assert_eq!(expanded.vdim(), 1);
}

#[test]
fn degenerate_pairing_is_rejected_by_the_potential() {
    let bracket = SymTensor::from_dense(2, 1, 1, &[2.0]).unwrap();
    let chart = LinfChart::new(1, 1, [(2u32, bracket)].into(), vec![vec![0.0]], 1.0).unwrap();
    let err = chart.potential(None).unwrap_err();
    assert!(matches!(err, Error::Singular(_)), "{err}");
}
