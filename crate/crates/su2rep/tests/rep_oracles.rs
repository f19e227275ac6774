//! Two independent oracles pin down the solver's orbit lists: exhaustive
//! enumeration inside the binary icosahedral group, and a census of
//! admissible rotation angles from the spherical triangle inequality.

use std::collections::BTreeSet;

use su2rep::quat::ONE;
use su2rep::solve::irreducibility_gap;
use su2rep::{solve_reps, GroupPresentation, Quat, SolveOpts};

fn fixture(name: &str) -> GroupPresentation {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    GroupPresentation::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// The 120 unit icosians: 8 axis units, 16 half-integer units, and 96
/// even coordinate permutations of (0, 1, 1/phi, phi)/2 with free signs.
fn binary_icosahedral() -> Vec<Quat> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut out = Vec::new();
    for c in 0..4 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 4];
            v[c] = s;
            out.push(Quat::new(v[0], v[1], v[2], v[3]));
        }
    }
    for sw in [0.5, -0.5] {
        for sx in [0.5, -0.5] {
            for sy in [0.5, -0.5] {
                for sz in [0.5, -0.5] {
                    out.push(Quat::new(sw, sx, sy, sz));
                }
            }
        }
    }
    let base = [0.0, 1.0, 1.0 / phi, phi];
    for perm in even_permutations() {
        for signs in 0..8u32 {
            let mut v = [0.0; 4];
            let mut bit = 0;
            for (slot, &src) in perm.iter().enumerate() {
                if src == 0 {
                    v[slot] = 0.0;
                } else {
                    let mag = base[src] / 2.0;
                    v[slot] = if signs >> bit & 1 == 1 { -mag } else { mag };
                    bit += 1;
                }
            }
            out.push(Quat::new(v[0], v[1], v[2], v[3]));
        }
    }
    out
}

fn even_permutations() -> Vec<[usize; 4]> {
    let mut perms = Vec::new();
    let mut items = [0usize, 1, 2, 3];
    heap(&mut items, 4, &mut perms);
    perms
        .into_iter()
        .filter(|p| {
            let mut inversions = 0;
            for a in 0..4 {
                for b in a + 1..4 {
                    if p[a] > p[b] {
                        inversions += 1;
                    }
                }
            }
            inversions % 2 == 0
        })
        .collect()
}

fn heap(items: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 1 {
        out.push(*items);
        return;
    }
    for i in 0..k {
        heap(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn key3(a: f64, b: f64, c: f64) -> (i64, i64, i64) {
    let r = |t: f64| (t * 1e6).round() as i64;
    (r(a), r(b), r(c))
}

#[test]
fn the_icosian_set_is_a_group_of_order_120() {
    let g = binary_icosahedral();
    assert_eq!(g.len(), 120);
    for q in &g {
        assert!((q.norm() - 1.0).abs() < 1e-12);
    }
    // Pairwise distinct.
    for (i, a) in g.iter().enumerate() {
        for b in g.iter().skip(i + 1) {
            assert!(a.dist(*b) > 1e-6);
        }
    }
    // Closed under multiplication.
    for a in &g {
        for b in &g {
            let prod = a.mul(*b);
            assert!(
                g.iter().any(|c| prod.dist(*c) < 1e-9),
                "product {prod:?} left the set"
            );
        }
    }
}

/// Every irreducible orbit has a representative inside the standard
/// icosian copy, so exhaustive pair enumeration classifies the orbits.
#[test]
fn exhaustive_icosian_enumeration_matches_the_solver_on_p235() {
    let p = fixture("p235.json");
    let g = binary_icosahedral();
    let mut classes: BTreeSet<(i64, i64, i64)> = BTreeSet::new();
    let mut solutions = 0usize;
    for a in &g {
        for b in &g {
            let pair = [*a, *b];
            let values = p.relator_values(&pair).unwrap();
            if values.iter().any(|r| r.dist(ONE) > 1e-9) {
                continue;
            }
            solutions += 1;
            if irreducibility_gap(&pair) < 1e-6 {
                continue;
            }
            classes.insert(key3(a.trace(), b.trace(), a.mul(*b).trace()));
        }
    }
    assert!(solutions > 0, "no solutions found in the finite group");
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let expected: BTreeSet<(i64, i64, i64)> = [
        key3(1.0, phi, 0.0),
        key3(1.0, 1.0 - phi, 0.0), // 2cos(3pi/5) = -1/phi
    ]
    .into_iter()
    .collect();
    assert_eq!(classes, expected);

    let report = solve_reps(&p, SolveOpts { starts: 10_000, ..Default::default() }).unwrap();
    assert_eq!(report.orbits.len(), 2);
    let solved: BTreeSet<(i64, i64, i64)> = report
        .orbits
        .iter()
        .map(|o| key3(o.traces[0], o.traces[1], o.traces[2]))
        .collect();
    assert_eq!(solved, classes);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
}

/// Counts admissible generator angles: the central element forces
/// theta_s = pi/3, theta_st = pi/2 and t^m = -1, and a strict spherical
/// triangle inequality decides which theta_t admit an irreducible pair.
fn angle_census(m: u32) -> Vec<f64> {
    let theta_s = std::f64::consts::PI / 3.0;
    let theta_st = std::f64::consts::PI / 2.0;
    let mut traces = Vec::new();
    for j in 0.. {
        let theta_t = (2.0 * j as f64 + 1.0) * std::f64::consts::PI / m as f64;
        if theta_t >= std::f64::consts::PI {
            break;
        }
        let lower = (theta_s - theta_t).abs();
        let upper = (theta_s + theta_t).min(2.0 * std::f64::consts::PI - theta_s - theta_t);
        if lower < theta_st && theta_st < upper {
            traces.push(2.0 * theta_t.cos());
        }
    }
    traces
}

#[test]
fn angle_census_matches_the_solver_on_both_brieskorn_presentations() {
    for (name, m) in [("p235.json", 5u32), ("p237.json", 7u32)] {
        let expected: Vec<f64> = angle_census(m);
        assert_eq!(expected.len(), 2, "census for m = {m}");

        let p = fixture(name);
        let report =
            solve_reps(&p, SolveOpts { starts: 10_000, ..Default::default() }).unwrap();
        assert_eq!(report.orbits.len(), 2, "{name}");
        for orbit in &report.orbits {
            // Trace order: s, t, st.
            assert!((orbit.traces[0] - 1.0).abs() < 1e-9, "tr s in {name}");
            assert!(orbit.traces[2].abs() < 1e-9, "tr st in {name}");
            assert!(
                expected.iter().any(|e| (orbit.traces[1] - e).abs() < 1e-6),
                "tr t = {} not predicted for {name}",
                orbit.traces[1]
            );
        }
        let seen: BTreeSet<i64> =
            report.orbits.iter().map(|o| (o.traces[1] * 1e6).round() as i64).collect();
        assert_eq!(seen.len(), 2, "distinct t traces in {name}");
    }
}

#[test]
fn the_trivial_group_presentation_has_no_irreducible_orbits() {
    let p = GroupPresentation::new(
        vec!["s".into(), "t".into()],
        vec![vec![(0, 1)], vec![(1, 1)]],
    )
    .unwrap();
    let report = solve_reps(&p, SolveOpts { starts: 2_000, ..Default::default() }).unwrap();
    assert_eq!(report.orbits.len(), 0);
}
