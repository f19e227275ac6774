//! Acceptance gate: one test per criterion. Each test drives the shipped
//! binary or the library crates at the stated tolerances, enforces its
//! runtime budget, and prints a single pass line.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use kuranishi::chart::SymTensor;
use kuranishi::poly::Term;
use kuranishi::tangent::{check_embedding, cone};
use kuranishi::vfc::{deformation_sweep, intersection_number, perturb_and_count, CountOpts};
use kuranishi::{
    BoxUnion, ChartMorphism, FootprintPoint, KuranishiAtlas, KuranishiChart, LinfChart, MatrixMap,
    PolyMap, StrictMorphism,
};
use su2rep::quat::{I, J, ONE};
use su2rep::solve::{fingerprint_key, irreducibility_gap, solve_from_starts, start_points};
use su2rep::{
    local_chart, solve_reps, twisted_cohomology, GroupPresentation, LocalChartOpts, Quat, RepPoint,
    SolveOpts,
};

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn fixture_value(name: &str) -> Value {
    serde_json::from_str(&fixture(name)).unwrap()
}

fn presentation(name: &str) -> GroupPresentation {
    GroupPresentation::from_json(&fixture(name)).unwrap()
}

fn chart_fixture(name: &str) -> KuranishiChart {
    KuranishiChart::from_json(&fixture(name)).unwrap()
}

/// Runs the shipped binary with a capped worker pool.
fn run_cli(args: &[&str], threads: &str) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kuranishi"))
        .args(args)
        .env("KURANISHI_THREADS", threads)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn millionths(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

// Criterion 1. The golden ratio generates the binary icosahedral group: 8
// axis units, 16 half-integer points, and 96 even signed permutations of
// (0, 1, 1/phi, phi)/2.
fn binary_icosahedral() -> Vec<Quat> {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let base = [0.0, 0.5, 0.5 / phi, 0.5 * phi];
    let mut out = Vec::new();
    for axis in 0..4 {
        for sign in [1.0, -1.0] {
            let mut c = [0.0; 4];
            c[axis] = sign;
            out.push(Quat::new(c[0], c[1], c[2], c[3]));
        }
    }
    for mask in 0..16u32 {
        let s = |bit: u32| if mask >> bit & 1 == 0 { 0.5 } else { -0.5 };
        out.push(Quat::new(s(0), s(1), s(2), s(3)));
    }
    for perm in even_permutations() {
        for mask in 0..8u32 {
            let mut c = [0.0; 4];
            for (slot, &value_index) in perm.iter().enumerate() {
                let sign = if value_index > 0 && mask >> (value_index - 1) & 1 == 1 {
                    -1.0
                } else {
                    1.0
                };
                c[slot] = sign * base[value_index];
            }
            out.push(Quat::new(c[0], c[1], c[2], c[3]));
        }
    }
    out
}

/// The 12 even permutations of four slots, by inversion count.
fn even_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (0..i).all(|j| p[i] != p[j]));
                    if !distinct {
                        continue;
                    }
                    let inversions: usize =
                        (0..4).map(|i| (0..i).filter(|&j| p[j] > p[i]).count()).sum();
                    if inversions % 2 == 0 {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn quat_key(q: Quat) -> [i64; 4] {
    [millionths(q.w), millionths(q.x), millionths(q.y), millionths(q.z)]
}

#[test]
fn criterion_01_poincare_sphere_count_matches_the_exhaustive_oracle() {
    let p = presentation("p235.json");

    // Exhaustive oracle: the 120-element group is self-validating, then all
    // 120^2 generator pairs are filtered by the relators.
    let group = binary_icosahedral();
    assert_eq!(group.len(), 120);
    let keys: BTreeSet<[i64; 4]> = group.iter().map(|&q| quat_key(q)).collect();
    assert_eq!(keys.len(), 120, "oracle elements are distinct");
    for &g in &group {
        assert!((g.norm() - 1.0).abs() <= 1e-12);
        for &h in &group {
            assert!(keys.contains(&quat_key(g.mul(h))), "oracle closed under product");
        }
    }
    let mut oracle = BTreeSet::new();
    for &a in &group {
        for &b in &group {
            let q = [a, b];
            // A representation sends every relator to +1, not merely to the
            // center; the sign-twisted pairs must stay out.
            let values = p.relator_values(&q).unwrap();
            if values.iter().all(|r| r.dist(ONE) <= 1e-9) && irreducibility_gap(&q) >= 1e-6 {
                oracle.insert(fingerprint_key(&p, &q).unwrap());
            }
        }
    }
    assert_eq!(oracle.len(), 2, "oracle finds two orbits: {oracle:?}");

    // The shipped binary, single-threaded, inside the runtime budget.
    let path = fixture_path("p235.json");
    let clock = Instant::now();
    let (code, stdout, stderr) = run_cli(&["casson", path.to_str().unwrap(), "--starts", "100000"], "1");
    let elapsed = clock.elapsed();
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["N"], json!(2));
    assert_eq!(report["lambda_abs"], json!(1));
    assert_eq!(report["warnings"], json!([]));
    let reported: BTreeSet<Vec<i64>> = report["fingerprints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_array().unwrap().iter().map(|v| millionths(v.as_f64().unwrap())).collect())
        .collect();
    assert_eq!(reported, oracle, "solver orbits match the oracle");

    // Stability across start sequences.
    let mut fingerprints = Vec::new();
    for seed in [0, 1, 2] {
        let report = solve_reps(&p, SolveOpts { starts: 100_000, seed, ..Default::default() }).unwrap();
        fingerprints.push(report.orbits.iter().map(|o| o.fingerprint.clone()).collect::<Vec<_>>());
    }
    assert_eq!(fingerprints[0], fingerprints[1]);
    assert_eq!(fingerprints[0], fingerprints[2]);

    println!(
        "[PASS] criterion 1: N = 2, |lambda| = 1, oracle match, seeds {{0,1,2}} stable, {:.1}s single-threaded",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_02_dimension_identities_hold_exactly() {
    let clock = Instant::now();

    // Free group on two generators: the irreducible stratum has dimension
    // 3g - 3 = 3, as a cohomology rank and as a chart dimension.
    let free = GroupPresentation::new(vec!["a".into(), "b".into()], vec![]).unwrap();
    let point = RepPoint { q: vec![I, J] };
    let h = twisted_cohomology(&free, &point.q).unwrap();
    assert_eq!(h.h1, 3);
    assert_eq!(h.h1, 3 * free.g() - 3);
    let opts = LocalChartOpts { allow_positive_dim: true, ..Default::default() };
    let chart = local_chart(&free, &point, 1, opts).unwrap();
    assert_eq!(chart.n(), 3);

    // Every local chart over a homology sphere presentation is rigid.
    let mut checked = 0usize;
    for name in ["p235.json", "p237.json"] {
        let p = presentation(name);
        let solved = solve_reps(&p, SolveOpts { starts: 2_000, ..Default::default() }).unwrap();
        assert!(!solved.orbits.is_empty(), "{name}: no orbits");
        for orbit in &solved.orbits {
            let chart = local_chart(&p, &orbit.representative, 1, LocalChartOpts::default()).unwrap();
            assert_eq!(chart.vdim(), 0, "{name}");
            checked += 1;
        }
        let trivial = RepPoint { q: vec![ONE; p.g()] };
        let opts = LocalChartOpts { allow_reducible: true, ..Default::default() };
        let chart = local_chart(&p, &trivial, 1, opts).unwrap();
        assert_eq!(chart.vdim(), 0, "{name}: trivial representation");
        checked += 1;
    }

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 2: h1 = 3 = 3g-3 for the free chart, vdim = 0 on {checked} local charts, {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_03_virtual_count_suite_is_certified_and_invariant() {
    let clock = Instant::now();
    let cases =
        [("line_chart.json", 1i64), ("square_chart.json", 0), ("cubic_chart.json", 1), ("paraboloid_chart.json", 0)];
    for (name, want) in cases {
        let chart = chart_fixture(name);
        for eps in [1e-3, 1e-4] {
            for seed in 0..20u64 {
                let count = perturb_and_count(&chart, eps, seed, 0.1)
                    .unwrap_or_else(|e| panic!("{name} eps={eps} seed={seed}: {e}"));
                assert_eq!(count.value, want, "{name} eps={eps} seed={seed}");
                assert!(count.certified(), "{name} eps={eps} seed={seed}");
            }
        }
    }

    // The documented report shape for a chart count.
    let path = fixture_path("line_chart.json");
    let (code, stdout, _) = run_cli(&["count", path.to_str().unwrap()], "0");
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["value"], json!(1));
    assert_eq!(report["certified"], json!(true));

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 3: x -> +1, x^2 -> 0, x^3-x -> +1, 2D -> 0 over 20 seeds and eps in {{1e-3, 1e-4}}, {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_04_deformation_invariance_across_the_birth_death() {
    let clock = Instant::now();
    let family =
        kuranishi::vfc::FamilyChart::from_json(&fixture("family_birth_death.json")).unwrap();
    let sweep = deformation_sweep(&family, 11, CountOpts::default()).unwrap();
    assert!(sweep.invariant);
    assert_eq!(sweep.slices.len(), 11);
    assert!(sweep.slices.iter().any(|s| s.t == 0.5), "grid hits the birth/death parameter");
    for slice in &sweep.slices {
        let count = slice.count.as_ref().unwrap_or_else(|| panic!("t = {}: no count", slice.t));
        assert_eq!(count.value, 0, "t = {}", slice.t);
        assert!(count.certified(), "t = {}", slice.t);
    }
    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 4: count 0 constant over the 11-point grid across t = 1/2, {:.2}s",
        elapsed.as_secs_f64()
    );
}

fn fiber_fixture(name: &str) -> (KuranishiChart, PolyMap) {
    let v = fixture_value(name);
    let chart = KuranishiChart::from_json(&v["chart"].to_string()).unwrap();
    let map: PolyMap = serde_json::from_value(v["map"].clone()).unwrap();
    (chart, map.validated().unwrap())
}

#[test]
fn criterion_05_intersection_numbers_reduce_to_signed_counts() {
    let clock = Instant::now();
    let (line, g_line) = fiber_fixture("fiber_axis.json");
    let (diagonal, g_diagonal) = fiber_fixture("fiber_diagonal.json");
    let (parabola, g_parabola) = fiber_fixture("fiber_parabola.json");
    let opts = CountOpts::default();

    let line_diagonal = intersection_number(&line, &g_line, &diagonal, &g_diagonal, opts).unwrap();
    assert_eq!(line_diagonal.abs(), 1);
    let line_parabola = intersection_number(&line, &g_line, &parabola, &g_parabola, opts).unwrap();
    assert_eq!(line_parabola, 0);

    let mut reversed = line.clone();
    reversed.orientation = -1;
    let flipped = intersection_number(&reversed, &g_line, &diagonal, &g_diagonal, opts).unwrap();
    assert_eq!(flipped, -line_diagonal);

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 5: line vs diagonal {line_diagonal:+}, line vs parabola 0, sign flips on reversal, {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_06_atlas_validator_names_each_corrupted_condition() {
    let clock = Instant::now();
    let clean = KuranishiAtlas::from_json(&fixture("two_chart_atlas.json")).unwrap();
    let report = clean.check();
    assert!(report.passed(), "failed: {:?}", report.failed_conditions());

    // Six single-datum corruptions, one per condition family. The last one
    // needs three charts for a homotopy loop whose own identity stays intact.
    let corruptions: [(&str, &str, fn(&mut Value)); 6] = [
        ("two_chart_atlas.json", "dimension A", |v| v["vdim"] = json!(1)),
        ("two_chart_atlas.json", "transition A->B domain", |v| {
            v["transitions"][0]["f"]["coords"][0] = json!([{ "exp": [1], "c": 1.0 }, { "exp": [0], "c": 1.0 }]);
        }),
        ("two_chart_atlas.json", "transition A->B section", |v| {
            v["transitions"][0]["fhat"]["coords"][0] = json!([{ "exp": [0], "c": 1.0 }]);
        }),
        ("two_chart_atlas.json", "transition A->B footprint", |v| {
            v["footprint"][0]["coords"]["B"] = json!([-1.0]);
        }),
        ("two_chart_atlas.json", "homotopy (A, B, A) identity", |v| {
            v["lambdas"][0]["lam"]["coords"][0] = json!([{ "exp": [2], "c": -1.0 }, { "exp": [0], "c": 0.1 }]);
        }),
        ("three_chart_atlas.json", "cocycle (A, B, C, A)", |v| {
            v["lambdas"][1]["lam"]["coords"][0] = json!([{ "exp": [2], "c": -1.0 }, { "exp": [0], "c": 0.1 }]);
        }),
    ];
    for (file, expected, corrupt) in corruptions {
        let mut v = fixture_value(file);
        corrupt(&mut v);
        let atlas = KuranishiAtlas::from_json(&v.to_string()).unwrap();
        let report = atlas.check();
        let failed = report.failed_conditions();
        assert!(failed.contains(&expected), "expected '{expected}', failed: {failed:?}");
    }

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 6: shipped atlas passes, 6 corruptions each detected by name, {:.2}s",
        elapsed.as_secs_f64()
    );
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform draw on [-1, 1).
    fn unit(&mut self) -> f64 {
        ((self.next() >> 11) as f64 + 0.5) / (1u64 << 53) as f64 * 2.0 - 1.0
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

/// Bracket chart whose section is a gradient by construction: a symmetric
/// scalar per degree-(k+1) multi-index, contracted against the inverse of a
/// diagonally dominant pairing.
fn random_bracket_chart(n: usize, arities: &[u32], rng: &mut SplitMix) -> LinfChart {
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

    let mut brackets = std::collections::BTreeMap::new();
    for &k in arities {
        let mut scalar: std::collections::BTreeMap<Vec<u32>, f64> = std::collections::BTreeMap::new();
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
fn criterion_07_potentials_integrate_random_bracket_sections() {
    let clock = Instant::now();
    let mut rng = SplitMix(17);
    for case in 0..100u64 {
        let n = 1 + (case % 3) as usize;
        let arities: &[u32] = match case % 4 {
            0 => &[2],
            1 => &[2, 3],
            2 => &[3, 4],
            _ => &[2, 3, 4],
        };
        let chart = random_bracket_chart(n, arities, &mut rng);
        let pot = chart.potential(None).unwrap();
        assert!(pot.gradient_matches_section, "case {case}: residual {:.3e}", pot.residual);
        assert!(pot.residual <= 1e-9, "case {case}: residual {:.3e}", pot.residual);
    }
    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 7: gradient identity at 1e-9 on 100 random bracket charts, {:.2}s",
        elapsed.as_secs_f64()
    );
}

fn splitmix_f64(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    ((z >> 11) as f64 + 0.5) / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn random_orthogonal(n: usize, state: &mut u64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| splitmix_f64(state));
    g.qr().q()
}

fn linear_map(mat: &DMatrix<f64>) -> PolyMap {
    let (rows, cols) = mat.shape();
    let coords = (0..rows)
        .map(|i| {
            (0..cols)
                .filter(|&j| mat[(i, j)] != 0.0)
                .map(|j| {
                    let mut exp = vec![0u32; cols];
                    exp[j] = 1;
                    Term { exp, c: mat[(i, j)] }
                })
                .collect()
        })
        .collect();
    PolyMap::new(cols, rows, coords).unwrap()
}

/// Random valid cone with prescribed homology ranks (t0, t1, t2) and
/// internal ranks (r0, r1): orthogonal conjugates of fixed projectors keep
/// the composite exactly zero.
fn random_cone_data(
    t: (usize, usize, usize),
    r: (usize, usize),
    m_split: usize,
    state: &mut u64,
) -> (KuranishiChart, KuranishiChart, ChartMorphism) {
    let (t0, t1, t2) = t;
    let (r0, r1) = r;
    let n_a = t0 + r0;
    let middle = r0 + t1 + r1;
    let m_b = r1 + t2;
    let m_a = m_split.min(middle);
    let n_b = middle - m_a;

    let u = random_orthogonal(middle, state);
    let v = random_orthogonal(n_a, state);
    let w = random_orthogonal(m_b, state);
    let p0 = DMatrix::from_fn(middle, n_a, |i, j| if i < r0 && j == t0 + i { 1.0 } else { 0.0 });
    let p1 =
        DMatrix::from_fn(m_b, middle, |i, j| if i < r1 && j == r0 + t1 + i { 1.0 } else { 0.0 });
    let d0 = &u * p0 * v.transpose();
    let d1 = &w * p1 * u.transpose();

    let s_a = linear_map(&d0.rows(0, m_a).into_owned());
    let f = linear_map(&d0.rows(m_a, n_b).into_owned());
    let fhat_mat = d1.columns(0, m_a).into_owned();
    let s_b = linear_map(&(-d1.columns(m_a, n_b).into_owned()));

    let cube = |n: usize| {
        if n == 0 {
            BoxUnion::point()
        } else {
            BoxUnion::cube(&vec![-1.0; n], &vec![1.0; n]).unwrap()
        }
    };
    let origin = |n: usize| vec![FootprintPoint { label: "o".to_string(), x: vec![0.0; n] }];
    let a = KuranishiChart::new("src", cube(n_a), m_a, s_a, 1, origin(n_a)).unwrap();
    let b = KuranishiChart::new("dst", cube(n_b), m_b, s_b, 1, origin(n_b)).unwrap();
    let fhat = MatrixMap::constant(n_a, &fhat_mat);
    (a, b, ChartMorphism::new("src", "dst", f, fhat))
}

#[test]
fn criterion_08_cone_euler_identity_and_embedding_checks() {
    let clock = Instant::now();
    let mut state = 2026u64;
    for case in 0..100usize {
        let t0 = case % 3;
        let t1 = (case / 3) % 3;
        let t2 = (case / 9) % 2;
        let r0 = 1 + case % 2;
        let r1 = (case / 2) % 2;
        let m_split = case % 4;
        let (a, b, m) = random_cone_data((t0, t1, t2), (r0, r1), m_split, &mut state);
        let complex = cone(&a, &b, &m).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let ranks = complex.ranks_at(&vec![0.0; a.n()]).unwrap();
        assert_eq!((ranks.t0, ranks.t1, ranks.t2), (t0, t1, t2), "case {case}");
        let term_a = a.n() as i64;
        let term_b = (b.n() + a.m) as i64;
        let term_c = b.m as i64;
        assert_eq!(
            ranks.t0 as i64 - ranks.t1 as i64 + ranks.t2 as i64,
            term_a - term_b + term_c,
            "case {case}: Euler identity"
        );
    }

    // Embedding checker: the canonical inclusion passes, a fold does not.
    let cubic = chart_fixture("cubic_chart.json");
    let (x, y, h) = StrictMorphism::inclusion(&cubic, "ambient").unwrap();
    let report = check_embedding(&h, &x, &y);
    assert!(report.passed(), "failed: {:?}", report.failed_conditions());

    let mut folded = h.clone();
    folded.maps.insert(
        cubic.id.clone(),
        ChartMorphism::new(
            cubic.id.clone(),
            "ambient",
            PolyMap::new(1, 1, vec![vec![Term { exp: vec![2], c: 1.0 }]]).unwrap(),
            MatrixMap::zero(0, 1, 1),
        ),
    );
    let report = check_embedding(&folded, &x, &y);
    let failed = report.failed_conditions();
    assert!(failed.contains(&"embedding separation"), "failed: {failed:?}");

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 8: Euler identity exact on 100 random cones, embedding pass/fail as expected, {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_09_twisted_cohomology_identities() {
    let clock = Instant::now();
    for name in ["p235.json", "p237.json"] {
        let p = presentation(name);
        let mut points = vec![RepPoint { q: vec![ONE; p.g()] }];
        let solved = solve_reps(&p, SolveOpts { starts: 2_000, ..Default::default() }).unwrap();
        points.extend(solved.orbits.iter().map(|o| o.representative.clone()));
        assert_eq!(points.len(), 3, "{name}: trivial plus two orbits");

        for (i, point) in points.iter().enumerate() {
            let h = twisted_cohomology(&p, &point.q).unwrap();
            assert_eq!(
                h.h0 as i64 - h.h1 as i64 + h.h2_raw as i64,
                3,
                "{name} point {i}: Euler identity"
            );
            if i == 0 {
                assert_eq!((h.h0, h.h1, h.h2), (3, 0, 0), "{name}: trivial representation");
            } else if name == "p235.json" {
                assert_eq!((h.h0, h.h1, h.h2), (0, 0, 0), "{name} orbit {i}");
            }
        }
    }
    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 9: Euler = 3 on balanced fixtures, (3,0,0) trivial, (0,0,0) at both orbits, {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_10_robustness_under_tietze_moves_and_conjugation() {
    let clock = Instant::now();
    let p = presentation("p235.json");
    let opts = SolveOpts { starts: 20_000, ..Default::default() };
    let base = solve_reps(&p, opts).unwrap();

    // One Tietze move: multiply the second relator by the first.
    let mut relators = p.relators.clone();
    let mut moved = relators[1].clone();
    moved.extend(relators[0].iter().copied());
    relators[1] = moved;
    let q = GroupPresentation::new(p.generators.clone(), relators).unwrap();
    let after = solve_reps(&q, opts).unwrap();
    assert_eq!(base.orbits.len(), after.orbits.len());
    for (a, b) in base.orbits.iter().zip(&after.orbits) {
        assert_eq!(a.fingerprint.len(), b.fingerprint.len());
        for (fa, fb) in a.fingerprint.iter().zip(&b.fingerprint) {
            assert!((fa - fb).abs() <= 1e-6 + 1e-12, "{fa} vs {fb}");
        }
    }

    // Conjugating every start point preserves the orbit list exactly.
    let starts = start_points(p.g(), 20_000, 0);
    let u = Quat::exp([0.31, -0.44, 0.27]);
    let conjugated: Vec<Vec<Quat>> = starts
        .iter()
        .map(|tuple| tuple.iter().map(|&g| u.mul(g).mul(u.conj())).collect())
        .collect();
    let plain = solve_from_starts(&p, &starts).unwrap();
    let twisted = solve_from_starts(&p, &conjugated).unwrap();
    let list = |r: &su2rep::SolveReport| {
        r.orbits.iter().map(|o| o.fingerprint.clone()).collect::<Vec<_>>()
    };
    assert_eq!(list(&plain), list(&twisted));
    assert_eq!(plain.orbits.len(), base.orbits.len());

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 10: Tietze move and start conjugation preserve the orbit list, {:.2}s",
        elapsed.as_secs_f64()
    );
}
