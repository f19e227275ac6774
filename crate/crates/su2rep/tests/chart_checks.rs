//! Local chart extraction: point charts at rigid orbits, manifold charts
//! on free strata, the fitted commutator section of the torus, and every
//! refusal path.

use kuranishi::vfc::perturb_and_count;
use kuranishi::Error;
use su2rep::quat::{I, J, ONE};
use su2rep::{
    local_chart, solve_reps, GroupPresentation, LocalChartOpts, Quat, RepPoint, SolveOpts,
};

fn fixture(name: &str) -> GroupPresentation {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    GroupPresentation::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rigid_orbits_get_point_charts_of_virtual_dimension_zero() {
    for name in ["p235.json", "p237.json"] {
        let p = fixture(name);
        let report =
            solve_reps(&p, SolveOpts { starts: 5_000, ..Default::default() }).unwrap();
        assert_eq!(report.orbits.len(), 2);
        for orbit in &report.orbits {
            let chart =
                local_chart(&p, &orbit.representative, 1, LocalChartOpts::default()).unwrap();
            assert_eq!(chart.n(), 0);
            assert_eq!(chart.m, 0);
            assert_eq!(chart.vdim(), 0);
            assert_eq!(chart.footprint.len(), 1);
            assert_eq!(chart.footprint[0].label, "orbit");
            let count = perturb_and_count(&chart, 1e-3, 0, 0.1).unwrap();
            assert!(count.certified());
            assert_eq!(count.value, 1);
        }
    }
}

#[test]
fn orientation_carries_through_to_the_chart_count() {
    let p = fixture("p235.json");
    let report = solve_reps(&p, SolveOpts { starts: 5_000, ..Default::default() }).unwrap();
    let rep = &report.orbits[0].representative;
    let chart = local_chart(&p, rep, -1, LocalChartOpts::default()).unwrap();
    let count = perturb_and_count(&chart, 1e-3, 0, 0.1).unwrap();
    assert_eq!(count.value, -1);
}

#[test]
fn the_trivial_representation_of_a_homology_sphere_is_rigid() {
    let p = fixture("p235.json");
    let rep = RepPoint { q: vec![ONE, ONE] };
    // Stabilizer directions require an explicit override.
    let refused = local_chart(&p, &rep, 1, LocalChartOpts::default()).unwrap_err();
    assert!(matches!(refused, Error::Unsupported(_)), "{refused}");

    let opts = LocalChartOpts { allow_reducible: true, ..Default::default() };
    let chart = local_chart(&p, &rep, 1, opts).unwrap();
    assert_eq!(chart.n(), 0);
    assert_eq!(chart.m, 0);
    assert_eq!(chart.vdim(), 0);
}

#[test]
fn a_free_group_stratum_is_a_manifold_chart_of_dimension_3g_minus_3() {
    let free = GroupPresentation::new(vec!["s".into(), "t".into()], vec![]).unwrap();
    let rep = RepPoint { q: vec![I, J] };

    let refused = local_chart(&free, &rep, 1, LocalChartOpts::default()).unwrap_err();
    assert!(matches!(refused, Error::Unsupported(_)), "{refused}");

    let opts = LocalChartOpts { allow_positive_dim: true, ..Default::default() };
    let chart = local_chart(&free, &rep, 1, opts).unwrap();
    let g = free.g() as i64;
    assert_eq!(chart.n(), 3);
    assert_eq!(chart.m, 0);
    assert_eq!(chart.vdim(), 3 * g - 3);
    assert_eq!(chart.footprint[0].label, "origin");
    assert_eq!(chart.section.coords.iter().map(Vec::len).sum::<usize>(), 0);
}

/// At the trivial representation of the one-relator commutator
/// presentation the fitted section must start with the cross product:
/// output a picks up coefficient +-2 on u_b v_c with (a, b, c) an even or
/// odd permutation, since Im([q_u, q_v]) = 2 u x v + cubic corrections.
#[test]
fn the_torus_commutator_chart_recovers_the_cross_product_section() {
    let torus = GroupPresentation::new(
        vec!["s".into(), "t".into()],
        vec![vec![(0, 1), (1, 1), (0, -1), (1, -1)]],
    )
    .unwrap();
    let rep = RepPoint { q: vec![ONE, ONE] };
    // A least-squares fit truncated at order 3 aliases the quartic tail
    // -(|u|^2 + |v|^2)(u x v) onto the quadratic monomials at relative
    // size O(radius^2), so the coefficients are read off at a radius
    // where that bias sits well below the tolerance.
    let opts = LocalChartOpts {
        radius: 0.02,
        allow_reducible: true,
        allow_positive_dim: true,
        ..Default::default()
    };
    let chart = local_chart(&torus, &rep, 1, opts).unwrap();
    assert_eq!(chart.n(), 6);
    assert_eq!(chart.m, 3);
    assert_eq!(chart.vdim(), 3);
    assert_eq!(chart.footprint[0].label, "origin");
    assert_eq!(chart.footprint[0].x, vec![0.0; 6]);
    assert!(chart.notes.iter().any(|n| n.contains("fitted")), "{:?}", chart.notes);

    // Quadratic coefficients of output a on x_b x_{3+c}: 2 eps_{abc}.
    let coeff = |out: usize, b: usize, c: usize| -> f64 {
        let mut exp = vec![0u32; 6];
        exp[b] += 1;
        exp[3 + c] += 1;
        chart.section.coords[out]
            .iter()
            .find(|t| t.exp == exp)
            .map(|t| t.c)
            .unwrap_or(0.0)
    };
    let eps = |a: usize, b: usize, c: usize| -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let expected = 2.0 * eps(a, b, c);
                let got = coeff(a, b, c);
                assert!(
                    (got - expected).abs() < 5e-3,
                    "coefficient ({a}, {b}, {c}): got {got}, expected {expected}"
                );
            }
        }
    }
}

#[test]
fn balanced_positive_dimensional_strata_are_refused() {
    // Doubling the commutator relator balances the presentation while
    // keeping a positive-dimensional reducible stratum.
    let doubled = GroupPresentation::new(
        vec!["s".into(), "t".into()],
        vec![
            vec![(0, 1), (1, 1), (0, -1), (1, -1)],
            vec![(0, 1), (1, 1), (0, -1), (1, -1)],
        ],
    )
    .unwrap();
    let theta = 0.7;
    let psi = 1.1;
    let rep = RepPoint {
        q: vec![Quat::exp([theta, 0.0, 0.0]), Quat::exp([psi, 0.0, 0.0])],
    };
    let opts = LocalChartOpts {
        allow_reducible: true,
        allow_positive_dim: true,
        ..Default::default()
    };
    let err = local_chart(&doubled, &rep, 1, opts).unwrap_err();
    match err {
        Error::Unsupported(msg) => assert!(msg.contains("balanced"), "{msg}"),
        other => panic!("expected Unsupported, got {other}"),
    }
}

#[test]
fn non_representations_are_rejected_before_charting() {
    let p = fixture("p235.json");
    let rep = RepPoint { q: vec![I, J] };
    let err = local_chart(&p, &rep, 1, LocalChartOpts::default()).unwrap_err();
    assert!(err.to_string().contains("residual"), "{err}");
}

#[test]
fn chart_options_are_validated() {
    let p = fixture("p235.json");
    let rep = RepPoint { q: vec![ONE, ONE] };
    let bad_radius = LocalChartOpts { radius: 0.0, ..Default::default() };
    assert!(local_chart(&p, &rep, 1, bad_radius).is_err());
    let bad_order = LocalChartOpts { order: 0, ..Default::default() };
    assert!(local_chart(&p, &rep, 1, bad_order).is_err());
}
