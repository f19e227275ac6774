//! Three-term tangent complexes of chart morphisms, their cohomology ranks,
//! transition maps between them, and the embedding test.
//!
//! The complex of a morphism (f, fhat) from a chart with n variables and m
//! obstruction directions into one with N variables and M directions is
//!
//!   R^n --d0--> R^(m+N) --d1--> R^M
//!
//! with d0 = (ds_source; df) stacked and d1 = (fhat | -ds_target o f),
//! evaluated at footprint points, where d1 . d0 = 0.

use nalgebra::{DMatrix, SVD};

use crate::atlas::{ChartMorphism, KuranishiAtlas, StrictMorphism};
use crate::chart::KuranishiChart;
use crate::mat::{jacobian_matrix, MatrixMap};
use crate::poly::PolyMap;
use crate::report::CheckReport;
use crate::tol;
use crate::{Error, Result};

/// Cohomology dimensions of a three-term complex at a point. `warning` is
/// set when a singular value falls near the rank threshold, making the
/// integer ranks unreliable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeRanks {
    pub t0: usize,
    pub t1: usize,
    pub t2: usize,
    pub warning: bool,
}

/// Singular values plus full right singular vectors (as rows), padding the
/// matrix with zero rows when it is wider than tall so the kernel is
/// spanned.
fn padded_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (nr, nc) = m.shape();
    if nc == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let padded = if nr >= nc {
        m.clone()
    } else {
        let mut p = DMatrix::zeros(nc, nc);
        p.view_mut((0, 0), (nr, nc)).copy_from(m);
        p
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    (svd.singular_values.iter().copied().collect(), vt)
}

fn near_threshold(sigma: f64, tolerance: f64) -> bool {
    sigma > tolerance / 10.0 && sigma < tolerance * 10.0
}

/// Numerical rank at the given singular-value threshold, with a warning
/// flag when any singular value lies within a decade of the threshold.
pub fn matrix_rank(m: &DMatrix<f64>, tolerance: f64) -> (usize, bool) {
    let (sigmas, _) = padded_svd(m);
    let rank = sigmas.iter().filter(|&&s| s > tolerance).count();
    let warning = sigmas.iter().any(|&s| near_threshold(s, tolerance));
    (rank, warning)
}

/// Orthonormal basis of the kernel, as matrix columns.
pub fn kernel_basis(m: &DMatrix<f64>, tolerance: f64) -> DMatrix<f64> {
    let (sigmas, vt) = padded_svd(m);
    let nc = m.ncols();
    let cols: Vec<usize> = (0..nc).filter(|&i| sigmas[i] <= tolerance).collect();
    let mut basis = DMatrix::zeros(nc, cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        basis.set_column(dst, &vt.row(src).transpose());
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of the column space.
pub fn cokernel_basis(m: &DMatrix<f64>, tolerance: f64) -> DMatrix<f64> {
    kernel_basis(&m.transpose(), tolerance)
}

/// Cohomology ranks of `R^a --d0--> R^b --d1--> R^c` from two numeric
/// differentials. Fails when kernel of d1 cannot contain the image of d0,
/// which means the pair is not a complex at this tolerance.
pub fn three_term_ranks(d0: &DMatrix<f64>, d1: &DMatrix<f64>, tolerance: f64) -> Result<ConeRanks> {
    let (rows0, cols0) = d0.shape();
    let (rows1, cols1) = d1.shape();
    if cols1 != rows0 {
        return Err(Error::dim("complex middle dimension", rows0, cols1));
    }
    let (r0, w0) = matrix_rank(d0, tolerance);
    let (r1, w1) = matrix_rank(d1, tolerance);
    let ker1 = rows0 - r1.min(rows0);
    if ker1 < r0 {
        return Err(Error::Singular(format!(
            "kernel of the second differential ({ker1}) is smaller than the rank of the first ({r0}); not a complex at tolerance {tolerance:.1e}"
        )));
    }
    Ok(ConeRanks {
        t0: cols0 - r0,
        t1: ker1 - r0,
        t2: rows1 - r1,
        warning: w0 || w1,
    })
}

/// Orthonormal harmonic representatives of the three cohomology spaces.
#[derive(Debug, Clone)]
pub struct HarmonicBases {
    pub h0: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
}

/// Harmonic bases of a three-term complex: kernel of d0, kernel of d1
/// orthogonal to the image of d0, complement of the image of d1.
pub fn harmonic_bases(d0: &DMatrix<f64>, d1: &DMatrix<f64>, tolerance: f64) -> HarmonicBases {
    let b = d0.nrows();
    let mut stacked = DMatrix::zeros(d1.nrows() + d0.ncols(), b);
    stacked.view_mut((0, 0), (d1.nrows(), b)).copy_from(d1);
    stacked
        .view_mut((d1.nrows(), 0), (d0.ncols(), b))
        .copy_from(&d0.transpose());
    HarmonicBases {
        h0: kernel_basis(d0, tolerance),
        h1: kernel_basis(&stacked, tolerance),
        h2: cokernel_basis(d1, tolerance),
    }
}

fn vstack(top: &MatrixMap, bottom: &MatrixMap) -> Result<MatrixMap> {
    if top.cols != bottom.cols {
        return Err(Error::dim("stacked matrix columns", top.cols, bottom.cols));
    }
    MatrixMap::new(top.rows + bottom.rows, top.cols, PolyMap::stack(&[&top.map, &bottom.map])?)
}

fn hstack(left: &MatrixMap, right: &MatrixMap) -> Result<MatrixMap> {
    if left.rows != right.rows {
        return Err(Error::dim("joined matrix rows", left.rows, right.rows));
    }
    if left.map.n_in != right.map.n_in {
        return Err(Error::dim("joined matrix variables", left.map.n_in, right.map.n_in));
    }
    let mut coords = Vec::with_capacity(left.rows * (left.cols + right.cols));
    for r in 0..left.rows {
        for c in 0..left.cols {
            coords.push(left.map.coords[r * left.cols + c].clone());
        }
        for c in 0..right.cols {
            coords.push(right.map.coords[r * right.cols + c].clone());
        }
    }
    MatrixMap::new(
        left.rows,
        left.cols + right.cols,
        PolyMap::new(left.map.n_in, coords.len(), coords)?,
    )
}

/// Assembles four polynomial blocks into one matrix map.
fn block2x2(tl: &MatrixMap, tr: &MatrixMap, bl: &MatrixMap, br: &MatrixMap) -> Result<MatrixMap> {
    vstack(&hstack(tl, tr)?, &hstack(bl, br)?)
}

/// The mapping-cone tangent complex of a chart morphism, with both
/// differentials expressed over the source chart coordinates.
#[derive(Debug, Clone)]
pub struct TangentCone {
    pub source: String,
    pub target: String,
    pub d0: MatrixMap,
    pub d1: MatrixMap,
}

/// Builds the tangent complex of a morphism between two charts.
pub fn cone(a: &KuranishiChart, b: &KuranishiChart, m: &ChartMorphism) -> Result<TangentCone> {
    if m.f.n_in != a.n() || m.f.n_out != b.n() {
        return Err(Error::dim("cone morphism variables", a.n(), m.f.n_in));
    }
    if m.fhat.rows != b.m || m.fhat.cols != a.m || m.fhat.n_in() != a.n() {
        return Err(Error::dim("cone bundle map", b.m * a.m, m.fhat.rows * m.fhat.cols));
    }
    let ds_a = jacobian_matrix(&a.section);
    let df = jacobian_matrix(&m.f);
    let d0 = vstack(&ds_a, &df)?;
    let ds_b_f = jacobian_matrix(&b.section).pullback(&m.f)?;
    let d1 = hstack(&m.fhat, &ds_b_f.scale(-1.0))?;
    let cone = TangentCone {
        source: a.id.clone(),
        target: b.id.clone(),
        d0,
        d1,
    };
    for p in &a.footprint {
        let r = cone.composite_residual_at(&p.x);
        if r > tol::POINTWISE {
            return Err(Error::invalid(
                "$",
                format!(
                    "differentials fail to compose to zero at footprint '{}' of chart '{}': residual {r:.3e}",
                    p.label, a.id
                ),
            ));
        }
    }
    Ok(cone)
}

impl TangentCone {
    /// Residual of d1 . d0 at a source point; zero for a true morphism
    /// evaluated at a footprint point.
    pub fn composite_residual_at(&self, x: &[f64]) -> f64 {
        let composite = self.d1.eval(x) * self.d0.eval(x);
        composite.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Cohomology ranks at a source point.
    pub fn ranks_at(&self, x: &[f64]) -> Result<ConeRanks> {
        three_term_ranks(&self.d0.eval(x), &self.d1.eval(x), tol::SVD_RANK)
    }

    /// Harmonic bases at a source point.
    pub fn bases_at(&self, x: &[f64]) -> HarmonicBases {
        harmonic_bases(&self.d0.eval(x), &self.d1.eval(x), tol::SVD_RANK)
    }
}

/// Chain map between the tangent complexes of h_i and h_j along a source
/// transition (i, j), expressed over chart-i coordinates.
#[derive(Debug, Clone)]
pub struct ConeTransition {
    pub i: String,
    pub j: String,
    pub l0: MatrixMap,
    pub l1: MatrixMap,
    pub l2: MatrixMap,
}

/// Builds the chain map induced by a source transition under a strict
/// morphism. Construction is purely structural; commutation with the
/// differentials is a separate check so that corrupted data can be
/// diagnosed downstream.
pub fn cone_transition(
    x: &KuranishiAtlas,
    h: &StrictMorphism,
    y: &KuranishiAtlas,
    i: &str,
    j: &str,
) -> Result<ConeTransition> {
    let ci = x.chart(i)?;
    let cj = x.chart(j)?;
    let (ti, tj) = (h.tau_of(i)?, h.tau_of(j)?);
    let cti = y.chart(ti)?;
    let f_ij = x
        .morphism(i, j)?
        .ok_or_else(|| Error::invalid("$", format!("no source transition {i}->{j}")))?;
    let f_tt = y
        .morphism(ti, tj)?
        .ok_or_else(|| Error::invalid("$", format!("no target transition {ti}->{tj}")))?;
    let h_i = h.map_of(i)?;
    let delta = h.delta_or_zero(i, j, x, y)?;

    let l0 = jacobian_matrix(&f_ij.f);
    let df_tt_hi = jacobian_matrix(&f_tt.f).pullback(&h_i.f)?;
    let l1 = block2x2(
        &f_ij.fhat,
        &MatrixMap::zero(cj.m, cti.n(), ci.n()),
        &delta.scale(-1.0),
        &df_tt_hi,
    )?;
    let l2 = f_tt.fhat.pullback(&h_i.f)?;
    Ok(ConeTransition {
        i: i.to_string(),
        j: j.to_string(),
        l0,
        l1,
        l2,
    })
}

/// Composite chain map `second o first`, with `second` pulled back along
/// the first transition's coordinate change.
pub fn compose_cone_transitions(
    first: &ConeTransition,
    f_ij: &PolyMap,
    second: &ConeTransition,
) -> Result<ConeTransition> {
    Ok(ConeTransition {
        i: first.i.clone(),
        j: second.j.clone(),
        l0: second.l0.pullback(f_ij)?.mul(&first.l0)?,
        l1: second.l1.pullback(f_ij)?.mul(&first.l1)?,
        l2: second.l2.pullback(f_ij)?.mul(&first.l2)?,
    })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Checks that a cone transition is a chain map at every shared footprint
/// point of the two source charts.
pub fn check_cone_transition(
    x: &KuranishiAtlas,
    h: &StrictMorphism,
    y: &KuranishiAtlas,
    t: &ConeTransition,
) -> Result<CheckReport> {
    let mut report = CheckReport::new();
    let (i, j) = (t.i.as_str(), t.j.as_str());
    let cone_i = cone(x.chart(i)?, y.chart(h.tau_of(i)?)?, h.map_of(i)?)?;
    let cone_j = cone(x.chart(j)?, y.chart(h.tau_of(j)?)?, h.map_of(j)?)?;
    let mut worst0 = 0.0f64;
    let mut worst1 = 0.0f64;
    for p in x.labels_in(&[i, j]) {
        let (xi, xj) = (&p.coords[i], &p.coords[j]);
        let r0 = max_abs(&(cone_j.d0.eval(xj) * t.l0.eval(xi) - t.l1.eval(xi) * cone_i.d0.eval(xi)));
        let r1 = max_abs(&(cone_j.d1.eval(xj) * t.l1.eval(xi) - t.l2.eval(xi) * cone_i.d1.eval(xi)));
        worst0 = worst0.max(r0);
        worst1 = worst1.max(r1);
    }
    report.check(
        format!("cone commute d0 ({i}, {j})"),
        worst0,
        tol::POINTWISE,
        "first-layer square must commute at shared footprint points",
    );
    report.check(
        format!("cone commute d1 ({i}, {j})"),
        worst1,
        tol::POINTWISE,
        "second-layer square must commute at shared footprint points",
    );
    Ok(report)
}

/// Builds a cone transition and rejects it unless it is a chain map,
/// naming the failing layer and its residual.
pub fn validated_cone_transition(
    x: &KuranishiAtlas,
    h: &StrictMorphism,
    y: &KuranishiAtlas,
    i: &str,
    j: &str,
) -> Result<ConeTransition> {
    let t = cone_transition(x, h, y, i, j)?;
    let report = check_cone_transition(x, h, y, &t)?;
    if let Some(item) = report.items.iter().find(|it| !it.passed) {
        return Err(Error::invalid(
            "$",
            format!("{}: residual {:.3e}", item.condition, item.residual),
        ));
    }
    Ok(t)
}

/// Compares the cohomology maps induced by a composite of two cone
/// transitions against the directly stored one, on every triple-shared
/// footprint point. Also reports chain-map commutation for all three
/// transitions, since a corrupted datum usually breaks both.
pub fn check_weak_cocycle(
    x: &KuranishiAtlas,
    h: &StrictMorphism,
    y: &KuranishiAtlas,
    i: &str,
    j: &str,
    k: &str,
) -> Result<CheckReport> {
    let mut report = CheckReport::new();
    let t_ij = cone_transition(x, h, y, i, j)?;
    let t_jk = cone_transition(x, h, y, j, k)?;
    let t_ik = cone_transition(x, h, y, i, k)?;
    report.merge(check_cone_transition(x, h, y, &t_ij)?);
    report.merge(check_cone_transition(x, h, y, &t_jk)?);
    report.merge(check_cone_transition(x, h, y, &t_ik)?);

    let f_ij = &x
        .morphism(i, j)?
        .ok_or_else(|| Error::invalid("$", format!("no source transition {i}->{j}")))?
        .f;
    let composite = compose_cone_transitions(&t_ij, f_ij, &t_jk)?;

    let cone_i = cone(x.chart(i)?, y.chart(h.tau_of(i)?)?, h.map_of(i)?)?;
    let cone_k = cone(x.chart(k)?, y.chart(h.tau_of(k)?)?, h.map_of(k)?)?;
    let mut worst = [0.0f64; 3];
    for p in x.labels_in(&[i, j, k]) {
        let (xi, xk) = (&p.coords[i], &p.coords[k]);
        let src = cone_i.bases_at(xi);
        let dst = cone_k.bases_at(xk);
        let layers = [
            (&src.h0, &dst.h0, &composite.l0, &t_ik.l0),
            (&src.h1, &dst.h1, &composite.l1, &t_ik.l1),
            (&src.h2, &dst.h2, &composite.l2, &t_ik.l2),
        ];
        for (d, (bs, bt, lc, ld)) in layers.into_iter().enumerate() {
            let via_composite = bt.transpose() * lc.eval(xi) * bs;
            let direct = bt.transpose() * ld.eval(xi) * bs;
            worst[d] = worst[d].max(max_abs(&(via_composite - direct)));
        }
    }
    for (d, w) in worst.into_iter().enumerate() {
        report.check(
            format!("weak cocycle h{d} ({i}, {j}, {k})"),
            w,
            tol::COHOMOLOGY_MAP,
            "composite and direct transitions must agree on cohomology",
        );
    }
    Ok(report)
}

/// Checks that a strict morphism into a single obstruction-free chart is an
/// embedding: discrete cohomology at the ends, constant middle rank equal
/// to the codimension, and separated footprint images.
pub fn check_embedding(h: &StrictMorphism, x: &KuranishiAtlas, y: &KuranishiAtlas) -> CheckReport {
    let mut report = CheckReport::new();
    if y.charts.len() != 1 || y.charts[0].m != 0 {
        report.fail(
            "embedding target",
            f64::INFINITY,
            "target must be a single chart with no obstruction directions",
        );
        return report;
    }
    let ambient = y.charts[0].n() as i64;
    let expected_t1 = ambient - x.vdim;

    for c in &x.charts {
        let i = c.id.as_str();
        let run = |report: &mut CheckReport| -> Result<()> {
            let cone_i = cone(c, &y.charts[0], h.map_of(i)?)?;
            let mut worst_complex = 0.0f64;
            let mut worst_ends = 0usize;
            let mut rank_detail = String::new();
            let mut rank_ok = true;
            let mut any_warning = false;
            for p in &c.footprint {
                worst_complex = worst_complex.max(cone_i.composite_residual_at(&p.x));
                let ranks = cone_i.ranks_at(&p.x)?;
                any_warning |= ranks.warning;
                worst_ends = worst_ends.max(ranks.t0 + ranks.t2);
                if ranks.t1 as i64 != expected_t1 && rank_detail.is_empty() {
                    rank_ok = false;
                    rank_detail = format!(
                        "middle rank {} at '{}' differs from ambient minus virtual dimension {}",
                        ranks.t1, p.label, expected_t1
                    );
                }
            }
            report.check(
                format!("embedding complex {i}"),
                worst_complex,
                tol::POINTWISE,
                "differentials must compose to zero at footprint points",
            );
            report.push(
                format!("embedding ends {i}"),
                worst_ends == 0,
                worst_ends as f64,
                if worst_ends == 0 {
                    String::new()
                } else {
                    "outer cohomology must vanish at every footprint point".to_string()
                },
            );
            report.push(format!("embedding rank {i}"), rank_ok, 0.0, rank_detail);
            if any_warning {
                report.fail(
                    format!("embedding rank margin {i}"),
                    f64::INFINITY,
                    "singular values too close to the rank threshold",
                );
            }
            Ok(())
        };
        if let Err(e) = run(&mut report) {
            report.fail(format!("embedding cone {i}"), f64::INFINITY, e.to_string());
        }
    }

    // distinct labels must have separated images in the ambient space
    let mut images: Vec<(String, Vec<f64>)> = Vec::new();
    for p in &x.footprint {
        if let Some((chart_id, coords)) = p.coords.iter().next() {
            if let Ok(m) = h.map_of(chart_id) {
                images.push((p.label.clone(), m.f.eval(coords)));
            }
        }
    }
    let mut min_sep = f64::INFINITY;
    let mut detail = String::new();
    for a in 0..images.len() {
        for b in a + 1..images.len() {
            let d = images[a]
                .1
                .iter()
                .zip(&images[b].1)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            if d < min_sep {
                min_sep = d;
                detail = format!("points '{}' and '{}' map {d:.3e} apart", images[a].0, images[b].0);
            }
        }
    }
    let separated = min_sep > tol::EMBED_SEPARATION;
    report.push(
        "embedding separation",
        separated,
        if min_sep.is_finite() { min_sep } else { 0.0 },
        if separated { String::new() } else { detail },
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::FootprintPoint;
    use crate::region::BoxUnion;

    #[test]
    fn ranks_of_a_diagonal_complex() {
        // d0 = [[1], [0]], d1 = [[0, 1]]: exact at both ends, zero cohomology
        let d0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let d1 = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let r = three_term_ranks(&d0, &d1, 1e-8).unwrap();
        assert_eq!((r.t0, r.t1, r.t2), (0, 0, 0));
        assert!(!r.warning);
    }

    #[test]
    fn euler_characteristic_is_dimension_count() {
        // random-ish valid complex: d1 = M (I - P) with P the projector onto im d0
        let d0 = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0, -2.0, 1.5]);
        let m = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 2.0, -1.0, 0.5, 1.5, 0.0, 2.5, -1.0, 1.0, 1.0, 0.0]);
        let svd = SVD::new(d0.clone(), true, false);
        let u = svd.u.unwrap();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10).count();
        let ub = u.columns(0, rank).into_owned();
        let proj = &ub * ub.transpose();
        let d1 = &m * (DMatrix::identity(4, 4) - proj);
        assert!((&d1 * &d0).iter().all(|v: &f64| v.abs() < 1e-12));
        let r = three_term_ranks(&d0, &d1, 1e-8).unwrap();
        let euler = r.t0 as i64 - r.t1 as i64 + r.t2 as i64;
        assert_eq!(euler, 2 - 4 + 3);
    }

    #[test]
    fn harmonic_bases_have_matching_dimensions() {
        let d0 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d1 = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let r = three_term_ranks(&d0, &d1, 1e-8).unwrap();
        let b = harmonic_bases(&d0, &d1, 1e-8);
        assert_eq!(b.h0.ncols(), r.t0);
        assert_eq!(b.h1.ncols(), r.t1);
        assert_eq!(b.h2.ncols(), r.t2);
        // orthonormality
        let gram = b.h1.transpose() * &b.h1;
        assert!((gram - DMatrix::identity(r.t1, r.t1)).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn cone_of_the_inclusion_is_exact_in_the_middle() {
        // chart (V = R, s = x, m = 1) included into the line
        let chart = KuranishiChart::new(
            "A",
            BoxUnion::cube(&[-2.0], &[2.0]).unwrap(),
            1,
            PolyMap::identity(1),
            1,
            vec![FootprintPoint {
                label: "p".into(),
                x: vec![0.0],
            }],
        )
        .unwrap();
        let (x, y, h) = StrictMorphism::inclusion(&chart, "ambient").unwrap();
        assert!(crate::atlas::check_strict_morphism(&h, &x, &y).passed());
        let report = check_embedding(&h, &x, &y);
        assert!(report.passed(), "{:?}", report.items);
        let cone = cone(&chart, &y.charts[0], h.map_of("A").unwrap()).unwrap();
        let ranks = cone.ranks_at(&[0.0]).unwrap();
        // ambient dimension 1 minus virtual dimension 0
        assert_eq!((ranks.t0, ranks.t1, ranks.t2), (0, 1, 0));
    }

    #[test]
    fn non_injective_map_fails_separation() {
        // s = x^2 - 1 with footprints at both roots; h = s maps both to zero
        let section = PolyMap::scalar(1, &[(&[2], 1.0), (&[0], -1.0)]).unwrap();
        let chart = KuranishiChart::new(
            "A",
            BoxUnion::cube(&[-2.0], &[2.0]).unwrap(),
            1,
            section.clone(),
            1,
            vec![
                FootprintPoint {
                    label: "p".into(),
                    x: vec![1.0],
                },
                FootprintPoint {
                    label: "q".into(),
                    x: vec![-1.0],
                },
            ],
        )
        .unwrap();
        let (x, y, mut h) = StrictMorphism::inclusion(&chart, "ambient").unwrap();
        // overwrite the inclusion with the squashing map h = x^2 - 1,
        // hhat = 2x + ... chosen so the section identity still holds:
        // hhat . s must equal s_target o h = 0, so hhat stays the empty map
        let morphism = ChartMorphism::new("A", "ambient", section, MatrixMap::zero(0, 1, 1));
        h.maps.insert("A".into(), morphism);
        let report = check_embedding(&h, &x, &y);
        assert!(!report.passed());
        assert!(report.failed_conditions().contains(&"embedding separation"));
    }

    #[test]
    fn rank_jump_fails_constancy() {
        // s(x, y) = xy, footprints on both branches, h = first coordinate
        let section = PolyMap::scalar(2, &[(&[1, 1], 1.0)]).unwrap();
        let chart = KuranishiChart::new(
            "A",
            BoxUnion::cube(&[-2.0, -2.0], &[2.0, 2.0]).unwrap(),
            1,
            section,
            1,
            vec![
                FootprintPoint {
                    label: "origin".into(),
                    x: vec![0.0, 0.0],
                },
                FootprintPoint {
                    label: "branch".into(),
                    x: vec![1.0, 0.0],
                },
            ],
        )
        .unwrap();
        let x_atlas = KuranishiAtlas::single(chart.clone());
        let ambient = KuranishiChart::new(
            "ambient",
            BoxUnion::cube(&[-3.0], &[3.0]).unwrap(),
            0,
            PolyMap::zero(1, 0),
            1,
            vec![
                FootprintPoint {
                    label: "origin".into(),
                    x: vec![0.0],
                },
                FootprintPoint {
                    label: "branch".into(),
                    x: vec![1.0],
                },
            ],
        )
        .unwrap();
        let y_atlas = KuranishiAtlas::single(ambient);
        let h = StrictMorphism {
            tau: std::collections::BTreeMap::from([("A".to_string(), "ambient".to_string())]),
            maps: std::collections::BTreeMap::from([(
                "A".to_string(),
                ChartMorphism::new("A", "ambient", PolyMap::coordinate(2, 0), MatrixMap::zero(0, 1, 2)),
            )]),
            deltas: Vec::new(),
            label_map: std::collections::BTreeMap::from([
                ("origin".to_string(), "origin".to_string()),
                ("branch".to_string(), "branch".to_string()),
            ]),
        };
        let report = check_embedding(&h, &x_atlas, &y_atlas);
        assert!(!report.passed());
        let failed = report.failed_conditions();
        assert!(failed.contains(&"embedding ends A"), "{failed:?}");
        assert!(failed.contains(&"embedding rank A"), "{failed:?}");
    }
}
