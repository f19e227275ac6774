//! Chart morphisms, homotopies between them, atlases with transition and
//! homotopy data, strict morphisms between atlases, and 2-morphisms.
//!
//! Two kinds of equality appear throughout, and each checker says which it
//! uses: identities "over V" are coefficient-wise polynomial identities
//! (tolerance 1e-9), while identities "over U" are evaluated at the shared
//! labeled footprint points (tolerance 1e-7). Homotopy representatives live
//! in a quotient: two representatives are equal when their actions on the
//! section agree at sampled domain points and their matrix values agree at
//! footprint points, the full observable content of the quotient.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::KuranishiChart;
use crate::mat::{jacobian_matrix, MatrixMap};
use crate::poly::PolyMap;
use crate::region::BoxUnion;
use crate::report::CheckReport;
use crate::tol;
use crate::{Error, Result};

/// Representative of a homotopy class: an `n_target x m_source` matrix of
/// polynomials over the source chart, considered modulo maps that both kill
/// the section and vanish on the footprint.
pub type KHomRep = MatrixMap;

/// Chart morphism `(f, fhat)`: `f` maps source coordinates to target
/// coordinates, `fhat` is an `m_target x m_source` bundle map over the
/// source, with `fhat . s_source = s_target o f` as polynomials.
#[derive(Debug, Clone)]
pub struct ChartMorphism {
    pub source: String,
    pub target: String,
    pub f: PolyMap,
    pub fhat: MatrixMap,
}

impl ChartMorphism {
    pub fn new(source: impl Into<String>, target: impl Into<String>, f: PolyMap, fhat: MatrixMap) -> Self {
        ChartMorphism {
            source: source.into(),
            target: target.into(),
            f,
            fhat,
        }
    }

    /// The identity morphism of a chart.
    pub fn identity(chart: &KuranishiChart) -> Self {
        ChartMorphism {
            source: chart.id.clone(),
            target: chart.id.clone(),
            f: PolyMap::identity(chart.n()),
            fhat: MatrixMap::identity(chart.m, chart.n()),
        }
    }

    /// Composition `then o self`: `(f2 o f1, (f1^* fhat2) . fhat1)`.
    pub fn compose(&self, then: &ChartMorphism) -> Result<ChartMorphism> {
        if self.target != then.source {
            return Err(Error::invalid(
                "$",
                format!("cannot chain morphism into '{}' with one out of '{}'", self.target, then.source),
            ));
        }
        Ok(ChartMorphism {
            source: self.source.clone(),
            target: then.target.clone(),
            f: then.f.compose(&self.f)?,
            fhat: then.fhat.pullback(&self.f)?.mul(&self.fhat)?,
        })
    }
}

/// A footprint point seen from both ends of a morphism.
#[derive(Debug, Clone)]
pub struct PointPair {
    pub label: String,
    pub x_src: Vec<f64>,
    pub x_dst: Vec<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Pairs up footprint points of two charts by shared label.
pub fn matched_footprints(a: &KuranishiChart, b: &KuranishiChart) -> Vec<PointPair> {
    let mut pairs = Vec::new();
    for p in &a.footprint {
        if let Some(q) = b.footprint.iter().find(|q| q.label == p.label) {
            pairs.push(PointPair {
                label: p.label.clone(),
                x_src: p.x.clone(),
                x_dst: q.x.clone(),
            });
        }
    }
    pairs
}

fn morphism_shapes_ok(a: &KuranishiChart, b: &KuranishiChart, m: &ChartMorphism) -> std::result::Result<(), String> {
    if m.f.n_in != a.n() || m.f.n_out != b.n() {
        return Err(format!(
            "f maps {} -> {} variables, charts need {} -> {}",
            m.f.n_in,
            m.f.n_out,
            a.n(),
            b.n()
        ));
    }
    if m.fhat.rows != b.m || m.fhat.cols != a.m || m.fhat.n_in() != a.n() {
        return Err(format!(
            "fhat is {}x{} over {} variables, charts need {}x{} over {}",
            m.fhat.rows,
            m.fhat.cols,
            m.fhat.n_in(),
            b.m,
            a.m,
            a.n()
        ));
    }
    Ok(())
}

fn check_morphism_into(report: &mut CheckReport, prefix: &str, a: &KuranishiChart, b: &KuranishiChart, m: &ChartMorphism, pairs: &[PointPair]) {
    if let Err(msg) = morphism_shapes_ok(a, b, m) {
        report.fail(format!("{prefix} shape"), f64::INFINITY, msg);
        return;
    }
    // section compatibility over V: fhat . s_a = s_b o f
    let lhs = m.fhat.mul_vec(&a.section);
    let rhs = b.section.compose(&m.f);
    match (lhs, rhs) {
        (Ok(lhs), Ok(rhs)) => {
            let d = lhs.coeff_distance(&rhs);
            report.check(
                format!("{prefix} section"),
                d,
                tol::COEFF_IDENTITY,
                "fhat . s_source must equal s_target o f coefficient-wise",
            );
        }
        _ => report.fail(format!("{prefix} section"), f64::INFINITY, "shape error forming the identity"),
    }
    // footprint mapping over U
    let mut worst = 0.0f64;
    let mut worst_label = String::new();
    for p in pairs {
        let img = m.f.eval(&p.x_src);
        let r = img
            .iter()
            .zip(&p.x_dst)
            .fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()));
        if r > worst {
            worst = r;
            worst_label = p.label.clone();
        }
    }
    report.check(
        format!("{prefix} footprint"),
        worst,
        tol::POINTWISE,
        if pairs.is_empty() {
            "no shared footprint points".to_string()
        } else {
            format!("worst shared point '{worst_label}'")
        },
    );
}

/// Verifies a chart morphism: the bundle-compatibility polynomial identity
/// and the footprint mapping at label-matched points.
pub fn check_morphism(a: &KuranishiChart, b: &KuranishiChart, m: &ChartMorphism) -> CheckReport {
    let mut report = CheckReport::new();
    check_morphism_into(&mut report, "morphism", a, b, m, &matched_footprints(a, b));
    report
}

fn check_homotopy_into(
    report: &mut CheckReport,
    prefix: &str,
    a: &KuranishiChart,
    b: &KuranishiChart,
    m0: &ChartMorphism,
    m1: &ChartMorphism,
    lam: &MatrixMap,
    pairs: &[PointPair],
) {
    if lam.rows != b.n() || lam.cols != a.m || lam.n_in() != a.n() {
        report.fail(
            format!("{prefix} shape"),
            f64::INFINITY,
            format!(
                "homotopy representative is {}x{} over {} variables, need {}x{} over {}",
                lam.rows,
                lam.cols,
                lam.n_in(),
                b.n(),
                a.m,
                a.n()
            ),
        );
        return;
    }
    // (1) f1 - f0 = lam . s_a over V
    match (m1.f.sub(&m0.f), lam.mul_vec(&a.section)) {
        (Ok(diff), Ok(action)) => {
            let d = diff.coeff_distance(&action);
            report.check(
                format!("{prefix} identity"),
                d,
                tol::COEFF_IDENTITY,
                "f1 - f0 must equal the homotopy applied to the section",
            );
        }
        _ => report.fail(format!("{prefix} identity"), f64::INFINITY, "shape error forming the identity"),
    }
    // (2) over U: lam . ds_a = df1 - df0 and ds_b . lam = fhat1 - fhat0
    let ds_a = jacobian_matrix(&a.section);
    let ds_b = jacobian_matrix(&b.section);
    let df0 = jacobian_matrix(&m0.f);
    let df1 = jacobian_matrix(&m1.f);
    let mut worst_tangent = 0.0f64;
    let mut worst_bundle = 0.0f64;
    for p in pairs {
        let lam_x = lam.eval(&p.x_src);
        let tangent = &lam_x * ds_a.eval(&p.x_src) - (df1.eval(&p.x_src) - df0.eval(&p.x_src));
        worst_tangent = worst_tangent.max(max_abs(&tangent));
        let bundle = ds_b.eval(&p.x_dst) * lam_x - (m1.fhat.eval(&p.x_src) - m0.fhat.eval(&p.x_src));
        worst_bundle = worst_bundle.max(max_abs(&bundle));
    }
    report.check(
        format!("{prefix} tangent"),
        worst_tangent,
        tol::POINTWISE,
        "homotopy composed with ds_source must match df1 - df0 at footprint points",
    );
    report.check(
        format!("{prefix} bundle"),
        worst_bundle,
        tol::POINTWISE,
        "ds_target composed with the homotopy must match fhat1 - fhat0 at footprint points",
    );
}

/// Verifies that `lam` is a homotopy from `m0` to `m1` (two morphisms with
/// the same source and target charts).
pub fn check_homotopy(
    a: &KuranishiChart,
    b: &KuranishiChart,
    m0: &ChartMorphism,
    m1: &ChartMorphism,
    lam: &MatrixMap,
) -> CheckReport {
    let mut report = CheckReport::new();
    check_homotopy_into(&mut report, "homotopy", a, b, m0, m1, lam, &matched_footprints(a, b));
    report
}

/// Residuals of the two quotient projections of `l1 - l2` on a source chart:
/// action on the section at sampled points, and matrix values at footprint
/// points.
pub fn khom_residuals(chart: &KuranishiChart, l1: &MatrixMap, l2: &MatrixMap) -> Result<(f64, f64)> {
    if l1.rows != l2.rows || l1.cols != l2.cols {
        return Err(Error::dim("homotopy representative shapes", l1.rows * l1.cols, l2.rows * l2.cols));
    }
    if l1.cols != chart.m || l1.n_in() != chart.n() {
        return Err(Error::dim("homotopy representative columns", chart.m, l1.cols));
    }
    let diff = l1.sub(l2)?;
    let action = diff.mul_vec(&chart.section)?;
    let mut action_res = 0.0f64;
    for x in chart.domain.sample(tol::KHOM_SAMPLE_DENSITY, 0) {
        action_res = action_res.max(sup(&action.eval(&x)));
    }
    let mut point_res = 0.0f64;
    for p in &chart.footprint {
        point_res = point_res.max(max_abs(&diff.eval(&p.x)));
    }
    Ok((action_res, point_res))
}

/// Quotient equality of two homotopy representatives over a source chart.
pub fn khom_equal(chart: &KuranishiChart, l1: &MatrixMap, l2: &MatrixMap) -> Result<bool> {
    let (action, point) = khom_residuals(chart, l1, l2)?;
    Ok(action <= tol::POINTWISE && point <= tol::POINTWISE)
}

fn khom_zero_into(report: &mut CheckReport, prefix: &str, chart: &KuranishiChart, lam: &MatrixMap) {
    match khom_residuals(chart, lam, &MatrixMap::zero(lam.rows, lam.cols, lam.n_in())) {
        Ok((action, point)) => {
            report.check(
                format!("{prefix} action"),
                action,
                tol::POINTWISE,
                "representative must kill the section at sampled points",
            );
            report.check(
                format!("{prefix} at footprint"),
                point,
                tol::POINTWISE,
                "representative must vanish at footprint points",
            );
        }
        Err(e) => report.fail(format!("{prefix} shape"), f64::INFINITY, e.to_string()),
    }
}

/// One-parameter family of morphisms between two charts. All maps take the
/// source coordinates with the parameter `t` appended as the last variable;
/// `t` ranges over (0, 1).
#[derive(Debug, Clone)]
pub struct FamilyHomotopy {
    pub f: PolyMap,
    pub fhat: MatrixMap,
    /// `n_target x m_source` family of homotopy representatives.
    pub lam: MatrixMap,
    /// `m_target x C(m_source, 2)` contraction data, columns indexed by
    /// wedge pairs (p, q) with p < q in lexicographic order.
    pub xi: MatrixMap,
}

/// Column index of the wedge basis vector `e_p ^ e_q` (p < q) in dimension m.
pub fn wedge_index(p: usize, q: usize, m: usize) -> usize {
    debug_assert!(p < q && q < m);
    p * m - p * (p + 1) / 2 + (q - p - 1)
}

/// Number of wedge-pair columns in dimension m.
pub fn wedge_dim(m: usize) -> usize {
    m * (m.max(1) - 1) / 2
}

/// Contraction of the wedge data against a section value in the second
/// slot: the matrix sending `e_c` to `xi(e_c ^ s)`.
fn xi_contract(xi: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let m = s.len();
    let rows = xi.nrows();
    let mut out = DMatrix::zeros(rows, m);
    for c in 0..m {
        for p in 0..m {
            if p == c {
                continue;
            }
            let (sign, idx) = if c < p {
                (1.0, wedge_index(c, p, m))
            } else {
                (-1.0, wedge_index(p, c, m))
            };
            for r in 0..rows {
                out[(r, c)] += sign * s[p] * xi[(r, idx)];
            }
        }
    }
    out
}

/// Verifies a family of morphisms interpolating `m0` (t = 0) and `m1`
/// (t = 1): endpoint agreement, the bundle-compatibility identity in (x, t),
/// the velocity identity for `f`, and the sampled velocity identity for
/// `fhat` with the wedge correction term.
pub fn check_family_homotopy(
    a: &KuranishiChart,
    b: &KuranishiChart,
    fam: &FamilyHomotopy,
    m0: &ChartMorphism,
    m1: &ChartMorphism,
) -> CheckReport {
    let mut report = CheckReport::new();
    let n = a.n();
    let shapes_ok = fam.f.n_in == n + 1
        && fam.f.n_out == b.n()
        && fam.fhat.rows == b.m
        && fam.fhat.cols == a.m
        && fam.fhat.n_in() == n + 1
        && fam.lam.rows == b.n()
        && fam.lam.cols == a.m
        && fam.lam.n_in() == n + 1
        && fam.xi.rows == b.m
        && fam.xi.cols == wedge_dim(a.m)
        && fam.xi.n_in() == n + 1;
    if !shapes_ok {
        report.fail("family shape", f64::INFINITY, "family data shapes do not match the charts");
        return report;
    }

    let run = |report: &mut CheckReport| -> Result<()> {
        // (a) endpoints
        let mut endpoint = 0.0f64;
        endpoint = endpoint.max(fam.f.fix_last(0.0)?.coeff_distance(&m0.f));
        endpoint = endpoint.max(fam.f.fix_last(1.0)?.coeff_distance(&m1.f));
        endpoint = endpoint.max(fam.fhat.map.fix_last(0.0)?.coeff_distance(&m0.fhat.map));
        endpoint = endpoint.max(fam.fhat.map.fix_last(1.0)?.coeff_distance(&m1.fhat.map));
        report.check(
            "family endpoints",
            endpoint,
            tol::COEFF_IDENTITY,
            "t = 0 and t = 1 slices must equal the two morphisms",
        );

        // (b) fhat(t) . s_a = s_b o F(t) over (x, t)
        let s_a_lift = a.section.embed(n + 1, 0)?;
        let lhs = fam.fhat.mul_vec(&s_a_lift)?;
        let rhs = b.section.compose(&fam.f)?;
        report.check(
            "family section",
            lhs.coeff_distance(&rhs),
            tol::COEFF_IDENTITY,
            "bundle compatibility must hold for every t",
        );

        // (c) velocity of f: dF/dt = lam(t) . s_a over (x, t)
        let velocity = fam.f.partial_map(n);
        let action = fam.lam.mul_vec(&s_a_lift)?;
        report.check(
            "family velocity",
            velocity.coeff_distance(&action),
            tol::COEFF_IDENTITY,
            "dF/dt must equal the homotopy family applied to the section",
        );

        // (c) velocity of fhat, sampled: dfhat/dt = ds_b|F . lam + xi(- ^ s_a)
        let fhat_dot = fam.fhat.partial(n);
        let ds_b = jacobian_matrix(&b.section);
        let dom = a.domain.product(&BoxUnion::cube(&[0.0], &[1.0])?);
        let mut worst = 0.0f64;
        for xt in dom.sample(tol::KHOM_SAMPLE_DENSITY, 0) {
            let y = fam.f.eval(&xt);
            let s_val = a.section.eval(&xt[..n]);
            let rhs = ds_b.eval(&y) * fam.lam.eval(&xt) + xi_contract(&fam.xi.eval(&xt), &s_val);
            worst = worst.max(max_abs(&(fhat_dot.eval(&xt) - rhs)));
        }
        report.check(
            "family bundle velocity",
            worst,
            tol::POINTWISE,
            "dfhat/dt must match ds_target . lam plus the wedge correction at sampled points",
        );
        Ok(())
    };
    if let Err(e) = run(&mut report) {
        report.fail("family data", f64::INFINITY, e.to_string());
    }
    report
}

/// Integrates the homotopy family over t in [0, 1] to produce a single
/// homotopy representative. Heuristic: the result always satisfies the
/// polynomial identity for the endpoint morphisms, but the paper-level
/// footprint conditions are only guaranteed when the family itself is valid;
/// run the homotopy checker on the output.
pub fn extract_homotopy(fam: &FamilyHomotopy) -> Result<KHomRep> {
    fam.lam.integrate_last_unit()
}

/// A footprint point of the covered space with its coordinates in every
/// chart whose footprint contains it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharedPoint {
    pub label: String,
    pub coords: BTreeMap<String, Vec<f64>>,
}

/// Transition morphism between two charts, restricted to declared
/// sub-domains of the source and target.
#[derive(Debug, Clone)]
pub struct Transition {
    pub i: String,
    pub j: String,
    pub dom_i: BoxUnion,
    pub dom_j: BoxUnion,
    pub f: PolyMap,
    pub fhat: MatrixMap,
}

/// Stored homotopy representative for the triple (i, j, k): a homotopy from
/// the direct transition i -> k to the composite through j.
#[derive(Debug, Clone)]
pub struct LambdaEntry {
    pub i: String,
    pub j: String,
    pub k: String,
    pub lam: MatrixMap,
}

/// Indexed charts with shared footprint table, transition morphisms on
/// declared overlaps, and homotopy data for triple overlaps.
#[derive(Debug, Clone)]
pub struct KuranishiAtlas {
    pub vdim: i64,
    pub charts: Vec<KuranishiChart>,
    pub footprint: Vec<SharedPoint>,
    pub transitions: Vec<Transition>,
    pub lambdas: Vec<LambdaEntry>,
}

impl KuranishiAtlas {
    /// Wraps a single chart as an atlas; the footprint table is the chart's.
    pub fn single(chart: KuranishiChart) -> Self {
        let footprint = chart
            .footprint
            .iter()
            .map(|p| SharedPoint {
                label: p.label.clone(),
                coords: BTreeMap::from([(chart.id.clone(), p.x.clone())]),
            })
            .collect();
        KuranishiAtlas {
            vdim: chart.vdim(),
            charts: vec![chart],
            footprint,
            transitions: Vec::new(),
            lambdas: Vec::new(),
        }
    }

    pub fn chart(&self, id: &str) -> Result<&KuranishiChart> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::invalid("$.charts", format!("no chart '{id}'")))
    }

    pub fn transition(&self, i: &str, j: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.i == i && t.j == j)
    }

    /// Transition as a morphism; identity when i = j and nothing is stored.
    pub fn morphism(&self, i: &str, j: &str) -> Result<Option<ChartMorphism>> {
        if let Some(t) = self.transition(i, j) {
            return Ok(Some(ChartMorphism::new(i, j, t.f.clone(), t.fhat.clone())));
        }
        if i == j {
            return Ok(Some(ChartMorphism::identity(self.chart(i)?)));
        }
        Ok(None)
    }

    /// Homotopy representative for a triple: stored data, the zero class for
    /// degenerate triples (i = j or j = k), `None` when undeclared.
    pub fn lambda_class(&self, i: &str, j: &str, k: &str) -> Result<Option<MatrixMap>> {
        if let Some(e) = self.lambdas.iter().find(|e| e.i == i && e.j == j && e.k == k) {
            return Ok(Some(e.lam.clone()));
        }
        if i == j || j == k {
            let ci = self.chart(i)?;
            let ck = self.chart(k)?;
            return Ok(Some(MatrixMap::zero(ck.n(), ci.m, ci.n())));
        }
        Ok(None)
    }

    fn entry_stored(&self, i: &str, j: &str, k: &str) -> bool {
        self.lambdas.iter().any(|e| e.i == i && e.j == j && e.k == k)
    }

    /// Coordinates of a shared footprint label in one chart.
    pub fn point_in(&self, label: &str, chart: &str) -> Option<&Vec<f64>> {
        self.footprint
            .iter()
            .find(|p| p.label == label)
            .and_then(|p| p.coords.get(chart))
    }

    /// Shared points whose coordinates are known in every listed chart.
    pub fn labels_in(&self, ids: &[&str]) -> Vec<&SharedPoint> {
        self.footprint
            .iter()
            .filter(|p| ids.iter().all(|id| p.coords.contains_key(*id)))
            .collect()
    }

    fn pairs(&self, i: &str, j: &str) -> Vec<PointPair> {
        self.labels_in(&[i, j])
            .into_iter()
            .map(|p| PointPair {
                label: p.label.clone(),
                x_src: p.coords[i].clone(),
                x_dst: p.coords[j].clone(),
            })
            .collect()
    }

    /// Validates structural invariants and injects the shared footprint
    /// table into each chart's own footprint list.
    pub fn validated(mut self) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (idx, c) in self.charts.iter().enumerate() {
            if let Some(prev) = seen.insert(c.id.clone(), idx) {
                return Err(Error::invalid(
                    format!("$.charts[{idx}]"),
                    format!("duplicate chart id '{}' (also at index {prev})", c.id),
                ));
            }
        }
        let charts = std::mem::take(&mut self.charts);
        self.charts = charts.into_iter().map(|c| c.validated()).collect::<Result<Vec<_>>>()?;
        for p in &self.footprint {
            for (chart_id, x) in &p.coords {
                let chart = self
                    .charts
                    .iter_mut()
                    .find(|c| &c.id == chart_id)
                    .ok_or_else(|| Error::invalid("$.footprint", format!("point '{}' references unknown chart '{chart_id}'", p.label)))?;
                if let Some(own) = chart.footprint_coords(&p.label) {
                    let d = own.iter().zip(x).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
                    if d > 1e-12 {
                        return Err(Error::invalid(
                            "$.footprint",
                            format!("point '{}' disagrees with chart '{chart_id}' own footprint by {d:.3e}", p.label),
                        ));
                    }
                } else {
                    chart.add_footprint_point(&p.label, x.clone())?;
                }
            }
        }
        for t in &self.transitions {
            let ci = self.chart(&t.i)?;
            let cj = self.chart(&t.j)?;
            t.dom_i.validate()?;
            t.dom_j.validate()?;
            if t.dom_i.dim != ci.n() || t.dom_j.dim != cj.n() {
                return Err(Error::dim(format!("transition {}->{} overlap domains", t.i, t.j), ci.n(), t.dom_i.dim));
            }
            if t.f.n_in != ci.n() || t.f.n_out != cj.n() {
                return Err(Error::dim(format!("transition {}->{} map", t.i, t.j), cj.n(), t.f.n_out));
            }
            if t.fhat.rows != cj.m || t.fhat.cols != ci.m || t.fhat.n_in() != ci.n() {
                return Err(Error::dim(format!("transition {}->{} bundle map", t.i, t.j), cj.m * ci.m, t.fhat.rows * t.fhat.cols));
            }
        }
        for e in &self.lambdas {
            let ci = self.chart(&e.i)?;
            self.chart(&e.j)?;
            let ck = self.chart(&e.k)?;
            if e.lam.rows != ck.n() || e.lam.cols != ci.m || e.lam.n_in() != ci.n() {
                return Err(Error::dim(
                    format!("homotopy data ({}, {}, {})", e.i, e.j, e.k),
                    ck.n() * ci.m,
                    e.lam.rows * e.lam.cols,
                ));
            }
        }
        Ok(self)
    }

    /// Runs the full atlas validation: the dimension condition, every
    /// declared transition, every declared homotopy datum, and the
    /// four-term compatibility identity on quadruples assembled from the
    /// declared data (evaluated at shared footprint points).
    pub fn check(&self) -> CheckReport {
        let mut report = CheckReport::new();

        // (1) constant virtual dimension
        for c in &self.charts {
            let ok = c.vdim() == self.vdim;
            report.push(
                format!("dimension {}", c.id),
                ok,
                (c.vdim() - self.vdim).abs() as f64,
                if ok {
                    String::new()
                } else {
                    format!("chart vdim {} != atlas vdim {}", c.vdim(), self.vdim)
                },
            );
        }

        // (2) declared transitions are morphisms on their declared overlaps
        for t in &self.transitions {
            let prefix = format!("transition {}->{}", t.i, t.j);
            let (ci, cj) = match (self.chart(&t.i), self.chart(&t.j)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    report.fail(format!("{prefix} charts"), f64::INFINITY, "transition references unknown chart");
                    continue;
                }
            };
            let mut outside = 0usize;
            let mut detail = String::new();
            for x in t.dom_i.sample(3, 0) {
                if !ci.domain.contains(&x) {
                    outside += 1;
                    if detail.is_empty() {
                        detail = format!("overlap sample {x:?} escapes the source chart domain");
                    }
                } else if !cj.domain.contains(&t.f.eval(&x)) {
                    outside += 1;
                    if detail.is_empty() {
                        detail = format!("image of overlap sample {x:?} escapes the target chart domain");
                    }
                }
            }
            for x in t.dom_j.sample(3, 0) {
                if !cj.domain.contains(&x) {
                    outside += 1;
                    if detail.is_empty() {
                        detail = format!("target overlap sample {x:?} escapes the target chart domain");
                    }
                }
            }
            let pairs = self.pairs(&t.i, &t.j);
            for p in &pairs {
                if !t.dom_i.contains(&p.x_src) || !t.dom_j.contains(&p.x_dst) {
                    outside += 1;
                    if detail.is_empty() {
                        detail = format!("shared point '{}' lies outside the declared overlap", p.label);
                    }
                }
            }
            report.push(format!("{prefix} domain"), outside == 0, outside as f64, detail);
            if t.i == t.j {
                let d = t
                    .f
                    .coeff_distance(&PolyMap::identity(ci.n()))
                    .max(t.fhat.map.coeff_distance(&MatrixMap::identity(ci.m, ci.n()).map));
                report.check(
                    format!("{prefix} identity"),
                    d,
                    tol::COEFF_IDENTITY,
                    "self-transition must be the identity morphism",
                );
            }
            let m = ChartMorphism::new(t.i.clone(), t.j.clone(), t.f.clone(), t.fhat.clone());
            check_morphism_into(&mut report, &prefix, ci, cj, &m, &pairs);
        }

        // (3) declared homotopy data
        for e in &self.lambdas {
            let prefix = format!("homotopy ({}, {}, {})", e.i, e.j, e.k);
            if e.i == e.j || e.j == e.k {
                let chart = match self.chart(&e.i) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
                khom_zero_into(&mut report, &format!("{prefix} degenerate"), chart, &e.lam);
                continue;
            }
            let needed = (self.morphism(&e.i, &e.j), self.morphism(&e.j, &e.k), self.morphism(&e.i, &e.k));
            match needed {
                (Ok(Some(mij)), Ok(Some(mjk)), Ok(Some(mik))) => {
                    let composite = match mij.compose(&mjk) {
                        Ok(c) => c,
                        Err(err) => {
                            report.fail(format!("{prefix} data"), f64::INFINITY, err.to_string());
                            continue;
                        }
                    };
                    let (ci, ck) = (self.chart(&e.i).unwrap(), self.chart(&e.k).unwrap());
                    let pairs: Vec<PointPair> = self
                        .labels_in(&[&e.i, &e.j, &e.k])
                        .into_iter()
                        .map(|p| PointPair {
                            label: p.label.clone(),
                            x_src: p.coords[&e.i].clone(),
                            x_dst: p.coords[&e.k].clone(),
                        })
                        .collect();
                    check_homotopy_into(&mut report, &prefix, ci, ck, &mik, &composite, &e.lam, &pairs);
                }
                _ => {
                    report.fail(
                        format!("{prefix} data"),
                        f64::INFINITY,
                        "homotopy datum declared without its three transitions",
                    );
                }
            }
        }

        // (4) four-term identity on quadruples, at shared footprint points
        let ids: Vec<&str> = self.charts.iter().map(|c| c.id.as_str()).collect();
        for &i in &ids {
            for &j in &ids {
                for &k in &ids {
                    for &l in &ids {
                        if let Err(e) = self.check_quadruple(&mut report, i, j, k, l) {
                            report.fail(format!("cocycle ({i}, {j}, {k}, {l})"), f64::INFINITY, e.to_string());
                        }
                    }
                }
            }
        }
        report
    }

    fn check_quadruple(&self, report: &mut CheckReport, i: &str, j: &str, k: &str, l: &str) -> Result<()> {
        let stored = self.entry_stored(i, k, l)
            || self.entry_stored(j, k, l)
            || self.entry_stored(i, j, l)
            || self.entry_stored(i, j, k);
        if !stored {
            return Ok(());
        }
        let (l_ikl, l_jkl, l_ijl, l_ijk) = match (
            self.lambda_class(i, k, l)?,
            self.lambda_class(j, k, l)?,
            self.lambda_class(i, j, l)?,
            self.lambda_class(i, j, k)?,
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Ok(()), // quadruple not fully declared
        };
        let fhat_ij = match self.morphism(i, j)? {
            Some(m) => m.fhat,
            None if l_jkl.is_zero(0.0) => MatrixMap::zero(self.chart(j)?.m, self.chart(i)?.m, self.chart(i)?.n()),
            None => return Ok(()),
        };
        let df_kl = match self.morphism(k, l)? {
            Some(m) => jacobian_matrix(&m.f),
            None if l_ijk.is_zero(0.0) => MatrixMap::zero(self.chart(l)?.n(), self.chart(k)?.n(), self.chart(k)?.n()),
            None => return Ok(()),
        };
        let labels = self.labels_in(&[i, j, k, l]);
        if labels.is_empty() {
            return Ok(());
        }
        let mut worst = 0.0f64;
        let mut worst_label = String::new();
        for p in labels {
            let (xi, xj, xk) = (&p.coords[i], &p.coords[j], &p.coords[k]);
            let e = l_ikl.eval(xi) - l_jkl.eval(xj) * fhat_ij.eval(xi) - l_ijl.eval(xi) + df_kl.eval(xk) * l_ijk.eval(xi);
            let r = max_abs(&e);
            if r >= worst {
                worst = r;
                worst_label = p.label.clone();
            }
        }
        report.check(
            format!("cocycle ({i}, {j}, {k}, {l})"),
            worst,
            tol::POINTWISE,
            format!("alternating sum of homotopy data at shared point '{worst_label}'"),
        );
        Ok(())
    }
}

/// Stored homotopy datum of a strict morphism for a source transition pair.
#[derive(Debug, Clone)]
pub struct DeltaEntry {
    pub i: String,
    pub j: String,
    pub delta: MatrixMap,
}

/// Strict morphism between atlases: a chart assignment `tau`, one chart
/// morphism per source chart, homotopy data for source transitions, and a
/// footprint label translation.
#[derive(Debug, Clone)]
pub struct StrictMorphism {
    pub tau: BTreeMap<String, String>,
    pub maps: BTreeMap<String, ChartMorphism>,
    pub deltas: Vec<DeltaEntry>,
    pub label_map: BTreeMap<String, String>,
}

impl StrictMorphism {
    pub fn tau_of(&self, i: &str) -> Result<&str> {
        self.tau
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| Error::invalid("$.tau", format!("no target chart for '{i}'")))
    }

    pub fn map_of(&self, i: &str) -> Result<&ChartMorphism> {
        self.maps
            .get(i)
            .ok_or_else(|| Error::invalid("$.maps", format!("no chart morphism for '{i}'")))
    }

    /// Stored homotopy datum for (i, j), or the zero representative.
    pub fn delta_or_zero(&self, i: &str, j: &str, x: &KuranishiAtlas, y: &KuranishiAtlas) -> Result<MatrixMap> {
        if let Some(e) = self.deltas.iter().find(|e| e.i == i && e.j == j) {
            return Ok(e.delta.clone());
        }
        let ci = x.chart(i)?;
        let target_j = y.chart(self.tau_of(j)?)?;
        Ok(MatrixMap::zero(target_j.n(), ci.m, ci.n()))
    }

    fn delta_stored(&self, i: &str, j: &str) -> bool {
        self.deltas.iter().any(|e| e.i == i && e.j == j)
    }

    /// Canonical inclusion of a single chart into a manifold chart on its
    /// ambient space: the identity on coordinates with an empty bundle map.
    /// Returns the source atlas, the target atlas, and the morphism.
    pub fn inclusion(chart: &KuranishiChart, target_id: &str) -> Result<(KuranishiAtlas, KuranishiAtlas, StrictMorphism)> {
        let n = chart.n();
        let radius = chart
            .footprint
            .iter()
            .flat_map(|p| p.x.iter().map(|v| v.abs()))
            .fold(1.0f64, f64::max)
            + 1.0;
        let domain = if n == 0 {
            BoxUnion::point()
        } else {
            BoxUnion::cube(&vec![-radius; n], &vec![radius; n])?
        };
        let target = KuranishiChart::new(
            target_id,
            domain,
            0,
            PolyMap::zero(n, 0),
            1,
            chart.footprint.clone(),
        )?;
        let morphism = ChartMorphism::new(&chart.id, target_id, PolyMap::identity(n), MatrixMap::zero(0, chart.m, n));
        let label_map = chart
            .footprint
            .iter()
            .map(|p| (p.label.clone(), p.label.clone()))
            .collect();
        let h = StrictMorphism {
            tau: BTreeMap::from([(chart.id.clone(), target_id.to_string())]),
            maps: BTreeMap::from([(chart.id.clone(), morphism)]),
            deltas: Vec::new(),
            label_map,
        };
        Ok((KuranishiAtlas::single(chart.clone()), KuranishiAtlas::single(target), h))
    }
}

fn strict_pairs(
    h: &StrictMorphism,
    x: &KuranishiAtlas,
    y: &KuranishiAtlas,
    src_charts: &[&str],
    dst_chart: &str,
) -> Result<Vec<PointPair>> {
    let mut pairs = Vec::new();
    for p in x.labels_in(src_charts) {
        let y_label = h
            .label_map
            .get(&p.label)
            .ok_or_else(|| Error::invalid("$.label_map", format!("footprint label '{}' has no image", p.label)))?;
        let y_coords = y.point_in(y_label, dst_chart).ok_or_else(|| {
            Error::invalid(
                "$.label_map",
                format!("image label '{y_label}' has no coordinates in target chart '{dst_chart}'"),
            )
        })?;
        pairs.push(PointPair {
            label: p.label.clone(),
            x_src: p.coords[src_charts[0]].clone(),
            x_dst: y_coords.clone(),
        });
    }
    Ok(pairs)
}

/// Verifies a strict morphism: per-chart morphisms, per-pair homotopy data,
/// and the five-term compatibility identity on triples (at shared footprint
/// points).
pub fn check_strict_morphism(h: &StrictMorphism, x: &KuranishiAtlas, y: &KuranishiAtlas) -> CheckReport {
    let mut report = CheckReport::new();

    for c in &x.charts {
        match h.tau.get(&c.id) {
            Some(t) if y.chart(t).is_ok() => {}
            Some(t) => {
                report.fail("tau total", f64::INFINITY, format!("'{}' targets unknown chart '{t}'", c.id));
                return report;
            }
            None => {
                report.fail("tau total", f64::INFINITY, format!("no target chart assigned to '{}'", c.id));
                return report;
            }
        }
    }
    report.pass("tau total", 0.0);

    // (2) each (h_i, hhat_i) is a morphism
    for c in &x.charts {
        let i = c.id.as_str();
        let run = || -> Result<(ChartMorphism, Vec<PointPair>, &KuranishiChart)> {
            let ti = h.tau_of(i)?;
            let m = h.map_of(i)?.clone();
            if m.target != ti {
                return Err(Error::invalid("$.maps", format!("morphism for '{i}' targets '{}', tau says '{ti}'", m.target)));
            }
            let pairs = strict_pairs(h, x, y, &[i], ti)?;
            Ok((m, pairs, y.chart(ti)?))
        };
        match run() {
            Ok((m, pairs, target)) => check_morphism_into(&mut report, &format!("morphism {i}"), c, target, &m, &pairs),
            Err(e) => report.fail(format!("morphism {i}"), f64::INFINITY, e.to_string()),
        }
    }

    // (3) each source transition has a homotopy datum
    for t in &x.transitions {
        if t.i == t.j {
            continue;
        }
        let (i, j) = (t.i.as_str(), t.j.as_str());
        let prefix = format!("delta ({i}, {j})");
        let run = |report: &mut CheckReport| -> Result<()> {
            let (ti, tj) = (h.tau_of(i)?, h.tau_of(j)?);
            let f_ij = x
                .morphism(i, j)?
                .ok_or_else(|| Error::invalid("$", "missing source transition"))?;
            let f_tt = y
                .morphism(ti, tj)?
                .ok_or_else(|| Error::invalid("$", format!("target atlas has no transition {ti}->{tj}")))?;
            let m0 = f_ij.compose(h.map_of(j)?)?;
            let m1 = h.map_of(i)?.compose(&f_tt)?;
            let delta = h.delta_or_zero(i, j, x, y)?;
            let pairs = strict_pairs(h, x, y, &[i, j], tj)?;
            check_homotopy_into(report, &prefix, x.chart(i)?, y.chart(tj)?, &m0, &m1, &delta, &pairs);
            Ok(())
        };
        if let Err(e) = run(&mut report) {
            report.fail(prefix, f64::INFINITY, e.to_string());
        }
    }

    // (4) five-term identity on triples
    let ids: Vec<&str> = x.charts.iter().map(|c| c.id.as_str()).collect();
    for &i in &ids {
        for &j in &ids {
            for &k in &ids {
                if let Err(e) = check_five_term(&mut report, h, x, y, i, j, k) {
                    report.fail(format!("five-term ({i}, {j}, {k})"), f64::INFINITY, e.to_string());
                }
            }
        }
    }
    report
}

fn check_five_term(
    report: &mut CheckReport,
    h: &StrictMorphism,
    x: &KuranishiAtlas,
    y: &KuranishiAtlas,
    i: &str,
    j: &str,
    k: &str,
) -> Result<()> {
    let any_stored = h.delta_stored(i, k)
        || h.delta_stored(i, j)
        || h.delta_stored(j, k)
        || x.entry_stored(i, j, k);
    if !any_stored {
        return Ok(());
    }
    let (ti, tj, tk) = (h.tau_of(i)?, h.tau_of(j)?, h.tau_of(k)?);
    let lam_x = match x.lambda_class(i, j, k)? {
        Some(l) => l,
        None => return Ok(()),
    };
    let lam_y = match y.lambda_class(ti, tj, tk)? {
        Some(l) => l,
        None => return Ok(()),
    };
    let fhat_ij = match x.morphism(i, j)? {
        Some(m) => m.fhat,
        None => return Ok(()),
    };
    let df_tjk = match y.morphism(tj, tk)? {
        Some(m) => jacobian_matrix(&m.f),
        None => return Ok(()),
    };
    let labels = x.labels_in(&[i, j, k]);
    if labels.is_empty() {
        return Ok(());
    }
    let d_ik = h.delta_or_zero(i, k, x, y)?;
    let d_ij = h.delta_or_zero(i, j, x, y)?;
    let d_jk = h.delta_or_zero(j, k, x, y)?;
    let dh_k = jacobian_matrix(&h.map_of(k)?.f);
    let hhat_i = &h.map_of(i)?.fhat;

    let mut worst = 0.0f64;
    let mut worst_label = String::new();
    for p in labels {
        let (xi, xj, xk) = (&p.coords[i], &p.coords[j], &p.coords[k]);
        let y_label = h
            .label_map
            .get(&p.label)
            .ok_or_else(|| Error::invalid("$.label_map", format!("footprint label '{}' has no image", p.label)))?;
        let yi = y
            .point_in(y_label, ti)
            .ok_or_else(|| Error::invalid("$.label_map", format!("'{y_label}' missing in '{ti}'")))?;
        let yj = y
            .point_in(y_label, tj)
            .ok_or_else(|| Error::invalid("$.label_map", format!("'{y_label}' missing in '{tj}'")))?;
        let e = d_ik.eval(xi) - dh_k.eval(xk) * lam_x.eval(xi) + lam_y.eval(yi) * hhat_i.eval(xi)
            - df_tjk.eval(yj) * d_ij.eval(xi)
            - d_jk.eval(xj) * fhat_ij.eval(xi);
        let r = max_abs(&e);
        if r >= worst {
            worst = r;
            worst_label = p.label.clone();
        }
    }
    report.check(
        format!("five-term ({i}, {j}, {k})"),
        worst,
        tol::POINTWISE,
        format!("alternating sum at shared point '{worst_label}'"),
    );
    Ok(())
}

/// Verifies that `ups` (one representative per source chart) witnesses a
/// homotopy between two strict morphisms: matching footprint images, a
/// per-chart homotopy condition, and the exchange identity on pairs.
pub fn check_2morphism(
    h: &StrictMorphism,
    g: &StrictMorphism,
    ups: &BTreeMap<String, MatrixMap>,
    x: &KuranishiAtlas,
    y: &KuranishiAtlas,
) -> CheckReport {
    let mut report = CheckReport::new();

    // (a) both morphisms induce the same map on footprints
    let same = h.label_map == g.label_map;
    report.push(
        "footprint images",
        same,
        if same { 0.0 } else { 1.0 },
        if same {
            String::new()
        } else {
            "the two morphisms map footprint labels differently".to_string()
        },
    );

    // (b) each ups_i is a homotopy g_i ~ f_(tau_h i, tau_g i) o h_i
    for c in &x.charts {
        let i = c.id.as_str();
        let prefix = format!("upsilon {i}");
        let run = |report: &mut CheckReport| -> Result<()> {
            let (thi, tgi) = (h.tau_of(i)?, g.tau_of(i)?);
            let f_tt = y
                .morphism(thi, tgi)?
                .ok_or_else(|| Error::invalid("$", format!("target atlas has no transition {thi}->{tgi}")))?;
            let m0 = g.map_of(i)?.clone();
            let m1 = h.map_of(i)?.compose(&f_tt)?;
            let u = match ups.get(i) {
                Some(u) => u.clone(),
                None => MatrixMap::zero(y.chart(tgi)?.n(), c.m, c.n()),
            };
            let pairs = strict_pairs(g, x, y, &[i], tgi)?;
            check_homotopy_into(report, &prefix, c, y.chart(tgi)?, &m0, &m1, &u, &pairs);
            Ok(())
        };
        if let Err(e) = run(&mut report) {
            report.fail(prefix, f64::INFINITY, e.to_string());
        }
    }

    // (c) exchange identity on source transitions, at shared points
    for t in &x.transitions {
        if t.i == t.j {
            continue;
        }
        let (i, j) = (t.i.as_str(), t.j.as_str());
        let prefix = format!("exchange ({i}, {j})");
        if let Err(e) = check_exchange(&mut report, h, g, ups, x, y, i, j) {
            report.fail(prefix, f64::INFINITY, e.to_string());
        }
    }
    report
}

fn check_exchange(
    report: &mut CheckReport,
    h: &StrictMorphism,
    g: &StrictMorphism,
    ups: &BTreeMap<String, MatrixMap>,
    x: &KuranishiAtlas,
    y: &KuranishiAtlas,
    i: &str,
    j: &str,
) -> Result<()> {
    let ci = x.chart(i)?;
    let (thi, thj) = (h.tau_of(i)?, h.tau_of(j)?);
    let (tgi, tgj) = (g.tau_of(i)?, g.tau_of(j)?);
    let u_i = match ups.get(i) {
        Some(u) => u.clone(),
        None => MatrixMap::zero(y.chart(tgi)?.n(), ci.m, ci.n()),
    };
    let u_j = match ups.get(j) {
        Some(u) => u.clone(),
        None => MatrixMap::zero(y.chart(tgj)?.n(), x.chart(j)?.m, x.chart(j)?.n()),
    };
    let d_g = g.delta_or_zero(i, j, x, y)?;
    let d_h = h.delta_or_zero(i, j, x, y)?;
    let df_g = match y.morphism(tgi, tgj)? {
        Some(m) => jacobian_matrix(&m.f),
        None => return Ok(()),
    };
    let df_hg = match y.morphism(thj, tgj)? {
        Some(m) => jacobian_matrix(&m.f),
        None => return Ok(()),
    };
    let lam1 = match y.lambda_class(thi, tgi, tgj)? {
        Some(l) => l,
        None => return Ok(()),
    };
    let lam2 = match y.lambda_class(thi, thj, tgj)? {
        Some(l) => l,
        None => return Ok(()),
    };
    let fhat_ij = match x.morphism(i, j)? {
        Some(m) => m.fhat,
        None => return Ok(()),
    };
    let hhat_i = &h.map_of(i)?.fhat;
    let labels = x.labels_in(&[i, j]);
    if labels.is_empty() {
        return Ok(());
    }
    let mut worst = 0.0f64;
    let mut worst_label = String::new();
    for p in labels {
        let (xi, xj) = (&p.coords[i], &p.coords[j]);
        let y_label = h
            .label_map
            .get(&p.label)
            .ok_or_else(|| Error::invalid("$.label_map", format!("footprint label '{}' has no image", p.label)))?;
        let y_tgi = y
            .point_in(y_label, tgi)
            .ok_or_else(|| Error::invalid("$.label_map", format!("'{y_label}' missing in '{tgi}'")))?;
        let y_thj = y
            .point_in(y_label, thj)
            .ok_or_else(|| Error::invalid("$.label_map", format!("'{y_label}' missing in '{thj}'")))?;
        let y_thi = y
            .point_in(y_label, thi)
            .ok_or_else(|| Error::invalid("$.label_map", format!("'{y_label}' missing in '{thi}'")))?;
        let lam_sum = lam1.eval(y_thi) + lam2.eval(y_thi);
        let e = d_g.eval(xi) - df_g.eval(y_tgi) * u_i.eval(xi) + u_j.eval(xj) * fhat_ij.eval(xi)
            - df_hg.eval(y_thj) * d_h.eval(xi)
            - lam_sum * hhat_i.eval(xi);
        let r = max_abs(&e);
        if r >= worst {
            worst = r;
            worst_label = p.label.clone();
        }
    }
    report.check(
        format!("exchange ({i}, {j})"),
        worst,
        tol::POINTWISE,
        format!("alternating sum at shared point '{worst_label}'"),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Serialization. Bundle maps and homotopy representatives are stored as flat
// PolyMaps (row-major); shapes are reconstructed from the charts.

#[derive(Serialize, Deserialize)]
struct TransitionDto {
    i: String,
    j: String,
    dom_i: BoxUnion,
    dom_j: BoxUnion,
    f: PolyMap,
    fhat: PolyMap,
}

#[derive(Serialize, Deserialize)]
struct LambdaDto {
    i: String,
    j: String,
    k: String,
    lam: PolyMap,
}

#[derive(Serialize, Deserialize)]
struct AtlasDto {
    vdim: i64,
    charts: Vec<KuranishiChart>,
    footprint: Vec<SharedPoint>,
    #[serde(default)]
    transitions: Vec<TransitionDto>,
    #[serde(default)]
    lambdas: Vec<LambdaDto>,
}

impl KuranishiAtlas {
    pub fn from_json(text: &str) -> Result<Self> {
        let dto: AtlasDto = serde_json::from_str(text).map_err(|e| Error::invalid("$", format!("atlas parse: {e}")))?;
        let chart_dims: BTreeMap<String, (usize, usize)> = dto
            .charts
            .iter()
            .map(|c| (c.id.clone(), (c.domain.dim, c.m)))
            .collect();
        let dims = |id: &str| -> Result<(usize, usize)> {
            chart_dims
                .get(id)
                .copied()
                .ok_or_else(|| Error::invalid("$.charts", format!("no chart '{id}'")))
        };
        let mut transitions = Vec::new();
        for t in dto.transitions {
            let (_, m_i) = dims(&t.i)?;
            let (_, m_j) = dims(&t.j)?;
            transitions.push(Transition {
                fhat: MatrixMap::new(m_j, m_i, t.fhat.validated()?)?,
                f: t.f.validated()?,
                i: t.i,
                j: t.j,
                dom_i: t.dom_i,
                dom_j: t.dom_j,
            });
        }
        let mut lambdas = Vec::new();
        for e in dto.lambdas {
            let (n_k, _) = dims(&e.k)?;
            let (_, m_i) = dims(&e.i)?;
            lambdas.push(LambdaEntry {
                lam: MatrixMap::new(n_k, m_i, e.lam.validated()?)?,
                i: e.i,
                j: e.j,
                k: e.k,
            });
        }
        KuranishiAtlas {
            vdim: dto.vdim,
            charts: dto.charts,
            footprint: dto.footprint,
            transitions,
            lambdas,
        }
        .validated()
    }

    pub fn to_json(&self) -> String {
        let dto = AtlasDto {
            vdim: self.vdim,
            charts: self.charts.clone(),
            footprint: self.footprint.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| TransitionDto {
                    i: t.i.clone(),
                    j: t.j.clone(),
                    dom_i: t.dom_i.clone(),
                    dom_j: t.dom_j.clone(),
                    f: t.f.clone(),
                    fhat: t.fhat.map.clone(),
                })
                .collect(),
            lambdas: self
                .lambdas
                .iter()
                .map(|e| LambdaDto {
                    i: e.i.clone(),
                    j: e.j.clone(),
                    k: e.k.clone(),
                    lam: e.lam.map.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dto).expect("atlas serialization")
    }
}

#[derive(Serialize, Deserialize)]
struct MorphismDto {
    source: String,
    target: String,
    f: PolyMap,
    fhat: PolyMap,
}

#[derive(Serialize, Deserialize)]
struct DeltaDto {
    i: String,
    j: String,
    delta: PolyMap,
}

#[derive(Serialize, Deserialize)]
struct StrictMorphismDto {
    tau: BTreeMap<String, String>,
    maps: Vec<MorphismDto>,
    #[serde(default)]
    deltas: Vec<DeltaDto>,
    label_map: BTreeMap<String, String>,
}

impl StrictMorphism {
    pub fn from_json(text: &str, x: &KuranishiAtlas, y: &KuranishiAtlas) -> Result<Self> {
        let dto: StrictMorphismDto =
            serde_json::from_str(text).map_err(|e| Error::invalid("$", format!("morphism parse: {e}")))?;
        let mut maps = BTreeMap::new();
        for m in dto.maps {
            let src = x.chart(&m.source)?;
            let dst = y.chart(&m.target)?;
            maps.insert(
                m.source.clone(),
                ChartMorphism::new(
                    m.source,
                    m.target,
                    m.f.validated()?,
                    MatrixMap::new(dst.m, src.m, m.fhat.validated()?)?,
                ),
            );
        }
        let mut deltas = Vec::new();
        for d in dto.deltas {
            let src = x.chart(&d.i)?;
            let tj = dto
                .tau
                .get(&d.j)
                .ok_or_else(|| Error::invalid("$.tau", format!("no target chart for '{}'", d.j)))?;
            let dst = y.chart(tj)?;
            deltas.push(DeltaEntry {
                delta: MatrixMap::new(dst.n(), src.m, d.delta.validated()?)?,
                i: d.i,
                j: d.j,
            });
        }
        Ok(StrictMorphism {
            tau: dto.tau,
            maps,
            deltas,
            label_map: dto.label_map,
        })
    }

    pub fn to_json(&self) -> String {
        let dto = StrictMorphismDto {
            tau: self.tau.clone(),
            maps: self
                .maps
                .values()
                .map(|m| MorphismDto {
                    source: m.source.clone(),
                    target: m.target.clone(),
                    f: m.f.clone(),
                    fhat: m.fhat.map.clone(),
                })
                .collect(),
            deltas: self
                .deltas
                .iter()
                .map(|d| DeltaDto {
                    i: d.i.clone(),
                    j: d.j.clone(),
                    delta: d.delta.map.clone(),
                })
                .collect(),
            label_map: self.label_map.clone(),
        };
        serde_json::to_string_pretty(&dto).expect("morphism serialization")
    }
}
