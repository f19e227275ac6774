//! Signed zero counts of transversally perturbed sections, deformation
//! sweeps over one-parameter families, fiber products of charts over a
//! common target space, and classical intersection numbers.
//!
//! Counts are defined for charts of virtual dimension zero: the section is
//! shifted by a deterministic pseudo-random constant of prescribed norm,
//! its zeros are found by multistart Newton, and each zero contributes the
//! chart orientation times the sign of the Jacobian determinant. The
//! constant-shift perturbation is only valid when all zeros stay strictly
//! inside the domain, which the margin check enforces on every zero found.

use serde::Serialize;

use crate::chart::KuranishiChart;
use crate::newton;
use crate::poly::PolyMap;
use crate::region::BoxUnion;
use crate::tol;
use crate::KuranishiAtlas;
use crate::{Error, Result};

/// Result of a perturbed count: `value = plus - minus`, certified when no
/// zero had a near-singular Jacobian.
#[derive(Debug, Clone, Serialize)]
pub struct SignedCount {
    pub plus: usize,
    pub minus: usize,
    pub value: i64,
    pub degenerate_zeros: usize,
    pub perturbation: Vec<f64>,
}

impl SignedCount {
    pub fn certified(&self) -> bool {
        self.degenerate_zeros == 0
    }

    fn sum(counts: &[SignedCount]) -> SignedCount {
        SignedCount {
            plus: counts.iter().map(|c| c.plus).sum(),
            minus: counts.iter().map(|c| c.minus).sum(),
            value: counts.iter().map(|c| c.value).sum(),
            degenerate_zeros: counts.iter().map(|c| c.degenerate_zeros).sum(),
            perturbation: counts.iter().flat_map(|c| c.perturbation.iter().copied()).collect(),
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn uniform01(state: &mut u64) -> f64 {
    // 53 mantissa bits, strictly inside (0, 1)
    ((splitmix64(state) >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Deterministic direction vector of Euclidean norm `eps`, drawn from the
/// seed stream; `attempt` advances the stream for retries.
fn perturbation_vector(n: usize, eps: f64, seed: u64, attempt: u64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut state = seed
        .wrapping_mul(0xD1B54A32D192ED03)
        .wrapping_add(attempt.wrapping_mul(0xA0761D6478BD642F))
        .wrapping_add(0x2545F4914F6CDD1D);
    let mut c = Vec::with_capacity(n);
    while c.len() < n {
        let u1 = uniform01(&mut state);
        let u2 = uniform01(&mut state);
        let r = (-2.0 * u1.ln()).sqrt();
        c.push(r * (2.0 * std::f64::consts::PI * u2).cos());
        if c.len() < n {
            c.push(r * (2.0 * std::f64::consts::PI * u2).sin());
        }
    }
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-300 {
        let mut unit = vec![0.0; n];
        unit[0] = eps;
        return unit;
    }
    c.into_iter().map(|v| v * eps / norm).collect()
}

/// Multistart density keeping the total number of starts near 1e5.
fn default_density(n: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let budget = (1e5f64).powf(1.0 / n as f64).floor() as usize;
    budget.clamp(2, 12)
}

struct Attempt {
    count: SignedCount,
    margin_violation: Option<(Vec<f64>, f64)>,
}

fn attempt_count(chart: &KuranishiChart, eps: f64, seed: u64, margin: f64, attempt: u64) -> Attempt {
    let n = chart.n();
    let c = perturbation_vector(n, eps, seed, attempt);
    let shifted = chart
        .section
        .sub(&PolyMap::constant(n, &c))
        .expect("constant shift preserves shape");
    let zeros = newton::find_zeros(&shifted, &chart.domain, default_density(n), seed);
    let mut plus = 0usize;
    let mut minus = 0usize;
    let mut degenerate = 0usize;
    let mut margin_violation = None;
    for z in &zeros {
        let dist = chart.domain.boundary_distance(&z.x);
        if dist < margin && margin_violation.is_none() {
            margin_violation = Some((z.x.clone(), dist));
        }
        if z.degenerate {
            degenerate += 1;
        } else {
            match chart.orientation as i64 * z.sign() {
                1 => plus += 1,
                _ => minus += 1,
            }
        }
    }
    Attempt {
        count: SignedCount {
            plus,
            minus,
            value: plus as i64 - minus as i64,
            degenerate_zeros: degenerate,
            perturbation: c,
        },
        margin_violation,
    }
}

/// Perturbs the section of a zero-virtual-dimension chart by a constant of
/// norm `eps` and counts its zeros with Jacobian signs. Retries with fresh
/// constants from the same seed stream, up to ten attempts, whenever a zero
/// is degenerate. Zeros closer to the domain boundary than `margin` abort
/// the count, since escaping zeros invalidate the perturbation argument.
pub fn perturb_and_count(chart: &KuranishiChart, eps: f64, seed: u64, margin: f64) -> Result<SignedCount> {
    if chart.vdim() != 0 {
        return Err(Error::Unsupported(format!(
            "counting needs virtual dimension 0, chart '{}' has {}",
            chart.id,
            chart.vdim()
        )));
    }
    const MAX_ATTEMPTS: u64 = 10;
    for attempt in 0..MAX_ATTEMPTS {
        let result = attempt_count(chart, eps, seed, margin, attempt);
        if let Some((point, _)) = result.margin_violation {
            return Err(Error::MarginViolation { point, margin });
        }
        if result.count.degenerate_zeros == 0 {
            return Ok(result.count);
        }
    }
    Err(Error::DegenerateCount {
        attempts: MAX_ATTEMPTS as usize,
    })
}

/// Counting options shared by the atlas-level entry points.
#[derive(Debug, Clone, Copy)]
pub struct CountOpts {
    pub eps: f64,
    pub seed: u64,
    pub margin: f64,
}

impl Default for CountOpts {
    fn default() -> Self {
        CountOpts {
            eps: 1e-3,
            seed: 0,
            margin: 0.1,
        }
    }
}

/// Virtual count of an atlas in one of the supported regimes: a single
/// chart, charts with pairwise disjoint footprints (counts add up), or an
/// atlas dominated by one chart whose footprint carries every labeled point
/// (the dominating chart is counted after the whole atlas passes its
/// consistency check).
pub fn virtual_count(atlas: &KuranishiAtlas, opts: CountOpts) -> Result<SignedCount> {
    if atlas.vdim != 0 {
        return Err(Error::Unsupported(format!(
            "counting needs virtual dimension 0, atlas has {}",
            atlas.vdim
        )));
    }
    if atlas.charts.len() == 1 {
        return perturb_and_count(&atlas.charts[0], opts.eps, opts.seed, opts.margin);
    }
    let label_sets: Vec<std::collections::BTreeSet<&str>> = atlas
        .charts
        .iter()
        .map(|c| c.footprint.iter().map(|p| p.label.as_str()).collect())
        .collect();
    let disjoint = label_sets.iter().enumerate().all(|(i, a)| {
        label_sets
            .iter()
            .skip(i + 1)
            .all(|b| a.intersection(b).next().is_none())
    });
    if disjoint {
        let counts = atlas
            .charts
            .iter()
            .map(|c| perturb_and_count(c, opts.eps, opts.seed, opts.margin))
            .collect::<Result<Vec<_>>>()?;
        return Ok(SignedCount::sum(&counts));
    }
    let all_labels: std::collections::BTreeSet<&str> =
        atlas.footprint.iter().map(|p| p.label.as_str()).collect();
    let dominating = atlas
        .charts
        .iter()
        .zip(&label_sets)
        .find(|(_, set)| all_labels.iter().all(|l| set.contains(l)))
        .map(|(c, _)| c);
    if let Some(chart) = dominating {
        let report = atlas.check();
        if !report.passed() {
            return Err(Error::Unsupported(format!(
                "dominated regime requires a consistent atlas; failing conditions: {:?}",
                report.failed_conditions()
            )));
        }
        return perturb_and_count(chart, opts.eps, opts.seed, opts.margin);
    }
    Err(Error::Unsupported(
        "unsupported regime: overlapping charts with no dominating chart".into(),
    ))
}

/// One-parameter family of sections over a fixed domain: the section takes
/// the domain variables with the parameter appended as the last input.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FamilyChart {
    pub id: String,
    pub domain: BoxUnion,
    pub m: usize,
    pub section: PolyMap,
    pub orientation: i8,
}

impl FamilyChart {
    pub fn validated(self) -> Result<Self> {
        self.domain.validate()?;
        let section = self.section.validated()?;
        if section.n_in != self.domain.dim + 1 {
            return Err(Error::dim(
                "family section variables (domain plus parameter)",
                self.domain.dim + 1,
                section.n_in,
            ));
        }
        if section.n_out != self.m {
            return Err(Error::dim("family section outputs", self.m, section.n_out));
        }
        if self.orientation != 1 && self.orientation != -1 {
            return Err(Error::invalid("$.orientation", "orientation must be +1 or -1"));
        }
        Ok(FamilyChart { section, ..self })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let family: FamilyChart =
            serde_json::from_str(text).map_err(|e| Error::invalid("$", format!("family parse: {e}")))?;
        family.validated()
    }

    /// The chart at a fixed parameter value; its footprint is left empty.
    pub fn slice(&self, t: f64) -> Result<KuranishiChart> {
        KuranishiChart::new(
            format!("{}@{t}", self.id),
            self.domain.clone(),
            self.m,
            self.section.fix_last(t)?,
            self.orientation,
            Vec::new(),
        )
    }
}

/// Count at one parameter value of a sweep; `error` is set when the slice
/// failed its compactness or degeneracy checks.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSlice {
    pub t: f64,
    pub count: Option<SignedCount>,
    pub error: Option<String>,
}

/// Outcome of a deformation sweep. `invariant` holds when every slice
/// produced a certified count and all values agree.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub slices: Vec<SweepSlice>,
    pub invariant: bool,
}

/// Counts across an evenly spaced parameter grid on [0, 1].
pub fn deformation_sweep(family: &FamilyChart, grid: usize, opts: CountOpts) -> Result<SweepResult> {
    if grid < 2 {
        return Err(Error::invalid("$.grid", "sweep needs at least two grid points"));
    }
    let mut slices = Vec::with_capacity(grid);
    for idx in 0..grid {
        let t = idx as f64 / (grid - 1) as f64;
        let slice = family
            .slice(t)
            .and_then(|chart| perturb_and_count(&chart, opts.eps, opts.seed, opts.margin));
        slices.push(match slice {
            Ok(count) => SweepSlice {
                t,
                count: Some(count),
                error: None,
            },
            Err(e) => SweepSlice {
                t,
                count: None,
                error: Some(e.to_string()),
            },
        });
    }
    let values: Vec<Option<i64>> = slices
        .iter()
        .map(|s| s.count.as_ref().filter(|c| c.certified()).map(|c| c.value))
        .collect();
    let invariant = values.iter().all(|v| v.is_some()) && values.windows(2).all(|w| w[0] == w[1]);
    Ok(SweepResult { slices, invariant })
}

/// Fiber product of two charts over maps into a common `R^k`: the product
/// domain with the section `(s_X(x), s_Y(y), gX(x) - gY(y))`. The extra `k`
/// obstruction directions make the virtual dimension additive minus `k`.
/// The orientation is the product of the factors' orientations, with the
/// obstruction blocks ordered as written. Footprint points are pairs of
/// labels whose base images match; near-matches inside the pointwise
/// tolerance that still miss the footprint residual bound are recorded in
/// the chart notes instead of being included.
pub fn fiber_product(
    x: &KuranishiChart,
    g_x: &PolyMap,
    y: &KuranishiChart,
    g_y: &PolyMap,
) -> Result<KuranishiChart> {
    if g_x.n_in != x.n() {
        return Err(Error::dim("base map variables on the first factor", x.n(), g_x.n_in));
    }
    if g_y.n_in != y.n() {
        return Err(Error::dim("base map variables on the second factor", y.n(), g_y.n_in));
    }
    let k = g_x.n_out;
    if g_y.n_out != k {
        return Err(Error::dim("base dimension", k, g_y.n_out));
    }
    let total = x.n() + y.n();
    let s_x = x.section.embed(total, 0)?;
    let s_y = y.section.embed(total, x.n())?;
    let base_diff = g_x.embed(total, 0)?.sub(&g_y.embed(total, x.n())?)?;
    let section = PolyMap::stack(&[&s_x, &s_y, &base_diff])?;
    let mut footprint = Vec::new();
    let mut notes = Vec::new();
    for p in &x.footprint {
        for q in &y.footprint {
            let img_x = g_x.eval(&p.x);
            let img_y = g_y.eval(&q.x);
            let gap = img_x
                .iter()
                .zip(&img_y)
                .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            if gap <= tol::FOOTPRINT_RESIDUAL {
                let mut coords = p.x.clone();
                coords.extend_from_slice(&q.x);
                footprint.push(crate::chart::FootprintPoint {
                    label: format!("{}|{}", p.label, q.label),
                    x: coords,
                });
            } else if gap <= tol::POINTWISE {
                notes.push(format!(
                    "base images of '{}' and '{}' match to {gap:.3e} but miss the footprint residual bound",
                    p.label, q.label
                ));
            }
        }
    }
    let mut chart = KuranishiChart::new(
        format!("{}x{}", x.id, y.id),
        x.domain.product(&y.domain),
        x.m + y.m + k,
        section,
        x.orientation * y.orientation,
        footprint,
    )?;
    chart.notes = notes;
    Ok(chart)
}

/// Signed intersection number of two obstruction-free charts mapped into a
/// common `R^k` of complementary dimension.
pub fn intersection_number(
    x: &KuranishiChart,
    g_x: &PolyMap,
    y: &KuranishiChart,
    g_y: &PolyMap,
    opts: CountOpts,
) -> Result<i64> {
    if x.m != 0 || y.m != 0 {
        return Err(Error::Unsupported(
            "intersection numbers are defined for charts without obstruction directions".into(),
        ));
    }
    if x.n() + y.n() != g_x.n_out {
        return Err(Error::dim("complementary dimensions", g_x.n_out, x.n() + y.n()));
    }
    let product = fiber_product(x, g_x, y, g_y)?;
    Ok(perturb_and_count(&product, opts.eps, opts.seed, opts.margin)?.value)
}
