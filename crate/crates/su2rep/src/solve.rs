//! Multistart solver for the representation variety: deterministic
//! low-discrepancy starts on the product of unit spheres, damped
//! Gauss-Newton on the relator system, polish, reducibility and gauge
//! fixing, then trace-fingerprint clustering into conjugation orbits.

use std::collections::BTreeMap;

use kuranishi::{tol, Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::fox::{twisted_cohomology, CohomologyDims};
use crate::presentation::GroupPresentation;
use crate::quat::Quat;
use crate::system::system_eval;

/// Generator images under one homomorphism candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepPoint {
    pub q: Vec<Quat>,
}

impl RepPoint {
    /// Enforces unit norms and relator values +1.
    pub fn validated(self, p: &GroupPresentation) -> Result<Self> {
        for (i, qi) in self.q.iter().enumerate() {
            if (qi.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(
                    format!("$.q[{i}]"),
                    format!("norm {} is not 1", qi.norm()),
                ));
            }
        }
        for (j, r) in p.relator_values(&self.q)?.iter().enumerate() {
            if r.im_norm() > tol::ZERO_ACCEPT || r.w <= 0.0 {
                return Err(Error::invalid(
                    format!("$.relators[{j}]"),
                    format!("relator value ({:.3}, |Im| = {:.3e}) is not +1", r.w, r.im_norm()),
                ));
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOpts {
    pub starts: usize,
    pub seed: u64,
    /// Permit presentations whose representation variety is expected to be
    /// positive-dimensional (non-balanced input).
    pub allow_positive_dim: bool,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts { starts: 100_000, seed: 0, allow_positive_dim: false }
    }
}

/// One conjugation orbit of irreducible representations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOrbit {
    pub representative: RepPoint,
    /// Sorted traces of the fingerprint words, rounded to 1e-6.
    pub fingerprint: Vec<f64>,
    /// Unsorted traces in fingerprint-word order, unrounded.
    pub traces: Vec<f64>,
    pub h: CohomologyDims,
    pub irreducible: bool,
    pub orientation_bit: i8,
    /// Same fingerprint but gauge-fixed representatives farther than 1e-4.
    pub collision: bool,
    /// Number of starts that converged into this orbit.
    pub hits: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub orbits: Vec<RepOrbit>,
    pub attempted: usize,
    pub converged: usize,
    pub warnings: Vec<String>,
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
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Deterministic low-discrepancy starts: a Kronecker sequence in dimension
/// 3g (powers of the root of x^{d+1} = x + 1) with a seed-dependent
/// rotation, mapped to the product of spheres area-preservingly.
pub fn start_points(g: usize, starts: usize, seed: u64) -> Vec<Vec<Quat>> {
    let d = 3 * g;
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let mut rng = SplitMix(seed.wrapping_mul(0x5851f42d4c957f2d).wrapping_add(0x14057b7ef767814f));
    let shifts: Vec<f64> = (0..d).map(|_| rng.unit()).collect();
    (0..starts)
        .map(|n| {
            let u: Vec<f64> = (0..d)
                .map(|j| (shifts[j] + (n as f64 + 1.0) * alphas[j]).fract())
                .collect();
            (0..g).map(|i| sphere_point(u[3 * i], u[3 * i + 1], u[3 * i + 2])).collect()
        })
        .collect()
}

/// Area-preserving map from the unit cube to S³.
fn sphere_point(u1: f64, u2: f64, u3: f64) -> Quat {
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (t2, t3) = (std::f64::consts::TAU * u2, std::f64::consts::TAU * u3);
    Quat::new(a * t2.sin(), a * t2.cos(), b * t3.sin(), b * t3.cos())
}

/// Levenberg-damped Gauss-Newton from one start. Returns coordinates with
/// max-norm residual at or below the polish target, or None.
fn descend(p: &GroupPresentation, start: &[Quat], target: f64) -> Option<Vec<f64>> {
    let mut v: Vec<f64> = start.iter().flat_map(|q| [q.w, q.x, q.y, q.z]).collect();
    let mut lambda = 1e-3f64;
    let mut eval = system_eval(p, &v);
    let mut fnorm = eval.residual.amax();
    for iter in 0..60 {
        if fnorm <= target {
            return Some(v);
        }
        if iter >= 15 && fnorm > 0.3 {
            return None;
        }
        let jt = eval.jacobian.transpose();
        let jtj = &jt * &eval.jacobian;
        let jtf = &jt * &eval.residual;
        let mut improved = false;
        for _ in 0..10 {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda = (lambda * 10.0).max(1e-8);
                continue;
            };
            let delta = chol.solve(&jtf);
            let cand: Vec<f64> = v.iter().zip(delta.iter()).map(|(a, d)| a - d).collect();
            let cand_eval = system_eval(p, &cand);
            let cand_norm = cand_eval.residual.amax();
            if cand_norm < fnorm {
                v = cand;
                eval = cand_eval;
                fnorm = cand_norm;
                lambda = (lambda / 3.0).max(1e-10);
                improved = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e10 {
                return None;
            }
        }
        if !improved {
            return if fnorm <= target { Some(v) } else { None };
        }
    }
    if fnorm <= target { Some(v) } else { None }
}

fn quats_of(v: &[f64]) -> Vec<Quat> {
    v.chunks(4).map(|c| Quat::new(c[0], c[1], c[2], c[3])).collect()
}

/// Second singular value of the 3 x g matrix of imaginary parts; the point
/// is reducible exactly when this drops below threshold (all imaginary
/// axes parallel, images in a common circle subgroup).
pub fn irreducibility_gap(q: &[Quat]) -> f64 {
    let m = DMatrix::from_fn(3, q.len(), |r, c| q[c].im()[r]);
    let svd = m.svd(false, false);
    if svd.singular_values.len() < 2 {
        0.0
    } else {
        svd.singular_values[1]
    }
}

const REDUCIBLE_GAP: f64 = 1e-7;
const GAUGE_ANCHOR: f64 = 1e-6;

/// Conjugates the tuple so the first anchored imaginary part points along
/// +z and the next independent one lies in the x-z plane with x >= 0.
pub fn gauge_fix(q: &[Quat]) -> Vec<Quat> {
    let mut out = q.to_vec();
    let Some(a1) = out.iter().position(|qi| qi.im_norm() > GAUGE_ANCHOR) else {
        return out;
    };
    let v = out[a1].im();
    let n = out[a1].im_norm();
    let (vx, vy, vz) = (v[0] / n, v[1] / n, v[2] / n);
    let axis_norm = (vx * vx + vy * vy).sqrt();
    let u1 = if axis_norm > 1e-12 {
        // Rotate v onto +z around the axis v x e_z.
        Quat::from_axis_angle([vy, -vx, 0.0], vz.clamp(-1.0, 1.0).acos())
    } else if vz > 0.0 {
        crate::quat::ONE
    } else {
        Quat::from_axis_angle([1.0, 0.0, 0.0], std::f64::consts::PI)
    };
    for qi in &mut out {
        *qi = u1.mul(*qi).mul(u1.conj());
    }
    let a2 = out
        .iter()
        .position(|qi| (qi.x * qi.x + qi.y * qi.y).sqrt() > GAUGE_ANCHOR);
    if let Some(a2) = a2 {
        let psi = out[a2].y.atan2(out[a2].x);
        let u2 = Quat::from_axis_angle([0.0, 0.0, 1.0], -psi);
        for qi in &mut out {
            *qi = u2.mul(*qi).mul(u2.conj());
        }
    }
    out
}

/// Sorted traces of the fingerprint words in integer millionths.
pub fn fingerprint_key(p: &GroupPresentation, q: &[Quat]) -> Result<Vec<i64>> {
    let mut key: Vec<i64> = p
        .fingerprint_words()
        .iter()
        .map(|w| p.word_eval(w, q).map(|r| (r.trace() * 1e6).round() as i64))
        .collect::<Result<_>>()?;
    key.sort_unstable();
    Ok(key)
}

struct Accepted {
    fixed: Vec<Quat>,
    key: Vec<i64>,
    traces: Vec<f64>,
}

fn accept(p: &GroupPresentation, start: &[Quat]) -> Option<Accepted> {
    let coarse = descend(p, start, 1e-10)?;
    let q = quats_of(&coarse);
    let values: Vec<Quat> = p.relator_values(&q).ok()?;
    if values.iter().any(|r| r.w <= 0.5) {
        return None;
    }
    // Polish: same damped iteration, tighter target.
    let polished = descend(p, &q, tol::NEWTON_CONVERGED)?;
    let q = quats_of(&polished);
    if p.relator_values(&q).ok()?.iter().any(|r| r.w <= 1.0 - 1e-9) {
        return None;
    }
    if irreducibility_gap(&q) < REDUCIBLE_GAP {
        return None;
    }
    let fixed = gauge_fix(&q);
    let key = fingerprint_key(p, &fixed).ok()?;
    let traces: Vec<f64> = p
        .fingerprint_words()
        .iter()
        .map(|w| p.word_eval(w, &fixed).map(|r| r.trace()))
        .collect::<Result<_>>()
        .ok()?;
    Some(Accepted { fixed, key, traces })
}

/// Runs the full pipeline on explicit start tuples. Entirely deterministic:
/// results depend only on the start list, never on thread scheduling.
pub fn solve_from_starts(p: &GroupPresentation, starts: &[Vec<Quat>]) -> Result<SolveReport> {
    let found: Vec<Option<Accepted>> =
        starts.par_iter().map(|s| accept(p, s)).collect();
    let attempted = starts.len();
    let converged = found.iter().flatten().count();

    struct Cluster {
        representative: Vec<Quat>,
        traces: Vec<f64>,
        hits: usize,
        max_dev: f64,
    }
    let mut clusters: BTreeMap<Vec<i64>, Cluster> = BTreeMap::new();
    for a in found.into_iter().flatten() {
        match clusters.get_mut(&a.key) {
            None => {
                clusters.insert(
                    a.key,
                    Cluster { representative: a.fixed, traces: a.traces, hits: 1, max_dev: 0.0 },
                );
            }
            Some(c) => {
                c.hits += 1;
                let dev = c
                    .representative
                    .iter()
                    .zip(&a.fixed)
                    .map(|(x, y)| x.dist(*y))
                    .fold(0.0f64, f64::max);
                c.max_dev = c.max_dev.max(dev);
            }
        }
    }

    let mut warnings = Vec::new();
    let mut orbits = Vec::with_capacity(clusters.len());
    for (key, c) in clusters {
        let h = twisted_cohomology(p, &c.representative)?;
        let gap = irreducibility_gap(&c.representative);
        let irreducible = h.h0 == 0;
        if irreducible != (gap >= REDUCIBLE_GAP) {
            warnings.push(format!(
                "orbit {:?}: h0 = {} disagrees with imaginary-rank gap {:.3e}",
                key, h.h0, gap
            ));
        }
        let collision = c.max_dev > 1e-4;
        if collision {
            warnings.push(format!(
                "fingerprint collision: representatives differ by {:.3e}",
                c.max_dev
            ));
        }
        orbits.push(RepOrbit {
            representative: RepPoint { q: c.representative },
            fingerprint: key.iter().map(|&k| k as f64 * 1e-6).collect(),
            traces: c.traces,
            h,
            irreducible,
            orientation_bit: 1,
            collision,
            hits: c.hits,
        });
    }
    Ok(SolveReport { orbits, attempted, converged, warnings })
}

/// Multistart solve with deterministic seeding.
pub fn solve_reps(p: &GroupPresentation, opts: SolveOpts) -> Result<SolveReport> {
    if !p.balanced() && !opts.allow_positive_dim {
        return Err(Error::Unsupported(format!(
            "presentation has {} relators for {} generators; its variety is positive-dimensional \
             (pass allow_positive_dim to proceed)",
            p.relators.len(),
            p.g()
        )));
    }
    let mut pre_warnings = Vec::new();
    if p.balanced() {
        let report = p.homology_sphere_check()?;
        if !report.homology_sphere {
            pre_warnings.push(format!(
                "not an integral homology sphere (det = {}); nontrivial reducible \
                 representations may exist",
                report.det
            ));
        }
    } else {
        pre_warnings.push("non-balanced presentation: orbit clustering may not terminate in \
             finitely many fingerprints"
            .to_string());
    }
    let starts = start_points(p.g(), opts.starts, opts.seed);
    let mut report = solve_from_starts(p, &starts)?;
    report.warnings.splice(0..0, pre_warnings);
    Ok(report)
}
