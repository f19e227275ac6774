//! Damped Newton solving for square polynomial systems, and deterministic
//! multistart zero finding over box-union domains.
//!
//! Convergence demands `||s(x)||_inf < 1e-12`; accepted zeros are rechecked
//! at 1e-9. Candidates are sorted lexicographically before clustering, so the
//! result is independent of start order.

use nalgebra::{DMatrix, DVector};

use crate::poly::PolyMap;
use crate::region::BoxUnion;
use crate::tol;

#[derive(Debug, Clone)]
pub struct NewtonCfg {
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Iteration stops when the sup-norm residual drops below this.
    pub converged: f64,
    /// Final residual bound for accepting a zero.
    pub accept: f64,
}

impl Default for NewtonCfg {
    fn default() -> Self {
        NewtonCfg {
            max_iters: 100,
            max_halvings: 30,
            converged: tol::NEWTON_CONVERGED,
            accept: tol::ZERO_ACCEPT,
        }
    }
}

/// A located zero of a square system with its transversality data.
#[derive(Debug, Clone)]
pub struct Zero {
    pub x: Vec<f64>,
    /// `det ds(x)`; `None` only for the 0-dimensional system.
    pub det: f64,
    pub degenerate: bool,
}

impl Zero {
    pub fn sign(&self) -> i64 {
        if self.degenerate {
            0
        } else if self.det > 0.0 {
            1
        } else {
            -1
        }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Runs damped Newton from `x0`. Returns the converged point or `None`.
pub fn newton(map: &PolyMap, jac: &PolyMap, x0: &[f64], cfg: &NewtonCfg) -> Option<Vec<f64>> {
    let n = map.n_in;
    if n == 0 {
        // The empty system is already solved by the empty point.
        return Some(Vec::new());
    }
    let mut x = x0.to_vec();
    let mut r = map.eval(&x);
    let mut rnorm = sup_norm(&r);
    for _ in 0..cfg.max_iters {
        if rnorm < cfg.converged {
            return Some(x);
        }
        let jflat = jac.eval(&x);
        let j = DMatrix::from_row_slice(map.n_out, n, &jflat);
        let rhs = DVector::from_column_slice(&r).scale(-1.0);
        // QR least squares handles near-rank-deficient Jacobians gracefully.
        let delta = j.clone().qr().solve(&rhs).or_else(|| j.svd(true, true).solve(&rhs, 1e-14).ok())?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, di)| xi + lambda * di).collect();
            let tr = map.eval(&trial);
            let tnorm = sup_norm(&tr);
            if tnorm < rnorm {
                x = trial;
                r = tr;
                rnorm = tnorm;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            return if rnorm < cfg.accept { Some(x) } else { None };
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e8) {
            return None;
        }
    }
    if rnorm < cfg.accept {
        Some(x)
    } else {
        None
    }
}

/// Multistart Newton over `domain`, deduped and sign-classified.
///
/// Seeds come from the domain's deterministic sampler at the given per-axis
/// density. Zeros closer than `tol::ZERO_CLUSTER` merge; each survivor
/// records `det ds` and a degeneracy flag (`|det| < tol::DET_DEGENERATE`).
pub fn find_zeros(map: &PolyMap, domain: &BoxUnion, density: usize, seed: u64) -> Vec<Zero> {
    let cfg = NewtonCfg::default();
    let jac = map.jacobian();
    if map.n_in == 0 {
        // A 0-dimensional chart has the single empty point; the empty
        // Jacobian has determinant +1 by convention.
        return vec![Zero {
            x: Vec::new(),
            det: 1.0,
            degenerate: false,
        }];
    }
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for start in domain.sample(density, seed) {
        if let Some(x) = newton(map, &jac, &start, &cfg) {
            if sup_norm(&map.eval(&x)) <= cfg.accept && domain.contains(&x) {
                candidates.push(x);
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut zeros: Vec<Zero> = Vec::new();
    'next: for x in candidates {
        for z in &zeros {
            let d2: f64 = z.x.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2.sqrt() <= tol::ZERO_CLUSTER {
                continue 'next;
            }
        }
        let jflat = jac.eval(&x);
        let j = DMatrix::from_row_slice(map.n_out, map.n_in, &jflat);
        let det = j.determinant();
        zeros.push(Zero {
            x,
            det,
            degenerate: det.abs() < tol::DET_DEGENERATE,
        });
    }
    zeros
}
