//! Fox-calculus three-term complex at a representation: conjugation
//! differential into the generator copies of su(2), then the Ad-evaluated
//! free derivatives of the relators. Cohomology ranks come from the same
//! singular-value machinery the chart complexes use.
//!
//! Perturbation convention: generators move by left multiplication
//! `q_i -> exp(ṽ_i) q_i` and relator values are pulled back on the right,
//! which makes the block of `d1` at (relator j, generator i) exactly the
//! Ad-evaluation of the Fox derivative ∂r_j/∂x_i.

use kuranishi::tangent::{three_term_ranks, ConeRanks};
use kuranishi::{tol, Error, Result};
use nalgebra::{DMatrix, Matrix3};

use crate::presentation::GroupPresentation;
use crate::quat::Quat;

/// Constant-coefficient complex su(2) → su(2)^g → su(2)^r.
#[derive(Debug, Clone)]
pub struct FoxComplex {
    pub d0: DMatrix<f64>,
    pub d1: DMatrix<f64>,
}

/// Cohomology dimensions of the Fox complex. `h2` identifies the top group
/// through duality with `h1` on balanced presentations (the presentation
/// 2-complex alone cannot see the top cell); `h2_raw` is the honest
/// cokernel of `d1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CohomologyDims {
    pub h0: usize,
    pub h1: usize,
    pub h2: usize,
    pub h2_raw: usize,
    pub warning: bool,
}

/// Ad-evaluation of the Fox derivative of `x^e` with respect to `x`:
/// `1 + x + … + x^{e−1}` for positive e, `−(x⁻¹ + … + x^{e})` for negative.
fn power_fox(q: Quat, e: i64) -> Matrix3<f64> {
    let mut sum = Matrix3::zeros();
    if e > 0 {
        let ad = q.ad();
        let mut acc = Matrix3::identity();
        for _ in 0..e {
            sum += acc;
            acc = ad * acc;
        }
    } else {
        let ad_inv = q.conj().ad();
        let mut acc = Matrix3::identity();
        for _ in 0..(-e) {
            acc = ad_inv * acc;
            sum -= acc;
        }
    }
    sum
}

/// The pair of differentials at `q`, with no validity checks.
pub fn fox_blocks(p: &GroupPresentation, q: &[Quat]) -> Result<FoxComplex> {
    let g = p.g();
    if q.len() != g {
        return Err(Error::dim("representation tuple", g, q.len()));
    }
    let mut d0 = DMatrix::zeros(3 * g, 3);
    for i in 0..g {
        let block = Matrix3::identity() - q[i].ad();
        d0.view_mut((3 * i, 0), (3, 3)).copy_from(&block);
    }
    let mut d1 = DMatrix::zeros(3 * p.relators.len(), 3 * g);
    for (j, word) in p.relators.iter().enumerate() {
        let mut prefix = Matrix3::<f64>::identity();
        for &(i, e) in word {
            let block: Matrix3<f64> = prefix * power_fox(q[i], e);
            let mut view = d1.view_mut((3 * j, 3 * i), (3, 3));
            view += block;
            prefix *= q[i].powi(e).ad();
        }
    }
    Ok(FoxComplex { d0, d1 })
}

/// Validated complex at a representation: relator residuals must be below
/// the zero-acceptance tolerance and `d1·d0` must vanish numerically.
pub fn fox_complex(p: &GroupPresentation, q: &[Quat]) -> Result<FoxComplex> {
    let residual = p.residual(q)?;
    if residual > tol::ZERO_ACCEPT {
        return Err(Error::invalid(
            "$.representation",
            format!("relator residual {residual:.3e} exceeds {:.1e}", tol::ZERO_ACCEPT),
        ));
    }
    let complex = fox_blocks(p, q)?;
    let product = &complex.d1 * &complex.d0;
    let worst = product.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if worst > 1e-8 {
        return Err(Error::invalid(
            "$.representation",
            format!("d1·d0 has entry {worst:.3e}, not a complex at 1e-8"),
        ));
    }
    Ok(complex)
}

/// Cohomology dimensions at a representation.
pub fn twisted_cohomology(p: &GroupPresentation, q: &[Quat]) -> Result<CohomologyDims> {
    let complex = fox_complex(p, q)?;
    let ranks = cohomology_of(&complex, p.balanced())?;
    Ok(ranks)
}

/// Ranks of an already-built complex.
pub fn cohomology_of(complex: &FoxComplex, balanced: bool) -> Result<CohomologyDims> {
    let ConeRanks { t0, t1, t2, warning } =
        three_term_ranks(&complex.d0, &complex.d1, tol::SVD_RANK)?;
    let h2 = if balanced { t2 + t0 - 3 } else { t2 };
    Ok(CohomologyDims { h0: t0, h1: t1, h2, h2_raw: t2, warning })
}
