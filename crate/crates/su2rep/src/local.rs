//! Kuranishi charts around a solved representation: rigid orbits become
//! zero-dimensional point charts, positive-dimensional strata of
//! non-balanced presentations get a polynomial obstruction section fitted
//! over a harmonic slice through the orbit.

use kuranishi::tangent::harmonic_bases;
use kuranishi::poly::Term;
use kuranishi::{tol, BoxUnion, Error, FootprintPoint, KuranishiChart, PolyMap, Result};
use nalgebra::{DMatrix, DVector};

use crate::fox::{cohomology_of, fox_complex, FoxComplex};
use crate::presentation::GroupPresentation;
use crate::quat::{Quat, BASIS};
use crate::solve::RepPoint;
use crate::system::system_eval;

#[derive(Debug, Clone, Copy)]
pub struct LocalChartOpts {
    /// Half-width of the chart domain cube in slice coordinates.
    pub radius: f64,
    /// Total degree of the fitted obstruction section.
    pub order: usize,
    pub allow_positive_dim: bool,
    pub allow_reducible: bool,
}

impl Default for LocalChartOpts {
    fn default() -> Self {
        LocalChartOpts { radius: 0.1, order: 3, allow_positive_dim: false, allow_reducible: false }
    }
}

/// Builds the local chart at a representation. The obstruction rank is the
/// raw cokernel of the relator differential; for rigid points of balanced
/// presentations this equals the first cohomology and the chart is a
/// single point of virtual dimension zero.
pub fn local_chart(
    p: &GroupPresentation,
    rep: &RepPoint,
    orientation: i8,
    opts: LocalChartOpts,
) -> Result<KuranishiChart> {
    if opts.radius <= 0.0 || !opts.radius.is_finite() {
        return Err(Error::invalid("$.radius", "radius must be positive"));
    }
    if opts.order == 0 {
        return Err(Error::invalid("$.order", "fit order must be at least 1"));
    }
    let complex = fox_complex(p, &rep.q)?;
    let dims = cohomology_of(&complex, p.balanced())?;
    if dims.h0 > 0 && !opts.allow_reducible {
        return Err(Error::Unsupported(format!(
            "representation has stabilizer directions (h0 = {}); pass allow_reducible to chart it",
            dims.h0
        )));
    }
    let id = chart_id(p, &rep.q)?;

    if dims.h1 == 0 {
        // Rigid orbit: a point with as many obstruction directions as h2.
        let m = dims.h2;
        return KuranishiChart::new(
            id,
            BoxUnion::point(),
            m,
            PolyMap::zero(0, m),
            orientation,
            vec![FootprintPoint { label: "orbit".into(), x: Vec::new() }],
        );
    }

    if p.balanced() {
        return Err(Error::Unsupported(format!(
            "positive-dimensional stratum (h1 = {}) of a balanced presentation: the chart \
             section is not determined by the presentation complex",
            dims.h1
        )));
    }
    if !opts.allow_positive_dim {
        return Err(Error::Unsupported(format!(
            "representation sits on a positive-dimensional stratum (h1 = {}); pass \
             allow_positive_dim to chart it",
            dims.h1
        )));
    }

    fitted_chart(p, rep, orientation, opts, &complex, dims.h1, dims.h2_raw, id)
}

fn chart_id(p: &GroupPresentation, q: &[Quat]) -> Result<String> {
    let mut traces: Vec<f64> = p
        .fingerprint_words()
        .iter()
        .map(|w| p.word_eval(w, q).map(|r| r.trace()))
        .collect::<Result<_>>()?;
    traces.sort_by(f64::total_cmp);
    let parts: Vec<String> = traces.iter().map(|t| format!("{t:.6}")).collect();
    Ok(format!("rep[{}]", parts.join(",")))
}

/// Orthonormal basis of the column space: the complement of the cokernel.
fn column_space_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let coker = kuranishi::tangent::cokernel_basis(m, tol::SVD_RANK);
    if coker.ncols() == 0 {
        return DMatrix::identity(m.nrows(), m.nrows());
    }
    kuranishi::tangent::cokernel_basis(&coker, tol::SVD_RANK)
}

/// Fixed data of the square slice system at one representation.
struct SliceSystem<'a> {
    p: &'a GroupPresentation,
    rho: &'a [Quat],
    /// Harmonic slice directions, `3g x n`.
    b1: DMatrix<f64>,
    /// Image of the relator differential, `3r x r1`.
    b_im1: DMatrix<f64>,
    /// Conjugation directions, `3g x r0`.
    b_im0: DMatrix<f64>,
    /// Jacobian of `xi_hat` in the raw coordinates, `3g x 4g`.
    lblk: DMatrix<f64>,
}

impl SliceSystem<'_> {
    fn g(&self) -> usize {
        self.rho.len()
    }

    fn r(&self) -> usize {
        self.p.relators.len()
    }

    /// Perturbation of the tuple relative to the base point, `3g` entries.
    fn xi_hat(&self, q: &[Quat]) -> DVector<f64> {
        let mut v = DVector::zeros(3 * self.g());
        for (i, qi) in q.iter().enumerate() {
            let im = qi.mul(self.rho[i].conj()).im();
            v[3 * i] = im[0];
            v[3 * i + 1] = im[1];
            v[3 * i + 2] = im[2];
        }
        v
    }

    /// Newton solve for the representation pinned to slice coordinate x:
    /// relator defects vanish along the image of the differential, norms
    /// stay 1, the harmonic component equals x, the gauge component 0.
    fn solve_at(&self, x: &[f64]) -> Result<Vec<Quat>> {
        let (g, r) = (self.g(), self.r());
        let dim = 4 * g;
        let r1 = self.b_im1.ncols();
        let r0 = self.b_im0.ncols();
        let n = self.b1.ncols();
        let slice_jac = self.b1.transpose() * &self.lblk;
        let gauge_jac = self.b_im0.transpose() * &self.lblk;

        let xi = &self.b1 * DVector::from_column_slice(x);
        let mut v = Vec::with_capacity(dim);
        for i in 0..g {
            let q0 = Quat::new(1.0, xi[3 * i], xi[3 * i + 1], xi[3 * i + 2])
                .normalize()
                .mul(self.rho[i]);
            v.extend_from_slice(&[q0.w, q0.x, q0.y, q0.z]);
        }

        for _ in 0..40 {
            let eval = system_eval(self.p, &v);
            let quats: Vec<Quat> =
                v.chunks(4).map(|c| Quat::new(c[0], c[1], c[2], c[3])).collect();
            let xi_hat = self.xi_hat(&quats);

            let mut resid = DVector::zeros(dim);
            resid
                .rows_mut(0, r1)
                .copy_from(&(self.b_im1.transpose() * eval.residual.rows(0, 3 * r)));
            resid.rows_mut(r1, g).copy_from(&eval.residual.rows(3 * r, g));
            let slice_part = self.b1.transpose() * &xi_hat - DVector::from_column_slice(x);
            resid.rows_mut(r1 + g, n).copy_from(&slice_part);
            resid
                .rows_mut(r1 + g + n, r0)
                .copy_from(&(self.b_im0.transpose() * &xi_hat));

            if resid.amax() <= tol::NEWTON_CONVERGED {
                return Ok(quats);
            }

            let mut jac = DMatrix::zeros(dim, dim);
            jac.rows_mut(0, r1)
                .copy_from(&(self.b_im1.transpose() * eval.jacobian.rows(0, 3 * r)));
            jac.rows_mut(r1, g).copy_from(&eval.jacobian.rows(3 * r, g));
            jac.rows_mut(r1 + g, n).copy_from(&slice_jac);
            jac.rows_mut(r1 + g + n, r0).copy_from(&gauge_jac);

            let Some(delta) = jac.lu().solve(&resid) else {
                return Err(Error::Singular("slice Newton system is singular".into()));
            };
            for (vi, d) in v.iter_mut().zip(delta.iter()) {
                *vi -= d;
            }
        }
        Err(Error::Singular(format!("slice Newton did not converge at x = {x:?}")))
    }
}

#[allow(clippy::too_many_arguments)]
fn fitted_chart(
    p: &GroupPresentation,
    rep: &RepPoint,
    orientation: i8,
    opts: LocalChartOpts,
    complex: &FoxComplex,
    n: usize,
    m: usize,
    id: String,
) -> Result<KuranishiChart> {
    let g = p.g();
    let nodes_per_axis = opts.order + 1;
    let grid_size = (nodes_per_axis as f64).powi(n as i32);
    if grid_size > 2e4 {
        return Err(Error::Unsupported(format!(
            "slice dimension {n} at order {} needs {grid_size:.0} fit nodes",
            opts.order
        )));
    }

    let bases = harmonic_bases(&complex.d0, &complex.d1, tol::SVD_RANK);
    let (b1, b2) = (bases.h1, bases.h2);
    if b1.ncols() != n || b2.ncols() != m {
        return Err(Error::Singular(format!(
            "harmonic bases have ranks ({}, {}), cohomology says ({n}, {m})",
            b1.ncols(),
            b2.ncols()
        )));
    }
    let b_im1 = column_space_basis(&complex.d1);
    let b_im0 = column_space_basis(&complex.d0);
    if b_im1.ncols() + g + n + b_im0.ncols() != 4 * g {
        return Err(Error::Singular(format!(
            "slice system has {} equations for {} unknowns",
            b_im1.ncols() + g + n + b_im0.ncols(),
            4 * g
        )));
    }

    // Manifold stratum: zero section over the harmonic slice.
    if m == 0 {
        return KuranishiChart::new(
            id,
            BoxUnion::cube(&vec![-opts.radius; n], &vec![opts.radius; n])?,
            0,
            PolyMap::zero(n, 0),
            orientation,
            vec![FootprintPoint { label: "origin".into(), x: vec![0.0; n] }],
        );
    }

    let mut lblk = DMatrix::zeros(3 * g, 4 * g);
    for i in 0..g {
        let rho_conj = rep.q[i].conj();
        for c in 0..4 {
            let col = BASIS[c].mul(rho_conj).im();
            for row in 0..3 {
                lblk[(3 * i + row, 4 * i + c)] = col[row];
            }
        }
    }
    let system = SliceSystem { p, rho: &rep.q, b1, b_im1, b_im0, lblk };

    let monomials = monomial_exponents(n, opts.order);
    let grid = grid_nodes(n, nodes_per_axis, opts.radius);
    let mut design = DMatrix::zeros(grid.len(), monomials.len());
    let mut defects = DMatrix::zeros(grid.len(), m);
    for (gi, x) in grid.iter().enumerate() {
        let q = system.solve_at(x)?;
        let y = b2.transpose() * relator_im_vec(p, &q)?;
        for (mi, mono) in monomials.iter().enumerate() {
            design[(gi, mi)] = eval_monomial(mono, x);
        }
        defects.row_mut(gi).copy_from(&y.transpose());
    }

    let coeffs = design
        .clone()
        .svd(true, true)
        .solve(&defects, tol::SVD_RANK)
        .map_err(|e| Error::Singular(format!("section fit failed: {e}")))?;
    let fit_residual = (&design * &coeffs - &defects).amax();

    let mut coords = Vec::with_capacity(m);
    for c in 0..m {
        let mut terms = Vec::new();
        for (mi, mono) in monomials.iter().enumerate() {
            let v = coeffs[(mi, c)];
            if v.abs() > tol::COEFF_DROP {
                terms.push(Term { exp: mono.clone(), c: v });
            }
        }
        coords.push(terms);
    }
    let section = PolyMap::new(n, m, coords)?;
    let mut chart = KuranishiChart::new(
        id,
        BoxUnion::cube(&vec![-opts.radius; n], &vec![opts.radius; n])?,
        m,
        section,
        orientation,
        vec![FootprintPoint { label: "origin".into(), x: vec![0.0; n] }],
    )?;
    chart.notes.push(format!(
        "section fitted at order {} over {} nodes, max node residual {:.3e}",
        opts.order,
        grid.len(),
        fit_residual
    ));
    Ok(chart)
}

fn relator_im_vec(p: &GroupPresentation, q: &[Quat]) -> Result<DVector<f64>> {
    let values = p.relator_values(q)?;
    let mut v = DVector::zeros(3 * values.len());
    for (j, val) in values.iter().enumerate() {
        let im = val.im();
        v[3 * j] = im[0];
        v[3 * j + 1] = im[1];
        v[3 * j + 2] = im[2];
    }
    Ok(v)
}

/// Exponent vectors of all monomials with total degree in 1..=order.
fn monomial_exponents(n: usize, order: usize) -> Vec<Vec<u32>> {
    fn rec(current: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for d in (0..=left).rev() {
            current[pos] = d;
            rec(current, pos + 1, left - d, out);
        }
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    for total in 1..=order as u32 {
        rec(&mut current, 0, total, &mut out);
    }
    out
}

fn eval_monomial(exp: &[u32], x: &[f64]) -> f64 {
    exp.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product()
}

/// Tensor grid over the cube: `per_axis` uniform values spanning +-radius.
fn grid_nodes(n: usize, per_axis: usize, radius: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..per_axis)
        .map(|k| -radius + 2.0 * radius * k as f64 / (per_axis as f64 - 1.0))
        .collect();
    let mut out = Vec::with_capacity(per_axis.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        out.push(idx.iter().map(|&i| axis[i]).collect());
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < per_axis {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
