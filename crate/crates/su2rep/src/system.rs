//! The defining equations of the representation variety in ℝ^{4g}: three
//! imaginary parts per relator followed by one unit-norm defect per
//! generator. Two routes compute them: a symbolic expansion into a
//! polynomial map, and a fast numeric evaluator with exact Jacobians via
//! prefix/suffix word products. Both treat inverses as conjugates, so they
//! agree as polynomials, not just on the unit sphere.

use kuranishi::poly::Term;
use kuranishi::{PolyMap, Result};
use nalgebra::{DMatrix, DVector};

use crate::presentation::GroupPresentation;
use crate::quat::{Quat, BASIS};

/// Quaternion whose four components are scalar polynomials.
#[derive(Clone)]
struct PolyQuat {
    c: [PolyMap; 4],
}

impl PolyQuat {
    fn one(n_in: usize) -> Self {
        let w = PolyMap::new(n_in, 1, vec![vec![Term { exp: vec![0; n_in], c: 1.0 }]])
            .expect("constant polynomial");
        PolyQuat {
            c: [w, PolyMap::zero(n_in, 1), PolyMap::zero(n_in, 1), PolyMap::zero(n_in, 1)],
        }
    }

    /// The i-th generator: four consecutive coordinates.
    fn generator(n_in: usize, i: usize) -> Self {
        PolyQuat {
            c: [
                PolyMap::coordinate(n_in, 4 * i),
                PolyMap::coordinate(n_in, 4 * i + 1),
                PolyMap::coordinate(n_in, 4 * i + 2),
                PolyMap::coordinate(n_in, 4 * i + 3),
            ],
        }
    }

    fn conj(&self) -> Self {
        PolyQuat {
            c: [
                self.c[0].clone(),
                self.c[1].scale(-1.0),
                self.c[2].scale(-1.0),
                self.c[3].scale(-1.0),
            ],
        }
    }

    fn mul(&self, o: &PolyQuat) -> Result<Self> {
        let p = |a: usize, b: usize| self.c[a].mul1(&o.c[b]);
        let w = p(0, 0)?.add(&p(1, 1)?.scale(-1.0))?.add(&p(2, 2)?.scale(-1.0))?.add(&p(3, 3)?.scale(-1.0))?;
        let x = p(0, 1)?.add(&p(1, 0)?)?.add(&p(2, 3)?)?.add(&p(3, 2)?.scale(-1.0))?;
        let y = p(0, 2)?.add(&p(1, 3)?.scale(-1.0))?.add(&p(2, 0)?)?.add(&p(3, 1)?)?;
        let z = p(0, 3)?.add(&p(1, 2)?)?.add(&p(2, 1)?.scale(-1.0))?.add(&p(3, 0)?)?;
        Ok(PolyQuat { c: [w, x, y, z] })
    }
}

/// Symbolic relator system ℝ^{4g} → ℝ^{3r+g}: rows 3j..3j+3 are the
/// imaginary parts of relator j, the final g rows are `|q_i|² − 1`.
pub fn relator_system(p: &GroupPresentation) -> Result<PolyMap> {
    let g = p.g();
    let n_in = 4 * g;
    let mut coords: Vec<Vec<Term>> = Vec::with_capacity(3 * p.relators.len() + g);
    for word in &p.relators {
        let mut acc = PolyQuat::one(n_in);
        for &(i, e) in word {
            let gen = PolyQuat::generator(n_in, i);
            let letter = if e < 0 { gen.conj() } else { gen };
            for _ in 0..e.unsigned_abs() {
                acc = acc.mul(&letter)?;
            }
        }
        for k in 1..4 {
            coords.push(take_terms(&acc.c[k]));
        }
    }
    for i in 0..g {
        let mut terms = Vec::with_capacity(5);
        for c in 0..4 {
            let mut exp = vec![0u32; n_in];
            exp[4 * i + c] = 2;
            terms.push(Term { exp, c: 1.0 });
        }
        terms.push(Term { exp: vec![0; n_in], c: -1.0 });
        coords.push(terms);
    }
    PolyMap::new(n_in, coords.len(), coords)
}

fn take_terms(m: &PolyMap) -> Vec<Term> {
    m.coords[0].clone()
}

/// Word expanded into single letters: (generator, inverted) pairs.
fn letters(word: &[(usize, i64)]) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    for &(i, e) in word {
        for _ in 0..e.unsigned_abs() {
            out.push((i, e < 0));
        }
    }
    out
}

/// Relator values and the full numeric system residual/Jacobian at a point
/// of ℝ^{4g}. Rows match `relator_system`.
pub struct SystemEval {
    pub residual: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub relator_values: Vec<Quat>,
}

fn quat_at(v: &[f64], i: usize) -> Quat {
    Quat::new(v[4 * i], v[4 * i + 1], v[4 * i + 2], v[4 * i + 3])
}

/// Evaluates one word and its derivative with respect to every quaternion
/// component, via prefix and suffix products.
fn word_eval_jac(word: &[(usize, bool)], q: &[Quat]) -> (Quat, Vec<[Quat; 4]>) {
    let l = word.len();
    let vals: Vec<Quat> = word
        .iter()
        .map(|&(i, inv)| if inv { q[i].conj() } else { q[i] })
        .collect();
    let mut prefix = vec![crate::quat::ONE; l + 1];
    for p in 0..l {
        prefix[p + 1] = prefix[p].mul(vals[p]);
    }
    let mut suffix = vec![crate::quat::ONE; l + 1];
    for p in (0..l).rev() {
        suffix[p] = vals[p].mul(suffix[p + 1]);
    }
    let mut grad = vec![[Quat::new(0.0, 0.0, 0.0, 0.0); 4]; q.len()];
    for p in 0..l {
        let (i, inv) = word[p];
        for c in 0..4 {
            let d = if inv { BASIS[c].conj() } else { BASIS[c] };
            let contrib = prefix[p].mul(d).mul(suffix[p + 1]);
            grad[i][c] = grad[i][c].add(contrib);
        }
    }
    (suffix[0], grad)
}

/// Numeric residual and Jacobian of the relator system at `v ∈ ℝ^{4g}`.
pub fn system_eval(p: &GroupPresentation, v: &[f64]) -> SystemEval {
    let g = p.g();
    let rows = 3 * p.relators.len() + g;
    let q: Vec<Quat> = (0..g).map(|i| quat_at(v, i)).collect();
    let mut residual = DVector::zeros(rows);
    let mut jacobian = DMatrix::zeros(rows, 4 * g);
    let mut relator_values = Vec::with_capacity(p.relators.len());
    for (j, word) in p.relators.iter().enumerate() {
        let (value, grad) = word_eval_jac(&letters(word), &q);
        relator_values.push(value);
        let im = value.im();
        for k in 0..3 {
            residual[3 * j + k] = im[k];
        }
        for (i, comps) in grad.iter().enumerate() {
            for (c, dq) in comps.iter().enumerate() {
                let dim = dq.im();
                for k in 0..3 {
                    jacobian[(3 * j + k, 4 * i + c)] = dim[k];
                }
            }
        }
    }
    for i in 0..g {
        let row = 3 * p.relators.len() + i;
        residual[row] = q[i].norm_sq() - 1.0;
        jacobian[(row, 4 * i)] = 2.0 * q[i].w;
        jacobian[(row, 4 * i + 1)] = 2.0 * q[i].x;
        jacobian[(row, 4 * i + 2)] = 2.0 * q[i].y;
        jacobian[(row, 4 * i + 3)] = 2.0 * q[i].z;
    }
    SystemEval { residual, jacobian, relator_values }
}
