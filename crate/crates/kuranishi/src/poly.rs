//! Sparse multivariate polynomial maps `R^n_in -> R^n_out`.
//!
//! Every algebraic object in this crate (sections, morphisms, bundle maps,
//! differentials) is a `PolyMap`. Coefficient storage is per output
//! coordinate as `(multi-exponent, f64)` terms; normalization sorts by
//! exponent, merges duplicates, and drops coefficients below
//! `tol::COEFF_DROP`. Evaluation uses compensated (Neumaier) summation so
//! identity checks at 1e-9 are not polluted by summation order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tol;
use crate::{Error, Result};

/// One monomial: coefficient times `prod x_i^exp[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exp: Vec<u32>,
    pub c: f64,
}

/// Polynomial map with `n_out` coordinates in `n_in` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMap {
    pub n_in: usize,
    pub n_out: usize,
    pub coords: Vec<Vec<Term>>,
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn monomial(x: &[f64], exp: &[u32]) -> f64 {
    let mut p = 1.0;
    for (xi, &e) in x.iter().zip(exp) {
        if e > 0 {
            p *= xi.powi(e as i32);
        }
    }
    p
}

impl PolyMap {
    /// Builds a map from raw coordinate term lists and normalizes it.
    pub fn new(n_in: usize, n_out: usize, coords: Vec<Vec<Term>>) -> Result<Self> {
        if coords.len() != n_out {
            return Err(Error::dim("PolyMap coords", n_out, coords.len()));
        }
        let mut map = PolyMap {
            n_in,
            n_out,
            coords,
        };
        map.validate_shapes()?;
        map.normalize();
        Ok(map)
    }

    fn validate_shapes(&self) -> Result<()> {
        for (i, terms) in self.coords.iter().enumerate() {
            for t in terms {
                if t.exp.len() != self.n_in {
                    return Err(Error::invalid(
                        format!("$.coords[{i}]"),
                        format!("exponent vector length {} != n_in {}", t.exp.len(), self.n_in),
                    ));
                }
                if !t.c.is_finite() {
                    return Err(Error::invalid(
                        format!("$.coords[{i}]"),
                        "non-finite coefficient".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Validates a freshly deserialized map and normalizes it in place.
    pub fn validated(mut self) -> Result<Self> {
        if self.coords.len() != self.n_out {
            return Err(Error::invalid(
                "$.coords",
                format!("{} coordinate lists for n_out {}", self.coords.len(), self.n_out),
            ));
        }
        self.validate_shapes()?;
        self.normalize();
        Ok(self)
    }

    /// The zero map.
    pub fn zero(n_in: usize, n_out: usize) -> Self {
        PolyMap {
            n_in,
            n_out,
            coords: vec![Vec::new(); n_out],
        }
    }

    /// Constant map with the given values.
    pub fn constant(n_in: usize, values: &[f64]) -> Self {
        let coords = values
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    Vec::new()
                } else {
                    vec![Term {
                        exp: vec![0; n_in],
                        c: v,
                    }]
                }
            })
            .collect();
        PolyMap {
            n_in,
            n_out: values.len(),
            coords,
        }
    }

    /// The identity map on `R^n`.
    pub fn identity(n: usize) -> Self {
        let coords = (0..n)
            .map(|i| {
                let mut exp = vec![0; n];
                exp[i] = 1;
                vec![Term { exp, c: 1.0 }]
            })
            .collect();
        PolyMap {
            n_in: n,
            n_out: n,
            coords,
        }
    }

    /// Single-coordinate projection `x -> x_i`.
    pub fn coordinate(n_in: usize, i: usize) -> Self {
        let mut exp = vec![0; n_in];
        exp[i] = 1;
        PolyMap {
            n_in,
            n_out: 1,
            coords: vec![vec![Term { exp, c: 1.0 }]],
        }
    }

    /// Builds a one-coordinate map from `(exponents, coefficient)` pairs.
    pub fn scalar(n_in: usize, terms: &[(&[u32], f64)]) -> Result<Self> {
        let list = terms
            .iter()
            .map(|(e, c)| Term {
                exp: e.to_vec(),
                c: *c,
            })
            .collect();
        PolyMap::new(n_in, 1, vec![list])
    }

    /// Sorts terms, merges equal exponents, drops negligible coefficients.
    pub fn normalize(&mut self) {
        for terms in &mut self.coords {
            let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            for t in terms.drain(..) {
                *merged.entry(t.exp).or_insert(0.0) += t.c;
            }
            *terms = merged
                .into_iter()
                .filter(|(_, c)| c.abs() >= tol::COEFF_DROP)
                .map(|(exp, c)| Term { exp, c })
                .collect();
        }
    }

    /// Evaluates at `x` with compensated summation per coordinate.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_in);
        self.coords
            .iter()
            .map(|terms| neumaier_sum(terms.iter().map(|t| t.c * monomial(x, &t.exp))))
            .collect()
    }

    /// Total degree (0 for the zero map).
    pub fn degree(&self) -> u32 {
        self.coords
            .iter()
            .flat_map(|ts| ts.iter().map(|t| t.exp.iter().sum::<u32>()))
            .max()
            .unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coords
            .iter()
            .flat_map(|ts| ts.iter().map(|t| t.c.abs()))
            .fold(0.0, f64::max)
    }

    /// Max coefficient-wise distance to `other` (infinity if shapes differ).
    pub fn coeff_distance(&self, other: &PolyMap) -> f64 {
        if self.n_in != other.n_in || self.n_out != other.n_out {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for (a, b) in self.coords.iter().zip(&other.coords) {
            let mut merged: BTreeMap<&[u32], f64> = BTreeMap::new();
            for t in a {
                *merged.entry(&t.exp).or_insert(0.0) += t.c;
            }
            for t in b {
                *merged.entry(&t.exp).or_insert(0.0) -= t.c;
            }
            for (_, d) in merged {
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Coefficient-wise equality at tolerance.
    pub fn approx_eq(&self, other: &PolyMap, tolerance: f64) -> bool {
        self.coeff_distance(other) <= tolerance
    }

    /// True when every coefficient is below `tolerance`.
    pub fn is_zero(&self, tolerance: f64) -> bool {
        self.max_abs_coeff() <= tolerance
    }

    /// Coordinate-wise sum.
    pub fn add(&self, other: &PolyMap) -> Result<PolyMap> {
        if self.n_in != other.n_in || self.n_out != other.n_out {
            return Err(Error::dim("PolyMap add", self.n_out, other.n_out));
        }
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        PolyMap::new(self.n_in, self.n_out, coords)
    }

    /// Coordinate-wise difference.
    pub fn sub(&self, other: &PolyMap) -> Result<PolyMap> {
        self.add(&other.scale(-1.0))
    }

    /// Scalar multiple.
    pub fn scale(&self, k: f64) -> PolyMap {
        let mut out = self.clone();
        for terms in &mut out.coords {
            for t in terms.iter_mut() {
                t.c *= k;
            }
        }
        out.normalize();
        out
    }

    /// Product of two single-coordinate maps over the same variables.
    pub fn mul1(&self, other: &PolyMap) -> Result<PolyMap> {
        if self.n_out != 1 || other.n_out != 1 {
            return Err(Error::dim("mul1 expects single-coordinate maps", 1, self.n_out.max(other.n_out)));
        }
        if self.n_in != other.n_in {
            return Err(Error::dim("mul1 variables", self.n_in, other.n_in));
        }
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for a in &self.coords[0] {
            for b in &other.coords[0] {
                let exp: Vec<u32> = a.exp.iter().zip(&b.exp).map(|(x, y)| x + y).collect();
                *merged.entry(exp).or_insert(0.0) += a.c * b.c;
            }
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= tol::COEFF_DROP)
            .map(|(exp, c)| Term { exp, c })
            .collect();
        Ok(PolyMap {
            n_in: self.n_in,
            n_out: 1,
            coords: vec![terms],
        })
    }

    /// Extracts coordinate `i` as a single-output map.
    pub fn coord(&self, i: usize) -> PolyMap {
        PolyMap {
            n_in: self.n_in,
            n_out: 1,
            coords: vec![self.coords[i].clone()],
        }
    }

    /// Stacks several maps over the same variables into one.
    pub fn stack(parts: &[&PolyMap]) -> Result<PolyMap> {
        let n_in = parts.first().map(|p| p.n_in).unwrap_or(0);
        let mut coords = Vec::new();
        for p in parts {
            if p.n_in != n_in {
                return Err(Error::dim("stack variables", n_in, p.n_in));
            }
            coords.extend(p.coords.iter().cloned());
        }
        Ok(PolyMap {
            n_in,
            n_out: coords.len(),
            coords,
        })
    }

    /// Symbolic partial derivative of coordinate `i` by variable `j`.
    fn partial(&self, i: usize, j: usize) -> Vec<Term> {
        self.coords[i]
            .iter()
            .filter(|t| t.exp[j] > 0)
            .map(|t| {
                let mut exp = t.exp.clone();
                let e = exp[j];
                exp[j] = e - 1;
                Term {
                    exp,
                    c: t.c * e as f64,
                }
            })
            .collect()
    }

    /// Derivative of every coordinate by variable `j`.
    pub fn partial_map(&self, j: usize) -> PolyMap {
        let coords = (0..self.n_out).map(|i| self.partial(i, j)).collect();
        let mut out = PolyMap {
            n_in: self.n_in,
            n_out: self.n_out,
            coords,
        };
        out.normalize();
        out
    }

    /// Integrates the last variable over the unit interval, returning a map
    /// in the remaining variables: `x -> int_0^1 self(x, t) dt`.
    pub fn integrate_last_unit(&self) -> Result<PolyMap> {
        if self.n_in == 0 {
            return Err(Error::dim("integrate_last_unit on 0 variables", 1, 0));
        }
        let n = self.n_in - 1;
        let coords = self
            .coords
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|t| {
                        let k = t.exp[n];
                        Term {
                            exp: t.exp[..n].to_vec(),
                            c: t.c / (k as f64 + 1.0),
                        }
                    })
                    .collect()
            })
            .collect();
        PolyMap::new(n, self.n_out, coords)
    }

    /// Symbolic Jacobian as a map with `n_out * n_in` coordinates, row-major.
    pub fn jacobian(&self) -> PolyMap {
        let mut coords = Vec::with_capacity(self.n_out * self.n_in);
        for i in 0..self.n_out {
            for j in 0..self.n_in {
                coords.push(self.partial(i, j));
            }
        }
        let mut out = PolyMap {
            n_in: self.n_in,
            n_out: self.n_out * self.n_in,
            coords,
        };
        out.normalize();
        out
    }

    /// Symbolic composition `self(inner(y))`.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap> {
        if inner.n_out != self.n_in {
            return Err(Error::dim("compose", self.n_in, inner.n_out));
        }
        // Memoized powers of each inner coordinate.
        let one = PolyMap::constant(inner.n_in, &[1.0]);
        let mut powers: Vec<Vec<PolyMap>> = (0..inner.n_out).map(|i| vec![one.clone(), inner.coord(i)]).collect();
        let mut coords = Vec::with_capacity(self.n_out);
        for i in 0..self.n_out {
            let mut acc = PolyMap::zero(inner.n_in, 1);
            for t in &self.coords[i] {
                let mut prod = PolyMap::constant(inner.n_in, &[t.c]);
                for (j, &e) in t.exp.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    while powers[j].len() <= e as usize {
                        let next = powers[j].last().unwrap().mul1(&powers[j][1])?;
                        powers[j].push(next);
                    }
                    prod = prod.mul1(&powers[j][e as usize])?;
                }
                acc = acc.add(&prod)?;
            }
            coords.push(acc.coords.into_iter().next().unwrap());
        }
        let mut out = PolyMap {
            n_in: inner.n_in,
            n_out: self.n_out,
            coords,
        };
        out.normalize();
        Ok(out)
    }

    /// Drops all terms of total degree above `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> PolyMap {
        let coords = self
            .coords
            .iter()
            .map(|ts| {
                ts.iter()
                    .filter(|t| t.exp.iter().sum::<u32>() <= max_degree)
                    .cloned()
                    .collect()
            })
            .collect();
        PolyMap {
            n_in: self.n_in,
            n_out: self.n_out,
            coords,
        }
    }

    /// Re-expresses the map in a larger variable space: variable `i` becomes
    /// variable `offset + i` of an `n_total`-variable map.
    pub fn embed(&self, n_total: usize, offset: usize) -> Result<PolyMap> {
        if offset + self.n_in > n_total {
            return Err(Error::dim("embed", n_total, offset + self.n_in));
        }
        let coords = self
            .coords
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|t| {
                        let mut exp = vec![0; n_total];
                        exp[offset..offset + self.n_in].copy_from_slice(&t.exp);
                        Term { exp, c: t.c }
                    })
                    .collect()
            })
            .collect();
        Ok(PolyMap {
            n_in: n_total,
            n_out: self.n_out,
            coords,
        })
    }

    /// Substitutes a constant for the last variable.
    pub fn fix_last(&self, value: f64) -> Result<PolyMap> {
        if self.n_in == 0 {
            return Err(Error::dim("fix_last on 0 variables", 1, 0));
        }
        let n = self.n_in - 1;
        let mut parts: Vec<PolyMap> = Vec::with_capacity(self.n_in);
        for i in 0..n {
            parts.push(PolyMap::coordinate(n, i));
        }
        parts.push(PolyMap::constant(n, &[value]));
        let subst = PolyMap::stack(&parts.iter().collect::<Vec<_>>())?;
        self.compose(&subst)
    }

    /// Translates the input: returns `x -> self(x + shift)`.
    pub fn shift_input(&self, shift: &[f64]) -> Result<PolyMap> {
        let n = self.n_in;
        if shift.len() != n {
            return Err(Error::dim("shift_input", n, shift.len()));
        }
        let coords = (0..n)
            .map(|i| {
                let mut exp = vec![0; n];
                exp[i] = 1;
                let mut terms = vec![Term { exp, c: 1.0 }];
                if shift[i] != 0.0 {
                    terms.push(Term {
                        exp: vec![0; n],
                        c: shift[i],
                    });
                }
                terms
            })
            .collect();
        let translation = PolyMap {
            n_in: n,
            n_out: n,
            coords,
        };
        self.compose(&translation)
    }
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, terms) in self.coords.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "y{i} =")?;
            if terms.is_empty() {
                write!(f, " 0")?;
                continue;
            }
            for (k, t) in terms.iter().enumerate() {
                let sign = if t.c < 0.0 { " - " } else if k == 0 { " " } else { " + " };
                write!(f, "{sign}{}", t.c.abs())?;
                for (j, &e) in t.exp.iter().enumerate() {
                    match e {
                        0 => {}
                        1 => write!(f, "*x{j}")?,
                        _ => write!(f, "*x{j}^{e}")?,
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n_in: usize, terms: &[(&[u32], f64)]) -> PolyMap {
        PolyMap::scalar(n_in, terms).unwrap()
    }

    #[test]
    fn eval_merges_and_drops() {
        // x^2 + x^2 - 2x^2 + 3 collapses to the constant 3
        let m = p(1, &[(&[2], 1.0), (&[2], 1.0), (&[2], -2.0), (&[0], 3.0)]);
        assert_eq!(m.coords[0].len(), 1);
        assert_eq!(m.eval(&[5.0]), vec![3.0]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut m = p(2, &[(&[1, 0], 2.0), (&[0, 1], -1.0), (&[1, 0], 0.5)]);
        let once = m.clone();
        m.normalize();
        assert_eq!(m, once);
    }

    #[test]
    fn jacobian_of_square_plus_cross() {
        // f(x,y) = x^2 y, df = [2xy, x^2]
        let m = p(2, &[(&[2, 1], 1.0)]);
        let j = m.jacobian();
        assert_eq!(j.n_out, 2);
        assert_eq!(j.eval(&[3.0, 4.0]), vec![24.0, 9.0]);
    }

    #[test]
    fn compose_substitutes() {
        // f(u) = u^2 + 1, g(x,y) = x + y => f(g) = (x+y)^2 + 1
        let f = p(1, &[(&[2], 1.0), (&[0], 1.0)]);
        let g = p(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let fg = f.compose(&g).unwrap();
        assert_eq!(fg.eval(&[1.0, 2.0]), vec![10.0]);
        assert_eq!(fg.degree(), 2);
    }

    #[test]
    fn zero_variable_maps_work() {
        let m = PolyMap::constant(0, &[2.5]);
        assert_eq!(m.eval(&[]), vec![2.5]);
        let z = PolyMap::zero(0, 0);
        assert!(z.eval(&[]).is_empty());
    }

    #[test]
    fn embed_and_fix_last() {
        let f = p(1, &[(&[1], 1.0)]); // x
        let lifted = f.embed(3, 1).unwrap(); // (a,x,t) -> x
        assert_eq!(lifted.eval(&[9.0, 4.0, 7.0]), vec![4.0]);
        let g = p(2, &[(&[1, 0], 1.0), (&[0, 1], -2.0)]); // x - 2t
        let at_half = g.fix_last(0.5).unwrap();
        assert_eq!(at_half.eval(&[3.0]), vec![2.0]);
    }

    #[test]
    fn shift_input_translates() {
        let f = p(1, &[(&[2], 1.0)]); // x^2
        let g = f.shift_input(&[1.0]).unwrap(); // (x+1)^2
        assert_eq!(g.eval(&[2.0]), vec![9.0]);
    }
}
