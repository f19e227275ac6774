//! Kuranishi charts with polynomial sections, and the bracket-generated
//! (L-infinity) charts that expand into them.
//!
//! A chart `(V, R^m, s, footprint)` keeps its zero locus only as a finite
//! labeled point table; every footprint point must satisfy
//! `||s(x)||_inf <= 1e-9` and lie strictly inside the domain.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::newton::{self, Zero};
use crate::poly::{PolyMap, Term};
use crate::region::BoxUnion;
use crate::tol;
use crate::{Error, Result};

/// A labeled point of the chart's footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintPoint {
    pub label: String,
    pub x: Vec<f64>,
}

/// Chart data: open domain in `R^n`, rank-`m` trivial obstruction bundle,
/// polynomial section, orientation sign, labeled footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KuranishiChart {
    pub id: String,
    pub domain: BoxUnion,
    pub m: usize,
    pub section: PolyMap,
    pub orientation: i8,
    pub footprint: Vec<FootprintPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl KuranishiChart {
    pub fn new(
        id: impl Into<String>,
        domain: BoxUnion,
        m: usize,
        section: PolyMap,
        orientation: i8,
        footprint: Vec<FootprintPoint>,
    ) -> Result<Self> {
        KuranishiChart {
            id: id.into(),
            domain,
            m,
            section,
            orientation,
            footprint,
            notes: Vec::new(),
        }
        .validated()
    }

    /// Validates all chart invariants, returning the chart on success.
    pub fn validated(mut self) -> Result<Self> {
        self.domain.validate()?;
        self.section = self.section.validated()?;
        if self.section.n_in != self.domain.dim {
            return Err(Error::dim(
                format!("chart '{}' section variables", self.id),
                self.domain.dim,
                self.section.n_in,
            ));
        }
        if self.section.n_out != self.m {
            return Err(Error::dim(
                format!("chart '{}' section outputs", self.id),
                self.m,
                self.section.n_out,
            ));
        }
        if self.orientation != 1 && self.orientation != -1 {
            return Err(Error::invalid(
                "$.orientation",
                format!("orientation must be +1 or -1, got {}", self.orientation),
            ));
        }
        for p in &self.footprint {
            if p.x.len() != self.domain.dim {
                return Err(Error::dim(
                    format!("footprint '{}' coordinates", p.label),
                    self.domain.dim,
                    p.x.len(),
                ));
            }
            if !self.domain.contains(&p.x) {
                return Err(Error::FootprintOutsideDomain {
                    label: p.label.clone(),
                });
            }
            let r = self
                .section
                .eval(&p.x)
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            if r > tol::FOOTPRINT_RESIDUAL {
                return Err(Error::FootprintResidual {
                    label: p.label.clone(),
                    residual: r,
                    max: tol::FOOTPRINT_RESIDUAL,
                });
            }
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.domain.dim
    }

    /// Virtual dimension `n - m`.
    pub fn vdim(&self) -> i64 {
        self.n() as i64 - self.m as i64
    }

    pub fn footprint_coords(&self, label: &str) -> Option<&[f64]> {
        self.footprint
            .iter()
            .find(|p| p.label == label)
            .map(|p| p.x.as_slice())
    }

    /// Adds a labeled footprint point, enforcing the chart invariants.
    pub fn add_footprint_point(&mut self, label: &str, x: Vec<f64>) -> Result<()> {
        if self.footprint_coords(label).is_some() {
            return Err(Error::invalid(
                "$.footprint",
                format!("duplicate footprint label '{label}' in chart '{}'", self.id),
            ));
        }
        if x.len() != self.n() {
            return Err(Error::dim(format!("footprint '{label}' coordinates"), self.n(), x.len()));
        }
        if !self.domain.contains(&x) {
            return Err(Error::FootprintOutsideDomain { label: label.into() });
        }
        let r = self.section.eval(&x).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if r > tol::FOOTPRINT_RESIDUAL {
            return Err(Error::FootprintResidual {
                label: label.into(),
                residual: r,
                max: tol::FOOTPRINT_RESIDUAL,
            });
        }
        self.footprint.push(FootprintPoint {
            label: label.into(),
            x,
        });
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let chart: KuranishiChart =
            serde_json::from_str(text).map_err(|e| Error::invalid("$", format!("chart parse: {e}")))?;
        chart.validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chart serialization")
    }

    /// Multistart zero finding for square charts (`n = m`).
    pub fn find_zeros(&self, density: usize, seed: u64) -> Result<Vec<Zero>> {
        if self.n() != self.m {
            return Err(Error::Unsupported(format!(
                "find_zeros needs a square system, chart '{}' has n = {}, m = {}",
                self.id,
                self.n(),
                self.m
            )));
        }
        Ok(newton::find_zeros(&self.section, &self.domain, density, seed))
    }
}

/// Symmetric `k`-linear bracket `Sym^k R^in -> R^out`, stored by exponent
/// multi-index so symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    pub arity: u32,
    pub in_dim: usize,
    pub out_dim: usize,
    /// multi-index (exponent vector summing to `arity`) -> output vector
    pub coeffs: BTreeMap<Vec<u32>, Vec<f64>>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0f64, |a, k| a * k as f64)
}

fn multiset_orderings(mu: &[u32]) -> f64 {
    // k! / prod(mu_i!)
    let k: u32 = mu.iter().sum();
    mu.iter().fold(factorial(k), |a, &e| a / factorial(e))
}

impl SymTensor {
    /// Reads a dense row-major tensor `[out][i_1]...[i_k]`, rejecting any
    /// asymmetry beyond 1e-12 relative.
    pub fn from_dense(arity: u32, in_dim: usize, out_dim: usize, flat: &[f64]) -> Result<Self> {
        let per_out = (in_dim as u64).pow(arity) as usize;
        if flat.len() != out_dim * per_out {
            return Err(Error::dim("dense bracket tensor", out_dim * per_out, flat.len()));
        }
        let mut coeffs: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
        let mut idx = vec![0usize; arity as usize];
        for a in 0..out_dim {
            loop {
                let mut flat_i = 0usize;
                for &i in &idx {
                    flat_i = flat_i * in_dim + i;
                }
                let v = flat[a * per_out + flat_i];
                let mut mu = vec![0u32; in_dim];
                for &i in &idx {
                    mu[i] += 1;
                }
                let slot = coeffs.entry(mu).or_insert_with(|| vec![f64::NAN; out_dim]);
                if slot[a].is_nan() {
                    slot[a] = v;
                } else if (slot[a] - v).abs() > 1e-12 * (1.0 + slot[a].abs()) {
                    return Err(Error::invalid(
                        "$.brackets",
                        format!("bracket tensor not symmetric at output {a}: {} vs {}", slot[a], v),
                    ));
                }
                // advance odometer
                let mut pos = arity as usize;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < in_dim {
                        break;
                    }
                    idx[pos] = 0;
                    if pos == 0 {
                        break;
                    }
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
        for v in coeffs.values_mut() {
            for x in v.iter_mut() {
                if x.is_nan() {
                    *x = 0.0;
                }
            }
        }
        Ok(SymTensor {
            arity,
            in_dim,
            out_dim,
            coeffs,
        })
    }

    /// Writes the dense row-major tensor back out.
    pub fn to_dense(&self) -> Vec<f64> {
        let per_out = (self.in_dim as u64).pow(self.arity) as usize;
        let mut flat = vec![0.0; self.out_dim * per_out];
        let mut idx = vec![0usize; self.arity as usize];
        loop {
            let mut flat_i = 0usize;
            for &i in &idx {
                flat_i = flat_i * self.in_dim + i;
            }
            let mut mu = vec![0u32; self.in_dim];
            for &i in &idx {
                mu[i] += 1;
            }
            if let Some(v) = self.coeffs.get(&mu) {
                for a in 0..self.out_dim {
                    flat[a * per_out + flat_i] = v[a];
                }
            }
            let mut pos = self.arity as usize;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.in_dim {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    break;
                }
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
        flat
    }

    /// Builds a symmetric tensor from values on sorted multi-indices.
    pub fn from_multi(arity: u32, in_dim: usize, out_dim: usize, entries: &[(Vec<u32>, Vec<f64>)]) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (mu, v) in entries {
            if mu.len() != in_dim || mu.iter().sum::<u32>() != arity || v.len() != out_dim {
                return Err(Error::invalid("$.brackets", "bad multi-index entry"));
            }
            coeffs.insert(mu.clone(), v.clone());
        }
        Ok(SymTensor {
            arity,
            in_dim,
            out_dim,
            coeffs,
        })
    }

    /// Diagonal evaluation `l(x, ..., x)` as a polynomial map.
    pub fn diagonal(&self) -> PolyMap {
        let mut coords: Vec<Vec<Term>> = vec![Vec::new(); self.out_dim];
        for (mu, v) in &self.coeffs {
            let orderings = multiset_orderings(mu);
            for (a, &c) in v.iter().enumerate() {
                if c != 0.0 {
                    coords[a].push(Term {
                        exp: mu.clone(),
                        c: c * orderings,
                    });
                }
            }
        }
        let mut map = PolyMap {
            n_in: self.in_dim,
            n_out: self.out_dim,
            coords,
        };
        map.normalize();
        map
    }
}

/// Bracket-generated chart: symmetric brackets `l_k: Sym^k H1 -> H2` for
/// `k = 2..=K`, a pairing `H2 x H1 -> R`, and a convergence radius supplied
/// by the author (series truncation is the author's responsibility).
#[derive(Debug, Clone, PartialEq)]
pub struct LinfChart {
    pub h1: usize,
    pub h2: usize,
    pub brackets: BTreeMap<u32, SymTensor>,
    /// Pairing matrix, rows indexed by H2, columns by H1.
    pub pairing: Vec<Vec<f64>>,
    pub radius: f64,
}

#[derive(Serialize, Deserialize)]
struct LinfChartDto {
    h1: usize,
    h2: usize,
    brackets: BTreeMap<String, Vec<f64>>,
    pairing: Vec<Vec<f64>>,
    radius: f64,
}

impl LinfChart {
    pub fn new(
        h1: usize,
        h2: usize,
        brackets: BTreeMap<u32, SymTensor>,
        pairing: Vec<Vec<f64>>,
        radius: f64,
    ) -> Result<Self> {
        for (&k, t) in &brackets {
            if k < 2 {
                return Err(Error::invalid("$.brackets", format!("bracket arity {k} below 2")));
            }
            if t.arity != k || t.in_dim != h1 || t.out_dim != h2 {
                return Err(Error::invalid(
                    "$.brackets",
                    format!("bracket {k} has shape ({}, {}, {})", t.arity, t.in_dim, t.out_dim),
                ));
            }
        }
        if pairing.len() != h2 || pairing.iter().any(|r| r.len() != h1) {
            return Err(Error::invalid("$.pairing", format!("expected {h2} x {h1} matrix")));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("$.radius", "radius must be positive"));
        }
        Ok(LinfChart {
            h1,
            h2,
            brackets,
            pairing,
            radius,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: LinfChartDto = serde_json::from_str(text)
            .map_err(|e| Error::invalid("$", format!("bracket chart parse: {e}")))?;
        let mut brackets = BTreeMap::new();
        for (key, flat) in dto.brackets {
            let k: u32 = key
                .parse()
                .map_err(|_| Error::invalid("$.brackets", format!("non-integer bracket key '{key}'")))?;
            brackets.insert(k, SymTensor::from_dense(k, dto.h1, dto.h2, &flat)?);
        }
        LinfChart::new(dto.h1, dto.h2, brackets, dto.pairing, dto.radius)
    }

    pub fn to_json(&self) -> String {
        let dto = LinfChartDto {
            h1: self.h1,
            h2: self.h2,
            brackets: self
                .brackets
                .iter()
                .map(|(k, t)| (k.to_string(), t.to_dense()))
                .collect(),
            pairing: self.pairing.clone(),
            radius: self.radius,
        };
        serde_json::to_string_pretty(&dto).expect("bracket chart serialization")
    }

    /// Maximum stored bracket arity.
    pub fn max_arity(&self) -> u32 {
        self.brackets.keys().max().copied().unwrap_or(2)
    }

    /// Section of the expanded chart: `s(x) = sum_k l_k(x,...,x) / k!`.
    pub fn section(&self, k_max: u32) -> PolyMap {
        let mut s = PolyMap::zero(self.h1, self.h2);
        for (&k, t) in self.brackets.range(2..=k_max) {
            s = s.add(&t.diagonal().scale(1.0 / factorial(k))).expect("shape");
        }
        s
    }

    /// Expands into a Kuranishi chart with domain `(-radius, radius)^h1`,
    /// truncating the series at `k_max` (defaults to 4 capped by stored data).
    pub fn expand(&self, id: impl Into<String>, k_max: Option<u32>) -> Result<KuranishiChart> {
        let k = k_max.unwrap_or_else(|| self.max_arity().min(4).max(2));
        let section = self.section(k);
        let lo = vec![-self.radius; self.h1];
        let hi = vec![self.radius; self.h1];
        let domain = if self.h1 == 0 {
            BoxUnion::point()
        } else {
            BoxUnion::cube(&lo, &hi)?
        };
        let mut chart = KuranishiChart::new(
            id,
            domain,
            self.h2,
            section,
            1,
            vec![FootprintPoint {
                label: "origin".to_string(),
                x: vec![0.0; self.h1],
            }],
        )?;
        chart.notes.push(format!(
            "series truncated at arity {k}; convergence radius {} is author-asserted",
            self.radius
        ));
        Ok(chart)
    }

    /// Tensor contraction `<l_k(x,...,x), x>` assembled through the pairing,
    /// summed with weights `1/(k+1)!`. Returns the potential together with
    /// the gradient identity residual: `pairing^{-T} . grad f` must equal the
    /// expanded section coefficient-wise.
    pub fn potential(&self, k_max: Option<u32>) -> Result<Potential> {
        if self.h1 != self.h2 {
            return Err(Error::Unsupported(format!(
                "potential needs a square pairing, got H2 x H1 = {} x {}",
                self.h2, self.h1
            )));
        }
        let n = self.h1;
        let k = k_max.unwrap_or_else(|| self.max_arity().min(4).max(2));
        let pairing = DMatrix::from_fn(self.h2, self.h1, |i, j| self.pairing[i][j]);
        let pairing_inv_t = pairing
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Singular("pairing matrix".to_string()))?;

        let ident = PolyMap::identity(n);
        let mut f = PolyMap::zero(n, 1);
        for (&arity, t) in self.brackets.range(2..=k) {
            let diag = t.diagonal(); // h2 outputs
            // <l_k(x..x), x> = sum_{a,b} diag_a(x) * P[a][b] * x_b
            let mut contracted = PolyMap::zero(n, 1);
            for a in 0..self.h2 {
                for b in 0..self.h1 {
                    let p = self.pairing[a][b];
                    if p == 0.0 {
                        continue;
                    }
                    contracted = contracted.add(&diag.coord(a).mul1(&ident.coord(b))?.scale(p))?;
                }
            }
            f = f.add(&contracted.scale(1.0 / factorial(arity + 1)))?;
        }

        // gradient identity: grad f = pairing^T . s, i.e. pairing^{-T} grad f = s
        let grad = f.jacobian(); // 1 x n, row-major = n outputs
        let recovered = crate::mat::MatrixMap::constant(n, &pairing_inv_t).mul_vec(&grad)?;
        let section = self.section(k);
        let residual = recovered.coeff_distance(&section);
        Ok(Potential {
            f,
            gradient_matches_section: residual <= tol::COEFF_IDENTITY,
            residual,
        })
    }
}

/// Potential function result with its gradient-identity verdict.
#[derive(Debug, Clone)]
pub struct Potential {
    pub f: PolyMap,
    pub gradient_matches_section: bool,
    pub residual: f64,
}
