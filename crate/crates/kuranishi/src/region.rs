//! Finite unions of open axis-aligned boxes, with deterministic
//! low-discrepancy sampling (Kronecker sequence with hashed per-seed offsets).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One open box `(lo_0, hi_0) x ... x (lo_{d-1}, hi_{d-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl OpenBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(xi, (lo, hi))| lo < xi && xi < hi)
    }

    /// Distance from `x` to the box boundary (0 outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        if self.lo.is_empty() {
            return f64::INFINITY; // 0-dimensional box: a single interior point
        }
        let mut d = f64::INFINITY;
        for (xi, (lo, hi)) in x.iter().zip(self.lo.iter().zip(&self.hi)) {
            d = d.min(xi - lo).min(hi - xi);
        }
        d.max(0.0)
    }
}

/// Finite union of open boxes in a fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxUnion {
    pub dim: usize,
    pub boxes: Vec<OpenBox>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit_offset(seed: u64, axis: u64) -> f64 {
    (splitmix64(seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(axis)) >> 11) as f64
        / (1u64 << 53) as f64
}

/// Kronecker direction constants: fractional parts of powers of the
/// generalized golden ratio for the given dimension.
fn kronecker_alphas(dim: usize) -> Vec<f64> {
    // phi_d is the unique positive root of x^(d+1) = x + 1.
    let d = dim.max(1) as f64;
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d + 1.0));
    }
    let mut alphas = Vec::with_capacity(dim);
    let mut a = 1.0;
    for _ in 0..dim {
        a /= phi;
        alphas.push(a.fract());
    }
    alphas
}

impl BoxUnion {
    pub fn new(dim: usize, boxes: Vec<OpenBox>) -> Result<Self> {
        let bu = BoxUnion { dim, boxes };
        bu.validate()?;
        Ok(bu)
    }

    /// Single box helper.
    pub fn cube(lo: &[f64], hi: &[f64]) -> Result<Self> {
        BoxUnion::new(
            lo.len(),
            vec![OpenBox {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
            }],
        )
    }

    /// The 0-dimensional domain: a single (empty-coordinate) point.
    pub fn point() -> Self {
        BoxUnion {
            dim: 0,
            boxes: vec![OpenBox {
                lo: Vec::new(),
                hi: Vec::new(),
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(Error::invalid("$.boxes", "empty box union"));
        }
        for (k, b) in self.boxes.iter().enumerate() {
            if b.lo.len() != self.dim || b.hi.len() != self.dim {
                return Err(Error::invalid(
                    format!("$.boxes[{k}]"),
                    format!("expected {} coordinates", self.dim),
                ));
            }
            for i in 0..self.dim {
                if !(b.lo[i] < b.hi[i]) {
                    return Err(Error::invalid(
                        format!("$.boxes[{k}].lo[{i}]"),
                        format!("lo {} must be strictly below hi {}", b.lo[i], b.hi[i]),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Strict interior membership in any box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.boxes.iter().any(|b| b.contains(x))
    }

    /// Largest boundary distance over boxes containing `x` (0 outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.boxes
            .iter()
            .filter(|b| b.contains(x))
            .map(|b| b.boundary_distance(x))
            .fold(0.0, f64::max)
    }

    /// Pairwise open intersection with another union (may be empty).
    pub fn intersect(&self, other: &BoxUnion) -> Result<BoxUnion> {
        if self.dim != other.dim {
            return Err(Error::dim("BoxUnion intersect", self.dim, other.dim));
        }
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                let lo: Vec<f64> = a.lo.iter().zip(&b.lo).map(|(x, y)| x.max(*y)).collect();
                let hi: Vec<f64> = a.hi.iter().zip(&b.hi).map(|(x, y)| x.min(*y)).collect();
                if lo.iter().zip(&hi).all(|(l, h)| l < h) {
                    boxes.push(OpenBox { lo, hi });
                }
            }
        }
        Ok(BoxUnion {
            dim: self.dim,
            boxes,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Cartesian product of two unions (boxes crossed pairwise).
    pub fn product(&self, other: &BoxUnion) -> BoxUnion {
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                boxes.push(OpenBox {
                    lo: a.lo.iter().chain(&b.lo).cloned().collect(),
                    hi: a.hi.iter().chain(&b.hi).cloned().collect(),
                });
            }
        }
        BoxUnion {
            dim: self.dim + other.dim,
            boxes,
        }
    }

    /// Deterministic low-discrepancy sample: `density^dim` strictly interior
    /// points per box (one point per box when `dim = 0`). Identical inputs
    /// give identical output; the seed shifts the whole lattice.
    pub fn sample(&self, density: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut points = Vec::new();
        if self.dim == 0 {
            for _ in &self.boxes {
                points.push(Vec::new());
            }
            return points;
        }
        let count = density.pow(self.dim.min(12) as u32).max(1);
        let alphas = kronecker_alphas(self.dim);
        for (bi, b) in self.boxes.iter().enumerate() {
            let offs: Vec<f64> = (0..self.dim)
                .map(|i| unit_offset(seed.wrapping_add((bi as u64) << 32), i as u64))
                .collect();
            for k in 0..count {
                let x: Vec<f64> = (0..self.dim)
                    .map(|i| {
                        let u = (offs[i] + (k as f64 + 1.0) * alphas[i]).fract();
                        // squeeze into the open interior
                        b.lo[i] + (0.01 + 0.98 * u) * (b.hi[i] - b.lo[i])
                    })
                    .collect();
                points.push(x);
            }
        }
        points
    }
}
