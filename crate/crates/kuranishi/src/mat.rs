//! Matrix-valued polynomial maps: a `PolyMap` with `rows * cols` outputs in
//! row-major order, multiplied pointwise over a common base domain. Bundle
//! maps, differentials of sections, and homotopy representatives all live
//! here.

use nalgebra::DMatrix;

use crate::poly::PolyMap;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMap {
    pub rows: usize,
    pub cols: usize,
    pub map: PolyMap,
}

impl MatrixMap {
    pub fn new(rows: usize, cols: usize, map: PolyMap) -> Result<Self> {
        if map.n_out != rows * cols {
            return Err(Error::dim("MatrixMap entries", rows * cols, map.n_out));
        }
        Ok(MatrixMap { rows, cols, map })
    }

    /// Zero matrix over an `n_in`-variable base.
    pub fn zero(rows: usize, cols: usize, n_in: usize) -> Self {
        MatrixMap {
            rows,
            cols,
            map: PolyMap::zero(n_in, rows * cols),
        }
    }

    /// Constant identity matrix over an `n_in`-variable base.
    pub fn identity(n: usize, n_in: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        MatrixMap {
            rows: n,
            cols: n,
            map: PolyMap::constant(n_in, &values),
        }
    }

    /// Constant matrix over an `n_in`-variable base.
    pub fn constant(n_in: usize, m: &DMatrix<f64>) -> Self {
        let values: Vec<f64> = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        MatrixMap {
            rows: m.nrows(),
            cols: m.ncols(),
            map: PolyMap::constant(n_in, &values),
        }
    }

    pub fn n_in(&self) -> usize {
        self.map.n_in
    }

    fn entry(&self, i: usize, j: usize) -> PolyMap {
        self.map.coord(i * self.cols + j)
    }

    /// Evaluates to a numeric matrix at a base point.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let flat = self.map.eval(x);
        DMatrix::from_row_slice(self.rows, self.cols, &flat)
    }

    /// Pointwise matrix product `self(x) * other(x)` over a common base.
    pub fn mul(&self, other: &MatrixMap) -> Result<MatrixMap> {
        if self.cols != other.rows {
            return Err(Error::dim("MatrixMap mul shapes", self.cols, other.rows));
        }
        if self.n_in() != other.n_in() {
            return Err(Error::dim("MatrixMap mul base", self.n_in(), other.n_in()));
        }
        let mut coords = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = PolyMap::zero(self.n_in(), 1);
                for k in 0..self.cols {
                    acc = acc.add(&self.entry(i, k).mul1(&other.entry(k, j))?)?;
                }
                coords.push(acc.coords.into_iter().next().unwrap());
            }
        }
        let map = PolyMap::new(self.n_in(), self.rows * other.cols, coords)?;
        MatrixMap::new(self.rows, other.cols, map)
    }

    /// Pointwise matrix-vector product applied to a map with `cols` outputs.
    pub fn mul_vec(&self, v: &PolyMap) -> Result<PolyMap> {
        if v.n_out != self.cols {
            return Err(Error::dim("MatrixMap mul_vec", self.cols, v.n_out));
        }
        if v.n_in != self.n_in() {
            return Err(Error::dim("MatrixMap mul_vec base", self.n_in(), v.n_in));
        }
        let mut coords = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = PolyMap::zero(self.n_in(), 1);
            for k in 0..self.cols {
                acc = acc.add(&self.entry(i, k).mul1(&v.coord(k))?)?;
            }
            coords.push(acc.coords.into_iter().next().unwrap());
        }
        PolyMap::new(self.n_in(), self.rows, coords)
    }

    /// Precomposes every entry with a base change `inner`.
    pub fn pullback(&self, inner: &PolyMap) -> Result<MatrixMap> {
        Ok(MatrixMap {
            rows: self.rows,
            cols: self.cols,
            map: self.map.compose(inner)?,
        })
    }

    pub fn add(&self, other: &MatrixMap) -> Result<MatrixMap> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim("MatrixMap add", self.rows * self.cols, other.rows * other.cols));
        }
        Ok(MatrixMap {
            rows: self.rows,
            cols: self.cols,
            map: self.map.add(&other.map)?,
        })
    }

    pub fn sub(&self, other: &MatrixMap) -> Result<MatrixMap> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> MatrixMap {
        MatrixMap {
            rows: self.rows,
            cols: self.cols,
            map: self.map.scale(k),
        }
    }

    pub fn approx_eq(&self, other: &MatrixMap, tolerance: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.map.approx_eq(&other.map, tolerance)
    }

    pub fn is_zero(&self, tolerance: f64) -> bool {
        self.map.is_zero(tolerance)
    }

    /// Entry-wise derivative by base variable `j`.
    pub fn partial(&self, j: usize) -> MatrixMap {
        MatrixMap {
            rows: self.rows,
            cols: self.cols,
            map: self.map.partial_map(j),
        }
    }

    /// Entry-wise integral of the last base variable over the unit interval.
    pub fn integrate_last_unit(&self) -> Result<MatrixMap> {
        Ok(MatrixMap {
            rows: self.rows,
            cols: self.cols,
            map: self.map.integrate_last_unit()?,
        })
    }
}

/// Jacobian of a map, wrapped with its `n_out x n_in` shape.
pub fn jacobian_matrix(map: &PolyMap) -> MatrixMap {
    MatrixMap {
        rows: map.n_out,
        cols: map.n_in,
        map: map.jacobian(),
    }
}
