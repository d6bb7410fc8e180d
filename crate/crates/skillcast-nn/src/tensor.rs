//! Dense 64-bit tensors with row-major storage.
//!
//! Everything in this crate works on f64: the data sets are tiny and the
//! gradient checks need the precision.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(NnError::Shape(format!(
                "data length {} does not match shape {:?} (needs {})",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// 1-D tensor from a vector.
    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    // --- 2-D helpers ---------------------------------------------------

    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() requires a 2-D tensor");
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() requires a 2-D tensor");
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.shape[1] + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.shape[1] + c] = v;
    }

    /// Column `c` collected into a vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.at(r, c)).collect()
    }

    /// Build a 2-D tensor from row slices; all rows must share a width.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != width) {
            return Err(NnError::Shape("rows have unequal widths".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Self {
            shape: vec![rows.len(), width],
            data,
        })
    }
}

/// y = W x + b for a [out, in] weight matrix.
pub fn matvec(w: &Tensor, x: &[f64], b: &[f64], out: &mut [f64]) {
    let (rows, cols) = (w.rows(), w.cols());
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for r in 0..rows {
        let wr = w.row(r);
        let mut acc = b[r];
        for (wv, xv) in wr.iter().zip(x.iter()) {
            acc += wv * xv;
        }
        out[r] = acc;
    }
}

/// out[r] += sum_c w[r, c] * x[c] (accumulating, no bias).
pub fn matvec_acc(w: &Tensor, x: &[f64], out: &mut [f64]) {
    let (rows, cols) = (w.rows(), w.cols());
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for r in 0..rows {
        let wr = w.row(r);
        let mut acc = 0.0;
        for (wv, xv) in wr.iter().zip(x.iter()) {
            acc += wv * xv;
        }
        out[r] += acc;
    }
}

/// out[j] += sum_r w[r, j] * g[r] (transpose product, accumulating).
pub fn matvec_t_acc(w: &Tensor, g: &[f64], out: &mut [f64]) {
    let (rows, cols) = (w.rows(), w.cols());
    debug_assert_eq!(g.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        let wr = w.row(r);
        let gr = g[r];
        for (o, wv) in out.iter_mut().zip(wr.iter()) {
            *o += wv * gr;
        }
    }
}

/// dw[r, c] += g[r] * x[c] (outer product, accumulating).
pub fn outer_acc(dw: &mut Tensor, g: &[f64], x: &[f64]) {
    let cols = dw.cols();
    debug_assert_eq!(g.len(), dw.rows());
    debug_assert_eq!(x.len(), cols);
    for (r, gr) in g.iter().enumerate() {
        let row = dw.row_mut(r);
        for (o, xv) in row.iter_mut().zip(x.iter()) {
            *o += gr * xv;
        }
    }
}
