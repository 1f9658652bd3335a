//! Minimal row-major matrix used for feature sequences, probability
//! matrices and model weights. Deliberately small: the workspace only
//! needs storage, row access and a few vector-matrix kernels.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid_input(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::invalid_input("ragged rows in matrix literal"));
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// out += x * W for a row vector x of length `rows`.
    pub fn vecmat_add(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &xr) in x.iter().enumerate() {
            let row = self.row(r);
            for (o, &w) in out.iter_mut().zip(row) {
                *o = *o + xr * w;
            }
        }
    }

    /// out += y * W^T for a row vector y of length `cols`.
    pub fn vecmat_t_add(&self, y: &[S], out: &mut [S]) {
        debug_assert_eq!(y.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = S::zero();
            for (&w, &yc) in row.iter().zip(y) {
                acc = acc + w * yc;
            }
            *o = *o + acc;
        }
    }

    /// W += x^T ⊗ y (outer product accumulation).
    pub fn outer_add(&mut self, x: &[S], y: &[S]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for (r, &xr) in x.iter().enumerate() {
            let row = self.row_mut(r);
            for (w, &yc) in row.iter_mut().zip(y) {
                *w = *w + xr * yc;
            }
        }
    }
}

/// Dense W×H×d pixel tensor, row-major in (y, x, channel) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<S> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<S>,
}

impl<S: Scalar> Image<S> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![S::zero(); width * height * channels],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, x: usize, y: usize, ch: usize) -> S {
        self.data[(y * self.width + x) * self.channels + ch]
    }

    pub fn set(&mut self, x: usize, y: usize, ch: usize, v: S) {
        self.data[(y * self.width + x) * self.channels + ch] = v;
    }

    pub fn add(&mut self, x: usize, y: usize, ch: usize, v: S) {
        let slot = &mut self.data[(y * self.width + x) * self.channels + ch];
        *slot = *slot + v;
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }
}
