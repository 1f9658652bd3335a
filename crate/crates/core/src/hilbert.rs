//! Hilbert space-filling curve: bijective index/coordinate conversion on
//! a 2ⁿ×2ⁿ grid, and the image-to-sequence scan that feeds 2D canvases
//! into the sequence model. Consecutive curve indices always land on
//! cells at Manhattan distance 1, so spatially close pixels stay close
//! in scan order.

use crate::error::{Error, Result};
use crate::mat::{Image, Mat};
use crate::scalar::Scalar;

/// Curve over a 2ⁿ×2ⁿ cell grid with fixed pixel cell size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertCurve {
    order: u32,
    cell_width: usize,
    cell_height: usize,
}

impl HilbertCurve {
    pub fn new(order: u32, cell_width: usize, cell_height: usize) -> Result<Self> {
        if order == 0 || order > 31 {
            return Err(Error::invalid_input("curve order must be in 1..=31"));
        }
        if cell_width == 0 || cell_height == 0 {
            return Err(Error::invalid_input("cell size must be positive"));
        }
        Ok(HilbertCurve {
            order,
            cell_width,
            cell_height,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Cells per side of the grid (2ⁿ).
    pub fn side(&self) -> usize {
        1usize << self.order
    }

    /// Total number of cells (4ⁿ), i.e. the scan sequence length.
    pub fn cells(&self) -> usize {
        self.side() * self.side()
    }

    pub fn cell_size(&self) -> (usize, usize) {
        (self.cell_width, self.cell_height)
    }

    /// Curve index of the cell containing pixel (x, y).
    pub fn index_of_pixel(&self, x: f64, y: f64) -> Result<usize> {
        let cx = (x / self.cell_width as f64).floor();
        let cy = (y / self.cell_height as f64).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.side() as f64 || cy >= self.side() as f64 {
            return Err(Error::invalid_input(format!(
                "pixel ({x}, {y}) outside the scanned grid"
            )));
        }
        xy2d(self.order, cx as usize, cy as usize)
    }

    /// Pixel center of the cell at a curve index.
    pub fn cell_center(&self, d: usize) -> Result<(f64, f64)> {
        let (cx, cy) = d2xy(self.order, d)?;
        Ok((
            (cx as f64 + 0.5) * self.cell_width as f64,
            (cy as f64 + 0.5) * self.cell_height as f64,
        ))
    }
}

fn rotate(scale: usize, x: &mut usize, y: &mut usize, rx: usize, ry: usize) {
    if ry == 0 {
        if rx == 1 {
            // Reflection; only the low bits below `scale` stay meaningful,
            // which is all later steps ever read.
            *x = (scale - 1).wrapping_sub(*x);
            *y = (scale - 1).wrapping_sub(*y);
        }
        std::mem::swap(x, y);
    }
}

/// Curve index → cell coordinates on the 2ⁿ grid.
pub fn d2xy(order: u32, d: usize) -> Result<(usize, usize)> {
    let side = 1usize << order;
    if d >= side * side {
        return Err(Error::invalid_input(format!(
            "index {d} outside curve of {} cells",
            side * side
        )));
    }
    let (mut x, mut y) = (0usize, 0usize);
    let mut t = d;
    let mut s = 1usize;
    while s < side {
        let rx = 1 & (t >> 1);
        let ry = 1 & (t ^ rx);
        rotate(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t >>= 2;
        s <<= 1;
    }
    Ok((x, y))
}

/// Cell coordinates → curve index; inverse of [`d2xy`].
pub fn xy2d(order: u32, x: usize, y: usize) -> Result<usize> {
    let side = 1usize << order;
    if x >= side || y >= side {
        return Err(Error::invalid_input(format!(
            "cell ({x}, {y}) outside {side}x{side} grid"
        )));
    }
    let (mut x, mut y) = (x, y);
    let mut d = 0usize;
    let mut s = side >> 1;
    while s > 0 {
        let rx = usize::from(x & s > 0);
        let ry = usize::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        rotate(s, &mut x, &mut y, rx, ry);
        s >>= 1;
    }
    Ok(d)
}

/// Result of scanning an image along the curve.
#[derive(Debug, Clone)]
pub struct ScanResult<S> {
    /// 4ⁿ × (w·h·d) feature sequence in curve order; window pixels are
    /// flattened row-major as (y, x, channel).
    pub features: Mat<S>,
    /// True when the image did not fill the grid and was zero-padded.
    pub padded: bool,
}

/// Cuts the image into non-overlapping cell windows and emits them in
/// curve order. Images smaller than the grid are zero-padded.
pub fn scan_image<S: Scalar>(image: &Image<S>, curve: &HilbertCurve) -> Result<ScanResult<S>> {
    let (cw, ch) = curve.cell_size();
    let grid_w = curve.side() * cw;
    let grid_h = curve.side() * ch;
    if image.width() > grid_w || image.height() > grid_h {
        return Err(Error::invalid_input(format!(
            "{}x{} image exceeds the {grid_w}x{grid_h} scan grid",
            image.width(),
            image.height()
        )));
    }
    let padded = image.width() < grid_w || image.height() < grid_h;
    let depth = image.channels();
    let mut features = Mat::zeros(curve.cells(), cw * ch * depth);
    for d in 0..curve.cells() {
        let (cx, cy) = d2xy(curve.order(), d)?;
        let row = features.row_mut(d);
        let mut k = 0;
        for wy in 0..ch {
            let y = cy * ch + wy;
            for wx in 0..cw {
                let x = cx * cw + wx;
                for c in 0..depth {
                    if x < image.width() && y < image.height() {
                        row[k] = image.get(x, y, c);
                    }
                    k += 1;
                }
            }
        }
    }
    Ok(ScanResult { features, padded })
}
