//! Convex upsampling: each fine pixel is a convex combination of the 3x3
//! coarse neighbourhood around its parent cell.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Neighbourhood order is row-major over offsets `(dy, dx)` in
/// `{-1, 0, 1}^2`; slot 4 is the parent cell.
pub const CENTER_SLOT: usize = 4;

const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexWeights<T> {
    /// `(height, width)` of the coarse grid.
    pub coarse_size: (usize, usize),
    pub factor: usize,
    /// One row per fine pixel, row-major over the fine grid.
    pub weights: Vec<[T; 9]>,
}

impl<T: Real> ConvexWeights<T> {
    pub fn new(coarse_size: (usize, usize), factor: usize, weights: Vec<[T; 9]>) -> Result<Self> {
        let w = Self {
            coarse_size,
            factor,
            weights,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform(coarse_size: (usize, usize), factor: usize) -> Result<Self> {
        let n = fine_len(coarse_size, factor)?;
        Self::new(coarse_size, factor, vec![[T::one() / T::lit(9.0); 9]; n])
    }

    pub fn nearest(coarse_size: (usize, usize), factor: usize) -> Result<Self> {
        let n = fine_len(coarse_size, factor)?;
        let mut row = [T::zero(); 9];
        row[CENTER_SLOT] = T::one();
        Self::new(coarse_size, factor, vec![row; n])
    }

    pub fn fine_size(&self) -> (usize, usize) {
        (self.coarse_size.0 * self.factor, self.coarse_size.1 * self.factor)
    }

    pub fn validate(&self) -> Result<()> {
        let n = fine_len(self.coarse_size, self.factor)?;
        if self.weights.len() != n {
            return Err(Error::Contract(format!(
                "{} weight rows for {n} fine pixels",
                self.weights.len()
            )));
        }
        let tol = T::lit(ROW_TOLERANCE);
        for (k, row) in self.weights.iter().enumerate() {
            let sum = row.iter().fold(T::zero(), |a, &b| a + b);
            if row.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) || (sum - T::one()).abs() > tol {
                return Err(Error::Contract(format!("weight row {k} is not convex: {row:?}")));
            }
        }
        Ok(())
    }
}

fn fine_len(coarse_size: (usize, usize), factor: usize) -> Result<usize> {
    if coarse_size.0 == 0 || coarse_size.1 == 0 || factor == 0 {
        return Err(Error::Domain(format!(
            "coarse size {coarse_size:?} and factor {factor} must be positive"
        )));
    }
    (coarse_size.0 * factor)
        .checked_mul(coarse_size.1 * factor)
        .ok_or_else(|| Error::Capacity("upsampled grid too large".into()))
}

/// Upsamples a row-major `height x width` grid by `weights.factor`. Borders
/// clamp to the edge cell. The output lies within the extrema of each
/// neighbourhood exactly, not just up to rounding.
pub fn convex_upsample<T: Real>(coarse: &[T], weights: &ConvexWeights<T>) -> Result<Vec<T>> {
    weights.validate()?;
    let (h, w) = weights.coarse_size;
    if coarse.len() != h * w {
        return Err(Error::Contract(format!(
            "coarse grid has {} values, weights expect {h}x{w}",
            coarse.len()
        )));
    }
    if coarse.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("coarse grid has non-finite values".into()));
    }
    let f = weights.factor;
    let (fh, fw) = weights.fine_size();
    let mut out = Vec::with_capacity(fh * fw);
    for y in 0..fh {
        let cy = y / f;
        for x in 0..fw {
            let cx = x / f;
            let row = &weights.weights[y * fw + x];
            let mut acc = T::zero();
            let mut total = T::zero();
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for (slot, &wk) in row.iter().enumerate() {
                let ny = (cy as isize + slot as isize / 3 - 1).clamp(0, h as isize - 1) as usize;
                let nx = (cx as isize + slot as isize % 3 - 1).clamp(0, w as isize - 1) as usize;
                let c = coarse[ny * w + nx];
                acc += wk * c;
                total += wk;
                lo = lo.min(c);
                hi = hi.max(c);
            }
            out.push((acc / total).max(lo).min(hi));
        }
    }
    Ok(out)
}
