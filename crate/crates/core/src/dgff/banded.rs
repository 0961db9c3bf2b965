//! Banded Cholesky factorisation of the interior walk operator `I − P`.

use crate::error::{LfppError, Result};

/// `A = L Lᵀ` for a symmetric positive definite matrix of half-bandwidth `b`.
///
/// Row `i` of `L` is stored as `b + 1` entries covering columns `i − b ..= i`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    size: usize,
    band: usize,
    rows: Vec<f64>,
}

impl BandCholesky {
    /// Factors `I − P` on an `n × n` interior grid (row-major, x-minor).
    pub fn walk_operator(n: usize) -> Result<Self> {
        let size = n * n;
        let band = n;
        let entry = |i: usize, j: usize| -> f64 {
            // j ≤ i, i − j ≤ band
            if i == j {
                1.0
            } else if i - j == 1 && i % n != 0 {
                -0.25
            } else if i - j == n {
                -0.25
            } else {
                0.0
            }
        };
        Self::factor(size, band, entry)
    }

    /// Factors the matrix whose lower-band entries are given by `entry(i, j)`, `j ≤ i`.
    pub fn factor(size: usize, band: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = band + 1;
        let mut rows = vec![0.0; size * w];
        for i in 0..size {
            let j0 = i.saturating_sub(band);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(band));
                let mut s = entry(i, j);
                for k in k0..j {
                    s -= rows[i * w + (k + band - i)] * rows[j * w + (k + band - j)];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(LfppError::Internal(format!("matrix not positive definite at pivot {i}")));
                    }
                    rows[i * w + band] = s.sqrt();
                } else {
                    rows[i * w + (j + band - i)] = s / rows[j * w + band];
                }
            }
        }
        Ok(Self { size, band, rows })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.rows[i * (self.band + 1) + (j + self.band - i)]
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.size {
            let j0 = i.saturating_sub(self.band);
            let mut s = b[i];
            for j in j0..i {
                s -= self.l(i, j) * b[j];
            }
            b[i] = s / self.l(i, i);
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        for i in (0..self.size).rev() {
            let k1 = (i + self.band).min(self.size - 1);
            let mut s = b[i];
            for k in i + 1..=k1 {
                s -= self.l(k, i) * b[k];
            }
            b[i] = s / self.l(i, i);
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}
