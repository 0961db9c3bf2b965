//! Fast sine transforms and the Dirichlet solver they diagonalise.
//!
//! On an `n × n` interior grid with zero boundary values the walk operator
//! `I − P` is diagonal in the orthonormal DST-I basis with eigenvalues
//! `1 − (cos θ_a + cos θ_b)/2`, `θ_a = aπ/(n+1)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Orthonormal DST-I of length `n`, evaluated through an FFT of length `2(n+1)`.
pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        Self {
            n,
            fft,
            scale: (2.0 / (n + 1) as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms two real sequences with one complex FFT; both odd
    /// extensions have purely imaginary spectra, so they separate cleanly.
    fn pair(&self, a: &mut [f64], b: Option<&mut [f64]>, buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let n = self.n;
        let m = 2 * (n + 1);
        buf[0] = Complex::new(0.0, 0.0);
        buf[n + 1] = Complex::new(0.0, 0.0);
        match &b {
            Some(b) => {
                for j in 0..n {
                    let z = Complex::new(a[j], b[j]);
                    buf[j + 1] = z;
                    buf[m - j - 1] = -z;
                }
            }
            None => {
                for j in 0..n {
                    let z = Complex::new(a[j], 0.0);
                    buf[j + 1] = z;
                    buf[m - j - 1] = -z;
                }
            }
        }
        self.fft.process_with_scratch(buf, scratch);
        let s = 0.5 * self.scale;
        for k in 0..n {
            a[k] = -buf[k + 1].im * s;
        }
        if let Some(b) = b {
            for k in 0..n {
                b[k] = buf[k + 1].re * s;
            }
        }
    }

    /// Transforms every row of a row-major `rows × n` array in place.
    pub fn transform_rows(&self, data: &mut [f64]) {
        let n = self.n;
        if n == 0 {
            return;
        }
        debug_assert_eq!(data.len() % n, 0);
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * (n + 1)];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut rows = data.chunks_exact_mut(n);
        loop {
            match (rows.next(), rows.next()) {
                (Some(a), Some(b)) => self.pair(a, Some(b), &mut buf, &mut scratch),
                (Some(a), None) => {
                    self.pair(a, None, &mut buf, &mut scratch);
                    break;
                }
                _ => break,
            }
        }
    }

    /// Two-dimensional transform of a row-major `n × n` array. Self-inverse.
    pub fn transform_2d(&self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.n * self.n);
        self.transform_rows(data);
        transpose_square(data, self.n);
        self.transform_rows(data);
        transpose_square(data, self.n);
    }
}

fn transpose_square(data: &mut [f64], n: usize) {
    const TILE: usize = 32;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + TILE).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Direct solver for `(I − P) u = f` on an `n × n` interior grid with zero
/// Dirichlet data.
pub struct DirichletSolver {
    transform: SineTransform,
    eigenvalues: Vec<f64>,
}

impl DirichletSolver {
    pub fn new(n: usize) -> Self {
        let cosines: Vec<f64> = (1..=n).map(|a| (a as f64 * PI / (n + 1) as f64).cos()).collect();
        let mut eigenvalues = Vec::with_capacity(n * n);
        for cb in &cosines {
            for ca in &cosines {
                eigenvalues.push(1.0 - 0.5 * (ca + cb));
            }
        }
        Self {
            transform: SineTransform::new(n),
            eigenvalues,
        }
    }

    pub fn n(&self) -> usize {
        self.transform.len()
    }

    /// Eigenvalues of `I − P` in transformed row-major order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn transform(&self) -> &SineTransform {
        &self.transform
    }

    /// Overwrites `rhs` with `(I − P)^{-1} rhs`.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        self.transform.transform_2d(rhs);
        for (v, l) in rhs.iter_mut().zip(&self.eigenvalues) {
            *v /= l;
        }
        self.transform.transform_2d(rhs);
    }

    /// `max |(I − P) u − f|` for a candidate solution on the interior grid.
    pub fn residual(&self, u: &[f64], f: &[f64]) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for y in 0..n {
            for x in 0..n {
                let at = |xx: usize, yy: usize| u[yy * n + xx];
                let mut s = 0.0;
                if x > 0 {
                    s += at(x - 1, y);
                }
                if x + 1 < n {
                    s += at(x + 1, y);
                }
                if y > 0 {
                    s += at(x, y - 1);
                }
                if y + 1 < n {
                    s += at(x, y + 1);
                }
                let r = at(x, y) - 0.25 * s - f[y * n + x];
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dst(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let s = (2.0 / (n + 1) as f64).sqrt();
        (1..=n)
            .map(|k| {
                s * (1..=n)
                    .map(|j| x[j - 1] * (PI * (j * k) as f64 / (n + 1) as f64).sin())
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn matches_naive_transform() {
        for n in [1usize, 2, 5, 7, 16] {
            let t = SineTransform::new(n);
            let rows = 3;
            let data: Vec<f64> = (0..n * rows).map(|i| ((i * 37 % 11) as f64) - 4.5).collect();
            let mut fast = data.clone();
            t.transform_rows(&mut fast);
            for r in 0..rows {
                let want = naive_dst(&data[r * n..(r + 1) * n]);
                for k in 0..n {
                    assert!((fast[r * n + k] - want[k]).abs() < 1e-12, "n={n}");
                }
            }
        }
    }

    #[test]
    fn two_dimensional_transform_is_an_involution() {
        let n = 9;
        let t = SineTransform::new(n);
        let data: Vec<f64> = (0..n * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = data.clone();
        t.transform_2d(&mut x);
        t.transform_2d(&mut x);
        for (a, b) in x.iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solver_residual_is_tiny() {
        let n = 12;
        let s = DirichletSolver::new(n);
        let f: Vec<f64> = (0..n * n).map(|i| ((i % 7) as f64) - 3.0).collect();
        let mut u = f.clone();
        s.solve_in_place(&mut u);
        assert!(s.residual(&u, &f) < 1e-12);
    }
}
