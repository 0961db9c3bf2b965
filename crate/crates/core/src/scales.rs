//! The scale parameters `K = 2^k` and `m` with `K^m ≤ N < K^{m+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleParams {
    /// Side of `V_N`.
    pub n: usize,
    /// `K = 2^k`.
    pub k: u32,
    pub m: u32,
}

impl ScaleParams {
    pub fn new(n: usize, k: u32, m: u32) -> Result<Self> {
        if k == 0 || k > 20 {
            return config(format!("k must be in 1..=20, got {k}"));
        }
        if m == 0 {
            return config("m must be positive");
        }
        let big_k = 1usize << k;
        let lower = big_k.checked_pow(m);
        match lower {
            Some(l) if l <= n => {}
            _ => return config(format!("K^m = {big_k}^{m} exceeds N = {n}")),
        }
        if let Some(upper) = big_k.checked_pow(m + 1) {
            if n >= upper {
                return config(format!("N = {n} is not below K^(m+1) = {upper}"));
            }
        }
        Ok(Self { n, k, m })
    }

    /// The unique `m` with `K^m ≤ N < K^{m+1}`.
    pub fn for_n(n: usize, k: u32) -> Result<Self> {
        if k == 0 || k > 20 {
            return config(format!("k must be in 1..=20, got {k}"));
        }
        let big_k = 1usize << k;
        if n < big_k {
            return config(format!("N = {n} is below K = {big_k}"));
        }
        let mut m = 0u32;
        let mut p = 1usize;
        while p.saturating_mul(big_k) <= n {
            p *= big_k;
            m += 1;
        }
        Self::new(n, k, m)
    }

    pub fn big_k(&self) -> usize {
        1usize << self.k
    }

    pub fn big_k_f64(&self) -> f64 {
        self.big_k() as f64
    }

    /// `K^j` as a real number.
    pub fn scale(&self, j: u32) -> f64 {
        self.big_k_f64().powi(j as i32)
    }

    /// Number of dyadic increments `mk`.
    pub fn dyadic_levels(&self) -> u32 {
        self.m * self.k
    }

    /// Side length `K^m` of the largest box.
    pub fn top_box(&self) -> usize {
        self.big_k().pow(self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_is_enforced() {
        assert!(ScaleParams::new(256, 3, 2).is_ok());
        assert!(ScaleParams::new(256, 3, 3).is_err());
        assert!(ScaleParams::new(600, 3, 2).is_err());
        assert_eq!(ScaleParams::for_n(128, 2).unwrap().m, 3);
        assert_eq!(ScaleParams::for_n(511, 3).unwrap().m, 2);
        assert!(ScaleParams::for_n(3, 2).is_err());
    }
}
