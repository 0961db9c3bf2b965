//! Campaign configuration from flat `key = value` text.

use std::path::PathBuf;

use serde::Serialize;

use crate::dgff::{Backend, BANDED_SIDE_LIMIT};
use crate::error::{config, Result};
use crate::scales::ScaleParams;

/// Largest `N` and trials per cell runnable without the spectral backend.
pub const DESK_MAX_N: usize = 512;
pub const DESK_MAX_TRIALS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    /// Banded Cholesky, limited to `5N ≤ 257`.
    Dense,
    Spectral,
    Auto,
}

impl BackendChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" | "banded" => Ok(Self::Dense),
            "spectral" => Ok(Self::Spectral),
            "auto" => Ok(Self::Auto),
            other => config(format!("unknown backend {other:?}; expected dense, spectral or auto")),
        }
    }

    /// Backend for a field box with `side` vertices.
    pub fn resolve(self, side: usize) -> Backend {
        match self {
            Self::Dense => Backend::Banded,
            Self::Spectral => Backend::Spectral,
            Self::Auto => Backend::auto(side),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignConfig {
    pub sizes: Vec<usize>,
    pub gammas: Vec<f64>,
    /// Exponent `k` of `K = 2^k`.
    pub k: u32,
    /// Fixed `m` for every size; `None` takes the largest `m` with `K^m ≤ N`.
    pub m: Option<u32>,
    pub kappa: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub backend: BackendChoice,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64, 128, 256],
            gammas: vec![0.0, 0.2],
            k: 3,
            m: None,
            kappa: 0.5,
            delta: 0.04,
            trials: 20,
            seed: 1,
            out: PathBuf::from("campaign-out"),
            backend: BackendChoice::Auto,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().or_else(|_| config(format!("bad value {s:?} for {key}"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>().or_else(|_| config(format!("bad value {v:?} for {key}")))
}

impl CampaignConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    /// `K` sets the base (a power of two), `k` its exponent.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return config(format!("line {}: expected key = value", lineno + 1));
            };
            c.set(key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "sizes" | "N" => self.sizes = list(key, v)?,
            "gammas" | "gamma" => self.gammas = list(key, v)?,
            "k" => self.k = one(key, v)?,
            "K" => {
                let big: usize = one(key, v)?;
                if !big.is_power_of_two() || big < 2 {
                    return config(format!("K must be a power of two ≥ 2, got {big}"));
                }
                self.k = big.trailing_zeros();
            }
            "m" => self.m = Some(one(key, v)?),
            "kappa" => self.kappa = one(key, v)?,
            "delta" => self.delta = one(key, v)?,
            "trials" => self.trials = one(key, v)?,
            "seed" => self.seed = one(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "backend" => self.backend = BackendChoice::parse(v)?,
            other => return config(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn big_k(&self) -> usize {
        1usize << self.k
    }

    pub fn scales(&self, n: usize) -> Result<ScaleParams> {
        match self.m {
            Some(m) => ScaleParams::new(n, self.k, m),
            None => ScaleParams::for_n(n, self.k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.gammas.is_empty() {
            return config("sizes and gammas must be non-empty");
        }
        if !(0.0 < self.kappa && self.kappa < 1.0) {
            return config(format!("κ must lie in (0,1), got {}", self.kappa));
        }
        if !(0.0 < self.delta && self.delta < 1.0) {
            return config(format!("δ must lie in (0,1), got {}", self.delta));
        }
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        if let Some(g) = self.gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return config(format!("γ must be finite and non-negative, got {g}"));
        }
        let min_n = *self.sizes.iter().min().unwrap();
        if let Some(m) = self.m {
            if self.big_k().checked_pow(m).is_none_or(|p| p > min_n) {
                return config(format!("K^m = {}^{m} exceeds the smallest N = {min_n}", self.big_k()));
            }
        }
        for &n in &self.sizes {
            self.scales(n)?;
            let side = 5 * n;
            match self.backend {
                BackendChoice::Dense if side > BANDED_SIDE_LIMIT => {
                    return config(format!("the dense backend holds 5N ≤ {BANDED_SIDE_LIMIT}, got N = {n}"));
                }
                BackendChoice::Spectral => {}
                _ if n > DESK_MAX_N || self.trials > DESK_MAX_TRIALS => {
                    return config(format!(
                        "N > {DESK_MAX_N} or more than {DESK_MAX_TRIALS} trials per cell needs backend = spectral"
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// `N^{1+δ/(K²k)}`, the cardinality cut for the tree statistics.
    pub fn card_cutoff(&self, n: usize) -> f64 {
        let kk = self.big_k() as f64;
        (n as f64).powf(1.0 + self.delta / (kk * kk * self.k as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_text() {
        let c = CampaignConfig::parse("sizes = 64, 128\ngammas = 0.2\nK = 8\nm = 2 # fixed\ntrials = 5\nbackend = spectral\n").unwrap();
        assert_eq!(c.sizes, vec![64, 128]);
        assert_eq!(c.k, 3);
        assert_eq!(c.m, Some(2));
        assert_eq!(c.backend, BackendChoice::Spectral);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(CampaignConfig::parse("K = 6").is_err());
        assert!(CampaignConfig::parse("kappa = 1.0").is_err());
        assert!(CampaignConfig::parse("trials = 0").is_err());
        assert!(CampaignConfig::parse("sizes = 64\nK = 8\nm = 3").is_err());
        assert!(CampaignConfig::parse("sizes = 1024").is_err());
        assert!(CampaignConfig::parse("sizes = 64\nbackend = dense").is_err());
        assert!(CampaignConfig::parse("colour = red").is_err());
    }
}
