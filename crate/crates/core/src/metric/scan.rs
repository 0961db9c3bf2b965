//! Geodesic dimension scans over lattice sizes.
//!
//! Trial `t` at every size uses the same seed `trial_seed(base, t)`: the field
//! on `V_{5N}` is drawn from stream 0 and the endpoints from stream 1. The
//! endpoints come from the same four uniforms scaled by `N`, so trials are
//! coupled across sizes and size-to-size comparisons have less noise.

use rand::Rng;
use serde::Serialize;

use super::dijkstra::{Dijkstra, DijkstraOptions, GeodesicResult};
use super::weights::WeightField;
use crate::dgff::Sampler;
use crate::error::{config, Result};
use crate::exec::Exec;
use crate::lattice::{BoxGeometry, Vertex};
use crate::rng::{stream_rng, trial_seed};
use crate::stats::{log_log_fit, mean, quantile, LinearFit};

pub const FIELD_STREAM: u64 = 0;
pub const ENDPOINT_STREAM: u64 = 1;

/// Endpoints uniform over lattice pairs of `V_N` with `‖x − y‖ ≥ κN`, by
/// rejection.
pub fn sample_endpoints<R: Rng + ?Sized>(n: usize, kappa: f64, rng: &mut R) -> Result<(Vertex, Vertex)> {
    if !(0.0..=1.0).contains(&kappa) || n < 2 {
        return config(format!("need N ≥ 2 and κ in [0,1], got N={n}, κ={kappa}"));
    }
    let nf = n as f64;
    if kappa * nf > (nf - 1.0) * std::f64::consts::SQRT_2 {
        return config(format!("no pair in V_{n} is κN = {} apart", kappa * nf));
    }
    let coord = |u: f64| ((u * nf) as i64).min(n as i64 - 1);
    loop {
        let u: [f64; 4] = rng.random();
        let x = Vertex::new(coord(u[0]), coord(u[1]));
        let y = Vertex::new(coord(u[2]), coord(u[3]));
        if x.l2(y) >= kappa * nf {
            return Ok((x, y));
        }
    }
}

/// Weights on `V_N` for one trial seed; `γ = 0` skips sampling.
pub fn trial_weights(sampler: Option<&Sampler>, n: usize, gamma: f64, seed: u64) -> Result<WeightField> {
    match sampler {
        Some(s) if gamma != 0.0 => {
            let field = s.sample_stream(seed, FIELD_STREAM);
            WeightField::from_field(&field, n, gamma)
        }
        _ => WeightField::uniform(n),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub gamma: f64,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub kappa: f64,
    pub seed: u64,
}

/// One CSV row: `N, trial, seed, x0, y0, x1, y1, card, weight, displacement`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanTrial {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub from: Vertex,
    pub to: Vertex,
    pub card: usize,
    pub weight: f64,
    pub displacement: f64,
}

pub const SCAN_CSV_HEADER: &str = "N,trial,seed,x0,y0,x1,y1,card,weight,displacement";

impl ScanTrial {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:e},{:e}",
            self.n, self.trial, self.seed, self.from.x, self.from.y, self.to.x, self.to.y, self.card, self.weight, self.displacement
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub trials: usize,
    pub mean_card: f64,
    /// 10%, 50% and 90% quantiles.
    pub card_quantiles: [f64; 3],
    pub mean_weight: f64,
    pub weight_quantiles: [f64; 3],
    /// Mean of `|Geo| / N`.
    pub mean_card_over_n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub trials: Vec<ScanTrial>,
    pub sizes: Vec<SizeSummary>,
    /// `log mean|Geo|` against `log N`; `None` with fewer than two sizes.
    pub dimension_fit: Option<LinearFit>,
    pub weight_fit: Option<LinearFit>,
    /// `1 − γ²/2000`.
    pub weight_exponent_bound: f64,
}

impl ScanReport {
    pub fn csv(&self) -> String {
        let mut s = String::from(SCAN_CSV_HEADER);
        s.push('\n');
        for t in &self.trials {
            s.push_str(&t.csv_row());
            s.push('\n');
        }
        s
    }
}

/// One geodesic for trial `trial` at size `n`.
pub fn run_trial(
    sampler: Option<&Sampler>,
    workspace: &mut Dijkstra,
    n: usize,
    gamma: f64,
    kappa: f64,
    base_seed: u64,
    trial: usize,
) -> Result<(ScanTrial, GeodesicResult, WeightField)> {
    let seed = trial_seed(base_seed, trial as u64);
    let weights = trial_weights(sampler, n, gamma, seed)?;
    let (x, y) = sample_endpoints(n, kappa, &mut stream_rng(seed, ENDPOINT_STREAM))?;
    let geo = workspace.run(&weights, x, y, DijkstraOptions::default())?;
    let row = ScanTrial {
        n,
        trial,
        seed,
        from: x,
        to: y,
        card: geo.cardinality,
        weight: geo.weight,
        displacement: geo.displacement,
    };
    Ok((row, geo, weights))
}

pub fn geodesic_scan(cfg: &ScanConfig, exec: Exec) -> Result<ScanReport> {
    if cfg.trials == 0 {
        return config("trials must be positive");
    }
    if cfg.sizes.is_empty() {
        return config("no lattice sizes given");
    }
    let mut trials = Vec::new();
    let mut sizes = Vec::new();
    for &n in &cfg.sizes {
        let sampler = if cfg.gamma != 0.0 {
            Some(Sampler::auto(BoxGeometry::v_5n(n)?)?)
        } else {
            None
        };
        let rows = exec.map(cfg.trials, |t| {
            let mut ws = Dijkstra::new(n);
            run_trial(sampler.as_ref(), &mut ws, n, cfg.gamma, cfg.kappa, cfg.seed, t).map(|r| r.0)
        });
        let rows: Vec<ScanTrial> = rows.into_iter().collect::<Result<_>>()?;
        let cards: Vec<f64> = rows.iter().map(|r| r.card as f64).collect();
        let ws: Vec<f64> = rows.iter().map(|r| r.weight).collect();
        let q = |xs: &[f64]| [quantile(xs, 0.1), quantile(xs, 0.5), quantile(xs, 0.9)];
        sizes.push(SizeSummary {
            n,
            trials: rows.len(),
            mean_card: mean(&cards),
            card_quantiles: q(&cards),
            mean_weight: mean(&ws),
            weight_quantiles: q(&ws),
            mean_card_over_n: mean(&cards) / n as f64,
        });
        trials.extend(rows);
    }
    let ns: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
    let (dimension_fit, weight_fit) = if sizes.len() >= 2 {
        let mc: Vec<f64> = sizes.iter().map(|s| s.mean_card).collect();
        let mw: Vec<f64> = sizes.iter().map(|s| s.mean_weight).collect();
        (Some(log_log_fit(&ns, &mc)), Some(log_log_fit(&ns, &mw)))
    } else {
        (None, None)
    };
    Ok(ScanReport {
        config: cfg.clone(),
        trials,
        sizes,
        dimension_fit,
        weight_fit,
        weight_exponent_bound: 1.0 - cfg.gamma * cfg.gamma / 2000.0,
    })
}
