//! Monte Carlo and oracle checks of the field's covariance structure.
//!
//! Every estimator here uses the known zero mean, so a covariance estimate is
//! the sample mean of a product and its standard error comes from the sample
//! variance of that product.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::dst::DirichletSolver;
use super::green::{build_green_oracle, center_variance, center_variance_formula, spectral_green, DENSE_ORACLE_LIMIT};
use super::harmonic::dirichlet_extension_with;
use super::multiscale::MultiscaleDecomposer;
use super::sampler::{Backend, FieldSample, Sampler};
use crate::error::{config, LfppError, Result};
use crate::exec::Exec;
use crate::lattice::{BoxGeometry, Vertex};
use crate::rng::stream_rng;
use crate::scales::ScaleParams;
use crate::stats::{linear_fit, LinearFit};

/// `C₁ = (2/π) log 2`.
pub const C1: f64 = 2.0 * std::f64::consts::LN_2 / PI;

/// Sample mean of a product of zero-mean quantities with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl ProductEstimate {
    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target) / self.stderr
    }
}

fn split(samples: usize) -> usize {
    samples.div_ceil(64).max(1)
}

/// Estimates `E[f_a f_b]` for each `(a, b)` in `pairs`, where `f = features(field)`
/// and fields are drawn from streams `0..samples` of `seed`.
pub fn product_moments<F>(
    sampler: &Sampler,
    samples: usize,
    seed: u64,
    exec: Exec,
    features: F,
    pairs: &[(usize, usize)],
) -> Result<Vec<ProductEstimate>>
where
    F: Fn(&FieldSample) -> Result<Vec<f64>> + Sync + Send,
{
    if samples < 2 {
        return config("at least two samples are needed");
    }
    let np = pairs.len();
    type Acc = (Vec<f64>, Vec<f64>, Option<String>);
    let (sum, sumsq, err): Acc = exec.fold_chunks(
        samples,
        split(samples),
        || (vec![0.0; np], vec![0.0; np], None),
        |acc, range| {
            for i in range {
                if acc.2.is_some() {
                    return;
                }
                let field = sampler.sample_stream(seed, i as u64);
                match features(&field) {
                    Ok(f) => {
                        for (p, &(a, b)) in pairs.iter().enumerate() {
                            let v = f[a] * f[b];
                            acc.0[p] += v;
                            acc.1[p] += v * v;
                        }
                    }
                    Err(e) => acc.2 = Some(format!("sample {i}: {e}")),
                }
            }
        },
        |mut a, b| {
            for p in 0..np {
                a.0[p] += b.0[p];
                a.1[p] += b.1[p];
            }
            (a.0, a.1, a.2.or(b.2))
        },
    );
    if let Some(e) = err {
        return Err(LfppError::Internal(e));
    }
    let n = samples as f64;
    Ok((0..np)
        .map(|p| {
            let mean = sum[p] / n;
            let var = (sumsq[p] / n - mean * mean).max(0.0) * n / (n - 1.0);
            ProductEstimate {
                mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect())
}

/// Sum of `X Xᵀ` over `samples` interior field vectors, as a dense matrix.
pub fn empirical_second_moment(sampler: &Sampler, samples: usize, seed: u64, exec: Exec) -> DMatrix<f64> {
    const BLOCK: usize = 128;
    let dim = sampler.geometry().interior_len();
    let partials = samples.div_ceil(16).max(1);
    exec.fold_chunks(
        samples,
        partials,
        || DMatrix::<f64>::zeros(dim, dim),
        |acc, range| {
            let mut start = range.start;
            while start < range.end {
                let cols = BLOCK.min(range.end - start);
                let mut x = DMatrix::<f64>::zeros(dim, cols);
                for c in 0..cols {
                    let mut rng = stream_rng(seed, (start + c) as u64);
                    sampler.sample_interior(&mut rng, x.column_mut(c).as_mut_slice());
                }
                acc.gemm(1.0, &x, &x.transpose(), 1.0);
                start += cols;
            }
        },
        |a, b| a + b,
    )
}

/// Entrywise comparison of the empirical covariance with the Green oracle.
#[derive(Clone, Debug, Serialize)]
pub struct CovarianceComparison {
    pub side: usize,
    pub samples: usize,
    /// Number of compared interior pairs `x ≤ y`.
    pub entries: usize,
    pub max_abs_z: f64,
    pub worst_pair: (Vertex, Vertex),
    /// Entries beyond `threshold` standard errors.
    pub exceedances: usize,
    pub threshold: f64,
}

impl CovarianceComparison {
    pub fn passed(&self) -> bool {
        self.exceedances == 0
    }
}

/// Compares empirical covariances on a box of the given side with the dense
/// oracle. The standard error of `Ĝ(x,y)` is `√((G_xx G_yy + G_xy²)/n)`.
pub fn compare_covariance(
    side: usize,
    samples: usize,
    seed: u64,
    backend: Backend,
    threshold: f64,
    exec: Exec,
) -> Result<CovarianceComparison> {
    let geometry = BoxGeometry::new(Vertex::new(0, 0), side)?;
    let oracle = build_green_oracle(geometry)?;
    let sampler = Sampler::new(geometry, backend)?;
    let m = empirical_second_moment(&sampler, samples, seed, exec);
    let g = oracle.interior_matrix();
    let dim = geometry.interior_len();
    let n = samples as f64;
    let mut max_abs_z = 0.0f64;
    let mut worst = (0, 0);
    let mut exceedances = 0;
    for i in 0..dim {
        for j in i..dim {
            let gij = g[i * dim + j];
            let se = ((g[i * dim + i] * g[j * dim + j] + gij * gij) / n).sqrt();
            let z = ((m[(i, j)] / n - gij) / se).abs();
            if z > max_abs_z {
                max_abs_z = z;
                worst = (i, j);
            }
            if z > threshold {
                exceedances += 1;
            }
        }
    }
    Ok(CovarianceComparison {
        side,
        samples,
        entries: dim * (dim + 1) / 2,
        max_abs_z,
        worst_pair: (geometry.interior_vertex(worst.0), geometry.interior_vertex(worst.1)),
        exceedances,
        threshold,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CenterVarianceRow {
    pub ell: usize,
    pub oracle: f64,
    pub formula: f64,
    pub diff: f64,
    /// `|diff|·ℓ²`.
    pub c3: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CenterVarianceReport {
    pub rows: Vec<CenterVarianceRow>,
    /// Smallest constant with `|diff| ≤ C₃/ℓ²` on every row.
    pub fitted_c3: f64,
    /// Largest relative deviation of a row's `C₃` from the mean over rows.
    pub c3_spread: f64,
}

impl CenterVarianceReport {
    pub fn stable(&self, tolerance: f64) -> bool {
        self.c3_spread <= tolerance
    }
}

/// Exact centre variance for a box of side length `ell`: dense oracle when
/// it fits, eigen-expansion otherwise.
pub fn oracle_center_variance(ell: usize) -> Result<f64> {
    let b = BoxGeometry::centered(Vertex::new(0, 0), ell)?;
    if b.interior_len() <= DENSE_ORACLE_LIMIT {
        build_green_oracle(b)?.get(b.center(), b.center())
    } else {
        center_variance(ell)
    }
}

pub fn center_variance_table(ells: &[usize]) -> Result<CenterVarianceReport> {
    if ells.is_empty() {
        return config("no box sizes given");
    }
    let mut rows = Vec::new();
    for &ell in ells {
        let oracle = oracle_center_variance(ell)?;
        let formula = center_variance_formula(ell as f64);
        let diff = oracle - formula;
        rows.push(CenterVarianceRow {
            ell,
            oracle,
            formula,
            diff,
            c3: diff.abs() * (ell * ell) as f64,
        });
    }
    let fitted_c3 = rows.iter().map(|r| r.c3).fold(0.0, f64::max);
    let mean = rows.iter().map(|r| r.c3).sum::<f64>() / rows.len() as f64;
    let c3_spread = rows.iter().map(|r| (r.c3 / mean - 1.0).abs()).fold(0.0, f64::max);
    Ok(CenterVarianceReport {
        rows,
        fitted_c3,
        c3_spread,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LogCorrelationPoint {
    pub distance: i64,
    /// `log₂(ℓ / |x−y|_∞)`.
    pub log_ratio: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub exact: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogCorrelationReport {
    pub ell: usize,
    pub samples: usize,
    pub cov_scale: f64,
    pub points: Vec<LogCorrelationPoint>,
    pub fit: LinearFit,
    pub exact_fit: LinearFit,
    /// Range of `Cov − C₁ log₂(ℓ/|x−y|_∞)` over the empirical points.
    pub band: (f64, f64),
}

impl LogCorrelationReport {
    pub fn relative_slope_error(&self) -> f64 {
        (self.fit.slope / C1 - 1.0).abs()
    }
}

/// Pairs `(c, c + r·e)` with `c` the centre of a box of side length `ell`, `e`
/// one of the four axis directions and `1 ≤ r ≤ max_r`; `max_r` is the
/// largest radius keeping both points deep inside.
pub fn log_correlation_pairs(ell: usize) -> Result<(BoxGeometry, Vec<(Vertex, Vertex)>)> {
    let b = BoxGeometry::centered(Vertex::new(0, 0), ell)?;
    let c = b.center();
    let mut pairs = Vec::new();
    for r in 1.. {
        let y = Vertex::new(c.x + r, c.y);
        if (b.boundary_distance(y) as f64) <= ell as f64 / 10.0 {
            break;
        }
        for (dx, dy) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            pairs.push((c, Vertex::new(c.x + dx * r, c.y + dy * r)));
        }
    }
    Ok((b, pairs))
}

/// Regression of the empirical covariance on `log₂(ℓ/|x−y|_∞)`. The field is
/// multiplied by `√cov_scale` before estimation; any value other than 1
/// models a mis-scaled covariance.
pub fn log_correlation_check(ell: usize, samples: usize, seed: u64, cov_scale: f64, exec: Exec) -> Result<LogCorrelationReport> {
    let (b, pairs) = log_correlation_pairs(ell)?;
    let sampler = Sampler::new(b, Backend::Spectral)?;
    let points: Vec<Vertex> = std::iter::once(b.center()).chain(pairs.iter().map(|p| p.1)).collect();
    let s = cov_scale.sqrt();
    let feats = |f: &FieldSample| Ok(points.iter().map(|v| s * f.value(*v)).collect::<Vec<f64>>());
    let idx: Vec<(usize, usize)> = (0..pairs.len()).map(|i| (0, i + 1)).collect();
    let est = product_moments(&sampler, samples, seed, exec, feats, &idx)?;
    let mut out = Vec::with_capacity(pairs.len());
    for ((x, y), e) in pairs.iter().zip(&est) {
        let d = x.linf(*y).max(1);
        out.push(LogCorrelationPoint {
            distance: d,
            log_ratio: (ell as f64 / d as f64).log2(),
            empirical: e.mean,
            stderr: e.stderr,
            exact: spectral_green(&b, *x, *y)?,
        });
    }
    let xs: Vec<f64> = out.iter().map(|p| p.log_ratio).collect();
    let ys: Vec<f64> = out.iter().map(|p| p.empirical).collect();
    let ex: Vec<f64> = out.iter().map(|p| p.exact).collect();
    let resid = out.iter().map(|p| p.empirical - C1 * p.log_ratio);
    let band = resid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    Ok(LogCorrelationReport {
        ell,
        samples,
        cov_scale,
        fit: linear_fit(&xs, &ys),
        exact_fit: linear_fit(&xs, &ex),
        points: out,
        band,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovPair {
    pub x: Vertex,
    pub y: Vertex,
    pub estimate: ProductEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovReport {
    pub field_side: usize,
    pub subbox: BoxGeometry,
    pub samples: usize,
    pub pairs: Vec<MarkovPair>,
    pub max_abs_z: f64,
}

/// `Cov(H^B(x), (η − H^B)(y))` for `pairs` random interior pairs of a centred
/// sub-box `B` of side length `sub_ell` inside a box with `field_side` vertices.
pub fn markov_check(field_side: usize, sub_ell: usize, pairs: usize, samples: usize, seed: u64, exec: Exec) -> Result<MarkovReport> {
    use rand::Rng;
    let geometry = BoxGeometry::new(Vertex::new(0, 0), field_side)?;
    let subbox = BoxGeometry::centered(geometry.center(), sub_ell)?;
    if !geometry.contains_box(&subbox) || subbox.interior_len() == 0 {
        return config("sub-box must fit inside the field box with a non-empty interior");
    }
    let mut rng = stream_rng(seed ^ 0x4d41_524b, u64::MAX);
    let n = subbox.interior_len();
    let chosen: Vec<(Vertex, Vertex)> = (0..pairs)
        .map(|_| {
            (
                subbox.interior_vertex(rng.random_range(0..n)),
                subbox.interior_vertex(rng.random_range(0..n)),
            )
        })
        .collect();
    let sampler = Sampler::auto(geometry)?;
    let solver = DirichletSolver::new(subbox.interior_side());
    let feats = |f: &FieldSample| {
        let h = dirichlet_extension_with(&solver, &subbox, |z| f.value(z))?;
        let mut out = Vec::with_capacity(2 * chosen.len());
        for (x, y) in &chosen {
            out.push(h.value(*x).unwrap());
            out.push(f.value(*y) - h.value(*y).unwrap());
        }
        Ok(out)
    };
    let idx: Vec<(usize, usize)> = (0..chosen.len()).map(|i| (2 * i, 2 * i + 1)).collect();
    let est = product_moments(&sampler, samples, seed, exec, feats, &idx)?;
    let pairs: Vec<MarkovPair> = chosen
        .into_iter()
        .zip(est)
        .map(|((x, y), estimate)| MarkovPair { x, y, estimate })
        .collect();
    let max_abs_z = pairs.iter().map(|p| p.estimate.z(0.0).abs()).fold(0.0, f64::max);
    Ok(MarkovReport {
        field_side,
        subbox,
        samples,
        pairs,
        max_abs_z,
    })
}

/// Exact `Var η_j(x)`: `G_{K}(c,c)` for `j = 0`, else `G_{K^{j+1}}(c,c) − G_{K^j}(c,c)`.
pub fn eta_variance_exact(params: &ScaleParams, j: u32) -> Result<f64> {
    let hi = center_variance(params.big_k().pow(j + 1))?;
    let lo = if j == 0 { 0.0 } else { center_variance(params.big_k().pow(j))? };
    Ok(hi - lo)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceEstimate {
    pub distance: i64,
    pub estimate: ProductEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaLevelReport {
    pub j: u32,
    pub variance_exact: f64,
    pub variance: ProductEstimate,
    /// `Cov(η_j(x), η_j(y))` with `|x−y|_∞ ≥ K^{j+1}`.
    pub independence: Vec<DistanceEstimate>,
    /// `Cov(η_j(x), η_j(y))` for nearby pairs.
    pub covariance: Vec<DistanceEstimate>,
    /// `E(η_j(u) − η_j(v))²`, increasing distances up to `K^j`.
    pub increments: Vec<DistanceEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EtaReport {
    pub params: ScaleParams,
    pub samples: usize,
    pub levels: Vec<EtaLevelReport>,
    /// `max_j |Var η_j − C₁k| / 2` over exact variances.
    pub c2_star: f64,
    /// `−min Cov(η_j(x), η_j(y))` over the tested pairs (0 if all positive).
    pub c4_star: f64,
    /// `max E(η_j(u)−η_j(v))² · K^j / |u−v|_∞` for `j ≥ 1`.
    pub c5_star: f64,
}

/// Monte Carlo study of the `η_j` fields of the multiscale decomposition on
/// `V_{5N}`, tracking a handful of vertices around the centre of `V_N`.
pub fn eta_check(params: ScaleParams, samples: usize, seed: u64, exec: Exec) -> Result<EtaReport> {
    let dec = MultiscaleDecomposer::new(params)?;
    let geometry = BoxGeometry::v_5n(params.n)?;
    let sampler = Sampler::auto(geometry)?;
    let c = Vertex::new(params.n as i64 / 2, params.n as i64 / 2);
    let kk = params.big_k() as i64;
    let mut points = vec![c];
    let push = |v: Vertex, pts: &mut Vec<Vertex>| -> usize {
        if let Some(i) = pts.iter().position(|p| *p == v) {
            i
        } else {
            pts.push(v);
            pts.len() - 1
        }
    };
    struct Plan {
        indep: Vec<(i64, usize)>,
        near: Vec<(i64, usize)>,
    }
    let mut plans = Vec::new();
    for j in 0..params.m {
        let kj = kk.pow(j);
        let far = kk.pow(j + 1);
        let indep = [far, far + kj]
            .into_iter()
            .map(|d| (d, push(Vertex::new(c.x + d, c.y), &mut points)))
            .collect();
        let mut near = Vec::new();
        let mut d = 1;
        while d <= kj {
            near.push((d, push(Vertex::new(c.x, c.y + d), &mut points)));
            d *= 2;
        }
        plans.push(Plan { indep, near });
    }
    let m = params.m as usize;
    let np = points.len();
    // Features: η_j at every point (index j·np + p), then per level the
    // increments η_j(c) − η_j(c + d e₂) in plan order.
    let feats = |f: &FieldSample| {
        let view = dec.decompose(f, &points)?;
        let mut out = Vec::with_capacity(m * np * 2);
        for j in 0..params.m {
            for p in 0..np {
                out.push(view.eta(j, p));
            }
        }
        for (j, plan) in plans.iter().enumerate() {
            for &(_, p) in &plan.near {
                out.push(view.eta(j as u32, 0) - view.eta(j as u32, p));
            }
        }
        Ok(out)
    };
    let mut idx = Vec::new();
    let mut inc_base = m * np;
    let mut layout = Vec::new();
    for (j, plan) in plans.iter().enumerate() {
        let base = j * np;
        let var_at = idx.len();
        idx.push((base, base));
        let indep_at = idx.len();
        for &(_, p) in &plan.indep {
            idx.push((base, base + p));
        }
        let near_at = idx.len();
        for &(_, p) in &plan.near {
            idx.push((base, base + p));
        }
        let inc_at = idx.len();
        for q in 0..plan.near.len() {
            idx.push((inc_base + q, inc_base + q));
        }
        inc_base += plan.near.len();
        layout.push((var_at, indep_at, near_at, inc_at));
    }
    let est = product_moments(&sampler, samples, seed, exec, feats, &idx)?;
    let mut levels = Vec::new();
    let (mut c2, mut c4, mut c5) = (0.0f64, 0.0f64, 0.0f64);
    for (j, plan) in plans.iter().enumerate() {
        let (var_at, indep_at, near_at, inc_at) = layout[j];
        let variance_exact = eta_variance_exact(&params, j as u32)?;
        c2 = c2.max((variance_exact - C1 * params.k as f64).abs() / 2.0);
        let de = |list: &[(i64, usize)], at: usize| -> Vec<DistanceEstimate> {
            list.iter()
                .enumerate()
                .map(|(q, &(d, _))| DistanceEstimate {
                    distance: d,
                    estimate: est[at + q],
                })
                .collect()
        };
        let covariance = de(&plan.near, near_at);
        let independence = de(&plan.indep, indep_at);
        let increments = de(&plan.near, inc_at);
        for e in covariance.iter().chain(&independence) {
            c4 = c4.max(-e.estimate.mean);
        }
        if j >= 1 {
            let kj = kk.pow(j as u32) as f64;
            for e in &increments {
                c5 = c5.max(e.estimate.mean * kj / e.distance as f64);
            }
        }
        levels.push(EtaLevelReport {
            j: j as u32,
            variance_exact,
            variance: est[var_at],
            independence,
            covariance,
            increments,
        });
    }
    Ok(EtaReport {
        params,
        samples,
        levels,
        c2_star: c2,
        c4_star: c4,
        c5_star: c5,
    })
}

/// Universal constants measured by the suite.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FittedConstants {
    pub c1: f64,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub c6: Option<f64>,
    pub c7: Option<f64>,
    pub c8: Option<f64>,
}

impl FittedConstants {
    pub fn new() -> Self {
        Self {
            c1: C1,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_moments_are_deterministic_across_exec_modes() {
        let s = Sampler::auto(BoxGeometry::new(Vertex::new(0, 0), 9).unwrap()).unwrap();
        let f = |fs: &FieldSample| Ok(vec![fs.value(Vertex::new(4, 4)), fs.value(Vertex::new(3, 4))]);
        let a = product_moments(&s, 300, 5, Exec::Parallel, f, &[(0, 0), (0, 1)]).unwrap();
        let b = product_moments(&s, 300, 5, Exec::Sequential, f, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn second_moment_is_symmetric() {
        let s = Sampler::auto(BoxGeometry::new(Vertex::new(0, 0), 7).unwrap()).unwrap();
        let m = empirical_second_moment(&s, 200, 1, Exec::default());
        assert!((&m - m.transpose()).amax() < 1e-9);
    }

    #[test]
    fn eta_variance_telescopes_to_the_top_box() {
        let p = ScaleParams::new(16, 2, 2).unwrap();
        let total: f64 = (0..2).map(|j| eta_variance_exact(&p, j).unwrap()).sum();
        assert!((total - center_variance(16).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn deep_inside_pairs_respect_the_margin() {
        let (b, pairs) = log_correlation_pairs(128).unwrap();
        assert_eq!(pairs.len(), 4 * 51);
        assert!(pairs.iter().all(|(_, y)| b.boundary_distance(*y) as f64 > 12.8));
    }
}
