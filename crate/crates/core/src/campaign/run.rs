//! Seeded Monte Carlo campaigns over lattice sizes and field strengths.
//!
//! Trial `t` uses `seed = trial_seed(base, t)` at every `(N, γ)`: the field on
//! `V_{5N}` comes from stream 0 and the endpoints from stream 1, so one field
//! is shared by all `γ` at a given size. Records are written in trial order
//! and the CSV holds no timing, so reruns are byte-identical. Wall-clock
//! times go to a separate file.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::CampaignConfig;
use crate::dgff::{FieldSample, MultiscaleDecomposer, Sampler};
use crate::error::{LfppError, Result};
use crate::exec::Exec;
use crate::hierarchy::{build_tree, tree_violations, untame_flow, HierarchyParams, LatticePath};
use crate::io::{write_atomic, write_json};
use crate::lattice::{BoxGeometry, Vertex};
use crate::metric::scan::{sample_endpoints, ENDPOINT_STREAM, FIELD_STREAM};
use crate::metric::{Dijkstra, DijkstraOptions, WeightField};
use crate::open::{e2_report, e3_report, good_points, heavy_mass, label_open, tree_points, y_flow, y_recursion_failures, OpenConfig};
use crate::rng::{stream_rng, trial_seed};
use crate::scales::ScaleParams;
use crate::stats::{log_log_fit, mean, variance, LinearFit};

/// Statistics of the tree built on a geodesic that passed the cardinality cut.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeStats {
    pub leaves: usize,
    pub untame_flow: f64,
    /// `untame_flow ≤ 2δm`.
    pub untame_ok: bool,
    /// `Y_{P,r}` for `r = 0..depth`.
    pub y: Vec<f64>,
    pub heavy_mass: f64,
    pub e1: bool,
    /// Broken tree properties, recursion identities and heavy-mass identity.
    pub identity_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub gamma: f64,
    pub trial: usize,
    pub seed: u64,
    pub from: Vertex,
    pub to: Vertex,
    pub card: usize,
    pub weight: f64,
    pub displacement: f64,
    /// `|P| ≤ N^{1+δ/(K²k)}`.
    pub filtered: bool,
    pub tree: Option<TreeStats>,
    pub good: usize,
    pub companion: usize,
    /// `good ≥ κN/8`.
    pub good_ok: bool,
    pub e2_max: f64,
    pub e2_holds: bool,
    pub e3_max: f64,
    pub e3_holds: bool,
    pub error: Option<String>,
}

pub const TRIAL_CSV_HEADER: &str = "N,gamma,trial,seed,x0,y0,x1,y1,card,weight,displacement,filtered,leaves,untame_flow,untame_ok,y,heavy_mass,e1,identity_failures,good,companion,good_ok,e2_max,e2_holds,e3_max,e3_holds,error";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrialRecord {
    fn failed(n: usize, gamma: f64, trial: usize, seed: u64, err: LfppError) -> Self {
        let o = Vertex::new(0, 0);
        Self {
            n,
            gamma,
            trial,
            seed,
            from: o,
            to: o,
            card: 0,
            weight: f64::NAN,
            displacement: f64::NAN,
            filtered: false,
            tree: None,
            good: 0,
            companion: 0,
            good_ok: false,
            e2_max: f64::NAN,
            e2_holds: false,
            e3_max: f64::NAN,
            e3_holds: false,
            error: Some(err.to_string()),
        }
    }

    pub fn csv_row(&self) -> String {
        let t = self.tree.as_ref();
        let y = t
            .map(|t| t.y.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        let err = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.gamma,
            self.trial,
            self.seed,
            self.from.x,
            self.from.y,
            self.to.x,
            self.to.y,
            self.card,
            self.weight,
            self.displacement,
            self.filtered,
            opt(t.map(|t| t.leaves)),
            opt(t.map(|t| t.untame_flow)),
            opt(t.map(|t| t.untame_ok)),
            y,
            opt(t.map(|t| t.heavy_mass)),
            opt(t.map(|t| t.e1)),
            opt(t.map(|t| t.identity_failures)),
            self.good,
            self.companion,
            self.good_ok,
            self.e2_max,
            self.e2_holds,
            self.e3_max,
            self.e3_holds,
            err
        )
    }
}

/// Shared per-size state: the field sampler and the multiscale tables.
pub struct SizeContext {
    pub scales: ScaleParams,
    pub hierarchy: HierarchyParams,
    pub sampler: Sampler,
    pub decomposer: MultiscaleDecomposer,
}

impl SizeContext {
    pub fn new(cfg: &CampaignConfig, n: usize) -> Result<Self> {
        let scales = cfg.scales(n)?;
        let geometry = BoxGeometry::v_5n(n)?;
        Ok(Self {
            scales,
            hierarchy: HierarchyParams::new(scales, cfg.kappa)?,
            sampler: Sampler::new(geometry, cfg.backend.resolve(geometry.side))?,
            decomposer: MultiscaleDecomposer::new(scales)?,
        })
    }
}

fn tree_stats(ctx: &SizeContext, field: &FieldSample, path: &LatticePath, open: &OpenConfig) -> Result<TreeStats> {
    let m = ctx.scales.m;
    let tree = build_tree(path, m, &ctx.hierarchy)?;
    let view = ctx.decomposer.decompose(field, &tree_points(&tree))?;
    let labels = label_open(&tree, &view, open)?;
    let flow = untame_flow(&tree);
    let heavy = heavy_mass(&tree, &labels);
    let y = (0..tree.depth()).map(|r| y_flow(&tree, &labels, r)).collect::<Result<Vec<_>>>()?;
    let failures = tree_violations(&tree).len() + y_recursion_failures(&tree, &labels).len() + usize::from(!heavy.identity_holds);
    Ok(TreeStats {
        leaves: tree.leaf_count(),
        untame_flow: flow,
        untame_ok: flow <= 2.0 * open.delta * m as f64,
        y,
        heavy_mass: heavy.mass,
        e1: heavy.e1,
        identity_failures: failures,
    })
}

/// Runs one trial at one `(N, γ)`. The field is resampled from the seed, so
/// the record depends on `(config, N, γ, trial)` only.
pub fn run_trial(cfg: &CampaignConfig, ctx: &SizeContext, gamma: f64, trial: usize) -> Result<TrialRecord> {
    let n = ctx.scales.n;
    let seed = trial_seed(cfg.seed, trial as u64);
    let field = ctx.sampler.sample_stream(seed, FIELD_STREAM);
    let weights = WeightField::from_field(&field, n, gamma)?;
    let (x, y) = sample_endpoints(n, cfg.kappa, &mut stream_rng(seed, ENDPOINT_STREAM))?;
    let geo = Dijkstra::new(n).run(&weights, x, y, DijkstraOptions::default())?;
    let path = LatticePath::from_vertices(&geo.path)?;
    let open = OpenConfig::from_delta(cfg.delta)?;
    let filtered = geo.cardinality as f64 <= cfg.card_cutoff(n);
    let tree = if filtered {
        Some(tree_stats(ctx, &field, &path, &open)?)
    } else {
        None
    };
    let good = good_points(&field, &path, cfg.delta, n)?;
    let view = ctx.decomposer.decompose(&field, &geo.path)?;
    let e2 = e2_report(&view, cfg.delta, n);
    let e3 = e3_report(&ctx.decomposer, &field, open.eps)?;
    Ok(TrialRecord {
        n,
        gamma,
        trial,
        seed,
        from: x,
        to: y,
        card: geo.cardinality,
        weight: geo.weight,
        displacement: geo.displacement,
        filtered,
        tree,
        good: good.count,
        companion: good.companion,
        good_ok: good.count as f64 >= cfg.kappa * n as f64 / 8.0,
        e2_max: e2.max_sum,
        e2_holds: e2.holds,
        e3_max: e3.max_tail,
        e3_holds: e3.holds,
        error: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub gamma: f64,
    pub trials: usize,
    pub errors: usize,
    /// Trials passing the cardinality cut.
    pub analyzed: usize,
    pub mean_card: f64,
    pub mean_card_over_n: f64,
    pub card_over_n_stderr: f64,
    pub mean_weight: f64,
    /// Fractions of analyzed trials.
    pub untame_rate: f64,
    pub e1_rate: f64,
    /// Analyzed trials with `untame_flow > 2δm`.
    pub untame_violations: Vec<usize>,
    pub identity_failures: usize,
    /// Fractions of completed trials.
    pub good_rate: f64,
    pub e2_rate: f64,
    pub e3_rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaFit {
    pub gamma: f64,
    /// `log mean|Geo|` against `log N`.
    pub dimension: Option<LinearFit>,
    pub weight: Option<LinearFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignSummary {
    pub config: CampaignConfig,
    pub cells: Vec<CellSummary>,
    pub fits: Vec<GammaFit>,
}

#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub records: Vec<TrialRecord>,
    pub summary: CampaignSummary,
}

impl CampaignReport {
    pub fn cell(&self, n: usize, gamma: f64) -> Option<&CellSummary> {
        self.summary.cells.iter().find(|c| c.n == n && c.gamma == gamma)
    }

    pub fn fit(&self, gamma: f64) -> Option<&GammaFit> {
        self.summary.fits.iter().find(|f| f.gamma == gamma)
    }
}

fn rate(xs: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut all) = (0usize, 0usize);
    for x in xs {
        all += 1;
        hit += usize::from(x);
    }
    if all == 0 {
        f64::NAN
    } else {
        hit as f64 / all as f64
    }
}

pub fn summarize_cell(n: usize, gamma: f64, records: &[TrialRecord]) -> CellSummary {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let trees: Vec<(usize, &TreeStats)> = ok.iter().filter_map(|r| r.tree.as_ref().map(|t| (r.trial, t))).collect();
    let cards: Vec<f64> = ok.iter().map(|r| r.card as f64).collect();
    let ratios: Vec<f64> = cards.iter().map(|c| c / n as f64).collect();
    let weights: Vec<f64> = ok.iter().map(|r| r.weight).collect();
    CellSummary {
        n,
        gamma,
        trials: records.len(),
        errors: records.len() - ok.len(),
        analyzed: trees.len(),
        mean_card: mean(&cards),
        mean_card_over_n: mean(&ratios),
        card_over_n_stderr: (variance(&ratios) / ratios.len() as f64).sqrt(),
        mean_weight: mean(&weights),
        untame_rate: rate(trees.iter().map(|t| t.1.untame_ok)),
        e1_rate: rate(trees.iter().map(|t| t.1.e1)),
        untame_violations: trees.iter().filter(|t| !t.1.untame_ok).map(|t| t.0).collect(),
        identity_failures: trees.iter().map(|t| t.1.identity_failures).sum(),
        good_rate: rate(ok.iter().map(|r| r.good_ok)),
        e2_rate: rate(ok.iter().map(|r| r.e2_holds)),
        e3_rate: rate(ok.iter().map(|r| r.e3_holds)),
    }
}

fn fits(cfg: &CampaignConfig, cells: &[CellSummary]) -> Vec<GammaFit> {
    cfg.gammas
        .iter()
        .map(|&gamma| {
            let row: Vec<&CellSummary> = cells.iter().filter(|c| c.gamma == gamma && c.mean_card > 0.0).collect();
            let ns: Vec<f64> = row.iter().map(|c| c.n as f64).collect();
            let fit = |ys: Vec<f64>| (ns.len() >= 2).then(|| log_log_fit(&ns, &ys));
            GammaFit {
                gamma,
                dimension: fit(row.iter().map(|c| c.mean_card).collect()),
                weight: fit(row.iter().map(|c| c.mean_weight).collect()),
            }
        })
        .collect()
}

fn persist(out: &Path, records: &[TrialRecord], timing: &str, summary: &CampaignSummary) -> Result<()> {
    let mut csv = String::from(TRIAL_CSV_HEADER);
    csv.push('\n');
    for r in records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_atomic(&out.join("trials.csv"), csv.as_bytes())?;
    write_atomic(&out.join("timing.csv"), timing.as_bytes())?;
    write_json(&out.join("summary.json"), summary)
}

/// Runs every `(N, γ)` cell and rewrites `trials.csv`, `timing.csv` and
/// `summary.json` under `cfg.out` after each cell. A failing trial becomes
/// a record with its error message and the campaign continues.
pub fn run_campaign(cfg: &CampaignConfig, exec: Exec) -> Result<CampaignReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut records = Vec::new();
    let mut cells = Vec::new();
    let mut timing = String::from("N,gamma,trial,ms\n");
    for &n in &cfg.sizes {
        let ctx = SizeContext::new(cfg, n)?;
        for &gamma in &cfg.gammas {
            let rows = exec.map(cfg.trials, |t| {
                let start = Instant::now();
                let seed = trial_seed(cfg.seed, t as u64);
                let rec = run_trial(cfg, &ctx, gamma, t).unwrap_or_else(|e| TrialRecord::failed(n, gamma, t, seed, e));
                (rec, start.elapsed().as_secs_f64() * 1e3)
            });
            let mut cell = Vec::with_capacity(rows.len());
            for (rec, ms) in rows {
                let _ = writeln!(timing, "{n},{gamma},{},{ms:.3}", rec.trial);
                cell.push(rec);
            }
            cells.push(summarize_cell(n, gamma, &cell));
            records.extend(cell);
            let summary = CampaignSummary {
                config: cfg.clone(),
                fits: fits(cfg, &cells),
                cells: cells.clone(),
            };
            persist(&cfg.out, &records, &timing, &summary).map_err(|e| {
                LfppError::Io(std::io::Error::other(format!(
                    "writing results after N={n}, γ={gamma}, trial {}: {e}",
                    cfg.trials - 1
                )))
            })?;
        }
    }
    let summary = CampaignSummary {
        config: cfg.clone(),
        fits: fits(cfg, &cells),
        cells,
    };
    Ok(CampaignReport { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(out: &Path) -> CampaignConfig {
        CampaignConfig {
            sizes: vec![16],
            gammas: vec![0.0],
            k: 2,
            m: None,
            kappa: 0.5,
            delta: 0.04,
            trials: 3,
            seed: 5,
            out: out.to_path_buf(),
            backend: super::super::config::BackendChoice::Auto,
        }
    }

    #[test]
    fn zero_gamma_geodesics_are_taxicab() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_campaign(&small(dir.path()), Exec::Sequential).unwrap();
        for r in &report.records {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert_eq!(r.card as i64, r.from.l1(r.to) + 1);
        }
        assert!(dir.path().join("trials.csv").exists());
        assert!(dir.path().join("summary.json").exists());
    }
}
