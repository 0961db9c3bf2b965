//! `lfpp`: sampling, geodesics, path trees and campaigns from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lfpp_core::campaign::{run_campaign, verify_suite, CampaignConfig, VerifyLevel};
use lfpp_core::dgff::checks::{center_variance_table, compare_covariance, FittedConstants};
use lfpp_core::dgff::{Backend, FieldSample, MultiscaleDecomposer, Sampler};
use lfpp_core::exec::thread_cap_from_env;
use lfpp_core::hierarchy::{build_tree, untame_flow, HierarchyParams, LatticePath};
use lfpp_core::io::{read_field, read_path, write_atomic, write_field, write_json, write_path, TreeRecord};
use lfpp_core::metric::{geodesic_scan, lfpp_distance, ScanConfig, WeightField};
use lfpp_core::open::labels::GOOD_POINT_CAP;
use lfpp_core::open::{e2_report, e3_report, good_points, heavy_mass, label_open, tree_points, y_flow, OpenConfig};
use lfpp_core::{BoxGeometry, Exec, ScaleParams, Vertex};

#[derive(Parser)]
#[command(name = "lfpp", version, about = "Liouville first passage percolation experiments")]
struct Cli {
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Banded,
    Spectral,
    Auto,
}

impl BackendArg {
    fn resolve(self, side: usize) -> Backend {
        match self {
            Self::Banded => Backend::Banded,
            Self::Spectral => Backend::Spectral,
            Self::Auto => Backend::auto(side),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the field on V_{5N} and write a DGF1 file.
    Sample {
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        backend: BackendArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical covariance against the Green oracle on a box with `n` vertices per side.
    VerifyCov {
        #[arg(short, long, alias = "side", default_value_t = 9)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Allowed standard errors per entry.
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        /// One-row CSV summary.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Geodesic between two vertices of V_N under exp(γη) weights.
    Geodesic {
        /// DGF1 field file; N is read from its header unless given.
        #[arg(long)]
        field: PathBuf,
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(long)]
        gamma: f64,
        /// Start vertex as `x,y`.
        #[arg(long, value_parser = parse_vertex)]
        from: Vertex,
        #[arg(long, value_parser = parse_vertex)]
        to: Vertex,
        /// JSON report including the vertex sequence.
        #[arg(long)]
        out: Option<PathBuf>,
        /// LPATH1 output.
        #[arg(long)]
        path_out: Option<PathBuf>,
    },
    /// Geodesic cardinality against N over several sizes.
    DimScan {
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV of per-trial rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build the path tree of an LPATH1 path and write it as JSON.
    Decompose {
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        scales: ScaleArgs,
        /// Lattice size; defaults to K^m.
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long, alias = "out")]
        tree_out: PathBuf,
    },
    /// Open labels, flow functionals and event checks for a field and path.
    Analyze {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        scales: ScaleArgs,
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long, default_value_t = 0.04)]
        delta: f64,
        #[arg(long, alias = "out")]
        report: Option<PathBuf>,
    },
    /// Run a campaign from a key=value config file.
    Campaign {
        config: PathBuf,
        /// Override a config key, e.g. `--set trials=10`.
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Self-check suite; exits non-zero on any failure.
    Verify {
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// JSON report output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `K = 2^k`; either may be given. `m` is the tree depth.
#[derive(clap::Args)]
struct ScaleArgs {
    #[arg(short, long)]
    k: Option<u32>,
    #[arg(long = "K")]
    big_k: Option<usize>,
    #[arg(long, alias = "level")]
    m: Option<u32>,
}

impl ScaleArgs {
    fn exponent(&self) -> Result<u32> {
        match (self.k, self.big_k) {
            (None, None) => Ok(3),
            (Some(k), None) => Ok(k),
            (k, Some(big)) => {
                if !big.is_power_of_two() || big < 2 {
                    bail!("K must be a power of two, got {big}");
                }
                let from_big = big.trailing_zeros();
                match k {
                    Some(k) if k != from_big => bail!("k = {k} does not match K = {big}"),
                    _ => Ok(from_big),
                }
            }
        }
    }

    /// Hierarchy for `n` (or `K^m`) and the tree depth.
    fn resolve(&self, n: Option<usize>, kappa: f64) -> Result<(HierarchyParams, u32)> {
        let k = self.exponent()?;
        let n = match (n, self.m) {
            (Some(n), _) => n,
            (None, Some(m)) => (1usize << k).checked_pow(m).context("K^m overflows")?,
            (None, None) => bail!("give --n or --m"),
        };
        let params = HierarchyParams::new(ScaleParams::for_n(n, k)?, kappa)?;
        let m = self.m.unwrap_or(params.m());
        if m > params.m() {
            bail!("depth m = {m} exceeds the largest level {} for N = {n}", params.m());
        }
        Ok((params, m))
    }
}

/// `N` for a field stored on `V_{fN}`, whose corner sits at `−(f−1)N/2`.
fn field_n(f: &FieldSample) -> usize {
    (f.geometry.side as i64 + 2 * f.geometry.origin.x) as usize
}

fn parse_vertex(s: &str) -> Result<Vertex, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Vertex::new(p(a)?, p(b)?))
}

/// Writes a line to stdout; a closed pipe (`lfpp … | head`) is not an error.
fn say(line: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    say(&serde_json::to_string_pretty(v)?)
}

fn load_path(p: &Path) -> Result<LatticePath> {
    read_path(p).with_context(|| format!("reading {}", p.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.cmd {
        Cmd::Sample { n, seed, backend, out } => {
            let g = BoxGeometry::v_5n(n)?;
            let field = Sampler::new(g, backend.resolve(g.side))?.sample(seed);
            write_field(&out, &field, 5)?;
            eprintln!("wrote {} ({}×{} values)", out.display(), g.side, g.side);
        }
        Cmd::VerifyCov {
            n,
            samples,
            seed,
            threshold,
            report,
        } => {
            let r = compare_covariance(n, samples, seed, Backend::Banded, threshold, exec)?;
            if let Some(report) = report {
                let csv = format!(
                    "side,samples,entries,max_abs_z,exceedances,threshold,passed\n{},{},{},{},{},{},{}\n",
                    r.side,
                    r.samples,
                    r.entries,
                    r.max_abs_z,
                    r.exceedances,
                    r.threshold,
                    r.passed()
                );
                write_atomic(&report, csv.as_bytes())?;
            }
            print_json(&r)?;
            if !r.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Geodesic {
            field,
            n,
            gamma,
            from,
            to,
            out,
            path_out,
        } => {
            let f = read_field(&field).with_context(|| format!("reading {}", field.display()))?;
            let n = n.unwrap_or_else(|| field_n(&f));
            let w = WeightField::from_field(&f, n, gamma)?;
            let geo = lfpp_distance(&w, from, to)?;
            if let Some(p) = path_out {
                write_path(&p, &LatticePath::from_vertices(&geo.path)?)?;
            }
            let summary = json!({
                "n": n, "gamma": gamma, "from": geo.from, "to": geo.to, "weight": geo.weight,
                "cardinality": geo.cardinality, "displacement": geo.displacement,
            });
            if let Some(out) = out {
                let mut full = summary.clone();
                full["path"] = json!(geo.path);
                write_json(&out, &full)?;
            }
            print_json(&summary)?;
        }
        Cmd::DimScan {
            sizes,
            gamma,
            trials,
            kappa,
            seed,
            csv,
        } => {
            let r = geodesic_scan(
                &ScanConfig {
                    gamma,
                    sizes,
                    trials,
                    kappa,
                    seed,
                },
                exec,
            )?;
            if let Some(csv) = csv {
                write_atomic(&csv, r.csv().as_bytes())?;
            }
            print_json(&json!({
                "sizes": r.sizes, "dimension_fit": r.dimension_fit,
                "weight_fit": r.weight_fit, "weight_exponent_bound": r.weight_exponent_bound,
            }))?;
        }
        Cmd::Decompose {
            path,
            scales,
            n,
            kappa,
            tree_out,
        } => {
            let p = load_path(&path)?;
            let (params, m) = scales.resolve(n, kappa)?;
            let tree = build_tree(&p, m, &params)?;
            write_json(&tree_out, &TreeRecord::from_tree(&tree))?;
            print_json(&json!({
                "nodes": tree.nodes().len(), "leaves": tree.leaf_count(),
                "depth": tree.depth(), "untame_flow": untame_flow(&tree),
            }))?;
        }
        Cmd::Analyze {
            field,
            path,
            scales,
            n,
            kappa,
            delta,
            report,
        } => {
            let f = read_field(&field).with_context(|| format!("reading {}", field.display()))?;
            let p = load_path(&path)?;
            let n = n.unwrap_or_else(|| field_n(&f));
            let (params, m) = scales.resolve(Some(n), kappa)?;
            let cfg = OpenConfig::from_delta(delta)?;
            let dec = MultiscaleDecomposer::new(params.scales)?;
            let tree = build_tree(&p, m, &params)?;
            let view = dec.decompose(&f, &tree_points(&tree))?;
            let labels = label_open(&tree, &view, &cfg)?;
            let y = (0..tree.depth())
                .map(|r| y_flow(&tree, &labels, r))
                .collect::<Result<Vec<_>, _>>()?;
            let pts = dec.decompose(&f, &p.lattice_points())?;
            let good = good_points(&f, &p, delta, n)?;
            let mut constants = FittedConstants::new();
            constants.c3 = Some(center_variance_table(&[16, 32, 64])?.fitted_c3);
            let out = json!({
                "n": n,
                "leaves": tree.leaf_count(),
                "untame_flow": untame_flow(&tree),
                "untame_limit": 2.0 * delta * f64::from(m),
                "open_nodes": labels.open_count(),
                "Y": y,
                "heavy": heavy_mass(&tree, &labels),
                "good_count": good.count,
                "good_points": good,
                "thresholds": {
                    "eps": cfg.eps,
                    "open": cfg.threshold(params.scales.k),
                    "heavy_ancestors": 8.0 * delta * f64::from(m),
                    "good_band": GOOD_POINT_CAP * delta.sqrt() * (n as f64).ln(),
                    "good_target": kappa * n as f64 / 8.0,
                },
                "e2": e2_report(&pts, delta, n),
                "e3": e3_report(&dec, &f, cfg.eps)?,
                "fitted_constants": constants,
            });
            if let Some(report) = report {
                write_json(&report, &out)?;
            }
            print_json(&out)?;
        }
        Cmd::Campaign { config, overrides } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = CampaignConfig::parse(&text)?;
            for o in &overrides {
                let Some((k, v)) = o.split_once('=') else {
                    bail!("--set expects key=value, got {o:?}")
                };
                cfg.set(k.trim(), v.trim())?;
            }
            cfg.validate()?;
            let r = run_campaign(&cfg, exec)?;
            print_json(&r.summary)?;
            let errors: usize = r.summary.cells.iter().map(|c| c.errors).sum();
            if errors > 0 {
                eprintln!("{errors} trials failed; see the error column of trials.csv");
            }
        }
        Cmd::Verify { full, seed, out } => {
            let level = if full { VerifyLevel::Full } else { VerifyLevel::Quick };
            let r = verify_suite(level, seed, exec);
            for c in &r.checks {
                let tag = match (c.passed, c.informational) {
                    (true, _) => "PASS",
                    (false, true) => "INFO",
                    (false, false) => "FAIL",
                };
                say(&format!("[{tag}] {} (seed {}): {}", c.name, c.seed, c.detail))?;
            }
            if let Some(c) = &r.constants {
                print_json(c)?;
            }
            if let Some(out) = out {
                write_json(&out, &r)?;
            }
            if !r.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = thread_cap_from_env() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
