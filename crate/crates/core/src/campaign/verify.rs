//! Self-check suite over every module, at two scales.
//!
//! `Quick` uses small boxes and corpora and finishes in well under a minute.
//! `Full` runs at acceptance scale and also measures the fitted constants.
//! Every check records the seed that reproduces it.

use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use serde::Serialize;

use crate::dgff::checks::{center_variance_table, compare_covariance, eta_check, log_correlation_check, markov_check, FittedConstants, C1};
use crate::dgff::MultiscaleView;
use crate::dgff::{multiscale_decompose, Backend, GreenOracle, MultiscaleDecomposer, PotentialKernel, Sampler};
use crate::error::Result;
use crate::exec::Exec;
use crate::hierarchy::corpus::{path_in_class, path_with_verdict, tame_paths_between};
use crate::hierarchy::{build_tree, extract_tame, extract_untame, tree_violations, HierarchyParams, LatticePath};
use crate::lattice::{BoxGeometry, Vertex};
use crate::metric::dijkstra::TieBreak;
use crate::metric::{brute_force_distance, geodesic_scan, Dijkstra, DijkstraOptions, ScanConfig, WeightField};
use crate::open::events::box_points;
use crate::open::{box_oscillation, heavy_mass, label_open, open_fraction_mc, tree_points, y_recursion_failures, OpenConfig, OpenFamily};
use crate::rng::stream_rng;
use crate::scales::ScaleParams;
use crate::stats::mean;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Informational checks are reported but never fail the suite.
    pub informational: bool,
    pub detail: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub checks: Vec<CheckResult>,
    pub constants: Option<FittedConstants>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed && !c.informational)
    }
}

/// Extraction results over a generated corpus at one level.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CorpusCheck {
    pub j: u32,
    pub tame: usize,
    pub untame: usize,
    /// Paths the generator could not produce.
    pub missing: usize,
    pub max_visits_tame: u32,
    pub max_visits_untame: u32,
    pub near_ties: usize,
    /// `(path index, tame, message)`.
    pub failures: Vec<(usize, bool, String)>,
}

/// Generates `per_kind` tame and `per_kind` untame paths in `SL_{j+1}` and
/// extracts each; any broken postcondition is a failure.
pub fn extraction_corpus(params: &HierarchyParams, j: u32, per_kind: usize, seed: u64) -> CorpusCheck {
    let mut out = CorpusCheck { j, ..Default::default() };
    for tame in [true, false] {
        let mut rng = stream_rng(seed, u64::from(j) * 2 + u64::from(tame));
        for i in 0..per_kind {
            let Some(p) = path_with_verdict(j, tame, params, &mut rng) else {
                out.missing += 1;
                continue;
            };
            let ex = if tame {
                extract_tame(&p, j, params)
            } else {
                extract_untame(&p, j, params)
            };
            match ex {
                Ok(ex) => {
                    out.near_ties += ex.near_ties;
                    if tame {
                        out.tame += 1;
                        out.max_visits_tame = out.max_visits_tame.max(ex.max_box_visits());
                    } else {
                        out.untame += 1;
                        out.max_visits_untame = out.max_visits_untame.max(ex.max_box_visits());
                    }
                }
                Err(e) => out.failures.push((i, tame, e.to_string())),
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TreeCheck {
    pub trees: usize,
    pub missing: usize,
    pub failures: Vec<(usize, String)>,
}

/// Random `η_j` values in `±3εk` on the tree points, so that a fair share
/// of nodes come out open.
pub fn random_view(tree: &crate::hierarchy::PathTree, cfg: &OpenConfig, seed: u64) -> MultiscaleView {
    let sp = tree.params().scales;
    let t = 3.0 * cfg.threshold(sp.k);
    let mut rng = stream_rng(seed, 0);
    let pts = tree_points(tree);
    let vals: Vec<f64> = (0..pts.len() * sp.m as usize).map(|_| rng.random_range(-t..t)).collect();
    let index: std::collections::HashMap<Vertex, usize> = pts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let np = pts.len();
    MultiscaleView::synthetic(sp, pts, move |j, v| vals[j as usize * np + index[&v]])
}

/// Exact tree and flow identities on one tree, labelled by `view`.
pub fn tree_identity_failures(tree: &crate::hierarchy::PathTree, view: &MultiscaleView, cfg: &OpenConfig) -> Result<Vec<String>> {
    let mut f = tree_violations(tree);
    let bad = tree.conservation_failures();
    if !bad.is_empty() {
        f.push(format!("flow conservation fails at nodes {bad:?}"));
    }
    if tree.leaf_flow_sum() != BigRational::one() {
        f.push(format!("leaf flows sum to {}", tree.leaf_flow_sum()));
    }
    if tree.leaf_count() > tree.path().cardinality() {
        f.push(format!("{} leaves exceed |P| = {}", tree.leaf_count(), tree.path().cardinality()));
    }
    let labels = label_open(tree, view, cfg)?;
    let rec = y_recursion_failures(tree, &labels);
    if !rec.is_empty() {
        f.push(format!("Y recursion fails at (node, r) {rec:?}"));
    }
    if !heavy_mass(tree, &labels).identity_holds {
        f.push("open-flow identity fails".into());
    }
    Ok(f)
}

/// Trees over generated paths in `SL_j` for each listed `j`.
pub fn tree_corpus(params: &HierarchyParams, levels: &[u32], per_level: usize, seed: u64) -> TreeCheck {
    let cfg = OpenConfig::from_delta(0.04).expect("valid δ");
    let mut out = TreeCheck::default();
    for &j in levels {
        let mut rng = stream_rng(seed, 100 + u64::from(j));
        for i in 0..per_level {
            let Some(p) = path_in_class(j, params, &mut rng) else {
                out.missing += 1;
                continue;
            };
            let res = build_tree(&p, j, params).and_then(|t| {
                let view = random_view(&t, &cfg, seed ^ ((j as u64) << 32 | i as u64));
                tree_identity_failures(&t, &view, &cfg)
            });
            out.trees += 1;
            match res {
                Ok(f) if f.is_empty() => {}
                Ok(f) => out.failures.push((i, format!("j={j}: {}", f.join("; ")))),
                Err(e) => out.failures.push((i, format!("j={j}: {e}"))),
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DijkstraCheck {
    pub instances: usize,
    /// Instances where Dijkstra and brute force disagree.
    pub mismatches: Vec<String>,
    /// Instances where a neighbour order or tie rule changed the distance.
    pub permutation_mismatches: Vec<String>,
}

fn all_orders() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in (0..4).filter(|&b| b != a) {
            for c in (0..4).filter(|&c| c != a && c != b) {
                out.push([a, b, c, 6 - a - b - c]);
            }
        }
    }
    out
}

/// Dijkstra against brute force on `instances` fields on `V_8` with `γ = 1`,
/// plus every neighbour order and tie rule. Every fourth instance uses unit
/// weights, where ties are everywhere.
pub fn dijkstra_check(instances: usize, seed: u64) -> Result<DijkstraCheck> {
    let n = 8;
    let sampler = Sampler::auto(BoxGeometry::v_5n(n)?)?;
    let mut out = DijkstraCheck {
        instances,
        ..Default::default()
    };
    let mut ws = Dijkstra::new(n);
    for i in 0..instances {
        let field = sampler.sample_stream(seed, i as u64);
        let w = if i % 4 == 3 {
            WeightField::uniform(n)?
        } else {
            WeightField::from_field(&field, n, 1.0)?
        };
        let mut rng = stream_rng(seed ^ 0xD1, i as u64);
        let mut pick = || Vertex::new(rng.random_range(0..n as i64), rng.random_range(0..n as i64));
        let (x, y) = (pick(), pick());
        let (brute, _) = brute_force_distance(&w, x, y)?;
        let base = ws.run(&w, x, y, DijkstraOptions::default())?;
        if base.weight != brute {
            out.mismatches
                .push(format!("instance {i}: {x} → {y}: dijkstra {} vs brute {brute}", base.weight));
        }
        for order in all_orders() {
            for tie_break in [TieBreak::SmallestPredecessor, TieBreak::LargestPredecessor] {
                let r = ws.run(
                    &w,
                    x,
                    y,
                    DijkstraOptions {
                        tie_break,
                        neighbor_order: order,
                    },
                )?;
                if r.weight != base.weight {
                    out.permutation_mismatches
                        .push(format!("instance {i}: order {order:?} {tie_break:?} gives {}", r.weight));
                }
            }
        }
    }
    Ok(out)
}

struct Suite {
    level: VerifyLevel,
    seed: u64,
    exec: Exec,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn pick<T>(&self, quick: T, full: T) -> T {
        match self.level {
            VerifyLevel::Quick => quick,
            VerifyLevel::Full => full,
        }
    }

    fn record(&mut self, name: &str, seed: u64, informational: bool, r: Result<(bool, String)>) {
        let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            informational,
            detail,
            seed,
        });
    }
}

/// Runs the suite. `seed` fixes every random choice.
pub fn verify_suite(level: VerifyLevel, seed: u64, exec: Exec) -> VerifyReport {
    let mut s = Suite {
        level,
        seed,
        exec,
        checks: Vec::new(),
    };
    let mut constants = FittedConstants::new();

    s.record(
        "green oracle",
        0,
        false,
        (|| {
            let g = BoxGeometry::new(Vertex::new(0, 0), 9)?;
            let dense = GreenOracle::dense_solve(g)?;
            let pk = GreenOracle::from_potential_kernel(g, &PotentialKernel::new(16))?;
            let diff = dense
                .interior_matrix()
                .iter()
                .zip(pk.interior_matrix())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let ok = dense.min_eigenvalue() > 0.0 && dense.max_asymmetry() < 1e-12 && diff < 1e-8;
            Ok((
                ok,
                format!(
                    "λ_min {:.3e}, asymmetry {:.1e}, routes differ by {diff:.1e}",
                    dense.min_eigenvalue(),
                    dense.max_asymmetry()
                ),
            ))
        })(),
    );

    let sides = s.pick(vec![9], vec![9, 17, 33]);
    let samples = s.pick(20_000, 100_000);
    for side in sides {
        let r = compare_covariance(side, samples, s.seed, Backend::Banded, 5.0, s.exec).map(|c| {
            (
                c.passed(),
                format!(
                    "side {side}, {samples} samples: max |z| = {:.2} over {} entries",
                    c.max_abs_z, c.entries
                ),
            )
        });
        s.record(&format!("covariance side {side}"), s.seed, false, r);
    }

    let (ell, samples) = s.pick((64, 4000), (128, 10_000));
    for (scale, name) in [(1.0, "log-correlation slope"), (1.5, "log-correlation mutation (G scaled by 1.5)")] {
        let r = log_correlation_check(ell, samples, s.seed + 1, scale, s.exec).map(|rep| {
            let err = rep.relative_slope_error();
            let within = err <= 0.10;
            // The mutated covariance must be caught.
            let ok = if scale == 1.0 { within } else { !within };
            (
                ok,
                format!("ℓ = {ell}: slope {:.4} vs C₁ = {C1:.4}, relative error {err:.3}", rep.fit.slope),
            )
        });
        s.record(name, s.seed + 1, false, r);
    }

    let (pairs, samples) = s.pick((5, 2000), (20, 10_000));
    let r = markov_check(33, 16, pairs, samples, s.seed + 2, s.exec).map(|m| {
        (
            m.max_abs_z < 5.0,
            format!("{pairs} pairs, {samples} samples: max |z| = {:.2}", m.max_abs_z),
        )
    });
    s.record("markov property", s.seed + 2, false, r);

    let eta_params = ScaleParams::new(64, 2, 3).expect("valid scales");
    let r = (|| {
        let field = Sampler::auto(BoxGeometry::v_5n(64)?)?.sample(s.seed + 3);
        let pts: Vec<Vertex> = BoxGeometry::v_n(64)?.vertices().collect();
        let err = multiscale_decompose(&field, &pts, eta_params)?.telescoping_error();
        Ok((err < 1e-8, format!("max |Σ η_j + H − η| = {err:.2e}")))
    })();
    s.record("telescoping", s.seed + 3, false, r);

    let samples = s.pick(300, 3000);
    let r = eta_check(eta_params, samples, s.seed + 4, s.exec).map(|rep| {
        let worst = rep.levels.iter().map(|l| l.variance.z(l.variance_exact).abs()).fold(0.0, f64::max);
        constants.c2 = Some(rep.c2_star);
        constants.c4 = Some(rep.c4_star);
        constants.c5 = Some(rep.c5_star);
        (
            worst < 5.0,
            format!(
                "Var η_j within {worst:.2} SE; C₂* {:.3}, C₄* {:.3}, C₅* {:.3}",
                rep.c2_star, rep.c4_star, rep.c5_star
            ),
        )
    });
    s.record("eta levels", s.seed + 4, false, r);

    let r = center_variance_table(&[16, 32, 64]).map(|rep| {
        constants.c3 = Some(rep.fitted_c3);
        (
            rep.stable(0.2),
            format!("fitted C₃ {:.4}, spread {:.2}", rep.fitted_c3, rep.c3_spread),
        )
    });
    s.record("center variance", 0, true, r);

    let params = HierarchyParams::new(ScaleParams::new(4096, 3, 4).expect("valid scales"), 0.25).expect("valid κ");
    let per_kind = s.pick(100, 1000);
    for j in 1..=2 {
        let c = extraction_corpus(&params, j, per_kind, s.seed + 5);
        let ok = c.failures.is_empty() && c.missing == 0;
        let detail = format!(
            "j = {j}: {} tame, {} untame, max visits {}/{}, {} failures{}",
            c.tame,
            c.untame,
            c.max_visits_tame,
            c.max_visits_untame,
            c.failures.len(),
            c.failures
                .first()
                .map(|f| format!(", first: path {} {}", f.0, f.2))
                .unwrap_or_default()
        );
        s.record(&format!("extraction corpus j={j}"), s.seed + 5, false, Ok((ok, detail)));
    }

    let per_level = s.pick(20, 200);
    let t = tree_corpus(&params, &[2, 3, 4], per_level, s.seed + 6);
    let detail = format!(
        "{} trees, {} failures{}",
        t.trees,
        t.failures.len(),
        t.failures.first().map(|f| format!(", first: {}", f.1)).unwrap_or_default()
    );
    s.record(
        "trees and flows",
        s.seed + 6,
        false,
        Ok((t.failures.is_empty() && t.missing == 0, detail)),
    );

    let instances = s.pick(12, 50);
    let r = dijkstra_check(instances, s.seed + 7).map(|d| {
        let ok = d.mismatches.is_empty() && d.permutation_mismatches.is_empty();
        (
            ok,
            format!(
                "{instances} instances, {} brute-force and {} permutation mismatches",
                d.mismatches.len(),
                d.permutation_mismatches.len()
            ),
        )
    });
    s.record("dijkstra vs brute force", s.seed + 7, false, r);

    let r = (|| {
        let cfg = ScanConfig {
            gamma: 0.0,
            sizes: vec![32],
            trials: 20,
            kappa: 0.5,
            seed: s.seed + 8,
        };
        let rep = geodesic_scan(&cfg, s.exec)?;
        let bad = rep.trials.iter().filter(|t| t.card as i64 != t.from.l1(t.to) + 1).count();
        Ok((
            bad == 0,
            format!("γ = 0: {bad} of {} geodesics longer than taxicab", rep.trials.len()),
        ))
    })();
    s.record("geodesic invariants", s.seed + 8, false, r);

    if level == VerifyLevel::Full {
        fitted_constants(&mut s, &mut constants);
    }
    VerifyReport {
        level,
        checks: s.checks,
        constants: (level == VerifyLevel::Full).then_some(constants),
    }
}

/// `C₆*`, `C₇*` and `C₈*` at `N = 64`, `K = 4`, `m = 3`.
fn fitted_constants(s: &mut Suite, constants: &mut FittedConstants) {
    let sp = ScaleParams::new(64, 2, 3).expect("valid scales");
    let seed = s.seed + 9;
    let r = (|| {
        // Mean box oscillation of η₁ over a K×K box near the centre.
        let corner = Vertex::new(30, 30);
        let pts = box_points(corner, sp.big_k());
        let dec = MultiscaleDecomposer::new(sp)?;
        let sampler = Sampler::auto(BoxGeometry::v_5n(64)?)?;
        let osc: Vec<Result<f64>> = s.exec.map(2000, |i| {
            let view = dec.decompose(&sampler.sample_stream(seed, i as u64), &pts)?;
            Ok(box_oscillation(&view, 1, corner).unwrap_or(0.0))
        });
        let osc: Vec<f64> = osc.into_iter().collect::<Result<_>>()?;
        let c5 = constants.c5.unwrap_or(f64::NAN);
        let c6 = mean(&osc) / c5.sqrt();
        constants.c6 = Some(c6);
        Ok((c6.is_finite(), format!("mean M_B {:.3}, C₆* {c6:.3}", mean(&osc))))
    })();
    s.record("fitted C6", seed, true, r);

    let seed = s.seed + 10;
    let r = (|| {
        let params = HierarchyParams::new(sp, 0.5)?;
        let cfg = OpenConfig::from_delta(0.04)?;
        let mut rng = stream_rng(seed, 0);
        let paths: Vec<LatticePath> = tame_paths_between(Vertex::new(23, 32), Vertex::new(41, 32), 2, 20, &params, &mut rng);
        let family = OpenFamily::new(&paths, 2, &params)?;
        let deltas: Vec<f64> = (1..=12).map(|i| 0.05 * i as f64).collect();
        let rep = open_fraction_mc(&family, &params, &cfg, &deltas, 1000, seed, s.exec)?;
        constants.c7 = rep.c7;
        let star = deltas.iter().zip(&rep.tail).find(|(_, t)| **t <= 0.5).map(|(d, _)| *d);
        constants.c8 = star.map(|d| (sp.k as f64).sqrt() * cfg.eps * d);
        Ok((
            rep.c7.is_some(),
            format!("tail {:?}, C₇* {:?}, δ* {star:?}, C₈* {:?}", rep.tail, rep.c7, constants.c8),
        ))
    })();
    s.record("fitted C7 and C8", seed, true, r);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_order_is_a_permutation() {
        assert_eq!(all_orders().len(), 24);
    }

    #[test]
    fn small_dijkstra_check_is_clean() {
        let d = dijkstra_check(4, 3).unwrap();
        assert!(d.mismatches.is_empty() && d.permutation_mismatches.is_empty());
    }
}
