//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL]` line on stderr;
//! run with `--nocapture` to see all of them.

mod common;

use std::time::{Duration, Instant};

use lfpp_core::campaign::{dijkstra_check, run_campaign, CampaignConfig};
use lfpp_core::dgff::checks::{center_variance_table, compare_covariance, log_correlation_check, markov_check, C1};
use lfpp_core::dgff::{Backend, MultiscaleDecomposer, Sampler};
use lfpp_core::hierarchy::corpus::{path_in_class, path_with_verdict};
use lfpp_core::hierarchy::{build_tree, extract_tame, extract_untame, HierarchyParams, LatticePath};
use lfpp_core::metric::{geodesic_scan, sample_endpoints, Dijkstra, DijkstraOptions, ScanConfig, WeightField};
use lfpp_core::open::{tree_points, OpenConfig};
use lfpp_core::rng::{stream_rng, trial_seed};
use lfpp_core::{BoxGeometry, Exec, ScaleParams};

const SEED: u64 = 20_240_601;

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    eprintln!("[{}] criterion {id}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn k8() -> HierarchyParams {
    HierarchyParams::new(ScaleParams::new(4096, 3, 4).unwrap(), 0.25).unwrap()
}

#[test]
fn c1_sampler_matches_green_oracle() {
    let mut ok = true;
    let mut parts = Vec::new();
    for side in [9, 17, 33] {
        let t = Instant::now();
        let c = compare_covariance(side, 100_000, SEED, Backend::Banded, 5.0, Exec::default()).unwrap();
        let el = t.elapsed();
        ok &= c.passed() && el < Duration::from_secs(120);
        parts.push(format!(
            "side {side}: max |z| {:.2} over {} entries, {:.1}s",
            c.max_abs_z,
            c.entries,
            el.as_secs_f64()
        ));
    }
    verdict(1, "covariance within 5 SE", ok, parts.join("; "));
}

#[test]
fn c2_center_variance_correction() {
    let r = center_variance_table(&[16, 32, 64]).unwrap();
    let within = r.rows.iter().all(|row| row.diff.abs() <= r.fitted_c3 / (row.ell * row.ell) as f64);
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("ℓ={} diff {:+.5} C₃ {:.2}", row.ell, row.diff, row.c3))
        .collect();
    verdict(
        2,
        "centre variance O(ℓ⁻²) with stable C₃",
        within && r.stable(0.2),
        format!(
            "{}; fitted C₃ {:.2}, spread {:.2} (limit 0.20)",
            rows.join(", "),
            r.fitted_c3,
            r.c3_spread
        ),
    );
}

#[test]
fn c3_log_correlation_slope() {
    let t = Instant::now();
    let r = log_correlation_check(128, 10_000, SEED + 1, 1.0, Exec::default()).unwrap();
    let el = t.elapsed();
    let err = r.relative_slope_error();
    verdict(
        3,
        "log-correlation slope",
        err <= 0.10 && el < Duration::from_secs(300),
        format!(
            "slope {:.4} vs {C1:.4}, relative error {err:.3}, {:.1}s",
            r.fit.slope,
            el.as_secs_f64()
        ),
    );
}

#[test]
fn c4_markov_property() {
    let r = markov_check(33, 16, 20, 10_000, SEED + 2, Exec::default()).unwrap();
    verdict(
        4,
        "harmonic part independent of the remainder",
        r.pairs.len() == 20 && r.max_abs_z < 5.0,
        format!("{} pairs, max |z| {:.2}", r.pairs.len(), r.max_abs_z),
    );
}

#[test]
fn c5_extraction_postconditions() {
    let params = k8();
    let t = Instant::now();
    let mut counts = Vec::new();
    let mut bad = Vec::new();
    for j in 1..=2u32 {
        for tame in [true, false] {
            let mut rng = stream_rng(SEED + 3, u64::from(j) * 2 + u64::from(tame));
            let mut made = 0;
            for i in 0..1000 {
                let Some(p) = path_with_verdict(j, tame, &params, &mut rng) else {
                    bad.push(format!("j={j} tame={tame}: generator gave up on path {i}"));
                    continue;
                };
                made += 1;
                let ex = if tame {
                    extract_tame(&p, j, &params)
                } else {
                    extract_untame(&p, j, &params)
                };
                match ex {
                    Ok(ex) => {
                        for m in common::recheck_extraction(&p, &ex, &params) {
                            bad.push(format!("j={j} tame={tame} path {i}: {m}"));
                        }
                    }
                    Err(e) => bad.push(format!("j={j} tame={tame} path {i}: {e}")),
                }
            }
            counts.push(format!("j={j} {}: {made}", if tame { "tame" } else { "untame" }));
        }
    }
    let el = t.elapsed();
    verdict(
        5,
        "extraction postconditions",
        bad.is_empty() && el < Duration::from_secs(300),
        format!(
            "{}; {} violations{}; {:.1}s",
            counts.join(", "),
            bad.len(),
            bad.first().map(|b| format!(", first: {b}")).unwrap_or_default(),
            el.as_secs_f64()
        ),
    );
}

#[test]
fn c6_tree_and_flow_identities() {
    let cfg = OpenConfig::from_delta(0.04).unwrap();
    let mut bad = Vec::new();

    let params = k8();
    let mut corpus = 0;
    for j in 2..=4u32 {
        let mut rng = stream_rng(SEED + 4, u64::from(j));
        for i in 0..200 {
            let Some(p) = path_in_class(j, &params, &mut rng) else {
                bad.push(format!("j={j}: generator gave up on path {i}"));
                continue;
            };
            let tree = build_tree(&p, j, &params).unwrap();
            let view = lfpp_core::campaign::verify::random_view(&tree, &cfg, trial_seed(SEED + 4, corpus));
            bad.extend(
                common::direct_tree_identities(&tree, &view, &cfg)
                    .into_iter()
                    .map(|m| format!("corpus j={j} path {i}: {m}")),
            );
            corpus += 1;
        }
    }

    let n = 128;
    let sp = ScaleParams::new(n, 2, 3).unwrap();
    let params = HierarchyParams::new(sp, 0.5).unwrap();
    let sampler = Sampler::auto(BoxGeometry::v_5n(n).unwrap()).unwrap();
    let dec = MultiscaleDecomposer::new(sp).unwrap();
    let mut ws = Dijkstra::new(n);
    let mut leaves = 0;
    for t in 0..100u64 {
        let seed = trial_seed(SEED + 5, t);
        let field = sampler.sample_stream(seed, 0);
        let w = WeightField::from_field(&field, n, 0.2).unwrap();
        let (x, y) = sample_endpoints(n, 0.5, &mut stream_rng(seed, 1)).unwrap();
        let geo = ws.run(&w, x, y, DijkstraOptions::default()).unwrap();
        let tree = build_tree(&LatticePath::from_vertices(&geo.path).unwrap(), sp.m, &params).unwrap();
        leaves += tree.leaf_count();
        let view = dec.decompose(&field, &tree_points(&tree)).unwrap();
        bad.extend(
            common::direct_tree_identities(&tree, &view, &cfg)
                .into_iter()
                .map(|m| format!("geodesic {t}: {m}")),
        );
    }
    verdict(
        6,
        "exact tree and flow identities",
        bad.is_empty(),
        format!(
            "{corpus} corpus trees, 100 geodesic trees ({leaves} leaves), {} violations{}",
            bad.len(),
            bad.first().map(|b| format!(", first: {b}")).unwrap_or_default()
        ),
    );
}

fn campaign_at_256(trials: usize) -> lfpp_core::campaign::CampaignReport {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = CampaignConfig::parse("sizes = 256\ngammas = 0.2\nK = 8\nm = 2\ndelta = 0.04\nkappa = 0.5").unwrap();
    cfg.trials = trials;
    cfg.seed = SEED + 6;
    cfg.out = out.path().to_path_buf();
    cfg.validate().unwrap();
    run_campaign(&cfg, Exec::default()).unwrap()
}

#[test]
fn c7_and_c8iii_campaign_at_256() {
    let r = campaign_at_256(200);
    let c = r.cell(256, 0.2).unwrap();
    let flows: Vec<f64> = r.records.iter().filter_map(|t| t.tree.as_ref().map(|s| s.untame_flow)).collect();
    let worst = flows.iter().copied().fold(0.0, f64::max);
    let c7 = c.errors == 0 && c.untame_violations.is_empty() && c.identity_failures == 0;
    let good_ok = c.errors == 0 && c.good_rate >= 0.95;
    eprintln!(
        "[{}] criterion 7: untame flow ≤ 2δm: {} of {} geodesics pass the |P| cut, max untame flow {worst:.4} (limit {:.2}), violations {:?}",
        if c7 { "PASS" } else { "FAIL" },
        c.analyzed,
        c.trials,
        2.0 * 0.04 * 2.0,
        c.untame_violations
    );
    eprintln!(
        "[{}] criterion 8(iii): good points ≥ κN/8 in {:.1}% of {} trials (need 95%)",
        if good_ok { "PASS" } else { "FAIL" },
        100.0 * c.good_rate,
        c.trials
    );
    assert!(c7, "criterion 7 failed");
    assert!(good_ok, "criterion 8(iii) failed");
}

#[test]
fn c8i_taxicab_dimension() {
    let r = geodesic_scan(
        &ScanConfig {
            gamma: 0.0,
            sizes: vec![64, 128, 256, 512],
            trials: 200,
            kappa: 0.5,
            seed: SEED + 7,
        },
        Exec::default(),
    )
    .unwrap();
    let slope = r.dimension_fit.unwrap().slope;
    verdict(
        8,
        "(i) γ = 0 dimension 1.000 ± 0.01",
        (slope - 1.0).abs() <= 0.01,
        format!("slope {slope:.4}"),
    );
}

#[test]
fn c8ii_card_ratio_grows() {
    let r = geodesic_scan(
        &ScanConfig {
            gamma: 0.2,
            sizes: vec![64, 128, 256, 512],
            trials: 200,
            kappa: 0.5,
            seed: SEED + 8,
        },
        Exec::default(),
    )
    .unwrap();
    let ratios: Vec<f64> = r.sizes.iter().map(|s| s.mean_card_over_n).collect();
    let ok = ratios.windows(2).all(|w| w[1] >= w[0]);
    let shown: Vec<String> = r.sizes.iter().map(|s| format!("N={} {:.4}", s.n, s.mean_card_over_n)).collect();
    verdict(8, "(ii) γ = 0.2 mean |Geo|/N non-decreasing", ok, shown.join(", "));
}

#[test]
fn c9_dijkstra_matches_brute_force() {
    let d = dijkstra_check(50, SEED + 9).unwrap();
    verdict(
        9,
        "dijkstra exact against enumeration and order-free",
        d.mismatches.is_empty() && d.permutation_mismatches.is_empty(),
        format!(
            "{} instances, {} brute-force mismatches, {} permutation mismatches",
            d.instances,
            d.mismatches.len(),
            d.permutation_mismatches.len()
        ),
    );
}
