use std::collections::HashMap;

use lfpp_core::campaign::verify::random_view;
use lfpp_core::dgff::{MultiscaleDecomposer, Sampler};
use lfpp_core::hierarchy::corpus::path_in_class;
use lfpp_core::hierarchy::{build_tree, HierarchyParams, LatticePath, PathTree};
use lfpp_core::open::{e2_report, e3_report, heavy_mass, label_open, y_flow_exact, y_recursion_failures, OpenConfig};
use lfpp_core::rng::stream_rng;
use lfpp_core::{BoxGeometry, ScaleParams, Vertex};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::index::sample;

fn params() -> HierarchyParams {
    HierarchyParams::new(ScaleParams::new(64, 2, 3).unwrap(), 0.5).unwrap()
}

fn tree(seed: u64) -> PathTree {
    let p = params();
    let path = path_in_class(3, &p, &mut stream_rng(seed, 0)).unwrap();
    build_tree(&path, 3, &p).unwrap()
}

/// `θ(u) = Π 1/d_a` over the ancestors of `u`.
fn theta(t: &PathTree, u: usize) -> BigRational {
    t.ancestors(u).iter().fold(BigRational::one(), |acc, &a| {
        acc / BigRational::from_integer(BigInt::from(t.node(a).d()))
    })
}

fn depth(t: &PathTree, u: usize) -> usize {
    t.ancestors(u).len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn y_and_open_flow_match_a_direct_count(tseed in any::<u64>(), fseed in any::<u64>()) {
        let t = tree(tseed);
        let cfg = OpenConfig::from_delta(0.04).unwrap();
        let view = random_view(&t, &cfg, fseed);
        let labels = label_open(&t, &view, &cfg).unwrap();
        prop_assert_eq!(&labels, &label_open(&t, &view, &cfg).unwrap());

        let open: HashMap<usize, bool> = t
            .nodes()
            .iter()
            .skip(1)
            .map(|n| {
                let k = view.params().k;
                let hit = t.node_points(n.id).iter().any(|z| view.eta_at(n.scale, *z).unwrap() >= cfg.threshold(k));
                (n.id, hit)
            })
            .collect();
        for (id, o) in &open {
            prop_assert_eq!(labels.open[*id], Some(*o));
        }

        for r in 0..t.depth() as usize {
            let mut want = BigRational::zero();
            for n in t.nodes().iter().filter(|n| depth(&t, n.id) == r && n.tame() == Some(true)) {
                let k = n.children.iter().filter(|c| open[c]).count();
                want += theta(&t, n.id) * BigRational::new(BigInt::from(k), BigInt::from(n.d()));
            }
            prop_assert_eq!(y_flow_exact(&t, &labels, r as u32).unwrap(), want);
        }
        prop_assert!(y_recursion_failures(&t, &labels).is_empty());

        let lhs = t.nodes().iter().skip(1).filter(|n| open[&n.id]).fold(BigRational::zero(), |a, n| a + theta(&t, n.id));
        let rhs = t.leaves().fold(BigRational::zero(), |a, l| {
            let o = std::iter::once(l.id).chain(t.ancestors(l.id)).filter(|u| open.get(u) == Some(&true)).count();
            a + theta(&t, l.id) * BigRational::from_integer(BigInt::from(o))
        });
        prop_assert_eq!(&lhs, &rhs);
        prop_assert!(heavy_mass(&t, &labels).identity_holds);
    }
}

#[test]
fn e2_bounds_every_small_level_subset() {
    let sp = ScaleParams::new(64, 2, 3).unwrap();
    let dec = MultiscaleDecomposer::new(sp).unwrap();
    let sampler = Sampler::auto(BoxGeometry::v_5n(64).unwrap()).unwrap();
    // Staircase: three steps east, one north.
    let mut path = vec![Vertex::new(0, 20)];
    for i in 0..80 {
        let c = *path.last().unwrap();
        path.push(if i % 4 == 3 {
            Vertex::new(c.x, c.y + 1)
        } else {
            Vertex::new(c.x + 1, c.y)
        });
    }
    let lp = LatticePath::from_vertices(&path).unwrap();
    let delta = 0.1;
    let cfg = OpenConfig::from_delta(delta).unwrap();
    let mut rng = stream_rng(8, 9);
    let (mut e2_fail, mut e3_fail) = (0, 0);
    let fields = 30;
    for s in 0..fields {
        let field = sampler.sample_stream(77, s);
        let view = dec.decompose(&field, &lp.lattice_points()).unwrap();
        let rep = e2_report(&view, delta, 64);
        assert_eq!(rep.levels, 2);
        for p in 0..view.len() {
            for size in 0..=rep.levels {
                for _ in 0..4 {
                    let sum: f64 = sample(&mut rng, 3, size).iter().map(|j| view.eta(j as u32, p)).sum();
                    assert!(sum <= rep.max_sum + 1e-12);
                }
            }
        }
        e2_fail += usize::from(!rep.holds);
        e3_fail += usize::from(!e3_report(&dec, &field, cfg.eps).unwrap().holds);
    }
    eprintln!("over {fields} fields at N = 64: E2 fails {e2_fail}, E3 fails {e3_fail}");
}
