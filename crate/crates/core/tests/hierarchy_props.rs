mod common;

use lfpp_core::hierarchy::corpus::{candidate, path_in_class, path_with_verdict, Family};
use lfpp_core::hierarchy::{
    build_tree, classify_tame, extract_tame, extract_untame, first_exit, BoxGrid, HierarchyParams, LatticePath, Point,
};
use lfpp_core::io::TreeRecord;
use lfpp_core::rng::stream_rng;
use lfpp_core::ScaleParams;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn k4() -> HierarchyParams {
    HierarchyParams::new(ScaleParams::new(64, 2, 3).unwrap(), 0.5).unwrap()
}

fn k8() -> HierarchyParams {
    HierarchyParams::new(ScaleParams::new(4096, 3, 4).unwrap(), 0.25).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integer_points_sit_inside_one_box(r in 2u32..40, x in -500i64..500, y in -500i64..500) {
        let g = BoxGrid::new(r as f64);
        let p = Point::new(x as f64, y as f64);
        let holders = g.boxes_containing(p);
        prop_assert_eq!(holders.len(), 1);
        prop_assert_eq!(holders[0], g.box_of(p));
        let (a, b) = g.box_of(p);
        prop_assert_eq!(g.box_of(Point::new(p.x + r as f64, p.y)), (a + 1, b));
    }

    #[test]
    fn tame_extractions_hold_up(seed in any::<u64>(), big in any::<bool>(), j in 1u32..=2) {
        // With K = 4 and m = 3 only level 1 carries a verdict below the top.
        let (params, j) = if big { (k8(), j) } else { (k4(), 1) };
        let path = path_with_verdict(j, true, &params, &mut stream_rng(seed, 0)).unwrap();
        let ex = extract_tame(&path, j, &params).unwrap();
        prop_assert_eq!(&ex, &extract_tame(&path, j, &params).unwrap());
        let bad = common::recheck_extraction(&path, &ex, &params);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn untame_extractions_hold_up(seed in any::<u64>(), big in any::<bool>(), j in 1u32..=2) {
        // With K = 4 and m = 3 only level 1 carries a verdict below the top.
        let (params, j) = if big { (k8(), j) } else { (k4(), 1) };
        let path = path_with_verdict(j, false, &params, &mut stream_rng(seed, 0)).unwrap();
        let ex = extract_untame(&path, j, &params).unwrap();
        prop_assert_eq!(&ex, &extract_untame(&path, j, &params).unwrap());
        let bad = common::recheck_extraction(&path, &ex, &params);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn sweeping_paths_never_crowd_a_box(seed in any::<u64>(), j in 1u32..=2) {
        let params = k8();
        let kj = params.scale(j);
        let (lo, hi) = (params.scale(j + 1), params.scale(j + 1) * (1.0 + 1.0 / params.big_k()));
        let mut rng = stream_rng(seed, 1);
        let path = std::iter::repeat_with(|| candidate(Family::Boustrophedon, lo, hi, 4.0 * kj, kj, &mut rng))
            .flatten()
            .find(|p| classify_tame(p, j, &params).is_ok_and(|v| !v.tame))
            .unwrap();
        let ex = extract_untame(&path, j, &params).unwrap();
        prop_assert!(common::max_visits(&path, &ex, &params) <= 12);
    }

    #[test]
    fn trees_conserve_flow(seed in any::<u64>(), j in 2u32..=3) {
        let params = k4();
        let path = path_in_class(j, &params, &mut stream_rng(seed, 2)).unwrap();
        let tree = build_tree(&path, j, &params).unwrap();
        prop_assert!(tree.conservation_failures().is_empty());
        prop_assert_eq!(tree.leaf_flow_sum(), BigRational::one());
        prop_assert!(tree.leaf_count() <= path.cardinality());
        let mut leaves: Vec<_> = tree.leaves().map(|l| l.leaf.unwrap()).collect();
        let n = leaves.len();
        leaves.sort();
        leaves.dedup();
        prop_assert_eq!(leaves.len(), n);
        let again = build_tree(&path, j, &params).unwrap();
        prop_assert_eq!(
            serde_json::to_string(&TreeRecord::from_tree(&tree)).unwrap(),
            serde_json::to_string(&TreeRecord::from_tree(&again)).unwrap()
        );
    }

    #[test]
    fn first_exit_lands_on_the_sphere(len in 3i64..60, turns in proptest::collection::vec(any::<bool>(), 1..6), ell in 1.0f64..20.0) {
        // A staircase that turns left or right every `len / 4` steps.
        let mut vs = vec![lfpp_core::Vertex::new(0, 0)];
        let step = (len / 4).max(1);
        for t in turns.iter().cycle().take(len as usize) {
            let c = *vs.last().unwrap();
            let dir = if (vs.len() as i64 / step) % 2 == 0 { (1, 0) } else if *t { (0, 1) } else { (0, -1) };
            vs.push(lfpp_core::Vertex::new(c.x + dir.0, c.y + dir.1));
        }
        let path = LatticePath::from_vertices(&vs).unwrap();
        match first_exit(&path, 0.0, ell) {
            Ok((z, before)) => {
                prop_assert!((z.dist(path.start()) - ell).abs() < 1e-9);
                for p in before.points() {
                    prop_assert!(p.dist(path.start()) <= ell + 1e-9);
                }
            }
            Err(_) => {
                for p in path.points() {
                    prop_assert!(p.dist(path.start()) < ell + 1e-9);
                }
            }
        }
    }
}
