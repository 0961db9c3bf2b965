use lfpp_core::dgff::Sampler;
use lfpp_core::metric::{brute_force_distance, lfpp_distance, Dijkstra, DijkstraOptions, WeightField};
use lfpp_core::{BoxGeometry, Vertex};
use proptest::prelude::*;

fn weights(n: usize, gamma: f64, seed: u64) -> WeightField {
    let field = Sampler::auto(BoxGeometry::v_5n(n).unwrap()).unwrap().sample(seed);
    WeightField::from_field(&field, n, gamma).unwrap()
}

fn vertex(n: usize) -> impl Strategy<Value = Vertex> {
    (0..n as i64, 0..n as i64).prop_map(|(x, y)| Vertex::new(x, y))
}

/// Horizontal leg first, then vertical.
fn l_path(x: Vertex, y: Vertex) -> Vec<Vertex> {
    let mut p = vec![x];
    let mut c = x;
    while c.x != y.x {
        c.x += (y.x - c.x).signum();
        p.push(c);
    }
    while c.y != y.y {
        c.y += (y.y - c.y).signum();
        p.push(c);
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distance_is_a_metric(seed in any::<u64>(), gamma in 0.0f64..2.0, x in vertex(24), y in vertex(24), z in vertex(24)) {
        let w = weights(24, gamma, seed);
        let d = |a, b| lfpp_distance(&w, a, b).unwrap().weight;
        let (dxy, dyx) = (d(x, y), d(y, x));
        prop_assert_eq!(dxy, dyx);
        // Concatenating at z counts w(z) twice.
        prop_assert!(dxy <= d(x, z) + d(z, y) - w.weight(z).unwrap() + 1e-9 * dxy);
    }

    #[test]
    fn geodesic_beats_the_l_shaped_path(seed in any::<u64>(), gamma in 0.0f64..2.0, x in vertex(32), y in vertex(32)) {
        let w = weights(32, gamma, seed);
        let geo = lfpp_distance(&w, x, y).unwrap();
        prop_assert!(geo.weight <= w.path_weight(&l_path(x, y)).unwrap());
        prop_assert_eq!(geo.path.first(), Some(&x));
        prop_assert_eq!(geo.path.last(), Some(&y));
        for s in geo.path.windows(2) {
            prop_assert_eq!(s[0].l1(s[1]), 1);
        }
    }

    #[test]
    fn shifting_the_field_keeps_the_geodesic(seed in any::<u64>(), gamma in 0.1f64..2.0, shift in 0.1f64..3.0, x in vertex(24), y in vertex(24)) {
        let w = weights(24, gamma, seed);
        let shifted = w.scaled((gamma * shift).exp());
        let a = lfpp_distance(&w, x, y).unwrap();
        let b = lfpp_distance(&shifted, x, y).unwrap();
        prop_assert_eq!(a.path, b.path);
    }

    #[test]
    fn agrees_with_enumeration_on_small_boxes(seed in any::<u64>(), gamma in 0.0f64..1.5, x in vertex(6), y in vertex(6)) {
        let w = weights(6, gamma, seed);
        let (brute, _) = brute_force_distance(&w, x, y).unwrap();
        let geo = Dijkstra::new(6).run(&w, x, y, DijkstraOptions::default()).unwrap();
        prop_assert_eq!(geo.weight, brute);
    }
}
