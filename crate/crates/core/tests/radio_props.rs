use proptest::prelude::*;

use d2d_core::radio::{
    draw_gains, generate_topology, pathloss_db, sinr, sum_rate, Allocation, Node, Propagation, RadioParams, Topology,
};

fn params() -> impl Strategy<Value = RadioParams> {
    (100.0..1000.0f64, 5.0..50.0f64, prop::bool::ANY).prop_map(|(r, d, up)| RadioParams {
        cell_radius: r,
        max_d2d_distance: d,
        link_direction: if up { d2d_core::radio::LinkDirection::Uplink } else { Default::default() },
        ..RadioParams::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nodes_stay_in_the_cell(p in params(), m in 1usize..8, n in 0usize..8, seed in any::<u64>()) {
        let t = generate_topology(&p, m, n, seed).unwrap();
        prop_assert_eq!(t.cue.len(), m);
        for q in t.cue.iter().chain(t.d2d_pairs.iter().flat_map(|(a, b)| [a, b])) {
            prop_assert!(q.distance(&t.enb_pos) <= p.cell_radius + 1e-9);
        }
        for (tx, rx) in &t.d2d_pairs {
            prop_assert!(tx.distance(rx) <= p.max_d2d_distance + 1e-9);
        }
    }

    #[test]
    fn pathloss_is_monotone(d in 1.0..2000.0f64, extra in 0.0..500.0f64, fc in 0.5..6.0f64) {
        for prop in [Propagation::Los, Propagation::Nlos] {
            prop_assert!(pathloss_db(d + extra, fc, prop).unwrap() >= pathloss_db(d, fc, prop).unwrap());
        }
    }

    #[test]
    fn gains_are_positive_and_reproducible(m in 1usize..4, n in 0usize..5, seed in any::<u64>()) {
        let p = RadioParams::default();
        let t = generate_topology(&p, m, n, seed).unwrap();
        let g = draw_gains(&t, &p, seed ^ 1).unwrap();
        prop_assert!(g.values().iter().all(|v| *v > 0.0 && v.is_finite()));
        prop_assert_eq!(&g, &draw_gains(&t, &p, seed ^ 1).unwrap());
    }

    #[test]
    fn adding_a_pair_never_raises_others_sinr(seed in any::<u64>(), n in 2usize..6) {
        let p = RadioParams::default();
        let t = generate_topology(&p, 1, n, seed).unwrap();
        let g = draw_gains(&t, &p, seed.wrapping_add(7)).unwrap();
        let mut rbs = vec![Some(0); n];
        rbs[n - 1] = None;
        let fewer = Allocation::with_assignment(1, rbs, &p);
        let more = Allocation::with_assignment(1, vec![Some(0); n], &p);
        for k in 0..n - 1 {
            let rx = Topology::pair_rx(k);
            prop_assert!(sinr(&more, &g, &p, rx, 0).unwrap() <= sinr(&fewer, &g, &p, rx, 0).unwrap());
        }
        prop_assert!(sum_rate(&more, &g, &p).is_finite());
    }

    #[test]
    fn silent_pair_has_no_sinr(seed in any::<u64>()) {
        let p = RadioParams::default();
        let t = generate_topology(&p, 2, 1, seed).unwrap();
        let g = draw_gains(&t, &p, seed).unwrap();
        let a = Allocation::cellular_only(2, 1, &p);
        prop_assert!(sinr(&a, &g, &p, Topology::pair_rx(0), 0).is_err());
        prop_assert!(matches!(Topology::pair_tx(0), Node::D2d(0)));
    }
}
