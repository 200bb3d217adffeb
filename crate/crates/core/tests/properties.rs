mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rechain::convert::{bidi_to_symmetric, convert_demand, symmetric_to_bidi, verify_conversion, Color};
use rechain::model::{
    edge_counts, network_load, num_connections, num_rearrangements, satisfies_demand,
    validate_scheme, AtomicModification, DemandMatrix, NetworkShape, ProportionalWeights,
};
use rechain::oracle::{oracle_min_rearrangements, OracleLimits};
use rechain::scheduler::{reconfigure_static, SchedulerConfig};
use rechain::search::{schedule_connection, SearchConfig};
use rechain::state::SchedulerState;
use rechain::traffic::{demand_from_traffic_static, DynamicDemandGenerator, TraceEvent, TrafficMatrix};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matrix_sums_match_naive_loops(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=8);
        let n = r.gen_range(1..=4);
        let shape = common::random_shape(&mut r, m, n, 4);
        let x = common::random_scheme(&mut r, &shape, 40);
        let e = edge_counts(&x);
        for j in 0..m {
            for k in 0..m {
                let naive: u32 = (0..n).map(|i| x.get(i, j, k)).sum();
                prop_assert_eq!(e.get(j, k), naive);
            }
        }
        let naive_conn: u64 = (0..m).flat_map(|j| (0..m).map(move |k| (j, k))).map(|(j, k)| e.get(j, k) as u64).sum();
        prop_assert_eq!(num_connections(&e), naive_conn);

        let y = common::random_scheme(&mut r, &shape, 40);
        let mut naive_rearr = 0u64;
        for i in 0..n {
            for j in 0..m {
                for k in 0..m {
                    naive_rearr += x.get(i, j, k).abs_diff(y.get(i, j, k)) as u64;
                }
            }
        }
        prop_assert_eq!(num_rearrangements(&x, &y).unwrap(), naive_rearr);
        if shape.total_capacity() > 0 {
            prop_assert!(network_load(&shape, &e).unwrap() <= 1.0);
        }
    }

    #[test]
    fn single_modification_costs_two(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = NetworkShape::uniform(r.gen_range(2..=6), r.gen_range(1..=3), 3).unwrap();
        let x = common::random_scheme(&mut r, &shape, 20);
        let i = r.gen_range(0..shape.n());
        let (j, k) = common::random_pair(&mut r, shape.m());
        let mut y = x.clone();
        let op = if x.get(i, j, k) > 0 {
            AtomicModification::remove(i, j, k)
        } else {
            AtomicModification::add(i, j, k)
        };
        y.apply(&op);
        prop_assert_eq!(num_rearrangements(&x, &y).unwrap(), 2);
    }

    #[test]
    fn random_walk_keeps_indices_consistent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m, n) = (r.gen_range(2..=8), r.gen_range(1..=4));
        let shape = common::random_shape(&mut r, m, n, 3);
        let mut st = SchedulerState::new(shape.clone(), seed);
        for step in 0..300 {
            let i = r.gen_range(0..shape.n());
            let (j, k) = common::random_pair(&mut r, shape.m());
            match r.gen_range(0..3) {
                0 => { let _ = st.add_connection(i, j, k); }
                1 => { let _ = st.remove_connection(i, j, k); }
                _ => { st.set_demand(j, k, r.gen_range(0..4)).unwrap(); }
            }
            if step % 50 == 0 {
                prop_assert!(st.is_consistent());
            }
        }
        prop_assert!(st.is_consistent());
    }

    #[test]
    fn chains_only_add_the_target(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(3..=8);
        let shape = NetworkShape::uniform(m, r.gen_range(1..=4), 2).unwrap();
        let x = common::random_scheme(&mut r, &shape, 60);
        let mut d = common::jitter_demand(&mut r, &x);
        let (j, k) = common::random_pair(&mut r, m);
        let before = edge_counts(&x);
        d.set(j, k, before.get(j, k) + 1);
        let mut st = SchedulerState::rebuild_from_scratch(&shape, &d, &x).unwrap();
        st.reseed(seed);
        let snapshot = st.clone();
        let out = schedule_connection(&mut st, j, k, &SearchConfig::default());
        match out.result {
            Ok(chain) => {
                prop_assert!(chain.alternates());
                prop_assert!(validate_scheme(&shape, st.scheme()).unwrap().is_empty());
                let after = edge_counts(st.scheme());
                for a in 0..m {
                    for b in a + 1..m {
                        if (a, b) == (j.min(k), j.max(k)) {
                            prop_assert_eq!(after.get(a, b), before.get(a, b) + 1);
                        } else {
                            prop_assert!(after.get(a, b) <= before.get(a, b));
                            prop_assert!(after.get(a, b) >= before.get(a, b).min(d.get(a, b)));
                        }
                    }
                }
            }
            Err(_) => prop_assert_eq!(&st, &snapshot),
        }
        prop_assert!(st.is_consistent());
    }

    #[test]
    fn coloring_is_proper_and_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=6);
        let n = r.gen_range(1..=3);
        let caps: Vec<Vec<u32>> = (0..n).map(|_| (0..m).map(|_| 2 * r.gen_range(0..=2)).collect()).collect();
        let shape = NetworkShape::new(m, n, caps).unwrap();
        let x = common::random_scheme(&mut r, &shape, 30);
        let conv = bidi_to_symmetric(&shape, &x).unwrap();
        for i in 0..n {
            for j in 0..m {
                let slots = &conv.coloring.colors[i][j];
                let black = slots.iter().filter(|&&c| c == Color::Black).count();
                prop_assert_eq!(black * 2, slots.len());
                for p in slots.chunks(2) {
                    prop_assert_ne!(p[0], p[1]);
                }
            }
        }
        for c in &conv.coloring.connections {
            prop_assert_eq!(conv.coloring.colors[c.top][c.from][c.from_slot], Color::Black);
            prop_assert_eq!(conv.coloring.colors[c.top][c.to][c.to_slot], Color::White);
        }
        prop_assert!(conv.network.is_valid());
        prop_assert_eq!(symmetric_to_bidi(&conv.network), x);
    }

    #[test]
    fn demand_orientation_is_balanced(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=10);
        let mut d = DemandMatrix::zeros(m);
        for j in 0..m {
            for k in j + 1..m {
                d.set(j, k, r.gen_range(0..=7));
            }
        }
        let dp = convert_demand(&d, seed);
        prop_assert!(verify_conversion(&d, &dp).unwrap().is_empty());
        for j in 0..m {
            prop_assert!(dp.row_sum(j) >= d.row_sum(j) / 2);
        }
    }

    #[test]
    fn static_demand_is_feasible_and_under_target(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=10);
        let n = r.gen_range(1..=4);
        let shape = common::random_shape(&mut r, m, n, 4);
        let mut tr = TrafficMatrix::zeros(m);
        for _ in 0..r.gen_range(0..40) {
            let (a, b) = common::random_pair(&mut r, m);
            tr.add(a, b, r.gen_range(0.0..100.0));
        }
        let target = r.gen_range(0.05..=1.0);
        let d = demand_from_traffic_static(&tr, &shape, target).unwrap();
        prop_assert!(d.is_feasible(&shape));
        prop_assert!(network_load(&shape, &d).unwrap() <= target + 1e-12);
    }

    #[test]
    fn dynamic_prefixes_stay_feasible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=8);
        let shape = NetworkShape::uniform(m, r.gen_range(1..=3), 2).unwrap();
        let mut gen = DynamicDemandGenerator::new(&shape, r.gen_range(0.1..=1.0), 30.0).unwrap();
        let mut d = DemandMatrix::zeros(m);
        for t in 0..200 {
            let (src, dst) = common::random_pair(&mut r, m);
            let ev = TraceEvent { t: t as f64, src, dst, volume: r.gen_range(0.0..50.0) };
            for c in gen.observe(ev) {
                let v = d.get(c.j, c.k);
                match c.kind {
                    rechain::model::ModKind::Add => d.set(c.j, c.k, v + 1),
                    rechain::model::ModKind::Remove => d.set(c.j, c.k, v - 1),
                }
                prop_assert!(d.is_feasible(&shape));
            }
        }
        prop_assert_eq!(&d, gen.demand());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn reconfiguration_is_never_below_the_optimum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let x = common::random_scheme(&mut r, &shape, 20);
        let target = common::random_scheme(&mut r, &shape, 20);
        let new_d = edge_counts(&target);
        let mut st = SchedulerState::rebuild_from_scratch(&shape, &edge_counts(&x), &x).unwrap();
        st.reseed(seed);
        let res = reconfigure_static(&mut st, &new_d, &SchedulerConfig::plain(SearchConfig::unbounded())).unwrap();
        let best = oracle_min_rearrangements(&shape, &x, &new_d, &OracleLimits::default()).unwrap();
        prop_assert!(res.num_rearr >= best.value().unwrap());
        if res.is_complete() {
            prop_assert!(satisfies_demand(&res.new_scheme, &new_d).unwrap());
        }
        prop_assert!(validate_scheme(&shape, &res.new_scheme).unwrap().is_empty());
    }

    #[test]
    fn proportional_networks_fill_completely(seed in any::<u64>()) {
        let mut r = rng(seed);
        let wt: Vec<u32> = (0..r.gen_range(1..=4)).map(|_| r.gen_range(1..=2)).collect();
        let wl: Vec<u32> = (0..r.gen_range(2..=8)).map(|_| r.gen_range(1..=2)).collect();
        let shape = NetworkShape::proportional(ProportionalWeights::new(wt, wl).unwrap()).unwrap();
        let mut st = SchedulerState::new(shape.clone(), seed);
        let m = shape.m();
        let mut failures = 0;
        for _ in 0..2000 {
            let (j, k) = common::random_pair(&mut r, m);
            let open = |st: &SchedulerState, a: usize| (0..shape.n()).any(|i| st.has_free_slot(i, a));
            if !open(&st, j) || !open(&st, k) {
                continue;
            }
            let v = st.demand().get(j, k);
            st.set_demand(j, k, v + 1).unwrap();
            if !schedule_connection(&mut st, j, k, &SearchConfig::unbounded()).is_found() {
                failures += 1;
                st.set_demand(j, k, v).unwrap();
            }
        }
        prop_assert_eq!(failures, 0);
        prop_assert!(st.is_consistent());
    }
}
