use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ugv_core::assignment::{hungarian, phi, psi, Prefix};
use ugv_core::bnb::{evaluate, solve};
use ugv_core::experiments::{generate_with_rng, run_rng, GenParams};
use ugv_core::feasibility::check_p1_feasible;
use ugv_core::inner::xi_value;
use ugv_core::local_search::search;
use ugv_core::scenario::{Scenario, ScenarioData};
use ugv_core::tour::{shortest_tour, upsilon};
use ugv_core::Selection;

fn small_scenario(seed: u64, max_m: usize, max_k: usize) -> Scenario {
    let mut rng = run_rng(seed, 0);
    let params = GenParams {
        m: rng.gen_range(2..=max_m),
        k: rng.gen_range(1..=max_k),
        ..GenParams::default()
    };
    generate_with_rng(&params, &mut rng).unwrap()
}

fn random_selection(m: usize, rng: &mut impl Rng) -> Selection {
    Selection::from_mask(1 | rng.gen_range(0..1u64 << (m - 1)) << 1, m).unwrap()
}

fn integer_scenario(m: usize, rng: &mut impl Rng) -> Scenario {
    let d = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 0.0 } else { rng.gen_range(1..=50) as f64 })
                .collect()
        })
        .collect();
    Scenario::new(ScenarioData {
        m,
        k: 1,
        d,
        a_gain: vec![vec![1.0; m]],
        gamma: vec![1.0],
        t: 1e4,
        velocity: 2.0,
        alpha1: 0.29,
        alpha2: 7.4,
        mu: 1.0,
        n0_dbm: -95.0,
        beta: 0.5,
        eta: 0.78,
        positions: None,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solved_plans_satisfy_every_constraint(seed in any::<u64>()) {
        let sc = small_scenario(seed, 7, 6);
        let r = solve(&sc, None).unwrap();
        let m = sc.num_vertices();
        let w = r.tour.edge_matrix(m);
        let t = r.alloc.time_matrix(m);
        let p = r.alloc.power_matrix(m);
        let report = check_p1_feasible(&sc, &r.selection, &w, &t, &p).unwrap();
        prop_assert!(report.is_feasible(), "{:?}", report.violations);
        prop_assert!((r.weighted_energy(&sc) - r.objective).abs() <= 1e-9 * r.objective);
    }

    #[test]
    fn tour_edges_match_selection(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(2..=9);
        let sc = integer_scenario(m, &mut rng);
        let sel = random_selection(m, &mut rng);
        let tour = shortest_tour(&sel, &sc).unwrap().unwrap();
        let w = tour.edge_matrix(m);
        if sel.count() >= 2 {
            for v in 0..m {
                let expected = usize::from(sel.contains(v));
                prop_assert_eq!(w.out_degree(v), expected);
                prop_assert_eq!(w.in_degree(v), expected);
            }
        } else {
            prop_assert!(w.is_empty());
        }
        prop_assert_eq!(w.trace_length(&sc), tour.length);
        prop_assert_eq!(tour.upsilon, 1e4 - tour.length / 2.0);
    }

    #[test]
    fn euclidean_tours_grow_with_selection(seed in any::<u64>()) {
        let sc = small_scenario(seed, 9, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = sc.num_vertices();
        let sel = random_selection(m, &mut rng);
        let base = upsilon(&sel, &sc).unwrap();
        for v in 1..m {
            if !sel.contains(v) {
                let bigger = upsilon(&sel.flipped(v), &sc).unwrap();
                prop_assert!(bigger <= base + 1e-9);
            }
        }
    }

    #[test]
    fn hungarian_invariant_under_row_and_column_shifts(
        seed in any::<u64>(),
        shift in -20i32..20,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=7);
        let c: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-30..30) as f64).collect())
            .collect();
        let base = hungarian(&c).unwrap();
        let row = rng.gen_range(0..n);
        let col = rng.gen_range(0..n);
        let mut shifted = c.clone();
        for x in shifted[row].iter_mut() {
            *x += shift as f64;
        }
        let a = hungarian(&shifted).unwrap();
        prop_assert_eq!(a.cost, base.cost + shift as f64);
        prop_assert_eq!(&a.matching, &base.matching);
        let mut shifted = c.clone();
        for row in shifted.iter_mut() {
            row[col] += shift as f64;
        }
        let b = hungarian(&shifted).unwrap();
        prop_assert_eq!(b.cost, base.cost + shift as f64);
        prop_assert_eq!(&b.matching, &base.matching);
    }

    #[test]
    fn relaxation_dominates_every_completion(seed in any::<u64>()) {
        let sc = small_scenario(seed, 7, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let m = sc.num_vertices();
        let depth = rng.gen_range(1..=m);
        let mut bits = vec![true];
        bits.extend((1..depth).map(|_| rng.gen_bool(0.5)));
        let prefix = Prefix::from_bits(&bits, m).unwrap();
        let relaxed = phi(&prefix, &sc);
        for c in prefix.completions() {
            prop_assert!(relaxed >= upsilon(&c, &sc).unwrap() - 1e-9);
        }
    }

    #[test]
    fn fixing_a_zero_never_loosens_the_bound(seed in any::<u64>()) {
        let sc = small_scenario(seed, 8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let m = sc.num_vertices();
        let mut prefix = Prefix::root(m);
        while !prefix.is_full() {
            let before = psi(&prefix, &sc);
            let zero = prefix.extend(false).unwrap();
            let after = psi(&zero, &sc);
            prop_assert!(after >= before - 1e-12 * before.abs());
            prefix = prefix.extend(rng.gen_bool(0.5)).unwrap();
        }
    }

    #[test]
    fn optimum_dominates_baselines_and_warm_start_agrees(seed in any::<u64>()) {
        let sc = small_scenario(seed, 8, 6);
        let m = sc.num_vertices();
        let r = solve(&sc, None).unwrap();
        let no_move = xi_value(&Selection::depot_only(m), &sc).unwrap();
        let full = xi_value(&Selection::full(m), &sc).unwrap();
        prop_assert!(r.objective <= no_move);
        prop_assert!(r.objective <= full);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ls = search(&sc, 10, 3, &mut rng).unwrap();
        prop_assert!(ls.value <= no_move);
        prop_assert!(ls.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(ls.history.len(), 10);
        let warm = solve(&sc, Some((ls.value, ls.selection))).unwrap();
        prop_assert!((warm.objective - r.objective).abs() <= 1e-12 * r.objective);

        let trace = &r.stats.trace;
        prop_assert!(trace.windows(2).all(|w| w[1].incumbent <= w[0].incumbent));
        prop_assert_eq!(trace.last().unwrap().pool_nodes, 0);
    }

    #[test]
    fn fixed_selection_reports_are_consistent(seed in any::<u64>()) {
        let sc = small_scenario(seed, 6, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sel = random_selection(sc.num_vertices(), &mut rng);
        if let Some(r) = evaluate(&sc, &sel).unwrap() {
            prop_assert_eq!(r.objective, xi_value(&sel, &sc).unwrap());
            for (k, &v) in r.alloc.serve.iter().enumerate() {
                prop_assert!(sel.contains(v));
                let best = sel.vertices().map(|u| sc.gain(k, u)).fold(0.0, f64::max);
                prop_assert_eq!(sc.gain(k, v), best);
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_reports() {
    let sc = small_scenario(11, 8, 8);
    let mut a = solve(&sc, None).unwrap();
    let mut b = solve(&sc, None).unwrap();
    a.stats.wall_time = Default::default();
    b.stats.wall_time = Default::default();
    assert_eq!(a, b);
    let json = serde_json::to_string(&a).unwrap();
    let back: ugv_core::SolveReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, a);
}
