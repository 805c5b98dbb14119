use std::collections::BTreeSet;

use gpq_glued::instance::{build_instance, expected_census, vertex_count, MAX_DEGREE};
use gpq_glued::oracle::is_exit_degree;
use gpq_glued::solvers::{classical_baseline, decide_p5, ClassicalStrategy, DecideConfig};
use gpq_glued::{AdjOracle, GluedInstance, GluedParams, Label, OracleMode, Role, Variant};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn inst(k: u32, v: Variant, seed: u64) -> GluedInstance {
    build_instance(GluedParams::new(k, v, seed).unwrap()).unwrap()
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::A), Just(Variant::B)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjacency_is_a_simple_symmetric_graph(k in (1u32..=3).prop_map(|h| 2 * h), v in variant(), seed: u64) {
        let g = inst(k, v, seed);
        prop_assert_eq!(g.n() as u64, vertex_count(k));
        for u in g.labels() {
            let nb = g.neighbors(u).unwrap();
            prop_assert!(nb.len() <= MAX_DEGREE);
            let distinct: BTreeSet<Label> = nb.iter().copied().collect();
            prop_assert_eq!(distinct.len(), nb.len());
            prop_assert!(!distinct.contains(&u));
            for &w in nb {
                prop_assert!(g.neighbors(w).unwrap().contains(&u));
            }
        }
    }

    #[test]
    fn census_does_not_depend_on_the_labelling(k in (1u32..=3).prop_map(|h| 2 * h), v in variant(), seed: u64) {
        let g = inst(k, v, seed);
        prop_assert_eq!(g.degree_census(), expected_census(k, v));
        let sizes: Vec<usize> = g.columns().iter().map(Vec::len).collect();
        let again: Vec<usize> = inst(k, v, seed.wrapping_add(1)).columns().iter().map(Vec::len).collect();
        prop_assert_eq!(sizes, again);
    }

    #[test]
    fn degree_five_iff_variant_b(k in (1u32..=3).prop_map(|h| 2 * h), v in variant(), seed: u64) {
        let g = inst(k, v, seed);
        let fives: Vec<Label> = g.labels().filter(|&u| g.degree(u).unwrap() == 5).collect();
        match v {
            Variant::A => prop_assert!(fives.is_empty()),
            Variant::B => prop_assert_eq!(fives, vec![g.exit()]),
        }
        let exit_like: Vec<Label> = g.labels().filter(|&u| is_exit_degree(g.degree(u).unwrap())).collect();
        prop_assert_eq!(exit_like, vec![g.exit()]);
    }

    #[test]
    fn text_round_trip(k in (1u32..=2).prop_map(|h| 2 * h), v in variant(), seed: u64) {
        let g = inst(k, v, seed);
        let back = GluedInstance::from_text(&g.to_text(true)).unwrap();
        prop_assert_eq!(back.to_text(true), g.to_text(true));
    }
}

#[test]
fn k2_counts() {
    let g = inst(2, Variant::A, 0);
    assert_eq!(g.n(), 47);
    assert_eq!(g.pointer_count(), 16);
    assert_eq!(g.pointer_fraction_without_markers(), Ratio::new(16, 44));
    assert_eq!(g.pointer_hit_probability(), Ratio::new(16, 47));
    let isolated = g.labels().filter(|&u| g.degree(u).unwrap() == 0).count();
    assert_eq!(isolated, 3);
    assert!(g.labels().all(|u| g.degree(u).unwrap() <= 4));
}

#[test]
fn pointer_fraction_tends_to_half() {
    let f = |k: u32| {
        let r = inst(k, Variant::A, 0).pointer_fraction_without_markers();
        *r.numer() as f64 / *r.denom() as f64
    };
    assert!((f(12) - 0.5).abs() < 0.01);
    assert!((f(12) - 0.5).abs() < (f(4) - 0.5).abs());
}

#[test]
fn slot_queries_follow_the_degrees() {
    let g = inst(4, Variant::A, 5);
    let mut o = AdjOracle::new(&g, OracleMode::Slot);
    let pointer = g
        .labels()
        .find(|&u| g.role(u).unwrap() == Role::Pointer)
        .unwrap();
    assert_eq!(o.query(pointer, 2).unwrap(), None);
    assert_eq!(o.query(g.markers()[0], 1).unwrap(), None);
    assert!(o.query(g.entrance(), 4).unwrap().is_some());
    assert_eq!(o.query(g.entrance(), 5).unwrap(), None);
    assert_eq!(o.count(), 4);
    let mut full = AdjOracle::new(&g, OracleMode::Full);
    assert_eq!(full.query_all(g.exit()).unwrap().len(), 2);
    let gb = inst(4, Variant::B, 5);
    assert_eq!(
        AdjOracle::new(&gb, OracleMode::Full)
            .query_all(gb.exit())
            .unwrap()
            .len(),
        5
    );
}

#[test]
fn decide_p5_across_small_k() {
    for k in [2u32, 4, 6] {
        for v in [Variant::A, Variant::B] {
            let mut ok = 0;
            for seed in 0..20 {
                let g = inst(k, v, seed);
                let mut o = AdjOracle::new(&g, OracleMode::Slot);
                let r = decide_p5(
                    &mut o,
                    &DecideConfig::default(),
                    &mut ChaCha8Rng::seed_from_u64(seed),
                )
                .unwrap();
                assert_eq!(r.oracle_queries, o.count());
                // One-sided: a degree-5 vertex is only reported when seen.
                if v == Variant::A {
                    assert_ne!(r.decision, Some(true));
                }
                ok += usize::from(r.success);
            }
            assert!(ok >= 18, "k={k} {v}: {ok}/20");
        }
    }
}

#[test]
fn classical_search_is_hopeless_on_small_budget_at_k6() {
    let k = 6u32;
    let budget = 100 * (k as u64).pow(2);
    let mut wins = 0;
    for seed in 0..40 {
        let g = inst(k, Variant::B, seed);
        let mut o = AdjOracle::new(&g, OracleMode::Slot);
        let r = classical_baseline(
            &mut o,
            budget,
            ClassicalStrategy::RandomWalk,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        wins += usize::from(r.success);
    }
    assert!(wins <= 4, "{wins}/40");
}
