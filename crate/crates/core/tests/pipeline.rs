use gpq_core::dequantizer::{run_r, DequantizerConfig};
use gpq_core::dr::{self, DrSpec, RangeParam};
use gpq_core::edges::{binomial, induce_edge_map};
use gpq_core::qsim::{boost_majority3, library, run_circuit, QueryCircuit};
use gpq_core::seed::trial_rng;
use gpq_core::{EdgeIndexer, Hypergraph, VertexMap};
use proptest::prelude::*;

fn range() -> impl Strategy<Value = RangeParam> {
    prop_oneof![
        (1u64..=6).prop_map(RangeParam::Finite),
        Just(RangeParam::Infinite)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_maps_respect_the_range(n in 2usize..=6, l in 1usize..=3, r in range(), seed: u64) {
        prop_assume!(l <= n);
        let ix = EdgeIndexer::new(n, l).unwrap();
        let s = dr::sample(&DrSpec::new(ix, r).unwrap(), &mut trial_rng(seed, 0));
        match r {
            RangeParam::Finite(r) => prop_assert!(s.f.image_size() as u64 <= r.min(n as u64)),
            RangeParam::Infinite => prop_assert!(s.f.is_bijective() && s.edge_map.is_permutation()),
        }
        prop_assert_eq!(&s.edge_map, &induce_edge_map(&s.f, &ix).unwrap());
    }

    #[test]
    fn relabelling_keeps_the_edge_count(n in 3usize..=6, l in 1usize..=3, mask: u64, seed: u64) {
        let ix = EdgeIndexer::new(n, l).unwrap();
        let x = Hypergraph::from_mask(ix, mask & ((1u64 << ix.m()) - 1));
        let p = dr::sample(&DrSpec::new(ix, RangeParam::Infinite).unwrap(), &mut trial_rng(seed, 1));
        prop_assert_eq!(x.compose(&p.edge_map).unwrap().edge_count(), x.edge_count());
    }

    #[test]
    fn tree_cost_is_bounded_by_the_collapsed_range(r in 1u64..=5, mask in 0u64..8, seed: u64) {
        let ix = EdgeIndexer::new(3, 2).unwrap();
        let c = boost_majority3(&library::parity_circuit(ix.m()).unwrap()).unwrap();
        let cfg = DequantizerConfig::new(c, RangeParam::Finite(r), ix).unwrap();
        let run = run_r(&cfg, &Hypergraph::from_mask(ix, mask), &mut trial_rng(seed, 2)).unwrap();
        // An l-edge in the image lies inside Im(f), which has at most r vertices.
        prop_assert!(run.cost() <= binomial(r.min(3) as usize, 2));
        prop_assert!(run.reads.iter().all(|i| run.queried.contains(i)));
    }
}

#[test]
fn circuits_survive_serialization() {
    let ix = EdgeIndexer::new(3, 2).unwrap();
    for seed in 0..6 {
        let c = library::random_circuit(ix.m(), 2, 1 + seed as usize % 2, &mut trial_rng(seed, 3))
            .unwrap();
        let back = QueryCircuit::from_json(&c.to_json()).unwrap();
        for mask in 0..8 {
            let x = Hypergraph::from_mask(ix, mask);
            let a = run_circuit(&c, &x, None).unwrap();
            let b = run_circuit(&back, &x, None).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn identity_relabelling_changes_nothing() {
    let ix = EdgeIndexer::new(4, 2).unwrap();
    let id = induce_edge_map(&VertexMap::identity(4), &ix).unwrap();
    let c = library::random_circuit(ix.m(), 2, 1, &mut trial_rng(9, 0)).unwrap();
    let x = Hypergraph::from_bitstring(ix, "101101").unwrap();
    assert_eq!(x.compose(&id).unwrap(), x);
    assert_eq!(
        run_circuit(&c, &x, Some(&id)).unwrap(),
        run_circuit(&c, &x, None).unwrap()
    );
}
