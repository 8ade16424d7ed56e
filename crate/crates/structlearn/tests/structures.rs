//! Fragments, the diagram codec and the embedder.

mod common;

use common::all_injections_embed;
use proptest::prelude::*;
use structlearn::structures::{
    decode_fragment, embed_finite, encode_fragment, find_embedding, godel_decode, godel_index, DiagramPrefix, FiniteFragment,
    Signature,
};

fn binary() -> Signature {
    Signature::new([("r", 2)]).unwrap()
}

fn mixed() -> Signature {
    Signature::new([("p", 1), ("r", 2), ("t", 3)]).unwrap()
}

/// Every fragment of `sig` on `size` elements.
fn every_fragment(sig: &Signature, size: usize) -> Vec<FiniteFragment> {
    let atoms: Vec<(usize, Vec<usize>)> = (0..sig.decided_len(size)).map(|i| godel_decode(sig, i)).collect();
    (0u64..1 << atoms.len())
        .map(|mask| {
            let chosen = atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| a.clone());
            FiniteFragment::from_tuples(sig.clone(), size, chosen).unwrap()
        })
        .collect()
}

fn fragment(sig: Signature, max_size: usize) -> impl Strategy<Value = FiniteFragment> {
    (0..=max_size).prop_flat_map(move |size| {
        let sig = sig.clone();
        let len = sig.decided_len(size) as usize;
        proptest::collection::vec(proptest::bool::weighted(0.3), len)
            .prop_map(move |bits| decode_fragment(&DiagramPrefix { bits }, &sig).expect("full diagram"))
    })
}

#[test]
fn codec_round_trips_every_small_binary_fragment() {
    for size in 0..=4 {
        for f in every_fragment(&binary(), size) {
            let p = encode_fragment(&f);
            assert_eq!(p.bits.len() as u64, binary().decided_len(size));
            assert_eq!(decode_fragment(&p, &binary()).unwrap(), f);
            assert_eq!(p.to_string().parse::<DiagramPrefix>().unwrap(), p);
        }
    }
}

#[test]
fn codec_round_trips_every_small_mixed_fragment() {
    for size in 0..=2 {
        for f in every_fragment(&mixed(), size) {
            assert_eq!(decode_fragment(&encode_fragment(&f), &mixed()).unwrap(), f);
        }
    }
}

#[test]
fn prefix_of_a_diagram_is_the_diagram_of_the_restriction() {
    let f = FiniteFragment::from_tuples(binary(), 3, [(0, vec![0, 1]), (0, vec![2, 2]), (0, vec![1, 2])]).unwrap();
    let whole = encode_fragment(&f);
    for n in 0..=3 {
        let cut = binary().decided_len(n) as usize;
        assert_eq!(encode_fragment(&f.restrict(n)).bits, whole.bits[..cut]);
    }
}

#[test]
fn ragged_diagrams_and_bad_bits_are_rejected() {
    assert!(decode_fragment(&DiagramPrefix { bits: vec![true; 3] }, &binary()).is_err());
    assert!("01x".parse::<DiagramPrefix>().is_err());
}

#[test]
fn disjoint_union_keeps_both_sides_apart() {
    let edge = FiniteFragment::from_tuples(binary(), 2, [(0, vec![0, 1])]).unwrap();
    let u = edge.disjoint_union(&edge).unwrap();
    assert_eq!(u.size(), 4);
    assert!(u.holds(0, &[2, 3]) && !u.holds(0, &[1, 2]));
    assert!(edge.is_extended_by(&u));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn godel_numbering_is_a_bijection(index in 0u64..5000) {
        let sig = mixed();
        let (r, args) = godel_decode(&sig, index);
        prop_assert_eq!(godel_index(&sig, r, &args).unwrap(), index);
    }

    #[test]
    fn godel_index_fills_domains_in_order(r in 0usize..3, a in 0usize..6, b in 0usize..6, c in 0usize..6) {
        let sig = mixed();
        let args: Vec<usize> = [a, b, c][..sig.arity(r).unwrap()].to_vec();
        let m = *args.iter().max().unwrap();
        let i = godel_index(&sig, r, &args).unwrap();
        prop_assert!(sig.decided_len(m) <= i && i < sig.decided_len(m + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn codec_round_trips_larger_fragments(f in fragment(mixed(), 7)) {
        prop_assert_eq!(decode_fragment(&encode_fragment(&f), &mixed()).unwrap(), f);
    }

    #[test]
    fn restriction_is_extended_by_the_original(f in fragment(binary(), 8), n in 0usize..9) {
        prop_assert!(f.restrict(n).is_extended_by(&f));
        prop_assert!(f.is_extended_by(&f));
    }

    #[test]
    fn element_facts_cover_each_new_layer(f in fragment(mixed(), 5)) {
        for a in 0..f.size() {
            let layer = (f.signature().decided_len(a + 1) - f.signature().decided_len(a)) as usize;
            prop_assert_eq!(f.element_facts(a).len(), layer);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn embedder_agrees_with_all_injections(f in fragment(binary(), 4), g in fragment(binary(), 6)) {
        prop_assert_eq!(embed_finite(&f, &g).unwrap(), all_injections_embed(&f, &g));
    }

    #[test]
    fn embedder_agrees_with_all_injections_on_wide_signatures(f in fragment(mixed(), 3), g in fragment(mixed(), 4)) {
        prop_assert_eq!(embed_finite(&f, &g).unwrap(), all_injections_embed(&f, &g));
    }

    #[test]
    fn found_maps_are_embeddings(f in fragment(binary(), 5), g in fragment(binary(), 7)) {
        if let Some(h) = find_embedding(&f, &g).unwrap() {
            let mut sorted = h.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), h.len());
            prop_assert_eq!(g.induced(&h), f);
        }
    }

    #[test]
    fn every_induced_substructure_embeds(g in fragment(binary(), 7), picks in proptest::collection::vec(any::<bool>(), 7)) {
        let elements: Vec<usize> = (0..g.size()).filter(|&i| picks[i]).collect();
        prop_assert!(embed_finite(&g.induced(&elements), &g).unwrap());
    }
}

#[test]
fn signatures_must_match() {
    let f = FiniteFragment::with_size(binary(), 1);
    let g = FiniteFragment::with_size(mixed(), 1);
    assert!(embed_finite(&f, &g).is_err());
}
