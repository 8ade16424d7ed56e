//! Learners, transcripts and the decisive filter.

use proptest::prelude::*;
use structlearn::catalog::{registry, Family};
use structlearn::harness::{check, run_learner, CriterionKind, CriterionSpec};
use structlearn::learners::{build_learner, DecisiveFilter, Hypothesis, MindChangeBudget, Transcript, LEARNER_NAMES};

use Hypothesis::{Conjecture as K, Question as Q};

/// Any `h … h' … h` with `h ≠ h'` among the non-`?` entries, found by trying
/// every triple of positions.
fn returns_to_abandoned(t: &[Hypothesis]) -> bool {
    let codes: Vec<usize> = t.iter().filter_map(|h| h.code()).collect();
    let n = codes.len();
    (0..n).any(|i| (i + 1..n).any(|j| codes[j] != codes[i] && (j + 1..n).any(|k| codes[k] == codes[i])))
}

fn mind_changes_by_hand(t: &[Hypothesis]) -> Vec<usize> {
    let mut out = Vec::new();
    for s in 0..t.len() {
        let Some(c) = t[s].code() else { continue };
        if let Some(prev) = t[..s].iter().rev().find_map(|h| h.code()) {
            if prev != c {
                out.push(s);
            }
        }
    }
    out
}

fn symbol(x: u8) -> Hypothesis {
    match x {
        0 => Q,
        n => K(n as usize - 1),
    }
}

fn every_stream(len: usize, symbols: u8) -> Vec<Vec<Hypothesis>> {
    let mut all = vec![Vec::new()];
    for _ in 0..len {
        all = all
            .into_iter()
            .flat_map(|prefix: Vec<Hypothesis>| {
                (0..symbols).map(move |x| {
                    let mut next = prefix.clone();
                    next.push(symbol(x));
                    next
                })
            })
            .collect();
    }
    all
}

fn stream(max_code: u8, len: usize) -> impl Strategy<Value = Vec<Hypothesis>> {
    proptest::collection::vec((0..=max_code).prop_map(symbol), 0..len)
}

#[test]
fn decisive_filter_never_returns_on_short_streams() {
    let mut checked = 0;
    for len in 0..=6 {
        for s in every_stream(len, 3) {
            let out = DecisiveFilter::apply(&s);
            assert_eq!(out.len(), s.len());
            assert!(!returns_to_abandoned(&out), "{s:?} -> {out:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, (0..=6).map(|l| 3usize.pow(l)).sum::<usize>());
}

#[test]
fn decisive_case_table_examples() {
    let (a, b) = (K(0), K(1));
    assert_eq!(DecisiveFilter::apply(&[a, b, a, a]), vec![a, b, b, b]);
    assert_eq!(DecisiveFilter::apply(&[a, a, b, b]), vec![a, a, b, b]);
    assert_eq!(DecisiveFilter::apply(&[]), Vec::<Hypothesis>::new());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decisive_filter_never_returns(s in stream(5, 60)) {
        let out = DecisiveFilter::apply(&s);
        prop_assert!(!returns_to_abandoned(&out));
    }

    #[test]
    fn decisive_filter_is_identity_on_decisive_streams(s in stream(4, 30)) {
        let s: Vec<Hypothesis> = s.into_iter().filter(|h| !h.is_question()).collect();
        if !returns_to_abandoned(&s) {
            prop_assert_eq!(DecisiveFilter::apply(&s), s);
        }
    }

    #[test]
    fn decisive_filter_keeps_a_correct_code_that_is_never_dropped(prefix in stream(4, 30), truth in 5usize..7, tail in 1usize..20) {
        let mut s = prefix;
        s.extend(std::iter::repeat_n(K(truth), tail));
        let out = DecisiveFilter::apply(&s);
        prop_assert_eq!(out.last().copied(), Some(K(truth)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transcript_jsonl_round_trips(s in stream(9, 80)) {
        let t = Transcript::from_entries(s);
        let back = Transcript::from_jsonl(&t.to_jsonl()).unwrap();
        prop_assert_eq!(&back, &t);
        let json = serde_json::to_string(&t).unwrap();
        prop_assert_eq!(serde_json::from_str::<Transcript>(&json).unwrap(), t);
    }

    #[test]
    fn mind_changes_match_a_direct_count(s in stream(3, 50)) {
        let t = Transcript::from_entries(s.clone());
        prop_assert_eq!(t.mind_change_stages(), mind_changes_by_hand(&s));
        for code in 0..3 {
            prop_assert_eq!(t.count(code), s.iter().filter(|h| h.code() == Some(code)).count());
        }
    }

    #[test]
    fn budget_pays_for_exactly_its_allowance(s in stream(3, 50), budget in 0usize..6) {
        let changes = mind_changes_by_hand(&s).len();
        let mut b = MindChangeBudget::new(budget);
        let refused = s.iter().filter(|&&h| !b.observe(h)).count();
        prop_assert_eq!(refused, changes.saturating_sub(budget));
        prop_assert_eq!(b.remaining(), budget.saturating_sub(changes));
    }
}

#[test]
fn hypotheses_parse_and_print() {
    assert_eq!("?".parse::<Hypothesis>().unwrap(), Q);
    assert_eq!("17".parse::<Hypothesis>().unwrap(), K(17));
    assert!("x".parse::<Hypothesis>().is_err());
    assert_eq!(serde_json::to_string(&Q).unwrap(), "\"?\"");
    assert_eq!(serde_json::to_string(&K(3)).unwrap(), "3");
    assert_eq!(serde_json::from_str::<Hypothesis>("4").unwrap(), K(4));
}

#[test]
fn every_learner_builds_for_some_registry_family() {
    let families = registry();
    for name in LEARNER_NAMES {
        assert!(families.iter().any(|f| build_learner(name, f).is_ok()), "{name}");
    }
    assert!(build_learner("no_such_learner", &families[0]).is_err());
    assert!(build_learner("ex_from_pl(0,9)", &Family::parse("omega_pair").unwrap()).is_err());
}

#[test]
fn runs_are_deterministic_in_the_seed() {
    let family = Family::parse("omega_pair").unwrap();
    let a = run_learner(&family, "ex_minmax", 1, 7, 200).unwrap();
    let b = run_learner(&family, "ex_minmax", 1, 7, 200).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 200);
}

#[test]
fn ex_minmax_converges_on_both_chains() {
    let family = Family::parse("omega_pair").unwrap();
    let spec = CriterionSpec::new(CriterionKind::Ex);
    for member in 0..2 {
        for seed in 0..3 {
            let t = run_learner(&family, "ex_minmax", member, seed, spec.horizon).unwrap();
            assert!(check(&spec, &t, member, &family).unwrap().is_pass(), "member {member} seed {seed}");
        }
    }
}

#[test]
fn co_learners_on_a_single_member_family_stay_silent() {
    let family = Family::parse("{du(cycle(3), iso_inf)}").unwrap();
    for learner in ["co", "id_to_co"] {
        let t = run_learner(&family, learner, 0, 0, 64).unwrap();
        assert!(t.entries().iter().all(|h| h.is_question()), "{learner}");
    }
}

#[test]
fn nus_keeps_the_smaller_tilde_chain_once_emitted() {
    let family = Family::parse("tilde_chains_34").unwrap();
    for seed in 0..3 {
        let t = run_learner(&family, "nus", 0, seed, 100).unwrap();
        let first = t.entries().iter().position(|h| *h == K(0)).expect("code 0 emitted");
        assert!(t.entries()[first..].iter().all(|h| *h == K(0)), "seed {seed}");
    }
}

#[test]
fn nus_settles_on_the_larger_tilde_chain() {
    let family = Family::parse("tilde_chains_34").unwrap();
    let spec = CriterionSpec::new(CriterionKind::NUs);
    for seed in 0..3 {
        let t = run_learner(&family, "nus", 1, seed, spec.horizon).unwrap();
        assert!(check(&spec, &t, 1, &family).unwrap().is_pass(), "seed {seed}");
    }
}

#[test]
fn id_to_co_names_the_other_cycle_early() {
    let family = Family::parse("cycles_fin").unwrap();
    for member in 0..2 {
        for seed in 0..3 {
            let t = run_learner(&family, "id_to_co", member, seed, 100).unwrap();
            assert_eq!(t.distinct_codes().into_iter().collect::<Vec<_>>(), vec![1 - member], "member {member} seed {seed}");
        }
    }
}
