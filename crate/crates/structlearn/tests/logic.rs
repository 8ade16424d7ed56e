//! Existential theories: comparison, witnesses and family classification.

use proptest::prelude::*;
use structlearn::catalog::{registry, CatalogStructure, Family, Kind};
use structlearn::logic::{
    classify_family, classify_family_bounded, sat_catalog, sat_fragment, separating_target, sigma1_leq, FormulaWitness, Level,
    Sigma2Metadata,
};
use structlearn::structures::embed_finite;

fn c(s: &str) -> CatalogStructure {
    s.parse().unwrap()
}

fn orders() -> Vec<CatalogStructure> {
    [
        "omega",
        "omega_star",
        "zeta",
        "chain(3)",
        "chain(5)",
        "poset_p(0)",
        "poset_p(2)",
        "tilde(omega)",
        "tilde(chain(4))",
        "tilde(poset_p(1))",
    ]
    .map(c)
    .to_vec()
}

fn graphs() -> Vec<CatalogStructure> {
    [
        "ray",
        "ray(4)",
        "cycle(4)",
        "iso_inf",
        "cyc_comp(3)",
        "cyc_comp(5)",
        "du(cycle(3), iso_inf)",
        "du(ray(3), iso_inf)",
        "du(ray, iso_inf)",
    ]
    .map(c)
    .to_vec()
}

fn same_kind_triple() -> impl Strategy<Value = (CatalogStructure, CatalogStructure, CatalogStructure)> {
    prop_oneof![Just(orders()), Just(graphs())].prop_flat_map(|pool| {
        let pick = proptest::sample::select(pool);
        (pick.clone(), pick.clone(), pick)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn sigma1_leq_is_a_preorder((a, b, d) in same_kind_triple()) {
        prop_assert!(sigma1_leq(&a, &a).unwrap());
        if sigma1_leq(&a, &b).unwrap() && sigma1_leq(&b, &d).unwrap() {
            prop_assert!(sigma1_leq(&a, &d).unwrap());
        }
    }

    #[test]
    fn separating_targets_separate((a, b, _) in same_kind_triple()) {
        match separating_target(&a, std::slice::from_ref(&b)) {
            Some(w) => {
                prop_assert!(!sigma1_leq(&a, &b).unwrap());
                let phi = FormulaWitness::embeds(w);
                prop_assert!(sat_catalog(&phi, &a).unwrap());
                prop_assert!(!sat_catalog(&phi, &b).unwrap());
            }
            None => prop_assert!(sigma1_leq(&a, &b).unwrap()),
        }
    }
}

#[test]
fn known_comparisons() {
    assert!(sigma1_leq(&c("omega"), &c("zeta")).unwrap());
    // Every infinite chain has all finite chains as its age.
    assert!(sigma1_leq(&c("zeta"), &c("omega")).unwrap());
    assert!(sigma1_leq(&c("omega"), &c("omega_star")).unwrap());
    assert!(!sigma1_leq(&c("omega"), &c("chain(5)")).unwrap());
    assert!(sigma1_leq(&c("tilde(chain(3))"), &c("tilde(chain(4))")).unwrap());
    assert!(sigma1_leq(&c("du(ray(5), iso_inf)"), &c("du(ray, iso_inf)")).unwrap());
    assert!(!sigma1_leq(&c("du(cycle(3), iso_inf)"), &c("du(cycle(4), iso_inf)")).unwrap());
    assert!(!sigma1_leq(&c("cyc_comp(3)"), &c("cyc_comp(4)")).unwrap());
    assert!(sigma1_leq(&c("omega"), &c("tilde(omega)")).unwrap());
    assert!(sigma1_leq(&c("chain(3)"), &c("omega")).is_ok());
    assert!(sigma1_leq(&c("omega"), &c("ray")).is_err());
}

#[test]
fn classification_levels_imply_each_other() {
    for family in registry() {
        let class = classify_family(&family).unwrap();
        if class.level == Level::StrongAntichain {
            assert!(class.is_antichain(), "{}", family.name);
        }
        if class.is_antichain() {
            assert!(class.is_partial_order(), "{}", family.name);
        }
        for (i, row) in class.leq.iter().enumerate() {
            assert!(row[i]);
            for (j, &le) in row.iter().enumerate() {
                if let Some(w) = class.pair_witness(i, j) {
                    assert!(!le);
                    assert!(sat_catalog(w, &family.members[i]).unwrap());
                    assert!(!sat_catalog(w, &family.members[j]).unwrap());
                }
            }
        }
    }
}

#[test]
fn registry_levels() {
    let level = |name: &str| classify_family(&Family::parse(name).unwrap()).unwrap().level;
    assert_eq!(level("cycles_fin"), Level::StrongAntichain);
    assert_eq!(level("cycles_id"), Level::StrongAntichain);
    assert_eq!(level("omega_pair"), Level::NotPartialOrder);
    assert_eq!(level("omega_zeta"), Level::NotPartialOrder);
    assert_eq!(level("fstar"), Level::NotPartialOrder);
    assert_eq!(level("tilde_chains_34"), Level::PartialOrder);
    assert_eq!(level("posets"), Level::PartialOrder);
    assert_eq!(level("rays"), Level::PartialOrder);
    assert_eq!(level("chains_omega"), Level::PartialOrder);
    // Strong witnesses for cycle complements are unions of several cycles.
    assert_eq!(level("cyc_comp"), Level::Inconclusive);
}

#[test]
fn strong_witnesses_exclude_every_other_member() {
    let family = Family::parse("cycles_fin").unwrap();
    let class = classify_family(&family).unwrap();
    for (i, w) in &class.strong_witnesses {
        for (j, m) in family.members.iter().enumerate() {
            assert_eq!(sat_catalog(w, m).unwrap(), i == &j);
        }
    }
}

#[test]
fn larger_bound_settles_cycle_complements() {
    let family = Family::new("cyc345", vec![c("cyc_comp(3)"), c("cyc_comp(4)"), c("cyc_comp(5)")]);
    assert_eq!(classify_family(&family).unwrap().level, Level::Inconclusive);
    let class = classify_family_bounded(&family, 10).unwrap();
    assert_eq!(class.level, Level::StrongAntichain);
    assert_eq!(class.strong_witnesses[&0].disjuncts()[0].size(), 9);
}

#[test]
fn formula_text_parses() {
    let phi = FormulaWitness::parse("embeds(chain(3)) | embeds(diagram(1, 1))", Kind::Order).unwrap();
    assert_eq!(phi.disjuncts().len(), 2);
    assert!(sat_catalog(&phi, &c("omega")).unwrap());
    assert!(FormulaWitness::parse("chain(3)", Kind::Order).is_err());
    assert!(FormulaWitness::parse("embeds(omega)", Kind::Order).is_err());
    let cyc = FormulaWitness::embeds_structure(&c("cycle(3)")).unwrap();
    assert!(sat_fragment(&cyc, &c("du(cycle(3), iso_inf)").canonical(5)).unwrap());
    assert!(!sat_fragment(&cyc, &c("ray").canonical(9)).unwrap());
}

#[test]
fn sat_fragment_is_monotone_along_presentations() {
    let phi = FormulaWitness::embeds(c("tilde(chain(3))").canonical(5));
    let x = c("tilde(chain(4))");
    let mut held = false;
    for n in 1..20 {
        let now = sat_fragment(&phi, &x.canonical(n)).unwrap();
        assert!(!held || now);
        held = now;
        assert_eq!(now, embed_finite(&phi.disjuncts()[0], &x.canonical(n)).unwrap());
    }
    assert!(held);
}

#[test]
fn declared_second_level_facts() {
    let meta = Sigma2Metadata::declared();
    assert_eq!(meta.is_antichain("fstar"), Some(true));
    assert_eq!(meta.is_antichain("omega_zeta"), Some(false));
    assert_eq!(meta.is_antichain("rays"), None);
}
