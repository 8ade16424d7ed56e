//! Adversary duels: certificate kinds, shape audits and replay.

use structlearn::adversaries::{replay_matches, run_duel, CertificateKind, DuelConfig, DuelOutcome, DuelRecord, ADVERSARY_NAMES};

fn duel(adversary: &str, opponent: &str) -> (DuelRecord, DuelOutcome) {
    let record = DuelRecord::new(adversary, opponent, DuelConfig::default()).unwrap();
    let outcome = run_duel(&record).unwrap();
    (record, outcome)
}

fn kind_name(k: &CertificateKind) -> String {
    serde_json::to_value(k).unwrap()["kind"].as_str().unwrap().to_owned()
}

const EXPECTED: &[(&str, &str, &str)] = &[
    ("ex_rays", "ex_min_embed", "stuck_wrong"),
    ("nus_poset", "ex_poset", "abandon_return"),
    ("nus_poset", "dec(ex_poset)", "stuck_wrong"),
    ("total_id_operator", "fin_to_id_total", "prefix_disagreement"),
    ("e3_fstar", "chain_growth", "prefix_disagreement"),
    ("co_comparable", "nus", "missing_code"),
    ("fin", "nus", "stuck_wrong"),
];

#[test]
fn duels_end_in_the_expected_certificates() {
    for &(adversary, opponent, kind) in EXPECTED {
        let (_, outcome) = duel(adversary, opponent);
        let cert = outcome.certificate().unwrap_or_else(|| panic!("{adversary} vs {opponent}: {outcome:?}"));
        assert_eq!(kind_name(&cert.kind), kind, "{adversary} vs {opponent}");
        assert!(cert.audit.ok(), "{adversary} vs {opponent}: {:?}", cert.audit);
        assert_eq!(cert.adversary, adversary);
        assert_eq!(cert.opponent, opponent);
    }
}

#[test]
fn certificates_replay_bit_for_bit() {
    for &(adversary, opponent, _) in EXPECTED {
        let (record, outcome) = duel(adversary, opponent);
        assert!(replay_matches(&record, &outcome).unwrap(), "{adversary} vs {opponent}");
    }
}

#[test]
fn abandon_return_stages_are_ordered() {
    let (_, outcome) = duel("nus_poset", "ex_poset");
    let Some(CertificateKind::AbandonReturn { stages, .. }) = outcome.kind() else { panic!("{outcome:?}") };
    assert!(stages[0] < stages[1] && stages[1] < stages[2]);
}

#[test]
fn prefix_disagreements_carry_positions() {
    let (_, outcome) = duel("total_id_operator", "fin_to_id_total");
    let Some(CertificateKind::PrefixDisagreement { positions }) = outcome.kind() else { panic!("{outcome:?}") };
    assert!(!positions.is_empty());
}

#[test]
fn a_sound_fin_learner_is_not_refuted() {
    let (_, outcome) = duel("fin", "fin");
    assert!(matches!(outcome, DuelOutcome::Inconclusive { .. }), "{outcome:?}");
}

#[test]
fn the_seed_is_recorded_but_does_not_steer() {
    for &(adversary, opponent, _) in EXPECTED {
        let base = duel(adversary, opponent).1;
        let record = DuelRecord::new(adversary, opponent, DuelConfig { seed: 41, ..DuelConfig::default() }).unwrap();
        let other = run_duel(&record).unwrap();
        assert_eq!(other.kind(), base.kind(), "{adversary} vs {opponent}");
        assert_eq!(other.certificate().unwrap().seed, 41);
    }
}

#[test]
fn records_and_outcomes_round_trip_through_json() {
    let (record, outcome) = duel("nus_poset", "ex_poset");
    let r: DuelRecord = serde_json::from_str(&serde_json::to_string(&record).unwrap()).unwrap();
    assert_eq!(r, record);
    let o: DuelOutcome = serde_json::from_str(&serde_json::to_string(&outcome).unwrap()).unwrap();
    assert_eq!(o, outcome);
}

#[test]
fn every_adversary_has_a_default_family() {
    for name in ADVERSARY_NAMES {
        assert!(DuelRecord::new(name, "nus", DuelConfig::default()).is_ok(), "{name}");
    }
    assert!(DuelRecord::new("no_such_adversary", "nus", DuelConfig::default()).is_err());
}

#[test]
fn incompatible_opponents_are_rejected() {
    let record = DuelRecord::new("co_comparable", "co", DuelConfig::default()).unwrap();
    assert!(run_duel(&record).is_err());
    let record = DuelRecord::new("ex_rays", "no_such_learner", DuelConfig::default()).unwrap();
    assert!(run_duel(&record).is_err());
}
