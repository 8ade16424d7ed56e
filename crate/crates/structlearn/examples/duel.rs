//! Plays each adversary against a learner it should beat and prints the certificate.
//!
//! `cargo run --release --example duel`

use structlearn::adversaries::{run_duel, DuelConfig, DuelRecord};

fn main() {
    let pairings = [
        ("ex_rays", "ex_min_embed"),
        ("nus_poset", "ex_poset"),
        ("nus_poset", "dec(ex_poset)"),
        ("co_comparable", "const(?)"),
        ("fin", "const(4)"),
        ("total_id_operator", "fin_to_id_total"),
        ("e3_fstar", "chain_growth"),
    ];
    for (adversary, opponent) in pairings {
        let record = DuelRecord::new(adversary, opponent, DuelConfig::default()).expect("known names");
        match run_duel(&record) {
            Ok(outcome) => println!("{adversary} vs {opponent}: {}", serde_json::to_string(&outcome.kind()).unwrap()),
            Err(e) => println!("{adversary} vs {opponent}: rejected ({e})"),
        }
    }
}
