//! Serializes a duel record, replays it from the JSON and checks the outcome matches.
//!
//! `cargo run --release --example replay`

use structlearn::adversaries::{replay_matches, run_duel, DuelConfig, DuelRecord};

fn main() {
    let record = DuelRecord::new("total_id_operator", "fin_to_id_total", DuelConfig::default()).unwrap();
    let outcome = run_duel(&record).unwrap();
    let stored = serde_json::to_string(&record).unwrap();
    println!("record: {stored}");
    println!("outcome: {}", serde_json::to_string(&outcome).unwrap());
    let restored: DuelRecord = serde_json::from_str(&stored).unwrap();
    println!("replay identical: {}", replay_matches(&restored, &outcome).unwrap());
}
