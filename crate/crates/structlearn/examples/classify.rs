//! Classifies a few named families and prints the JSON classification.
//!
//! `cargo run --example classify -- cycles_fin`

use structlearn::catalog::Family;
use structlearn::logic::classify_family;

fn main() {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let names = if names.is_empty() {
        vec!["cycles_fin".into(), "omega_pair".into(), "tilde_chains_34".into(), "chains_omega".into()]
    } else {
        names
    };
    for name in names {
        let family = Family::parse(&name).expect("known family");
        let c = classify_family(&family).expect("supported family");
        println!("{}", serde_json::to_string_pretty(&c).unwrap());
    }
}
