//! Verifies a reduction operator on a family and prints the report.
//!
//! `cargo run --example reduce -- erange tilde_chains_34`

use structlearn::catalog::Family;
use structlearn::harness::reduction_verdict;
use structlearn::reductions::{build_operator, verify_reduction};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (gamma, family) = match args.as_slice() {
        [g, f] => (g.clone(), f.clone()),
        _ => ("erange".into(), "tilde_chains_34".into()),
    };
    let fam = Family::parse(&family).expect("known family");
    let make = || build_operator(&gamma, &fam);
    match verify_reduction(&make, &fam, 100, &[0, 1, 2]) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            println!("{gamma} on {family}: {}", reduction_verdict(&report));
        }
        Err(e) => println!("{gamma} on {family}: rejected ({e})"),
    }
}
