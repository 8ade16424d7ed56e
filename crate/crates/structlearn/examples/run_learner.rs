//! Runs a learner on seeded copies of each member and checks one criterion.
//!
//! `cargo run --example run_learner -- omega_pair ex_minmax ex`

use structlearn::catalog::Family;
use structlearn::harness::{check, run_learner, CriterionKind, CriterionSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (family, learner, criterion) = match args.as_slice() {
        [f, l, c] => (f.clone(), l.clone(), c.clone()),
        _ => ("omega_pair".into(), "ex_minmax".into(), "ex".into()),
    };
    let fam = Family::parse(&family).expect("known family");
    let kind: CriterionKind = criterion.parse().expect("criterion name");
    let spec = CriterionSpec::new(kind);
    for member in 0..fam.len() {
        for seed in 0..3 {
            let t = run_learner(&fam, &learner, member, seed, spec.horizon).expect("learner runs");
            let verdict = check(&spec, &t, member, &fam).expect("criterion applies");
            let last = t.entries().last().map(|h| h.to_string()).unwrap_or_default();
            println!("{} seed {seed}: last guess {last}, {verdict}", fam.members[member]);
        }
    }
}
