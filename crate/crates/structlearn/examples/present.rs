//! Prints the first stages of two seeded presentations of the same structure
//! and checks that both are copies of it.
//!
//! `cargo run --example present -- "du(cycle(3), iso_inf)"`

use structlearn::catalog::{audit_shape, CatalogStructure, Presentation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "du(cycle(3), iso_inf)".into());
    let target: CatalogStructure = text.parse()?;
    for seed in [0, 1] {
        let mut p = Presentation::new(target.clone(), seed)?;
        let f = p.advance_to(11).clone();
        let tuples: Vec<Vec<usize>> = f.tuples().filter(|(_, t)| t[0] < t[1]).map(|(_, t)| t.to_vec()).collect();
        println!("seed {seed}: abstract order {:?}", p.abstract_elements());
        println!("  stage 11 has {} elements, facts {tuples:?}", f.size());
        println!("  is a piece of {target}: {}", audit_shape(&f, std::slice::from_ref(&target)));
    }
    Ok(())
}
