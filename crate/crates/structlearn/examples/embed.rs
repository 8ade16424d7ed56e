//! Encodes a fragment as an atomic-diagram prefix, decodes it back and looks
//! for induced embeddings between catalog pieces.
//!
//! `cargo run --example embed`

use structlearn::catalog::CatalogStructure;
use structlearn::structures::{decode_fragment, encode_fragment, find_embedding};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cycle: CatalogStructure = "cycle(4)".parse()?;
    let square = cycle.canonical(4);
    let diagram = encode_fragment(&square);
    println!("cycle(4) diagram: {diagram}");
    assert_eq!(decode_fragment(&diagram, square.signature())?, square);

    for (small, large) in [("ray(3)", "cycle(5)"), ("ray(4)", "cycle(4)"), ("chain(3)", "tilde(poset_p(0))")] {
        let f = small.parse::<CatalogStructure>()?.canonical(8);
        let g = large.parse::<CatalogStructure>()?.canonical(10);
        match find_embedding(&f, &g)? {
            Some(map) => println!("{small} -> {large}: {map:?}"),
            None => println!("{small} -> {large}: no induced copy"),
        }
    }
    Ok(())
}
