//! Runs an experiment matrix from JSON, writes the cell records and prints the table.
//!
//! `cargo run --release --example matrix -- crates/structlearn/examples/matrix.json runs.jsonl`

use structlearn::harness::{from_jsonl, render_table, run_matrix, to_jsonl, MatrixConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = args.first().map_or(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/matrix.json").to_string(), Clone::clone);
    let out = args.get(1).cloned().unwrap_or_else(|| "runs.jsonl".into());
    let cfg: MatrixConfig =
        serde_json::from_str(&std::fs::read_to_string(config).expect("readable config")).expect("valid config");
    let records = run_matrix(&cfg);
    std::fs::write(&out, to_jsonl(&records)).expect("writable output");
    let reread = from_jsonl(&std::fs::read_to_string(&out).unwrap()).unwrap();
    print!("{}", render_table(&reread));
}
