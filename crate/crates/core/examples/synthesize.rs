//! Generate a synthetic review corpus TSV for demos and pipeline smoke
//! runs: `cargo run --example synthesize -- reviews.tsv 2000 11`.

use std::path::Path;

use rxrec_core::synth::write_reviews_tsv;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let (path, rows, seed) = match &args[1..] {
        [path] => (path.clone(), 2000, 11),
        [path, rows] => (path.clone(), rows.parse().expect("row count"), 11),
        [path, rows, seed] => (
            path.clone(),
            rows.parse().expect("row count"),
            seed.parse().expect("seed"),
        ),
        _ => {
            eprintln!("usage: synthesize <path> [rows] [seed]");
            std::process::exit(2);
        }
    };
    write_reviews_tsv(Path::new(&path), rows, seed).expect("writing the corpus");
    println!("wrote {rows} synthetic reviews to {path}");
}
