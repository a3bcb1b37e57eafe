//! Regenerates `data/toy_corpus.txt`.
//!
//! `cargo run -p preptensor --example gen_toy_corpus [sentences] [seed]`

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let sentences = args.next().map_or(26_000, |s| s.parse().expect("sentence count"));
    let seed = args.next().map_or(2017, |s| s.parse().expect("seed"));
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy_corpus.txt");
    std::fs::write(&path, preptensor::synth::toy_corpus(sentences, seed)).expect("write corpus");
    println!("wrote {}", path.display());
}
