//! Writes synthetic selection and attachment TSV files for trying the CLI.
//!
//! `cargo run -p preptensor --example gen_task_data -- <out_dir> [n] [seed]`

use std::path::PathBuf;

use preptensor::synth;

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    std::fs::create_dir_all(&dir)?;
    let lines = |v: Vec<String>| v.join("\n") + "\n";
    for (name, s) in [("train", seed), ("test", seed + 1)] {
        let sel = synth::synthetic_selection_instances(n, 0.3, s);
        std::fs::write(
            dir.join(format!("select_{name}.tsv")),
            lines(sel.iter().map(|i| i.to_tsv_line()).collect()),
        )?;
        let att = synth::synthetic_attachment_instances(n, 0.6, s);
        std::fs::write(
            dir.join(format!("attach_{name}.tsv")),
            lines(att.iter().map(|i| i.to_tsv_line()).collect()),
        )?;
    }
    Ok(())
}
