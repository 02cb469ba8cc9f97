//! Reads a Ma-style tree directory and writes canonical JSON lines.
//!
//! ```text
//! cargo run --example convert_ma_tree -- <tree_dir> <out.jsonl>
//! ```
//!
//! Without arguments a two-claim directory is built in a temp location.

use std::fs;
use std::path::PathBuf;

use ebgcn::io::{load_claims, write_claims, Format, LoadOptions};

fn demo_dir() -> std::io::Result<PathBuf> {
    let dir = std::env::temp_dir().join("ebgcn-ma-tree-demo");
    fs::create_dir_all(dir.join("tree"))?;
    fs::write(
        dir.join("tree/501.txt"),
        "['ROOT', 'ROOT', '0.0']->['alice', '501', '0.0']\n\
         ['alice', '501', '0.0']->['bob', '502', '3.5']\n\
         ['alice', '501', '0.0']->['carol', '503', '12.0']\n\
         ['bob', '502', '3.5']->['dave', '504', '40.2']\n",
    )?;
    fs::write(
        dir.join("tree/601.txt"),
        "['ROOT', 'ROOT', 'None']->['erin', '601', '0.0']\n\
         ['erin', '601', '0.0']->['frank', '602', '']\n\
         ['erin', '601', '0.0']->['frank', '602', '']\n",
    )?;
    fs::write(dir.join("label.txt"), "false:501\nunverified:601\n")?;
    fs::write(dir.join("source_tweets.txt"), "501\tcity hall is on fire\n601\tpower is out downtown\n")?;
    Ok(dir)
}

fn main() -> ebgcn::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = match args.next() {
        Some(p) => PathBuf::from(p),
        None => demo_dir().map_err(|e| ebgcn::Error::Config(e.to_string()))?,
    };
    let output = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ebgcn-converted.jsonl"));
    let options = LoadOptions {
        format: Format::MaTree,
        strict: false,
        ..LoadOptions::default()
    };
    let (dataset, report) = load_claims(&input, &options)?;
    write_claims(&dataset, &output)?;
    println!(
        "{} claims -> {} ({} missing timestamps, {} dropped edges)",
        dataset.len(),
        output.display(),
        report.missing_times,
        report.dropped_edges
    );
    for (id, reason) in &report.skipped {
        println!("skipped {id}: {reason}");
    }
    print!("{}", fs::read_to_string(&output).unwrap_or_default());
    Ok(())
}
