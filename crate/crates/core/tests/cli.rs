use std::fs;
use std::path::Path;
use std::process::Command;

use ebgcn::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["ebgcn"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

fn metric(json: &str, key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.pointer(key).and_then(|x| x.as_f64()).unwrap()
}

#[test]
fn generate_is_reproducible_from_its_saved_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert_eq!(run(&["generate", "--seed", "5", "--out", path(&first)]), 0);
    let claims = read(first.join("claims.jsonl"));
    assert_eq!(claims.lines().count(), 500);
    assert!(first.join("embeddings.tsv").is_file());

    let second = dir.path().join("second");
    let saved = first.join("config.toml");
    assert_eq!(run(&["generate", "--config", path(&saved), "--out", path(&second)]), 0);
    assert_eq!(claims, read(second.join("claims.jsonl")));
    assert_eq!(read(first.join("embeddings.tsv")), read(second.join("embeddings.tsv")));
}

#[test]
fn generate_without_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["generate", "--out", path(dir.path())]), 1);
    assert!(!dir.path().join("claims.jsonl").exists());
}

/// A small dataset plus a config pointing at it.
fn toy_setup(dir: &Path, per_class: usize, extra: &str) -> String {
    let data = dir.join("data");
    let gen = write_config(dir, "gen.toml", &format!("claims_per_class = {per_class}\nsnr = 5.0\nmax_nodes = 10\n"));
    assert_eq!(run(&["generate", "--config", &gen, "--seed", "3", "--out", path(&data)]), 0);
    write_config(
        dir,
        "run.toml",
        &format!("data = \"{}\"\nfolds = 4\n{extra}", path(&data.join("claims.jsonl"))),
    )
}

#[test]
fn toy_training_run_and_gamma_validation() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_setup(dir.path(), 2, "max_epochs = 3\n");
    let out = dir.path().join("run");
    assert_eq!(run(&["train", "--config", &config, "--seed", "1", "--out", path(&out)]), 0);
    for f in ["checkpoint.bin", "history.csv", "metrics.json", "config.toml"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let history = read(out.join("history.csv"));
    assert!(history.starts_with("epoch,split,L_c,L_e,total,acc\n"));
    assert_eq!(history.lines().count(), 1 + 2 * 3);

    let bad = dir.path().join("bad");
    assert_eq!(run(&["train", "--config", &config, "--seed", "1", "--gamma", "1.5", "--out", path(&bad)]), 1);
    assert!(!bad.join("checkpoint.bin").exists());
}

#[test]
fn memorized_training_split_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_setup(
        dir.path(),
        4,
        "max_epochs = 150\npatience = 150\nlearning_rate = 0.01\neval_split = \"train\"\nval_fraction = 0.5\n",
    );
    let out = dir.path().join("run");
    assert_eq!(run(&["train", "--config", &config, "--seed", "2", "--out", path(&out)]), 0);
    assert_eq!(run(&["evaluate", "--config", &config, "--seed", "2", "--out", path(&out)]), 0);
    assert_eq!(metric(&read(out.join("metrics.json")), "/accuracy"), 1.0);
}

#[test]
fn early_detection_curve_ends_at_full_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_setup(dir.path(), 4, "max_epochs = 5\n");
    let out = dir.path().join("run");
    let common = ["--config", &config, "--seed", "4", "--out", path(&out)];
    assert_eq!(run(&[&["train"], &common[..]].concat()), 0);
    assert_eq!(run(&[&["evaluate"], &common[..]].concat()), 0);
    assert_eq!(run(&[&["early-detect", "--budget-list", "1,2,4,inf"], &common[..]].concat()), 0);
    let curve = read(out.join("curve.csv"));
    let rows: Vec<&str> = curve.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let last: Vec<&str> = rows[3].split(',').collect();
    assert_eq!(last[0], "inf");
    let accuracy = metric(&read(out.join("metrics.json")), "/accuracy");
    assert_eq!(last[2], format!("{accuracy:.6}"));
}

#[test]
fn tfidf_vocabulary_travels_with_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_setup(dir.path(), 2, "max_epochs = 2\nmax_terms = 50\n");
    let out = dir.path().join("run");
    let args = ["--config", &config, "--seed", "1", "--features", "tfidf", "--out", path(&out)];
    assert_eq!(run(&[&["train"], &args[..]].concat()), 0);
    assert!(read(out.join("vocabulary.json")).contains("terms"));
    assert_eq!(run(&[&["evaluate"], &args[..]].concat()), 0);
    let emb = ["--config", &config, "--seed", "1", "--out", path(&out)];
    assert_eq!(run(&[&["evaluate"], &emb[..]].concat()), 2);
}

#[test]
fn sweep_emits_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_setup(dir.path(), 2, "sweep_epochs = 1\nhidden = 8\n");
    let out = dir.path().join("sweep");
    assert_eq!(run(&["sweep", "--config", &config, "--seed", "1", "--out", path(&out)]), 0);
    let csv = read(out.join("sweep.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 55);
    assert!(rows.iter().all(|r| r.ends_with(',')), "{csv}");
}

#[test]
fn robustness_runs_on_a_generated_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "rob.toml",
        "claims_per_class = 5\nmax_epochs = 2\nhidden = 8\nrhos = [0.0, 0.3]\nrobustness_seeds = [1, 2]\n",
    );
    let out = dir.path().join("rob");
    assert_eq!(run(&["robustness", "--config", &config, "--seed", "7", "--out", path(&out)]), 0);
    let csv = read(out.join("robustness.csv"));
    assert!(csv.lines().count() >= 5, "{csv}");
}

#[test]
fn convert_ma_tree_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("ma");
    fs::create_dir_all(src.join("tree")).unwrap();
    fs::write(
        src.join("tree/42.txt"),
        "['ROOT', 'ROOT', '0.0']->['a', '42', '0.0']\n\
         ['a', '42', '0.0']->['b', '43', '1.5']\n\
         ['a', '42', '0.0']->['c', '44', '3.0']\n\
         ['b', '43', '1.5']->['d', '45', '7.25']\n",
    )
    .unwrap();
    fs::write(src.join("label.txt"), "non-rumor:42\n").unwrap();
    fs::write(src.join("source_tweets.txt"), "42\tsomething happened\n").unwrap();

    let out = dir.path().join("conv");
    assert_eq!(run(&["convert", path(&src), "--out", path(&out)]), 0);
    let expected = concat!(
        r#"{"id":"42","label":"NR","event":null,"nodes":["#,
        r#"{"uid":"a:42","text":"something happened","t":0.0},"#,
        r#"{"uid":"b:43","text":"","t":1.5},"#,
        r#"{"uid":"c:44","text":"","t":3.0},"#,
        r#"{"uid":"d:45","text":"","t":7.25}],"#,
        r#""edges":[[0,1],[0,2],[1,3]]}"#,
        "\n"
    );
    let converted = read(out.join("claims.jsonl"));
    assert_eq!(converted, expected);

    let again = dir.path().join("again");
    let canonical = out.join("claims.jsonl");
    assert_eq!(run(&["convert", path(&canonical), "--from", "canonical", "--out", path(&again)]), 0);
    assert_eq!(read(again.join("claims.jsonl")), converted);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(run(&["convert", path(&empty), "--out", path(&dir.path().join("x"))]), 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ebgcn");
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["generate"]), Some(1));
    assert_eq!(status(&["train", "--T", "many"]), Some(1));
    let missing = dir.path().join("nope.jsonl");
    let config = write_config(dir.path(), "c.toml", &format!("data = \"{}\"\n", path(&missing)));
    assert_eq!(status(&["train", "--config", &config, "--seed", "1"]), Some(2));
    assert_eq!(status(&["evaluate", "--config", &config, "--seed", "1", "--out", path(dir.path())]), Some(2));
}
