//! Dataset files: canonical JSON lines (read/write) and Ma-style propagation
//! tree directories (read only).
//!
//! Canonical record, one per line:
//!
//! ```text
//! {"id": str, "label": str, "event": str|null,
//!  "nodes": [{"uid": str, "text": str, "t": float}], "edges": [[parent, child]]}
//! ```
//!
//! A Ma-tree directory holds one `<claim_id>.txt` per claim (directly or under
//! `tree/`) with lines `['uid', 'tweet_id', 't']->['uid', 'tweet_id', 't']`,
//! a `label.txt` of `label:claim_id` lines, and optionally
//! `source_tweets.txt` of `claim_id<TAB>text` lines.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::{Claim, Dataset, Edge, LabelSet, TweetNode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    CanonicalJsonl,
    MaTree,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" | "canonical-jsonl" | "jsonl" => Ok(Format::CanonicalJsonl),
            "ma-tree" | "matree" => Ok(Format::MaTree),
            other => Err(Error::Config(format!("unknown dataset format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: Format,
    pub label_set: LabelSet,
    /// Reject the whole file on the first invalid claim instead of skipping it.
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: Format::CanonicalJsonl,
            label_set: LabelSet::four_class(),
            strict: true,
        }
    }
}

/// What the loader skipped or repaired.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReport {
    /// `(claim id, reason)` for every claim left out of the dataset.
    pub skipped: Vec<(String, String)>,
    /// Nodes whose missing timestamp was replaced by their position index.
    pub missing_times: usize,
    /// Self-loops and repeated edges removed while parsing Ma-tree files.
    pub dropped_edges: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    uid: String,
    text: String,
    t: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClaimRecord {
    id: String,
    label: String,
    event: Option<String>,
    nodes: Vec<NodeRecord>,
    edges: Vec<[usize; 2]>,
}

pub fn load_claims(path: impl AsRef<Path>, options: &LoadOptions) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let (claims, report) = match options.format {
        Format::CanonicalJsonl => read_jsonl(path, options)?,
        Format::MaTree => read_ma_tree(path, options)?,
    };
    if claims.is_empty() {
        return Err(Error::Structural(format!(
            "{} yielded no valid claims",
            path.display()
        )));
    }
    Ok((Dataset::new(claims, options.label_set.clone())?, report))
}

fn admit(claim: Claim, strict: bool, claims: &mut Vec<Claim>, report: &mut LoadReport) -> Result<()> {
    match claim.validate() {
        Ok(()) => claims.push(claim),
        Err(e) if strict => return Err(e),
        Err(e) => report.skipped.push((claim.id.clone(), e.to_string())),
    }
    Ok(())
}

fn read_jsonl(path: &Path, options: &LoadOptions) -> Result<(Vec<Claim>, LoadReport)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut claims = Vec::new();
    let mut report = LoadReport::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{}:{}", path.display(), lineno + 1);
        let record: ClaimRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            location: location.clone(),
            message: e.to_string(),
        })?;
        let label = options.label_set.parse(&record.label).ok_or_else(|| Error::Parse {
            location: location.clone(),
            message: format!("claim {}: unknown label {:?}", record.id, record.label),
        })?;
        let claim = Claim {
            id: record.id,
            label,
            event: record.event,
            nodes: record
                .nodes
                .into_iter()
                .map(|n| TweetNode {
                    uid: n.uid,
                    text: n.text,
                    time: n.t,
                })
                .collect(),
            edges: record.edges.into_iter().map(|[p, c]| Edge::new(p, c)).collect(),
        };
        admit(claim, options.strict, &mut claims, &mut report)?;
    }
    Ok((claims, report))
}

fn record_of(claim: &Claim, label_set: &LabelSet) -> ClaimRecord {
    ClaimRecord {
        id: claim.id.clone(),
        label: label_set.name(claim.label).to_string(),
        event: claim.event.clone(),
        nodes: claim
            .nodes
            .iter()
            .map(|n| NodeRecord {
                uid: n.uid.clone(),
                text: n.text.clone(),
                t: n.time,
            })
            .collect(),
        edges: claim.edges.iter().map(|e| [e.parent, e.child]).collect(),
    }
}

/// Writes `dataset` as canonical JSON lines.
pub fn write_claims(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for claim in &dataset.claims {
        let line = serde_json::to_string(&record_of(claim, &dataset.label_set))
            .map_err(|e| Error::Numeric(format!("cannot serialize claim {}: {e}", claim.id)))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

type Triple = (String, String, Option<f64>);

fn parse_ma_side(side: &str) -> Option<Triple> {
    let inner = side.trim().strip_prefix('[')?.strip_suffix(']')?;
    let fields: Vec<String> = inner
        .split(',')
        .map(|f| {
            let f = f.trim();
            f.strip_prefix('\'')
                .and_then(|f| f.strip_suffix('\''))
                .or_else(|| f.strip_prefix('"').and_then(|f| f.strip_suffix('"')))
                .map(str::to_string)
        })
        .collect::<Option<_>>()?;
    let [uid, tweet, t]: [String; 3] = fields.try_into().ok()?;
    if uid.is_empty() || tweet.is_empty() {
        return None;
    }
    let time = match t.trim() {
        "" | "None" | "none" | "nan" | "NaN" => None,
        raw => Some(raw.parse::<f64>().ok().filter(|v| v.is_finite())?),
    };
    Some((uid, tweet, time))
}

/// Parses one Ma-tree file into a claim with a placeholder label.
fn parse_ma_tree(id: &str, path: &Path, text: &str, report: &mut LoadReport) -> Result<Claim> {
    let mut parsed: Vec<(Triple, Triple)> = Vec::new();
    let mut malformed = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sides = line.split_once("->");
        match sides.and_then(|(a, b)| Some((parse_ma_side(a)?, parse_ma_side(b)?))) {
            Some(pair) => parsed.push(pair),
            None => malformed.push(lineno + 1),
        }
    }
    if !malformed.is_empty() {
        return Err(Error::Parse {
            location: path.display().to_string(),
            message: format!("malformed lines {malformed:?}"),
        });
    }
    let is_root = |t: &Triple| t.0 == "ROOT" && t.1 == "ROOT";
    let roots: Vec<&Triple> = parsed.iter().filter(|(p, _)| is_root(p)).map(|(_, c)| c).collect();
    let root = match roots.as_slice() {
        [root] => (*root).clone(),
        [] => return Err(Error::invalid(id, "tree has no ROOT line")),
        _ => return Err(Error::invalid(id, "tree has more than one ROOT line")),
    };

    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut times: Vec<Option<f64>> = Vec::new();
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut intern = |t: &Triple, index: &mut HashMap<(String, String), usize>| -> usize {
        let key = (t.0.clone(), t.1.clone());
        *index.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            times.push(t.2);
            keys.len() - 1
        })
    };
    intern(&root, &mut index);
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (parent, child) in parsed.iter().filter(|(p, _)| !is_root(p)) {
        let p = intern(parent, &mut index);
        let c = intern(child, &mut index);
        if p == c || !seen.insert((p, c)) {
            report.dropped_edges += 1;
            continue;
        }
        edges.push(Edge::new(p, c));
    }
    let nodes = keys
        .iter()
        .zip(&times)
        .enumerate()
        .map(|(pos, ((user, tweet), time))| {
            let time = time.unwrap_or_else(|| {
                report.missing_times += 1;
                pos as f64
            });
            TweetNode {
                uid: format!("{user}:{tweet}"),
                text: String::new(),
                time,
            }
        })
        .collect();
    Ok(Claim {
        id: id.to_string(),
        label: crate::cascade::Label(0),
        event: None,
        nodes,
        edges,
    })
}

fn read_label_file(path: &Path, label_set: &LabelSet) -> Result<BTreeMap<String, crate::cascade::Label>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{}:{}", path.display(), lineno + 1);
        let (raw_label, id) = line.split_once(':').ok_or_else(|| Error::Parse {
            location: location.clone(),
            message: "expected label:claim_id".into(),
        })?;
        let label = label_set.parse(raw_label).ok_or_else(|| Error::Parse {
            location,
            message: format!("unknown label {:?}", raw_label.trim()),
        })?;
        labels.insert(id.trim().to_string(), label);
    }
    Ok(labels)
}

fn tree_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let tree_dir = dir.join("tree");
    let scan = if tree_dir.is_dir() { tree_dir } else { dir.to_path_buf() };
    let entries = fs::read_dir(&scan).map_err(|e| Error::io(&scan, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&scan, e))?.path();
        let is_txt = path.extension().is_some_and(|e| e == "txt");
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if is_txt && path.is_file() && stem != "label" && stem != "source_tweets" {
            files.push((stem, path));
        }
    }
    files.sort();
    Ok(files)
}

fn read_ma_tree(dir: &Path, options: &LoadOptions) -> Result<(Vec<Claim>, LoadReport)> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let labels = read_label_file(&dir.join("label.txt"), &options.label_set)?;
    let sources_path = dir.join("source_tweets.txt");
    let mut sources = HashMap::new();
    if sources_path.is_file() {
        let text = fs::read_to_string(&sources_path).map_err(|e| Error::io(&sources_path, e))?;
        for line in text.lines() {
            if let Some((id, body)) = line.split_once('\t') {
                sources.insert(id.trim().to_string(), body.to_string());
            }
        }
    }

    let mut report = LoadReport::default();
    let mut claims = Vec::new();
    let files = tree_files(dir)?;
    let present: HashSet<&str> = files.iter().map(|(id, _)| id.as_str()).collect();
    for (id, path) in &files {
        let Some(&label) = labels.get(id) else {
            let reason = "no entry in label.txt".to_string();
            if options.strict {
                return Err(Error::invalid(id, reason));
            }
            report.skipped.push((id.clone(), reason));
            continue;
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut claim = match parse_ma_tree(id, path, &text, &mut report) {
            Ok(c) => c,
            Err(e @ Error::Validation { .. }) if !options.strict => {
                report.skipped.push((id.clone(), e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        claim.label = label;
        if let Some(body) = sources.get(id) {
            claim.nodes[0].text = body.clone();
        }
        admit(claim, options.strict, &mut claims, &mut report)?;
    }
    for id in labels.keys().filter(|id| !present.contains(id.as_str())) {
        report.skipped.push((id.clone(), "label without tree file".into()));
    }
    Ok((claims, report))
}
