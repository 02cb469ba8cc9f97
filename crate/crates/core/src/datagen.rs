//! Synthetic rumor cascades with class-dependent shape, features and text.
//!
//! Every claim is a tree grown one reply at a time. A new node picks its
//! parent among existing nodes with weight `(1 + out_degree)^branching ·
//! exp(depth_bias · depth)` taken from its class profile, and arrives an
//! exponential delay after its parent. Relevant nodes carry the class signal
//! vector plus a Gaussian topic vector with per-component standard deviation
//! `1 / sqrt(snr · d0)`. A reply's topic has correlation `stance` with its
//! parent's topic: positive for agreeing replies, negative for denials, so
//! the class also shows in how neighbors relate. Irrelevant nodes
//! attach anywhere and carry noise of unit expected norm only. Node texts mix
//! class-specific and shared words in proportion to the SNR, so TF-IDF
//! features see a comparable signal.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::cascade::{topological_order, Claim, Dataset, Edge, Label, LabelSet, TweetNode};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::seed;

const SIGNAL_STREAM: u64 = 0x5349;
const CLAIM_STREAM: u64 = 0x434c;
const PERTURB_STREAM: u64 = 0x5045;
const WORDS_PER_CLASS: usize = 20;
const SHARED_WORDS: usize = 100;
const WORDS_PER_TWEET: usize = 8;

/// Shape of the cascades of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub branching: f64,
    pub depth_bias: f64,
    /// Mean reply delay in minutes.
    pub mean_delay: f64,
    /// Correlation of a reply's topic with its parent's, in `(-1, 1)`.
    pub stance: f64,
}

impl ClassProfile {
    /// A fixed cycle of contrasting profiles: broad, shallow and agreeing;
    /// deep and denying; balanced and agreeing; slow and unrelated.
    pub fn defaults(classes: usize) -> Vec<ClassProfile> {
        let cycle = [
            ClassProfile {
                branching: 1.5,
                depth_bias: -0.5,
                mean_delay: 5.0,
                stance: 0.8,
            },
            ClassProfile {
                branching: 0.0,
                depth_bias: 1.0,
                mean_delay: 20.0,
                stance: -0.8,
            },
            ClassProfile {
                branching: 1.0,
                depth_bias: 0.0,
                mean_delay: 10.0,
                stance: 0.8,
            },
            ClassProfile {
                branching: 0.5,
                depth_bias: 0.5,
                mean_delay: 30.0,
                stance: 0.0,
            },
        ];
        (0..classes).map(|c| cycle[c % cycle.len()]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub claims_per_class: usize,
    pub label_set: LabelSet,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub feature_dim: usize,
    pub snr: f64,
    /// Fraction of edges rewired after generation.
    pub edge_noise: f64,
    pub irrelevant_rate: f64,
    pub num_events: usize,
    /// One per class; empty means [`ClassProfile::defaults`].
    pub profiles: Vec<ClassProfile>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            claims_per_class: 125,
            label_set: LabelSet::four_class(),
            min_nodes: 8,
            max_nodes: 24,
            feature_dim: 32,
            snr: 0.2,
            edge_noise: 0.0,
            irrelevant_rate: 0.1,
            num_events: 5,
            profiles: Vec::new(),
            seed: 7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.claims_per_class == 0 {
            return Err(Error::Config("claims_per_class must be at least 1".into()));
        }
        if self.min_nodes < 1 || self.max_nodes < self.min_nodes {
            return Err(Error::Config(format!(
                "node range {}..={} is empty",
                self.min_nodes, self.max_nodes
            )));
        }
        if self.feature_dim < 2 {
            return Err(Error::Config("feature_dim must be at least 2".into()));
        }
        if !(self.snr > 0.0) {
            return Err(Error::Config("snr must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_noise) {
            return Err(Error::Config("edge_noise must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.irrelevant_rate) {
            return Err(Error::Config("irrelevant_rate must lie in [0, 1]".into()));
        }
        if self.num_events == 0 {
            return Err(Error::Config("num_events must be at least 1".into()));
        }
        if self.profiles.iter().any(|p| !(p.stance.abs() < 1.0) || !(p.mean_delay > 0.0)) {
            return Err(Error::Config("class profiles need |stance| < 1 and a positive delay".into()));
        }
        if !self.profiles.is_empty() && self.profiles.len() != self.label_set.len() {
            return Err(Error::Config(format!(
                "{} class profiles for {} classes",
                self.profiles.len(),
                self.label_set.len()
            )));
        }
        Ok(())
    }

    fn profiles(&self) -> Vec<ClassProfile> {
        if self.profiles.is_empty() {
            ClassProfile::defaults(self.label_set.len())
        } else {
            self.profiles.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    pub embeddings: EmbeddingTable,
    /// Unit-norm signal vector of each class.
    pub signals: Vec<Vec<f64>>,
    /// Per claim and node, whether the node is off-topic.
    pub irrelevant: Vec<Vec<bool>>,
}

fn class_signal(seed: u64, class: usize, dim: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed, &[SIGNAL_STREAM, class as u64]);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn tweet_text(rng: &mut impl Rng, class: Option<usize>, class_word_prob: f64) -> String {
    let words: Vec<String> = (0..WORDS_PER_TWEET)
        .map(|_| match class {
            Some(c) if rng.random::<f64>() < class_word_prob => {
                format!("c{c}w{:02}", rng.random_range(0..WORDS_PER_CLASS))
            }
            _ => format!("gw{:03}", rng.random_range(0..SHARED_WORDS)),
        })
        .collect();
    words.join(" ")
}

fn generate_claim(
    config: &GenConfig,
    index: usize,
    class: usize,
    profile: ClassProfile,
    signal: &[f64],
    table: &mut EmbeddingTable,
) -> Result<(Claim, Vec<bool>)> {
    let mut rng = seed::rng(config.seed, &[CLAIM_STREAM, index as u64]);
    let n = rng.random_range(config.min_nodes..=config.max_nodes);
    let d = config.feature_dim;
    let noise = Normal::new(0.0, 1.0 / (config.snr * d as f64).sqrt()).expect("positive sd");
    let unit_noise = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("positive sd");
    let delay = Exp::new(1.0 / profile.mean_delay).expect("positive rate");
    let class_word_prob = config.snr / (1.0 + config.snr);

    let mut out_degree = vec![0usize; n];
    let mut depth = vec![0usize; n];
    let mut times = vec![0.0f64; n];
    let mut irrelevant = vec![false; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for v in 1..n {
        irrelevant[v] = rng.random::<f64>() < config.irrelevant_rate;
        let parent = if irrelevant[v] {
            rng.random_range(0..v)
        } else {
            let weights: Vec<f64> = (0..v)
                .map(|u| {
                    (1.0 + out_degree[u] as f64).powf(profile.branching) * (profile.depth_bias * depth[u] as f64).exp()
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut target = rng.random::<f64>() * total;
            let mut chosen = v - 1;
            for (u, w) in weights.iter().enumerate() {
                if target < *w {
                    chosen = u;
                    break;
                }
                target -= w;
            }
            chosen
        };
        out_degree[parent] += 1;
        depth[v] = depth[parent] + 1;
        times[v] = times[parent] + delay.sample(&mut rng).max(1e-3);
        edges.push(Edge::new(parent, v));
    }

    let id = format!("claim{index:04}");
    let parent_of: Vec<usize> = std::iter::once(0).chain(edges.iter().map(|e| e.parent)).collect();
    let fresh = (1.0 - profile.stance * profile.stance).sqrt();
    let mut topics: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for v in 0..n {
        let uid = format!("c{index}_n{v}");
        let topic: Vec<f64> = if v == 0 {
            (0..d).map(|_| noise.sample(&mut rng)).collect()
        } else {
            topics[parent_of[v]]
                .iter()
                .map(|t| profile.stance * t + fresh * noise.sample(&mut rng))
                .collect()
        };
        let features: Vec<f64> = if irrelevant[v] {
            (0..d).map(|_| unit_noise.sample(&mut rng)).collect()
        } else {
            signal.iter().zip(&topic).map(|(s, t)| s + t).collect()
        };
        topics.push(topic);
        table.insert(uid.clone(), features)?;
        let text = tweet_text(&mut rng, (!irrelevant[v]).then_some(class), class_word_prob);
        nodes.push(TweetNode {
            uid,
            text,
            time: times[v],
        });
    }
    let claim = Claim {
        id,
        label: Label(class),
        event: Some(format!("event{}", index % config.num_events)),
        nodes,
        edges,
    };
    Ok((claim, irrelevant))
}

/// Generates `claims_per_class` claims for every class, interleaved by
/// class, then rewires edges when `edge_noise > 0`.
pub fn generate(config: &GenConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let classes = config.label_set.len();
    let profiles = config.profiles();
    let signals: Vec<Vec<f64>> = (0..classes)
        .map(|c| class_signal(config.seed, c, config.feature_dim))
        .collect();
    let mut table = EmbeddingTable::new(config.feature_dim);
    let mut claims = Vec::with_capacity(classes * config.claims_per_class);
    let mut irrelevant = Vec::with_capacity(claims.capacity());
    for index in 0..classes * config.claims_per_class {
        let class = index % classes;
        let (claim, flags) = generate_claim(config, index, class, profiles[class], &signals[class], &mut table)?;
        let claim = if config.edge_noise > 0.0 {
            perturb_edges(&claim, config.edge_noise, config.seed).0
        } else {
            claim
        };
        claim.validate()?;
        claims.push(claim);
        irrelevant.push(flags);
    }
    Ok(SyntheticCorpus {
        dataset: Dataset::new(claims, config.label_set.clone())?,
        embeddings: table,
        signals,
        irrelevant,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PerturbStats {
    pub edges: usize,
    /// Edges drawn for rewiring.
    pub selected: usize,
    /// Selected edges whose parent actually changed.
    pub rewired: usize,
}

impl std::ops::AddAssign for PerturbStats {
    fn add_assign(&mut self, other: Self) {
        self.edges += other.edges;
        self.selected += other.selected;
        self.rewired += other.rewired;
    }
}

fn id_hash(id: &str) -> u64 {
    id.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Each edge is independently selected with probability `rho`; a selected
/// edge gets a new parent drawn uniformly from the nodes that come earlier
/// in time order and are not already parents of the child. Edges with no
/// such candidate stay put.
pub fn perturb_edges(claim: &Claim, rho: f64, seed: u64) -> (Claim, PerturbStats) {
    let mut stats = PerturbStats {
        edges: claim.edges.len(),
        ..PerturbStats::default()
    };
    if rho <= 0.0 || claim.edges.is_empty() {
        return (claim.clone(), stats);
    }
    let n = claim.num_nodes();
    let order = topological_order(n, &claim.edges, |v| claim.nodes[v].time)
        .expect("perturb_edges requires an acyclic claim");
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let mut rng = seed::rng(seed, &[PERTURB_STREAM, id_hash(&claim.id)]);
    let mut parents = claim.parents();
    let mut edges = claim.edges.clone();
    for edge in edges.iter_mut() {
        if rng.random::<f64>() >= rho {
            continue;
        }
        stats.selected += 1;
        let child = edge.child;
        let candidates: Vec<usize> = order[..rank[child]]
            .iter()
            .copied()
            .filter(|u| !parents[child].contains(u))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let new_parent = candidates[rng.random_range(0..candidates.len())];
        let slot = parents[child]
            .iter()
            .position(|&p| p == edge.parent)
            .expect("edge parent is listed");
        parents[child][slot] = new_parent;
        edge.parent = new_parent;
        stats.rewired += 1;
    }
    let perturbed = Claim {
        edges,
        ..claim.clone()
    };
    (perturbed, stats)
}

/// [`perturb_edges`] over many claims, with summed statistics.
pub fn perturb_claims(claims: &[Claim], rho: f64, seed: u64) -> (Vec<Claim>, PerturbStats) {
    let mut total = PerturbStats::default();
    let out = claims
        .iter()
        .map(|c| {
            let (p, s) = perturb_edges(c, rho, seed);
            total += s;
            p
        })
        .collect();
    (out, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig {
            claims_per_class: 5,
            ..GenConfig::default()
        }
    }

    #[test]
    fn generated_claims_are_valid_and_balanced() {
        let corpus = generate(&small()).unwrap();
        assert_eq!(corpus.dataset.len(), 20);
        for c in &corpus.dataset.claims {
            c.validate().unwrap();
            assert!((8..=24).contains(&c.num_nodes()));
            for e in &c.edges {
                assert!(c.nodes[e.child].time > c.nodes[e.parent].time);
            }
        }
        let mut counts = [0; 4];
        for l in corpus.dataset.labels() {
            counts[l.index()] += 1;
        }
        assert_eq!(counts, [5; 4]);
    }

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = GenConfig { seed: 8, ..small() };
        assert_ne!(generate(&small()).unwrap().dataset, generate(&other).unwrap().dataset);
    }

    #[test]
    fn infeasible_node_range() {
        let bad = GenConfig {
            min_nodes: 0,
            ..small()
        };
        assert!(matches!(generate(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn chain_with_full_noise() {
        let claim = Claim {
            id: "chain".into(),
            label: Label(0),
            event: None,
            nodes: (0..3)
                .map(|i| TweetNode {
                    uid: format!("u{i}"),
                    text: String::new(),
                    time: i as f64,
                })
                .collect(),
            edges: vec![Edge::new(0, 1), Edge::new(1, 2)],
        };
        let (p, stats) = perturb_edges(&claim, 1.0, 3);
        p.validate().unwrap();
        assert_eq!(stats.selected, 2);
        assert_eq!(p.edges, vec![Edge::new(0, 1), Edge::new(0, 2)]);
        assert_eq!(perturb_edges(&claim, 0.0, 3).0, claim);
    }
}
