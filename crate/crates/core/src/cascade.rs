//! Claims, propagation graphs and cascade truncation.
//!
//! A [`Claim`] is one labeled cascade: node 0 is the source post and every
//! other node is a reply or repost reachable from it along directed
//! `(parent, child)` edges. Merges (a node with several parents) are
//! accepted; cycles are not.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Index into a [`LabelSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(pub usize);

impl Label {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The ordered class names of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
}

impl Default for LabelSet {
    fn default() -> Self {
        LabelSet::four_class()
    }
}

impl LabelSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::Config(format!(
                "a label set needs at least two classes, got {}",
                names.len()
            )));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Config("duplicate class name in label set".into()));
        }
        Ok(LabelSet { names })
    }

    /// Non-rumor, false, true and unverified rumors.
    pub fn four_class() -> Self {
        LabelSet {
            names: ["NR", "F", "T", "U"].map(String::from).to_vec(),
        }
    }

    /// False, true and unverified rumors.
    pub fn three_class() -> Self {
        LabelSet {
            names: ["F", "T", "U"].map(String::from).to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, label: Label) -> &str {
        &self.names[label.0]
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        (0..self.names.len()).map(Label)
    }

    pub fn contains(&self, label: Label) -> bool {
        label.0 < self.names.len()
    }

    /// Resolves a class name, case-insensitively, also accepting the long
    /// forms used by the Twitter15/16 label files.
    pub fn parse(&self, raw: &str) -> Option<Label> {
        let key = raw.trim().to_ascii_lowercase();
        let short = match key.as_str() {
            "non-rumor" | "non_rumor" | "nonrumor" | "non-rumour" => "nr",
            "false" => "f",
            "true" => "t",
            "unverified" => "u",
            other => other,
        };
        self.names
            .iter()
            .position(|n| n.to_ascii_lowercase() == short || n.to_ascii_lowercase() == key)
            .map(Label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetNode {
    pub uid: String,
    pub text: String,
    /// Minutes since the source post.
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
}

impl Edge {
    pub fn new(parent: usize, child: usize) -> Self {
        Edge { parent, child }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub label: Label,
    pub event: Option<String>,
    pub nodes: Vec<TweetNode>,
    pub edges: Vec<Edge>,
}

impl Claim {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Checks every structural invariant, naming the claim on failure.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let fail = |reason: String| Err(Error::invalid(&self.id, reason));
        if n == 0 {
            return fail("claim has no nodes".into());
        }
        if self.nodes[0].time != 0.0 {
            return fail(format!("source time offset is {}, expected 0", self.nodes[0].time));
        }
        if let Some((i, node)) = self
            .nodes
            .iter()
            .enumerate()
            .find(|(_, node)| !(node.time.is_finite() && node.time >= 0.0))
        {
            return fail(format!("node {i} has invalid time offset {}", node.time));
        }
        let mut uids = HashSet::with_capacity(n);
        for node in &self.nodes {
            if !uids.insert(node.uid.as_str()) {
                return fail(format!("duplicate node uid {:?}", node.uid));
            }
        }
        let mut seen = HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.parent >= n || e.child >= n {
                return fail(format!(
                    "edge ({}, {}) references a node outside 0..{n}",
                    e.parent, e.child
                ));
            }
            if e.parent == e.child {
                return fail(format!("self-loop on node {}", e.parent));
            }
            if !seen.insert((e.parent, e.child)) {
                return fail(format!("duplicate edge ({}, {})", e.parent, e.child));
            }
        }

        let children = self.children();
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &children[u] {
                if !reached[v] {
                    reached[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(v) = reached.iter().position(|r| !r) {
            return fail(format!("node {v} is unreachable from the source"));
        }
        if topological_order(n, &self.edges, |_| 0.0).is_none() {
            return fail("propagation structure contains a cycle".into());
        }
        Ok(())
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            children[e.parent].push(e.child);
        }
        children
    }

    pub fn parents(&self) -> Vec<Vec<usize>> {
        let mut parents = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            parents[e.child].push(e.parent);
        }
        parents
    }

    /// Keeps the nodes selected by `keep` that remain reachable from the
    /// source through kept nodes, with node order preserved.
    pub fn restrict(&self, keep: &[bool]) -> Claim {
        let n = self.nodes.len();
        let mut keep = keep.to_vec();
        keep[0] = true;
        let children = self.children();
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &children[u] {
                if keep[v] && !reached[v] {
                    reached[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let mut new_index = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if reached[i] {
                new_index[i] = nodes.len();
                nodes.push(node.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| reached[e.parent] && reached[e.child])
            .map(|e| Edge::new(new_index[e.parent], new_index[e.child]))
            .collect();
        Claim {
            id: self.id.clone(),
            label: self.label,
            event: self.event.clone(),
            nodes,
            edges,
        }
    }
}

/// Kahn ordering with ready nodes taken by smallest `(key, index)`; `None`
/// when the edges contain a cycle.
pub(crate) fn topological_order(
    n: usize,
    edges: &[Edge],
    key: impl Fn(usize) -> f64,
) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for e in edges {
        indegree[e.child] += 1;
        children[e.parent].push(e.child);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let (pos, _) = ready
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| key(a).total_cmp(&key(b)).then(a.cmp(&b)))
            .expect("non-empty");
        let u = ready.swap_remove(pos);
        order.push(u);
        for &v in &children[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A labeled collection of claims sharing one label set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub claims: Vec<Claim>,
    pub label_set: LabelSet,
}

impl Dataset {
    pub fn new(claims: Vec<Claim>, label_set: LabelSet) -> Result<Self> {
        if claims.is_empty() {
            return Err(Error::Structural("dataset contains no claims".into()));
        }
        if let Some(c) = claims.iter().find(|c| !label_set.contains(c.label)) {
            return Err(Error::invalid(&c.id, format!("label index {} outside label set", c.label.0)));
        }
        Ok(Dataset { claims, label_set })
    }

    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.claims.iter().map(|c| c.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Vec<Claim> {
        indices.iter().map(|&i| self.claims[i].clone()).collect()
    }
}

/// Features plus the two directed adjacencies of one claim.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationGraph {
    pub x: Tensor,
    /// Top-down propagation adjacency: `a_td[parent][child] = 1`.
    pub a_td: Tensor,
    /// Bottom-up dispersion adjacency, the transpose of `a_td`.
    pub a_bu: Tensor,
}

impl PropagationGraph {
    pub fn num_nodes(&self) -> usize {
        self.x.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    /// Builds a graph from an explicit top-down adjacency.
    pub fn from_adjacency(x: Tensor, a_td: Tensor) -> Result<Self> {
        let n = x.rows();
        if a_td.shape() != (n, n) {
            return Err(Error::Structural(format!(
                "adjacency {:?} for {n} feature rows",
                a_td.shape()
            )));
        }
        if a_td.data().iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Structural("adjacency has negative entries".into()));
        }
        let a_bu = a_td.transpose();
        Ok(PropagationGraph { x, a_td, a_bu })
    }

    /// Applies a node relabeling: node `i` of `self` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if perm.len() != n || check.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::Structural("not a permutation of the node set".into()));
        }
        let mut x = Tensor::zeros(n, self.feature_dim());
        let mut a = Tensor::zeros(n, n);
        for i in 0..n {
            x.row_mut(perm[i]).copy_from_slice(self.x.row(i));
            for j in 0..n {
                a.set(perm[i], perm[j], self.a_td.get(i, j));
            }
        }
        PropagationGraph::from_adjacency(x, a)
    }
}

/// Builds both directed adjacencies for `claim` with `features` as node rows.
pub fn build_graph(claim: &Claim, features: &Tensor) -> Result<PropagationGraph> {
    claim.validate()?;
    let n = claim.num_nodes();
    if features.rows() != n {
        return Err(Error::Structural(format!(
            "claim {} has {n} nodes but {} feature rows",
            claim.id,
            features.rows()
        )));
    }
    if !features.is_finite() {
        return Err(Error::Numeric(format!("non-finite features for claim {}", claim.id)));
    }
    let mut a_td = Tensor::zeros(n, n);
    for e in &claim.edges {
        a_td.set(e.parent, e.child, 1.0);
    }
    PropagationGraph::from_adjacency(features.clone(), a_td)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// Keep posts no later than this many minutes after the source.
    Deadline(f64),
    /// Keep the earliest posts, ties broken by node index.
    MaxTweets(usize),
}

/// Limits a claim to the part of the cascade visible under `policy`.
///
/// Node 0 is always retained. A retained node whose every path from the
/// source passes through a dropped node is dropped too, which only happens
/// when timestamps disagree with the edge direction.
pub fn truncate_claim(claim: &Claim, policy: TruncationPolicy) -> Claim {
    let n = claim.num_nodes();
    let keep: Vec<bool> = match policy {
        TruncationPolicy::Deadline(limit) => claim.nodes.iter().map(|node| node.time <= limit).collect(),
        TruncationPolicy::MaxTweets(k) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| claim.nodes[a].time.total_cmp(&claim.nodes[b].time).then(a.cmp(&b)));
            let mut keep = vec![false; n];
            for &i in order.iter().take(k.max(1)) {
                keep[i] = true;
            }
            keep
        }
    };
    claim.restrict(&keep)
}
