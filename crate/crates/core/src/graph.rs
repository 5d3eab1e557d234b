//! The aggregated co-occurrence network and its text exports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::character::CharacterId;
use crate::error::{Error, Result};
use crate::ingest::SceneRecord;

/// Undirected graph with integer weights counting shared scenes.
///
/// Edge keys are stored with the lexicographically smaller endpoint first,
/// so symmetry holds by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SocialGraph {
    nodes: BTreeSet<CharacterId>,
    edges: BTreeMap<(CharacterId, CharacterId), u64>,
}

fn edge_key(a: &CharacterId, b: &CharacterId) -> (CharacterId, CharacterId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl SocialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: CharacterId) {
        self.nodes.insert(id);
    }

    /// Adds `weight` to the edge between `a` and `b`, creating both nodes.
    /// Self-loops and zero weights are ignored.
    pub fn add_weight(&mut self, a: &CharacterId, b: &CharacterId, weight: u64) {
        if a == b || weight == 0 {
            return;
        }
        self.nodes.insert(a.clone());
        self.nodes.insert(b.clone());
        *self.edges.entry(edge_key(a, b)).or_insert(0) += weight;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CharacterId> {
        self.nodes.iter()
    }

    pub fn contains(&self, id: &CharacterId) -> bool {
        self.nodes.contains(id)
    }

    /// Edges as `(a, b, weight)` with `a < b`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (&CharacterId, &CharacterId, u64)> {
        self.edges.iter().map(|((a, b), w)| (a, b, *w))
    }

    pub fn weight(&self, a: &CharacterId, b: &CharacterId) -> Option<u64> {
        self.edges.get(&edge_key(a, b)).copied()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Number of incident edges.
    pub fn degree(&self, v: &CharacterId) -> Result<usize> {
        self.require(v)?;
        Ok(self.edges.keys().filter(|(a, b)| a == v || b == v).count())
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, v: &CharacterId) -> Result<u64> {
        self.require(v)?;
        Ok(self
            .edges
            .iter()
            .filter(|((a, b), _)| a == v || b == v)
            .map(|(_, w)| *w)
            .sum())
    }

    fn require(&self, v: &CharacterId) -> Result<()> {
        if self.nodes.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownNode(v.clone()))
        }
    }

    /// Dense view with nodes indexed in sorted order.
    pub fn topology(&self) -> Topology {
        Topology::from_graph(self)
    }

    /// Multiplies every edge weight by `factor` (> 0).
    pub fn scaled(&self, factor: u64) -> SocialGraph {
        assert!(factor > 0, "scale factor must be positive");
        SocialGraph {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(|(k, w)| (k.clone(), w * factor)).collect(),
        }
    }

    /// True when every node and edge of `self` is present in `other`
    /// with the same weight.
    pub fn is_subgraph_of(&self, other: &SocialGraph) -> bool {
        self.nodes.is_subset(&other.nodes)
            && self.edges.iter().all(|(k, w)| other.edges.get(k) == Some(w))
    }
}

/// Index-based adjacency used by the centrality algorithms.
///
/// Nodes are numbered in sorted id order; each neighbor list is sorted by
/// index, which fixes the traversal (and floating-point summation) order.
#[derive(Debug, Clone)]
pub struct Topology {
    pub ids: Vec<CharacterId>,
    pub adjacency: Vec<Vec<(usize, u64)>>,
}

impl Topology {
    fn from_graph(g: &SocialGraph) -> Self {
        let ids: Vec<CharacterId> = g.nodes.iter().cloned().collect();
        let index: HashMap<&CharacterId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for ((a, b), w) in &g.edges {
            let (ia, ib) = (index[a], index[b]);
            adjacency[ia].push((ib, *w));
            adjacency[ib].push((ia, *w));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Topology { ids, adjacency }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &CharacterId) -> Option<usize> {
        self.ids.binary_search(id).ok()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }
}

/// Aggregates scene cliques: every pair in a scene gains one unit of weight.
pub fn build_graph(scenes: &[SceneRecord]) -> SocialGraph {
    let mut g = SocialGraph::new();
    for scene in scenes {
        let members: Vec<&CharacterId> = scene.participants.iter().collect();
        for (i, a) in members.iter().enumerate() {
            g.add_node((*a).clone());
            for b in &members[i + 1..] {
                g.add_weight(a, b, 1);
            }
        }
    }
    g
}

/// Repeatedly removes nodes of degree below `min_degree` until none remain.
pub fn filter_min_degree(g: &SocialGraph, min_degree: usize) -> SocialGraph {
    if min_degree == 0 {
        return g.clone();
    }
    let topo = g.topology();
    let n = topo.len();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|v| topo.degree(v)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&v| degree[v] < min_degree).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for u in topo.neighbors(v) {
            if alive[u] {
                degree[u] -= 1;
                if degree[u] < min_degree {
                    stack.push(u);
                }
            }
        }
    }
    let keep: BTreeSet<&CharacterId> = (0..n).filter(|&v| alive[v]).map(|v| &topo.ids[v]).collect();
    SocialGraph {
        nodes: keep.iter().map(|id| (*id).clone()).collect(),
        edges: g
            .edges
            .iter()
            .filter(|((a, b), _)| keep.contains(a) && keep.contains(b))
            .map(|(k, w)| (k.clone(), *w))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    EdgeCsv,
    #[default]
    Dot,
}

impl ExportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ExportFormat::EdgeCsv => "edge-csv",
            ExportFormat::Dot => "dot",
        }
    }

    /// Conventional file extension for exported files.
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::EdgeCsv => "csv",
            ExportFormat::Dot => "dot",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-csv" => Ok(ExportFormat::EdgeCsv),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Optional per-node attributes for the DOT export.
pub type NodeAttrs = BTreeMap<CharacterId, String>;

/// Serializes the graph deterministically.
///
/// `houses` is only used by the DOT format; every key must be a node.
pub fn export_graph(g: &SocialGraph, format: ExportFormat, houses: Option<&NodeAttrs>) -> Result<String> {
    if let Some(attrs) = houses {
        if let Some(missing) = attrs.keys().find(|k| !g.contains(k)) {
            return Err(Error::UnknownNode(missing.clone()));
        }
    }
    match format {
        ExportFormat::EdgeCsv => export_edge_csv(g),
        ExportFormat::Dot => Ok(export_dot(g, houses)),
    }
}

fn export_edge_csv(g: &SocialGraph) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["source", "target", "weight"])?;
    for (a, b, w) in g.edges() {
        wtr.write_record([a.as_str(), b.as_str(), &w.to_string()])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::format("edge-csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn export_dot(g: &SocialGraph, houses: Option<&NodeAttrs>) -> String {
    let mut strength: BTreeMap<&CharacterId, u64> = g.nodes.iter().map(|n| (n, 0)).collect();
    for (a, b, w) in g.edges() {
        *strength.get_mut(a).expect("endpoint is a node") += w;
        *strength.get_mut(b).expect("endpoint is a node") += w;
    }
    let mut out = String::from("graph social {\n");
    for (node, s) in &strength {
        let _ = write!(out, "  {} [strength={s}", dot_quote(node.as_str()));
        if let Some(house) = houses.and_then(|h| h.get(*node)) {
            let _ = write!(out, ", house={}", dot_quote(house));
        }
        out.push_str("];\n");
    }
    for (a, b, w) in g.edges() {
        let _ = writeln!(out, "  {} -- {} [weight={w}];", dot_quote(a.as_str()), dot_quote(b.as_str()));
    }
    out.push_str("}\n");
    out
}
