//! Per-node network features.
//!
//! Betweenness, clustering, closeness and core number read the unweighted
//! topology. Only strength and eigencentrality use edge weights.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::character::CharacterId;
use crate::error::{Error, Result};
use crate::graph::{SocialGraph, Topology};

pub const N_FEATURES: usize = 7;

/// Column order of every feature table and model weight vector.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "degree",
    "strength",
    "clustering",
    "betweenness",
    "closeness",
    "eigencentrality",
    "core_number",
];

const EIGEN_TOLERANCE: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub degree: usize,
    pub strength: u64,
    pub clustering: f64,
    pub betweenness: f64,
    pub closeness: f64,
    pub eigencentrality: f64,
    pub core_number: usize,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.degree as f64,
            self.strength as f64,
            self.clustering,
            self.betweenness,
            self.closeness,
            self.eigencentrality,
            self.core_number as f64,
        ]
    }
}

fn node_index(topo: &Topology, v: &CharacterId) -> Result<usize> {
    topo.index_of(v).ok_or_else(|| Error::UnknownNode(v.clone()))
}

/// Local clustering coefficient of `v`, ignoring weights.
pub fn clustering(g: &SocialGraph, v: &CharacterId) -> Result<f64> {
    let topo = g.topology();
    let idx = node_index(&topo, v)?;
    Ok(clustering_at(&topo, idx))
}

fn clustering_at(topo: &Topology, v: usize) -> f64 {
    let neigh: Vec<usize> = topo.neighbors(v).collect();
    let k = neigh.len();
    if k < 2 {
        return 0.0;
    }
    let mut links = 0usize;
    for (i, &a) in neigh.iter().enumerate() {
        for &b in &neigh[i + 1..] {
            if topo.adjacency[a].binary_search_by_key(&b, |&(u, _)| u).is_ok() {
                links += 1;
            }
        }
    }
    links as f64 / (k * (k - 1) / 2) as f64
}

fn into_map<T: Copy>(topo: &Topology, values: &[T]) -> BTreeMap<CharacterId, T> {
    topo.ids.iter().cloned().zip(values.iter().copied()).collect()
}

/// Brandes betweenness over hop-count shortest paths, each unordered pair
/// counted once.
pub fn betweenness_all(g: &SocialGraph) -> BTreeMap<CharacterId, f64> {
    let topo = g.topology();
    into_map(&topo, &betweenness(&topo))
}

/// Index-level betweenness. Sources are processed in parallel on the
/// current rayon pool, then reduced in source order so the result does not
/// depend on the thread count.
pub fn betweenness(topo: &Topology) -> Vec<f64> {
    let n = topo.len();
    let per_source: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| source_dependency(topo, s)).collect();
    let mut total = vec![0.0; n];
    for delta in &per_source {
        for (t, d) in total.iter_mut().zip(delta) {
            *t += d;
        }
    }
    // every unordered pair was accumulated from both endpoints
    total.iter_mut().for_each(|t| *t /= 2.0);
    total
}

fn source_dependency(topo: &Topology, s: usize) -> Vec<f64> {
    let n = topo.len();
    let mut order = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist: Vec<Option<usize>> = vec![None; n];
    sigma[s] = 1.0;
    dist[s] = Some(0);

    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        let dv = dist[v].expect("queued nodes have a distance");
        for w in topo.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
            if dist[w] == Some(dv + 1) {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }

    let mut delta = vec![0.0f64; n];
    while let Some(w) = order.pop() {
        let coeff = (1.0 + delta[w]) / sigma[w];
        for &v in &preds[w] {
            delta[v] += sigma[v] * coeff;
        }
    }
    delta[s] = 0.0;
    delta
}

fn bfs_distances(topo: &Topology, s: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; topo.len()];
    dist[s] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].expect("queued nodes have a distance");
        for w in topo.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Harmonic closeness: the sum of `1/d(v,u)` over reachable `u != v`.
pub fn closeness_all(g: &SocialGraph) -> BTreeMap<CharacterId, f64> {
    let topo = g.topology();
    into_map(&topo, &closeness(&topo))
}

pub fn closeness(topo: &Topology) -> Vec<f64> {
    (0..topo.len())
        .into_par_iter()
        .map(|v| {
            bfs_distances(topo, v)
                .into_iter()
                .flatten()
                .filter(|&d| d > 0)
                .map(|d| 1.0 / d as f64)
                .sum()
        })
        .collect()
}

/// Result of the per-component power iteration.
#[derive(Debug, Clone)]
pub struct Eigencentrality {
    pub values: Vec<f64>,
    /// Components (as node lists) that hit the iteration cap.
    pub unconverged: Vec<Vec<usize>>,
}

/// Weighted eigenvector centrality, max-normalized to 1 inside every
/// connected component. Isolated nodes get 0.
pub fn eigencentrality_all(g: &SocialGraph) -> BTreeMap<CharacterId, f64> {
    let topo = g.topology();
    into_map(&topo, &eigencentrality(&topo).values)
}

/// Power iteration on `A + I` per component. The shift leaves the
/// eigenvectors unchanged and keeps bipartite components (stars, paths)
/// from oscillating between the `+λ` and `-λ` eigenvectors.
pub fn eigencentrality(topo: &Topology) -> Eigencentrality {
    let n = topo.len();
    let mut values = vec![0.0; n];
    let mut unconverged = Vec::new();
    let mut seen = vec![false; n];

    for start in 0..n {
        if seen[start] {
            continue;
        }
        let comp: Vec<usize> = bfs_distances(topo, start)
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|_| i))
            .collect();
        comp.iter().for_each(|&i| seen[i] = true);
        if comp.len() < 2 {
            continue;
        }

        let mut x: Vec<f64> = vec![1.0; n];
        let mut converged = false;
        for _ in 0..EIGEN_MAX_ITER {
            let mut y = vec![0.0; n];
            for &v in &comp {
                let mut acc = x[v];
                for &(u, w) in &topo.adjacency[v] {
                    acc += w as f64 * x[u];
                }
                y[v] = acc;
            }
            let max = comp.iter().map(|&v| y[v]).fold(0.0, f64::max);
            let mut change = 0.0f64;
            for &v in &comp {
                y[v] /= max;
                change = change.max((y[v] - x[v]).abs());
            }
            x = y;
            if change < EIGEN_TOLERANCE {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!(
                "eigencentrality: component of {} nodes did not converge in {EIGEN_MAX_ITER} iterations",
                comp.len()
            );
            unconverged.push(comp.clone());
        }
        for &v in &comp {
            values[v] = x[v];
        }
    }
    Eigencentrality { values, unconverged }
}

/// Core numbers from min-degree peeling on the unweighted topology.
pub fn core_number_all(g: &SocialGraph) -> BTreeMap<CharacterId, usize> {
    let topo = g.topology();
    into_map(&topo, &core_numbers(&topo))
}

pub fn core_numbers(topo: &Topology) -> Vec<usize> {
    let n = topo.len();
    let mut degree: Vec<usize> = (0..n).map(|v| topo.degree(v)).collect();
    let mut queue: std::collections::BTreeSet<(usize, usize)> = (0..n).map(|v| (degree[v], v)).collect();
    let mut removed = vec![false; n];
    let mut core = vec![0; n];
    let mut level = 0;
    while let Some((d, v)) = queue.pop_first() {
        level = level.max(d);
        core[v] = level;
        removed[v] = true;
        for u in topo.neighbors(v) {
            if !removed[u] {
                queue.remove(&(degree[u], u));
                degree[u] -= 1;
                queue.insert((degree[u], u));
            }
        }
    }
    core
}

/// Raw (unstandardized) features for every roster member, in roster order.
pub fn raw_features(g: &SocialGraph, roster: &[CharacterId]) -> Result<Vec<FeatureVector>> {
    let topo = g.topology();
    let idx: Vec<usize> = roster.iter().map(|id| node_index(&topo, id)).collect::<Result<_>>()?;

    let betweenness = betweenness(&topo);
    let closeness = closeness(&topo);
    let eigen = eigencentrality(&topo).values;
    let cores = core_numbers(&topo);

    Ok(idx
        .into_iter()
        .map(|v| FeatureVector {
            degree: topo.degree(v),
            strength: topo.adjacency[v].iter().map(|&(_, w)| w).sum(),
            clustering: clustering_at(&topo, v),
            betweenness: betweenness[v],
            closeness: closeness[v],
            eigencentrality: eigen[v],
            core_number: cores[v],
        })
        .collect())
}

/// Population mean and standard deviation per column. A constant column is
/// stored with `std == 0` and maps to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub means: [f64; N_FEATURES],
    pub stds: [f64; N_FEATURES],
}

impl ColumnStats {
    pub fn identity() -> Self {
        ColumnStats { means: [0.0; N_FEATURES], stds: [1.0; N_FEATURES] }
    }

    pub fn fit(rows: &[[f64; N_FEATURES]]) -> Self {
        let n = rows.len() as f64;
        let mut means = [0.0; N_FEATURES];
        let mut stds = [0.0; N_FEATURES];
        if rows.is_empty() {
            return ColumnStats { means, stds };
        }
        for j in 0..N_FEATURES {
            let first = rows[0][j];
            if rows.iter().all(|r| r[j] == first) {
                means[j] = first;
                continue;
            }
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = var.sqrt();
        }
        ColumnStats { means, stds }
    }

    pub fn transform(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut z = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            if self.stds[j] > 0.0 {
                z[j] = (row[j] - self.means[j]) / self.stds[j];
            }
        }
        z
    }

    /// Inverse of [`transform`](Self::transform); constant columns come back
    /// as their stored mean.
    pub fn inverse(&self, z: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut row = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            row[j] = self.means[j] + z[j] * self.stds[j];
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub roster: Vec<CharacterId>,
    pub rows: Vec<[f64; N_FEATURES]>,
    pub standardized: bool,
    /// Present when `standardized`; the transform that produced `rows`.
    pub column_stats: Option<ColumnStats>,
}

impl FeatureMatrix {
    pub fn raw(roster: Vec<CharacterId>, rows: Vec<[f64; N_FEATURES]>) -> Self {
        assert_eq!(roster.len(), rows.len(), "one row per roster entry");
        FeatureMatrix { roster, rows, standardized: false, column_stats: None }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// z-scores a raw matrix with its own column statistics.
    pub fn standardize(&self) -> FeatureMatrix {
        if self.standardized {
            return self.clone();
        }
        let stats = ColumnStats::fit(&self.rows);
        FeatureMatrix {
            roster: self.roster.clone(),
            rows: self.rows.iter().map(|r| stats.transform(r)).collect(),
            standardized: true,
            column_stats: Some(stats),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            roster: indices.iter().map(|&i| self.roster[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            standardized: self.standardized,
            column_stats: self.column_stats.clone(),
        }
    }
}

/// Computes all seven features for `roster` and standardizes the columns.
pub fn assemble_features(g: &SocialGraph, roster: &[CharacterId]) -> Result<FeatureMatrix> {
    if roster.is_empty() {
        return Err(Error::Config("roster is empty".into()));
    }
    let rows = raw_features(g, roster)?.iter().map(FeatureVector::to_array).collect();
    Ok(FeatureMatrix::raw(roster.to_vec(), rows).standardize())
}
