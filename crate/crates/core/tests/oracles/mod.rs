//! Brute-force reference implementations used by the integration tests.
//!
//! Nothing here calls into the algorithms it checks; the only shared piece
//! is the `SocialGraph` container used to build inputs.

#![allow(dead_code)]

use castnet_core::{CharacterId, SocialGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn node_name(i: usize) -> CharacterId {
    CharacterId::new(format!("n{i:02}"))
}

/// Erdős–Rényi graph on `n` nodes named `n00..`, integer weights in 1..=4.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> SocialGraph {
    let mut g = SocialGraph::new();
    for i in 0..n {
        g.add_node(node_name(i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(p) {
                g.add_weight(&node_name(i), &node_name(j), r.gen_range(1..=4));
            }
        }
    }
    g
}

/// Dense adjacency matrix in sorted-name order (which matches `n00..`).
pub fn adjacency(g: &SocialGraph) -> (Vec<CharacterId>, Vec<Vec<bool>>) {
    let ids: Vec<CharacterId> = g.nodes().cloned().collect();
    let n = ids.len();
    let mut a = vec![vec![false; n]; n];
    for (u, v, _) in g.edges() {
        let i = ids.iter().position(|x| x == u).unwrap();
        let j = ids.iter().position(|x| x == v).unwrap();
        a[i][j] = true;
        a[j][i] = true;
    }
    (ids, a)
}

/// All-pairs hop distances by Floyd–Warshall; `None` = unreachable.
pub fn floyd_warshall(a: &[Vec<bool>]) -> Vec<Vec<Option<usize>>> {
    let n = a.len();
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some(0);
        for j in 0..n {
            if a[i][j] {
                d[i][j] = Some(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |cur| x + y < cur) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

/// Enumerates every shortest path explicitly and counts, for every other
/// node, the fraction of `s–t` shortest paths through it, summed over
/// unordered pairs.
pub fn brute_betweenness(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    let d = floyd_warshall(a);
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let Some(len) = d[s][t] else { continue };
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if last == t {
                    paths.push(path);
                    continue;
                }
                if path.len() > len {
                    continue;
                }
                for next in 0..n {
                    if a[last][next] && !path.contains(&next) {
                        let mut p = path.clone();
                        p.push(next);
                        stack.push(p);
                    }
                }
            }
            let shortest: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == len + 1).collect();
            let total = shortest.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count() as f64;
                bc[v] += through / total;
            }
        }
    }
    bc
}

/// Triangle enumeration over all neighbor pairs.
pub fn brute_clustering(a: &[Vec<bool>]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|v| {
            let neigh: Vec<usize> = (0..n).filter(|&u| a[v][u]).collect();
            let k = neigh.len();
            if k < 2 {
                return 0.0;
            }
            let mut tri = 0;
            for i in 0..k {
                for j in i + 1..k {
                    if a[neigh[i]][neigh[j]] {
                        tri += 1;
                    }
                }
            }
            tri as f64 / (k * (k - 1) / 2) as f64
        })
        .collect()
}

/// Core number as the largest `k` for which the node survives repeated
/// deletion of nodes with fewer than `k` surviving neighbors.
pub fn brute_core_numbers(a: &[Vec<bool>]) -> Vec<usize> {
    let n = a.len();
    let mut core = vec![0; n];
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] && (0..n).filter(|&u| alive[u] && a[v][u]).count() < k {
                    alive[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}

pub fn brute_harmonic(a: &[Vec<bool>]) -> Vec<f64> {
    let d = floyd_warshall(a);
    (0..a.len())
        .map(|v| d[v].iter().flatten().filter(|&&x| x > 0).map(|&x| 1.0 / x as f64).sum())
        .collect()
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> (Vec<f64>, f64) {
        let a: Vec<f64> = v.iter().zip(y).map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c)).collect();
        let s = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
        (a, s)
    };
    // yᵀα(λ) is non-increasing in λ
    let mut lo = -1.0;
    let mut hi = 1.0;
    while at(lo).1 < 0.0 {
        lo *= 2.0;
    }
    while at(hi).1 > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi)).0
}

/// Dense accelerated projected-gradient solver for the soft-margin dual.
/// Returns the maximized dual objective `Σα − ½αᵀQα`.
pub fn qp_dual_objective(x: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> f64 {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum::<f64>()).collect())
        .collect();
    // Frobenius norm bounds the largest eigenvalue
    let lipschitz = q.iter().flatten().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let step = 1.0 / lipschitz;
    let objective = |a: &[f64]| -> f64 {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };

    let mut alpha = vec![0.0; n];
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    let mut best = objective(&alpha);
    for _ in 0..iterations {
        // gradient of the minimization form ½αᵀQα − Σα
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * momentum[j]).sum::<f64>() - 1.0).collect();
        let trial: Vec<f64> = momentum.iter().zip(&grad).map(|(m, g)| m - step * g).collect();
        let next = project(&trial, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let value = objective(&next);
        if value < best {
            // adaptive restart
            momentum = alpha.clone();
            t = 1.0;
            continue;
        }
        best = value;
        momentum = next.iter().zip(&alpha).map(|(a, p)| a + (t - 1.0) / t_next * (a - p)).collect();
        alpha = next;
        t = t_next;
    }
    best
}

/// Random classification problem with both classes present.
pub fn random_problem(r: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
        let dir: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|xi| {
                let s: f64 = xi.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() + r.gen_range(-0.7..0.7);
                if s > 0.0 { 1.0 } else { -1.0 }
            })
            .collect();
        if y.contains(&1.0) && y.contains(&-1.0) {
            return (x, y);
        }
    }
}

/// Logistic fit on fixed targets by plain gradient descent on the mean loss.
pub fn logistic_fit_gd(scores: &[f64], targets: &[f64], iterations: usize, lr: f64) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    let n = scores.len() as f64;
    for _ in 0..iterations {
        let (mut ga, mut gb) = (0.0, 0.0);
        for (&s, &t) in scores.iter().zip(targets) {
            let p = 1.0 / (1.0 + (a * s + b).exp());
            ga += s * (t - p);
            gb += t - p;
        }
        a -= lr * ga / n;
        b -= lr * gb / n;
    }
    (a, b)
}

/// Standard normal draw by Box–Muller.
pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.gen_range(f64::EPSILON..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
