mod oracles;

use std::collections::{BTreeMap, BTreeSet};

use castnet_core::centrality::{betweenness_all, clustering, core_number_all};
use castnet_core::graph::{build_graph, export_graph, filter_min_degree, ExportFormat};
use castnet_core::{CharacterId, SceneRecord, SocialGraph};
use rand::Rng;

fn scene(ep: &str, idx: u32, who: &[&str]) -> SceneRecord {
    SceneRecord {
        episode_id: ep.into(),
        scene_index: idx,
        participants: who.iter().map(|&w| CharacterId::new(w)).collect(),
    }
}

#[test]
fn synthetic_corpus_total_weight() {
    let mut r = oracles::rng(600);
    let scenes: Vec<SceneRecord> = (0..600)
        .map(|i| SceneRecord {
            episode_id: format!("s{:02}", i / 30),
            scene_index: (i % 30) as u32,
            participants: (0..r.gen_range(0..=8)).map(|_| oracles::node_name(r.gen_range(0..40))).collect(),
        })
        .collect();
    let expected: u64 = scenes
        .iter()
        .map(|s| {
            let k = s.participants.len() as u64;
            if k < 2 { 0 } else { k * (k - 1) / 2 }
        })
        .sum();
    let g = build_graph(&scenes);
    assert_eq!(g.total_weight(), expected);
    let strength_sum: u64 = g.nodes().map(|v| g.strength(v).unwrap()).sum();
    assert_eq!(strength_sum, 2 * expected);
}

#[test]
fn min_degree_filter_on_random_graph() {
    let mut r = oracles::rng(50);
    let g = oracles::random_graph(&mut r, 50, 0.08);
    let f = filter_min_degree(&g, 3);
    for v in f.nodes() {
        assert!(f.degree(v).unwrap() >= 3, "{v}");
    }
    // the survivors are exactly the 3-core
    let cores = core_number_all(&g);
    let expected: BTreeSet<&CharacterId> = cores.iter().filter(|(_, &c)| c >= 3).map(|(v, _)| v).collect();
    assert_eq!(f.nodes().collect::<BTreeSet<_>>(), expected);
}

/// Minimal DOT reader for the subset the exporter emits.
fn read_dot(text: &str) -> (BTreeMap<String, BTreeMap<String, String>>, Vec<(String, String, u64)>) {
    let mut nodes = BTreeMap::new();
    let mut edges = Vec::new();
    let unquote = |s: &str| s.trim().trim_matches('"').to_string();
    let attrs = |s: &str| -> BTreeMap<String, String> {
        let inner = s.trim().trim_end_matches(';').trim().trim_start_matches('[').trim_end_matches(']');
        inner
            .split(',')
            .filter(|kv| !kv.trim().is_empty())
            .map(|kv| {
                let (k, v) = kv.split_once('=').unwrap();
                (k.trim().to_string(), v.trim().trim_matches('"').to_string())
            })
            .collect()
    };
    for line in text.lines().map(str::trim) {
        if line.starts_with("graph") || line == "}" || line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_at(line.find('[').unwrap());
        if let Some((a, b)) = head.split_once("--") {
            let w = attrs(rest)["weight"].parse().unwrap();
            edges.push((unquote(a), unquote(b), w));
        } else {
            nodes.insert(unquote(head), attrs(rest));
        }
    }
    (nodes, edges)
}

#[test]
fn triangle_dot_roundtrip() {
    let g = build_graph(&[scene("e", 0, &["a", "b", "c"])]);
    let text = export_graph(&g, ExportFormat::Dot, None).unwrap();
    let (nodes, edges) = read_dot(&text);
    assert_eq!(nodes.len(), 3);
    assert_eq!(edges.len(), 3);
    for attrs in nodes.values() {
        assert_eq!(attrs["strength"], "2");
    }
    assert!(edges.iter().all(|e| e.2 == 1));
}

#[test]
fn house_attributes_in_dot() {
    let g = build_graph(&[scene("e", 0, &["a", "b"])]);
    let houses: BTreeMap<CharacterId, String> = [(CharacterId::new("a"), "Stark".to_string())].into();
    let (nodes, _) = read_dot(&export_graph(&g, ExportFormat::Dot, Some(&houses)).unwrap());
    assert_eq!(nodes["a"]["house"], "Stark");
    assert!(!nodes["b"].contains_key("house"));
}

#[test]
fn edge_csv_matches_graph() {
    let mut r = oracles::rng(9);
    let g = oracles::random_graph(&mut r, 12, 0.3);
    let text = export_graph(&g, ExportFormat::EdgeCsv, None).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut rebuilt = SocialGraph::new();
    for rec in rd.records() {
        let rec = rec.unwrap();
        let (a, b) = (CharacterId::new(&rec[0]), CharacterId::new(&rec[1]));
        rebuilt.add_weight(&a, &b, rec[2].parse().unwrap());
    }
    let with_edges: SocialGraph = {
        let mut h = SocialGraph::new();
        for (a, b, w) in g.edges() {
            h.add_weight(a, b, w);
        }
        h
    };
    assert_eq!(rebuilt, with_edges);
}

#[test]
fn hundred_random_graphs_against_brute_force() {
    let mut r = oracles::rng(100);
    for _ in 0..100 {
        let n = r.gen_range(2..=12);
        let p = r.gen_range(0.1..0.7);
        let g = oracles::random_graph(&mut r, n, p);
        let (ids, a) = oracles::adjacency(&g);
        let bc = betweenness_all(&g);
        let cores = core_number_all(&g);
        let bc_ref = oracles::brute_betweenness(&a);
        let cl_ref = oracles::brute_clustering(&a);
        let core_ref = oracles::brute_core_numbers(&a);
        for (i, id) in ids.iter().enumerate() {
            assert!((bc[id] - bc_ref[i]).abs() < 1e-9);
            assert!((clustering(&g, id).unwrap() - cl_ref[i]).abs() < 1e-12);
            assert_eq!(cores[id], core_ref[i]);
        }
    }
}

#[test]
fn star_hub_betweenness() {
    // star: the hub lies on every leaf pair
    let leaves = ["b", "c", "d", "e"];
    let scenes: Vec<SceneRecord> =
        leaves.iter().enumerate().map(|(i, l)| scene("e", i as u32, &["a", l])).collect();
    let bc = betweenness_all(&build_graph(&scenes));
    assert_eq!(bc[&CharacterId::new("a")], 6.0);
    assert!(leaves.iter().all(|l| bc[&CharacterId::new(*l)] == 0.0));
}
