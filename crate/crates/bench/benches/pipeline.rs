use castnet_core::centrality::{betweenness, raw_features};
use castnet_core::evaluation::{repeated_cv, CvConfig};
use castnet_core::graph::build_graph;
use castnet_core::model::{train_svm, LabeledDataset, TrainOptions};
use castnet_core::{CharacterId, FeatureMatrix, SceneRecord, N_FEATURES};
use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// About the size of a few seasons of a drama: 600 scenes over 400 characters.
fn synthetic_scenes(n_scenes: usize, n_characters: usize, seed: u64) -> Vec<SceneRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_scenes)
        .map(|i| {
            let size = rng.gen_range(1..=8);
            SceneRecord {
                episode_id: format!("e{}", i / 20),
                scene_index: (i % 20) as u32,
                participants: (0..size)
                    .map(|_| {
                        // skewed toward a core cast
                        let r: f64 = rng.gen();
                        CharacterId::new(format!("c{:03}", (r * r * n_characters as f64) as usize))
                    })
                    .collect(),
            }
        })
        .collect()
}

fn bench_graph(c: &mut Criterion) {
    let scenes = synthetic_scenes(600, 400, 1);
    c.bench_function("build_graph/600_scenes", |b| b.iter(|| build_graph(black_box(&scenes))));

    let g = build_graph(&scenes);
    let topo = g.topology();
    c.bench_function("betweenness/400_nodes", |b| b.iter(|| betweenness(black_box(&topo))));

    let roster: Vec<CharacterId> = g.nodes().take(94).cloned().collect();
    c.bench_function("raw_features/94_roster", |b| b.iter(|| raw_features(black_box(&g), &roster).unwrap()));
}

fn dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roster = (0..n).map(|i| CharacterId::new(format!("c{i:03}"))).collect();
    let mut labels = Vec::with_capacity(n);
    let rows = (0..n)
        .map(|_| {
            let mut row = [0.0; N_FEATURES];
            row.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            labels.push(row[0] + 0.5 * rng.gen_range(-1.0..1.0) > 0.0);
            row
        })
        .collect();
    LabeledDataset::new(FeatureMatrix::raw(roster, rows), labels).unwrap()
}

fn bench_model(c: &mut Criterion) {
    let data = dataset(94, 2);
    let opts = TrainOptions::default();
    c.bench_function("train_svm/94x7", |b| b.iter(|| train_svm(black_box(&data), &opts).unwrap()));

    let cfg = CvConfig { folds: 5, repetitions: 10, seed: 0 };
    c.bench_function("repeated_cv/94x7_5fold_10reps", |b| {
        b.iter(|| repeated_cv(black_box(&data), &cfg, &opts).unwrap())
    });
}

criterion_group!(benches, bench_graph, bench_model);
criterion_main!(benches);
