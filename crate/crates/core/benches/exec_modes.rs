//! Sequential against parallel execution of the per-document loops.
//!
//! ```text
//! cargo bench -p evlink --bench exec_modes
//! ```

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use evlink::metrics::{score_corpus, Aggregation};
use evlink::pairs::PairStrategy;
use evlink::pipeline::{
    gold_clusterings, predict_corpus, synth, tune_threshold, Scorer, SynthConfig, SynthData,
};
use evlink::scorer::CosineThresholdModel;
use evlink::Exec;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn data() -> SynthData {
    synth(&SynthConfig {
        docs: 600,
        dim: 64,
        max_mentions: 24,
        ..Default::default()
    })
    .expect("synthetic corpus")
}

fn bench_modes(c: &mut Criterion) {
    let d = data();
    let scorer = Scorer::Cosine(CosineThresholdModel::new(0.7, None).unwrap());
    let gold = gold_clusterings(&d.test);
    let sys: Vec<_> = predict_corpus(
        &scorer,
        &d.test,
        Some(&d.embeddings),
        PairStrategy::AllPreceding,
        Exec::Sequential,
    )
    .unwrap()
    .into_iter()
    .map(|p| p.clustering)
    .collect();
    let grid: Vec<f64> = (0..=100).map(|k| f64::from(k) / 100.0).collect();

    let mut g = c.benchmark_group("score_corpus");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                score_corpus(black_box(&gold), black_box(&sys), Aggregation::Micro, exec).unwrap()
            })
        });
    }
    g.finish();

    let mut g = c.benchmark_group("predict_corpus");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                predict_corpus(
                    &scorer,
                    black_box(&d.test),
                    Some(&d.embeddings),
                    PairStrategy::AllPreceding,
                    exec,
                )
                .unwrap()
            })
        });
    }
    g.finish();

    let mut g = c.benchmark_group("tune_threshold");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                tune_threshold(
                    None,
                    black_box(&d.dev),
                    &d.embeddings,
                    PairStrategy::AllPreceding,
                    &grid,
                    Aggregation::Micro,
                    exec,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
