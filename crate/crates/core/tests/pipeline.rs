use evlink::cluster::{baseline_adjacency, connected_components, BaselineRule};
use evlink::corpus::{gold_clustering, Corpus};
use evlink::metrics::Aggregation;
use evlink::nn::{Activation, DenseLayer};
use evlink::pairs::{generate_index_pairs, PairStrategy};
use evlink::pipeline::{
    evaluate, fit, predict_corpus, synth, tune_threshold, Method, PipelineConfig, RunData, Scorer,
    SynthConfig, SynthData,
};
use evlink::rng;
use evlink::scorer::{
    load_checkpoint, save_checkpoint, Checkpoint, CosineTransformModel, LogisticRegressorModel,
};
use evlink::Exec;
use rand::Rng as _;

fn small() -> SynthData {
    synth(&SynthConfig {
        docs: 40,
        dim: 6,
        ..Default::default()
    })
    .unwrap()
}

fn data(d: &SynthData) -> RunData {
    RunData {
        train: Some((d.train.clone(), d.embeddings.clone())),
        dev: Some((d.dev.clone(), d.embeddings.clone())),
        test: Some((d.test.clone(), Some(d.embeddings.clone()))),
    }
}

fn random_layer(rows: usize, cols: usize, act: Activation, rng: &mut rng::Rng) -> DenseLayer {
    let w = (0..rows * cols)
        .map(|_| rng.random_range(-0.5..0.5))
        .collect();
    let b = (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect();
    DenseLayer::new(rows, cols, w, b, act).unwrap()
}

/// Straight-line evaluation of transform, joint feature, square layer and
/// log-softmax, written out without the library's layer code.
fn by_hand(t: &DenseLayer, h: &DenseLayer, o: &DenseLayer, e1: &[f32], e2: &[f32]) -> [f64; 2] {
    let d = e1.len();
    let affine = |l: &DenseLayer, x: &[f64]| -> Vec<f64> {
        (0..l.rows())
            .map(|r| {
                let dot: f64 = (0..l.cols())
                    .map(|c| f64::from(l.weights[r * l.cols() + c]) * x[c])
                    .sum();
                dot + f64::from(l.bias[r])
            })
            .collect()
    };
    let to64 = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
    let (t1, t2) = (affine(t, &to64(e1)), affine(t, &to64(e2)));
    let mut joint = t1.clone();
    joint.extend(&t2);
    joint.extend((0..d).map(|i| t1[i] * t2[i]));
    let hidden: Vec<f64> = affine(h, &joint).into_iter().map(|z| z * z).collect();
    let z = affine(o, &hidden);
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

#[test]
fn frozen_transform_composes_with_regressor() {
    let mut rng = rng::stream(3, "composition");
    for _ in 0..50 {
        let d = rng.random_range(1..6);
        let t = random_layer(d, d, Activation::Identity, &mut rng);
        let h = random_layer(7, 3 * d, Activation::Square, &mut rng);
        let o = random_layer(2, 7, Activation::LogSoftmax, &mut rng);
        let model = LogisticRegressorModel::from_layers(
            h.clone(),
            o.clone(),
            Some(CosineTransformModel::from_layer(t.clone()).unwrap()),
        )
        .unwrap();
        let e1: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e2: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = model.decide_embeddings(&e1, &e2).unwrap().log_probs;
        let want = by_hand(&t, &h, &o, &e1, &e2);
        for k in 0..2 {
            assert!((got[k] - want[k]).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn baselines_match_their_rules() {
    let d = small();
    for rule in [
        BaselineRule::Type,
        BaselineRule::Lemma,
        BaselineRule::LemmaAndType,
    ] {
        let preds = predict_corpus(
            &Scorer::Baseline(rule),
            &d.test,
            None,
            PairStrategy::AllPreceding,
            Exec::Sequential,
        )
        .unwrap();
        for (doc, p) in d.test.documents.iter().zip(&preds) {
            let direct = connected_components(&baseline_adjacency(doc, rule));
            let canon = |c: &evlink::cluster::Clustering| {
                let mut v: Vec<Vec<String>> = c
                    .clusters
                    .iter()
                    .map(|k| {
                        let mut k = k.clone();
                        k.sort();
                        k
                    })
                    .collect();
                v.sort();
                v
            };
            assert_eq!(
                canon(&p.clustering),
                canon(&direct),
                "{rule} on {}",
                doc.doc_id
            );
        }
    }
}

#[test]
fn gold_decisions_score_perfectly() {
    let d = small();
    let (report, _) = evaluate(
        &Scorer::Baseline(BaselineRule::Singletons),
        &d.dev,
        None,
        PairStrategy::AllPreceding,
        Aggregation::Micro,
        Exec::Sequential,
    )
    .unwrap();
    assert!(report.b3.recall < 1.0);
    // Gold clustering against itself, document by document.
    for doc in &d.dev.documents {
        let g = gold_clustering(doc);
        let s = evlink::metrics::score_document(&g, &g).unwrap();
        assert_eq!((s.b3.f1, s.ceaf_e.f1), (1.0, 1.0));
    }
}

#[test]
fn threshold_sweep_is_monotone_and_picks_the_max() {
    let d = small();
    let grid: Vec<f64> = (0..=20).map(|k| f64::from(k) / 20.0).collect();
    let t = tune_threshold(
        None,
        &d.dev,
        &d.embeddings,
        PairStrategy::AllPreceding,
        &grid,
        Aggregation::Micro,
        Exec::Sequential,
    )
    .unwrap();
    let best = t
        .trace
        .iter()
        .map(|p| p.b3_muc)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(t.b3_muc, best);
    let first = t.trace.iter().find(|p| p.b3_muc == best).unwrap();
    assert_eq!(t.threshold, first.threshold);
    assert!(t.trace.windows(2).all(|w| w[0].positives >= w[1].positives));
    let par = tune_threshold(
        None,
        &d.dev,
        &d.embeddings,
        PairStrategy::AllPreceding,
        &grid,
        Aggregation::Micro,
        Exec::Parallel,
    )
    .unwrap();
    assert_eq!(t, par);
}

#[test]
fn filtered_pairs_stay_unlinked() {
    let d = small();
    let scorer = Scorer::Cosine(evlink::scorer::CosineThresholdModel::new(0.0, None).unwrap());
    let preds = predict_corpus(
        &scorer,
        &d.test,
        Some(&d.embeddings),
        PairStrategy::SameType,
        Exec::Sequential,
    )
    .unwrap();
    for (doc, p) in d.test.documents.iter().zip(&preds) {
        assert_eq!(
            p.decisions.len(),
            generate_index_pairs(doc, PairStrategy::SameType).len()
        );
        for cluster in &p.clustering.clusters {
            let types: std::collections::HashSet<_> = cluster
                .iter()
                .map(|id| {
                    doc.mentions
                        .iter()
                        .find(|m| &m.mention_id == id)
                        .unwrap()
                        .event_type
                        .clone()
                })
                .collect();
            assert_eq!(types.len(), 1, "cluster crosses event types");
        }
    }
}

#[test]
fn fitted_regressor_survives_a_checkpoint_round_trip() {
    let d = small();
    let cfg = PipelineConfig {
        method: Method::RegressorType,
        epochs: 3,
        hidden_units: 16,
        lr: 1e-3,
        parallel: false,
        ..Default::default()
    };
    let fitted = fit(&cfg, &data(&d)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    let ckpt = fitted.checkpoint().unwrap();
    save_checkpoint(&ckpt, &path).unwrap();
    let loaded = match load_checkpoint(&path).unwrap() {
        Checkpoint::Regressor(m) => m,
        other => panic!("wrong kind {other:?}"),
    };
    let strategy = PairStrategy::SameType;
    let a = predict_corpus(
        &fitted.scorer,
        &d.test,
        Some(&d.embeddings),
        strategy,
        Exec::Sequential,
    )
    .unwrap();
    let b = predict_corpus(
        &Scorer::Regressor(loaded),
        &d.test,
        Some(&d.embeddings),
        strategy,
        Exec::Sequential,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn corpus_round_trips_through_json() {
    let d = small();
    let back = Corpus::from_json(&d.train.to_json(), "train").unwrap();
    assert_eq!(back, d.train);
}
