use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cluster::clusterings_to_jsonl;
use crate::corpus::{load_corpus, Corpus, Split};
use crate::embedding::{read_embeddings, EmbeddingTable};
use crate::metrics::{error_analysis, score_corpus, MetricReport};
use crate::pairs::{corpus_pairs, downsample_negatives, MentionPair, PairStrategy};
use crate::scorer::{
    diagnostics_of, embed_pairs, load_checkpoint, train_cosine_transform, train_logistic_regressor,
    Checkpoint, CosineDiagnostics, CosineThresholdModel, CosineTransformModel, RegressorEpoch,
    TransformEpoch,
};
use crate::{Error, Exec, Result};

use super::config::{Method, PipelineConfig};
use super::predict::{gold_clusterings, pair_outcomes, predict_corpus, DocPrediction, Scorer};
use super::tune::{tune_threshold, ThresholdTuning};

/// Loaded corpora and embeddings of a run; absent splits are `None`.
#[derive(Clone, Debug, Default)]
pub struct RunData {
    pub train: Option<(Corpus, EmbeddingTable)>,
    pub dev: Option<(Corpus, EmbeddingTable)>,
    pub test: Option<(Corpus, Option<EmbeddingTable>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformSummary {
    pub dev_before: Option<CosineDiagnostics>,
    pub dev_after: Option<CosineDiagnostics>,
    pub trace: Vec<TransformEpoch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressorSummary {
    pub best_epoch: usize,
    pub trace: Vec<RegressorEpoch>,
}

/// Everything a run produced besides the files it wrote.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: MetricReport,
    pub checkpoint: Option<Checkpoint>,
    pub transform: Option<TransformSummary>,
    pub threshold: Option<ThresholdTuning>,
    pub regressor: Option<RegressorSummary>,
    pub predictions: Vec<DocPrediction>,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct TrainingLog<'a> {
    method: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform: Option<&'a TransformSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<&'a ThresholdTuning>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regressor: Option<&'a RegressorSummary>,
}

/// Reads the corpora and embeddings `config` needs, loading each distinct
/// embeddings file once, and checks coverage.
pub fn load_run_data(config: &PipelineConfig) -> Result<RunData> {
    load_splits(config, &config.required_splits())
}

/// Like [`load_run_data`] for an explicit list of splits.
pub fn load_splits(config: &PipelineConfig, splits: &[Split]) -> Result<RunData> {
    let mut tables: BTreeMap<PathBuf, EmbeddingTable> = BTreeMap::new();
    let mut table_for = |split: Split| -> Result<EmbeddingTable> {
        let path = config
            .embeddings_for(split)
            .ok_or_else(|| Error::Config(format!("no embeddings configured for {split}")))?;
        if !tables.contains_key(path) {
            tables.insert(
                path.to_path_buf(),
                read_embeddings(path, config.embedding_dim)?,
            );
        }
        Ok(tables[path].clone())
    };
    let corpus_for = |split: Split| -> Result<Corpus> {
        let path = config
            .corpus_for(split)
            .ok_or_else(|| Error::Config(format!("no {split} corpus configured")))?;
        load_corpus(path)
    };
    let mut data = RunData::default();
    for &split in splits {
        let corpus = corpus_for(split)?;
        match split {
            Split::Train => data.train = Some((corpus, table_for(split)?)),
            Split::Dev => data.dev = Some((corpus, table_for(split)?)),
            Split::Test => {
                let table = if config.method.is_baseline() {
                    None
                } else {
                    Some(table_for(split)?)
                };
                data.test = Some((corpus, table));
            }
        }
    }
    check_coverage(&data)?;
    Ok(data)
}

fn check_coverage(data: &RunData) -> Result<()> {
    for (c, t) in [&data.train, &data.dev].into_iter().flatten() {
        t.check_coverage(c)?;
    }
    if let Some((c, Some(t))) = &data.test {
        t.check_coverage(c)?;
    }
    let dims: Vec<usize> = [&data.train, &data.dev]
        .into_iter()
        .flatten()
        .map(|(_, t)| t.dim())
        .chain(
            data.test
                .iter()
                .filter_map(|(_, t)| t.as_ref().map(EmbeddingTable::dim)),
        )
        .collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Dimension(format!(
            "splits have different embedding dims {dims:?}"
        )));
    }
    Ok(())
}

fn train_pairs(
    config: &PipelineConfig,
    corpus: &Corpus,
    strategy: PairStrategy,
) -> Result<Vec<MentionPair>> {
    let pairs = corpus_pairs(corpus, strategy)?;
    Ok(if config.negative_keep_ratio < 1.0 {
        downsample_negatives(pairs, config.negative_keep_ratio, config.seed)
    } else {
        pairs
    })
}

/// Trains a cosine transform on the train split, reporting dev
/// diagnostics before and after when a dev split is loaded.
pub fn train_transform(
    config: &PipelineConfig,
    data: &RunData,
) -> Result<(CosineTransformModel, TransformSummary)> {
    let (train, train_table) = data
        .train
        .as_ref()
        .ok_or_else(|| Error::Config("transform training needs a train split".into()))?;
    let pairs = train_pairs(config, train, PairStrategy::AllPreceding)?;
    let labeled = embed_pairs(&pairs, train_table)?;
    let dev_pairs = data
        .dev
        .as_ref()
        .map(|(dev, table)| Ok::<_, Error>((corpus_pairs(dev, PairStrategy::AllPreceding)?, table)))
        .transpose()?;
    let dev_labeled = dev_pairs
        .as_ref()
        .map(|(p, t)| embed_pairs(p, t))
        .transpose()?;
    let trained = train_cosine_transform(
        &labeled,
        &config.transform_train_config(),
        dev_labeled.as_deref(),
    )?;
    let dev_after = dev_labeled
        .as_deref()
        .map(|d| diagnostics_of(d, Some(&trained.model)))
        .transpose()?;
    if let (Some(b), Some(a)) = (&trained.initial_dev, &dev_after) {
        log::info!("dev cos delta {:?} -> {:?}", b.cos_delta, a.cos_delta);
    }
    Ok((
        trained.model,
        TransformSummary {
            dev_before: trained.initial_dev,
            dev_after,
            trace: trained.trace,
        },
    ))
}

fn obtain_transform(
    config: &PipelineConfig,
    data: &RunData,
) -> Result<Option<(CosineTransformModel, Option<TransformSummary>)>> {
    if let Some(path) = &config.cosine_transform {
        return match load_checkpoint(path)? {
            Checkpoint::CosineTransform(t) => Ok(Some((t, None))),
            _ => Err(Error::Config(format!(
                "`{}` does not hold a cosine transform checkpoint",
                path.display()
            ))),
        };
    }
    if !config.trains_transform() {
        return Ok(None);
    }
    let (t, summary) = train_transform(config, data)?;
    Ok(Some((t, Some(summary))))
}

/// Scores `scorer` on `corpus`: decide, cluster, and compare with gold.
pub fn evaluate(
    scorer: &Scorer,
    corpus: &Corpus,
    table: Option<&EmbeddingTable>,
    strategy: PairStrategy,
    mode: crate::metrics::Aggregation,
    exec: Exec,
) -> Result<(MetricReport, Vec<DocPrediction>)> {
    let predictions = predict_corpus(scorer, corpus, table, strategy, exec)?;
    let sys: Vec<_> = predictions.iter().map(|p| p.clustering.clone()).collect();
    let report = score_corpus(&gold_clusterings(corpus), &sys, mode, exec)?;
    Ok((report, predictions))
}

/// A scorer ready for prediction and how it was obtained.
#[derive(Clone, Debug)]
pub struct Fitted {
    pub scorer: Scorer,
    /// Set when the transform was trained in this run.
    pub transform: Option<TransformSummary>,
    pub threshold: Option<ThresholdTuning>,
    pub regressor: Option<RegressorSummary>,
}

impl Fitted {
    pub fn checkpoint(&self) -> Option<Checkpoint> {
        match &self.scorer {
            Scorer::Cosine(m) => Some(Checkpoint::Cosine(m.clone())),
            Scorer::Regressor(m) => Some(Checkpoint::Regressor(m.clone())),
            Scorer::Baseline(_) => None,
        }
    }
}

/// Builds the scorer for `config.method`, training and tuning as needed.
pub fn fit(config: &PipelineConfig, data: &RunData) -> Result<Fitted> {
    let exec = config.exec();
    let strategy = config.strategy();
    if let Method::Baseline(rule) = config.method {
        return Ok(Fitted {
            scorer: Scorer::Baseline(rule),
            transform: None,
            threshold: None,
            regressor: None,
        });
    }
    let (transform, summary) =
        match obtain_transform(config, data).map_err(|e| e.in_stage("train-transform"))? {
            Some((t, s)) => (Some(t), s),
            None => (None, None),
        };
    let (dev, dev_table) = data
        .dev
        .as_ref()
        .ok_or_else(|| Error::Config("a dev split is required".into()))?;

    if config.method == Method::Cosine {
        let tuning = tune_threshold(
            transform.as_ref(),
            dev,
            dev_table,
            strategy,
            &config.grid().values()?,
            config.mode,
            exec,
        )
        .map_err(|e| e.in_stage("tune-threshold"))?;
        let model = CosineThresholdModel::new(tuning.threshold, transform)?;
        return Ok(Fitted {
            scorer: Scorer::Cosine(model),
            transform: summary,
            threshold: Some(tuning),
            regressor: None,
        });
    }

    let (train, train_table) = data
        .train
        .as_ref()
        .ok_or_else(|| Error::Config("a train split is required".into()))?;
    let pairs = train_pairs(config, train, strategy)?;
    let labeled = embed_pairs(&pairs, train_table)?;
    if labeled.is_empty() {
        return Err(
            Error::Empty(format!("{} produced no training pairs", config.method))
                .in_stage("train-regressor"),
        );
    }
    let trained = train_logistic_regressor(
        &labeled,
        &config.regressor_train_config(),
        transform,
        config.hidden_units,
        |model| {
            let scorer = Scorer::Regressor(model.clone());
            let (report, _) = evaluate(&scorer, dev, Some(dev_table), strategy, config.mode, exec)?;
            Ok(report.b3_muc_average())
        },
    )
    .map_err(|e| e.in_stage("train-regressor"))?;
    log::info!("best regressor epoch {}", trained.best_epoch);
    Ok(Fitted {
        scorer: Scorer::Regressor(trained.model),
        transform: summary,
        threshold: None,
        regressor: Some(RegressorSummary {
            best_epoch: trained.best_epoch,
            trace: trained.trace,
        }),
    })
}

/// Runs `config` on already loaded data without writing anything.
pub fn run_with_data(config: &PipelineConfig, data: &RunData) -> Result<RunOutput> {
    let fitted = fit(config, data)?;
    let checkpoint = fitted.checkpoint();
    let (test, test_table) = data
        .test
        .as_ref()
        .ok_or_else(|| Error::Config("a test split is required".into()))?;
    let (mut report, predictions) = evaluate(
        &fitted.scorer,
        test,
        test_table.as_ref(),
        config.strategy(),
        config.mode,
        config.exec(),
    )
    .map_err(|e| e.in_stage("predict"))?;
    report.error_analysis = Some(error_analysis(&pair_outcomes(test, &predictions)?));
    Ok(RunOutput {
        report,
        checkpoint,
        transform: fitted.transform,
        threshold: fitted.threshold,
        regressor: fitted.regressor,
        predictions,
        files: Vec::new(),
    })
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn write_outputs(config: &PipelineConfig, out: &mut RunOutput) -> Result<()> {
    let dir: &Path = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    if let Some(c) = &out.checkpoint {
        write(dir.join("checkpoint.json"), &c.to_json(), &mut files)?;
        if let Checkpoint::Cosine(CosineThresholdModel {
            transform: Some(t), ..
        }) = c
        {
            if out.transform.is_some() {
                write(
                    dir.join("transform.json"),
                    &Checkpoint::CosineTransform(t.clone()).to_json(),
                    &mut files,
                )?;
            }
        }
        if let Checkpoint::Regressor(r) = c {
            if let (Some(t), Some(_)) = (&r.frozen_transform, &out.transform) {
                write(
                    dir.join("transform.json"),
                    &Checkpoint::CosineTransform(t.clone()).to_json(),
                    &mut files,
                )?;
            }
        }
    }
    let sys: Vec<_> = out
        .predictions
        .iter()
        .map(|p| p.clustering.clone())
        .collect();
    write(
        dir.join("system.jsonl"),
        &clusterings_to_jsonl(&sys),
        &mut files,
    )?;
    let mut decisions = String::new();
    for d in out.predictions.iter().flat_map(|p| &p.decisions) {
        decisions.push_str(&serde_json::to_string(d).expect("decision serializes"));
        decisions.push('\n');
    }
    write(dir.join("decisions.jsonl"), &decisions, &mut files)?;
    write(dir.join("report.json"), &out.report.to_json(), &mut files)?;
    let mut table = out.report.to_table();
    if let Some(e) = &out.report.error_analysis {
        table.push('\n');
        table.push_str(&e.to_table());
    }
    write(dir.join("report.txt"), &table, &mut files)?;
    let log = TrainingLog {
        method: config.method.to_string(),
        seed: config.seed,
        transform: out.transform.as_ref(),
        threshold: out.threshold.as_ref(),
        regressor: out.regressor.as_ref(),
    };
    let mut json = serde_json::to_string_pretty(&log).expect("training log serializes");
    json.push('\n');
    write(dir.join("training.json"), &json, &mut files)?;
    out.files = files;
    Ok(())
}

/// Validates `config`, loads its data, builds the method's scorer (training
/// and threshold tuning as needed), scores the test split and writes
/// `checkpoint.json`, `system.jsonl`, `decisions.jsonl`, `report.json`,
/// `report.txt` and `training.json` into `config.out_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutput> {
    config.validate()?;
    let data = load_run_data(config).map_err(|e| e.in_stage("load"))?;
    let mut out = run_with_data(config, &data)?;
    write_outputs(config, &mut out).map_err(|e| e.in_stage("write"))?;
    Ok(out)
}
