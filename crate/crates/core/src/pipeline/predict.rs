use crate::cluster::{
    adjacency_from_decisions, connected_components, BaselineRule, Clustering, PairDecision,
};
use crate::corpus::{gold_clustering, mention_lemma_match, Corpus, Document};
use crate::embedding::EmbeddingTable;
use crate::metrics::PairOutcome;
use crate::pairs::{generate_index_pairs, PairStrategy};
use crate::scorer::{cosine_decide, CosineThresholdModel, LogisticRegressorModel};
use crate::{Error, Exec, Result};

/// A ready-to-use pairwise decision procedure.
#[derive(Clone, Debug, PartialEq)]
pub enum Scorer {
    Cosine(CosineThresholdModel),
    Regressor(LogisticRegressorModel),
    Baseline(BaselineRule),
}

impl Scorer {
    fn needs_embeddings(&self) -> bool {
        !matches!(self, Scorer::Baseline(_))
    }
}

/// Decides every pair `strategy` generates for `doc`. Pairs the strategy
/// leaves out are absent and count as non-coreferent downstream.
///
/// `score` is the cosine for the cosine scorer and the coreferent
/// probability for the regressor.
pub fn predict_pairs(
    scorer: &Scorer,
    doc: &Document,
    table: Option<&EmbeddingTable>,
    strategy: PairStrategy,
) -> Result<Vec<PairDecision>> {
    let table = match (scorer.needs_embeddings(), table) {
        (true, None) => return Err(Error::Config("this scorer needs embeddings".into())),
        (_, t) => t,
    };
    generate_index_pairs(doc, strategy)
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (&doc.mentions[i], &doc.mentions[j]);
            let (coreferent, score) = match scorer {
                Scorer::Baseline(rule) => (rule.links(a, b), None),
                Scorer::Cosine(m) => {
                    let t = table.expect("checked above");
                    let d = cosine_decide(m, t.lookup(&a.mention_id)?, t.lookup(&b.mention_id)?)?;
                    (d.coreferent, d.score)
                }
                Scorer::Regressor(m) => {
                    let t = table.expect("checked above");
                    let d =
                        m.decide_embeddings(t.lookup(&a.mention_id)?, t.lookup(&b.mention_id)?)?;
                    (d.coreferent, Some(d.log_probs[1].exp()))
                }
            };
            Ok(PairDecision {
                first: a.mention_id.clone(),
                second: b.mention_id.clone(),
                coreferent,
                score,
            })
        })
        .collect()
}

pub fn cluster_decisions(doc: &Document, decisions: &[PairDecision]) -> Result<Clustering> {
    Ok(connected_components(&adjacency_from_decisions(
        doc, decisions,
    )?))
}

/// Decisions and clusters for one document.
#[derive(Clone, Debug, PartialEq)]
pub struct DocPrediction {
    pub decisions: Vec<PairDecision>,
    pub clustering: Clustering,
}

pub fn predict_document(
    scorer: &Scorer,
    doc: &Document,
    table: Option<&EmbeddingTable>,
    strategy: PairStrategy,
) -> Result<DocPrediction> {
    let decisions = predict_pairs(scorer, doc, table, strategy)?;
    let clustering = cluster_decisions(doc, &decisions)?;
    Ok(DocPrediction {
        decisions,
        clustering,
    })
}

/// Predictions for every document, in corpus order.
pub fn predict_corpus(
    scorer: &Scorer,
    corpus: &Corpus,
    table: Option<&EmbeddingTable>,
    strategy: PairStrategy,
    exec: Exec,
) -> Result<Vec<DocPrediction>> {
    exec.try_map(&corpus.documents, |d| {
        predict_document(scorer, d, table, strategy)
    })
}

pub fn gold_clusterings(corpus: &Corpus) -> Vec<Clustering> {
    corpus.documents.iter().map(gold_clustering).collect()
}

/// Every preceding pair of the corpus with its gold label, the predicted
/// decision (false when the pair was never scored) and the lemma flag.
pub fn pair_outcomes(corpus: &Corpus, predictions: &[DocPrediction]) -> Result<Vec<PairOutcome>> {
    if corpus.documents.len() != predictions.len() {
        return Err(Error::Validation(
            "prediction count differs from document count".into(),
        ));
    }
    let mut out = Vec::new();
    for (doc, pred) in corpus.documents.iter().zip(predictions) {
        let decided: std::collections::HashSet<(&str, &str)> = pred
            .decisions
            .iter()
            .filter(|d| d.coreferent)
            .map(|d| (d.first.as_str(), d.second.as_str()))
            .collect();
        for (i, j) in generate_index_pairs(doc, PairStrategy::AllPreceding) {
            let (a, b) = (&doc.mentions[i], &doc.mentions[j]);
            out.push(PairOutcome {
                label: a.chain_id.is_some() && a.chain_id == b.chain_id,
                predicted: decided.contains(&(a.mention_id.as_str(), b.mention_id.as_str())),
                same_lemma: mention_lemma_match(a, b),
            });
        }
    }
    Ok(out)
}
