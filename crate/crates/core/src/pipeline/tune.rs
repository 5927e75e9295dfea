use serde::Serialize;

use crate::cluster::{Clustering, UnionFind};
use crate::corpus::{gold_clustering, Corpus};
use crate::embedding::EmbeddingTable;
use crate::metrics::{aggregate_corpus, score_document, Aggregation};
use crate::pairs::{generate_index_pairs, PairStrategy};
use crate::scorer::{pair_cosine, CosineTransformModel};
use crate::{Error, Exec, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// Mean of dev B³ and MUC F1.
    pub b3_muc: f64,
    /// Pairs predicted coreferent at this threshold.
    pub positives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdTuning {
    pub threshold: f64,
    pub b3_muc: f64,
    pub trace: Vec<ThresholdPoint>,
}

/// Best point of a trace; ties go to the smallest threshold.
pub fn select_threshold(trace: &[ThresholdPoint]) -> Result<ThresholdPoint> {
    trace
        .iter()
        .copied()
        .reduce(|best, p| {
            if p.b3_muc > best.b3_muc || (p.b3_muc == best.b3_muc && p.threshold < best.threshold) {
                p
            } else {
                best
            }
        })
        .ok_or_else(|| Error::Empty("empty threshold grid".into()))
}

struct ScoredDoc {
    gold: Clustering,
    ids: Vec<String>,
    /// `(earlier, later, cosine)`; `None` for a zero vector.
    pairs: Vec<(usize, usize, Option<f64>)>,
}

impl ScoredDoc {
    fn cluster_at(&self, threshold: f64) -> (Clustering, usize) {
        let mut uf = UnionFind::new(self.ids.len());
        let mut positives = 0;
        for &(i, j, s) in &self.pairs {
            if s.is_some_and(|s| s > threshold) {
                uf.union(i, j);
                positives += 1;
            }
        }
        let clusters = uf
            .groups()
            .into_iter()
            .map(|g| g.into_iter().map(|i| self.ids[i].clone()).collect())
            .collect();
        (
            Clustering {
                doc_id: self.gold.doc_id.clone(),
                clusters,
            },
            positives,
        )
    }
}

/// Sweeps `grid` on the dev corpus: decide with the (optionally transformed)
/// cosine, cluster, score, and keep the threshold with the best mean of B³
/// and MUC F1. Cosines are computed once and reused for every threshold.
pub fn tune_threshold(
    transform: Option<&CosineTransformModel>,
    dev: &Corpus,
    table: &EmbeddingTable,
    strategy: PairStrategy,
    grid: &[f64],
    mode: Aggregation,
    exec: Exec,
) -> Result<ThresholdTuning> {
    if grid.is_empty() {
        return Err(Error::Config("empty threshold grid".into()));
    }
    if let Some(bad) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Config(format!("threshold {bad} outside [0, 1]")));
    }
    let docs = exec.try_map(&dev.documents, |doc| -> Result<ScoredDoc> {
        let pairs = generate_index_pairs(doc, strategy)
            .into_iter()
            .map(|(i, j)| {
                let e1 = table.lookup(&doc.mentions[i].mention_id)?;
                let e2 = table.lookup(&doc.mentions[j].mention_id)?;
                match pair_cosine(transform, e1, e2) {
                    Ok(c) => Ok((i, j, Some(c))),
                    Err(Error::UndefinedSimilarity) => Ok((i, j, None)),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        Ok(ScoredDoc {
            gold: gold_clustering(doc),
            ids: doc.mentions.iter().map(|m| m.mention_id.clone()).collect(),
            pairs,
        })
    })?;
    let trace = exec.try_map(grid, |&threshold| -> Result<ThresholdPoint> {
        let mut positives = 0;
        let per_doc = docs
            .iter()
            .map(|d| {
                let (sys, n) = d.cluster_at(threshold);
                positives += n;
                score_document(&d.gold, &sys)
            })
            .collect::<Result<Vec<_>>>()?;
        let report = aggregate_corpus(&per_doc, mode)?;
        Ok(ThresholdPoint {
            threshold,
            b3_muc: report.b3_muc_average(),
            positives,
        })
    })?;
    let best = select_threshold(&trace)?;
    log::info!(
        "tuned threshold {} (dev B3/MUC {:.4})",
        best.threshold,
        best.b3_muc
    );
    Ok(ThresholdTuning {
        threshold: best.threshold,
        b3_muc: best.b3_muc,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(threshold: f64, b3_muc: f64) -> ThresholdPoint {
        ThresholdPoint {
            threshold,
            b3_muc,
            positives: 0,
        }
    }

    #[test]
    fn argmax_of_supplied_scores() {
        let t = [point(0.3, 0.6), point(0.5, 0.8), point(0.7, 0.7)];
        assert_eq!(select_threshold(&t).unwrap().threshold, 0.5);
    }

    #[test]
    fn ties_pick_smallest_threshold() {
        let t = [point(0.7, 0.8), point(0.2, 0.8), point(0.5, 0.8)];
        assert_eq!(select_threshold(&t).unwrap().threshold, 0.2);
        assert!(select_threshold(&[]).is_err());
    }

    #[test]
    fn rejects_bad_grid() {
        let corpus = Corpus::default();
        let t = EmbeddingTable::new(2).unwrap();
        let run = |g: &[f64]| {
            tune_threshold(
                None,
                &corpus,
                &t,
                PairStrategy::AllPreceding,
                g,
                Aggregation::Micro,
                Exec::Sequential,
            )
        };
        assert!(run(&[]).is_err());
        assert!(run(&[0.5, 1.5]).is_err());
    }
}
