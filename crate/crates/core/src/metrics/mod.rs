//! Coreference metrics: B³, MUC, CEAF-E, BLANC and the CoNLL average, with
//! all pairings and cluster alignments confined to a single document.
//!
//! Every metric keeps its numerator/denominator counts so corpus scores can
//! be micro-averaged (sum counts, then divide) or macro-averaged (mean of
//! per-document scores).

mod aggregate;
mod b3;
mod blanc;
mod ceaf;
mod error_analysis;
mod hungarian;
mod muc;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cluster::Clustering;
use crate::{Error, Result};

pub use aggregate::{
    aggregate_corpus, score_corpus, score_document, Aggregation, DocScores, MetricReport,
};
pub use b3::b_cubed;
pub use blanc::{blanc, BlancScore};
pub use ceaf::{ceaf_e, phi4};
pub use error_analysis::{error_analysis, ErrorBreakdown, ErrorCell, PairOutcome};
pub use hungarian::{hungarian_max, Assignment};
pub use muc::muc;

/// Raw counts behind a precision/recall pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Counts {
    pub p_num: f64,
    pub p_den: f64,
    pub r_num: f64,
    pub r_den: f64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.p_num += o.p_num;
        self.p_den += o.p_den;
        self.r_num += o.r_num;
        self.r_den += o.r_den;
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    #[serde(rename = "f")]
    pub f1: f64,
    #[serde(skip)]
    pub counts: Counts,
}

impl Prf {
    /// A zero denominator gives 0 for that side.
    pub fn from_counts(counts: Counts) -> Self {
        let precision = ratio(counts.p_num, counts.p_den);
        let recall = ratio(counts.r_num, counts.r_den);
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
            counts,
        }
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
            counts: Counts::default(),
        }
    }
}

/// Arithmetic mean of the B³, MUC and CEAF-E F1 scores.
pub fn conll_f1(b3: &Prf, muc: &Prf, ceaf_e: &Prf) -> f64 {
    (b3.f1 + muc.f1 + ceaf_e.f1) / 3.0
}

/// Model-selection criterion: mean of B³ and MUC F1.
pub fn b3_muc_average(b3: &Prf, muc: &Prf) -> f64 {
    (b3.f1 + muc.f1) / 2.0
}

/// Gold and system clusterings over the same mentions, as index clusters.
pub(crate) struct Aligned {
    pub n: usize,
    pub gold: Vec<Vec<usize>>,
    pub sys: Vec<Vec<usize>>,
}

impl Aligned {
    pub fn new(gold: &Clustering, sys: &Clustering) -> Result<Self> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for m in gold.clusters.iter().flatten() {
            let next = index.len();
            if index.insert(m.as_str(), next).is_some() {
                return Err(Error::Validation(format!(
                    "`{}`: gold mention `{m}` appears twice",
                    gold.doc_id
                )));
            }
        }
        let n = index.len();
        let mut seen = vec![false; n];
        let mut sys_clusters = Vec::with_capacity(sys.clusters.len());
        for c in &sys.clusters {
            let mut ids = Vec::with_capacity(c.len());
            for m in c {
                let &i = index.get(m.as_str()).ok_or_else(|| {
                    Error::Validation(format!(
                        "`{}`: system mention `{m}` not in gold",
                        sys.doc_id
                    ))
                })?;
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Validation(format!(
                        "`{}`: system mention `{m}` appears twice",
                        sys.doc_id
                    )));
                }
                ids.push(i);
            }
            if !ids.is_empty() {
                sys_clusters.push(ids);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            let name = index
                .iter()
                .find(|(_, &v)| v == i)
                .map(|(k, _)| *k)
                .unwrap_or("?");
            return Err(Error::Validation(format!(
                "`{}`: gold mention `{name}` missing from system output",
                gold.doc_id
            )));
        }
        let gold_clusters = gold
            .clusters
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.iter().map(|m| index[m.as_str()]).collect())
            .collect();
        Ok(Self {
            n,
            gold: gold_clusters,
            sys: sys_clusters,
        })
    }

    /// `overlap[k][r] = |gold_k ∩ sys_r|`.
    pub fn overlap(&self) -> Vec<Vec<usize>> {
        let mut sys_of = vec![0; self.n];
        for (r, c) in self.sys.iter().enumerate() {
            for &m in c {
                sys_of[m] = r;
            }
        }
        self.gold
            .iter()
            .map(|k| {
                let mut row = vec![0; self.sys.len()];
                for &m in k {
                    row[sys_of[m]] += 1;
                }
                row
            })
            .collect()
    }
}
