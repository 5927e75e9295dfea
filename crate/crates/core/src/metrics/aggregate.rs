use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{b3, blanc, ceaf, conll_f1, muc, Aligned, BlancScore, Counts, ErrorBreakdown, Prf};
use crate::cluster::Clustering;
use crate::{Error, Exec, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Sum numerators and denominators over documents, then divide.
    #[default]
    Micro,
    /// Mean of per-document scores.
    Macro,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Self::Micro),
            "macro" => Ok(Self::Macro),
            other => Err(Error::Config(format!("unknown aggregation mode `{other}`"))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Micro => "micro",
            Self::Macro => "macro",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocScores {
    pub doc_id: String,
    pub b3: Prf,
    pub muc: Prf,
    pub ceaf_e: Prf,
    pub blanc: BlancScore,
    pub conll_f1: f64,
}

pub fn score_document(gold: &Clustering, sys: &Clustering) -> Result<DocScores> {
    if gold.doc_id != sys.doc_id {
        return Err(Error::Validation(format!(
            "scoring system `{}` against gold `{}`",
            sys.doc_id, gold.doc_id
        )));
    }
    let a = Aligned::new(gold, sys)?;
    let b3 = Prf::from_counts(b3::counts(&a));
    let muc = Prf::from_counts(muc::counts(&a));
    let ceaf_e = Prf::from_counts(ceaf::counts(&a)?);
    let (c, n) = blanc::counts(&a);
    Ok(DocScores {
        doc_id: gold.doc_id.clone(),
        conll_f1: conll_f1(&b3, &muc, &ceaf_e),
        b3,
        muc,
        ceaf_e,
        blanc: BlancScore::from_counts(c, n),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub b3: Prf,
    pub muc: Prf,
    pub ceaf_e: Prf,
    pub blanc: BlancScore,
    pub conll_f1: f64,
    pub mode: Aggregation,
    pub per_doc: Vec<DocScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_analysis: Option<ErrorBreakdown>,
}

impl MetricReport {
    /// Mean of B³ and MUC F1, the model-selection criterion.
    pub fn b3_muc_average(&self) -> f64 {
        super::b3_muc_average(&self.b3, &self.muc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "aggregation: {}  documents: {}",
            self.mode,
            self.per_doc.len()
        );
        let _ = writeln!(out, "{:<8} {:>8} {:>8} {:>8}", "metric", "P", "R", "F1");
        for (name, prf) in [
            ("B3", &self.b3),
            ("MUC", &self.muc),
            ("CEAF-E", &self.ceaf_e),
            ("BLANC", &self.blanc.blanc),
        ] {
            let _ = writeln!(
                out,
                "{name:<8} {:>8.2} {:>8.2} {:>8.2}",
                100.0 * prf.precision,
                100.0 * prf.recall,
                100.0 * prf.f1
            );
        }
        let _ = writeln!(out, "{:<8} {:>26.2}", "CoNLL", 100.0 * self.conll_f1);
        if let Some(e) = &self.error_analysis {
            out.push('\n');
            out.push_str(&e.to_table());
        }
        out
    }
}

fn macro_prf(items: impl Iterator<Item = Prf> + Clone, n: f64) -> Prf {
    Prf {
        precision: items.clone().map(|p| p.precision).sum::<f64>() / n,
        recall: items.clone().map(|p| p.recall).sum::<f64>() / n,
        f1: items.map(|p| p.f1).sum::<f64>() / n,
        counts: Counts::default(),
    }
}

fn micro_prf(items: impl Iterator<Item = Prf>) -> Prf {
    let mut c = Counts::default();
    for p in items {
        c += p.counts;
    }
    Prf::from_counts(c)
}

pub fn aggregate_corpus(per_doc: &[DocScores], mode: Aggregation) -> Result<MetricReport> {
    if per_doc.is_empty() {
        return Err(Error::Empty("no documents to aggregate".into()));
    }
    let (b3, muc, ceaf_e, blanc) = match mode {
        Aggregation::Micro => {
            let mut coref = Counts::default();
            let mut non = Counts::default();
            for d in per_doc {
                coref += d.blanc.coref.counts;
                non += d.blanc.non_coref.counts;
            }
            (
                micro_prf(per_doc.iter().map(|d| d.b3)),
                micro_prf(per_doc.iter().map(|d| d.muc)),
                micro_prf(per_doc.iter().map(|d| d.ceaf_e)),
                BlancScore::from_counts(coref, non),
            )
        }
        Aggregation::Macro => {
            let n = per_doc.len() as f64;
            let blancs: Vec<BlancScore> = per_doc.iter().map(|d| d.blanc).collect();
            (
                macro_prf(per_doc.iter().map(|d| d.b3), n),
                macro_prf(per_doc.iter().map(|d| d.muc), n),
                macro_prf(per_doc.iter().map(|d| d.ceaf_e), n),
                BlancScore::macro_mean(&blancs),
            )
        }
    };
    Ok(MetricReport {
        conll_f1: conll_f1(&b3, &muc, &ceaf_e),
        b3,
        muc,
        ceaf_e,
        blanc,
        mode,
        per_doc: per_doc.to_vec(),
        error_analysis: None,
    })
}

/// Scores system clusterings against gold, matched by `doc_id`, in gold order.
pub fn score_corpus(
    gold: &[Clustering],
    sys: &[Clustering],
    mode: Aggregation,
    exec: Exec,
) -> Result<MetricReport> {
    let by_id: HashMap<&str, &Clustering> = sys.iter().map(|c| (c.doc_id.as_str(), c)).collect();
    if by_id.len() != sys.len() {
        return Err(Error::Validation("system output repeats a doc_id".into()));
    }
    let gold_ids: std::collections::HashSet<&str> =
        gold.iter().map(|g| g.doc_id.as_str()).collect();
    if let Some(extra) = sys.iter().find(|s| !gold_ids.contains(s.doc_id.as_str())) {
        return Err(Error::Validation(format!(
            "system output has unknown document `{}`",
            extra.doc_id
        )));
    }
    let per_doc = exec.try_map(gold, |g| {
        let s = by_id.get(g.doc_id.as_str()).ok_or_else(|| {
            Error::Validation(format!("system output lacks document `{}`", g.doc_id))
        })?;
        score_document(g, s)
    })?;
    aggregate_corpus(&per_doc, mode)
}
