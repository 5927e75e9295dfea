use serde::{Deserialize, Serialize};

use super::{Aligned, Counts, Prf};
use crate::cluster::Clustering;
use crate::Result;

/// BLANC over within-document mention pairs.
///
/// `coref` scores the coreferent links, `non_coref` the remaining pairs.
/// A link type with no links on either side is left out and the combined
/// score is the other type's; if one side has links and the other has none
/// that type scores 0. With no pairs at all everything is 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlancScore {
    #[serde(flatten)]
    pub blanc: Prf,
    pub coref: Prf,
    pub non_coref: Prf,
}

impl BlancScore {
    pub fn from_counts(coref: Counts, non_coref: Counts) -> Self {
        let c = Prf::from_counts(coref);
        let n = Prf::from_counts(non_coref);
        let has = |k: &Counts| k.p_den + k.r_den > 0.0;
        let blanc = match (has(&coref), has(&non_coref)) {
            (true, true) => Prf {
                precision: (c.precision + n.precision) / 2.0,
                recall: (c.recall + n.recall) / 2.0,
                f1: (c.f1 + n.f1) / 2.0,
                counts: Counts::default(),
            },
            (true, false) => Prf {
                counts: Counts::default(),
                ..c
            },
            (false, true) => Prf {
                counts: Counts::default(),
                ..n
            },
            (false, false) => Prf::default(),
        };
        Self {
            blanc,
            coref: c,
            non_coref: n,
        }
    }

    pub fn score(&self) -> f64 {
        self.blanc.f1
    }

    /// Mean of per-document scores.
    pub(crate) fn macro_mean(scores: &[BlancScore]) -> Self {
        let n = scores.len().max(1) as f64;
        let mean = |f: &dyn Fn(&BlancScore) -> &Prf| {
            let p = scores.iter().map(|s| f(s).precision).sum::<f64>() / n;
            let r = scores.iter().map(|s| f(s).recall).sum::<f64>() / n;
            let f1 = scores.iter().map(|s| f(s).f1).sum::<f64>() / n;
            Prf {
                precision: p,
                recall: r,
                f1,
                counts: Counts::default(),
            }
        };
        Self {
            blanc: mean(&|s| &s.blanc),
            coref: mean(&|s| &s.coref),
            non_coref: mean(&|s| &s.non_coref),
        }
    }
}

fn pairs(k: usize) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

pub fn blanc(gold: &Clustering, sys: &Clustering) -> Result<BlancScore> {
    let (c, n) = counts(&Aligned::new(gold, sys)?);
    Ok(BlancScore::from_counts(c, n))
}

pub(crate) fn counts(a: &Aligned) -> (Counts, Counts) {
    let total = pairs(a.n);
    let gold_links: f64 = a.gold.iter().map(|c| pairs(c.len())).sum();
    let sys_links: f64 = a.sys.iter().map(|c| pairs(c.len())).sum();
    let common: f64 = a.overlap().iter().flatten().map(|&o| pairs(o)).sum();
    let coref = Counts {
        p_num: common,
        p_den: sys_links,
        r_num: common,
        r_den: gold_links,
    };
    let gold_non = total - gold_links;
    let sys_non = total - sys_links;
    let common_non = total - gold_links - sys_links + common;
    let non = Counts {
        p_num: common_non,
        p_den: sys_non,
        r_num: common_non,
        r_den: gold_non,
    };
    (coref, non)
}
