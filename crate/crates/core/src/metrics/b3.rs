use super::{Aligned, Counts, Prf};
use crate::cluster::Clustering;
use crate::Result;

/// B³: per-mention precision `|R(m) ∩ K(m)| / |R(m)|` and recall
/// `|R(m) ∩ K(m)| / |K(m)|`, averaged over mentions.
pub fn b_cubed(gold: &Clustering, sys: &Clustering) -> Result<Prf> {
    Ok(Prf::from_counts(counts(&Aligned::new(gold, sys)?)))
}

pub(crate) fn counts(a: &Aligned) -> Counts {
    // Every mention in gold_k ∩ sys_r contributes overlap/|sys_r| to the
    // precision sum, so the cell contributes overlap²/|sys_r|.
    let overlap = a.overlap();
    let mut p_num = 0.0;
    let mut r_num = 0.0;
    for (k, row) in overlap.iter().enumerate() {
        for (r, &o) in row.iter().enumerate() {
            if o == 0 {
                continue;
            }
            let o = o as f64;
            p_num += o * o / a.sys[r].len() as f64;
            r_num += o * o / a.gold[k].len() as f64;
        }
    }
    Counts {
        p_num,
        p_den: a.n as f64,
        r_num,
        r_den: a.n as f64,
    }
}
