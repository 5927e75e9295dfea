use super::{Aligned, Counts, Prf};
use crate::cluster::Clustering;
use crate::Result;

/// MUC link-based scores. With no links on either side (all singletons)
/// precision, recall and F1 are 0.
pub fn muc(gold: &Clustering, sys: &Clustering) -> Result<Prf> {
    Ok(Prf::from_counts(counts(&Aligned::new(gold, sys)?)))
}

pub(crate) fn counts(a: &Aligned) -> Counts {
    let overlap = a.overlap();
    let (mut r_num, mut r_den) = (0.0, 0.0);
    for (k, row) in overlap.iter().enumerate() {
        let parts = row.iter().filter(|&&o| o > 0).count();
        r_num += (a.gold[k].len() - parts) as f64;
        r_den += (a.gold[k].len() - 1) as f64;
    }
    let (mut p_num, mut p_den) = (0.0, 0.0);
    for (r, cluster) in a.sys.iter().enumerate() {
        let parts = overlap.iter().filter(|row| row[r] > 0).count();
        p_num += (cluster.len() - parts) as f64;
        p_den += (cluster.len() - 1) as f64;
    }
    Counts {
        p_num,
        p_den,
        r_num,
        r_den,
    }
}
