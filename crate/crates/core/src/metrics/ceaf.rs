use super::{hungarian_max, Aligned, Counts, Prf};
use crate::cluster::Clustering;
use crate::Result;

/// Entity similarity `φ₄(K, R) = 2|K ∩ R| / (|K| + |R|)`.
pub fn phi4(overlap: usize, gold_size: usize, sys_size: usize) -> f64 {
    2.0 * overlap as f64 / (gold_size + sys_size) as f64
}

/// CEAF-E: optimal one-to-one alignment of gold and system clusters under φ₄.
pub fn ceaf_e(gold: &Clustering, sys: &Clustering) -> Result<Prf> {
    Ok(Prf::from_counts(counts(&Aligned::new(gold, sys)?)?))
}

pub(crate) fn counts(a: &Aligned) -> Result<Counts> {
    let sim: Vec<Vec<f64>> = a
        .overlap()
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(|(r, &o)| phi4(o, a.gold[k].len(), a.sys[r].len()))
                .collect()
        })
        .collect();
    let total = hungarian_max(&sim)?.total;
    Ok(Counts {
        p_num: total,
        p_den: a.sys.len() as f64,
        r_num: total,
        r_den: a.gold.len() as f64,
    })
}
