use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// A labelled pair with the model's decision and whether the two head
/// lemmas match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairOutcome {
    pub label: bool,
    pub predicted: bool,
    pub same_lemma: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorCell {
    pub actual: usize,
    /// Pairs whose decision matched the label.
    pub predicted: usize,
    /// `predicted / actual`; absent for an empty cell.
    pub ratio: Option<f64>,
}

impl ErrorCell {
    fn add(&mut self, correct: bool) {
        self.actual += 1;
        self.predicted += usize::from(correct);
    }

    fn finish(&mut self) {
        self.ratio = (self.actual > 0).then(|| self.predicted as f64 / self.actual as f64);
    }
}

/// How well a scorer separates same-lemma negatives and finds
/// different-lemma positives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub positive_same_lemma: ErrorCell,
    pub positive_different_lemma: ErrorCell,
    pub negative_same_lemma: ErrorCell,
    pub negative_different_lemma: ErrorCell,
}

impl ErrorBreakdown {
    pub fn cells(&self) -> [&ErrorCell; 4] {
        [
            &self.positive_same_lemma,
            &self.positive_different_lemma,
            &self.negative_same_lemma,
            &self.negative_different_lemma,
        ]
    }

    pub fn total(&self) -> usize {
        self.cells().iter().map(|c| c.actual).sum()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>12} {:>12} {:>12}",
            "pairs", "+ same lem", "+ diff lem", "- same lem", "- diff lem"
        );
        let row = |label: &str, f: &dyn Fn(&ErrorCell) -> String| {
            let cells: Vec<String> = self
                .cells()
                .iter()
                .map(|c| format!("{:>12}", f(c)))
                .collect();
            format!("{label:<10} {}\n", cells.join(" "))
        };
        out.push_str(&row("actual", &|c| c.actual.to_string()));
        out.push_str(&row("predicted", &|c| c.predicted.to_string()));
        out.push_str(&row("ratio", &|c| {
            c.ratio
                .map_or_else(|| "-".to_string(), |r| format!("{r:.2}"))
        }));
        out
    }
}

pub fn error_analysis(outcomes: &[PairOutcome]) -> ErrorBreakdown {
    let mut b = ErrorBreakdown::default();
    for o in outcomes {
        let cell = match (o.label, o.same_lemma) {
            (true, true) => &mut b.positive_same_lemma,
            (true, false) => &mut b.positive_different_lemma,
            (false, true) => &mut b.negative_same_lemma,
            (false, false) => &mut b.negative_different_lemma,
        };
        cell.add(o.predicted == o.label);
    }
    b.positive_same_lemma.finish();
    b.positive_different_lemma.finish();
    b.negative_same_lemma.finish();
    b.negative_different_lemma.finish();
    b
}
