//! Precision, recall and F1 for detectors, plus per-pair recall matrices.
//!
//! The adversarial class is the positive class throughout. Precision and
//! recall with a zero denominator are reported as undefined (`None`), never
//! silently as 0 or 1; F1 is 0 in those cases.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Label;
use crate::flooding::ScoreVector;
use crate::model::{Detector, PredictError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test set is empty")]
    Empty,
    #[error("row {0} has no ground-truth label")]
    MissingTruth(usize),
    #[error("adversarial row {0} lacks source/target labels")]
    MissingPairLabels(usize),
    #[error("adversarial row {0} has identical source and target")]
    TrivialPair(usize),
    #[error("row {row}: {source}")]
    Predict { row: usize, source: PredictError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (predicted, actual) in pairs {
            c.record(predicted, actual);
        }
        c
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.true_positives += 1,
            (true, false) => self.false_positives += 1,
            (false, false) => self.true_negatives += 1,
            (false, true) => self.false_negatives += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    pub fn precision(&self) -> Option<f64> {
        let d = self.true_positives + self.false_positives;
        (d > 0).then(|| self.true_positives as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.true_positives + self.false_negatives;
        (d > 0).then(|| self.true_positives as f64 / d as f64)
    }

    /// `2PR/(P+R)`, computed as `2tp/(2tp+fp+fn)` so equal ratios compare
    /// equal exactly.
    pub fn f1(&self) -> f64 {
        let d = 2 * self.true_positives + self.false_positives + self.false_negatives;
        if d == 0 {
            0.0
        } else {
            (2 * self.true_positives) as f64 / d as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            (self.true_positives + self.true_negatives) as f64 / t as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub detected: u64,
    pub total: u64,
}

impl PairCounts {
    pub fn fraction(&self) -> f64 {
        self.detected as f64 / self.total as f64
    }

    /// Recall as an integer percentage, rounded half up.
    pub fn percent(&self) -> u64 {
        (200 * self.detected + self.total) / (2 * self.total)
    }
}

/// Recall per (source, target) pair over adversarial rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecallMatrix {
    pub labels: Vec<Label>,
    pub cells: BTreeMap<(Label, Label), PairCounts>,
}

impl RecallMatrix {
    pub fn cell(&self, source: &Label, target: &Label) -> Option<PairCounts> {
        self.cells.get(&(source.clone(), target.clone())).copied()
    }

    /// Rows are sources, columns targets; empty cells have no examples.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source");
        for t in &self.labels {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
        for s in &self.labels {
            out.push_str(s.as_str());
            for t in &self.labels {
                out.push(',');
                if let Some(c) = self.cell(s, t) {
                    let _ = write!(out, "{}", c.percent());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Predictions of `detector` on every row.
pub fn predictions(detector: &dyn Detector, test: &[ScoreVector]) -> Result<Vec<bool>, EvalError> {
    test.iter()
        .enumerate()
        .map(|(row, v)| detector.predict(v).map(|p| p.adversarial).map_err(|source| EvalError::Predict { row, source }))
        .collect()
}

pub fn confusion(test: &[ScoreVector], predicted: &[bool]) -> Result<ConfusionCounts, EvalError> {
    let mut c = ConfusionCounts::default();
    for (i, (v, &p)) in test.iter().zip(predicted).enumerate() {
        c.record(p, v.is_adversarial.ok_or(EvalError::MissingTruth(i))?);
    }
    Ok(c)
}

/// Builds the recall matrix from precomputed predictions.
pub fn matrix_from_predictions(test: &[ScoreVector], predicted: &[bool]) -> Result<RecallMatrix, EvalError> {
    let mut labels = BTreeSet::new();
    let mut cells: BTreeMap<(Label, Label), PairCounts> = BTreeMap::new();
    for (i, (v, &p)) in test.iter().zip(predicted).enumerate() {
        if v.is_adversarial != Some(true) {
            continue;
        }
        let (Some(s), Some(t)) = (&v.source, &v.target) else {
            return Err(EvalError::MissingPairLabels(i));
        };
        if s == t {
            return Err(EvalError::TrivialPair(i));
        }
        labels.insert(s.clone());
        labels.insert(t.clone());
        let cell = cells.entry((s.clone(), t.clone())).or_default();
        cell.total += 1;
        cell.detected += u64::from(p);
    }
    Ok(RecallMatrix { labels: labels.into_iter().collect(), cells })
}

pub fn recall_matrix(detector: &dyn Detector, test: &[ScoreVector]) -> Result<RecallMatrix, EvalError> {
    let predicted = predictions(detector, test)?;
    matrix_from_predictions(test, &predicted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub detector: String,
    pub config_hash: String,
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
    /// Present when every adversarial row carries source/target labels.
    pub matrix: Option<RecallMatrix>,
}

pub fn evaluate(detector: &dyn Detector, test: &[ScoreVector], config_hash: &str) -> Result<EvalReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(i) = test.iter().position(|v| v.is_adversarial.is_none()) {
        return Err(EvalError::MissingTruth(i));
    }
    let predicted = predictions(detector, test)?;
    let counts = confusion(test, &predicted)?;
    Ok(EvalReport {
        detector: detector.name(),
        config_hash: config_hash.to_owned(),
        counts,
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        matrix: matrix_from_predictions(test, &predicted).ok(),
    })
}

pub fn format_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_owned(), |v| format!("{v:.6}"))
}

impl EvalReport {
    pub fn render_text(&self, provenance: &[String]) -> String {
        let c = &self.counts;
        let mut out = String::new();
        let _ = writeln!(out, "detector: {}", self.detector);
        let _ = writeln!(out, "config_sha256: {}", self.config_hash);
        for p in provenance {
            let _ = writeln!(out, "{p}");
        }
        let _ = writeln!(out, "examples: {}", c.total());
        let _ = writeln!(
            out,
            "tp: {}  fp: {}  tn: {}  fn: {}",
            c.true_positives, c.false_positives, c.true_negatives, c.false_negatives
        );
        let _ = writeln!(out, "precision: {}", format_metric(self.precision));
        let _ = writeln!(out, "recall: {}", format_metric(self.recall));
        let _ = writeln!(out, "f1: {:.6}", self.f1);
        if let Some(m) = &self.matrix {
            let _ = writeln!(out, "pair recall (source -> target: detected/total = fraction):");
            for ((s, t), cell) in &m.cells {
                let _ = writeln!(out, "  {s} -> {t}: {}/{} = {:.6}", cell.detected, cell.total, cell.fraction());
            }
        }
        out
    }
}

pub const COMPARISON_HEADER: &str = "method,precision,recall,f1";

/// One line of the method comparison table.
pub fn comparison_line(method: &str, report: &EvalReport) -> String {
    format!(
        "{method},{},{},{:.6}",
        format_metric(report.precision),
        format_metric(report.recall),
        report.f1
    )
}

/// Inserts or replaces the row for `method` in a comparison CSV.
pub fn merge_comparison(existing: Option<&str>, method: &str, line: &str) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    let mut replaced = false;
    if let Some(text) = existing {
        for l in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            if l.split(',').next() == Some(method) {
                out.push_str(line);
                replaced = true;
            } else {
                out.push_str(l);
            }
            out.push('\n');
        }
    }
    if !replaced {
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flooding::FloodingScore;
    use crate::model::Prediction;
    use proptest::prelude::*;

    /// Flags a row adversarial iff its unfiltered score is below 1000.
    struct Cut;

    impl Detector for Cut {
        fn name(&self) -> String {
            "cut".into()
        }
        fn required_bands(&self) -> Vec<usize> {
            vec![0]
        }
        fn predict(&self, v: &ScoreVector) -> Result<Prediction, PredictError> {
            let adv = v.epsilon(0)? < 1000.0;
            Ok(Prediction { adversarial: adv, probability: if adv { 1.0 } else { 0.0 } })
        }
    }

    fn row(eps: u32, truth: bool, pair: Option<(&str, &str)>) -> ScoreVector {
        let s = FloodingScore { epsilon: eps, flipped: true, calls_used: 1 };
        let mut v = ScoreVector::complete([s; 5]);
        v.is_adversarial = Some(truth);
        if let Some((a, b)) = pair {
            v.source = Some(a.into());
            v.target = Some(b.into());
        }
        v
    }

    #[test]
    fn perfect_detector() {
        let test = vec![row(100, true, Some(("a", "b"))), row(2500, false, None), row(50, true, Some(("b", "a")))];
        let r = evaluate(&Cut, &test, "h").unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (Some(1.0), Some(1.0), 1.0));
        let m = r.matrix.unwrap();
        assert!(m.cells.values().all(|c| c.percent() == 100));
        let csv = m.to_csv();
        assert_eq!(csv, "source,a,b\na,,100\nb,100,\n");
    }

    #[test]
    fn all_benign_detector() {
        let test = vec![row(2000, true, None), row(2500, false, None)];
        let r = evaluate(&Cut, &test, "h").unwrap();
        assert_eq!(r.recall, Some(0.0));
        assert_eq!(r.precision, None);
        assert_eq!(r.f1, 0.0);
        assert!(r.render_text(&[]).contains("precision: undefined"));
    }

    #[test]
    fn single_pair_matrix() {
        let mut test: Vec<ScoreVector> = (0..15).map(|_| row(100, true, Some(("yes", "no")))).collect();
        test.extend((0..5).map(|_| row(2000, true, Some(("yes", "no")))));
        let m = recall_matrix(&Cut, &test).unwrap();
        assert_eq!(m.cells.len(), 1);
        let c = m.cell(&"yes".into(), &"no".into()).unwrap();
        assert_eq!((c.detected, c.total, c.percent()), (15, 20, 75));
        assert!(m.cell(&"no".into(), &"yes".into()).is_none());
        assert!(m.cell(&"yes".into(), &"yes".into()).is_none());
    }

    #[test]
    fn percent_rounds_half_up() {
        assert_eq!(PairCounts { detected: 1, total: 8 }.percent(), 13); // 12.5
        assert_eq!(PairCounts { detected: 1, total: 3 }.percent(), 33);
        assert_eq!(PairCounts { detected: 2, total: 3 }.percent(), 67);
    }

    #[test]
    fn errors() {
        assert!(matches!(evaluate(&Cut, &[], "h"), Err(EvalError::Empty)));
        let mut v = row(100, true, None);
        v.is_adversarial = None;
        assert!(matches!(evaluate(&Cut, &[v], "h"), Err(EvalError::MissingTruth(0))));
        assert!(matches!(recall_matrix(&Cut, &[row(1, true, None)]), Err(EvalError::MissingPairLabels(0))));
        assert!(matches!(recall_matrix(&Cut, &[row(1, true, Some(("a", "a")))]), Err(EvalError::TrivialPair(0))));
    }

    #[test]
    fn published_table_rows_are_self_consistent() {
        // (precision, recall, reported F1) rows of the reference results tables
        let rows: [(f64, f64, f64); _] = [
            (0.898, 0.931, 0.914),
            (0.883, 0.945, 0.913),
            (0.883, 0.925, 0.905),
            (0.863, 0.925, 0.893),
            (0.820, 0.915, 0.865),
            (0.880, 0.936, 0.907),
            (0.908, 0.922, 0.915),
            (0.909, 0.931, 0.920),
            (0.903, 0.942, 0.922),
            (0.918, 0.935, 0.926),
        ];
        for (p, r, f) in rows {
            // percentages are rounded to 0.1%, which moves F1 by < 0.002
            assert!((2.0 * p * r / (p + r) - f).abs() < 0.002, "{p} {r} {f}");
        }
        // the headline row as counts on 856 adversarial / 900 benign examples
        let c = ConfusionCounts { true_positives: 800, false_negatives: 56, false_positives: 71, true_negatives: 829 };
        assert_eq!(format!("{:.3}", c.precision().unwrap()), "0.918");
        assert_eq!(format!("{:.3}", c.recall().unwrap()), "0.935");
        assert_eq!(format!("{:.3}", c.f1()), "0.926");
    }

    #[test]
    fn comparison_merge_replaces_by_method() {
        let a = merge_comparison(None, "tree", "tree,0.9,0.8,0.85");
        let b = merge_comparison(Some(&a), "ltv", "ltv,1,1,1");
        let c = merge_comparison(Some(&b), "tree", "tree,0.5,0.5,0.5");
        assert_eq!(c, "method,precision,recall,f1\ntree,0.5,0.5,0.5\nltv,1,1,1\n");
    }

    proptest! {
        #[test]
        fn f1_matches_harmonic_mean(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            let c = ConfusionCounts { true_positives: tp, false_positives: fp, true_negatives: tn, false_negatives: fn_ };
            match (c.precision(), c.recall()) {
                (Some(p), Some(r)) if p + r > 0.0 => prop_assert!((c.f1() - 2.0 * p * r / (p + r)).abs() < 1e-12),
                _ => prop_assert_eq!(c.f1(), 0.0),
            }
        }

        #[test]
        fn permutation_invariant_and_recall_is_weighted_mean(
            rows in prop::collection::vec((0u32..2000, any::<bool>(), 0usize..3, 1usize..3), 1..60),
            rot in 0usize..60,
        ) {
            let labels = ["a", "b", "c"];
            let test: Vec<ScoreVector> = rows
                .iter()
                .map(|&(e, adv, s, d)| row(e, adv, Some((labels[s], labels[(s + d) % 3]))))
                .map(|mut v| { if v.is_adversarial == Some(false) { v.source = None; v.target = None; } v })
                .collect();
            let r1 = evaluate(&Cut, &test, "h").unwrap();
            let mut rotated = test.clone();
            rotated.rotate_left(rot % test.len());
            let r2 = evaluate(&Cut, &rotated, "h").unwrap();
            prop_assert_eq!(r1.counts, r2.counts);
            if let (Some(recall), Some(m)) = (r1.recall, r1.matrix) {
                let (det, tot) = m.cells.values().fold((0, 0), |(d, t), c| (d + c.detected, t + c.total));
                prop_assert!((recall - det as f64 / tot as f64).abs() < 1e-12);
            }
        }
    }
}
