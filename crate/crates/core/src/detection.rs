//! Single-band threshold detectors and the voting ensembles built on them.
//!
//! A threshold detector declares a signal adversarial when its flooding
//! score is strictly below a threshold learned by maximum information gain.
//! Voting ensembles run one such detector per canonical band and declare
//! adversarial when at least `k` of the five vote so; `k = 3` is plain
//! majority voting, and learned-threshold voting picks `k` by training F1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::FrequencyBand;
use crate::evaluation::ConfusionCounts;
use crate::flooding::{ScoreVector, ScoreVectorError, CANONICAL_BANDS, NUM_BANDS};

/// Gains closer than this are treated as equal when breaking ties.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-12;

/// Vote count required by plain majority voting.
pub const MAJORITY_VOTES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("training data must contain both adversarial and benign examples")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("score {0} is not a finite non-negative number")]
    BadScore(f64),
    #[error("row {0} has no ground-truth label")]
    MissingTruth(usize),
    #[error("expected {NUM_BANDS} member detectors, got {0}")]
    MemberCount(usize),
    #[error("member {index} is for band {found}, expected {expected}")]
    MemberOrder { index: usize, found: FrequencyBand, expected: FrequencyBand },
    #[error("vote threshold {0} outside 1..={NUM_BANDS}")]
    VoteThreshold(usize),
    #[error(transparent)]
    Score(#[from] ScoreVectorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub score: f64,
    pub is_adversarial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    /// Entropy reduction in bits achieved by the chosen split.
    pub info_gain: f64,
    pub n_adversarial: usize,
    pub n_benign: usize,
    /// Set when all training scores were equal, so no split existed.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub threshold: f64,
    pub band: FrequencyBand,
    pub stats: TrainingStats,
}

/// Binary entropy in bits of a `pos`/`neg` split.
pub fn entropy_bits(pos: usize, neg: usize) -> f64 {
    let n = (pos + neg) as f64;
    [pos, neg]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of splitting a `(pos, neg)` population into a left part
/// `(left_pos, left_neg)` and the remainder.
pub fn split_gain(pos: usize, neg: usize, left_pos: usize, left_neg: usize) -> f64 {
    let n = (pos + neg) as f64;
    let (right_pos, right_neg) = (pos - left_pos, neg - left_neg);
    let nl = (left_pos + left_neg) as f64;
    let nr = (right_pos + right_neg) as f64;
    entropy_bits(pos, neg) - nl / n * entropy_bits(left_pos, left_neg) - nr / n * entropy_bits(right_pos, right_neg)
}

/// Learns the threshold of maximum information gain for the rule
/// `score < threshold => adversarial`.
///
/// Candidates are the midpoints between consecutive distinct scores; ties go
/// to the smallest threshold. If every score is equal there is no candidate
/// and the model is flagged degenerate with its threshold at that score
/// (nothing is flagged adversarial).
pub fn learn_threshold(train: &[LabeledScore], band: FrequencyBand) -> Result<ThresholdModel, DetectionError> {
    if train.is_empty() {
        return Err(DetectionError::Empty);
    }
    if let Some(bad) = train.iter().find(|s| !s.score.is_finite() || s.score < 0.0) {
        return Err(DetectionError::BadScore(bad.score));
    }
    let pos = train.iter().filter(|s| s.is_adversarial).count();
    let neg = train.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(DetectionError::SingleClass);
    }

    let mut sorted: Vec<LabeledScore> = train.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    // (threshold, gain) for every boundary between distinct scores
    let mut candidates = Vec::new();
    let (mut left_pos, mut left_neg) = (0, 0);
    for i in 0..sorted.len() - 1 {
        if sorted[i].is_adversarial {
            left_pos += 1;
        } else {
            left_neg += 1;
        }
        let (a, b) = (sorted[i].score, sorted[i + 1].score);
        if a < b {
            candidates.push(((a + b) / 2.0, split_gain(pos, neg, left_pos, left_neg)));
        }
    }

    let stats = |info_gain, degenerate| TrainingStats { info_gain, n_adversarial: pos, n_benign: neg, degenerate };
    let Some(best_gain) = candidates.iter().map(|c| c.1).reduce(f64::max) else {
        return Ok(ThresholdModel { threshold: sorted[0].score, band, stats: stats(0.0, true) });
    };
    let (threshold, gain) = candidates
        .into_iter()
        .find(|c| c.1 >= best_gain - GAIN_TIE_TOLERANCE)
        .expect("maximum is attained");
    Ok(ThresholdModel { threshold, band, stats: stats(gain, false) })
}

/// `true` (adversarial) iff `score < model.threshold`.
pub fn detect(score: f64, model: &ThresholdModel) -> bool {
    score < model.threshold
}

/// Per-band training scores from labeled score vectors.
pub fn band_scores(train: &[ScoreVector], band_index: usize) -> Result<Vec<LabeledScore>, DetectionError> {
    train
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Ok(LabeledScore {
                score: v.epsilon(band_index)?,
                is_adversarial: v.is_adversarial.ok_or(DetectionError::MissingTruth(i))?,
            })
        })
        .collect()
}

/// One threshold detector per canonical band, each trained on its own band.
pub fn learn_band_thresholds(train: &[ScoreVector]) -> Result<Vec<ThresholdModel>, DetectionError> {
    (0..NUM_BANDS)
        .map(|b| learn_threshold(&band_scores(train, b)?, CANONICAL_BANDS[b]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingModel {
    pub members: Vec<ThresholdModel>,
    pub vote_threshold: usize,
    /// Training F1 for `k = 1..=5` when the threshold was learned.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub training_f1: Vec<f64>,
}

fn check_members(members: &[ThresholdModel]) -> Result<(), DetectionError> {
    if members.len() != NUM_BANDS {
        return Err(DetectionError::MemberCount(members.len()));
    }
    for (index, (m, expected)) in members.iter().zip(CANONICAL_BANDS).enumerate() {
        if m.band != expected {
            return Err(DetectionError::MemberOrder { index, found: m.band, expected });
        }
    }
    Ok(())
}

impl VotingModel {
    pub fn new(members: Vec<ThresholdModel>, vote_threshold: usize) -> Result<Self, DetectionError> {
        check_members(&members)?;
        if !(1..=NUM_BANDS).contains(&vote_threshold) {
            return Err(DetectionError::VoteThreshold(vote_threshold));
        }
        Ok(Self { members, vote_threshold, training_f1: Vec::new() })
    }

    pub fn majority(members: Vec<ThresholdModel>) -> Result<Self, DetectionError> {
        Self::new(members, MAJORITY_VOTES)
    }

    /// Number of members voting adversarial.
    pub fn votes(&self, v: &ScoreVector) -> Result<usize, DetectionError> {
        let mut n = 0;
        for (b, m) in self.members.iter().enumerate() {
            n += usize::from(detect(v.epsilon(b)?, m));
        }
        Ok(n)
    }

    pub fn is_adversarial(&self, v: &ScoreVector) -> Result<bool, DetectionError> {
        Ok(self.votes(v)? >= self.vote_threshold)
    }
}

/// Plain majority voting: adversarial when 3 or more of the 5 members agree.
pub fn majority_vote(v: &ScoreVector, models: &[ThresholdModel]) -> Result<bool, DetectionError> {
    check_members(models)?;
    let mut votes = 0;
    for (b, m) in models.iter().enumerate() {
        votes += usize::from(detect(v.epsilon(b)?, m));
    }
    Ok(votes >= MAJORITY_VOTES)
}

/// Chooses the vote threshold `k` in `1..=5` with the best training F1,
/// preferring the larger `k` on ties.
pub fn learn_vote_threshold(train: &[ScoreVector], members: Vec<ThresholdModel>) -> Result<VotingModel, DetectionError> {
    check_members(&members)?;
    let mut truth = Vec::with_capacity(train.len());
    for (i, v) in train.iter().enumerate() {
        truth.push(v.is_adversarial.ok_or(DetectionError::MissingTruth(i))?);
    }
    if !(truth.contains(&true) && truth.contains(&false)) {
        return Err(DetectionError::SingleClass);
    }
    let probe = VotingModel { members, vote_threshold: 1, training_f1: Vec::new() };
    let votes = train.iter().map(|v| probe.votes(v)).collect::<Result<Vec<_>, _>>()?;

    let f1: Vec<f64> = (1..=NUM_BANDS)
        .map(|k| ConfusionCounts::from_pairs(votes.iter().map(|&n| n >= k).zip(truth.iter().copied())).f1())
        .collect();
    let mut best = NUM_BANDS;
    for k in (1..NUM_BANDS).rev() {
        if f1[k - 1] > f1[best - 1] {
            best = k;
        }
    }
    Ok(VotingModel { members: probe.members, vote_threshold: best, training_f1: f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flooding::FloodingScore;
    use proptest::prelude::*;

    fn ls(adv: &[f64], ben: &[f64]) -> Vec<LabeledScore> {
        adv.iter()
            .map(|&score| LabeledScore { score, is_adversarial: true })
            .chain(ben.iter().map(|&score| LabeledScore { score, is_adversarial: false }))
            .collect()
    }

    /// Information gain by direct counting over every midpoint; returns the
    /// smallest midpoint attaining the maximum.
    fn brute_force(train: &[LabeledScore]) -> Option<(f64, f64)> {
        let h = |p: f64, q: f64| {
            let n = p + q;
            let t = |c: f64| if c == 0.0 { 0.0 } else { -(c / n) * (c / n).log2() };
            if n == 0.0 { 0.0 } else { t(p) + t(q) }
        };
        let mut values: Vec<f64> = train.iter().map(|s| s.score).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let n = train.len() as f64;
        let pos = train.iter().filter(|s| s.is_adversarial).count() as f64;
        let parent = h(pos, n - pos);
        let gains: Vec<(f64, f64)> = values
            .windows(2)
            .map(|w| {
                let t = (w[0] + w[1]) / 2.0;
                let lp = train.iter().filter(|s| s.score < t && s.is_adversarial).count() as f64;
                let ln = train.iter().filter(|s| s.score < t && !s.is_adversarial).count() as f64;
                let (rp, rn) = (pos - lp, n - pos - ln);
                (t, parent - (lp + ln) / n * h(lp, ln) - (rp + rn) / n * h(rp, rn))
            })
            .collect();
        let max = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
        gains.into_iter().find(|g| g.1 >= max - GAIN_TIE_TOLERANCE)
    }

    #[test]
    fn perfect_split() {
        let m = learn_threshold(&ls(&[50.0, 100.0], &[200.0, 300.0]), FrequencyBand::Unfiltered).unwrap();
        assert_eq!(m.threshold, 150.0);
        assert!((m.stats.info_gain - 1.0).abs() < 1e-12);
        assert!(!m.stats.degenerate);
        assert_eq!(brute_force(&ls(&[50.0, 100.0], &[200.0, 300.0])), Some((150.0, m.stats.info_gain)));
    }

    #[test]
    fn identical_scores_are_degenerate() {
        let m = learn_threshold(&ls(&[100.0], &[100.0]), FrequencyBand::Unfiltered).unwrap();
        assert_eq!(m.stats.info_gain, 0.0);
        assert!(m.stats.degenerate);
        assert!(!detect(100.0, &m));
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(learn_threshold(&ls(&[1.0, 2.0], &[]), FrequencyBand::Unfiltered), Err(DetectionError::SingleClass));
        assert_eq!(learn_threshold(&[], FrequencyBand::Unfiltered), Err(DetectionError::Empty));
        assert!(matches!(
            learn_threshold(&ls(&[f64::NAN], &[1.0]), FrequencyBand::Unfiltered),
            Err(DetectionError::BadScore(_))
        ));
    }

    #[test]
    fn strict_detection_rule() {
        let m = learn_threshold(&ls(&[50.0, 100.0], &[200.0, 300.0]), FrequencyBand::Unfiltered).unwrap();
        assert!(detect(149.0, &m));
        assert!(!detect(150.0, &m));
        assert!(!detect(2500.0, &m));
    }

    #[test]
    fn ties_prefer_smallest_threshold() {
        // splitting at 15 or 35 isolates one minority point on either side
        let m = learn_threshold(&ls(&[10.0, 40.0], &[20.0, 30.0]), FrequencyBand::Unfiltered).unwrap();
        assert_eq!(m.threshold, 15.0);
        assert_eq!(brute_force(&ls(&[10.0, 40.0], &[20.0, 30.0])).unwrap().0, 15.0);
    }

    fn member(band: usize, threshold: f64) -> ThresholdModel {
        ThresholdModel {
            threshold,
            band: CANONICAL_BANDS[band],
            stats: TrainingStats { info_gain: 0.0, n_adversarial: 1, n_benign: 1, degenerate: false },
        }
    }

    fn vector(eps: [u32; 5], truth: bool) -> ScoreVector {
        let mut v = ScoreVector::complete(eps.map(|e| FloodingScore { epsilon: e, flipped: true, calls_used: 1 }));
        v.is_adversarial = Some(truth);
        v
    }

    fn members() -> Vec<ThresholdModel> {
        (0..5).map(|b| member(b, 500.0)).collect()
    }

    #[test]
    fn majority_counts() {
        let ms = members();
        assert!(majority_vote(&vector([100; 5], true), &ms).unwrap());
        assert!(!majority_vote(&vector([100, 100, 900, 900, 900], true), &ms).unwrap());
        assert!(majority_vote(&vector([100, 100, 100, 900, 900], true), &ms).unwrap());
        assert_eq!(majority_vote(&vector([100; 5], true), &ms[..4]), Err(DetectionError::MemberCount(4)));
        let mut swapped = members();
        swapped.swap(0, 1);
        assert!(matches!(majority_vote(&vector([1; 5], true), &swapped), Err(DetectionError::MemberOrder { .. })));
    }

    #[test]
    fn ltv_learns_four() {
        // adversarial rows collect 4-5 votes, benign rows up to 3
        let train = vec![
            vector([100, 100, 100, 100, 900], true),
            vector([100, 100, 100, 100, 100], true),
            vector([100, 100, 100, 900, 100], true),
            vector([100, 100, 100, 900, 900], false),
            vector([100, 900, 900, 900, 900], false),
            vector([900, 900, 900, 900, 900], false),
        ];
        let m = learn_vote_threshold(&train, members()).unwrap();
        assert_eq!(m.vote_threshold, 4);
        assert_eq!(m.training_f1[3], 1.0);
    }

    #[test]
    fn ltv_all_tied_prefers_five() {
        // every member votes the same way on every row
        let train = vec![vector([100; 5], true), vector([900; 5], false), vector([100; 5], false)];
        let m = learn_vote_threshold(&train, members()).unwrap();
        assert!(m.training_f1.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(m.vote_threshold, 5);
    }

    #[test]
    fn ltv_rejects_single_class() {
        let train = vec![vector([100; 5], true)];
        assert_eq!(learn_vote_threshold(&train, members()), Err(DetectionError::SingleClass));
    }

    proptest! {
        #[test]
        fn threshold_matches_brute_force(
            points in prop::collection::vec((0u32..60, any::<bool>()), 2..40),
        ) {
            let train: Vec<LabeledScore> =
                points.iter().map(|&(s, a)| LabeledScore { score: (s * 50) as f64, is_adversarial: a }).collect();
            prop_assume!(train.iter().any(|s| s.is_adversarial) && train.iter().any(|s| !s.is_adversarial));
            let m = learn_threshold(&train, FrequencyBand::Unfiltered).unwrap();
            match brute_force(&train) {
                Some((t, g)) => {
                    prop_assert_eq!(m.threshold, t);
                    prop_assert!((m.stats.info_gain - g).abs() <= GAIN_TIE_TOLERANCE);
                }
                None => prop_assert!(m.stats.degenerate),
            }
        }

        #[test]
        fn monotone_relabeling_preserves_split(
            points in prop::collection::vec((1u32..60, any::<bool>()), 2..40),
        ) {
            let train: Vec<LabeledScore> =
                points.iter().map(|&(s, a)| LabeledScore { score: s as f64, is_adversarial: a }).collect();
            prop_assume!(train.iter().any(|s| s.is_adversarial) && train.iter().any(|s| !s.is_adversarial));
            let warped: Vec<LabeledScore> =
                train.iter().map(|s| LabeledScore { score: s.score.powi(3) + 7.0, ..*s }).collect();
            let a = learn_threshold(&train, FrequencyBand::Unfiltered).unwrap();
            let b = learn_threshold(&warped, FrequencyBand::Unfiltered).unwrap();
            let split = |m: &ThresholdModel, t: &[LabeledScore]| t.iter().map(|s| detect(s.score, m)).collect::<Vec<_>>();
            prop_assert_eq!(split(&a, &train), split(&b, &warped));
            prop_assert!((a.stats.info_gain - b.stats.info_gain).abs() < 1e-12);
        }

        #[test]
        fn separable_sets_split_perfectly(
            adv in prop::collection::vec(1u32..50, 1..20),
            ben in prop::collection::vec(50u32..100, 1..20),
        ) {
            let train = ls(&adv.iter().map(|&v| v as f64).collect::<Vec<_>>(), &ben.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let m = learn_threshold(&train, FrequencyBand::Unfiltered).unwrap();
            prop_assert!((m.stats.info_gain - entropy_bits(adv.len(), ben.len())).abs() < 1e-12);
            prop_assert!(train.iter().all(|s| detect(s.score, &m) == s.is_adversarial));
        }

        #[test]
        fn majority_is_k3(eps in prop::array::uniform5(0u32..1000), th in prop::array::uniform5(0u32..1000)) {
            let ms: Vec<ThresholdModel> = th.iter().enumerate().map(|(b, &t)| member(b, t as f64)).collect();
            let v = vector(eps, true);
            let k3 = VotingModel::new(ms.clone(), 3).unwrap();
            prop_assert_eq!(majority_vote(&v, &ms).unwrap(), k3.is_adversarial(&v).unwrap());
        }

        #[test]
        fn votes_monotone_in_scores(eps in prop::array::uniform5(0u32..1000), dec in prop::array::uniform5(0u32..1000)) {
            let voting = VotingModel::new(members(), 3).unwrap();
            let lower: [u32; 5] = std::array::from_fn(|i| eps[i].saturating_sub(dec[i]));
            prop_assert!(voting.votes(&vector(lower, true)).unwrap() >= voting.votes(&vector(eps, true)).unwrap());
        }
    }
}
