//! Score populations, error rates and decision thresholds.
//!
//! Scores are angles in radians. A comparison is a match iff `score <= t`;
//! ties count as matches.

mod classify;
mod rates;
mod scores;
mod summary;
mod sweep;
mod thresholds;

pub use classify::{evaluate_three_way, three_way_classify, ConfusionMatrix, ThreeWay};
pub use rates::{
    apcer, apcer_for, attack_success_levels, bpcer, fmr, fnmr, map_rc, mmpmr, wc_mmpmr,
};
pub use scores::{
    compute_scores, load_scores, read_scores, save_scores, write_scores, AttackScores,
    ComparisonType, ScoreOptions, ScoreRecord, ScoreSet, Slot, SystemScores, DEFAULT_SYSTEM,
};
pub use summary::{evaluate, EvaluationSummary, MapValue, ThresholdRule};
pub use sweep::{det_sweep, SweepRow};
pub use thresholds::{
    candidate_grid, threshold_at_apcer, threshold_at_fmr, threshold_at_mmpmr, threshold_wc,
};

/// Which morph attacks a metric looks at, by morph-kind label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphFilter<'a> {
    All,
    /// Every label except the worst-case one.
    Real,
    Label(&'a str),
}

impl MorphFilter<'_> {
    pub fn accepts(&self, attack_id: &str) -> bool {
        let label = crate::morphing::morph_label(attack_id);
        match self {
            MorphFilter::All => true,
            MorphFilter::Real => label != crate::morphing::WORST_CASE_LABEL,
            MorphFilter::Label(l) => label == *l,
        }
    }

    pub(crate) fn describe(&self) -> String {
        match self {
            MorphFilter::All => "morph".into(),
            MorphFilter::Real => "non-worst-case morph".into(),
            MorphFilter::Label(l) => format!("morph[{l}]"),
        }
    }
}

pub const WORST_CASE: MorphFilter<'static> = MorphFilter::Label(crate::morphing::WORST_CASE_LABEL);

/// Number of scores `<= t`.
#[inline]
pub(crate) fn count_matches(scores: &[f64], t: f64) -> usize {
    scores.iter().filter(|&&s| s <= t).count()
}

/// Number of scores `<= t` in an ascending slice.
#[inline]
pub(crate) fn count_matches_sorted(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&s| s <= t)
}

pub(crate) fn proportion(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

pub(crate) fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}
