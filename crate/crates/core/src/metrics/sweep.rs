use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rates::attack_success_levels;
use super::thresholds::candidate_grid;
use super::{count_matches_sorted, proportion, sorted, MorphFilter, SystemScores, WORST_CASE};
use crate::error::{Error, Result};
use crate::morphing::WORST_CASE_LABEL;

/// Every rate at one candidate threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub fmr: f64,
    pub fnmr: f64,
    pub apcer: Option<f64>,
    /// MMPMR per non-worst-case morph kind.
    pub mmpmr: BTreeMap<String, f64>,
    pub wcmmpmr: Option<f64>,
}

/// Rates at every candidate threshold of the pooled scores.
pub fn det_sweep(scores: &SystemScores) -> Result<Vec<SweepRow>> {
    if scores.mated().is_empty() {
        return Err(Error::EmptyPopulation("mated".into()));
    }
    if scores.nonmated().is_empty() {
        return Err(Error::EmptyPopulation("nonmated".into()));
    }
    let mated = sorted(scores.mated().to_vec());
    let nonmated = sorted(scores.nonmated().to_vec());
    let morph = sorted(scores.morph_scores(MorphFilter::All));

    let mut per_kind: Vec<(String, Vec<f64>)> = Vec::new();
    for label in scores
        .morph_labels()
        .into_iter()
        .filter(|l| l != WORST_CASE_LABEL)
    {
        let levels = sorted(attack_success_levels(scores, MorphFilter::Label(&label))?);
        per_kind.push((label, levels));
    }
    let wc_levels = match attack_success_levels(scores, WORST_CASE) {
        Ok(l) => Some(sorted(l)),
        Err(Error::EmptyPopulation(_)) => None,
        Err(e) => return Err(e),
    };

    let mut pooled = Vec::with_capacity(mated.len() + nonmated.len() + morph.len());
    pooled.extend_from_slice(&mated);
    pooled.extend_from_slice(&nonmated);
    pooled.extend_from_slice(&morph);
    let rate = |pop: &[f64], t: f64| proportion(count_matches_sorted(pop, t), pop.len());

    Ok(candidate_grid(&pooled)
        .into_iter()
        .map(|t| SweepRow {
            t,
            fmr: rate(&nonmated, t),
            fnmr: proportion(mated.len() - count_matches_sorted(&mated, t), mated.len()),
            apcer: (!morph.is_empty()).then(|| rate(&morph, t)),
            mmpmr: per_kind
                .iter()
                .map(|(l, lv)| (l.clone(), rate(lv, t)))
                .collect(),
            wcmmpmr: wc_levels.as_ref().map(|lv| rate(lv, t)),
        })
        .collect())
}
