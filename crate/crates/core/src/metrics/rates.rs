use std::collections::{BTreeMap, BTreeSet};

use super::{count_matches, proportion, MorphFilter, ScoreSet, SystemScores, WORST_CASE};
use crate::error::{Error, Result};

fn nonempty<'a>(scores: &'a [f64], label: &str) -> Result<&'a [f64]> {
    if scores.is_empty() {
        Err(Error::EmptyPopulation(label.to_owned()))
    } else {
        Ok(scores)
    }
}

/// Share of non-mated comparisons accepted as a match.
pub fn fmr(scores: &SystemScores, t: f64) -> Result<f64> {
    let pop = nonempty(scores.nonmated(), "nonmated")?;
    Ok(proportion(count_matches(pop, t), pop.len()))
}

/// Share of mated comparisons rejected.
pub fn fnmr(scores: &SystemScores, t: f64) -> Result<f64> {
    let pop = nonempty(scores.mated(), "mated")?;
    Ok(proportion(pop.len() - count_matches(pop, t), pop.len()))
}

/// Share of genuine (mated) presentations rejected. Equal to [`fnmr`].
pub fn bpcer(scores: &SystemScores, t: f64) -> Result<f64> {
    fnmr(scores, t)
}

/// Share of morph-vs-probe comparisons accepted, over every attack.
pub fn apcer(scores: &SystemScores, t: f64) -> Result<f64> {
    apcer_for(scores, t, MorphFilter::All)
}

pub fn apcer_for(scores: &SystemScores, t: f64, filter: MorphFilter<'_>) -> Result<f64> {
    let pop = scores.morph_scores(filter);
    let pop = nonempty(&pop, &filter.describe())?;
    Ok(proportion(count_matches(pop, t), pop.len()))
}

/// Per attack, the smallest threshold at which a probe of each contributor matches.
pub fn attack_success_levels(scores: &SystemScores, filter: MorphFilter<'_>) -> Result<Vec<f64>> {
    let levels: Vec<f64> = scores
        .attacks()
        .iter()
        .filter(|(id, _)| filter.accepts(id))
        .map(|(id, a)| {
            if a.first.is_empty() || a.second.is_empty() {
                Err(Error::MalformedAttack(id.clone()))
            } else {
                Ok(a.success_level())
            }
        })
        .collect::<Result<_>>()?;
    if levels.is_empty() {
        return Err(Error::EmptyPopulation(format!(
            "{} attacks",
            filter.describe()
        )));
    }
    Ok(levels)
}

/// Share of attacks where a probe of both contributors matches the morph.
pub fn mmpmr(scores: &SystemScores, t: f64, filter: MorphFilter<'_>) -> Result<f64> {
    let levels = attack_success_levels(scores, filter)?;
    Ok(proportion(count_matches(&levels, t), levels.len()))
}

/// MMPMR over the worst-case attacks.
pub fn wc_mmpmr(scores: &SystemScores, t: f64) -> Result<f64> {
    mmpmr(scores, t, WORST_CASE)
}

/// Share of attacks for which at least `r` probes of each contributor match
/// on at least `c` systems, each system at its own threshold.
pub fn map_rc(
    scores: &ScoreSet,
    thresholds: &BTreeMap<String, f64>,
    r: usize,
    c: usize,
    filter: MorphFilter<'_>,
) -> Result<f64> {
    let systems = scores.systems();
    if r == 0 || c == 0 {
        return Err(Error::InvalidRC(format!(
            "r and c must be positive, got r={r}, c={c}"
        )));
    }
    if c > systems.len() {
        return Err(Error::InvalidRC(format!(
            "c={c} exceeds the {} available systems",
            systems.len()
        )));
    }
    let mut reference: Option<(&str, BTreeSet<&str>)> = None;
    let mut per_system = Vec::with_capacity(systems.len());
    for (sys, s) in systems {
        let t = *thresholds
            .get(sys)
            .ok_or_else(|| Error::InvalidRC(format!("no threshold for system {sys}")))?;
        let ids: BTreeSet<&str> = s
            .attacks()
            .keys()
            .map(String::as_str)
            .filter(|id| filter.accepts(id))
            .collect();
        match &reference {
            None => reference = Some((sys, ids)),
            Some((first, ref_ids)) if *ref_ids != ids => {
                return Err(Error::AttackIdMismatch((*first).to_owned(), sys.clone()))
            }
            Some(_) => {}
        }
        per_system.push((s, t));
    }
    let (_, ids) = reference.expect("at least one system");
    if ids.is_empty() {
        return Err(Error::EmptyPopulation(format!(
            "{} attacks",
            filter.describe()
        )));
    }
    let successes = ids
        .iter()
        .filter(|id| {
            let hits = per_system
                .iter()
                .filter(|(s, t)| {
                    let a = &s.attacks()[**id];
                    count_matches(&a.first, *t) >= r && count_matches(&a.second, *t) >= r
                })
                .count();
            hits >= c
        })
        .count();
    Ok(proportion(successes, ids.len()))
}
