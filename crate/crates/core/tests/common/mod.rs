//! Brute-force reference implementations over flat score records. These
//! deliberately share no code path with the library's grouped evaluation.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use morphguard::metrics::{ComparisonType, ScoreRecord, Slot};

pub fn count(
    records: &[ScoreRecord],
    ty: ComparisonType,
    pred: impl Fn(f64) -> bool,
) -> (usize, usize) {
    let mut hits = 0;
    let mut total = 0;
    for r in records {
        if r.comparison_type == ty {
            total += 1;
            if pred(r.score) {
                hits += 1;
            }
        }
    }
    (hits, total)
}

pub fn fmr(records: &[ScoreRecord], t: f64) -> f64 {
    let (h, n) = count(records, ComparisonType::Nonmated, |s| s <= t);
    h as f64 / n as f64
}

pub fn fnmr(records: &[ScoreRecord], t: f64) -> f64 {
    let (h, n) = count(records, ComparisonType::Mated, |s| s > t);
    h as f64 / n as f64
}

pub fn apcer(records: &[ScoreRecord], t: f64) -> f64 {
    let (h, n) = count(records, ComparisonType::Morph, |s| s <= t);
    h as f64 / n as f64
}

fn attack_ids(records: &[ScoreRecord], label: Option<&str>) -> BTreeSet<String> {
    records
        .iter()
        .filter_map(|r| r.attack_id.clone())
        .filter(|id| label.is_none_or(|l| id.starts_with(&format!("{l}/"))))
        .collect()
}

/// Matching probes per slot for one attack on one system.
fn slot_hits(records: &[ScoreRecord], system: &str, attack: &str, slot: Slot, t: f64) -> usize {
    records
        .iter()
        .filter(|r| {
            r.system_id == system
                && r.attack_id.as_deref() == Some(attack)
                && r.contributor_slot == Some(slot)
                && r.score <= t
        })
        .count()
}

pub fn mmpmr(records: &[ScoreRecord], t: f64, label: Option<&str>) -> f64 {
    let ids = attack_ids(records, label);
    let system = records[0].system_id.clone();
    let wins = ids
        .iter()
        .filter(|id| {
            slot_hits(records, &system, id, Slot::First, t) >= 1
                && slot_hits(records, &system, id, Slot::Second, t) >= 1
        })
        .count();
    wins as f64 / ids.len() as f64
}

pub fn map_rc(
    records: &[ScoreRecord],
    thresholds: &BTreeMap<String, f64>,
    r: usize,
    c: usize,
) -> f64 {
    let ids = attack_ids(records, None);
    let mut wins = 0;
    for id in &ids {
        let mut systems_hit = 0;
        for (sys, &t) in thresholds {
            let a = slot_hits(records, sys, id, Slot::First, t);
            let b = slot_hits(records, sys, id, Slot::Second, t);
            if a >= r && b >= r {
                systems_hit += 1;
            }
        }
        if systems_hit >= c {
            wins += 1;
        }
    }
    wins as f64 / ids.len() as f64
}

/// Every distinct score plus 0 and pi, ascending.
pub fn candidates(scores: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = scores.into_iter().collect();
    v.push(0.0);
    v.push(std::f64::consts::PI);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

/// Candidate immediately above `t`.
pub fn next_candidate(grid: &[f64], t: f64) -> Option<f64> {
    grid.iter().copied().find(|&c| c > t)
}
