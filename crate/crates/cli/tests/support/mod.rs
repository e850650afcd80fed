//! Exhaustive-count oracles. Nothing here calls the library's rate or
//! threshold code; each function scans flat records directly.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use morphguard::metrics::{ComparisonType, ScoreRecord, Slot};

fn of_type(records: &[ScoreRecord], ty: ComparisonType) -> impl Iterator<Item = &ScoreRecord> {
    records.iter().filter(move |r| r.comparison_type == ty)
}

fn share(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

pub fn fmr(records: &[ScoreRecord], t: f64) -> f64 {
    let all: Vec<f64> = of_type(records, ComparisonType::Nonmated)
        .map(|r| r.score)
        .collect();
    share(all.iter().filter(|&&s| s <= t).count(), all.len())
}

pub fn fnmr(records: &[ScoreRecord], t: f64) -> f64 {
    let all: Vec<f64> = of_type(records, ComparisonType::Mated)
        .map(|r| r.score)
        .collect();
    share(all.iter().filter(|&&s| s > t).count(), all.len())
}

/// Per morph comparison, every kind.
pub fn apcer(records: &[ScoreRecord], t: f64) -> f64 {
    let all: Vec<f64> = of_type(records, ComparisonType::Morph)
        .map(|r| r.score)
        .collect();
    share(all.iter().filter(|&&s| s <= t).count(), all.len())
}

fn label_of(attack_id: &str) -> &str {
    attack_id
        .split_once('/')
        .map(|(l, _)| l)
        .unwrap_or("ingested")
}

/// Attacks restricted to `label` (all when None): id to (slot-1 hits, slot-2 hits).
fn attack_hits(
    records: &[ScoreRecord],
    system: &str,
    t: f64,
    label: Option<&str>,
) -> BTreeMap<String, (usize, usize)> {
    let mut hits = BTreeMap::new();
    for r in of_type(records, ComparisonType::Morph) {
        let id = r.attack_id.as_deref().unwrap();
        if r.system_id != system || label.is_some_and(|l| label_of(id) != l) {
            continue;
        }
        let entry: &mut (usize, usize) = hits.entry(id.to_owned()).or_default();
        let hit = usize::from(r.score <= t);
        match r.contributor_slot.unwrap() {
            Slot::First => entry.0 += hit,
            Slot::Second => entry.1 += hit,
        }
    }
    hits
}

pub fn mmpmr(records: &[ScoreRecord], t: f64, label: Option<&str>) -> f64 {
    let system = &records[0].system_id;
    let hits = attack_hits(records, system, t, label);
    share(
        hits.values().filter(|(a, b)| *a >= 1 && *b >= 1).count(),
        hits.len(),
    )
}

pub fn map_rc(
    records: &[ScoreRecord],
    thresholds: &BTreeMap<String, f64>,
    r: usize,
    c: usize,
) -> f64 {
    let per_system: Vec<BTreeMap<String, (usize, usize)>> = thresholds
        .iter()
        .map(|(sys, &t)| attack_hits(records, sys, t, None))
        .collect();
    let ids: BTreeSet<&String> = per_system.iter().flat_map(|m| m.keys()).collect();
    let successes = ids
        .iter()
        .filter(|id| {
            per_system
                .iter()
                .filter(|m| m.get(**id).is_some_and(|(a, b)| *a >= r && *b >= r))
                .count()
                >= c
        })
        .count();
    share(successes, ids.len())
}

/// Sorted unique scores plus both ends of the range.
pub fn candidates(scores: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = scores.into_iter().chain([0.0, PI]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn next_candidate(grid: &[f64], t: f64) -> Option<f64> {
    grid.iter().copied().find(|&c| c > t)
}

/// E[X | X >= floor] for X ~ N(mu, sigma), by midpoint-rule integration.
pub fn truncated_normal_mean(mu: f64, sigma: f64, floor: f64) -> f64 {
    let steps = 200_000;
    let hi = mu + 12.0 * sigma;
    let h = (hi - floor) / steps as f64;
    let (mut mass, mut moment) = (0.0, 0.0);
    for i in 0..steps {
        let x = floor + (i as f64 + 0.5) * h;
        let p = (-0.5 * ((x - mu) / sigma).powi(2)).exp();
        mass += p;
        moment += x * p;
    }
    moment / mass
}

/// Angle between two vectors, computed from scratch.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}
