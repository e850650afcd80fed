//! Labelled comparison scores and the scores CSV:
//! `system_id,comparison_type,attack_id,contributor_slot,score`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::io::{csv_error, format_float};
use crate::embeddings::{dot, unit_angle, Dataset, Embedding};
use crate::error::{Error, Result};
use crate::morphing::AttackRecord;
use crate::rng::{substream, Stream};

pub const DEFAULT_SYSTEM: &str = "default";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonType {
    Mated,
    Nonmated,
    Morph,
}

impl ComparisonType {
    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonType::Mated => "mated",
            ComparisonType::Nonmated => "nonmated",
            ComparisonType::Morph => "morph",
        }
    }
}

impl fmt::Display for ComparisonType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ComparisonType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mated" => Ok(ComparisonType::Mated),
            "nonmated" => Ok(ComparisonType::Nonmated),
            "morph" => Ok(ComparisonType::Morph),
            other => Err(format!("unknown comparison type '{other}'")),
        }
    }
}

/// Which contributor's probe a morph score compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    First,
    Second,
}

impl Slot {
    pub fn number(self) -> u8 {
        match self {
            Slot::First => 1,
            Slot::Second => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub system_id: String,
    pub comparison_type: ComparisonType,
    pub attack_id: Option<String>,
    pub contributor_slot: Option<Slot>,
    pub score: f64,
}

impl ScoreRecord {
    pub fn mated(score: f64) -> Self {
        Self::plain(ComparisonType::Mated, score)
    }

    pub fn nonmated(score: f64) -> Self {
        Self::plain(ComparisonType::Nonmated, score)
    }

    pub fn morph(attack_id: impl Into<String>, slot: Slot, score: f64) -> Self {
        Self {
            system_id: DEFAULT_SYSTEM.into(),
            comparison_type: ComparisonType::Morph,
            attack_id: Some(attack_id.into()),
            contributor_slot: Some(slot),
            score,
        }
    }

    fn plain(comparison_type: ComparisonType, score: f64) -> Self {
        Self {
            system_id: DEFAULT_SYSTEM.into(),
            comparison_type,
            attack_id: None,
            contributor_slot: None,
            score,
        }
    }

    pub fn with_system(mut self, system_id: impl Into<String>) -> Self {
        self.system_id = system_id.into();
        self
    }
}

fn check_score(score: f64) -> Result<()> {
    if (0.0..=std::f64::consts::PI).contains(&score) {
        Ok(())
    } else {
        Err(Error::InvalidScore(format!("{score} is outside [0, pi]")))
    }
}

/// Morph scores of one attack against each contributor's probes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttackScores {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl AttackScores {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Self {
        Self { first, second }
    }

    pub fn slot(&self, slot: Slot) -> &[f64] {
        match slot {
            Slot::First => &self.first,
            Slot::Second => &self.second,
        }
    }

    fn slot_mut(&mut self, slot: Slot) -> &mut Vec<f64> {
        match slot {
            Slot::First => &mut self.first,
            Slot::Second => &mut self.second,
        }
    }

    /// Smallest threshold at which both contributors have a matching probe.
    pub fn success_level(&self) -> f64 {
        let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        min(&self.first).max(min(&self.second))
    }

    pub fn len(&self) -> usize {
        self.first.len() + self.second.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All scores of one recognition system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemScores {
    mated: Vec<f64>,
    nonmated: Vec<f64>,
    attacks: BTreeMap<String, AttackScores>,
}

impl SystemScores {
    pub fn new(
        mated: Vec<f64>,
        nonmated: Vec<f64>,
        attacks: BTreeMap<String, AttackScores>,
    ) -> Result<Self> {
        for &s in mated.iter().chain(&nonmated) {
            check_score(s)?;
        }
        for (id, a) in &attacks {
            if a.first.is_empty() || a.second.is_empty() {
                return Err(Error::MalformedAttack(id.clone()));
            }
            for &s in a.first.iter().chain(&a.second) {
                check_score(s)?;
            }
        }
        Ok(Self {
            mated,
            nonmated,
            attacks,
        })
    }

    pub fn mated(&self) -> &[f64] {
        &self.mated
    }

    pub fn nonmated(&self) -> &[f64] {
        &self.nonmated
    }

    pub fn attacks(&self) -> &BTreeMap<String, AttackScores> {
        &self.attacks
    }

    /// All morph comparison scores of the attacks accepted by `filter`.
    pub fn morph_scores(&self, filter: super::MorphFilter<'_>) -> Vec<f64> {
        self.attacks
            .iter()
            .filter(|(id, _)| filter.accepts(id))
            .flat_map(|(_, a)| a.first.iter().chain(&a.second).copied())
            .collect()
    }

    /// Distinct morph-kind labels present, sorted.
    pub fn morph_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .attacks
            .keys()
            .map(|id| crate::morphing::morph_label(id).to_owned())
            .collect();
        labels.dedup();
        labels.sort();
        labels.dedup();
        labels
    }
}

/// Scores grouped per system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreSet {
    systems: BTreeMap<String, SystemScores>,
}

impl ScoreSet {
    pub fn single(system_id: impl Into<String>, scores: SystemScores) -> Self {
        let mut systems = BTreeMap::new();
        systems.insert(system_id.into(), scores);
        Self { systems }
    }

    pub fn insert(&mut self, system_id: impl Into<String>, scores: SystemScores) {
        self.systems.insert(system_id.into(), scores);
    }

    pub fn systems(&self) -> &BTreeMap<String, SystemScores> {
        &self.systems
    }

    pub fn system(&self, system_id: &str) -> Result<&SystemScores> {
        self.systems
            .get(system_id)
            .ok_or_else(|| Error::UnknownSystem(system_id.to_owned()))
    }

    /// The only system, or the one named `default` when there are several.
    pub fn primary(&self) -> Result<(&str, &SystemScores)> {
        if self.systems.len() == 1 {
            let (k, v) = self.systems.iter().next().expect("one system");
            return Ok((k, v));
        }
        self.systems
            .get_key_value(DEFAULT_SYSTEM)
            .map(|(k, v)| (k.as_str(), v))
            .ok_or_else(|| Error::UnknownSystem(DEFAULT_SYSTEM.into()))
    }

    pub fn from_records(records: impl IntoIterator<Item = ScoreRecord>) -> Result<Self> {
        #[derive(Default)]
        struct Builder {
            mated: Vec<f64>,
            nonmated: Vec<f64>,
            attacks: BTreeMap<String, AttackScores>,
        }
        let mut builders: BTreeMap<String, Builder> = BTreeMap::new();
        for r in records {
            check_score(r.score)?;
            let b = builders.entry(r.system_id.clone()).or_default();
            match (r.comparison_type, r.attack_id, r.contributor_slot) {
                (ComparisonType::Mated, None, None) => b.mated.push(r.score),
                (ComparisonType::Nonmated, None, None) => b.nonmated.push(r.score),
                (ComparisonType::Morph, Some(id), Some(slot)) => b
                    .attacks
                    .entry(id)
                    .or_default()
                    .slot_mut(slot)
                    .push(r.score),
                (ComparisonType::Morph, ..) => {
                    return Err(Error::InvalidScore(
                        "morph score without attack id and slot".into(),
                    ))
                }
                (t, ..) => {
                    return Err(Error::InvalidScore(format!(
                        "{t} score carries attack fields"
                    )))
                }
            }
        }
        let systems = builders
            .into_iter()
            .map(|(id, b)| Ok((id, SystemScores::new(b.mated, b.nonmated, b.attacks)?)))
            .collect::<Result<_>>()?;
        Ok(Self { systems })
    }

    /// Records in canonical order: per system, mated, non-mated, then morph
    /// scores by attack id and slot.
    pub fn records(&self) -> impl Iterator<Item = ScoreRecord> + '_ {
        self.systems.iter().flat_map(|(sys, s)| {
            let plain = s
                .mated
                .iter()
                .map(move |&x| ScoreRecord::mated(x).with_system(sys.clone()))
                .chain(
                    s.nonmated
                        .iter()
                        .map(move |&x| ScoreRecord::nonmated(x).with_system(sys.clone())),
                );
            let morphs = s.attacks.iter().flat_map(move |(id, a)| {
                [Slot::First, Slot::Second]
                    .into_iter()
                    .flat_map(move |slot| {
                        a.slot(slot).iter().map(move |&x| {
                            ScoreRecord::morph(id.clone(), slot, x).with_system(sys.clone())
                        })
                    })
            });
            plain.chain(morphs)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub system_id: String,
    /// Keep at most this many non-mated scores, chosen with `seed`.
    pub nonmated_cap: Option<usize>,
    pub seed: u64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            system_id: DEFAULT_SYSTEM.into(),
            nonmated_cap: None,
            seed: 0,
        }
    }
}

fn unit(e: &Embedding) -> Result<Vec<f64>> {
    Ok(e.normalize()?.into_vec())
}

/// Mated scores over all within-subject pairs, non-mated scores of each
/// enrollment against every sample of other subjects, and morph scores of
/// each attack against the probes of both contributors.
pub fn compute_scores(
    dataset: &Dataset,
    attacks: &[AttackRecord],
    options: &ScoreOptions,
) -> Result<ScoreSet> {
    let subjects: Vec<&str> = dataset.subjects().collect();
    let samples: Vec<Vec<Vec<f64>>> = subjects
        .par_iter()
        .map(|s| dataset.samples(s)?.map(|r| unit(&r.embedding)).collect())
        .collect::<Result<_>>()?;
    let enrollments: Vec<Option<Vec<f64>>> = subjects
        .iter()
        .map(|s| match dataset.enrollment(s) {
            Ok(r) => unit(&r.embedding).map(Some),
            Err(Error::MissingEnrollment(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mated: Vec<f64> = samples
        .par_iter()
        .flat_map_iter(|own| {
            (0..own.len()).flat_map(move |i| {
                (i + 1..own.len()).map(move |j| unit_angle(dot(&own[i], &own[j])))
            })
        })
        .collect();

    let mut nonmated: Vec<f64> = (0..subjects.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let samples = &samples;
            enrollments[a].iter().flat_map(move |enr| {
                (0..samples.len())
                    .filter(move |&b| b != a)
                    .flat_map(move |b| samples[b].iter().map(move |v| unit_angle(dot(enr, v))))
            })
        })
        .collect();

    if let Some(cap) = options.nonmated_cap {
        if nonmated.len() > cap {
            let mut rng = substream(options.seed, Stream::NonmatedCap);
            let mut keep = index::sample(&mut rng, nonmated.len(), cap).into_vec();
            keep.sort_unstable();
            nonmated = keep.into_iter().map(|i| nonmated[i]).collect();
        }
    }

    let attack_scores: Vec<(String, AttackScores)> = attacks
        .par_iter()
        .map(|attack| {
            let morph = unit(&attack.morph_embedding)?;
            let slot_scores = |subject: &str| -> Result<Vec<f64>> {
                let probes: Vec<f64> = dataset
                    .probes(subject)?
                    .map(|p| unit(&p.embedding).map(|v| unit_angle(dot(&morph, &v))))
                    .collect::<Result<_>>()?;
                if probes.is_empty() {
                    return Err(Error::EmptyProbeSet(subject.to_owned()));
                }
                Ok(probes)
            };
            Ok((
                attack.attack_id.clone(),
                AttackScores::new(
                    slot_scores(&attack.subject_a)?,
                    slot_scores(&attack.subject_b)?,
                ),
            ))
        })
        .collect::<Result<_>>()?;
    let mut by_id = BTreeMap::new();
    for (id, scores) in attack_scores {
        if by_id.insert(id.clone(), scores).is_some() {
            return Err(Error::InvalidScore(format!("duplicate attack id {id}")));
        }
    }

    Ok(ScoreSet::single(
        options.system_id.clone(),
        SystemScores::new(mated, nonmated, by_id)?,
    ))
}

const SCORES_HEADER: [&str; 5] = [
    "system_id",
    "comparison_type",
    "attack_id",
    "contributor_slot",
    "score",
];

pub fn write_scores<W: Write>(scores: &ScoreSet, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SCORES_HEADER).map_err(csv_error)?;
    for r in scores.records() {
        let slot = r
            .contributor_slot
            .map(|s| s.number().to_string())
            .unwrap_or_default();
        wtr.write_record([
            r.system_id.as_str(),
            r.comparison_type.as_str(),
            r.attack_id.as_deref().unwrap_or(""),
            &slot,
            &format_float(r.score),
        ])
        .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_scores<R: Read>(reader: R) -> Result<ScoreSet> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?;
    if header.iter().ne(SCORES_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("scores header must be {}", SCORES_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| Error::Parse { line, message };
        if row.len() != SCORES_HEADER.len() {
            return Err(err(format!("expected 5 columns, found {}", row.len())));
        }
        let comparison_type: ComparisonType = row[1].parse().map_err(err)?;
        let attack_id = match &row[2] {
            "" => None,
            s => Some(s.to_owned()),
        };
        let contributor_slot = match &row[3] {
            "" => None,
            "1" => Some(Slot::First),
            "2" => Some(Slot::Second),
            other => {
                return Err(err(format!(
                    "contributor slot must be 1 or 2, found '{other}'"
                )))
            }
        };
        if (comparison_type == ComparisonType::Morph)
            != (attack_id.is_some() && contributor_slot.is_some())
            || (attack_id.is_some() != contributor_slot.is_some())
        {
            return Err(err(
                "attack_id and contributor_slot must be set exactly for morph rows".into(),
            ));
        }
        let score: f64 = row[4]
            .trim()
            .parse()
            .map_err(|_| err(format!("'{}' is not a number", &row[4])))?;
        check_score(score).map_err(|e| err(e.to_string()))?;
        let system_id = match &row[0] {
            "" => DEFAULT_SYSTEM.to_owned(),
            s => s.to_owned(),
        };
        records.push(ScoreRecord {
            system_id,
            comparison_type,
            attack_id,
            contributor_slot,
            score,
        });
    }
    ScoreSet::from_records(records)
}

pub fn save_scores(scores: &ScoreSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_scores(scores, BufWriter::new(file)).map_err(|e| e.in_file(path))
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoreSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_scores(BufReader::new(file)).map_err(|e| e.in_file(path))
}
