//! Embeddings, identities and angle-based scoring.
//!
//! Scores are dissimilarities: the angle in radians between two embeddings,
//! in `[0, pi]`. Inner products are clamped before `acos` so near-parallel
//! vectors never produce NaN.

pub(crate) mod io;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{format_float, load_dataset, read_dataset, save_dataset, write_dataset};

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// Tolerance on the norm of a unit embedding.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// A point in the latent space. Not necessarily unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::DimensionTooSmall(components.len()));
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(components))
    }

    /// Wraps components that are known to be finite with `len >= 2`.
    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        debug_assert!(components.len() >= 2);
        debug_assert!(components.iter().all(|c| c.is_finite()));
        Self(components)
    }

    /// The `i`-th standard basis vector in `dim` dimensions.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn scaled(&self, factor: f64) -> Result<Embedding> {
        Embedding::new(self.0.iter().map(|c| c * factor).collect())
    }

    /// Scales to unit norm. Fails with [`Error::ZeroVector`] when the norm is below 1e-12.
    pub fn normalize(&self) -> Result<Embedding> {
        let norm = self.norm();
        if norm < ZERO_NORM {
            return Err(Error::ZeroVector);
        }
        Ok(Embedding(self.0.iter().map(|c| c / norm).collect()))
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Embedding::new(value)
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

pub fn normalize(v: &Embedding) -> Result<Embedding> {
    v.normalize()
}

/// Angle in radians between `u` and `v`, in `[0, pi]`. Scale-invariant in both arguments.
pub fn angle(u: &Embedding, v: &Embedding) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    let nu = u.norm();
    let nv = v.norm();
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(unit_angle(dot(&u.0, &v.0) / (nu * nv)))
}

/// `acos` of a cosine clamped to `[-1, 1]`.
#[inline]
pub(crate) fn unit_angle(cosine: f64) -> f64 {
    cosine.clamp(-1.0, 1.0).acos()
}

/// Component-wise arithmetic mean. Left unnormalized.
pub fn average_embedding(samples: &[Embedding]) -> Result<Embedding> {
    let first = samples.first().ok_or(Error::EmptyInput)?;
    let mut sum = vec![0.0; first.dim()];
    for s in samples {
        check_dim(first.dim(), s.dim())?;
        for (acc, c) in sum.iter_mut().zip(&s.0) {
            *acc += c;
        }
    }
    let n = samples.len() as f64;
    Embedding::new(sum.into_iter().map(|c| c / n).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Enroll,
    Probe,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Enroll => "enroll",
            Role::Probe => "probe",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "enroll" => Ok(Role::Enroll),
            "probe" => Ok(Role::Probe),
            other => Err(format!("unknown role '{other}'")),
        }
    }
}

/// Bona fide sample, or a morph of two contributing subjects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Bonafide,
    Morph,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Bonafide => "bonafide",
            SampleKind::Morph => "morph",
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SampleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bonafide" => Ok(SampleKind::Bonafide),
            "morph" => Ok(SampleKind::Morph),
            other => Err(format!("unknown kind '{other}'")),
        }
    }
}

/// One face sample. For a morph, `subject_id` is the first contributor and
/// `pair_subject` the second.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub subject_id: String,
    pub sample_id: String,
    pub role: Role,
    pub kind: SampleKind,
    pub pair_subject: Option<String>,
    pub embedding: Embedding,
}

impl SampleRecord {
    pub fn bonafide(
        subject_id: impl Into<String>,
        sample_id: impl Into<String>,
        role: Role,
        embedding: Embedding,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            sample_id: sample_id.into(),
            role,
            kind: SampleKind::Bonafide,
            pair_subject: None,
            embedding,
        }
    }

    fn validate(&self) -> Result<()> {
        match (self.kind, &self.pair_subject) {
            (SampleKind::Bonafide, None) => Ok(()),
            (SampleKind::Bonafide, Some(_)) => Err(Error::InvalidRecord(format!(
                "bona fide sample ({}, {}) names a pair subject",
                self.subject_id, self.sample_id
            ))),
            (SampleKind::Morph, None) => Err(Error::InvalidRecord(format!(
                "morph ({}, {}) has no pair subject",
                self.subject_id, self.sample_id
            ))),
            (SampleKind::Morph, Some(p)) if *p == self.subject_id => {
                Err(Error::InvalidRecord(format!(
                    "morph ({}, {}) pairs a subject with itself",
                    self.subject_id, self.sample_id
                )))
            }
            (SampleKind::Morph, Some(_)) => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct SubjectIndex {
    enrollment: Option<usize>,
    probes: Vec<usize>,
    bonafide: Vec<usize>,
}

/// A validated collection of samples sharing one dimension.
#[derive(Clone, Debug)]
pub struct Dataset {
    dimension: usize,
    records: Vec<SampleRecord>,
    subjects: BTreeMap<String, SubjectIndex>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.records == other.records
    }
}

impl Dataset {
    pub fn new(dimension: usize, records: Vec<SampleRecord>) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::DimensionTooSmall(dimension));
        }
        let mut seen = HashSet::with_capacity(records.len());
        let mut subjects: BTreeMap<String, SubjectIndex> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.embedding.dim() != dimension {
                return Err(Error::InconsistentDimension {
                    expected: dimension,
                    actual: r.embedding.dim(),
                });
            }
            r.validate()?;
            if !seen.insert((r.subject_id.as_str(), r.sample_id.as_str())) {
                return Err(Error::DuplicateSample {
                    subject_id: r.subject_id.clone(),
                    sample_id: r.sample_id.clone(),
                });
            }
            if r.kind == SampleKind::Bonafide {
                let entry = subjects.entry(r.subject_id.clone()).or_default();
                entry.bonafide.push(i);
                match r.role {
                    // first enrollment in file order is the reference
                    Role::Enroll => {
                        entry.enrollment.get_or_insert(i);
                    }
                    Role::Probe => entry.probes.push(i),
                }
            }
        }
        if subjects.is_empty() {
            return Err(Error::NoBonafideSubject);
        }
        Ok(Self {
            dimension,
            records,
            subjects,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<SampleRecord> {
        self.records
    }

    /// Bona fide subject ids, sorted.
    pub fn subjects(&self) -> impl Iterator<Item = &str> {
        self.subjects.keys().map(String::as_str)
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn has_subject(&self, subject: &str) -> bool {
        self.subjects.contains_key(subject)
    }

    fn index(&self, subject: &str) -> Result<&SubjectIndex> {
        self.subjects
            .get(subject)
            .ok_or_else(|| Error::MissingSubject(subject.to_owned()))
    }

    /// The subject's enrollment sample (the first `enroll` row in file order).
    pub fn enrollment(&self, subject: &str) -> Result<&SampleRecord> {
        let idx = self.index(subject)?;
        idx.enrollment
            .map(|i| &self.records[i])
            .ok_or_else(|| Error::MissingEnrollment(subject.to_owned()))
    }

    pub fn probes(&self, subject: &str) -> Result<impl Iterator<Item = &SampleRecord>> {
        Ok(self
            .index(subject)?
            .probes
            .iter()
            .map(|&i| &self.records[i]))
    }

    /// All bona fide samples of a subject, enrollment and probes alike.
    pub fn samples(&self, subject: &str) -> Result<impl Iterator<Item = &SampleRecord>> {
        Ok(self
            .index(subject)?
            .bonafide
            .iter()
            .map(|&i| &self.records[i]))
    }

    pub fn morphs(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(|r| r.kind == SampleKind::Morph)
    }

    /// Mean of a subject's bona fide embeddings.
    pub fn subject_average(&self, subject: &str) -> Result<Embedding> {
        let samples: Vec<Embedding> = self
            .samples(subject)?
            .map(|r| r.embedding.clone())
            .collect();
        average_embedding(&samples)
    }

    /// A copy of this dataset with `extra` records appended.
    pub fn with_records(&self, extra: impl IntoIterator<Item = SampleRecord>) -> Result<Dataset> {
        let mut records = self.records.clone();
        records.extend(extra);
        Dataset::new(self.dimension, records)
    }
}
