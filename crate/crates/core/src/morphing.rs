//! Worst-case morphs, pair selection and attack synthesis.
//!
//! Under angle scoring, the embedding that minimizes the larger of its two
//! angles to a pair `(z1, z2)` is their bisector, the normalized sum of the
//! normalized inputs. No morph can get closer to both contributors at once,
//! so attacks built from it bound what any morphing tool can achieve.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::io::{csv_error, format_float};
use crate::embeddings::{angle, check_dim, Dataset, Embedding, Role, SampleKind, SampleRecord};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::simulator::VonMisesFisher;

/// Pairs closer than this to antipodal have no well-defined bisector.
pub const ANTIPODAL_MARGIN: f64 = 1e-6;

/// Attack-id prefix that marks worst-case attacks.
pub const WORST_CASE_LABEL: &str = "wc";

/// Morph-kind label used when an attack id carries no `label/` prefix.
pub const DEFAULT_INGESTED_LABEL: &str = "ingested";

/// Morph-kind label of an attack id: the part before the first `/`.
pub fn morph_label(attack_id: &str) -> &str {
    match attack_id.split_once('/') {
        Some((label, _)) if !label.is_empty() => label,
        _ => DEFAULT_INGESTED_LABEL,
    }
}

fn normalized_pair(z1: &Embedding, z2: &Embedding) -> Result<(Embedding, Embedding, f64)> {
    check_dim(z1.dim(), z2.dim())?;
    let a = z1.normalize()?;
    let b = z2.normalize()?;
    let theta = angle(&a, &b)?;
    if theta >= std::f64::consts::PI - ANTIPODAL_MARGIN {
        return Err(Error::AntipodalPair(theta));
    }
    Ok((a, b, theta))
}

/// Unit bisector of `z1` and `z2`.
pub fn worst_case_embedding(z1: &Embedding, z2: &Embedding) -> Result<Embedding> {
    let (a, b, _) = normalized_pair(z1, z2)?;
    let sum: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x + y)
        .collect();
    Embedding::from_raw(sum).normalize()
}

/// Mean angle between vMF draws and their mean direction, by quadrature over
/// the angle density `exp(kappa cos t) sin(t)^(d-2)`.
pub fn vmf_mean_angle(dimension: usize, kappa: f64) -> f64 {
    const INTERVALS: usize = 2048;
    let m = (dimension - 2) as f64;
    let spread = ((dimension - 1) as f64 / kappa).sqrt() + 1.0 / kappa.sqrt();
    let upper = (12.0 * spread).min(std::f64::consts::PI);
    let h = upper / INTERVALS as f64;
    let log_density = |t: f64| {
        let s = t.sin();
        let sin_term = if m == 0.0 {
            0.0
        } else if s <= 0.0 {
            f64::NEG_INFINITY
        } else {
            m * s.ln()
        };
        kappa * t.cos() + sin_term
    };
    let logs: Vec<f64> = (0..=INTERVALS).map(|i| log_density(i as f64 * h)).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut mass, mut first) = (0.0, 0.0);
    for (i, l) in logs.iter().enumerate() {
        let weight = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let g = (l - peak).exp() * weight;
        mass += g;
        first += g * i as f64 * h;
    }
    first / mass
}

/// Concentration whose vMF draws deviate from the mean by `mean_angle` on average.
pub fn kappa_for_mean_angle(dimension: usize, mean_angle: f64) -> Result<f64> {
    if dimension < 2 {
        return Err(Error::DimensionTooSmall(dimension));
    }
    let (mut lo, mut hi) = (1e-8f64.ln(), 1e16f64.ln());
    if !(mean_angle > vmf_mean_angle(dimension, hi.exp())
        && mean_angle < vmf_mean_angle(dimension, lo.exp()))
    {
        return Err(Error::InvalidInterpolation(format!(
            "noise angle {mean_angle} is outside the range a vMF perturbation can produce in {dimension} dimensions"
        )));
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if vmf_mean_angle(dimension, mid.exp()) > mean_angle {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Spherical interpolation at `alpha` from `z1` towards `z2`, then a vMF
/// perturbation with mean deviation `noise_angle`. `alpha = 0.5` without
/// noise is the worst-case embedding.
pub fn interpolated_morph<R: Rng + ?Sized>(
    z1: &Embedding,
    z2: &Embedding,
    alpha: f64,
    noise_angle: f64,
    rng: &mut R,
) -> Result<Embedding> {
    if !(noise_angle >= 0.0 && noise_angle.is_finite()) {
        return Err(Error::InvalidInterpolation(format!(
            "noise angle {noise_angle} must be >= 0"
        )));
    }
    let kappa = if noise_angle == 0.0 {
        None
    } else {
        Some(kappa_for_mean_angle(z1.dim(), noise_angle)?)
    };
    interpolated_morph_with_kappa(z1, z2, alpha, kappa, rng)
}

/// As [`interpolated_morph`], with the perturbation given directly as a vMF
/// concentration (`None` for no perturbation).
pub fn interpolated_morph_with_kappa<R: Rng + ?Sized>(
    z1: &Embedding,
    z2: &Embedding,
    alpha: f64,
    noise_kappa: Option<f64>,
    rng: &mut R,
) -> Result<Embedding> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInterpolation(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    let (a, b, theta) = normalized_pair(z1, z2)?;
    let base = if alpha == 0.5 {
        // bit-identical to the worst case
        worst_case_embedding(&a, &b)?
    } else if theta < 1e-12 {
        a
    } else {
        let wa = ((1.0 - alpha) * theta).sin() / theta.sin();
        let wb = (alpha * theta).sin() / theta.sin();
        let v: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| wa * x + wb * y)
            .collect();
        Embedding::from_raw(v).normalize()?
    };
    match noise_kappa {
        None => Ok(base),
        Some(kappa) => Ok(VonMisesFisher::new(&base, kappa)?.sample(rng)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityPair {
    pub subject_a: String,
    pub subject_b: String,
    /// Angle between the subjects' average embeddings.
    pub selection_angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStrategy {
    /// Each subject with its nearest neighbour by average embedding, deduplicated.
    MostSimilar,
    /// A seeded random perfect matching.
    RandomDisjoint,
}

pub fn select_pairs<R: Rng + ?Sized>(
    dataset: &Dataset,
    strategy: PairStrategy,
    rng: &mut R,
) -> Result<Vec<IdentityPair>> {
    let subjects: Vec<&str> = dataset.subjects().collect();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    let averages: Vec<Embedding> = subjects
        .par_iter()
        .map(|s| dataset.subject_average(s)?.normalize())
        .collect::<Result<_>>()?;

    let index_pairs: BTreeSet<(usize, usize)> = match strategy {
        PairStrategy::MostSimilar => {
            let nearest: Vec<usize> = (0..subjects.len())
                .into_par_iter()
                .map(|i| {
                    let mut best = (f64::INFINITY, usize::MAX);
                    for j in (0..subjects.len()).filter(|&j| j != i) {
                        let a = angle(&averages[i], &averages[j])?;
                        if a < best.0 {
                            best = (a, j);
                        }
                    }
                    Ok(best.1)
                })
                .collect::<Result<_>>()?;
            nearest
                .iter()
                .enumerate()
                .map(|(i, &j)| (i.min(j), i.max(j)))
                .collect()
        }
        PairStrategy::RandomDisjoint => {
            let mut order: Vec<usize> = (0..subjects.len()).collect();
            order.shuffle(rng);
            order
                .chunks_exact(2)
                .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
                .collect()
        }
    };

    index_pairs
        .into_iter()
        .map(|(i, j)| {
            Ok(IdentityPair {
                subject_a: subjects[i].to_owned(),
                subject_b: subjects[j].to_owned(),
                selection_angle: angle(&averages[i], &averages[j])?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    WorstCase,
    Ingested,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackRecord {
    pub attack_id: String,
    pub subject_a: String,
    pub subject_b: String,
    pub morph_embedding: Embedding,
    pub kind: AttackKind,
}

impl AttackRecord {
    pub fn label(&self) -> &str {
        morph_label(&self.attack_id)
    }

    /// The attack as a morph row of the embeddings CSV.
    pub fn to_sample(&self) -> SampleRecord {
        SampleRecord {
            subject_id: self.subject_a.clone(),
            sample_id: self.attack_id.clone(),
            role: Role::Enroll,
            kind: SampleKind::Morph,
            pair_subject: Some(self.subject_b.clone()),
            embedding: self.morph_embedding.clone(),
        }
    }
}

/// Which embedding of each contributor defines the morph endpoints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoints {
    #[default]
    Enrollment,
    /// Normalized average of the subject's bona fide samples.
    SubjectMean,
}

fn endpoint(dataset: &Dataset, subject: &str, endpoints: Endpoints) -> Result<Embedding> {
    match endpoints {
        Endpoints::Enrollment => Ok(dataset.enrollment(subject)?.embedding.clone()),
        Endpoints::SubjectMean => dataset.subject_average(subject)?.normalize(),
    }
}

pub fn attack_id(label: &str, pair: &IdentityPair) -> String {
    format!("{label}/{}+{}", pair.subject_a, pair.subject_b)
}

/// One worst-case attack per pair between the given per-subject directions,
/// e.g. the class centres of a simulated population.
pub fn generate_wc_attacks_between(
    directions: &BTreeMap<String, Embedding>,
    pairs: &[IdentityPair],
) -> Result<Vec<AttackRecord>> {
    let get = |s: &str| {
        directions
            .get(s)
            .ok_or_else(|| Error::MissingSubject(s.to_owned()))
    };
    pairs
        .par_iter()
        .map(|pair| {
            Ok(AttackRecord {
                attack_id: attack_id(WORST_CASE_LABEL, pair),
                subject_a: pair.subject_a.clone(),
                subject_b: pair.subject_b.clone(),
                morph_embedding: worst_case_embedding(
                    get(&pair.subject_a)?,
                    get(&pair.subject_b)?,
                )?,
                kind: AttackKind::WorstCase,
            })
        })
        .collect()
}

/// One worst-case attack per pair, in pair order.
pub fn generate_wc_attacks(
    dataset: &Dataset,
    pairs: &[IdentityPair],
    endpoints: Endpoints,
) -> Result<Vec<AttackRecord>> {
    pairs
        .par_iter()
        .map(|pair| {
            let za = endpoint(dataset, &pair.subject_a, endpoints)?;
            let zb = endpoint(dataset, &pair.subject_b, endpoints)?;
            Ok(AttackRecord {
                attack_id: attack_id(WORST_CASE_LABEL, pair),
                subject_a: pair.subject_a.clone(),
                subject_b: pair.subject_b.clone(),
                morph_embedding: worst_case_embedding(&za, &zb)?,
                kind: AttackKind::WorstCase,
            })
        })
        .collect()
}

/// Settings for imperfect morphs standing in for real morphing tools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSpec {
    pub label: String,
    /// Interpolation parameter drawn uniformly from this closed range.
    pub alpha_range: (f64, f64),
    pub noise_angle: f64,
}

/// One interpolated attack per pair. Pair `i` uses its own random stream.
pub fn generate_interpolated_attacks(
    dataset: &Dataset,
    pairs: &[IdentityPair],
    endpoints: Endpoints,
    spec: &InterpolationSpec,
    seed: u64,
) -> Result<Vec<AttackRecord>> {
    let (lo, hi) = spec.alpha_range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidInterpolation(format!(
            "alpha range ({lo}, {hi}) outside [0, 1]"
        )));
    }
    if spec.label.is_empty() || spec.label.contains('/') || spec.label == WORST_CASE_LABEL {
        return Err(Error::InvalidInterpolation(format!(
            "unusable morph label '{}'",
            spec.label
        )));
    }
    if !(spec.noise_angle >= 0.0 && spec.noise_angle.is_finite()) {
        return Err(Error::InvalidInterpolation(format!(
            "noise angle {} must be >= 0",
            spec.noise_angle
        )));
    }
    let kappa = if spec.noise_angle == 0.0 {
        None
    } else {
        Some(kappa_for_mean_angle(dataset.dimension(), spec.noise_angle)?)
    };
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let mut rng = substream(seed, Stream::Custom(i as u64));
            let alpha = if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            };
            let za = endpoint(dataset, &pair.subject_a, endpoints)?;
            let zb = endpoint(dataset, &pair.subject_b, endpoints)?;
            Ok(AttackRecord {
                attack_id: attack_id(&spec.label, pair),
                subject_a: pair.subject_a.clone(),
                subject_b: pair.subject_b.clone(),
                morph_embedding: interpolated_morph_with_kappa(&za, &zb, alpha, kappa, &mut rng)?,
                kind: AttackKind::Ingested,
            })
        })
        .collect()
}

/// Morph rows of a dataset as attacks. Ids labelled `wc/` are worst-case.
pub fn attacks_from_dataset(dataset: &Dataset) -> Vec<AttackRecord> {
    dataset
        .morphs()
        .map(|r| AttackRecord {
            attack_id: r.sample_id.clone(),
            subject_a: r.subject_id.clone(),
            subject_b: r.pair_subject.clone().unwrap_or_default(),
            morph_embedding: r.embedding.clone(),
            kind: if morph_label(&r.sample_id) == WORST_CASE_LABEL {
                AttackKind::WorstCase
            } else {
                AttackKind::Ingested
            },
        })
        .collect()
}

/// Splits off morph rows, leaving the bona fide dataset and the attacks.
pub fn split_attacks(dataset: &Dataset) -> Result<(Dataset, Vec<AttackRecord>)> {
    let attacks = attacks_from_dataset(dataset);
    let bonafide = dataset
        .records()
        .iter()
        .filter(|r| r.kind == SampleKind::Bonafide)
        .cloned()
        .collect();
    Ok((Dataset::new(dataset.dimension(), bonafide)?, attacks))
}

const PAIRS_HEADER: [&str; 3] = ["subject_a", "subject_b", "selection_angle"];

pub fn write_pairs<W: Write>(pairs: &[IdentityPair], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PAIRS_HEADER).map_err(csv_error)?;
    for p in pairs {
        wtr.write_record([
            p.subject_a.as_str(),
            p.subject_b.as_str(),
            &format_float(p.selection_angle),
        ])
        .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<IdentityPair>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?;
    if header.iter().ne(PAIRS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("pairs header must be {}", PAIRS_HEADER.join(",")),
        });
    }
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| Error::Parse { line, message };
        if row.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", row.len())));
        }
        let (a, b) = (row[0].to_owned(), row[1].to_owned());
        if a == b {
            return Err(err(format!("subject {a} paired with itself")));
        }
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        if !seen.insert(key) {
            return Err(err(format!("duplicate pair ({a}, {b})")));
        }
        let selection_angle: f64 = row[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("'{}' is not a number", &row[2])))?;
        pairs.push(IdentityPair {
            subject_a: a,
            subject_b: b,
            selection_angle,
        });
    }
    Ok(pairs)
}

pub fn save_pairs(pairs: &[IdentityPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_pairs(pairs, BufWriter::new(file)).map_err(|e| e.in_file(path))
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<IdentityPair>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_pairs(BufReader::new(file)).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use crate::simulator::{sample_uniform_direction, simulate_population, SimulationParams};
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn e(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn orthogonal_bisector() {
        let e1 = Embedding::basis(4, 0).unwrap();
        let e2 = Embedding::basis(4, 1).unwrap();
        let wc = worst_case_embedding(&e1, &e2).unwrap();
        let expected = [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0];
        for (a, b) in wc.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((angle(&wc, &e1).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((angle(&wc, &e2).unwrap() - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn bisector_of_identical_inputs() {
        let z = e(&[0.6, 0.8, 0.0]);
        let wc = worst_case_embedding(&z, &z).unwrap();
        for (a, b) in wc.as_slice().iter().zip(z.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bisector_errors() {
        let z = e(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            worst_case_embedding(&z, &z.scaled(-2.0).unwrap()),
            Err(Error::AntipodalPair(_))
        ));
        assert!(matches!(
            worst_case_embedding(&z, &e(&[0.0, 0.0, 0.0])),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            worst_case_embedding(&z, &e(&[1.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bisector_halves_the_angle() {
        let mut rng = StreamRng::seed_from_u64(1);
        for _ in 0..1_000 {
            let z1 = sample_uniform_direction(64, &mut rng);
            let z2 = sample_uniform_direction(64, &mut rng);
            let theta = angle(&z1, &z2).unwrap();
            let wc = worst_case_embedding(&z1, &z2).unwrap();
            let a1 = angle(&wc, &z1).unwrap();
            let a2 = angle(&wc, &z2).unwrap();
            assert!((a1 - a2).abs() < 1e-9);
            assert!((a1 - theta / 2.0).abs() < 1e-9);
            let swapped = worst_case_embedding(&z2, &z1).unwrap();
            for (x, y) in wc.as_slice().iter().zip(swapped.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let mut rng = StreamRng::seed_from_u64(2);
        let z1 = e(&[2.0, 0.5, -1.0, 0.3]);
        let z2 = e(&[-0.4, 1.0, 0.2, 0.9]);
        let start = interpolated_morph(&z1, &z2, 0.0, 0.0, &mut rng).unwrap();
        let n1 = z1.normalize().unwrap();
        for (a, b) in start.as_slice().iter().zip(n1.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mid = interpolated_morph(&z1, &z2, 0.5, 0.0, &mut rng).unwrap();
        assert_eq!(mid, worst_case_embedding(&z1, &z2).unwrap());
        assert!(interpolated_morph(&z1, &z2, 1.5, 0.0, &mut rng).is_err());
        assert!(interpolated_morph(&z1, &z2, 0.5, -0.1, &mut rng).is_err());
        assert!(interpolated_morph(&z1, &z2, 0.5, 2.0, &mut rng).is_err());
    }

    #[test]
    fn interpolated_morphs_never_beat_the_bisector() {
        let mut rng = StreamRng::seed_from_u64(3);
        let kappas: Vec<Option<f64>> = [0.0, 0.01, 0.1, 0.3]
            .iter()
            .map(|&n| (n > 0.0).then(|| kappa_for_mean_angle(16, n).unwrap()))
            .collect();
        for i in 0..10_000 {
            let z1 = sample_uniform_direction(16, &mut rng);
            let z2 = sample_uniform_direction(16, &mut rng);
            let alpha = rng.random_range(0.0..=1.0);
            let m = if i % 20 == 0 {
                interpolated_morph(&z1, &z2, alpha, 0.15, &mut rng).unwrap()
            } else {
                interpolated_morph_with_kappa(&z1, &z2, alpha, kappas[i % 4], &mut rng).unwrap()
            };
            let half = angle(&z1, &z2).unwrap() / 2.0;
            let worst = angle(&m, &z1).unwrap().max(angle(&m, &z2).unwrap());
            assert!(worst >= half - 1e-9);
        }
    }

    #[test]
    fn noise_kappa_matches_requested_angle() {
        let mut rng = StreamRng::seed_from_u64(4);
        let mean = sample_uniform_direction(32, &mut rng);
        for target in [0.02, 0.2, 0.8] {
            let kappa = kappa_for_mean_angle(32, target).unwrap();
            let vmf = VonMisesFisher::new(&mean, kappa).unwrap();
            let got = (0..20_000)
                .map(|_| angle(&vmf.sample(&mut rng), &mean).unwrap())
                .sum::<f64>()
                / 20_000.0;
            assert!(
                (got - target).abs() < 0.01 * target.max(0.1),
                "target {target}, got {got}"
            );
        }
        assert!(kappa_for_mean_angle(32, PI / 2.0 + 0.1).is_err());
    }

    #[test]
    fn morph_labels() {
        assert_eq!(morph_label("wc/s001+s002"), "wc");
        assert_eq!(morph_label("mipgan/17"), "mipgan");
        assert_eq!(morph_label("17"), DEFAULT_INGESTED_LABEL);
        assert_eq!(morph_label("/17"), DEFAULT_INGESTED_LABEL);
    }

    fn dataset_from_averages(points: &[[f64; 3]]) -> Dataset {
        let records = points
            .iter()
            .enumerate()
            .map(|(i, p)| SampleRecord::bonafide(format!("p{i}"), "0", Role::Enroll, e(p)))
            .collect();
        Dataset::new(3, records).unwrap()
    }

    #[test]
    fn two_subjects_give_one_pair() {
        let ds = dataset_from_averages(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let mut rng = StreamRng::seed_from_u64(5);
        for strategy in [PairStrategy::MostSimilar, PairStrategy::RandomDisjoint] {
            let pairs = select_pairs(&ds, strategy, &mut rng).unwrap();
            assert_eq!(pairs.len(), 1);
            assert_eq!(
                (pairs[0].subject_a.as_str(), pairs[0].subject_b.as_str()),
                ("p0", "p1")
            );
        }
        let lonely = dataset_from_averages(&[[1.0, 0.0, 0.0]]);
        assert!(matches!(
            select_pairs(&lonely, PairStrategy::MostSimilar, &mut rng),
            Err(Error::TooFewSubjects(1))
        ));
    }

    #[test]
    fn most_similar_matches_exhaustive_search() {
        let points = [
            [1.0, 0.0, 0.0],
            [0.9, 0.2, 0.0],
            [0.0, 1.0, 0.1],
            [0.1, 0.9, 0.5],
            [0.0, 0.0, 1.0],
        ];
        let ds = dataset_from_averages(&points);
        let pairs = select_pairs(
            &ds,
            PairStrategy::MostSimilar,
            &mut StreamRng::seed_from_u64(0),
        )
        .unwrap();

        // brute force: nearest neighbour of every point by cosine, then dedup
        let mut expected = BTreeSet::new();
        for i in 0..points.len() {
            let ni = points[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut best = (f64::NEG_INFINITY, 0);
            for j in 0..points.len() {
                if i == j {
                    continue;
                }
                let nj = points[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                let cos = (0..3).map(|k| points[i][k] * points[j][k]).sum::<f64>() / (ni * nj);
                if cos > best.0 {
                    best = (cos, j);
                }
            }
            expected.insert((format!("p{}", i.min(best.1)), format!("p{}", i.max(best.1))));
        }
        let got: BTreeSet<(String, String)> = pairs
            .iter()
            .map(|p| (p.subject_a.clone(), p.subject_b.clone()))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn random_disjoint_is_a_matching() {
        let ds = simulate_population(&SimulationParams {
            dimension: 8,
            n_identities: 11,
            samples_per_identity: 2,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let pairs = select_pairs(
            &ds,
            PairStrategy::RandomDisjoint,
            &mut StreamRng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(pairs.len(), 5);
        let mut used = BTreeSet::new();
        for p in &pairs {
            assert!(used.insert(p.subject_a.clone()));
            assert!(used.insert(p.subject_b.clone()));
            assert!(p.subject_a < p.subject_b);
        }
    }

    #[test]
    fn most_similar_pair_count_bounds() {
        let ds = simulate_population(&SimulationParams {
            dimension: 32,
            n_identities: 1000,
            samples_per_identity: 3,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let pairs = select_pairs(
            &ds,
            PairStrategy::MostSimilar,
            &mut StreamRng::seed_from_u64(0),
        )
        .unwrap();
        assert!((500..=1000).contains(&pairs.len()), "{}", pairs.len());
    }

    #[test]
    fn most_similar_ignores_uniform_scaling() {
        let ds = simulate_population(&SimulationParams {
            dimension: 16,
            n_identities: 40,
            samples_per_identity: 4,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let scaled_records = ds
            .records()
            .iter()
            .map(|r| SampleRecord {
                embedding: r.embedding.scaled(7.5).unwrap(),
                ..r.clone()
            })
            .collect();
        let scaled = Dataset::new(16, scaled_records).unwrap();
        let mut rng = StreamRng::seed_from_u64(0);
        let a = select_pairs(&ds, PairStrategy::MostSimilar, &mut rng).unwrap();
        let b = select_pairs(&scaled, PairStrategy::MostSimilar, &mut rng).unwrap();
        let names = |v: &[IdentityPair]| {
            v.iter()
                .map(|p| (p.subject_a.clone(), p.subject_b.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(names(&a), names(&b));
    }

    #[test]
    fn wc_attacks_bisect_enrollments() {
        let ds = simulate_population(&SimulationParams {
            dimension: 64,
            n_identities: 250,
            samples_per_identity: 3,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let pairs = select_pairs(
            &ds,
            PairStrategy::RandomDisjoint,
            &mut StreamRng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(pairs.len(), 125);
        let attacks = generate_wc_attacks(&ds, &pairs, Endpoints::Enrollment).unwrap();
        assert_eq!(attacks.len(), 125);
        for at in &attacks {
            let ea = &ds.enrollment(&at.subject_a).unwrap().embedding;
            let eb = &ds.enrollment(&at.subject_b).unwrap().embedding;
            let half = angle(ea, eb).unwrap() / 2.0;
            assert!((angle(&at.morph_embedding, ea).unwrap() - half).abs() < 1e-9);
            assert!((angle(&at.morph_embedding, eb).unwrap() - half).abs() < 1e-9);
            assert_eq!(at.kind, AttackKind::WorstCase);
            assert_eq!(at.label(), WORST_CASE_LABEL);
        }
        let means = generate_wc_attacks(&ds, &pairs, Endpoints::SubjectMean).unwrap();
        assert_eq!(means.len(), 125);
    }

    #[test]
    fn degenerate_pair_morph_is_the_enrollment() {
        let z = e(&[0.0, 0.6, 0.8]);
        let records = vec![
            SampleRecord::bonafide("a", "0", Role::Enroll, z.clone()),
            SampleRecord::bonafide("b", "0", Role::Enroll, z.clone()),
        ];
        let ds = Dataset::new(3, records).unwrap();
        let pair = IdentityPair {
            subject_a: "a".into(),
            subject_b: "b".into(),
            selection_angle: 0.0,
        };
        let attacks =
            generate_wc_attacks(&ds, std::slice::from_ref(&pair), Endpoints::Enrollment).unwrap();
        for (x, y) in attacks[0]
            .morph_embedding
            .as_slice()
            .iter()
            .zip(z.as_slice())
        {
            assert!((x - y).abs() < 1e-12);
        }
        let missing = IdentityPair {
            subject_b: "zz".into(),
            ..pair
        };
        assert!(matches!(
            generate_wc_attacks(&ds, &[missing], Endpoints::Enrollment),
            Err(Error::MissingSubject(_))
        ));
    }

    #[test]
    fn attacks_round_trip_through_morph_rows() {
        let ds = simulate_population(&SimulationParams {
            dimension: 8,
            n_identities: 6,
            samples_per_identity: 3,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let pairs = select_pairs(
            &ds,
            PairStrategy::RandomDisjoint,
            &mut StreamRng::seed_from_u64(2),
        )
        .unwrap();
        let wc = generate_wc_attacks(&ds, &pairs, Endpoints::Enrollment).unwrap();
        let spec = InterpolationSpec {
            label: "interp".into(),
            alpha_range: (0.3, 0.7),
            noise_angle: 0.05,
        };
        let interp =
            generate_interpolated_attacks(&ds, &pairs, Endpoints::Enrollment, &spec, 11).unwrap();
        let combined = ds
            .with_records(wc.iter().chain(&interp).map(AttackRecord::to_sample))
            .unwrap();
        let (bonafide, attacks) = split_attacks(&combined).unwrap();
        assert_eq!(bonafide, ds);
        assert_eq!(attacks.len(), 6);
        assert_eq!(
            attacks
                .iter()
                .filter(|a| a.kind == AttackKind::WorstCase)
                .count(),
            3
        );
        assert_eq!(&attacks[..3], &wc[..]);
    }

    #[test]
    fn pairs_csv_round_trip_and_errors() {
        let pairs = vec![
            IdentityPair {
                subject_a: "a".into(),
                subject_b: "b".into(),
                selection_angle: 0.25,
            },
            IdentityPair {
                subject_a: "c".into(),
                subject_b: "d".into(),
                selection_angle: 1.125,
            },
        ];
        let mut buf = Vec::new();
        write_pairs(&pairs, &mut buf).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), pairs);

        let dup = "subject_a,subject_b,selection_angle\na,b,0.1\nb,a,0.1\n";
        assert!(matches!(
            read_pairs(dup.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let selfie = "subject_a,subject_b,selection_angle\na,a,0.1\n";
        assert!(matches!(
            read_pairs(selfie.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
