//! Synthetic latent-space populations.
//!
//! Class centres are uniform on the unit sphere; each identity scatters its
//! samples with a von Mises-Fisher distribution whose concentration is drawn
//! from a normal distribution truncated below at `kappa_floor`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{dot, Dataset, Embedding, Role, SampleRecord, ZERO_NORM};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub dimension: usize,
    pub n_identities: usize,
    pub samples_per_identity: usize,
    pub kappa_mu: f64,
    pub kappa_sigma: f64,
    pub kappa_floor: f64,
    pub seed: u64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            dimension: 128,
            n_identities: 250,
            samples_per_identity: 25,
            kappa_mu: 250.0,
            kappa_sigma: 50.0,
            kappa_floor: 1.0,
            seed: 0,
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParams(m));
        if self.dimension < 2 {
            return fail(format!("dimension must be >= 2, got {}", self.dimension));
        }
        if self.n_identities < 2 {
            return fail(format!(
                "need at least 2 identities, got {}",
                self.n_identities
            ));
        }
        if self.samples_per_identity < 1 {
            return fail("samples per identity must be >= 1".into());
        }
        check_kappa_params(self.kappa_mu, self.kappa_sigma, self.kappa_floor)
    }
}

fn check_kappa_params(mu: f64, sigma: f64, floor: f64) -> Result<()> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "kappa floor must be positive, got {floor}"
        )));
    }
    if !(mu > floor && mu.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "kappa mean {mu} must exceed the floor {floor}"
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "kappa sigma must be >= 0, got {sigma}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCluster {
    pub subject_id: String,
    pub mean_direction: Embedding,
    pub kappa: f64,
}

/// Uniform direction on the unit (d-1)-sphere from normalized Gaussian draws.
pub fn sample_uniform_direction<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Embedding {
    assert!(dimension >= 2, "dimension must be >= 2");
    loop {
        let v: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm >= ZERO_NORM {
            return Embedding::from_raw(v.into_iter().map(|c| c / norm).collect());
        }
    }
}

/// Draws kappa from N(mu, sigma), redrawing anything below `floor`.
pub fn sample_kappa<R: Rng + ?Sized>(mu: f64, sigma: f64, floor: f64, rng: &mut R) -> Result<f64> {
    check_kappa_params(mu, sigma, floor)?;
    if sigma == 0.0 {
        return Ok(mu);
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
    loop {
        let k = normal.sample(rng);
        if k >= floor {
            return Ok(k);
        }
    }
}

/// Von Mises-Fisher distribution on the unit sphere.
///
/// The component along the mean direction is drawn with Wood's rejection
/// scheme; the remainder is a uniform tangent direction, and the result is
/// reflected onto the mean direction with a Householder transform.
#[derive(Clone, Debug)]
pub struct VonMisesFisher {
    mean: Vec<f64>,
    kappa: f64,
    // envelope parameters
    b: f64,
    x0: f64,
    c: f64,
    beta: Beta<f64>,
    // e1 - mean, or None when the mean already is e1
    householder: Option<(Vec<f64>, f64)>,
}

impl VonMisesFisher {
    pub fn new(mean_direction: &Embedding, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidKappa(kappa));
        }
        let mean = mean_direction.normalize()?.into_vec();
        let dim = mean.len();
        let m1 = (dim - 1) as f64;
        // (-2k + sqrt(4k^2 + m1^2)) / m1, rearranged to avoid cancellation
        let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + m1 * ((1.0 - x0) * (1.0 + x0)).ln();
        let beta =
            Beta::new(m1 / 2.0, m1 / 2.0).map_err(|e| Error::InvalidParams(e.to_string()))?;

        let mut u = mean.iter().map(|c| -c).collect::<Vec<_>>();
        u[0] += 1.0;
        let uu = dot(&u, &u);
        let householder = (uu > 1e-30).then_some((u, uu));

        Ok(Self {
            mean,
            kappa,
            b,
            x0,
            c,
            beta,
            householder,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Returns `(w, 1 - w)` for the cosine to the mean direction.
    fn sample_cosine<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let m1 = (self.mean.len() - 1) as f64;
        loop {
            let z: f64 = self.beta.sample(rng);
            let denom = 1.0 - (1.0 - self.b) * z;
            let w = (1.0 - (1.0 + self.b) * z) / denom;
            let one_minus_w = 2.0 * self.b * z / denom;
            let u: f64 = rng.random();
            let log_accept = self.kappa * w + m1 * (1.0 - self.x0 * w).ln() - self.c;
            if log_accept >= u.ln() {
                return (w, one_minus_w);
            }
        }
    }
}

impl Distribution<Embedding> for VonMisesFisher {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Embedding {
        let dim = self.mean.len();
        let (w, one_minus_w) = self.sample_cosine(rng);
        let tangent_scale = (one_minus_w * (1.0 + w)).max(0.0).sqrt();
        let tangent = sample_uniform_direction(dim - 1, rng);

        let mut x = Vec::with_capacity(dim);
        x.push(w);
        x.extend(tangent.as_slice().iter().map(|t| t * tangent_scale));

        if let Some((u, uu)) = &self.householder {
            let f = 2.0 * dot(u, &x) / uu;
            for (xi, ui) in x.iter_mut().zip(u) {
                *xi -= f * ui;
            }
        }
        let norm = dot(&x, &x).sqrt();
        Embedding::from_raw(x.into_iter().map(|c| c / norm).collect())
    }
}

/// Draws one sample from vMF(`mean_direction`, `kappa`).
pub fn sample_vmf<R: Rng + ?Sized>(
    mean_direction: &Embedding,
    kappa: f64,
    rng: &mut R,
) -> Result<Embedding> {
    Ok(VonMisesFisher::new(mean_direction, kappa)?.sample(rng))
}

#[derive(Clone, Debug)]
pub struct Population {
    pub clusters: Vec<IdentityCluster>,
    pub dataset: Dataset,
}

/// `s000`, `s001`, ... padded so lexicographic order equals index order.
pub fn subject_name(index: usize, n_identities: usize) -> String {
    let width = (n_identities.max(2) - 1).to_string().len();
    format!("s{index:0width$}")
}

fn sample_name(index: usize, samples: usize) -> String {
    let width = (samples.max(2) - 1).to_string().len();
    format!("{index:0width$}")
}

/// Simulates identities and their samples. Sample 0 of each identity is the
/// enrollment, the rest are probes.
pub fn simulate(params: &SimulationParams) -> Result<Population> {
    params.validate()?;
    let per_identity: Vec<(IdentityCluster, Vec<SampleRecord>)> = (0..params.n_identities)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(params.seed, Stream::Identity(i as u64));
            let subject_id = subject_name(i, params.n_identities);
            let centre = sample_uniform_direction(params.dimension, &mut rng);
            let kappa = sample_kappa(
                params.kappa_mu,
                params.kappa_sigma,
                params.kappa_floor,
                &mut rng,
            )?;
            let vmf = VonMisesFisher::new(&centre, kappa)?;
            let records = (0..params.samples_per_identity)
                .map(|k| {
                    let role = if k == 0 { Role::Enroll } else { Role::Probe };
                    SampleRecord::bonafide(
                        subject_id.clone(),
                        sample_name(k, params.samples_per_identity),
                        role,
                        vmf.sample(&mut rng),
                    )
                })
                .collect();
            let cluster = IdentityCluster {
                subject_id,
                mean_direction: centre,
                kappa,
            };
            Ok((cluster, records))
        })
        .collect::<Result<_>>()?;

    let mut clusters = Vec::with_capacity(per_identity.len());
    let mut records = Vec::with_capacity(params.n_identities * params.samples_per_identity);
    for (cluster, rs) in per_identity {
        clusters.push(cluster);
        records.extend(rs);
    }
    Ok(Population {
        clusters,
        dataset: Dataset::new(params.dimension, records)?,
    })
}

impl Population {
    /// Class centre of every identity, keyed by subject id.
    pub fn centres(&self) -> std::collections::BTreeMap<String, Embedding> {
        self.clusters
            .iter()
            .map(|c| (c.subject_id.clone(), c.mean_direction.clone()))
            .collect()
    }
}

pub fn simulate_population(params: &SimulationParams) -> Result<Dataset> {
    simulate(params).map(|p| p.dataset)
}
