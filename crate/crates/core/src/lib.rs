//! Morphing-attack vulnerability analysis for face-recognition latent spaces.
//!
//! Identities are modelled as von Mises-Fisher clusters on the unit
//! hypersphere and compared by angle (radians, smaller is more similar).
//! The crate covers four stages:
//!
//! * [`embeddings`]: the embedding/dataset data model, angle scoring and the
//!   embeddings CSV format.
//! * [`simulator`]: synthetic populations with per-identity concentration.
//! * [`morphing`]: worst-case morph embeddings, pair selection and attacks.
//! * [`metrics`]: score populations, FMR/FNMR/APCER/BPCER/MMPMR/MAP, threshold
//!   rules (including the worst-case MMPMR rule) and sweeps.

pub mod embeddings;
pub mod error;
pub mod metrics;
pub mod morphing;
pub mod rng;
pub mod simulator;

pub use embeddings::{
    angle, average_embedding, Dataset, Embedding, Role, SampleKind, SampleRecord,
};
pub use error::{Error, Result};
