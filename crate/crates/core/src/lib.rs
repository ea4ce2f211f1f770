//! adaptlab: a desk-scale laboratory for layer-selective adult-to-child
//! transfer learning in acoustic frame classification.
//!
//! The crate generates seeded synthetic corpora with controllable acoustic
//! (spectral warp, variance inflation) and pronunciation (segment
//! substitution) variability, trains an i-vector-augmented p-norm network on
//! the adult domain, adapts selected layers to child domains under
//! simultaneous or disjoint-alternating schedules, and sweeps the resulting
//! grid into CSV tables and SVG plots.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod ivector;
pub mod network;
pub mod rng;
pub mod textio;
pub mod transfer;

pub use corpus::{AgeProfile, ClassInventory, Corpus, CorpusSpec, Speaker, Utterance};
pub use error::{Error, Result};
pub use ivector::{IVector, TvModel, Ubm};
pub use network::{Arch, Network, TrainConfig, TrainTrace};
pub use transfer::{AdaptConfig, AdaptResult, Schedule};
