//! Bayesian age-curve models for decathlon performance.
//!
//! The crate fits three hierarchical regression families to decathlon
//! results: a baseline model on total points, a per-event ("simple") model,
//! and a compositional model in which every event also regresses on the
//! events contested before it on the same day sheet. Posterior draws feed
//! latent-skill percentiles, career simulations and the validation studies
//! in [`evaluate`].
//!
//! The usual pipeline:
//!
//! ```no_run
//! use decathlon::dataset::{self, FilterConfig};
//! use decathlon::basis::BasisKind;
//! use decathlon::inference::{fit, Family, ModelSpec, SamplerConfig};
//!
//! let loaded = dataset::load("results.csv")?;
//! let kept = dataset::filter_athletes(&loaded.records, &FilterConfig::default());
//! let data = dataset::standardize(&kept)?;
//! let spec = ModelSpec::new(Family::Compositional, BasisKind::CubicPolynomial, &data)?;
//! let fit = fit(&spec, &data, &SamplerConfig::default().with_seed(7))?;
//! # Ok::<(), decathlon::Error>(())
//! ```

pub mod basis;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod events;
pub mod gateway;
pub mod inference;
pub mod posterior;
pub mod rng;
pub mod scoring;
pub mod simulate;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use events::EventId;
