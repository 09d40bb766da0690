//! The three model families and their Gibbs sampler.
//!
//! Every family is a random-intercept regression on a standardized
//! response:
//!
//! ```text
//! y[r] = α[athlete(r)] + Σ_d β_d φ_d(age[r]) + Σ_{m<e} γ_m y_m[r] + ε,   ε ~ N(0, σ²)
//! α_i ~ N(μ_α, σ²_α),  μ_α ~ N(0, 1),  σ²_α ~ IG(2, 1),  β, γ ~ N(0, 1),  σ² ~ IG(2, 1)
//! ```
//!
//! The baseline family has a single block with total points as response and
//! no γ terms. The simple family has one block per event, also without γ.
//! The compositional family adds the γ terms for every preceding event.

mod conditionals;
mod design;
mod diagnostics;
mod fit;
mod gibbs;
mod persist;

use serde::{Deserialize, Serialize};

use crate::basis::{fit_knots, BasisKind, BasisSpec};
use crate::dataset::StandardizedDataset;
use crate::events::{EventId, N_EVENTS};
use crate::{Error, Result};

pub use conditionals::{
    alpha_conditional, coef_conditional, mu_conditional, sigma2_conditional, tau2_conditional,
    CoefConditional, InvGamma, NormalParams,
};
pub use design::{build_design, RegressionProblem};
pub use diagnostics::{
    diagnostics, effective_sample_size, split_rhat, Diagnostics, DiagnosticsSummary,
    ParameterDiagnostic, RHAT_THRESHOLD,
};
pub use fit::{fit, BlockDraws, DrawParams, EventParams, FitResult, SamplerConfig};
pub use gibbs::{gibbs_step, GibbsSampler, ParameterState};
pub use persist::{load_fit, save_fit, FIT_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Total points on age.
    Baseline,
    /// Each event on age, independently.
    Simple,
    /// Each event on age and all preceding events.
    Compositional,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Baseline => "baseline",
            Family::Simple => "simple",
            Family::Compositional => "compositional",
        }
    }

    pub fn has_events(self) -> bool {
        self != Family::Baseline
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Family::Baseline),
            "simple" => Ok(Family::Simple),
            "compositional" => Ok(Family::Compositional),
            _ => Err(format!("unknown family `{s}` (baseline|simple|compositional)")),
        }
    }
}

/// Response modelled by one block of parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Points,
    Event(EventId),
}

impl Target {
    pub fn label(self) -> &'static str {
        match self {
            Target::Points => "points",
            Target::Event(e) => e.label(),
        }
    }

    /// Stable per-target index; keys the sampler's random streams so that
    /// a given event draws the same numbers in every family.
    pub fn stream_index(self) -> u64 {
        match self {
            Target::Event(e) => e.index() as u64,
            Target::Points => N_EVENTS as u64,
        }
    }

    pub fn event_index(index: usize) -> Result<Target> {
        EventId::from_index(index)
            .map(Target::Event)
            .ok_or_else(|| Error::InvalidConfig(format!("event index {index} out of range 0..10")))
    }
}

/// Prior hyperparameters. Normal priors are (mean, standard deviation);
/// inverse-gamma priors are (shape, scale) on variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub coef_sd: f64,
    pub mu_mean: f64,
    pub mu_sd: f64,
    pub variance_shape: f64,
    pub variance_scale: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            coef_sd: 1.0,
            mu_mean: 0.0,
            mu_sd: 1.0,
            variance_shape: 2.0,
            variance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub basis: BasisSpec,
    pub priors: Priors,
}

impl ModelSpec {
    /// Spec with default priors and a basis fitted to the dataset's ages.
    pub fn new(family: Family, kind: BasisKind, data: &StandardizedDataset) -> Result<ModelSpec> {
        Ok(ModelSpec {
            family,
            basis: fit_knots(kind, &data.ages())?,
            priors: Priors::default(),
        })
    }

    pub fn with_basis(family: Family, basis: BasisSpec) -> ModelSpec {
        ModelSpec {
            family,
            basis,
            priors: Priors::default(),
        }
    }

    pub fn targets(&self) -> Vec<Target> {
        match self.family {
            Family::Baseline => vec![Target::Points],
            _ => EventId::ALL.iter().map(|&e| Target::Event(e)).collect(),
        }
    }

    /// Regressors of a block, excluding the intercept.
    pub fn column_names(&self, target: Target) -> Vec<String> {
        let mut names = self.basis.column_names();
        if let (Family::Compositional, Target::Event(e)) = (self.family, target) {
            names.extend(e.preceding().iter().map(|m| m.label().to_string()));
        }
        names
    }

    pub fn supports(&self, target: Target) -> bool {
        matches!(
            (self.family, target),
            (Family::Baseline, Target::Points) | (Family::Simple | Family::Compositional, Target::Event(_))
        )
    }
}
