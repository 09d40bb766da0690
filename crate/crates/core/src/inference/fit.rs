use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{diagnostics, DiagnosticsSummary};
use super::gibbs::{GibbsSampler, ParameterState};
use super::{build_design, Family, ModelSpec, Target};
use crate::dataset::{DatasetManifest, StandardizedDataset};
use crate::events::{EventId, N_EVENTS};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            iterations: 2000,
            burn_in: 1000,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        SamplerConfig { seed, ..self }
    }

    pub fn kept_per_chain(&self) -> usize {
        self.iterations - self.burn_in
    }

    pub fn n_draws(&self) -> usize {
        self.chains * self.kept_per_chain()
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "need chains ≥ 1 and iterations > burn-in ≥ 0, got {} chains, {} iterations, {} burn-in",
                self.chains, self.iterations, self.burn_in
            )));
        }
        Ok(())
    }
}

/// Stored draws of one block. Arrays are row-major with one row per draw;
/// draws are ordered chain by chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDraws {
    pub target: Target,
    pub column_names: Vec<String>,
    pub n_draws: usize,
    pub n_athletes: usize,
    pub alpha: Vec<f64>,
    pub mu_alpha: Vec<f64>,
    pub sigma2_alpha: Vec<f64>,
    pub coef: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl BlockDraws {
    fn with_capacity(target: Target, column_names: Vec<String>, n_draws: usize, n_athletes: usize) -> Self {
        let p = column_names.len();
        BlockDraws {
            target,
            column_names,
            n_draws: 0,
            n_athletes,
            alpha: Vec::with_capacity(n_draws * n_athletes),
            mu_alpha: Vec::with_capacity(n_draws),
            sigma2_alpha: Vec::with_capacity(n_draws),
            coef: Vec::with_capacity(n_draws * p),
            sigma2: Vec::with_capacity(n_draws),
        }
    }

    fn push(&mut self, state: &ParameterState) {
        self.alpha.extend_from_slice(&state.alpha);
        self.mu_alpha.push(state.mu_alpha);
        self.sigma2_alpha.push(state.sigma2_alpha);
        self.coef.extend_from_slice(&state.coef);
        self.sigma2.push(state.sigma2);
        self.n_draws += 1;
    }

    pub fn n_coef(&self) -> usize {
        self.column_names.len()
    }

    pub fn alpha_at(&self, draw: usize, athlete: usize) -> f64 {
        self.alpha[draw * self.n_athletes + athlete]
    }

    pub fn coef_at(&self, draw: usize) -> &[f64] {
        let p = self.n_coef();
        &self.coef[draw * p..(draw + 1) * p]
    }

    /// All draws of one coefficient.
    pub fn coef_column(&self, k: usize) -> Vec<f64> {
        let p = self.n_coef();
        (0..self.n_draws).map(|s| self.coef[s * p + k]).collect()
    }

    pub fn alpha_column(&self, athlete: usize) -> Vec<f64> {
        (0..self.n_draws).map(|s| self.alpha_at(s, athlete)).collect()
    }

    pub fn state(&self, draw: usize) -> ParameterState {
        ParameterState {
            alpha: self.alpha[draw * self.n_athletes..(draw + 1) * self.n_athletes].to_vec(),
            mu_alpha: self.mu_alpha[draw],
            sigma2_alpha: self.sigma2_alpha[draw],
            coef: self.coef_at(draw).to_vec(),
            sigma2: self.sigma2[draw],
        }
    }
}

/// Population-level parameters of one event at one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct EventParams {
    pub mu_alpha: f64,
    /// Standard deviation of the intercept population.
    pub sigma_alpha: f64,
    pub beta: Vec<f64>,
    /// Coefficients on the preceding events, zeros for the simple family.
    pub gamma: Vec<f64>,
    /// Residual standard deviation.
    pub sigma: f64,
}

/// One posterior draw of every event's population-level parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawParams {
    pub events: Vec<EventParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub dataset: DatasetManifest,
    pub sampler: SamplerConfig,
    pub blocks: Vec<BlockDraws>,
    pub diagnostics: Option<DiagnosticsSummary>,
}

impl FitResult {
    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn n_draws(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.n_draws)
    }

    pub fn athletes(&self) -> &[String] {
        &self.dataset.athletes
    }

    pub fn athlete_index(&self, id: &str) -> Result<usize> {
        self.dataset
            .athletes
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Error::UnknownAthlete(id.to_string()))
    }

    pub fn block(&self, target: Target) -> Option<&BlockDraws> {
        self.blocks.iter().find(|b| b.target == target)
    }

    pub fn event_block(&self, event: EventId) -> Result<&BlockDraws> {
        self.block(Target::Event(event)).ok_or(Error::UnsupportedFamily {
            family: self.family().label(),
            operation: "event-level queries",
        })
    }

    pub fn require_events(&self, operation: &'static str) -> Result<()> {
        if self.family().has_events() {
            Ok(())
        } else {
            Err(Error::UnsupportedFamily {
                family: self.family().label(),
                operation,
            })
        }
    }

    /// Event-level parameters of draw `s`.
    pub fn draw_params(&self, s: usize) -> Result<DrawParams> {
        self.require_events("event simulation")?;
        let d = self.spec.basis.dimension();
        let events = EventId::ALL
            .iter()
            .map(|&e| {
                let block = self.event_block(e)?;
                let coef = block.coef_at(s);
                let mut gamma = coef[d..].to_vec();
                gamma.resize(e.index(), 0.0);
                Ok(EventParams {
                    mu_alpha: block.mu_alpha[s],
                    sigma_alpha: block.sigma2_alpha[s].sqrt(),
                    beta: coef[..d].to_vec(),
                    gamma,
                    sigma: block.sigma2[s].sqrt(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DrawParams { events })
    }

    /// Intercepts of one athlete at draw `s`, in event order.
    pub fn athlete_intercepts(&self, athlete: usize, s: usize) -> Result<[f64; N_EVENTS]> {
        let mut out = [0.0; N_EVENTS];
        for e in EventId::ALL {
            out[e.index()] = self.event_block(e)?.alpha_at(s, athlete);
        }
        Ok(out)
    }
}

/// Run every block's chains and collect the post-burn-in draws.
pub fn fit(spec: &ModelSpec, data: &StandardizedDataset, config: &SamplerConfig) -> Result<FitResult> {
    config.validate()?;
    let problems = spec
        .targets()
        .into_iter()
        .map(|t| build_design(spec, data, t))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|b| (0..config.chains).map(move |c| (b, c)))
        .collect();
    let chains: Vec<Result<BlockDraws>> = jobs
        .par_iter()
        .map(|&(b, chain)| {
            let problem = &problems[b];
            let mut rng = rng::stream(config.seed, Purpose::Gibbs, problem.target.stream_index(), chain as u64);
            let mut sampler = GibbsSampler::new(problem, spec.priors);
            let mut state = sampler.initial_state(&mut rng);
            let mut kept = BlockDraws::with_capacity(
                problem.target,
                problem.column_names.clone(),
                config.kept_per_chain(),
                problem.n_athletes,
            );
            for iteration in 0..config.iterations {
                sampler
                    .step(&mut state, &mut rng)
                    .map_err(|detail| Error::NumericalFailure {
                        block: problem.target.label().to_string(),
                        chain,
                        iteration,
                        detail,
                    })?;
                if iteration >= config.burn_in {
                    kept.push(&state);
                }
            }
            Ok(kept)
        })
        .collect();

    let mut blocks: Vec<BlockDraws> = Vec::with_capacity(problems.len());
    for (&(b, _), chain) in jobs.iter().zip(chains) {
        let chain = chain?;
        if blocks.len() == b {
            blocks.push(chain);
        } else {
            let block = &mut blocks[b];
            block.alpha.extend(chain.alpha);
            block.mu_alpha.extend(chain.mu_alpha);
            block.sigma2_alpha.extend(chain.sigma2_alpha);
            block.coef.extend(chain.coef);
            block.sigma2.extend(chain.sigma2);
            block.n_draws += chain.n_draws;
        }
    }

    let mut result = FitResult {
        spec: spec.clone(),
        dataset: data.manifest(None),
        sampler: *config,
        blocks,
        diagnostics: None,
    };
    result.diagnostics = diagnostics(&result).ok().map(|d| d.summary());
    Ok(result)
}
