//! Convergence diagnostics: split-R̂ and multi-chain effective sample size.

use serde::{Deserialize, Serialize};

use super::FitResult;
use crate::{Error, Result};

/// Parameters with split-R̂ above this are flagged.
pub const RHAT_THRESHOLD: f64 = 1.01;

const MAX_LISTED_FLAGS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDiagnostic {
    pub name: String,
    /// `None` when every draw in every chain is identical.
    pub rhat: Option<f64>,
    pub ess: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub parameters: Vec<ParameterDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub n_parameters: usize,
    pub max_rhat: Option<f64>,
    pub min_ess: Option<f64>,
    pub n_flagged: usize,
    /// The first flagged parameters, in storage order.
    pub flagged: Vec<ParameterDiagnostic>,
}

impl Diagnostics {
    pub fn summary(&self) -> DiagnosticsSummary {
        let flagged: Vec<&ParameterDiagnostic> =
            self.parameters.iter().filter(|p| p.flag.is_some()).collect();
        DiagnosticsSummary {
            n_parameters: self.parameters.len(),
            max_rhat: self
                .parameters
                .iter()
                .filter_map(|p| p.rhat)
                .filter(|r| r.is_finite())
                .reduce(f64::max),
            min_ess: self
                .parameters
                .iter()
                .map(|p| p.ess)
                .filter(|e| e.is_finite())
                .reduce(f64::min),
            n_flagged: flagged.len(),
            flagged: flagged.into_iter().take(MAX_LISTED_FLAGS).cloned().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParameterDiagnostic> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Split-R̂ over equal-length chains. Each chain is halved (dropping the
/// middle draw when odd). `None` if there is no variance at all; infinite
/// if chains are individually constant but disagree.
pub fn split_rhat(chains: &[&[f64]]) -> Option<f64> {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let half = n / 2;
    if half < 2 {
        return None;
    }
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[n - half..n]])
        .collect();
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let within = mean(&halves.iter().map(|h| var(h)).collect::<Vec<_>>());
    let between = half as f64 * var(&means);
    if within == 0.0 {
        return if between == 0.0 { None } else { Some(f64::INFINITY) };
    }
    let var_plus = (half as f64 - 1.0) / half as f64 * within + between / half as f64;
    Some((var_plus / within).sqrt())
}

/// Effective sample size with Geyer's initial monotone sequence estimator,
/// pooling autocorrelations across chains.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m == 0 || n < 4 {
        return f64::NAN;
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let autocov = |c: usize, lag: usize| -> f64 {
        let x = chains[c];
        let mu = means[c];
        (0..n - lag).map(|t| (x[t] - mu) * (x[t + lag] - mu)).sum::<f64>() / n as f64
    };
    let acov0: Vec<f64> = (0..m).map(|c| autocov(c, 0)).collect();
    let within = acov0.iter().map(|a| a * n as f64 / (n as f64 - 1.0)).sum::<f64>() / m as f64;
    let between = if m > 1 { n as f64 * var(&means) } else { 0.0 };
    let var_plus = within * (n as f64 - 1.0) / n as f64 + between / n as f64;
    if var_plus == 0.0 {
        return f64::NAN;
    }
    let rho = |lag: usize| -> f64 {
        let mean_acov = if lag == 0 {
            mean(&acov0)
        } else {
            (0..m).map(|c| autocov(c, lag)).sum::<f64>() / m as f64
        };
        1.0 - (within - mean_acov) / var_plus
    };

    let mut tau = -1.0;
    let mut previous = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(previous);
        tau += 2.0 * pair;
        previous = pair;
        lag += 2;
    }
    // Antithetic chains can push τ towards zero; bound ESS by total·log10(total).
    let total = (m * n) as f64;
    total / tau.max(1.0 / total.log10())
}

/// R̂ and ESS for every stored scalar parameter.
pub fn diagnostics(fit: &FitResult) -> Result<Diagnostics> {
    let chains = fit.sampler.chains;
    let per_chain = fit.sampler.kept_per_chain();
    if chains < 2 || per_chain < 4 {
        return Err(Error::DiagnosticsUnavailable(format!(
            "need at least 2 chains of 4 draws, have {chains} of {per_chain}"
        )));
    }
    let assess = |name: String, draws: &[f64]| -> ParameterDiagnostic {
        let split: Vec<&[f64]> = draws.chunks(per_chain).collect();
        let rhat = split_rhat(&split);
        let ess = effective_sample_size(&split);
        let flag = match rhat {
            None => Some("zero-variance".to_string()),
            Some(r) if !(r <= RHAT_THRESHOLD) => Some(format!("rhat {r:.4} > {RHAT_THRESHOLD}")),
            Some(_) => None,
        };
        ParameterDiagnostic { name, rhat, ess, flag }
    };

    let mut parameters = Vec::new();
    for block in &fit.blocks {
        let t = block.target.label();
        parameters.push(assess(format!("{t}.mu_alpha"), &block.mu_alpha));
        parameters.push(assess(format!("{t}.sigma2_alpha"), &block.sigma2_alpha));
        for (k, name) in block.column_names.iter().enumerate() {
            parameters.push(assess(format!("{t}.coef.{name}"), &block.coef_column(k)));
        }
        parameters.push(assess(format!("{t}.sigma2"), &block.sigma2));
        for (i, athlete) in fit.dataset.athletes.iter().enumerate() {
            parameters.push(assess(format!("{t}.alpha[{athlete}]"), &block.alpha_column(i)));
        }
    }
    Ok(Diagnostics { parameters })
}
