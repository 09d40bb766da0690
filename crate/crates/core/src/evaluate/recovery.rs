use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell;
use crate::dataset::Scales;
use crate::events::EventId;
use crate::inference::{fit, SamplerConfig, Target};
use crate::rng::{self, derive_seed, Purpose};
use crate::synthetic::{Design, TruthParams};
use crate::{stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub n_replicates: usize,
    pub seed: u64,
    pub level: f64,
    pub sampler: SamplerConfig,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            n_replicates: 200,
            seed: 0,
            level: 0.95,
            sampler: SamplerConfig::default(),
        }
    }
}

/// Coverage of one coefficient of one event's block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub event: EventId,
    pub predictor: String,
    pub truth: f64,
    pub covered: usize,
    pub n: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub level: f64,
    pub n_replicates: usize,
    pub n_failed: usize,
    pub failures: Vec<String>,
    pub entries: Vec<CoverageEntry>,
}

impl RecoveryReport {
    pub fn get(&self, predictor: &str, event: EventId) -> Option<&CoverageEntry> {
        self.entries.iter().find(|c| c.predictor == predictor && c.event == event)
    }

    pub fn min_coverage(&self) -> Option<f64> {
        self.entries.iter().map(|c| c.coverage).reduce(f64::min)
    }

    /// Predictors as rows, events as columns; `-` where a predictor does not
    /// enter an event's block.
    pub fn table(&self) -> String {
        let mut rows: Vec<&str> = Vec::new();
        for c in &self.entries {
            if !rows.contains(&c.predictor.as_str()) {
                rows.push(&c.predictor);
            }
        }
        let mut out = format!("{:<10}", "");
        for e in EventId::ALL {
            out.push_str(&cell(e.label(), 7));
        }
        out.push('\n');
        for p in rows {
            out.push_str(&format!("{p:<10}"));
            for e in EventId::ALL {
                match self.get(p, e) {
                    Some(c) => out.push_str(&cell(format!("{:.2}", c.coverage), 7)),
                    None => out.push_str(&cell("-", 7)),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Refit the truth's model to `n_replicates` datasets simulated at `design`
/// and record how often each coefficient's credible interval covers its
/// true value. Replicates whose fit fails are counted and excluded.
pub fn parameter_recovery(truth: &TruthParams, design: &Design, config: &RecoveryConfig) -> Result<RecoveryReport> {
    config.sampler.validate()?;
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidConfig(format!("level {} must lie in (0, 1)", config.level)));
    }
    if config.n_replicates == 0 {
        return Err(Error::InvalidConfig("need at least one replicate".into()));
    }
    let spec = &truth.spec;
    let event_blocks: Vec<Target> = spec
        .targets()
        .into_iter()
        .filter(|t| matches!(t, Target::Event(_)))
        .collect();
    if event_blocks.is_empty() {
        return Err(Error::UnsupportedFamily {
            family: spec.family.label(),
            operation: "parameter recovery",
        });
    }

    let outcomes: Vec<std::result::Result<Vec<Vec<bool>>, String>> = (0..config.n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, Purpose::Recovery, r as u64, 0);
            let data = truth
                .simulate_dataset(design, &Scales::identity(), &mut rng)
                .map_err(|e| e.to_string())?;
            let sampler = config.sampler.with_seed(derive_seed(config.seed, Purpose::Recovery, r as u64));
            let fitted = fit(spec, &data, &sampler).map_err(|e| format!("replicate {r}: {e}"))?;
            Ok(event_blocks
                .iter()
                .map(|&t| {
                    let block = fitted.block(t).expect("fitted block");
                    let true_coef = &truth.block(t).expect("truth block").coef;
                    (0..block.n_coef())
                        .map(|k| {
                            let (lo, hi) = stats::equal_tailed(&block.coef_column(k), config.level);
                            lo <= true_coef[k] && true_coef[k] <= hi
                        })
                        .collect()
                })
                .collect())
        })
        .collect();

    let failures: Vec<String> = outcomes.iter().filter_map(|o| o.as_ref().err().cloned()).collect();
    let successes: Vec<&Vec<Vec<bool>>> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let mut entries = Vec::new();
    for (b, &t) in event_blocks.iter().enumerate() {
        let Target::Event(event) = t else { unreachable!() };
        let names = spec.column_names(t);
        let true_coef = &truth.block(t).expect("truth block").coef;
        for (k, predictor) in names.into_iter().enumerate() {
            let covered = successes.iter().filter(|s| s[b][k]).count();
            let n = successes.len();
            entries.push(CoverageEntry {
                event,
                predictor,
                truth: true_coef[k],
                covered,
                n,
                coverage: if n == 0 { f64::NAN } else { covered as f64 / n as f64 },
            });
        }
    }
    Ok(RecoveryReport {
        level: config.level,
        n_replicates: config.n_replicates,
        n_failed: failures.len(),
        failures,
        entries,
    })
}
