use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell;
use crate::dataset::StandardizedDataset;
use crate::events::{EventId, N_EVENTS};
use crate::inference::{Family, FitResult, Target};
use crate::rng::{self, Purpose};
use crate::simulate::DrawSimulator;
use crate::{stats, Error, Result};

/// Quantiles reported for each pair's predictive correlations.
pub const PPC_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub first: EventId,
    pub second: EventId,
    pub empirical: f64,
    /// Predictive correlation at each of [`PPC_QUANTILES`].
    pub quantiles: Vec<f64>,
    /// Whether the empirical value lies in the central 95% band.
    pub contains_empirical: bool,
}

impl PairCorrelation {
    pub fn band(&self) -> (f64, f64) {
        (self.quantiles[0], self.quantiles[4])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcReport {
    pub family: Family,
    pub n_datasets: usize,
    pub seed: u64,
    pub pairs: Vec<PairCorrelation>,
}

impl PpcReport {
    pub fn pair(&self, a: EventId, b: EventId) -> Option<&PairCorrelation> {
        let (a, b) = if a.index() < b.index() { (a, b) } else { (b, a) };
        self.pairs.iter().find(|p| p.first == a && p.second == b)
    }

    pub fn n_contained(&self) -> usize {
        self.pairs.iter().filter(|p| p.contains_empirical).count()
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<14}{}", "Pair", cell("Observed", 9));
        for q in PPC_QUANTILES {
            out.push_str(&cell(format!("{:.1}%", q * 100.0), 8));
        }
        out.push_str(&cell("In band", 9));
        out.push('\n');
        for p in &self.pairs {
            out.push_str(&format!("{:<14}", format!("{}-{}", p.first.label(), p.second.label())));
            out.push_str(&cell(format!("{:.2}", p.empirical), 9));
            for q in &p.quantiles {
                out.push_str(&cell(format!("{q:.2}"), 8));
            }
            out.push_str(&cell(if p.contains_empirical { "yes" } else { "no" }, 9));
            out.push('\n');
        }
        out
    }
}

fn pairs() -> Vec<(usize, usize)> {
    (0..N_EVENTS).flat_map(|a| (a + 1..N_EVENTS).map(move |b| (a, b))).collect()
}

fn correlations(rows: &[[f64; N_EVENTS]]) -> Vec<f64> {
    let cols: Vec<Vec<f64>> = (0..N_EVENTS).map(|e| rows.iter().map(|r| r[e]).collect()).collect();
    pairs().into_iter().map(|(a, b)| stats::correlation(&cols[a], &cols[b])).collect()
}

/// Simulate `n_datasets` replicate datasets at the observed athletes and
/// ages, each from one posterior draw (spread evenly over the stored
/// draws), and compare their 45 pairwise event correlations with the data.
pub fn posterior_predictive_correlations(
    fit: &FitResult,
    data: &StandardizedDataset,
    n_datasets: usize,
    seed: u64,
) -> Result<PpcReport> {
    fit.require_events("posterior predictive checks")?;
    if n_datasets == 0 || data.len() < 3 {
        return Err(Error::InvalidConfig("need at least one replicate and three observations".into()));
    }
    let athlete_map = data
        .athletes
        .iter()
        .map(|id| fit.athlete_index(id))
        .collect::<Result<Vec<usize>>>()?;
    let phis: Vec<Vec<f64>> = data.observations.iter().map(|o| fit.spec.basis.design_row(o.age)).collect();
    let blocks: Vec<_> = EventId::ALL
        .iter()
        .map(|&e| fit.block(Target::Event(e)).expect("event family"))
        .collect();
    let n_draws = fit.n_draws();

    let sims: Vec<Vec<f64>> = (0..n_datasets)
        .into_par_iter()
        .map(|k| {
            let s = k * n_draws / n_datasets;
            let sim = DrawSimulator::new(fit, s)?;
            let mut rng = rng::stream(seed, Purpose::Predictive, k as u64, 0);
            let rows: Vec<[f64; N_EVENTS]> = data
                .observations
                .iter()
                .zip(&phis)
                .map(|(o, phi)| {
                    let i = athlete_map[o.athlete];
                    let mut alpha = [0.0; N_EVENTS];
                    for (e, b) in blocks.iter().enumerate() {
                        alpha[e] = b.alpha_at(s, i);
                    }
                    sim.sample_values(&alpha, phi, &mut rng)
                })
                .collect();
            Ok(correlations(&rows))
        })
        .collect::<Result<_>>()?;

    let observed: Vec<[f64; N_EVENTS]> = data.observations.iter().map(|o| o.y).collect();
    let empirical = correlations(&observed);
    let pairs = pairs()
        .into_iter()
        .enumerate()
        .map(|(j, (a, b))| {
            let sorted = stats::sorted(&sims.iter().map(|c| c[j]).collect::<Vec<_>>());
            let quantiles: Vec<f64> = PPC_QUANTILES.iter().map(|&q| stats::quantile_sorted(&sorted, q)).collect();
            PairCorrelation {
                first: EventId::ALL[a],
                second: EventId::ALL[b],
                empirical: empirical[j],
                contains_empirical: quantiles[0] <= empirical[j] && empirical[j] <= quantiles[4],
                quantiles,
            }
        })
        .collect();
    Ok(PpcReport {
        family: fit.family(),
        n_datasets,
        seed,
        pairs,
    })
}
