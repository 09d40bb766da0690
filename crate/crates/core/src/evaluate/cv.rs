use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell, smse};
use crate::basis::BasisKind;
use crate::dataset::{make_splits, DecathlonRecord, Protocol};
use crate::events::{EventId, N_EVENTS};
use crate::inference::{fit, Family, FitResult, ModelSpec, SamplerConfig, Target};
use crate::rng::{derive_seed, Purpose};
use crate::scoring::DECATHLON_TABLE;
use crate::{stats, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelChoice {
    pub family: Family,
    pub basis: BasisKind,
}

impl ModelChoice {
    pub fn new(family: Family, basis: BasisKind) -> Self {
        ModelChoice { family, basis }
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.family.label(), self.basis.label())
    }

    /// All six family × basis combinations.
    pub fn all() -> Vec<ModelChoice> {
        [Family::Baseline, Family::Simple, Family::Compositional]
            .into_iter()
            .flat_map(|f| [BasisKind::CubicPolynomial, BasisKind::CubicSpline].map(|b| ModelChoice::new(f, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub points_smse: f64,
    pub event_smse: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: ModelChoice,
    pub protocol: Protocol,
    /// Mean over folds.
    pub points_smse: f64,
    /// Mean over folds per event; absent for the baseline family.
    pub event_smse: Option<Vec<f64>>,
    pub folds: Vec<FoldScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvStudy {
    pub protocol: Protocol,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub reports: Vec<CvReport>,
}

impl CvStudy {
    pub fn report(&self, model: ModelChoice) -> Option<&CvReport> {
        self.reports.iter().find(|r| r.model == model)
    }

    /// Mean and standard error over folds of `a`'s points SMSE minus `b`'s.
    pub fn paired_gap(&self, a: ModelChoice, b: ModelChoice) -> Option<(f64, f64)> {
        let (ra, rb) = (self.report(a)?, self.report(b)?);
        let diffs: Vec<f64> = ra
            .folds
            .iter()
            .zip(&rb.folds)
            .map(|(x, y)| x.points_smse - y.points_smse)
            .collect();
        Some((stats::mean(&diffs), stats::sd(&diffs) / (diffs.len() as f64).sqrt()))
    }

    /// Aligned table: one row per model, SMSE per event then points.
    pub fn table(&self) -> String {
        let mut out = format!("{:<26}", format!("Model ({})", protocol_label(self.protocol)));
        for e in EventId::ALL {
            out.push_str(&cell(e.label(), 7));
        }
        out.push_str(&cell("Points", 8));
        out.push('\n');
        for r in &self.reports {
            out.push_str(&format!("{:<26}", r.model.label()));
            for e in 0..N_EVENTS {
                match &r.event_smse {
                    Some(v) => out.push_str(&cell(format!("{:.3}", v[e]), 7)),
                    None => out.push_str(&cell("-", 7)),
                }
            }
            out.push_str(&cell(format!("{:.3}", r.points_smse), 8));
            out.push('\n');
        }
        out
    }
}

fn protocol_label(p: Protocol) -> &'static str {
    match p {
        Protocol::General => "general",
        Protocol::Tail => "tail",
    }
}

/// Posterior-mean predictions for raw test records: per-event marks (for
/// event families) and total points. Preceding events enter at their
/// observed test values; athletes absent from the training data get the
/// population mean intercept.
pub fn predict_records(fit: &FitResult, test: &[DecathlonRecord]) -> Result<(Option<Vec<[f64; N_EVENTS]>>, Vec<f64>)> {
    let scales = &fit.dataset.scales;
    let basis = &fit.spec.basis;
    let d = basis.dimension();
    let means = |t: Target| {
        let b = fit.block(t).expect("fit has every block of its family");
        let alpha: Vec<f64> = (0..b.n_athletes).map(|i| stats::mean(&b.alpha_column(i))).collect();
        let coef: Vec<f64> = (0..b.n_coef()).map(|k| stats::mean(&b.coef_column(k))).collect();
        (alpha, stats::mean(&b.mu_alpha), coef)
    };
    let intercept = |alpha: &[f64], mu: f64, id: &str| match fit.athlete_index(id) {
        Ok(i) => alpha[i],
        Err(_) => mu,
    };

    if fit.family() == Family::Baseline {
        let (alpha, mu, coef) = means(Target::Points);
        let points = test
            .iter()
            .map(|r| {
                let phi = basis.design_row(r.age);
                let z = intercept(&alpha, mu, &r.athlete_id) + phi.iter().zip(&coef).map(|(f, b)| f * b).sum::<f64>();
                scales.points.invert(z)
            })
            .collect();
        return Ok((None, points));
    }

    let blocks: Vec<_> = EventId::ALL.iter().map(|&e| means(Target::Event(e))).collect();
    let mut marks = Vec::with_capacity(test.len());
    let mut points = Vec::with_capacity(test.len());
    for r in test {
        let phi = basis.design_row(r.age);
        let observed = scales.standardize_marks(&r.marks);
        let mut pred = [0.0; N_EVENTS];
        for (e, (alpha, mu, coef)) in blocks.iter().enumerate() {
            let mut z = intercept(alpha, *mu, &r.athlete_id);
            z += phi.iter().zip(&coef[..d]).map(|(f, b)| f * b).sum::<f64>();
            z += coef[d..].iter().zip(&observed).map(|(g, y)| g * y).sum::<f64>();
            pred[e] = z;
        }
        let raw = scales.destandardize_marks(&pred);
        points.push(DECATHLON_TABLE.total_or_zero(&raw) as f64);
        marks.push(raw);
    }
    Ok((Some(marks), points))
}

fn score_fold(
    model: ModelChoice,
    fold: usize,
    train: &[DecathlonRecord],
    test: &[DecathlonRecord],
    config: &SamplerConfig,
) -> Result<FoldScore> {
    let data = crate::dataset::standardize(train)?;
    let spec = ModelSpec::new(model.family, model.basis, &data)?;
    let fitted = fit(&spec, &data, config)?;
    let (marks, points) = predict_records(&fitted, test)?;
    let truth_points: Vec<f64> = test.iter().map(|r| r.total_points as f64).collect();
    let event_smse = match marks {
        None => None,
        Some(pred) => Some(
            (0..N_EVENTS)
                .map(|e| {
                    let p: Vec<f64> = pred.iter().map(|m| m[e]).collect();
                    let t: Vec<f64> = test.iter().map(|r| r.marks[e]).collect();
                    smse(&p, &t)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(FoldScore {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        points_smse: smse(&points, &truth_points)?,
        event_smse,
    })
}

/// Ten-split cross-validation of each model. Standardization constants and
/// knots are refitted on every training split; every model sees the same
/// splits and the same sampler seed within a split.
pub fn cross_validate(
    records: &[DecathlonRecord],
    models: &[ModelChoice],
    protocol: Protocol,
    seed: u64,
    sampler: &SamplerConfig,
) -> Result<CvStudy> {
    sampler.validate()?;
    let plan = make_splits(records, protocol, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    let folds: Vec<(Vec<DecathlonRecord>, Vec<DecathlonRecord>)> = (0..plan.test.len())
        .map(|k| (pick(&plan.train(k)), pick(&plan.test[k])))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..folds.len()).map(move |k| (m, k)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(m, k)| {
            let config = sampler.with_seed(derive_seed(seed, Purpose::CrossValidation, k as u64));
            score_fold(models[m], k, &folds[k].0, &folds[k].1, &config)
        })
        .collect::<Result<Vec<_>>>()?;

    let reports = models
        .iter()
        .enumerate()
        .map(|(m, &model)| {
            let folds: Vec<FoldScore> = scores[m * plan.test.len()..(m + 1) * plan.test.len()].to_vec();
            let points_smse = stats::mean(&folds.iter().map(|f| f.points_smse).collect::<Vec<_>>());
            let event_smse = folds[0].event_smse.as_ref().map(|_| {
                (0..N_EVENTS)
                    .map(|e| stats::mean(&folds.iter().map(|f| f.event_smse.as_ref().unwrap()[e]).collect::<Vec<_>>()))
                    .collect()
            });
            CvReport {
                model,
                protocol,
                points_smse,
                event_smse,
                folds,
            }
        })
        .collect();
    Ok(CvStudy {
        protocol,
        seed,
        sampler: *sampler,
        reports,
    })
}

