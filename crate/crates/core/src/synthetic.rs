//! Synthetic data from known parameters, for validation studies, tests and
//! examples.

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnScale, DecathlonRecord, Observation, Scales, StandardizedDataset};
use crate::events::{EventId, N_EVENTS};
use crate::inference::{BlockDraws, FitResult, InvGamma, ModelSpec, SamplerConfig, Target};
use crate::scoring::DECATHLON_TABLE;
use crate::stats;
use crate::{Error, Result};

/// Fixed values of every parameter of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthBlock {
    pub target: Target,
    pub alpha: Vec<f64>,
    pub mu_alpha: f64,
    pub sigma2_alpha: f64,
    /// Basis coefficients, then (compositional) preceding-event coefficients.
    pub coef: Vec<f64>,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthParams {
    pub spec: ModelSpec,
    pub blocks: Vec<TruthBlock>,
}

impl TruthParams {
    /// Every parameter drawn from the model's prior.
    pub fn draw_from_prior<R: Rng + ?Sized>(spec: &ModelSpec, n_athletes: usize, rng: &mut R) -> TruthParams {
        let pr = spec.priors;
        let variance = InvGamma {
            shape: pr.variance_shape,
            scale: pr.variance_scale,
        };
        let blocks = spec
            .targets()
            .into_iter()
            .map(|target| {
                let mu_alpha = pr.mu_mean + pr.mu_sd * rng.sample::<f64, _>(StandardNormal);
                let sigma2_alpha = variance.sample(rng);
                let alpha = (0..n_athletes)
                    .map(|_| mu_alpha + sigma2_alpha.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let coef = (0..spec.column_names(target).len())
                    .map(|_| pr.coef_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                TruthBlock {
                    target,
                    alpha,
                    mu_alpha,
                    sigma2_alpha,
                    coef,
                    sigma2: variance.sample(rng),
                }
            })
            .collect();
        TruthParams {
            spec: spec.clone(),
            blocks,
        }
    }

    /// Plausible parameters for demonstrations: athletes peak around 27,
    /// intercept and residual variances of `tau2` and `sigma2`, and a few
    /// strong couplings between related events (sprints, jumps, throws) in
    /// the compositional family.
    pub fn demo<R: Rng + ?Sized>(spec: &ModelSpec, n_athletes: usize, tau2: f64, sigma2: f64, rng: &mut R) -> TruthParams {
        use EventId::*;
        let couplings: [(EventId, EventId, f64); 9] = [
            (Sprint100, LongJump, -0.5),
            (Sprint100, Run400, 0.5),
            (Sprint100, Hurdles110, 0.4),
            (ShotPut, Discus, 0.6),
            (ShotPut, Javelin, 0.35),
            (LongJump, HighJump, 0.3),
            (LongJump, PoleVault, 0.35),
            (Run400, Run1500, 0.45),
            (HighJump, Hurdles110, -0.2),
        ];
        let d = spec.basis.dimension();
        let blocks = spec
            .targets()
            .into_iter()
            .map(|target| {
                let sign = match target {
                    Target::Event(e) if e.is_track() => -1.0,
                    _ => 1.0,
                };
                let mut coef = vec![0.0; spec.column_names(target).len()];
                if spec.basis.kind == crate::basis::BasisKind::CubicPolynomial {
                    coef[0] = 0.3 * sign;
                    coef[1] = -0.15 * sign;
                    coef[2] = 0.01 * sign;
                }
                if let Target::Event(e) = target {
                    for &(m, to, g) in &couplings {
                        if to == e && coef.len() > d {
                            coef[d + m.index()] = g;
                        }
                    }
                }
                TruthBlock {
                    target,
                    alpha: (0..n_athletes).map(|_| tau2.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect(),
                    mu_alpha: 0.0,
                    sigma2_alpha: tau2,
                    coef,
                    sigma2,
                }
            })
            .collect();
        TruthParams {
            spec: spec.clone(),
            blocks,
        }
    }

    /// Posterior means of a fit.
    pub fn from_fit_mean(fit: &FitResult) -> TruthParams {
        let blocks = fit
            .blocks
            .iter()
            .map(|b| TruthBlock {
                target: b.target,
                alpha: (0..b.n_athletes).map(|i| stats::mean(&b.alpha_column(i))).collect(),
                mu_alpha: stats::mean(&b.mu_alpha),
                sigma2_alpha: stats::mean(&b.sigma2_alpha),
                coef: (0..b.n_coef()).map(|k| stats::mean(&b.coef_column(k))).collect(),
                sigma2: stats::mean(&b.sigma2),
            })
            .collect();
        TruthParams {
            spec: fit.spec.clone(),
            blocks,
        }
    }

    pub fn block(&self, target: Target) -> Option<&TruthBlock> {
        self.blocks.iter().find(|b| b.target == target)
    }

    pub fn block_mut(&mut self, target: Target) -> Option<&mut TruthBlock> {
        self.blocks.iter_mut().find(|b| b.target == target)
    }

    fn n_athletes(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.alpha.len())
    }

    /// Coefficient of preceding event `m` in event `e`'s block.
    pub fn gamma(&self, m: EventId, e: EventId) -> f64 {
        let d = self.spec.basis.dimension();
        match self.block(Target::Event(e)) {
            Some(b) if m.index() < e.index() && b.coef.len() > d => b.coef[d + m.index()],
            _ => 0.0,
        }
    }

    /// One synthetic response row for athlete `i` at `age`.
    pub fn sample_row<R: Rng + ?Sized>(&self, i: usize, age: f64, rng: &mut R) -> [f64; N_EVENTS + 1] {
        let phi = self.spec.basis.design_row(age);
        let d = phi.len();
        let mut out = [0.0; N_EVENTS + 1];
        for b in &self.blocks {
            let mut mean = b.alpha[i];
            for (c, f) in b.coef.iter().zip(&phi) {
                mean += c * f;
            }
            let slot = match b.target {
                Target::Event(e) => e.index(),
                Target::Points => N_EVENTS,
            };
            for (m, g) in b.coef[d..].iter().enumerate() {
                mean += g * out[m];
            }
            out[slot] = mean + b.sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        out
    }

    /// Standardized dataset at a design. Event values come from the event
    /// blocks; points come from the points block when present, else from
    /// scoring the destandardized marks under `scales`.
    pub fn simulate_dataset<R: Rng + ?Sized>(
        &self,
        design: &Design,
        scales: &Scales,
        rng: &mut R,
    ) -> Result<StandardizedDataset> {
        if design.n_athletes() > self.n_athletes() {
            return Err(Error::InvalidConfig(format!(
                "design has {} athletes but the truth only {}",
                design.n_athletes(),
                self.n_athletes()
            )));
        }
        let has_points = self.block(Target::Points).is_some();
        let observations = design
            .rows
            .iter()
            .map(|row| {
                let v = self.sample_row(row.athlete, row.age, rng);
                let mut y = [0.0; N_EVENTS];
                y.copy_from_slice(&v[..N_EVENTS]);
                let points = if has_points {
                    v[N_EVENTS]
                } else {
                    let total = DECATHLON_TABLE.total_or_zero(&scales.destandardize_marks(&y));
                    scales.points.apply(total as f64)
                };
                Observation {
                    athlete: row.athlete,
                    age: row.age,
                    y,
                    points,
                    date: row.date,
                }
            })
            .collect();
        Ok(StandardizedDataset::from_standardized(
            design.athletes.clone(),
            observations,
            scales.clone(),
        ))
    }

    /// Raw records at a design: marks are destandardized with `scales` and
    /// scored to give the stated totals.
    pub fn simulate_records<R: Rng + ?Sized>(
        &self,
        design: &Design,
        scales: &Scales,
        rng: &mut R,
    ) -> Result<Vec<DecathlonRecord>> {
        let data = self.simulate_dataset(design, scales, rng)?;
        Ok(data
            .observations
            .iter()
            .map(|o| {
                let marks = scales.destandardize_marks(&o.y);
                DecathlonRecord {
                    athlete_id: data.athletes[o.athlete].clone(),
                    date: o.date,
                    age: o.age,
                    marks,
                    total_points: DECATHLON_TABLE.total_or_zero(&marks) as i64,
                }
            })
            .collect())
    }

    /// A fit whose every draw equals these parameters.
    pub fn point_mass_fit(&self, athletes: &[String], scales: &Scales, n_draws: usize) -> FitResult {
        let blocks = self
            .blocks
            .iter()
            .map(|b| BlockDraws {
                target: b.target,
                column_names: self.spec.column_names(b.target),
                n_draws,
                n_athletes: b.alpha.len(),
                alpha: b.alpha.repeat(n_draws),
                mu_alpha: vec![b.mu_alpha; n_draws],
                sigma2_alpha: vec![b.sigma2_alpha; n_draws],
                coef: b.coef.repeat(n_draws),
                sigma2: vec![b.sigma2; n_draws],
            })
            .collect();
        let data = StandardizedDataset::from_standardized(athletes.to_vec(), Vec::new(), scales.clone());
        FitResult {
            spec: self.spec.clone(),
            dataset: data.manifest(None),
            sampler: SamplerConfig {
                chains: 1,
                iterations: n_draws,
                burn_in: 0,
                seed: 0,
            },
            blocks,
            diagnostics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub athlete: usize,
    pub age: f64,
    pub date: NaiveDate,
}

/// Which athlete competes at which age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub athletes: Vec<String>,
    pub rows: Vec<DesignRow>,
}

fn birth_date(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(1980, 1, 1).expect("valid date") + Duration::days((i as i64 * 37) % 3650)
}

fn date_at(birth: NaiveDate, age: f64) -> NaiveDate {
    birth + Duration::days((age * 365.25).round() as i64)
}

impl Design {
    /// `n_records` decathlons spread as evenly as possible over
    /// `n_athletes`; each career starts between 18 and 26 and advances by
    /// 0.25 to 1.25 years per competition.
    pub fn random<R: Rng + ?Sized>(n_athletes: usize, n_records: usize, rng: &mut R) -> Design {
        let athletes: Vec<String> = (0..n_athletes).map(|i| format!("athlete-{i:04}")).collect();
        let mut rows = Vec::with_capacity(n_records);
        for i in 0..n_athletes {
            let count = n_records / n_athletes + usize::from(i < n_records % n_athletes);
            let birth = birth_date(i);
            let mut age = rng.random_range(18.0..26.0);
            for _ in 0..count {
                rows.push(DesignRow {
                    athlete: i,
                    age,
                    date: date_at(birth, age),
                });
                age += rng.random_range(0.25..1.25);
            }
        }
        Design { athletes, rows }
    }

    /// The athletes and ages of an observed dataset.
    pub fn of(data: &StandardizedDataset) -> Design {
        Design {
            athletes: data.athletes.clone(),
            rows: data
                .observations
                .iter()
                .map(|o| DesignRow {
                    athlete: o.athlete,
                    age: o.age,
                    date: o.date,
                })
                .collect(),
        }
    }

    pub fn n_athletes(&self) -> usize {
        self.athletes.len()
    }

    pub fn ages(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.age).collect()
    }
}

/// Typical event means and spreads of elite decathletes, for turning
/// synthetic standardized values into plausible marks.
pub fn typical_scales() -> Scales {
    let events = [
        (11.0, 0.25),
        (705.0, 30.0),
        (14.0, 1.2),
        (198.0, 7.0),
        (49.5, 1.3),
        (15.0, 0.6),
        (42.0, 4.0),
        (465.0, 30.0),
        (58.0, 6.0),
        (275.0, 10.0),
    ]
    .map(|(mean, sd)| ColumnScale { mean, sd });
    Scales {
        events,
        points: ColumnScale { mean: 7400.0, sd: 420.0 },
        age: ColumnScale { mean: 24.0, sd: 3.5 },
    }
}

/// A normal draw clipped to ±`limit` sd, for well-behaved fixtures.
pub fn clipped_normal<R: Rng + ?Sized>(rng: &mut R, sd: f64, limit: f64) -> f64 {
    let n = Normal::new(0.0, sd).expect("finite sd");
    n.sample(rng).clamp(-limit * sd, limit * sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::inference::Family;
    use crate::rng::{stream, Purpose};

    #[test]
    fn design_shape() {
        let mut rng = stream(1, Purpose::Synthetic, 0, 0);
        let d = Design::random(7, 50, &mut rng);
        assert_eq!(d.rows.len(), 50);
        assert_eq!(d.n_athletes(), 7);
        for i in 0..7 {
            let ages: Vec<f64> = d.rows.iter().filter(|r| r.athlete == i).map(|r| r.age).collect();
            assert!(ages.len() == 7 || ages.len() == 8);
            assert!(ages.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn records_are_scored() {
        let spec = ModelSpec::with_basis(Family::Compositional, BasisSpec::polynomial(ColumnScale { mean: 24.0, sd: 3.5 }));
        let mut rng = stream(2, Purpose::Synthetic, 0, 0);
        let mut truth = TruthParams::draw_from_prior(&spec, 5, &mut rng);
        for b in &mut truth.blocks {
            b.coef.iter_mut().for_each(|c| *c *= 0.1);
        }
        let design = Design::random(5, 20, &mut rng);
        let records = truth.simulate_records(&design, &typical_scales(), &mut rng).unwrap();
        assert_eq!(records.len(), 20);
        for r in &records {
            assert_eq!(r.rescored() as i64, r.total_points);
        }
    }

    #[test]
    fn point_mass_fit_has_constant_draws() {
        let spec = ModelSpec::with_basis(Family::Simple, BasisSpec::polynomial(ColumnScale::IDENTITY));
        let mut rng = stream(3, Purpose::Synthetic, 0, 0);
        let truth = TruthParams::draw_from_prior(&spec, 3, &mut rng);
        let names: Vec<String> = (0..3).map(|i| i.to_string()).collect();
        let fit = truth.point_mass_fit(&names, &Scales::identity(), 2);
        assert_eq!(fit.n_draws(), 2);
        let back = TruthParams::from_fit_mean(&fit);
        assert_eq!(back.blocks, truth.blocks);
    }
}
