//! Posterior-predictive simulation of decathlons, careers and age curves.
//!
//! A decathlon is generated event by event in competition order. For draw
//! `s`, event `e` has mean `α_e + φ(age)·β_e + Σ_{m<e} γ_{m,e} Y*_m` and
//! residual sd `σ_e`; the standardized values are mapped back to marks and
//! scored. Marks that fall beyond an event's zero-point threshold (or are
//! not even positive) score 0 rather than being resampled.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::dataset::Scales;
use crate::events::{EventId, N_EVENTS};
use crate::inference::{DrawParams, FitResult};
use crate::posterior::{profile_to_intercepts, Profile};
use crate::rng::{self, Purpose};
use crate::scoring::DECATHLON_TABLE;
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 9200.0;
pub const HISTOGRAM_WIDTH: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDecathlon {
    pub draw: usize,
    pub age: f64,
    /// Standardized event values.
    pub y: [f64; N_EVENTS],
    pub marks: [f64; N_EVENTS],
    pub points: [u32; N_EVENTS],
    pub total: u32,
}

/// Everything fixed across the decathlons of one posterior draw.
#[derive(Debug, Clone)]
pub struct DrawSimulator<'a> {
    pub draw: usize,
    pub params: DrawParams,
    pub basis: &'a BasisSpec,
    pub scales: &'a Scales,
}

impl<'a> DrawSimulator<'a> {
    pub fn new(fit: &'a FitResult, draw: usize) -> Result<Self> {
        Ok(DrawSimulator {
            draw,
            params: fit.draw_params(draw)?,
            basis: &fit.spec.basis,
            scales: &fit.dataset.scales,
        })
    }

    /// Mean of event `e` given the preceding simulated values.
    fn event_mean(&self, e: usize, intercept: f64, phi: &[f64], y: &[f64; N_EVENTS]) -> f64 {
        let p = &self.params.events[e];
        let mut mean = intercept;
        for (b, f) in p.beta.iter().zip(phi) {
            mean += b * f;
        }
        for (g, ym) in p.gamma.iter().zip(y) {
            mean += g * ym;
        }
        mean
    }

    pub fn simulate<R: Rng + ?Sized>(
        &self,
        intercepts: &[f64; N_EVENTS],
        age: f64,
        rng: &mut R,
    ) -> SimulatedDecathlon {
        let y = self.sample_values(intercepts, &self.basis.design_row(age), rng);
        score(self.draw, age, y, self.scales)
    }

    /// Standardized values only, given a precomputed basis row.
    pub fn sample_values<R: Rng + ?Sized>(&self, intercepts: &[f64; N_EVENTS], phi: &[f64], rng: &mut R) -> [f64; N_EVENTS] {
        let mut y = [0.0; N_EVENTS];
        for e in 0..N_EVENTS {
            let z: f64 = rng.sample(StandardNormal);
            y[e] = self.event_mean(e, intercepts[e], phi, &y) + self.params.events[e].sigma * z;
        }
        y
    }

    /// The noiseless decathlon: every event at its conditional mean.
    pub fn expected(&self, intercepts: &[f64; N_EVENTS], age: f64) -> SimulatedDecathlon {
        let phi = self.basis.design_row(age);
        let mut y = [0.0; N_EVENTS];
        for e in 0..N_EVENTS {
            y[e] = self.event_mean(e, intercepts[e], &phi, &y);
        }
        score(self.draw, age, y, self.scales)
    }
}

/// Destandardize and score standardized event values.
pub fn score(draw: usize, age: f64, y: [f64; N_EVENTS], scales: &Scales) -> SimulatedDecathlon {
    let marks = scales.destandardize_marks(&y);
    let mut points = [0u32; N_EVENTS];
    for e in EventId::ALL {
        points[e.index()] = DECATHLON_TABLE.points_or_zero(e, marks[e.index()]);
    }
    SimulatedDecathlon {
        draw,
        age,
        y,
        marks,
        total: points.iter().sum(),
        points,
    }
}

/// Simulate one decathlon from draw `s` of a fit.
pub fn simulate_decathlon<R: Rng + ?Sized>(
    fit: &FitResult,
    draw: usize,
    intercepts: &[f64; N_EVENTS],
    age: f64,
    rng: &mut R,
) -> Result<SimulatedDecathlon> {
    Ok(DrawSimulator::new(fit, draw)?.simulate(intercepts, age, rng))
}

/// Ages at which a simulated career competes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareerGrid {
    pub ages: Vec<f64>,
}

impl Default for CareerGrid {
    /// Two decathlons a year from 19 through 30: 19.0, 19.5, ..., 30.5.
    fn default() -> Self {
        CareerGrid::per_year(19, 30, 2).expect("default grid is valid")
    }
}

impl CareerGrid {
    pub fn new(ages: Vec<f64>) -> Result<CareerGrid> {
        if ages.is_empty() || ages.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("a career grid needs at least one finite age".into()));
        }
        Ok(CareerGrid { ages })
    }

    /// `per_year` evenly spaced decathlons in every year from `first` to `last`.
    pub fn per_year(first: u32, last: u32, per_year: u32) -> Result<CareerGrid> {
        if per_year == 0 || last < first {
            return Err(Error::InvalidConfig(format!(
                "invalid career grid: years {first}..={last}, {per_year} per year"
            )));
        }
        let ages = (first..=last)
            .flat_map(|y| (0..per_year).map(move |k| y as f64 + k as f64 / per_year as f64))
            .collect();
        CareerGrid::new(ages)
    }

    /// Ages from `from` to `to` inclusive in steps of `step`.
    pub fn range(from: f64, to: f64, step: f64) -> Result<CareerGrid> {
        if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
            return Err(Error::InvalidConfig(format!("invalid age range {from}..{to} step {step}")));
        }
        let n = ((to - from) / step + 1e-9).floor() as usize;
        if n > 10_000 {
            return Err(Error::InvalidConfig(format!("age range {from}..{to} step {step} is too long")));
        }
        CareerGrid::new((0..=n).map(|k| from + k as f64 * step).collect())
    }

    pub fn len(&self) -> usize {
        self.ages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ages.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareerSimulation {
    pub subject: String,
    pub ages: Vec<f64>,
    pub seed: u64,
    /// Posterior draw behind each simulated career.
    pub draws: Vec<usize>,
    pub careers: Vec<Vec<SimulatedDecathlon>>,
    pub max_scores: Vec<u32>,
}

/// Simulate one career per posterior draw for an athlete with `profile`.
pub fn simulate_career(fit: &FitResult, profile: &Profile, grid: &CareerGrid, seed: u64) -> Result<CareerSimulation> {
    let draws: Vec<usize> = (0..fit.n_draws()).collect();
    simulate_career_draws(fit, profile, grid, seed, &draws)
}

/// As [`simulate_career`], over a chosen list of draws. Each career's noise
/// is keyed by its draw index, so a draw simulates identically whichever
/// subset it appears in.
pub fn simulate_career_draws(
    fit: &FitResult,
    profile: &Profile,
    grid: &CareerGrid,
    seed: u64,
    draws: &[usize],
) -> Result<CareerSimulation> {
    fit.require_events("career simulation")?;
    if let Some(&s) = draws.iter().find(|&&s| s >= fit.n_draws()) {
        return Err(Error::InvalidConfig(format!("draw {s} out of range (fit has {})", fit.n_draws())));
    }
    let careers = draws
        .par_iter()
        .map(|&s| {
            let sim = DrawSimulator::new(fit, s)?;
            let intercepts = profile_to_intercepts(profile, &sim.params);
            let mut rng = rng::stream(seed, Purpose::Career, s as u64, 0);
            Ok(grid.ages.iter().map(|&age| sim.simulate(&intercepts, age, &mut rng)).collect())
        })
        .collect::<Result<Vec<Vec<SimulatedDecathlon>>>>()?;
    let max_scores = careers
        .iter()
        .map(|c: &Vec<SimulatedDecathlon>| c.iter().map(|d| d.total).max().unwrap_or(0))
        .collect();
    Ok(CareerSimulation {
        subject: profile.label.clone(),
        ages: grid.ages.clone(),
        seed,
        draws: draws.to_vec(),
        careers,
        max_scores,
    })
}

/// Fraction of careers whose best score exceeds `threshold`; NaN when
/// there are no careers.
pub fn break_probability(career: &CareerSimulation, threshold: f64) -> f64 {
    let n = career.max_scores.len();
    career.max_scores.iter().filter(|&&m| m as f64 > threshold).count() as f64 / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: u32,
    pub upper: u32,
    pub count: usize,
}

/// Counts in `[lower, upper)` bins of `width` points, from the bin holding
/// the minimum to the bin holding the maximum.
pub fn histogram(values: &[u32], width: u32) -> Vec<HistogramBin> {
    let (Some(&lo), Some(&hi)) = (values.iter().min(), values.iter().max()) else {
        return Vec::new();
    };
    let first = lo / width;
    let mut bins: Vec<HistogramBin> = (first..=hi / width)
        .map(|b| HistogramBin {
            lower: b * width,
            upper: (b + 1) * width,
            count: 0,
        })
        .collect();
    for &v in values {
        bins[(v / width - first) as usize].count += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxScoreQuantiles {
    pub q025: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q975: f64,
}

/// What the CLI prints and the HTTP service returns for a career run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareerSummary {
    pub subject: String,
    pub seed: u64,
    pub n_draws: usize,
    pub ages: Vec<f64>,
    pub threshold: f64,
    pub break_probability: f64,
    pub max_score_mean: f64,
    pub max_score_quantiles: MaxScoreQuantiles,
    pub histogram: Vec<HistogramBin>,
}

impl CareerSimulation {
    pub fn summary(&self, threshold: f64) -> CareerSummary {
        let maxes: Vec<f64> = self.max_scores.iter().map(|&m| m as f64).collect();
        let sorted = stats::sorted(&maxes);
        let q = |p: f64| if sorted.is_empty() { f64::NAN } else { stats::quantile_sorted(&sorted, p) };
        CareerSummary {
            subject: self.subject.clone(),
            seed: self.seed,
            n_draws: self.max_scores.len(),
            ages: self.ages.clone(),
            threshold,
            break_probability: break_probability(self, threshold),
            max_score_mean: stats::mean(&maxes),
            max_score_quantiles: MaxScoreQuantiles {
                q025: q(0.025),
                q25: q(0.25),
                q50: q(0.5),
                q75: q(0.75),
                q975: q(0.975),
            },
            histogram: histogram(&self.max_scores, HISTOGRAM_WIDTH),
        }
    }

    /// One row per simulated decathlon: draw, age, ten marks, total.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["draw".to_string(), "age".to_string()];
        header.extend(EventId::ALL.iter().map(|e| e.csv_column().to_string()));
        header.push("total".to_string());
        w.write_record(&header)?;
        for career in &self.careers {
            for d in career {
                let mut row = vec![d.draw.to_string(), d.age.to_string()];
                row.extend(d.marks.iter().map(|m| m.to_string()));
                row.push(d.total.to_string());
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Whose age curve to draw.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSubject {
    Athlete(String),
    Profile(Profile),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Band {
    fn of(values: &[f64], level: f64) -> Band {
        let (low, high) = stats::equal_tailed(values, level);
        Band {
            mean: stats::mean(values),
            low,
            high,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeCurvePoint {
    pub age: f64,
    /// Raw marks per event, in competition order.
    pub events: Vec<Band>,
    pub total: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeCurve {
    pub subject: String,
    pub level: f64,
    pub seed: u64,
    pub points: Vec<AgeCurvePoint>,
}

/// Pointwise posterior-predictive bands: at each age one decathlon is
/// simulated per draw, so the bands carry both parameter and residual
/// uncertainty.
pub fn age_curve(fit: &FitResult, subject: &CurveSubject, grid: &CareerGrid, level: f64, seed: u64) -> Result<AgeCurve> {
    age_curve_draws(fit, subject, grid, level, seed, &(0..fit.n_draws()).collect::<Vec<_>>())
}

pub fn age_curve_draws(
    fit: &FitResult,
    subject: &CurveSubject,
    grid: &CareerGrid,
    level: f64,
    seed: u64,
    draws: &[usize],
) -> Result<AgeCurve> {
    fit.require_events("age curves")?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("interval level {level} must lie in (0, 1)")));
    }
    if draws.is_empty() {
        return Err(Error::InvalidConfig("age curve needs at least one draw".into()));
    }
    let athlete = match subject {
        CurveSubject::Athlete(id) => Some(fit.athlete_index(id)?),
        CurveSubject::Profile(_) => None,
    };
    let sims: Vec<Vec<SimulatedDecathlon>> = draws
        .par_iter()
        .map(|&s| {
            let sim = DrawSimulator::new(fit, s)?;
            let intercepts = match (athlete, subject) {
                (Some(i), _) => fit.athlete_intercepts(i, s)?,
                (None, CurveSubject::Profile(p)) => profile_to_intercepts(p, &sim.params),
                (None, CurveSubject::Athlete(_)) => unreachable!(),
            };
            let mut rng = rng::stream(seed, Purpose::AgeCurve, s as u64, 0);
            Ok(grid.ages.iter().map(|&age| sim.simulate(&intercepts, age, &mut rng)).collect())
        })
        .collect::<Result<_>>()?;
    let points = grid
        .ages
        .iter()
        .enumerate()
        .map(|(a, &age)| {
            let events = (0..N_EVENTS)
                .map(|e| Band::of(&sims.iter().map(|d| d[a].marks[e]).collect::<Vec<_>>(), level))
                .collect();
            let totals: Vec<f64> = sims.iter().map(|d| d[a].total as f64).collect();
            AgeCurvePoint {
                age,
                events,
                total: Band::of(&totals, level),
            }
        })
        .collect();
    Ok(AgeCurve {
        subject: match subject {
            CurveSubject::Athlete(id) => id.clone(),
            CurveSubject::Profile(p) => p.label.clone(),
        },
        level,
        seed,
        points,
    })
}

/// Seeded choice of `n` distinct draws out of `total`, in increasing order;
/// every draw when `n ≥ total`.
pub fn subsample_draws(total: usize, n: usize, seed: u64) -> Vec<usize> {
    if n >= total {
        return (0..total).collect();
    }
    let mut rng = rng::stream(seed, Purpose::Subsample, total as u64, n as u64);
    let mut picked = rand::seq::index::sample(&mut rng, total, n).into_vec();
    picked.sort_unstable();
    picked
}
