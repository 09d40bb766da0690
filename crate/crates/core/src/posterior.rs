//! Queries over a fit: credible intervals, latent-skill percentiles and
//! athlete profiles.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::events::{EventId, N_EVENTS};
use crate::inference::{DrawParams, FitResult, Target};
use crate::stats::{self, norm_cdf, norm_quantile};
use crate::{Error, Result};

/// Names one scalar parameter of a fit, e.g. `LJ.coef.age`, `100m.mu_alpha`,
/// `points.sigma2` or `JT.alpha[athlete-7]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamSelector {
    MuAlpha(Target),
    Sigma2Alpha(Target),
    Coef(Target, String),
    Sigma2(Target),
    Alpha(Target, String),
}

fn parse_target(s: &str) -> Option<Target> {
    if s == "points" {
        return Some(Target::Points);
    }
    s.parse::<EventId>().ok().map(Target::Event)
}

impl FromStr for ParamSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownParameter(s.to_string());
        let (target, rest) = s.split_once('.').ok_or_else(unknown)?;
        let target = parse_target(target).ok_or_else(unknown)?;
        Ok(match rest {
            "mu_alpha" => ParamSelector::MuAlpha(target),
            "sigma2_alpha" => ParamSelector::Sigma2Alpha(target),
            "sigma2" => ParamSelector::Sigma2(target),
            _ => {
                if let Some(name) = rest.strip_prefix("coef.") {
                    ParamSelector::Coef(target, name.to_string())
                } else if let Some(id) = rest.strip_prefix("alpha[").and_then(|r| r.strip_suffix(']')) {
                    ParamSelector::Alpha(target, id.to_string())
                } else {
                    return Err(unknown());
                }
            }
        })
    }
}

impl fmt::Display for ParamSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSelector::MuAlpha(t) => write!(f, "{}.mu_alpha", t.label()),
            ParamSelector::Sigma2Alpha(t) => write!(f, "{}.sigma2_alpha", t.label()),
            ParamSelector::Coef(t, name) => write!(f, "{}.coef.{name}", t.label()),
            ParamSelector::Sigma2(t) => write!(f, "{}.sigma2", t.label()),
            ParamSelector::Alpha(t, id) => write!(f, "{}.alpha[{id}]", t.label()),
        }
    }
}

impl ParamSelector {
    fn target(&self) -> Target {
        match self {
            ParamSelector::MuAlpha(t)
            | ParamSelector::Sigma2Alpha(t)
            | ParamSelector::Coef(t, _)
            | ParamSelector::Sigma2(t)
            | ParamSelector::Alpha(t, _) => *t,
        }
    }

    /// Every posterior draw of the parameter.
    pub fn draws(&self, fit: &FitResult) -> Result<Vec<f64>> {
        let unknown = || Error::UnknownParameter(self.to_string());
        let block = fit.block(self.target()).ok_or_else(unknown)?;
        Ok(match self {
            ParamSelector::MuAlpha(_) => block.mu_alpha.clone(),
            ParamSelector::Sigma2Alpha(_) => block.sigma2_alpha.clone(),
            ParamSelector::Sigma2(_) => block.sigma2.clone(),
            ParamSelector::Coef(_, name) => {
                let k = block.column_names.iter().position(|c| c == name).ok_or_else(unknown)?;
                block.coef_column(k)
            }
            ParamSelector::Alpha(_, id) => block.alpha_column(fit.athlete_index(id)?),
        })
    }
}

/// Equal-tailed credible interval of one parameter.
pub fn credible_interval(fit: &FitResult, selector: &ParamSelector, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("credible level {level} must lie in (0, 1)")));
    }
    let draws = selector.draws(fit)?;
    if draws.is_empty() {
        return Err(Error::UnknownParameter(format!("{selector} has no draws")));
    }
    Ok(stats::equal_tailed(&draws, level))
}

/// Percentile of an intercept within its population, oriented so that a
/// higher value is always the better performance.
pub fn skill_percentile(event: EventId, alpha: f64, mu_alpha: f64, sigma_alpha: f64) -> f64 {
    let z = (alpha - mu_alpha) / sigma_alpha;
    if event.is_track() {
        norm_cdf(-z)
    } else {
        norm_cdf(z)
    }
}

/// Intercept sitting at skill quantile `q`; inverse of [`skill_percentile`].
pub fn intercept_at(event: EventId, q: f64, mu_alpha: f64, sigma_alpha: f64) -> f64 {
    let z = norm_quantile(q);
    if event.is_track() {
        mu_alpha - sigma_alpha * z
    } else {
        mu_alpha + sigma_alpha * z
    }
}

/// Per-event skill quantiles of a real or synthetic athlete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct Profile {
    pub label: String,
    pub quantiles: [f64; N_EVENTS],
}

#[derive(Deserialize)]
struct RawProfile {
    label: String,
    quantiles: Vec<f64>,
}

impl TryFrom<RawProfile> for Profile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Profile> {
        let quantiles: [f64; N_EVENTS] = raw.quantiles.as_slice().try_into().map_err(|_| {
            Error::Schema(format!("a profile needs {N_EVENTS} quantiles, got {}", raw.quantiles.len()))
        })?;
        Profile::new(raw.label, quantiles)
    }
}

impl Profile {
    pub fn new(label: impl Into<String>, quantiles: [f64; N_EVENTS]) -> Result<Profile> {
        if let Some(&q) = quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::InvalidQuantile(q));
        }
        Ok(Profile {
            label: label.into(),
            quantiles,
        })
    }

    pub fn uniform(label: impl Into<String>, q: f64) -> Result<Profile> {
        Profile::new(label, [q; N_EVENTS])
    }

    pub fn quantile(&self, event: EventId) -> f64 {
        self.quantiles[event.index()]
    }

    pub fn from_json(text: &str) -> Result<Profile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Profile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Profile::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    /// Header for [`Profile::table_row`].
    pub fn table_header() -> String {
        let mut s = format!("{:<14}", "Name");
        for e in EventId::ALL {
            s.push_str(&format!("{:>7}", e.label()));
        }
        s
    }

    /// One aligned row: label, then the quantiles to two decimals.
    pub fn table_row(&self) -> String {
        let mut s = format!("{:<14}", self.label);
        for q in self.quantiles {
            s.push_str(&format!("{q:>7.2}"));
        }
        s
    }
}

/// The record holders' and synthetic profiles, with their published
/// break-9200 percentages. Printed values of 1.00 are read as 0.999.
pub const PRESETS: [(&str, [f64; N_EVENTS], f64); 9] = [
    ("K. Mayer", [0.88, 0.94, 0.91, 0.85, 0.66, 0.85, 0.88, 0.92, 0.93, 0.62], 7.7),
    ("A. Eaton", [0.999, 0.94, 0.40, 0.60, 0.95, 0.78, 0.65, 0.74, 0.44, 0.49], 5.65),
    ("R. Šebrle", [0.91, 0.999, 0.92, 0.94, 0.77, 0.55, 0.79, 0.57, 0.95, 0.35], 10.325),
    ("D. Warner", [0.999, 0.71, 0.52, 0.67, 0.57, 0.90, 0.82, 0.26, 0.77, 0.44], 1.825),
    ("R. Dvořák", [0.92, 0.95, 0.97, 0.55, 0.69, 0.74, 0.44, 0.34, 0.96, 0.67], 0.6),
    ("Day 1", [0.95, 0.95, 0.95, 0.95, 0.95, 0.50, 0.50, 0.50, 0.50, 0.50], 2.4),
    ("Day 2", [0.50, 0.50, 0.50, 0.50, 0.50, 0.95, 0.95, 0.95, 0.95, 0.95], 0.0),
    ("Excellent", [0.95; N_EVENTS], 99.95),
    ("Good", [0.80; N_EVENTS], 0.075),
];

pub fn preset_profiles() -> Vec<Profile> {
    PRESETS
        .iter()
        .map(|(label, q, _)| Profile::new(*label, *q).expect("preset quantiles are valid"))
        .collect()
}

/// Preset by label, case-insensitive, ignoring spaces and dots
/// (`excellent`, `day1`, `eaton` and `a. eaton` all work).
pub fn preset(name: &str) -> Option<Profile> {
    let norm = |s: &str| -> String {
        s.chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .map(|c| match c {
                'š' => 's',
                'ř' => 'r',
                'á' => 'a',
                c => c,
            })
            .collect()
    };
    let key = norm(name);
    preset_profiles().into_iter().find(|p| {
        let label = norm(&p.label);
        label == key || (key.len() > 2 && label.ends_with(&key) && label.len() - key.len() <= 1)
    })
}

/// Per-draw percentiles of one athlete's intercepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillPercentileDraws {
    pub athlete_id: String,
    /// `percentiles[e][s]` for event `e` and draw `s`.
    pub percentiles: Vec<Vec<f64>>,
}

impl SkillPercentileDraws {
    pub fn event(&self, event: EventId) -> &[f64] {
        &self.percentiles[event.index()]
    }

    pub fn mean(&self, event: EventId) -> f64 {
        stats::mean(self.event(event))
    }
}

pub fn skill_percentiles(fit: &FitResult, athlete_id: &str) -> Result<SkillPercentileDraws> {
    fit.require_events("skill percentiles")?;
    let i = fit.athlete_index(athlete_id)?;
    let percentiles = EventId::ALL
        .iter()
        .map(|&e| {
            let block = fit.event_block(e)?;
            Ok((0..block.n_draws)
                .map(|s| {
                    skill_percentile(
                        e,
                        block.alpha_at(s, i),
                        block.mu_alpha[s],
                        block.sigma2_alpha[s].sqrt(),
                    )
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(SkillPercentileDraws {
        athlete_id: athlete_id.to_string(),
        percentiles,
    })
}

/// Posterior-mean percentiles of an athlete.
pub fn profile_of(fit: &FitResult, athlete_id: &str) -> Result<Profile> {
    let draws = skill_percentiles(fit, athlete_id)?;
    let mut quantiles = [0.0; N_EVENTS];
    for e in EventId::ALL {
        quantiles[e.index()] = draws.mean(e);
    }
    Profile::new(athlete_id, quantiles)
}

/// Intercepts placing each event at the profile's quantile of the draw's
/// intercept population.
pub fn profile_to_intercepts(profile: &Profile, params: &DrawParams) -> [f64; N_EVENTS] {
    let mut out = [0.0; N_EVENTS];
    for e in EventId::ALL {
        let p = &params.events[e.index()];
        out[e.index()] = intercept_at(e, profile.quantile(e), p.mu_alpha, p.sigma_alpha);
    }
    out
}
