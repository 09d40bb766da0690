//! JSON endpoints over one loaded fit.
//!
//! | method | path                                         | body / result                         |
//! |--------|----------------------------------------------|---------------------------------------|
//! | GET    | `/healthz`                                   | `{status, family, n_draws, n_athletes}` |
//! | GET    | `/events`                                    | scoring table rows                    |
//! | GET    | `/athletes`                                  | `{athletes: [id]}`                    |
//! | GET    | `/athletes/{id}/profile`                     | `{label, quantiles}`                  |
//! | GET    | `/athletes/{id}/age-curve?from=&to=&step=`   | age curve (`level`, `seed`, `draws` optional) |
//! | POST   | `/simulate`                                  | [`SimulateRequest`] → career summary  |
//!
//! Errors come back as `{"error": message}` with status 400 (malformed
//! request), 404 (unknown route or athlete), 405 (wrong method) or 422
//! (event-level query on a baseline fit, or a request over the work budget).

use std::sync::Arc;

use percent_encoding::percent_decode_str;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::events::N_EVENTS;
use crate::inference::FitResult;
use crate::posterior::{profile_of, Profile};
use crate::scoring::DECATHLON_TABLE;
use crate::simulate::{
    age_curve_draws, simulate_career_draws, subsample_draws, CareerGrid, CurveSubject, DEFAULT_THRESHOLD,
};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApiConfig {
    /// Worker threads for one request's simulation.
    pub workers: usize,
    /// Upper bound on simulated decathlons (draws × ages) per request.
    pub budget: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            workers: 4,
            budget: 4000 * 24 * 4,
        }
    }
}

/// Body of `POST /simulate`. Only `quantiles` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub quantiles: Vec<f64>,
    #[serde(default)]
    pub label: Option<String>,
    /// Explicit ages; overrides `per_year`.
    #[serde(default)]
    pub ages: Option<Vec<f64>>,
    /// Decathlons per year from 19 to 30 (default 2).
    #[serde(default)]
    pub per_year: Option<u32>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Number of posterior draws to use, capped at the fit's draw count.
    #[serde(default)]
    pub draws: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveQuery {
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
    level: Option<f64>,
    seed: Option<u64>,
    draws: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: String,
}

impl ApiResponse {
    fn json<T: Serialize>(status: u16, value: &T) -> ApiResponse {
        ApiResponse {
            status,
            body: serde_json::to_string_pretty(value).expect("response serializes"),
        }
    }

    fn error(status: u16, message: impl std::fmt::Display) -> ApiResponse {
        ApiResponse::json(status, &json!({ "error": message.to_string() }))
    }

    pub fn json_body(&self) -> Value {
        serde_json::from_str(&self.body).expect("responses are JSON")
    }
}

fn from_error(e: Error) -> ApiResponse {
    let status = match e {
        Error::UnknownAthlete(_) => 404,
        Error::UnsupportedFamily { .. } => 422,
        Error::NumericalFailure { .. } => 500,
        _ => 400,
    };
    ApiResponse::error(status, e)
}

pub struct Api {
    fit: Arc<FitResult>,
    config: ApiConfig,
    pool: rayon::ThreadPool,
}

impl Api {
    pub fn new(fit: FitResult, config: ApiConfig) -> crate::Result<Api> {
        if config.workers == 0 || config.budget == 0 {
            return Err(Error::InvalidConfig("workers and budget must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Api {
            fit: Arc::new(fit),
            config,
            pool,
        })
    }

    pub fn fit(&self) -> &FitResult {
        &self.fit
    }

    /// Route one request. `target` is the request path with its query.
    pub fn handle(&self, method: &str, target: &str, body: &[u8]) -> ApiResponse {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let segments: Vec<String> = path
            .trim_matches('/')
            .split('/')
            .map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned())
            .collect();
        let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
        let get = method == "GET";
        match segs.as_slice() {
            ["healthz"] if get => self.healthz(),
            ["events"] if get => ApiResponse::json(200, &DECATHLON_TABLE.rows()),
            ["athletes"] if get => ApiResponse::json(200, &json!({ "athletes": self.fit.athletes() })),
            ["athletes", id, "profile"] if get => match profile_of(&self.fit, id) {
                Ok(p) => ApiResponse::json(200, &p),
                Err(e) => from_error(e),
            },
            ["athletes", id, "age-curve"] if get => self.age_curve(id, query),
            ["simulate"] if method == "POST" => self.simulate(body),
            ["healthz"] | ["events"] | ["athletes"] | ["athletes", _, "profile"] | ["athletes", _, "age-curve"]
            | ["simulate"] => ApiResponse::error(405, format!("{method} not allowed on {path}")),
            _ => ApiResponse::error(404, format!("no route for {path}")),
        }
    }

    fn healthz(&self) -> ApiResponse {
        ApiResponse::json(
            200,
            &json!({
                "status": "ok",
                "family": self.fit.family(),
                "n_draws": self.fit.n_draws(),
                "n_athletes": self.fit.athletes().len(),
            }),
        )
    }

    fn draws(&self, requested: Option<usize>, seed: u64) -> Result<Vec<usize>, ApiResponse> {
        let total = self.fit.n_draws();
        match requested {
            Some(0) => Err(ApiResponse::error(400, "draws must be positive")),
            Some(n) => Ok(subsample_draws(total, n.min(total), seed)),
            None => Ok((0..total).collect()),
        }
    }

    fn check_budget(&self, draws: usize, ages: usize) -> Result<(), ApiResponse> {
        if draws.saturating_mul(ages) > self.config.budget {
            return Err(ApiResponse::error(
                422,
                format!(
                    "{draws} draws × {ages} ages exceeds the request budget of {} simulated decathlons; \
                     request fewer draws or ages, or use the command line for long runs",
                    self.config.budget
                ),
            ));
        }
        Ok(())
    }

    fn age_curve(&self, id: &str, query: &str) -> ApiResponse {
        let q: CurveQuery = match serde_urlencoded::from_str(query) {
            Ok(q) => q,
            Err(e) => return ApiResponse::error(400, format!("bad query: {e}")),
        };
        if let Err(e) = self.fit.require_events("age curves").and(self.fit.athlete_index(id).map(|_| ())) {
            return from_error(e);
        }
        let grid = match CareerGrid::range(q.from.unwrap_or(19.0), q.to.unwrap_or(31.0), q.step.unwrap_or(0.5)) {
            Ok(g) => g,
            Err(e) => return from_error(e),
        };
        let seed = q.seed.unwrap_or(0);
        let draws = match self.draws(q.draws, seed) {
            Ok(d) => d,
            Err(r) => return r,
        };
        if let Err(r) = self.check_budget(draws.len(), grid.len()) {
            return r;
        }
        let subject = CurveSubject::Athlete(id.to_string());
        let level = q.level.unwrap_or(0.95);
        match self
            .pool
            .install(|| age_curve_draws(&self.fit, &subject, &grid, level, seed, &draws))
        {
            Ok(curve) => ApiResponse::json(200, &curve),
            Err(e) => from_error(e),
        }
    }

    fn simulate(&self, body: &[u8]) -> ApiResponse {
        let req: SimulateRequest = match serde_json::from_slice(body) {
            Ok(r) => r,
            Err(e) => return ApiResponse::error(400, format!("malformed body: {e}")),
        };
        if let Err(e) = self.fit.require_events("career simulation") {
            return from_error(e);
        }
        let Ok(quantiles) = <[f64; N_EVENTS]>::try_from(req.quantiles.as_slice()) else {
            return ApiResponse::error(400, format!("expected {N_EVENTS} quantiles, got {}", req.quantiles.len()));
        };
        let profile = match Profile::new(req.label.clone().unwrap_or_else(|| "custom".into()), quantiles) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let grid = match (&req.ages, req.per_year) {
            (Some(ages), _) => CareerGrid::new(ages.clone()),
            (None, Some(k)) => CareerGrid::per_year(19, 30, k),
            (None, None) => Ok(CareerGrid::default()),
        };
        let grid = match grid {
            Ok(g) => g,
            Err(e) => return from_error(e),
        };
        let threshold = req.threshold.unwrap_or(DEFAULT_THRESHOLD);
        if !threshold.is_finite() {
            return ApiResponse::error(400, "threshold must be finite");
        }
        let seed = req.seed.unwrap_or(0);
        let draws = match self.draws(req.draws, seed) {
            Ok(d) => d,
            Err(r) => return r,
        };
        if let Err(r) = self.check_budget(draws.len(), grid.len()) {
            return r;
        }
        match self
            .pool
            .install(|| simulate_career_draws(&self.fit, &profile, &grid, seed, &draws))
        {
            Ok(career) => ApiResponse::json(200, &career.summary(threshold)),
            Err(e) => from_error(e),
        }
    }
}
