use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::conditionals::{
    alpha_conditional, coef_conditional, mu_conditional, sigma2_conditional, tau2_conditional,
};
use super::{Priors, RegressionProblem};

/// Parameters of one block at one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterState {
    /// Athlete intercepts.
    pub alpha: Vec<f64>,
    pub mu_alpha: f64,
    /// Variance of the intercept population.
    pub sigma2_alpha: f64,
    /// Basis coefficients followed by preceding-event coefficients.
    pub coef: Vec<f64>,
    /// Residual variance.
    pub sigma2: f64,
}

impl ParameterState {
    pub fn is_valid(&self) -> bool {
        self.sigma2 > 0.0
            && self.sigma2_alpha > 0.0
            && self.sigma2.is_finite()
            && self.sigma2_alpha.is_finite()
            && self.mu_alpha.is_finite()
            && self.alpha.iter().chain(&self.coef).all(|v| v.is_finite())
    }
}

/// Blocked Gibbs sampler for one regression problem. Caches `XᵀX` and the
/// rows owned by each athlete.
pub struct GibbsSampler<'a> {
    problem: &'a RegressionProblem,
    priors: Priors,
    xtx: DMatrix<f64>,
    rows_of: Vec<Vec<usize>>,
    fitted: Vec<f64>,
    resid: DVector<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(problem: &'a RegressionProblem, priors: Priors) -> Self {
        let mut rows_of = vec![Vec::new(); problem.n_athletes];
        for (r, &i) in problem.athlete_of.iter().enumerate() {
            rows_of[i].push(r);
        }
        GibbsSampler {
            problem,
            priors,
            xtx: problem.design.tr_mul(&problem.design),
            rows_of,
            fitted: vec![0.0; problem.n_obs()],
            resid: DVector::zeros(problem.n_obs()),
        }
    }

    /// Dispersed starting point: hyper-mean and coefficients from a
    /// narrowed prior, unit variances, intercepts at the hyper-mean.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ParameterState {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let mu_alpha = 0.5 * normal();
        let coef = (0..self.problem.n_coef()).map(|_| 0.1 * normal()).collect();
        ParameterState {
            alpha: vec![mu_alpha; self.problem.n_athletes],
            mu_alpha,
            sigma2_alpha: 1.0,
            coef,
            sigma2: 1.0,
        }
    }

    /// One full sweep: intercepts, hyper-mean, hyper-variance, coefficient
    /// block, residual variance. Fails if the coefficient precision is not
    /// positive definite.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut ParameterState, rng: &mut R) -> Result<(), String> {
        let problem = self.problem;
        let y = &problem.response;
        let p = problem.n_coef();

        if p > 0 {
            let coef = DVector::from_column_slice(&state.coef);
            let fitted = &problem.design * coef;
            self.fitted.copy_from_slice(fitted.as_slice());
        } else {
            self.fitted.iter_mut().for_each(|f| *f = 0.0);
        }

        for (i, rows) in self.rows_of.iter().enumerate() {
            let resid_sum: f64 = rows.iter().map(|&r| y[r] - self.fitted[r]).sum();
            state.alpha[i] = alpha_conditional(
                resid_sum,
                rows.len(),
                state.sigma2,
                state.mu_alpha,
                state.sigma2_alpha,
            )
            .sample(rng);
        }

        let alpha_sum: f64 = state.alpha.iter().sum();
        state.mu_alpha =
            mu_conditional(alpha_sum, state.alpha.len(), state.sigma2_alpha, &self.priors).sample(rng);

        let sq_dev: f64 = state.alpha.iter().map(|a| (a - state.mu_alpha).powi(2)).sum();
        state.sigma2_alpha = tau2_conditional(sq_dev, state.alpha.len(), &self.priors).sample(rng);

        for (r, &i) in problem.athlete_of.iter().enumerate() {
            self.resid[r] = y[r] - state.alpha[i];
        }
        if p > 0 {
            let xt_resid = problem.design.tr_mul(&self.resid);
            let prior_var = self.priors.coef_sd * self.priors.coef_sd;
            let conditional = coef_conditional(&self.xtx, &xt_resid, state.sigma2, prior_var)
                .ok_or_else(|| "coefficient precision is not positive definite".to_string())?;
            let coef = conditional.sample(rng);
            state.coef.copy_from_slice(coef.as_slice());
            let fitted = &problem.design * coef;
            self.fitted.copy_from_slice(fitted.as_slice());
        }

        let rss: f64 = self
            .resid
            .iter()
            .zip(&self.fitted)
            .map(|(r, f)| (r - f) * (r - f))
            .sum();
        state.sigma2 = sigma2_conditional(rss, problem.n_obs(), &self.priors).sample(rng);

        if state.is_valid() {
            Ok(())
        } else {
            Err("sampler produced a non-finite or non-positive parameter".to_string())
        }
    }
}

/// One sweep from `state`; builds a fresh sampler, so prefer
/// [`GibbsSampler`] in loops.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &ParameterState,
    problem: &RegressionProblem,
    priors: &Priors,
    rng: &mut R,
) -> Result<ParameterState, String> {
    let mut next = state.clone();
    GibbsSampler::new(problem, *priors).step(&mut next, rng)?;
    Ok(next)
}
