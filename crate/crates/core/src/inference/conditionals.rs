//! Closed-form full conditionals of the random-intercept regression.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::Priors;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub var: f64,
}

impl NormalParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean + self.var.sqrt() * z
    }
}

/// Inverse gamma with density ∝ x^(−shape−1) exp(−scale / x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InvGamma {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.shape, 1.0 / self.scale).expect("positive gamma parameters");
        1.0 / gamma.sample(rng)
    }

    /// Mean, defined for shape > 1.
    pub fn mean(&self) -> f64 {
        self.scale / (self.shape - 1.0)
    }

    /// Variance, defined for shape > 2.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        m * m / (self.shape - 2.0)
    }
}

/// α_i given the residuals `y − Xθ` of its `n` rows.
pub fn alpha_conditional(resid_sum: f64, n: usize, sigma2: f64, mu: f64, tau2: f64) -> NormalParams {
    let precision = n as f64 / sigma2 + 1.0 / tau2;
    NormalParams {
        mean: (resid_sum / sigma2 + mu / tau2) / precision,
        var: 1.0 / precision,
    }
}

/// μ_α given the intercepts of `n_athletes` athletes.
pub fn mu_conditional(alpha_sum: f64, n_athletes: usize, tau2: f64, priors: &Priors) -> NormalParams {
    let prior_precision = 1.0 / (priors.mu_sd * priors.mu_sd);
    let precision = n_athletes as f64 / tau2 + prior_precision;
    NormalParams {
        mean: (alpha_sum / tau2 + priors.mu_mean * prior_precision) / precision,
        var: 1.0 / precision,
    }
}

/// σ²_α given `Σ (α_i − μ_α)²` over `n_athletes`.
pub fn tau2_conditional(sq_dev_sum: f64, n_athletes: usize, priors: &Priors) -> InvGamma {
    InvGamma {
        shape: priors.variance_shape + n_athletes as f64 / 2.0,
        scale: priors.variance_scale + sq_dev_sum / 2.0,
    }
}

/// Residual variance given the residual sum of squares over `n` rows.
pub fn sigma2_conditional(rss: f64, n: usize, priors: &Priors) -> InvGamma {
    InvGamma {
        shape: priors.variance_shape + n as f64 / 2.0,
        scale: priors.variance_scale + rss / 2.0,
    }
}

/// Multivariate normal full conditional of the coefficient block, held as
/// its mean and the Cholesky factor of its precision.
#[derive(Debug, Clone)]
pub struct CoefConditional {
    pub mean: DVector<f64>,
    precision: Cholesky<f64, Dyn>,
}

impl CoefConditional {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| StandardNormal.sample(rng));
        // L Lᵀ = Q, so L⁻ᵀ z has covariance Q⁻¹.
        let offset = self
            .precision
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor is nonsingular");
        &self.mean + offset
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision.inverse()
    }
}

/// Coefficients given `XᵀX`, `Xᵀ(y − α)`, the residual variance and the
/// prior variance. `None` when the precision is not positive definite.
pub fn coef_conditional(
    xtx: &DMatrix<f64>,
    xt_resid: &DVector<f64>,
    sigma2: f64,
    prior_var: f64,
) -> Option<CoefConditional> {
    let p = xtx.nrows();
    let precision = xtx / sigma2 + DMatrix::identity(p, p) / prior_var;
    let chol = Cholesky::new(precision)?;
    let mean = chol.solve(&(xt_resid / sigma2));
    if mean.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(CoefConditional {
        mean,
        precision: chol,
    })
}
