use nalgebra::DMatrix;

use super::{Family, ModelSpec, Target};
use crate::dataset::StandardizedDataset;
use crate::{Error, Result};

/// One block's regression: response, fixed-effect design and the athlete
/// owning each row.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub target: Target,
    pub response: Vec<f64>,
    /// Rows are observations; basis columns come first, then preceding
    /// events for the compositional family.
    pub design: DMatrix<f64>,
    pub athlete_of: Vec<usize>,
    pub n_athletes: usize,
    pub column_names: Vec<String>,
}

impl RegressionProblem {
    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn n_coef(&self) -> usize {
        self.design.ncols()
    }
}

pub fn build_design(
    spec: &ModelSpec,
    data: &StandardizedDataset,
    target: Target,
) -> Result<RegressionProblem> {
    if !spec.supports(target) {
        return Err(Error::UnsupportedFamily {
            family: spec.family.label(),
            operation: match target {
                Target::Points => "modelling total points",
                Target::Event(_) => "modelling single events",
            },
        });
    }
    let preceding = match (spec.family, target) {
        (Family::Compositional, Target::Event(e)) => e.preceding(),
        _ => &[],
    };
    let n = data.len();
    let d = spec.basis.dimension();
    let p = d + preceding.len();
    let mut design = DMatrix::zeros(n, p);
    let mut response = Vec::with_capacity(n);
    for (r, obs) in data.observations.iter().enumerate() {
        for (k, v) in spec.basis.design_row(obs.age).into_iter().enumerate() {
            design[(r, k)] = v;
        }
        for (k, m) in preceding.iter().enumerate() {
            design[(r, d + k)] = obs.y[m.index()];
        }
        response.push(match target {
            Target::Points => obs.points,
            Target::Event(e) => obs.y[e.index()],
        });
    }
    Ok(RegressionProblem {
        target,
        response,
        design,
        athlete_of: data.observations.iter().map(|o| o.athlete).collect(),
        n_athletes: data.athletes.len(),
        column_names: spec.column_names(target),
    })
}
