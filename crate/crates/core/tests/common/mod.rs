#![allow(dead_code)]

use decathlon::basis::{fit_knots, BasisKind};
use decathlon::dataset::StandardizedDataset;
use decathlon::inference::{Family, ModelSpec, Target};
use decathlon::rng::{stream, Purpose};
use decathlon::synthetic::{typical_scales, Design, TruthParams};

pub struct World {
    pub design: Design,
    pub truth: TruthParams,
    pub data: StandardizedDataset,
}

/// Demo truth of `family` on a random design, simulated on typical scales.
pub fn world(family: Family, n_athletes: usize, n_records: usize, seed: u64) -> World {
    let mut rng = stream(seed, Purpose::Synthetic, 0, 0);
    let design = Design::random(n_athletes, n_records, &mut rng);
    let basis = fit_knots(BasisKind::CubicPolynomial, &design.ages()).unwrap();
    let truth = TruthParams::demo(&ModelSpec::with_basis(family, basis), n_athletes, 0.4, 0.4, &mut rng);
    let data = truth.simulate_dataset(&design, &typical_scales(), &mut rng).unwrap();
    World { design, truth, data }
}

/// Zero every preceding-event coefficient of a compositional truth.
pub fn zero_gammas(truth: &mut TruthParams) {
    let d = truth.spec.basis.dimension();
    for b in &mut truth.blocks {
        if matches!(b.target, Target::Event(_)) {
            b.coef[d..].iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// The same parameters under the simple family, dropping preceding-event
/// coefficients.
pub fn as_simple(truth: &TruthParams) -> TruthParams {
    let d = truth.spec.basis.dimension();
    let mut simple = truth.clone();
    simple.spec = ModelSpec::with_basis(Family::Simple, truth.spec.basis.clone());
    for b in &mut simple.blocks {
        b.coef.truncate(d);
    }
    simple
}
