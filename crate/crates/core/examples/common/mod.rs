#![allow(dead_code)]

use decathlon::basis::{fit_knots, BasisKind};
use decathlon::dataset::{DecathlonRecord, StandardizedDataset};
use decathlon::inference::{fit, Family, FitResult, ModelSpec, SamplerConfig};
use decathlon::rng::{stream, Purpose};
use decathlon::synthetic::{typical_scales, Design, TruthParams};

/// Demonstration truth with compositional couplings on a random design.
pub fn truth(n_athletes: usize, n_records: usize, seed: u64) -> (TruthParams, Design) {
    let mut rng = stream(seed, Purpose::Synthetic, 0, 0);
    let design = Design::random(n_athletes, n_records, &mut rng);
    let basis = fit_knots(BasisKind::CubicPolynomial, &design.ages()).expect("design has ages");
    let truth = TruthParams::demo(&ModelSpec::with_basis(Family::Compositional, basis), n_athletes, 0.4, 0.4, &mut rng);
    (truth, design)
}

pub fn records(n_athletes: usize, n_records: usize, seed: u64) -> Vec<DecathlonRecord> {
    let (truth, design) = truth(n_athletes, n_records, seed);
    truth
        .simulate_records(&design, &typical_scales(), &mut stream(seed, Purpose::Synthetic, 1, 0))
        .expect("design matches truth")
}

pub fn dataset(n_athletes: usize, n_records: usize, seed: u64) -> StandardizedDataset {
    let (truth, design) = truth(n_athletes, n_records, seed);
    truth
        .simulate_dataset(&design, &typical_scales(), &mut stream(seed, Purpose::Synthetic, 1, 0))
        .expect("design matches truth")
}

pub fn fit_family(data: &StandardizedDataset, family: Family, seed: u64) -> decathlon::Result<FitResult> {
    let spec = ModelSpec::new(family, BasisKind::CubicPolynomial, data)?;
    fit(&spec, data, &SamplerConfig::default().with_seed(seed))
}
