//! Ten-fold cross-validated SMSE of the three families on synthetic data.
//!
//!     cargo run --release --example cross_validation -- [general|tail]

mod common;

use decathlon::basis::BasisKind;
use decathlon::dataset::Protocol;
use decathlon::evaluate::{cross_validate, ModelChoice};
use decathlon::inference::{Family, SamplerConfig};

fn main() -> decathlon::Result<()> {
    let protocol: Protocol = match std::env::args().nth(1) {
        Some(s) => s.parse().map_err(decathlon::Error::InvalidConfig)?,
        None => Protocol::General,
    };
    let records = common::records(150, 1500, 11);
    let models: Vec<ModelChoice> = [Family::Baseline, Family::Simple, Family::Compositional]
        .into_iter()
        .map(|f| ModelChoice::new(f, BasisKind::CubicPolynomial))
        .collect();
    let sampler = SamplerConfig {
        chains: 2,
        iterations: 1000,
        burn_in: 500,
        seed: 0,
    };
    let study = cross_validate(&records, &models, protocol, 12, &sampler)?;
    print!("{}", study.table());
    for pair in models.windows(2) {
        let (gap, se) = study.paired_gap(pair[0], pair[1]).expect("both models ran");
        println!("{} minus {}: {gap:+.4} (se {se:.4})", pair[0].label(), pair[1].label());
    }
    Ok(())
}
