//! Simulate a compositional dataset, fit all three families, and compare
//! a few posterior summaries with the truth.
//!
//!     cargo run --release --example fit_synthetic -- [n_athletes] [n_records] [out.csv]

use std::time::Instant;

use decathlon::basis::{fit_knots, BasisKind};
use decathlon::dataset::{self, FilterConfig};
use decathlon::events::EventId;
use decathlon::inference::{fit, Family, ModelSpec, SamplerConfig};
use decathlon::posterior::{credible_interval, ParamSelector};
use decathlon::rng::{stream, Purpose};
use decathlon::synthetic::{typical_scales, Design, TruthParams};

fn main() -> decathlon::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n_athletes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let n_records: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);

    let mut rng = stream(11, Purpose::Synthetic, 0, 0);
    let design = Design::random(n_athletes, n_records, &mut rng);
    let basis = fit_knots(BasisKind::CubicPolynomial, &design.ages())?;
    let truth_spec = ModelSpec::with_basis(Family::Compositional, basis);
    let truth = TruthParams::demo(&truth_spec, n_athletes, 0.4, 0.4, &mut rng);
    let records = truth.simulate_records(&design, &typical_scales(), &mut rng)?;
    if let Some(path) = args.get(3) {
        let file = std::fs::File::create(path).map_err(|e| decathlon::Error::Io { path: path.into(), source: e })?;
        dataset::write_csv(&records, file)?;
        println!("wrote {} records to {path}", records.len());
    }

    // Standardize with the generating constants so fitted coefficients are
    // directly comparable with the truth.
    let kept = dataset::filter_athletes(&records, &FilterConfig { min_points: 0, ..FilterConfig::default() });
    let data = dataset::StandardizedDataset::with_scales(&kept, typical_scales());
    let config = SamplerConfig::default().with_seed(5);
    for family in [Family::Baseline, Family::Simple, Family::Compositional] {
        let spec = ModelSpec::new(family, BasisKind::CubicPolynomial, &data)?;
        let started = Instant::now();
        let result = fit(&spec, &data, &config)?;
        let d = result.diagnostics.as_ref().expect("4 chains give diagnostics");
        println!(
            "{:<14} {} draws in {:>6.2?}; max R-hat {:.4}, min ESS {:.0}, {} flagged",
            family.label(),
            result.n_draws(),
            started.elapsed(),
            d.max_rhat.unwrap_or(f64::NAN),
            d.min_ess.unwrap_or(f64::NAN),
            d.n_flagged
        );
        if family == Family::Compositional {
            for (from, to) in [(EventId::Sprint100, EventId::LongJump), (EventId::ShotPut, EventId::Discus)] {
                let sel: ParamSelector = format!("{}.coef.{}", to.label(), from.label()).parse()?;
                let (lo, hi) = credible_interval(&result, &sel, 0.95)?;
                println!("  {sel}: 95% interval [{lo:.3}, {hi:.3}], truth {:.3}", truth.gamma(from, to));
            }
        }
    }
    Ok(())
}
