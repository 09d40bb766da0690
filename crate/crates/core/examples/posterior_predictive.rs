//! Posterior-predictive event correlations: the compositional family
//! reproduces the couplings in the data, the simple family cannot.
//!
//!     cargo run --release --example posterior_predictive

mod common;

use decathlon::evaluate::posterior_predictive_correlations;
use decathlon::events::EventId;
use decathlon::inference::Family;

fn main() -> decathlon::Result<()> {
    let data = common::dataset(200, 2000, 15);
    for family in [Family::Simple, Family::Compositional] {
        let fit = common::fit_family(&data, family, 16)?;
        let report = posterior_predictive_correlations(&fit, &data, 1000, 17)?;
        println!("{} family: {} of 45 bands contain the data", family.label(), report.n_contained());
        for (a, b) in [(EventId::Sprint100, EventId::LongJump), (EventId::ShotPut, EventId::Discus), (EventId::HighJump, EventId::Javelin)] {
            let p = report.pair(a, b).expect("every pair is reported");
            let (lo, hi) = p.band();
            println!("  {}-{}: data {:+.3}, band [{lo:+.3}, {hi:+.3}]", a.label(), b.label(), p.empirical);
        }
    }
    Ok(())
}
