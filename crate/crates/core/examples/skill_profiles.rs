//! Latent-skill percentiles of fitted athletes next to the built-in presets.
//!
//!     cargo run --release --example skill_profiles

mod common;

use decathlon::events::EventId;
use decathlon::inference::Family;
use decathlon::posterior::{preset_profiles, profile_of, skill_percentiles, Profile};

fn main() -> decathlon::Result<()> {
    let data = common::dataset(120, 1000, 3);
    let fit = common::fit_family(&data, Family::Compositional, 4)?;

    println!("{}", Profile::table_header());
    for id in fit.athletes().iter().take(8) {
        println!("{}", profile_of(&fit, id)?.table_row());
    }

    let first = &fit.athletes()[0];
    let draws = skill_percentiles(&fit, first)?;
    let lj = draws.event(EventId::LongJump);
    let (lo, hi) = decathlon::stats::equal_tailed(lj, 0.9);
    println!("\n{first} long jump percentile: mean {:.2}, 90% interval [{lo:.2}, {hi:.2}]", draws.mean(EventId::LongJump));

    println!("\nPresets");
    println!("{}", Profile::table_header());
    for p in preset_profiles() {
        println!("{}", p.table_row());
    }
    Ok(())
}
