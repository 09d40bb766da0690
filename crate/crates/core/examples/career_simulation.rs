//! Simulated careers for the preset profiles: chance of beating a
//! threshold and the distribution of career bests.
//!
//!     cargo run --release --example career_simulation -- [threshold]

mod common;

use decathlon::inference::Family;
use decathlon::posterior::preset_profiles;
use decathlon::simulate::{simulate_career, CareerGrid, DEFAULT_THRESHOLD};

fn main() -> decathlon::Result<()> {
    let threshold: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_THRESHOLD);
    let data = common::dataset(200, 2000, 5);
    let fit = common::fit_family(&data, Family::Compositional, 6)?;
    let grid = CareerGrid::default();

    println!("{:<14}{:>10}{:>10}{:>16}", "Profile", "P(break)", "mean", "95% interval");
    for profile in preset_profiles() {
        let s = simulate_career(&fit, &profile, &grid, 7)?.summary(threshold);
        println!(
            "{:<14}{:>10.4}{:>10.0}{:>9.0} - {:<6.0}",
            profile.label, s.break_probability, s.max_score_mean, s.max_score_quantiles.q025, s.max_score_quantiles.q975
        );
    }

    let excellent = decathlon::posterior::preset("excellent").expect("built-in preset");
    let summary = simulate_career(&fit, &excellent, &grid, 7)?.summary(threshold);
    println!("\nCareer bests, {}:", excellent.label);
    let peak = summary.histogram.iter().map(|b| b.count).max().unwrap_or(1);
    for b in &summary.histogram {
        println!("{:>5}-{:<5} {}", b.lower, b.upper, "#".repeat(b.count * 50 / peak));
    }
    Ok(())
}
