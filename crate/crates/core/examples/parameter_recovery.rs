//! Refit data simulated from a known truth and report how often the 95%
//! intervals cover each coefficient.
//!
//!     cargo run --release --example parameter_recovery -- [replicates]

mod common;

use decathlon::evaluate::{parameter_recovery, RecoveryConfig};

fn main() -> decathlon::Result<()> {
    let replicates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let (truth, design) = common::truth(50, 500, 13);
    let config = RecoveryConfig {
        n_replicates: replicates,
        seed: 14,
        ..RecoveryConfig::default()
    };
    let report = parameter_recovery(&truth, &design, &config)?;
    print!("{}", report.table());
    println!(
        "{} replicates, {} failed, lowest coverage {:.2}",
        report.n_replicates,
        report.n_failed,
        report.min_coverage().unwrap_or(f64::NAN)
    );
    Ok(())
}
