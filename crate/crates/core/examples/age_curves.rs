//! Posterior-predictive age curve of one athlete: marks and total points
//! by age with 90% bands.
//!
//!     cargo run --release --example age_curves -- [athlete-id]

mod common;

use decathlon::events::EventId;
use decathlon::inference::Family;
use decathlon::scoring::display_mark;
use decathlon::simulate::{age_curve, CareerGrid, CurveSubject};

fn main() -> decathlon::Result<()> {
    let data = common::dataset(100, 900, 8);
    let fit = common::fit_family(&data, Family::Compositional, 9)?;
    let id = std::env::args().nth(1).unwrap_or_else(|| fit.athletes()[0].clone());
    let grid = CareerGrid::range(19.0, 33.0, 1.0)?;
    let curve = age_curve(&fit, &CurveSubject::Athlete(id.clone()), &grid, 0.9, 10)?;

    println!("{id}");
    println!("{:>5} {:>22} {:>22} {:>20}", "age", "100m", "1500m", "points");
    let band = |e: EventId, b: &decathlon::simulate::Band| {
        format!("{} ({} - {})", display_mark(e, b.mean), display_mark(e, b.low), display_mark(e, b.high))
    };
    for p in &curve.points {
        println!(
            "{:>5.1} {:>22} {:>22} {:>7.0} ({:.0} - {:.0})",
            p.age,
            band(EventId::Sprint100, &p.events[EventId::Sprint100.index()]),
            band(EventId::Run1500, &p.events[EventId::Run1500.index()]),
            p.total.mean,
            p.total.low,
            p.total.high
        );
    }
    Ok(())
}
