//! Score a marks file (label, m100, lj_cm, ... m1500) event by event.
//!
//!     cargo run --example score_marks -- [marks.csv]

use std::path::PathBuf;

use decathlon::events::EventId;
use decathlon::gateway::cli::read_marks;
use decathlon::scoring::{display_mark, DECATHLON_TABLE};

fn main() -> decathlon::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/world_record_marks.csv"));
    for (label, marks) in read_marks(&path)? {
        println!("{label}");
        let mut total = 0;
        for e in EventId::ALL {
            match marks[e.index()] {
                Some(v) => {
                    let p = DECATHLON_TABLE.points_or_zero(e, v);
                    total += p;
                    println!("  {:<6} {:>8} {:>5}", e.label(), display_mark(e, v), p);
                }
                None => println!("  {:<6} {:>8} {:>5}", e.label(), "-", 0),
            }
        }
        println!("  {:<6} {:>14}", "total", total);
    }

    // Marks worth 1000 points.
    println!("\n1000-point marks:");
    for e in EventId::ALL {
        let m = DECATHLON_TABLE.invert(e, 1000);
        println!("  {:<6} {:>8}", e.label(), display_mark(e, m.value));
    }
    Ok(())
}
