//! Combined-events point tables.
//!
//! Track events score `a·(b − y)^c` and field events `a·(y − b)^c`, floored
//! to an integer. Marks on the wrong side of `b` score zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::events::{EventId, EventKind, Unit, N_EVENTS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Coefficients for all ten events, indexed by [`EventId::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringTable {
    coefficients: [ScoringCoefficients; N_EVENTS],
}

const fn coeffs(a: f64, b: f64, c: f64) -> ScoringCoefficients {
    ScoringCoefficients { a, b, c }
}

/// The current men's decathlon table.
pub const DECATHLON_TABLE: ScoringTable = ScoringTable {
    coefficients: [
        coeffs(25.435, 18.0, 1.81),
        coeffs(0.144, 220.0, 1.40),
        coeffs(51.390, 1.5, 1.05),
        coeffs(0.847, 75.0, 1.42),
        coeffs(1.538, 82.0, 1.81),
        coeffs(5.744, 28.5, 1.92),
        coeffs(12.910, 4.0, 1.10),
        coeffs(0.280, 100.0, 1.35),
        coeffs(10.140, 7.0, 1.08),
        coeffs(0.038, 480.0, 1.85),
    ],
};

/// Text form of [`DECATHLON_TABLE`], one row per event.
pub const TABLE_CSV: &str = include_str!("../data/scoring_table.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mark {
    pub event: EventId,
    pub value: f64,
}

impl Mark {
    pub fn new(event: EventId, value: f64) -> Result<Mark> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidMark { event, value });
        }
        Ok(Mark { event, value })
    }
}

/// One row of the scoring table as shipped in the data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub event: EventId,
    pub kind: EventKind,
    pub unit: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for ScoringTable {
    fn default() -> Self {
        DECATHLON_TABLE
    }
}

impl ScoringTable {
    pub fn coefficients(&self, event: EventId) -> ScoringCoefficients {
        self.coefficients[event.index()]
    }

    pub fn rows(&self) -> Vec<TableRow> {
        EventId::ALL
            .iter()
            .map(|&event| {
                let c = self.coefficients(event);
                TableRow {
                    event,
                    kind: event.kind(),
                    unit: event.unit().symbol().to_string(),
                    a: c.a,
                    b: c.b,
                    c: c.c,
                }
            })
            .collect()
    }

    /// Parse a table in the `event,kind,unit,a,b,c` layout.
    pub fn from_csv_str(text: &str) -> Result<ScoringTable> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut slots: [Option<ScoringCoefficients>; N_EVENTS] = [None; N_EVENTS];
        for row in reader.deserialize::<TableRow>() {
            let row = row?;
            if row.kind != row.event.kind() {
                return Err(Error::Schema(format!(
                    "{} listed as {:?}, expected {:?}",
                    row.event,
                    row.kind,
                    row.event.kind()
                )));
            }
            if row.unit != row.event.unit().symbol() {
                return Err(Error::Schema(format!(
                    "{} listed in `{}`, expected `{}`",
                    row.event,
                    row.unit,
                    row.event.unit().symbol()
                )));
            }
            if !(row.a > 0.0 && row.b > 0.0 && row.c > 0.0) {
                return Err(Error::Schema(format!(
                    "{} coefficients must be positive",
                    row.event
                )));
            }
            let slot = &mut slots[row.event.index()];
            if slot.is_some() {
                return Err(Error::Schema(format!("{} listed twice", row.event)));
            }
            *slot = Some(coeffs(row.a, row.b, row.c));
        }
        let missing: Vec<EventId> = EventId::ALL
            .iter()
            .copied()
            .filter(|e| slots[e.index()].is_none())
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteDecathlon { missing });
        }
        Ok(ScoringTable {
            coefficients: slots.map(|c| c.expect("checked above")),
        })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<ScoringTable> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn points(&self, mark: Mark) -> Result<u32> {
        event_points(mark, self.coefficients(mark.event))
    }

    /// Points for a raw value, scoring zero instead of failing on values
    /// that are not valid marks. Simulation tails go through here.
    pub fn points_or_zero(&self, event: EventId, value: f64) -> u32 {
        Mark::new(event, value)
            .and_then(|m| self.points(m))
            .unwrap_or(0)
    }

    pub fn total(&self, marks: &[Mark]) -> Result<u32> {
        let mut seen = [false; N_EVENTS];
        let mut total = 0;
        for mark in marks {
            if std::mem::replace(&mut seen[mark.event.index()], true) {
                return Err(Error::DuplicateMark(mark.event));
            }
            total += self.points(*mark)?;
        }
        let missing: Vec<EventId> = EventId::ALL
            .iter()
            .copied()
            .filter(|e| !seen[e.index()])
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteDecathlon { missing });
        }
        Ok(total)
    }

    /// Total for ten raw values in competition order.
    pub fn total_of(&self, values: &[f64; N_EVENTS]) -> Result<u32> {
        let marks = EventId::ALL
            .iter()
            .zip(values)
            .map(|(&e, &v)| Mark::new(e, v))
            .collect::<Result<Vec<_>>>()?;
        self.total(&marks)
    }

    /// Lenient total: invalid values contribute zero.
    pub fn total_or_zero(&self, values: &[f64; N_EVENTS]) -> u32 {
        EventId::ALL
            .iter()
            .zip(values)
            .map(|(&e, &v)| self.points_or_zero(e, v))
            .sum()
    }

    pub fn invert(&self, event: EventId, points: u32) -> Mark {
        invert_points(event, points, self.coefficients(event))
    }
}

/// Unfloored point value; negative bases give zero.
pub fn continuous_points(event: EventId, value: f64, c: ScoringCoefficients) -> f64 {
    let base = match event.kind() {
        EventKind::Track => c.b - value,
        EventKind::Field => value - c.b,
    };
    if base <= 0.0 {
        0.0
    } else {
        c.a * base.powf(c.c)
    }
}

pub fn event_points(mark: Mark, coefficients: ScoringCoefficients) -> Result<u32> {
    if !mark.value.is_finite() || mark.value <= 0.0 {
        return Err(Error::InvalidMark {
            event: mark.event,
            value: mark.value,
        });
    }
    Ok(continuous_points(mark.event, mark.value, coefficients).floor() as u32)
}

pub fn total_score(marks: &[Mark]) -> Result<u32> {
    DECATHLON_TABLE.total(marks)
}

/// The mark whose unfloored score equals `points`.
pub fn invert_points(event: EventId, points: u32, c: ScoringCoefficients) -> Mark {
    let offset = (f64::from(points) / c.a).powf(1.0 / c.c);
    let value = match event.kind() {
        EventKind::Track => c.b - offset,
        EventKind::Field => c.b + offset,
    };
    Mark { event, value }
}

/// Unit conversion helper for display: centimeters print as meters.
pub fn display_mark(event: EventId, value: f64) -> String {
    match event.unit() {
        Unit::Centimeters => format!("{:.2}", value / 100.0),
        Unit::Meters => format!("{value:.2}"),
        Unit::Seconds if value >= 60.0 => {
            let minutes = (value / 60.0).floor();
            format!("{}:{:05.2}", minutes as u32, value - 60.0 * minutes)
        }
        Unit::Seconds => format!("{value:.2}"),
    }
}
