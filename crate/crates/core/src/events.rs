use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Whether smaller (track) or larger (field) marks are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Track,
    Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Seconds,
    Centimeters,
    Meters,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Seconds => "s",
            Unit::Centimeters => "cm",
            Unit::Meters => "m",
        }
    }
}

/// The ten decathlon disciplines, in competition order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventId {
    #[serde(rename = "100m")]
    Sprint100,
    #[serde(rename = "LJ")]
    LongJump,
    #[serde(rename = "SP")]
    ShotPut,
    #[serde(rename = "HJ")]
    HighJump,
    #[serde(rename = "400m")]
    Run400,
    #[serde(rename = "110mH")]
    Hurdles110,
    #[serde(rename = "DT")]
    Discus,
    #[serde(rename = "PV")]
    PoleVault,
    #[serde(rename = "JT")]
    Javelin,
    #[serde(rename = "1500m")]
    Run1500,
}

pub const N_EVENTS: usize = 10;

impl EventId {
    pub const ALL: [EventId; N_EVENTS] = [
        EventId::Sprint100,
        EventId::LongJump,
        EventId::ShotPut,
        EventId::HighJump,
        EventId::Run400,
        EventId::Hurdles110,
        EventId::Discus,
        EventId::PoleVault,
        EventId::Javelin,
        EventId::Run1500,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<EventId> {
        Self::ALL.get(index).copied()
    }

    pub fn kind(self) -> EventKind {
        match self {
            EventId::Sprint100 | EventId::Run400 | EventId::Hurdles110 | EventId::Run1500 => {
                EventKind::Track
            }
            _ => EventKind::Field,
        }
    }

    pub fn is_track(self) -> bool {
        self.kind() == EventKind::Track
    }

    pub fn unit(self) -> Unit {
        match self {
            EventId::LongJump | EventId::HighJump | EventId::PoleVault => Unit::Centimeters,
            EventId::ShotPut | EventId::Discus | EventId::Javelin => Unit::Meters,
            _ => Unit::Seconds,
        }
    }

    /// Short label used in tables and JSON.
    pub fn label(self) -> &'static str {
        match self {
            EventId::Sprint100 => "100m",
            EventId::LongJump => "LJ",
            EventId::ShotPut => "SP",
            EventId::HighJump => "HJ",
            EventId::Run400 => "400m",
            EventId::Hurdles110 => "110mH",
            EventId::Discus => "DT",
            EventId::PoleVault => "PV",
            EventId::Javelin => "JT",
            EventId::Run1500 => "1500m",
        }
    }

    /// Column name in the canonical results CSV.
    pub fn csv_column(self) -> &'static str {
        match self {
            EventId::Sprint100 => "m100",
            EventId::LongJump => "lj_cm",
            EventId::ShotPut => "sp_m",
            EventId::HighJump => "hj_cm",
            EventId::Run400 => "m400",
            EventId::Hurdles110 => "h110",
            EventId::Discus => "dt_m",
            EventId::PoleVault => "pv_cm",
            EventId::Javelin => "jt_m",
            EventId::Run1500 => "m1500",
        }
    }

    /// Events contested before this one.
    pub fn preceding(self) -> &'static [EventId] {
        &Self::ALL[..self.index()]
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EventId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventId::ALL
            .iter()
            .copied()
            .find(|e| e.label().eq_ignore_ascii_case(s) || e.csv_column().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown event `{s}`"))
    }
}
