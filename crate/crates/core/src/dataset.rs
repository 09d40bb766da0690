//! Decathlon results: loading, athlete filtering, standardization and
//! train/test splits.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::events::{EventId, N_EVENTS};
use crate::rng::{self, Purpose};
use crate::scoring::DECATHLON_TABLE;
use crate::{Error, Result};

/// Allowed slack between the file's total and the rescored marks.
pub const POINTS_SLACK: i64 = 10;

const AGE_RANGE: (f64, f64) = (14.0, 50.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecathlonRecord {
    pub athlete_id: String,
    pub date: NaiveDate,
    pub age: f64,
    /// Raw marks in competition order (seconds, centimeters or meters).
    pub marks: [f64; N_EVENTS],
    pub total_points: i64,
}

impl DecathlonRecord {
    pub fn rescored(&self) -> u32 {
        DECATHLON_TABLE.total_or_zero(&self.marks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reject {
    /// 1-based line number in the file (header is line 1).
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub records: Vec<DecathlonRecord>,
    pub rejects: Vec<Reject>,
    /// Records whose stated total disagrees with the rescored marks by more
    /// than [`POINTS_SLACK`]; kept but reported.
    pub flagged: Vec<Reject>,
}

const REQUIRED: [&str; 3] = ["athlete_id", "date", "points"];

/// Parse a results file in the canonical CSV layout.
pub fn load(path: impl AsRef<Path>) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_reader(file)
}

pub fn load_reader<R: Read>(reader: R) -> Result<LoadReport> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);

    let mut missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|c| column(c).is_none())
        .collect();
    missing.extend(
        EventId::ALL
            .iter()
            .map(|e| e.csv_column())
            .filter(|c| column(c).is_none()),
    );
    if column("age").is_none() && column("birth_date").is_none() {
        missing.push("age|birth_date");
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!("missing columns: {}", missing.join(", "))));
    }
    let idx_id = column("athlete_id").unwrap();
    let idx_date = column("date").unwrap();
    let idx_points = column("points").unwrap();
    let idx_age = column("age");
    let idx_birth = column("birth_date");
    let idx_marks: Vec<usize> = EventId::ALL
        .iter()
        .map(|e| column(e.csv_column()).unwrap())
        .collect();

    let mut report = LoadReport::default();
    for (row, result) in csv.records().enumerate() {
        let line = row + 2;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                report.rejects.push(Reject {
                    line,
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        let field = |i: usize| record.get(i).filter(|s| !s.is_empty());
        let parsed = (|| -> std::result::Result<DecathlonRecord, String> {
            let mut marks = [0.0; N_EVENTS];
            let mut incomplete = Vec::new();
            for (slot, (&i, event)) in marks.iter_mut().zip(idx_marks.iter().zip(EventId::ALL)) {
                match field(i) {
                    None => incomplete.push(event.label()),
                    Some(text) => {
                        let v: f64 = text
                            .parse()
                            .map_err(|_| format!("unparseable {}: `{text}`", event.csv_column()))?;
                        if !v.is_finite() || v <= 0.0 {
                            return Err(format!("invalid {}: {v}", event.csv_column()));
                        }
                        *slot = v;
                    }
                }
            }
            if !incomplete.is_empty() {
                return Err(format!("incomplete: missing {}", incomplete.join(", ")));
            }
            let athlete_id = field(idx_id).ok_or("missing athlete_id")?.to_string();
            let date = parse_date(field(idx_date).ok_or("missing date")?)?;
            let birth = idx_birth.and_then(field).map(parse_date).transpose()?;
            let age = match (birth, idx_age.and_then(field)) {
                (Some(b), _) => decimal_age(b, date),
                (None, Some(text)) => text
                    .parse::<f64>()
                    .map_err(|_| format!("unparseable age: `{text}`"))?,
                (None, None) => return Err("missing age and birth_date".into()),
            };
            if !(age > AGE_RANGE.0 && age < AGE_RANGE.1) {
                return Err(format!("age {age:.2} outside ({}, {})", AGE_RANGE.0, AGE_RANGE.1));
            }
            let points_text = field(idx_points).ok_or("missing points")?;
            let total_points = points_text
                .parse::<f64>()
                .ok()
                .filter(|p| p.is_finite() && p.fract() == 0.0)
                .ok_or_else(|| format!("unparseable points: `{points_text}`"))?
                as i64;
            Ok(DecathlonRecord {
                athlete_id,
                date,
                age,
                marks,
                total_points,
            })
        })();
        match parsed {
            Ok(rec) => {
                let diff = rec.total_points - i64::from(rec.rescored());
                if diff.abs() > POINTS_SLACK {
                    report.flagged.push(Reject {
                        line,
                        reason: format!(
                            "stated total {} differs from rescored {} by {diff}",
                            rec.total_points,
                            rec.rescored()
                        ),
                    });
                }
                report.records.push(rec);
            }
            Err(reason) => report.rejects.push(Reject { line, reason }),
        }
    }
    Ok(report)
}

fn parse_date(text: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| format!("unparseable date: `{text}`"))
}

/// Age in years, using 365.25-day years.
pub fn decimal_age(birth: NaiveDate, on: NaiveDate) -> f64 {
    (on - birth).num_days() as f64 / 365.25
}

/// Write records in the canonical layout (age column, no birth dates).
pub fn write_csv<W: std::io::Write>(records: &[DecathlonRecord], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["athlete_id", "date", "age", "birth_date"];
    header.extend(EventId::ALL.iter().map(|e| e.csv_column()));
    header.push("points");
    out.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.athlete_id.clone(),
            r.date.format("%Y-%m-%d").to_string(),
            format!("{}", r.age),
            String::new(),
        ];
        row.extend(r.marks.iter().map(|m| format!("{m}")));
        row.push(r.total_points.to_string());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_points: i64,
    pub min_count: usize,
    /// Re-apply the upstream era floors (7000 through 2008, 6600 in 2009,
    /// 6400 afterwards) before counting.
    pub apply_year_floors: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_points: 6400,
            min_count: 4,
            apply_year_floors: false,
        }
    }
}

fn year_floor(year: i32) -> i64 {
    match year {
        ..=2008 => 7000,
        2009 => 6600,
        _ => 6400,
    }
}

/// Keep every record of athletes with at least `min_count` totals of
/// `min_points` or more.
pub fn filter_athletes(records: &[DecathlonRecord], config: &FilterConfig) -> Vec<DecathlonRecord> {
    let eligible = |r: &&DecathlonRecord| {
        !config.apply_year_floors || r.total_points >= year_floor(r.date.year())
    };
    let mut qualifying: HashMap<&str, usize> = HashMap::new();
    for r in records.iter().filter(eligible) {
        if r.total_points >= config.min_points {
            *qualifying.entry(r.athlete_id.as_str()).or_default() += 1;
        }
    }
    records
        .iter()
        .filter(eligible)
        .filter(|r| qualifying.get(r.athlete_id.as_str()).copied().unwrap_or(0) >= config.min_count)
        .cloned()
        .collect()
}

/// Affine map `x ↦ (x − mean) / sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

impl ColumnScale {
    pub const IDENTITY: ColumnScale = ColumnScale { mean: 0.0, sd: 1.0 };

    /// Mean and n−1 standard deviation of a column.
    pub fn fit(column: &str, values: &[f64]) -> Result<ColumnScale> {
        if values.len() < 2 {
            return Err(Error::DegenerateColumn {
                column: column.to_string(),
                sd: f64::NAN,
            });
        }
        let mean = crate::stats::mean(values);
        let sd = crate::stats::sd(values);
        if !(sd > 1e-12 * mean.abs().max(1.0)) || !sd.is_finite() {
            return Err(Error::DegenerateColumn {
                column: column.to_string(),
                sd,
            });
        }
        Ok(ColumnScale { mean, sd })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        self.mean + self.sd * z
    }
}

/// Standardization constants for every modelled column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub events: [ColumnScale; N_EVENTS],
    pub points: ColumnScale,
    pub age: ColumnScale,
}

impl Scales {
    pub fn fit(records: &[DecathlonRecord]) -> Result<Scales> {
        let column = |f: &dyn Fn(&DecathlonRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
        let mut events = [ColumnScale::IDENTITY; N_EVENTS];
        for (slot, event) in events.iter_mut().zip(EventId::ALL) {
            *slot = ColumnScale::fit(event.csv_column(), &column(&|r| r.marks[event.index()]))?;
        }
        Ok(Scales {
            events,
            points: ColumnScale::fit("points", &column(&|r| r.total_points as f64))?,
            age: ColumnScale::fit("age", &column(&|r| r.age))?,
        })
    }

    pub fn identity() -> Scales {
        Scales {
            events: [ColumnScale::IDENTITY; N_EVENTS],
            points: ColumnScale::IDENTITY,
            age: ColumnScale::IDENTITY,
        }
    }

    pub fn standardize_marks(&self, marks: &[f64; N_EVENTS]) -> [f64; N_EVENTS] {
        std::array::from_fn(|e| self.events[e].apply(marks[e]))
    }

    pub fn destandardize_marks(&self, y: &[f64; N_EVENTS]) -> [f64; N_EVENTS] {
        std::array::from_fn(|e| self.events[e].invert(y[e]))
    }
}

/// One record in standardized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Index into [`StandardizedDataset::athletes`].
    pub athlete: usize,
    /// Raw age in years.
    pub age: f64,
    pub y: [f64; N_EVENTS],
    pub points: f64,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDataset {
    /// Athlete ids in order of first appearance.
    pub athletes: Vec<String>,
    pub observations: Vec<Observation>,
    pub scales: Scales,
}

impl StandardizedDataset {
    /// Standardize `records` with externally fitted constants.
    pub fn with_scales(records: &[DecathlonRecord], scales: Scales) -> StandardizedDataset {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut athletes = Vec::new();
        let observations = records
            .iter()
            .map(|r| {
                let athlete = *index.entry(r.athlete_id.clone()).or_insert_with(|| {
                    athletes.push(r.athlete_id.clone());
                    athletes.len() - 1
                });
                Observation {
                    athlete,
                    age: r.age,
                    y: scales.standardize_marks(&r.marks),
                    points: scales.points.apply(r.total_points as f64),
                    date: r.date,
                }
            })
            .collect();
        StandardizedDataset {
            athletes,
            observations,
            scales,
        }
    }

    /// Build directly from values already on the model scale.
    pub fn from_standardized(
        athletes: Vec<String>,
        observations: Vec<Observation>,
        scales: Scales,
    ) -> StandardizedDataset {
        StandardizedDataset {
            athletes,
            observations,
            scales,
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn ages(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.age).collect()
    }

    /// Event column on the model scale.
    pub fn column(&self, event: EventId) -> Vec<f64> {
        self.observations.iter().map(|o| o.y[event.index()]).collect()
    }

    pub fn athlete_index(&self, id: &str) -> Option<usize> {
        self.athletes.iter().position(|a| a == id)
    }

    /// Raw records back from the standardized values.
    pub fn destandardize(&self) -> Vec<DecathlonRecord> {
        self.observations
            .iter()
            .map(|o| DecathlonRecord {
                athlete_id: self.athletes[o.athlete].clone(),
                date: o.date,
                age: o.age,
                marks: self.scales.destandardize_marks(&o.y),
                total_points: self.scales.points.invert(o.points).round() as i64,
            })
            .collect()
    }

    pub fn manifest(&self, filter: Option<&FilterConfig>) -> DatasetManifest {
        DatasetManifest {
            filter: filter.cloned(),
            sd_denominator: "n-1".to_string(),
            scales: self.scales.clone(),
            n_records: self.observations.len(),
            n_athletes: self.athletes.len(),
            athletes: self.athletes.clone(),
        }
    }
}

/// Fit standardization constants on `records` and apply them.
pub fn standardize(records: &[DecathlonRecord]) -> Result<StandardizedDataset> {
    let scales = Scales::fit(records)?;
    Ok(StandardizedDataset::with_scales(records, scales))
}

/// Everything needed to reproduce a dataset's preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub filter: Option<FilterConfig>,
    pub sd_denominator: String,
    pub scales: Scales,
    pub n_records: usize,
    pub n_athletes: usize,
    pub athletes: Vec<String>,
}

impl DatasetManifest {
    /// SHA-256 of the manifest's JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        let hash = Sha256::digest(&json);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Ten folds of randomly held-out records.
    General,
    /// Ten splits, each holding out the last decathlon of 10% of athletes.
    Tail,
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "general" => Ok(Protocol::General),
            "tail" => Ok(Protocol::Tail),
            _ => Err(format!("unknown protocol `{s}` (general|tail)")),
        }
    }
}

pub const N_SPLITS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub protocol: Protocol,
    pub seed: u64,
    pub n_records: usize,
    /// Test record indices per split, ascending.
    pub test: Vec<Vec<usize>>,
}

impl SplitPlan {
    pub fn train(&self, split: usize) -> Vec<usize> {
        let mut held = vec![false; self.n_records];
        for &i in &self.test[split] {
            held[i] = true;
        }
        (0..self.n_records).filter(|&i| !held[i]).collect()
    }
}

pub fn make_splits(records: &[DecathlonRecord], protocol: Protocol, seed: u64) -> Result<SplitPlan> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("cannot split an empty dataset".into()));
    }
    let n = records.len();
    let test = match protocol {
        Protocol::General => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(seed, Purpose::Split, 0, 0));
            let mut folds = vec![Vec::new(); N_SPLITS];
            for (k, &i) in order.iter().enumerate() {
                folds[k % N_SPLITS].push(i);
            }
            folds
        }
        Protocol::Tail => {
            // Last record per athlete; ties on date go to the later row.
            let mut last: BTreeMap<&str, usize> = BTreeMap::new();
            for (i, r) in records.iter().enumerate() {
                last.entry(&r.athlete_id)
                    .and_modify(|j| {
                        if records[*j].date <= r.date {
                            *j = i;
                        }
                    })
                    .or_insert(i);
            }
            let finals: Vec<usize> = last.into_values().collect();
            let take = ((finals.len() as f64) * 0.1).round().max(1.0) as usize;
            (0..N_SPLITS)
                .map(|s| {
                    let mut pool = finals.clone();
                    let mut rng = rng::stream(seed, Purpose::Split, 1, s as u64);
                    let (chosen, _) = pool.partial_shuffle(&mut rng, take);
                    chosen.to_vec()
                })
                .collect()
        }
    };
    let test = test
        .into_iter()
        .map(|mut fold| {
            fold.sort_unstable();
            fold
        })
        .collect();
    Ok(SplitPlan {
        protocol,
        seed,
        n_records: n,
        test,
    })
}
