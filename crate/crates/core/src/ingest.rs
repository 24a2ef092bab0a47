//! Measurement loading and window discretization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeDelta, Utc};
use thiserror::Error;

use crate::item::{Item, Label, Level, Transaction, TransactionDb};
use crate::kg::{Quantity, SensorMap};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: unknown sensor '{sensor}'")]
    UnknownSensor { sensor: String, line: u64 },
    #[error("{source_name} line {line}: {message}")]
    Row {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("no measurements to discretize")]
    Empty,
    #[error("invalid discretization scheme: {0}")]
    Scheme(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub timestamp: DateTime<Utc>,
    pub sensor_id: Label,
    pub value: f64,
}

/// Raw readings, sorted by sensor then time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementSeries {
    pub records: Vec<Record>,
    quantities: BTreeMap<Label, Quantity>,
}

impl MeasurementSeries {
    /// Builds a series from arbitrary records; every sensor must be in the
    /// map.
    pub fn new(mut records: Vec<Record>, sensors: &SensorMap) -> Result<MeasurementSeries, IngestError> {
        let mut quantities = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if !quantities.contains_key(&r.sensor_id) {
                let spec = sensors.get(&r.sensor_id).ok_or_else(|| IngestError::UnknownSensor {
                    sensor: r.sensor_id.to_string(),
                    line: i as u64 + 1,
                })?;
                quantities.insert(r.sensor_id.clone(), spec.quantity);
            }
        }
        records.sort_by(|a, b| (&a.sensor_id, a.timestamp).cmp(&(&b.sensor_id, b.timestamp)));
        Ok(MeasurementSeries { records, quantities })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn quantity(&self, sensor: &str) -> Option<Quantity> {
        self.quantities.get(sensor).copied()
    }

    pub fn sensors(&self) -> impl Iterator<Item = &Label> {
        self.quantities.keys()
    }

    /// Drops every sensor whose quantity is not listed.
    pub fn retain_quantities(&mut self, keep: &[Quantity]) {
        self.quantities.retain(|_, q| keep.contains(q));
        let quantities = &self.quantities;
        self.records.retain(|r| quantities.contains_key(&r.sensor_id));
    }
}

pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc())
}

struct Interner(HashMap<String, Label>);

impl Interner {
    fn get(&mut self, s: &str) -> Label {
        if let Some(l) = self.0.get(s) {
            return l.clone();
        }
        let l: Label = Arc::from(s);
        self.0.insert(s.to_string(), l.clone());
        l
    }
}

/// Reads measurement CSV (`timestamp,sensor_id,value`).
pub fn read_measurements<R: Read>(
    reader: R,
    sensors: &SensorMap,
    source_name: &str,
) -> Result<MeasurementSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "sensor_id", "value"] {
        return Err(IngestError::Row {
            source_name: source_name.to_string(),
            line: 1,
            message: "expected header 'timestamp,sensor_id,value'".into(),
        });
    }
    let mut interner = Interner(HashMap::new());
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| IngestError::Row {
            source_name: source_name.to_string(),
            line,
            message,
        };
        if row.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", row.len())));
        }
        let timestamp = parse_timestamp(&row[0]).ok_or_else(|| bad(format!("bad timestamp '{}'", &row[0])))?;
        let sensor = &row[1];
        if sensors.get(sensor).is_none() {
            return Err(IngestError::UnknownSensor {
                sensor: sensor.to_string(),
                line,
            });
        }
        let value: f64 = row[2]
            .parse()
            .map_err(|_| bad(format!("bad value '{}'", &row[2])))?;
        if !value.is_finite() {
            return Err(bad(format!("value '{}' is not finite", &row[2])));
        }
        records.push(Record {
            timestamp,
            sensor_id: interner.get(sensor),
            value,
        });
    }
    MeasurementSeries::new(records, sensors)
}

pub fn load_measurements(path: &Path, sensors: &SensorMap) -> Result<MeasurementSeries, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_measurements(std::io::BufReader::new(file), sensors, &path.display().to_string())
}

/// Loads one file per sensor, LeakDB style. The manifest is CSV with header
/// `sensor_id,file` (paths relative to the manifest); each data file has a
/// header row followed by `timestamp,value` rows.
pub fn load_manifest(manifest: &Path, sensors: &SensorMap) -> Result<MeasurementSeries, IngestError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| IngestError::Io { path, source }
    };
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(std::fs::File::open(manifest).map_err(io_err(manifest))?);
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            return Err(IngestError::Row {
                source_name: manifest.display().to_string(),
                line,
                message: "expected 'sensor_id,file'".into(),
            });
        }
        let sensor = &row[0];
        if sensors.get(sensor).is_none() {
            return Err(IngestError::UnknownSensor {
                sensor: sensor.to_string(),
                line,
            });
        }
        let label: Label = Arc::from(sensor);
        let path = base.join(&row[1]);
        let name = path.display().to_string();
        let mut data = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(std::fs::File::open(&path).map_err(io_err(&path))?);
        for rec in data.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| IngestError::Row {
                source_name: name.clone(),
                line,
                message,
            };
            if rec.len() < 2 {
                return Err(bad("expected 'timestamp,value'".into()));
            }
            let timestamp = parse_timestamp(&rec[0]).ok_or_else(|| bad(format!("bad timestamp '{}'", &rec[0])))?;
            let value: f64 = rec[1].parse().map_err(|_| bad(format!("bad value '{}'", &rec[1])))?;
            if !value.is_finite() {
                return Err(bad(format!("value '{}' is not finite", &rec[1])));
            }
            records.push(Record {
                timestamp,
                sensor_id: label.clone(),
                value,
            });
        }
    }
    MeasurementSeries::new(records, sensors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationScheme {
    pub window: TimeDelta,
    /// Decimal places kept after averaging.
    pub precision: u32,
    /// Equal-width bins used for graph attribute values.
    pub attribute_bins: u32,
}

impl Default for DiscretizationScheme {
    fn default() -> Self {
        DiscretizationScheme {
            window: TimeDelta::hours(24),
            precision: 0,
            attribute_bins: 5,
        }
    }
}

impl DiscretizationScheme {
    /// Window length from a (possibly fractional) number of hours, to the
    /// millisecond.
    pub fn window_hours(hours: f64) -> Result<TimeDelta, IngestError> {
        if !(hours.is_finite() && hours > 0.0 && hours < 1e9) {
            return Err(IngestError::Scheme(format!("window of {hours} hours")));
        }
        let ms = (hours * 3_600_000.0).round() as i64;
        if ms == 0 {
            return Err(IngestError::Scheme(format!("window of {hours} hours rounds to zero")));
        }
        Ok(TimeDelta::milliseconds(ms))
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.window <= TimeDelta::zero() {
            return Err(IngestError::Scheme("window must be positive".into()));
        }
        if self.attribute_bins == 0 {
            return Err(IngestError::Scheme("attribute_bins must be at least 1".into()));
        }
        if self.precision > 12 {
            return Err(IngestError::Scheme("precision above 12 decimal places".into()));
        }
        Ok(())
    }
}

/// One transaction per non-empty window, holding each reporting sensor's
/// rounded mean. Windows start at midnight UTC of the earliest reading.
pub fn discretize(series: &MeasurementSeries, scheme: &DiscretizationScheme) -> Result<TransactionDb, IngestError> {
    scheme.validate()?;
    let first = series
        .records
        .iter()
        .map(|r| r.timestamp)
        .min()
        .ok_or(IngestError::Empty)?;
    let origin = first.date_naive().and_hms_opt(0, 0, 0).unwrap().and_utc();
    let width = scheme.window.num_milliseconds();

    let mut windows: BTreeMap<i64, BTreeMap<&Label, Vec<f64>>> = BTreeMap::new();
    for r in &series.records {
        let idx = (r.timestamp - origin).num_milliseconds().div_euclid(width);
        windows
            .entry(idx)
            .or_default()
            .entry(&r.sensor_id)
            .or_default()
            .push(r.value);
    }

    let transactions = windows
        .into_iter()
        .map(|(idx, sensors)| {
            let items: BTreeSet<Item> = sensors
                .into_iter()
                .map(|(sensor, mut values)| {
                    // Summing in sorted order makes the mean independent of
                    // input order.
                    values.sort_by(f64::total_cmp);
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    Item::Measurement {
                        subject: sensor.clone(),
                        quantity: series.quantities[sensor],
                        level: Level::round(mean, scheme.precision),
                    }
                })
                .collect();
            Transaction {
                window_start: origin + TimeDelta::milliseconds(idx * width),
                items,
            }
        })
        .collect();
    Ok(TransactionDb { transactions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::SensorSpec;

    fn sensors(ids: &[&str]) -> SensorMap {
        SensorMap::new(
            ids.iter()
                .map(|id| SensorSpec {
                    sensor_id: id.to_string(),
                    sensor_class: "WaterPressureSensor".into(),
                    host_component: "J1".into(),
                    quantity: Quantity::Pressure,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn loads_three_rows() {
        let csv = "timestamp,sensor_id,value\n2017-01-01T00:00:00Z,S1,1.5\n2017-01-01 00:30:00,S1,2\n2017-01-01T01:00:00+00:00,S1,3\n";
        let s = read_measurements(csv.as_bytes(), &sensors(&["S1"]), "mem").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.quantity("S1"), Some(Quantity::Pressure));
    }

    #[test]
    fn unknown_sensor_is_named() {
        let csv = "timestamp,sensor_id,value\n2017-01-01T00:00:00Z,S1,1\n2017-01-01T00:00:00Z,S7,1\n";
        match read_measurements(csv.as_bytes(), &sensors(&["S1"]), "mem") {
            Err(IngestError::UnknownSensor { sensor, line }) => {
                assert_eq!(sensor, "S7");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_row_reports_line() {
        let csv = "timestamp,sensor_id,value\n2017-01-01T00:00:00Z,S1,1\nnot-a-time,S1,1\n";
        let err = read_measurements(csv.as_bytes(), &sensors(&["S1"]), "mem").unwrap_err();
        assert!(matches!(err, IngestError::Row { line: 3, .. }), "{err}");
        let csv = "timestamp,sensor_id,value\n2017-01-01T00:00:00Z,S1,abc\n";
        assert!(read_measurements(csv.as_bytes(), &sensors(&["S1"]), "mem").is_err());
    }

    #[test]
    fn out_of_order_rows_are_sorted_stably() {
        let csv = "timestamp,sensor_id,value\n\
            2017-01-02T00:00:00Z,S2,4\n\
            2017-01-01T00:00:00Z,S1,1\n\
            2017-01-01T00:00:00Z,S2,2\n\
            2017-01-01T00:00:00Z,S1,9\n\
            2016-12-31T23:00:00Z,S1,0\n";
        let s = read_measurements(csv.as_bytes(), &sensors(&["S1", "S2"]), "mem").unwrap();
        let got: Vec<(String, f64)> = s.records.iter().map(|r| (r.sensor_id.to_string(), r.value)).collect();
        // independent: stable sort of the raw rows by (sensor, time)
        let mut raw: Vec<(String, String, f64)> = vec![
            ("S2".into(), "2017-01-02T00".into(), 4.0),
            ("S1".into(), "2017-01-01T00".into(), 1.0),
            ("S2".into(), "2017-01-01T00".into(), 2.0),
            ("S1".into(), "2017-01-01T00".into(), 9.0),
            ("S1".into(), "2016-12-31T23".into(), 0.0),
        ];
        raw.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        let expected: Vec<(String, f64)> = raw.into_iter().map(|(s, _, v)| (s, v)).collect();
        assert_eq!(got, expected);
    }

    fn rec(ts: &str, sensor: &str, value: f64) -> Record {
        Record {
            timestamp: parse_timestamp(ts).unwrap(),
            sensor_id: sensor.into(),
            value,
        }
    }

    #[test]
    fn daily_mean_rounds_to_level() {
        let s = MeasurementSeries::new(
            vec![rec("2017-01-01T03:00:00Z", "S1", 42.6), rec("2017-01-01T20:00:00Z", "S1", 43.4)],
            &sensors(&["S1"]),
        )
        .unwrap();
        let db = discretize(&s, &DiscretizationScheme::default()).unwrap();
        assert_eq!(db.len(), 1);
        let items: Vec<String> = db.transactions[0].items.iter().map(ToString::to_string).collect();
        assert_eq!(items, vec!["m(S1,pressure,43)"]);
        assert_eq!(db.transactions[0].window_start, parse_timestamp("2017-01-01").unwrap());
    }

    #[test]
    fn silent_sensor_contributes_nothing() {
        let s = MeasurementSeries::new(
            vec![
                rec("2017-01-01T01:00:00Z", "S1", 1.0),
                rec("2017-01-01T01:00:00Z", "S2", 2.0),
                rec("2017-01-02T01:00:00Z", "S1", 1.0),
            ],
            &sensors(&["S1", "S2"]),
        )
        .unwrap();
        let db = discretize(&s, &DiscretizationScheme::default()).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.transactions[0].items.len(), 2);
        assert_eq!(db.transactions[1].items.len(), 1);
    }

    #[test]
    fn empty_windows_are_dropped_and_aligned_to_midnight() {
        let s = MeasurementSeries::new(
            vec![rec("2017-01-01T18:00:00Z", "S1", 1.0), rec("2017-01-05T01:00:00Z", "S1", 1.0)],
            &sensors(&["S1"]),
        )
        .unwrap();
        let db = discretize(&s, &DiscretizationScheme::default()).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.transactions[1].window_start, parse_timestamp("2017-01-05").unwrap());
    }

    #[test]
    fn empty_series_is_an_error() {
        let s = MeasurementSeries::default();
        assert!(matches!(discretize(&s, &DiscretizationScheme::default()), Err(IngestError::Empty)));
    }

    #[test]
    fn scheme_validation() {
        let mut scheme = DiscretizationScheme::default();
        scheme.window = TimeDelta::zero();
        assert!(scheme.validate().is_err());
        let scheme = DiscretizationScheme {
            attribute_bins: 0,
            ..Default::default()
        };
        assert!(scheme.validate().is_err());
    }

    #[test]
    fn hourly_windows_and_precision() {
        let s = MeasurementSeries::new(
            vec![
                rec("2017-01-01T00:10:00Z", "S1", 1.04),
                rec("2017-01-01T00:50:00Z", "S1", 1.07),
                rec("2017-01-01T01:10:00Z", "S1", 2.0),
            ],
            &sensors(&["S1"]),
        )
        .unwrap();
        let scheme = DiscretizationScheme {
            window: TimeDelta::hours(1),
            precision: 2,
            ..Default::default()
        };
        let db = discretize(&s, &scheme).unwrap();
        let first: Vec<String> = db.transactions[0].items.iter().map(ToString::to_string).collect();
        assert_eq!(first, vec!["m(S1,pressure,1.06)"]);
        assert_eq!(db.len(), 2);
    }

    #[test]
    fn manifest_loader() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest.csv"), "sensor_id,file\nS1,Node_1.csv\nS2,Node_2.csv\n").unwrap();
        std::fs::write(dir.path().join("Node_1.csv"), "Timestamp,Value\n2017-01-01 00:00:00,1.5\n2017-01-01 00:30:00,2.5\n").unwrap();
        std::fs::write(dir.path().join("Node_2.csv"), "Timestamp,Value\n2017-01-01 00:00:00,7\n").unwrap();
        let s = load_manifest(&dir.path().join("manifest.csv"), &sensors(&["S1", "S2"])).unwrap();
        assert_eq!(s.len(), 3);
        let db = discretize(&s, &DiscretizationScheme::default()).unwrap();
        let items: Vec<String> = db.transactions[0].items.iter().map(ToString::to_string).collect();
        assert_eq!(items, vec!["m(S1,pressure,2)", "m(S2,pressure,7)"]);
    }

    #[test]
    fn retain_quantities_filters_records() {
        let mut map = sensors(&["S1"]);
        map.entries.push(SensorSpec {
            sensor_id: "F1".into(),
            sensor_class: "FlowSensor".into(),
            host_component: "P1".into(),
            quantity: Quantity::Flow,
        });
        let mut s = MeasurementSeries::new(
            vec![rec("2017-01-01T00:00:00Z", "S1", 1.0), rec("2017-01-01T00:00:00Z", "F1", 1.0)],
            &map,
        )
        .unwrap();
        s.retain_quantities(&[Quantity::Flow]);
        assert_eq!(s.len(), 1);
        assert_eq!(&*s.records[0].sensor_id, "F1");
    }
}
