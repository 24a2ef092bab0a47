//! Seeded synthetic sensor data over a Hanoi-style network, for tests,
//! benchmarks and demos.
//!
//! Every junction carries a pressure sensor and every pipe a flow sensor
//! (65 sensors in total). Sensors are split into small groups that share a
//! daily operating regime, so readings inside a group are strongly
//! associated while groups are independent of each other. Each sensor
//! reads in its own value band, so no two sensors of one quantity ever
//! report the same level.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use chrono::{TimeDelta, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{MeasurementSeries, Record};
use crate::inp::{parse_inp, write_inp, NetworkModel};
use crate::kg::{Quantity, SensorMap, SensorSpec};

pub const HANOI_INP: &str = include_str!("../data/hanoi.inp");

pub fn hanoi_network() -> NetworkModel {
    parse_inp(HANOI_INP).expect("bundled network parses").model
}

/// `PS_<junction>` pressure sensors and `FS_<pipe>` flow sensors.
pub fn hanoi_sensors(model: &NetworkModel) -> SensorMap {
    let mut entries = Vec::new();
    for j in &model.junctions {
        entries.push(SensorSpec {
            sensor_id: format!("PS_{}", j.id),
            sensor_class: "WaterPressureSensor".into(),
            host_component: j.id.clone(),
            quantity: Quantity::Pressure,
        });
    }
    for p in &model.pipes {
        entries.push(SensorSpec {
            sensor_id: format!("FS_{}", p.id),
            sensor_class: "FlowSensor".into(),
            host_component: p.id.clone(),
            quantity: Quantity::Flow,
        });
    }
    SensorMap::new(entries).expect("generated ids are unique")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub days: u32,
    pub samples_per_day: u32,
    pub seed: u64,
    /// Sensors sharing one daily regime.
    pub group_size: usize,
    /// Probability of each regime on a given day.
    pub regimes: [f64; 3],
    /// Chance that a sensor drifts one level off its group on a given day.
    pub drift: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            days: 365,
            samples_per_day: 24,
            seed: 7,
            group_size: 3,
            regimes: [0.42, 0.33, 0.25],
            drift: 0.02,
        }
    }
}

const BAND: f64 = 20.0;
const REGIME_STEP: f64 = 4.0;

/// Readings starting 2017-01-01 for every sensor in `sensors`.
pub fn measurements(sensors: &SensorMap, config: &SyntheticConfig) -> MeasurementSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap();
    let step = TimeDelta::seconds(86_400 / config.samples_per_day.max(1) as i64);
    let groups = sensors.len().div_ceil(config.group_size.max(1));
    let ids: Vec<Arc<str>> = sensors.entries.iter().map(|e| Arc::from(e.sensor_id.as_str())).collect();

    let mut records = Vec::with_capacity(ids.len() * (config.days * config.samples_per_day) as usize);
    for day in 0..config.days {
        let regimes: Vec<usize> = (0..groups)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < config.regimes[0] {
                    0
                } else if u < config.regimes[0] + config.regimes[1] {
                    1
                } else {
                    2
                }
            })
            .collect();
        let day_start = start + TimeDelta::days(day as i64);
        for (i, id) in ids.iter().enumerate() {
            let drift = if rng.gen::<f64>() < config.drift { 1.0 } else { 0.0 };
            let level = 10.0 + BAND * i as f64 + REGIME_STEP * regimes[i / config.group_size.max(1)] as f64 + drift;
            for s in 0..config.samples_per_day {
                let noise: f64 = rng.gen_range(-0.3..0.3);
                records.push(Record {
                    timestamp: day_start + step * s as i32,
                    sensor_id: id.clone(),
                    value: level + noise,
                });
            }
        }
    }
    MeasurementSeries::new(records, sensors).expect("sensors come from the map")
}

/// Writes `sensors` as CSV with the standard header.
pub fn write_sensor_csv<W: Write>(sensors: &SensorMap, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sensor_id", "sensor_class", "host_component", "quantity"])?;
    for e in &sensors.entries {
        w.write_record([&e.sensor_id, &e.sensor_class, &e.host_component, &e.quantity.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes readings as `timestamp,sensor_id,value` CSV. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_measurement_csv<W: Write>(series: &MeasurementSeries, out: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "timestamp,sensor_id,value")?;
    for r in &series.records {
        writeln!(out, "{},{},{}", r.timestamp.format("%Y-%m-%dT%H:%M:%SZ"), r.sensor_id, r.value)?;
    }
    out.flush()
}

/// Paths of a fixture written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub inp: std::path::PathBuf,
    pub sensors: std::path::PathBuf,
    pub measurements: std::path::PathBuf,
}

/// Writes `network.inp`, `sensors.csv` and `measurements.csv` for the
/// Hanoi network into `dir`.
pub fn write_fixture(dir: &Path, config: &SyntheticConfig) -> std::io::Result<FixturePaths> {
    let model = hanoi_network();
    let sensors = hanoi_sensors(&model);
    let series = measurements(&sensors, config);
    let paths = FixturePaths {
        inp: dir.join("network.inp"),
        sensors: dir.join("sensors.csv"),
        measurements: dir.join("measurements.csv"),
    };
    std::fs::write(&paths.inp, write_inp(&model))?;
    write_sensor_csv(&sensors, std::fs::File::create(&paths.sensors)?).map_err(std::io::Error::other)?;
    write_measurement_csv(&series, std::fs::File::create(&paths.measurements)?)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanoi_counts() {
        let model = hanoi_network();
        assert_eq!(model.counts(), (31, 1, 0, 34, 0, 0));
        assert_eq!(hanoi_sensors(&model).len(), 65);
    }

    #[test]
    fn seeded_and_sized() {
        let model = hanoi_network();
        let sensors = hanoi_sensors(&model);
        let cfg = SyntheticConfig {
            days: 3,
            samples_per_day: 4,
            ..Default::default()
        };
        let a = measurements(&sensors, &cfg);
        let b = measurements(&sensors, &cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 65 * 3 * 4);
    }

    #[test]
    fn fixture_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SyntheticConfig {
            days: 2,
            samples_per_day: 3,
            ..Default::default()
        };
        let paths = write_fixture(dir.path(), &cfg).unwrap();
        let model = parse_inp(&std::fs::read_to_string(&paths.inp).unwrap()).unwrap().model;
        assert_eq!(model, hanoi_network());
        let sensors = SensorMap::load(&paths.sensors).unwrap();
        assert_eq!(sensors, hanoi_sensors(&model));
        let loaded = crate::ingest::load_measurements(&paths.measurements, &sensors).unwrap();
        assert_eq!(loaded, measurements(&sensors, &cfg));
    }
}
