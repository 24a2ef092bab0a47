//! End-to-end pipeline behind the `semrl` binary.
//!
//! Every failure is tagged with the stage it came from, and output files
//! are only replaced once all of their content is ready.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use semrl::enrich::mine_rules;
use semrl::ingest::load_manifest;
use semrl::report::{write_csv, write_jsonl};
use semrl::{
    build_kg, check_rules, discretize, load_measurements, parse_inp, ruleset_stats, validate_network,
    DiscretizationScheme, Enricher, MiningLimits, EnrichmentConfig, EnrichmentMode, Item, KnowledgeGraph, MeasurementSeries,
    NetworkModel, Quantity, RuleSet, RuleSetStats, Schema, SensorMap, TransactionDb,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Literal,
    Generalized,
}

impl Mode {
    pub fn enrichment(self) -> Option<EnrichmentMode> {
        match self {
            Mode::Baseline => None,
            Mode::Literal => Some(EnrichmentMode::Literal),
            Mode::Generalized => Some(EnrichmentMode::Generalized),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "literal" => Ok(Mode::Literal),
            "generalized" => Ok(Mode::Generalized),
            _ => Err(format!("unknown mode '{s}' (expected literal, generalized or baseline)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Literal => "literal",
            Mode::Generalized => "generalized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{s}' (expected jsonl or csv)")),
        }
    }
}

/// Inputs and parameters of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub inp: PathBuf,
    pub sensors: PathBuf,
    /// Either `timestamp,sensor_id,value` CSV or a `sensor_id,file`
    /// manifest pointing at one file per sensor.
    pub measurements: PathBuf,
    /// Extra or replacement classes on top of the built-in schema.
    pub schema: Option<PathBuf>,
    pub min_support: f64,
    pub min_confidence: f64,
    pub k_neighbors: usize,
    pub mode: Mode,
    pub window_hours: f64,
    pub precision: u32,
    pub attribute_bins: u32,
    pub include_attributes: bool,
    /// Empty keeps every quantity.
    pub quantities: Vec<Quantity>,
    pub format: Format,
    /// Mining stops with an error past these counts.
    pub max_itemsets: usize,
    pub max_rules: usize,
}

pub const DEFAULT_MAX_ITEMSETS: usize = 5_000_000;
pub const DEFAULT_MAX_RULES: usize = 5_000_000;

impl RunConfig {
    pub fn new(inp: impl Into<PathBuf>, sensors: impl Into<PathBuf>, measurements: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            inp: inp.into(),
            sensors: sensors.into(),
            measurements: measurements.into(),
            schema: None,
            min_support: 0.2,
            min_confidence: 0.9,
            k_neighbors: 1,
            mode: Mode::Generalized,
            window_hours: 24.0,
            precision: 0,
            attribute_bins: 5,
            include_attributes: false,
            quantities: Vec::new(),
            format: Format::Jsonl,
            max_itemsets: DEFAULT_MAX_ITEMSETS,
            max_rules: DEFAULT_MAX_RULES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_ratio("--support", self.min_support)?;
        check_ratio("--confidence", self.min_confidence)?;
        if !(self.window_hours.is_finite() && self.window_hours > 0.0) {
            bail!("--window-hours must be positive, got {}", self.window_hours);
        }
        if self.attribute_bins == 0 {
            bail!("--attribute-bins must be at least 1");
        }
        let mut files = vec![("--inp", &self.inp), ("--sensors", &self.sensors), ("--measurements", &self.measurements)];
        if let Some(s) = &self.schema {
            files.push(("--schema", s));
        }
        for (flag, path) in files {
            if !path.is_file() {
                bail!("{flag}: no such file '{}'", path.display());
            }
        }
        Ok(())
    }

    fn scheme(&self) -> Result<DiscretizationScheme> {
        Ok(DiscretizationScheme {
            window: stage("config", DiscretizationScheme::window_hours(self.window_hours))?,
            precision: self.precision,
            attribute_bins: self.attribute_bins,
        })
    }

    pub fn limits(&self) -> MiningLimits {
        MiningLimits {
            max_itemsets: self.max_itemsets,
            max_rules: self.max_rules,
        }
    }

    fn enrichment(&self) -> Option<EnrichmentConfig> {
        self.mode.enrichment().map(|mode| EnrichmentConfig {
            k_neighbors: self.k_neighbors,
            mode,
            include_attributes: self.include_attributes,
            attribute_bins: self.attribute_bins,
        })
    }
}

pub fn check_ratio(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        bail!("{name} must lie in (0, 1], got {v}")
    }
}

/// Wraps an error with the name of the pipeline stage that raised it.
fn stage<T, E: fmt::Display>(name: &str, r: Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow!("[{name}] {e}"))
}

/// Parsed and validated network model.
pub fn load_network(path: &Path) -> Result<NetworkModel> {
    let text = stage("parse", std::fs::read_to_string(path).with_context(|| path.display().to_string()))?;
    let parsed = stage("parse", parse_inp(&text))?;
    let report = validate_network(&parsed.model);
    if !report.is_ok() {
        bail!("[parse] {} is not a valid network:\n{report}", path.display());
    }
    Ok(parsed.model)
}

fn load_series(path: &Path, sensors: &SensorMap) -> Result<MeasurementSeries> {
    let head = std::fs::File::open(path)
        .and_then(|f| {
            let mut line = String::new();
            std::io::BufRead::read_line(&mut std::io::BufReader::new(f), &mut line)?;
            Ok(line.trim().replace(' ', ""))
        })
        .with_context(|| path.display().to_string());
    let head = stage("load", head)?;
    if head == "sensor_id,file" {
        stage("load", load_manifest(path, sensors))
    } else {
        stage("load", load_measurements(path, sensors))
    }
}

/// Everything the miner needs: the graph, the plain transactions and, for
/// semantic modes, their enriched counterparts.
#[derive(Debug)]
pub struct Prepared {
    pub kg: KnowledgeGraph,
    pub baseline: TransactionDb,
    pub enriched: Option<TransactionDb>,
}

impl Prepared {
    /// The database the configured mode mines from.
    pub fn db(&self) -> &TransactionDb {
        self.enriched.as_ref().unwrap_or(&self.baseline)
    }
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    stage("config", config.validate())?;
    let model = load_network(&config.inp)?;
    let mut schema = Schema::epanet();
    if let Some(path) = &config.schema {
        schema = schema.overridden_by(&stage("schema", Schema::load(path))?);
    }
    let sensors = stage("sensors", SensorMap::load(&config.sensors))?;
    let kg = stage("graph", build_kg(&model, &sensors, &schema))?;
    let mut series = load_series(&config.measurements, &sensors)?;
    if !config.quantities.is_empty() {
        series.retain_quantities(&config.quantities);
    }
    let baseline = stage("discretize", discretize(&series, &config.scheme()?))?;
    let enriched = match config.enrichment() {
        Some(cfg) => Some(stage("enrich", Enricher::new(&kg, cfg).enrich_db(&baseline))?),
        None => None,
    };
    Ok(Prepared { kg, baseline, enriched })
}

pub fn mine(
    prepared: &Prepared,
    db: &TransactionDb,
    min_support: f64,
    min_confidence: f64,
    limits: MiningLimits,
) -> Result<RuleSet<Item>> {
    stage("mine", mine_rules(db, &prepared.kg, min_support, min_confidence, limits))
}

/// Parses, enriches and mines according to `config`.
pub fn run_pipeline(config: &RunConfig) -> Result<(RuleSet<Item>, RuleSetStats)> {
    let prepared = prepare(config)?;
    let rules = mine(&prepared, prepared.db(), config.min_support, config.min_confidence, config.limits())?;
    let stats = ruleset_stats(&rules);
    Ok((rules, stats))
}

pub fn render_rules(rules: &RuleSet<Item>, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Jsonl => stage("write", write_jsonl(rules, &mut buf))?,
        Format::Csv => stage("write", write_csv(rules, &mut buf))?,
    }
    Ok(buf)
}

/// Sidecar written next to a rule file.
#[derive(Debug, Serialize)]
pub struct StatsArtifact<'a> {
    pub config: &'a RunConfig,
    pub transactions: usize,
    pub stats: &'a RuleSetStats,
}

/// `<out>.stats.json`
pub fn stats_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".stats.json");
    out.with_file_name(name)
}

/// Writes all files or none: each goes to a temporary file in its target
/// directory first and is renamed into place once every one is written.
pub fn write_atomic(files: &[(&Path, &[u8])]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, content) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = stage("write", tempfile::NamedTempFile::new_in(dir).with_context(|| dir.display().to_string()))?;
        stage("write", tmp.write_all(content).and_then(|_| tmp.flush()))?;
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        stage("write", tmp.persist(path).map_err(|e| e.error))?;
    }
    Ok(())
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub support: f64,
    pub confidence: f64,
    pub semantic_rules: usize,
    pub baseline_rules: usize,
    pub min_se: Option<f64>,
    pub max_se: Option<f64>,
}

/// Mines at every support level, reusing one prepared database.
pub fn sweep(config: &RunConfig, supports: &[f64]) -> Result<Vec<SweepRow>> {
    for &s in supports {
        stage("config", check_ratio("--support", s))?;
    }
    let prepared = prepare(config)?;
    supports
        .iter()
        .map(|&s| {
            let baseline = mine(&prepared, &prepared.baseline, s, config.min_confidence, config.limits())?;
            let semantic = match &prepared.enriched {
                Some(db) => mine(&prepared, db, s, config.min_confidence, config.limits())?,
                None => baseline.clone(),
            };
            let stats = ruleset_stats(&semantic);
            Ok(SweepRow {
                support: s,
                confidence: config.min_confidence,
                semantic_rules: semantic.len(),
                baseline_rules: baseline.len(),
                min_se: stats.min_se,
                max_se: stats.max_se,
            })
        })
        .collect()
}

pub fn render_sweep(rows: &[SweepRow], format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Jsonl => {
            for row in rows {
                serde_json::to_writer(&mut buf, row)?;
                buf.push(b'\n');
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(buf)
}

/// Human-readable sweep table.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let se = |v: Option<f64>| v.map(semrl::quality::two_decimals).unwrap_or_else(|| "-".into());
    let mut out = format!("{:>8} {:>10} {:>9} {:>9} {:>7} {:>7}\n", "support", "confidence", "semantic", "baseline", "min_se", "max_se");
    for r in rows {
        out.push_str(&format!(
            "{:>8} {:>10} {:>9} {:>9} {:>7} {:>7}\n",
            r.support,
            r.confidence,
            r.semantic_rules,
            r.baseline_rules,
            se(r.min_se),
            se(r.max_se)
        ));
    }
    out
}

/// Mines the baseline and the configured semantic mode at the same
/// thresholds and reports them side by side.
pub fn compare_modes(config: &RunConfig) -> Result<semrl::Comparison> {
    let prepared = prepare(config)?;
    let baseline = mine(&prepared, &prepared.baseline, config.min_support, config.min_confidence, config.limits())?;
    let semantic = mine(&prepared, prepared.db(), config.min_support, config.min_confidence, config.limits())?;
    stage("compare", semrl::compare(&baseline, &semantic))
}

#[derive(Debug, Deserialize)]
struct RuleLine {
    antecedent: Vec<String>,
    consequent: Vec<String>,
    #[serde(default)]
    support: f64,
    #[serde(default)]
    confidence: f64,
}

/// Reads a JSONL rule file; items stay in their string form.
pub fn read_rules(path: &Path) -> Result<RuleSet<String>> {
    let text = stage("rules", std::fs::read_to_string(path).with_context(|| path.display().to_string()))?;
    let mut rules = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: RuleLine = stage("rules", serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), n + 1)))?;
        rules.push(semrl::AssociationRule {
            antecedent: r.antecedent,
            consequent: r.consequent,
            support_count: 0,
            antecedent_count: 0,
            support: r.support,
            confidence: r.confidence,
            semantic_expressivity: None,
        });
    }
    Ok(RuleSet {
        rules,
        transactions: 0,
        min_support: 0.0,
        min_confidence: 0.0,
    })
}

/// One line of a `check` report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub antecedent_count: u64,
    pub violations: u64,
    pub rate: f64,
}

/// Counts, per rule, the windows of the prepared database where the rule
/// fires but does not hold.
pub fn check(config: &RunConfig, rules: &RuleSet<String>) -> Result<Vec<CheckLine>> {
    let prepared = prepare(config)?;
    let baskets: Vec<BTreeSet<String>> = prepared
        .db()
        .iter()
        .map(|t| t.items.iter().map(ToString::to_string).collect())
        .collect();
    Ok(check_rules(rules, &baskets)
        .into_iter()
        .map(|v| {
            let rule = &rules.rules[v.rule];
            CheckLine {
                antecedent: rule.antecedent.clone(),
                consequent: rule.consequent.clone(),
                antecedent_count: v.antecedent_count,
                violations: v.violations,
                rate: v.rate(),
            }
        })
        .collect())
}
