use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use semrl::{build_kg, parse_inp, validate_network, Quantity, Schema, SensorMap};
use semrl_cli::{
    check, compare_modes, read_rules, render_rules, render_sweep, run_pipeline, stats_path, sweep, sweep_table,
    write_atomic, Format, Mode, RunConfig, StatsArtifact, DEFAULT_MAX_ITEMSETS, DEFAULT_MAX_RULES,
};

/// Semantic association rules from water-network sensor data.
#[derive(Parser)]
#[command(name = "semrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine rules at one support level.
    Mine {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.2)]
        support: f64,
        /// Rule file; a `.stats.json` sidecar is written next to it.
        /// Without it, rules go to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rule counts for several support levels, semantic next to baseline.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.3,0.4,0.5")]
        support: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Baseline against the selected mode at one support level.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.2)]
        support: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count the windows in which each rule of a JSONL rule file fails.
    Check {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a network, and optionally a sensor map and schema.
    Validate {
        #[arg(long)]
        inp: PathBuf,
        #[arg(long)]
        sensors: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    inp: PathBuf,
    #[arg(long)]
    sensors: PathBuf,
    /// Readings as `timestamp,sensor_id,value` CSV, or a `sensor_id,file`
    /// manifest.
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    confidence: f64,
    #[arg(long, default_value_t = 1)]
    k_neighbors: usize,
    #[arg(long, default_value = "generalized")]
    mode: Mode,
    #[arg(long, default_value_t = 24.0)]
    window_hours: f64,
    /// Decimal places kept for window means.
    #[arg(long, default_value_t = 0)]
    precision: u32,
    #[arg(long, default_value_t = 5)]
    attribute_bins: u32,
    #[arg(long)]
    include_attributes: bool,
    /// Comma-separated subset of pressure, demand, flow.
    #[arg(long, value_delimiter = ',')]
    quantities: Vec<Quantity>,
    #[arg(long, default_value = "jsonl")]
    format: Format,
    /// Give up once this many frequent itemsets have been found.
    #[arg(long, default_value_t = DEFAULT_MAX_ITEMSETS)]
    max_itemsets: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_RULES)]
    max_rules: usize,
}

impl DataArgs {
    fn config(self, support: f64) -> RunConfig {
        RunConfig {
            inp: self.inp,
            sensors: self.sensors,
            measurements: self.measurements,
            schema: self.schema,
            min_support: support,
            min_confidence: self.confidence,
            k_neighbors: self.k_neighbors,
            mode: self.mode,
            window_hours: self.window_hours,
            precision: self.precision,
            attribute_bins: self.attribute_bins,
            include_attributes: self.include_attributes,
            quantities: self.quantities,
            format: self.format,
            max_itemsets: self.max_itemsets,
            max_rules: self.max_rules,
        }
    }
}

fn emit(out: Option<&Path>, content: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(&[(path, content)]),
        None => Ok(std::io::stdout().lock().write_all(content)?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mine { data, support, out } => {
            let config = data.config(support);
            let (rules, stats) = run_pipeline(&config)?;
            let body = render_rules(&rules, config.format)?;
            match out {
                Some(path) => {
                    let artifact = StatsArtifact {
                        config: &config,
                        transactions: rules.transactions,
                        stats: &stats,
                    };
                    let mut sidecar = serde_json::to_vec_pretty(&artifact)?;
                    sidecar.push(b'\n');
                    write_atomic(&[(&path, &body), (&stats_path(&path), &sidecar)])?;
                    eprintln!("{} rules from {} windows", rules.len(), rules.transactions);
                }
                None => emit(None, &body)?,
            }
        }
        Command::Sweep { data, support, out } => {
            let first = support.first().copied().unwrap_or(1.0);
            let config = data.config(first);
            let rows = sweep(&config, &support)?;
            print!("{}", sweep_table(&rows));
            if let Some(path) = out {
                emit(Some(&path), &render_sweep(&rows, config.format)?)?;
            }
        }
        Command::Compare { data, support, out } => {
            let comparison = compare_modes(&data.config(support))?;
            let mut body = serde_json::to_vec_pretty(&comparison)?;
            body.push(b'\n');
            emit(out.as_deref(), &body)?;
        }
        Command::Check { data, rules, out } => {
            let config = data.config(1.0);
            let rules = read_rules(&rules)?;
            let lines = check(&config, &rules)?;
            let mut body = Vec::new();
            for line in &lines {
                serde_json::to_writer(&mut body, line)?;
                body.push(b'\n');
            }
            let failing = lines.iter().filter(|l| l.violations > 0).count();
            eprintln!("{failing} of {} rules violated at least once", lines.len());
            emit(out.as_deref(), &body)?;
        }
        Command::Validate { inp, sensors, schema } => validate(&inp, sensors.as_deref(), schema.as_deref())?,
    }
    Ok(())
}

fn validate(inp: &Path, sensors: Option<&Path>, schema: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(inp).map_err(|e| anyhow::anyhow!("[parse] {}: {e}", inp.display()))?;
    let parsed = parse_inp(&text).map_err(|e| anyhow::anyhow!("[parse] {e}"))?;
    let report = validate_network(&parsed.model);
    let (j, r, t, p, pu, v) = parsed.model.counts();
    println!("junctions {j}, reservoirs {r}, tanks {t}, pipes {p}, pumps {pu}, valves {v}");
    for w in &parsed.warnings {
        println!("warning: {w}");
    }
    print!("{report}");
    if !report.is_ok() {
        bail!("[validate] {} error(s) in {}", report.errors.len(), inp.display());
    }
    let mut full = Schema::epanet();
    if let Some(path) = schema {
        full = full.overridden_by(&Schema::load(path).map_err(|e| anyhow::anyhow!("[schema] {e}"))?);
    }
    if let Some(path) = sensors {
        let map = SensorMap::load(path).map_err(|e| anyhow::anyhow!("[sensors] {e}"))?;
        let kg = build_kg(&parsed.model, &map, &full).map_err(|e| anyhow::anyhow!("[graph] {e}"))?;
        println!("sensors {}, graph nodes {}, edges {}", map.len(), kg.node_count(), kg.edges().len());
    }
    println!("ok");
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
