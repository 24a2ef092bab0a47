//! Reader and writer for the topological subset of the EPANET `.inp` format.
//!
//! Only the sections that describe what the network *is* are read:
//! `[TITLE]`, `[JUNCTIONS]`, `[RESERVOIRS]`, `[TANKS]`, `[PIPES]`, `[PUMPS]`,
//! `[VALVES]` and `[COORDINATES]`. Everything else (patterns, curves,
//! options, controls, ...) is skipped with a warning. Values are kept in the
//! units the file uses.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Section {
    Title,
    Junctions,
    Reservoirs,
    Tanks,
    Pipes,
    Pumps,
    Valves,
    Coordinates,
    End,
}

impl Section {
    fn from_header(name: &str) -> Option<Section> {
        Some(match name.to_ascii_uppercase().as_str() {
            "TITLE" => Section::Title,
            "JUNCTIONS" => Section::Junctions,
            "RESERVOIRS" => Section::Reservoirs,
            "TANKS" => Section::Tanks,
            "PIPES" => Section::Pipes,
            "PUMPS" => Section::Pumps,
            "VALVES" => Section::Valves,
            "COORDINATES" => Section::Coordinates,
            "END" => Section::End,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Section::Title => "TITLE",
            Section::Junctions => "JUNCTIONS",
            Section::Reservoirs => "RESERVOIRS",
            Section::Tanks => "TANKS",
            Section::Pipes => "PIPES",
            Section::Pumps => "PUMPS",
            Section::Valves => "VALVES",
            Section::Coordinates => "COORDINATES",
            Section::End => "END",
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    pub elevation: f64,
    pub base_demand: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub id: String,
    pub head: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tank {
    pub id: String,
    pub elevation: f64,
    pub diameter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipe {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    pub length: f64,
    pub diameter: f64,
    pub roughness: f64,
}

/// A pump or valve. Only connectivity is retained.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkModel {
    pub junctions: Vec<Junction>,
    pub reservoirs: Vec<Reservoir>,
    pub tanks: Vec<Tank>,
    pub pipes: Vec<Pipe>,
    pub pumps: Vec<Link>,
    pub valves: Vec<Link>,
    pub coordinates: BTreeMap<String, (f64, f64)>,
}

impl NetworkModel {
    /// Component counts in the order junctions, reservoirs, tanks, pipes,
    /// pumps, valves.
    pub fn counts(&self) -> (usize, usize, usize, usize, usize, usize) {
        (
            self.junctions.len(),
            self.reservoirs.len(),
            self.tanks.len(),
            self.pipes.len(),
            self.pumps.len(),
            self.valves.len(),
        )
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.junctions
            .iter()
            .map(|j| j.id.as_str())
            .chain(self.reservoirs.iter().map(|r| r.id.as_str()))
            .chain(self.tanks.iter().map(|t| t.id.as_str()))
    }

    /// `(id, from, to)` for every pipe, pump and valve.
    pub fn links(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.pipes
            .iter()
            .map(|p| (p.id.as_str(), p.from_node.as_str(), p.to_node.as_str()))
            .chain(
                self.pumps
                    .iter()
                    .chain(self.valves.iter())
                    .map(|l| (l.id.as_str(), l.from_node.as_str(), l.to_node.as_str())),
            )
    }

    pub fn has_component(&self, id: &str) -> bool {
        self.node_ids().any(|n| n == id) || self.links().any(|(l, _, _)| l == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub section: Option<Section>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.section, self.line) {
            (Some(s), Some(l)) => write!(f, "{s} line {l}: {}", self.message),
            (Some(s), None) => write!(f, "{s}: {}", self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum InpError {
    #[error("{section} line {line}: {message}")]
    Syntax {
        section: Section,
        line: usize,
        message: String,
    },
    #[error("line {line}: data row outside of any section")]
    NoSection { line: usize },
    #[error("required section {0} is missing")]
    MissingSection(Section),
    #[error("network failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// A successfully parsed network plus the non-fatal findings.
#[derive(Debug, Clone)]
pub struct ParsedNetwork {
    pub model: NetworkModel,
    pub warnings: Vec<Diagnostic>,
}

type Positions = HashMap<(Section, usize), usize>;

/// Parses INP text and validates the result.
pub fn parse_inp(text: &str) -> Result<ParsedNetwork, InpError> {
    let mut model = NetworkModel::default();
    let mut positions = Positions::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    // None = inside a skipped section.
    let mut current: Option<Option<Section>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            let name = line
                .trim_start_matches('[')
                .split(']')
                .next()
                .unwrap_or("")
                .trim();
            let section = Section::from_header(name);
            match section {
                Some(s) => {
                    seen.insert(s);
                }
                None => warnings.push(Diagnostic {
                    section: None,
                    line: Some(line_no),
                    message: format!("section [{name}] is not used and was skipped"),
                }),
            }
            current = Some(section);
            continue;
        }
        let section = match current {
            None => return Err(InpError::NoSection { line: line_no }),
            Some(None) | Some(Some(Section::Title)) | Some(Some(Section::End)) => continue,
            Some(Some(s)) => s,
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        let row = Row {
            section,
            line: line_no,
            cols: &cols,
        };
        let index = match section {
            Section::Junctions => {
                row.arity(2, 4)?;
                model.junctions.push(Junction {
                    id: cols[0].to_string(),
                    elevation: row.num(1)?,
                    base_demand: row.opt_num(2)?,
                });
                model.junctions.len() - 1
            }
            Section::Reservoirs => {
                row.arity(2, 3)?;
                model.reservoirs.push(Reservoir {
                    id: cols[0].to_string(),
                    head: row.num(1)?,
                });
                model.reservoirs.len() - 1
            }
            Section::Tanks => {
                // Either the short `id elevation [diameter]` layout or the
                // full EPANET layout where the diameter is the sixth column.
                let diameter = match cols.len() {
                    2 | 3 => row.opt_num(2)?,
                    6..=8 => Some(row.num(5)?),
                    n => {
                        return Err(row.err(format!(
                            "expected 2-3 or 6-8 columns, found {n}"
                        )))
                    }
                };
                model.tanks.push(Tank {
                    id: cols[0].to_string(),
                    elevation: row.num(1)?,
                    diameter,
                });
                model.tanks.len() - 1
            }
            Section::Pipes => {
                row.arity(6, 8)?;
                model.pipes.push(Pipe {
                    id: cols[0].to_string(),
                    from_node: cols[1].to_string(),
                    to_node: cols[2].to_string(),
                    length: row.num(3)?,
                    diameter: row.num(4)?,
                    roughness: row.num(5)?,
                });
                model.pipes.len() - 1
            }
            Section::Pumps | Section::Valves => {
                if cols.len() < 3 {
                    return Err(row.err(format!(
                        "expected at least 3 columns, found {}",
                        cols.len()
                    )));
                }
                let link = Link {
                    id: cols[0].to_string(),
                    from_node: cols[1].to_string(),
                    to_node: cols[2].to_string(),
                };
                let list = if section == Section::Pumps {
                    &mut model.pumps
                } else {
                    &mut model.valves
                };
                list.push(link);
                list.len() - 1
            }
            Section::Coordinates => {
                row.arity(3, 3)?;
                let xy = (row.num(1)?, row.num(2)?);
                model.coordinates.insert(cols[0].to_string(), xy);
                continue;
            }
            Section::Title | Section::End => unreachable!(),
        };
        positions.insert((section, index), line_no);
    }

    for required in [Section::Junctions, Section::Pipes] {
        if !seen.contains(&required) {
            return Err(InpError::MissingSection(required));
        }
    }

    let mut report = validate(&model, Some(&positions));
    if !report.is_ok() {
        return Err(InpError::Invalid(report));
    }
    warnings.append(&mut report.warnings);
    Ok(ParsedNetwork { model, warnings })
}

struct Row<'a> {
    section: Section,
    line: usize,
    cols: &'a [&'a str],
}

impl Row<'_> {
    fn err(&self, message: String) -> InpError {
        InpError::Syntax {
            section: self.section,
            line: self.line,
            message,
        }
    }

    fn arity(&self, min: usize, max: usize) -> Result<(), InpError> {
        let n = self.cols.len();
        if n < min || n > max {
            let expected = if min == max {
                format!("{min}")
            } else {
                format!("{min}-{max}")
            };
            return Err(self.err(format!("expected {expected} columns, found {n}")));
        }
        Ok(())
    }

    fn num(&self, col: usize) -> Result<f64, InpError> {
        let raw = self.cols[col];
        raw.parse::<f64>()
            .map_err(|_| self.err(format!("column {} is not a number: '{raw}'", col + 1)))
    }

    fn opt_num(&self, col: usize) -> Result<Option<f64>, InpError> {
        if col < self.cols.len() {
            self.num(col).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Checks every structural invariant of a model. Findings never abort.
pub fn validate_network(model: &NetworkModel) -> ValidationReport {
    validate(model, None)
}

fn validate(model: &NetworkModel, positions: Option<&Positions>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let at = |section: Section, index: usize| positions.and_then(|p| p.get(&(section, index)).copied());
    let mut error = |section: Section, index: usize, message: String| {
        report.errors.push(Diagnostic {
            section: Some(section),
            line: at(section, index),
            message,
        })
    };

    // Ids are unique across every component kind.
    let mut first_seen: HashMap<&str, Section> = HashMap::new();
    let mut ids: Vec<(Section, usize, &str)> = Vec::new();
    ids.extend(model.junctions.iter().enumerate().map(|(i, c)| (Section::Junctions, i, c.id.as_str())));
    ids.extend(model.reservoirs.iter().enumerate().map(|(i, c)| (Section::Reservoirs, i, c.id.as_str())));
    ids.extend(model.tanks.iter().enumerate().map(|(i, c)| (Section::Tanks, i, c.id.as_str())));
    ids.extend(model.pipes.iter().enumerate().map(|(i, c)| (Section::Pipes, i, c.id.as_str())));
    ids.extend(model.pumps.iter().enumerate().map(|(i, c)| (Section::Pumps, i, c.id.as_str())));
    ids.extend(model.valves.iter().enumerate().map(|(i, c)| (Section::Valves, i, c.id.as_str())));
    for &(section, index, id) in &ids {
        match first_seen.get(id) {
            Some(prev) => error(section, index, format!("duplicate id '{id}' (first defined in {prev})")),
            None => {
                first_seen.insert(id, section);
            }
        }
    }

    let mut finite = |section: Section, index: usize, id: &str, what: &str, value: f64| {
        if !value.is_finite() {
            error(section, index, format!("{id}: {what} is not finite"));
        }
    };
    for (i, j) in model.junctions.iter().enumerate() {
        finite(Section::Junctions, i, &j.id, "elevation", j.elevation);
        if let Some(d) = j.base_demand {
            finite(Section::Junctions, i, &j.id, "base demand", d);
        }
    }
    for (i, r) in model.reservoirs.iter().enumerate() {
        finite(Section::Reservoirs, i, &r.id, "head", r.head);
    }
    for (i, t) in model.tanks.iter().enumerate() {
        finite(Section::Tanks, i, &t.id, "elevation", t.elevation);
        if let Some(d) = t.diameter {
            finite(Section::Tanks, i, &t.id, "diameter", d);
        }
    }
    for (i, p) in model.pipes.iter().enumerate() {
        finite(Section::Pipes, i, &p.id, "length", p.length);
        finite(Section::Pipes, i, &p.id, "diameter", p.diameter);
        finite(Section::Pipes, i, &p.id, "roughness", p.roughness);
    }
    for (i, t) in model.tanks.iter().enumerate() {
        if matches!(t.diameter, Some(d) if d <= 0.0) {
            error(Section::Tanks, i, format!("{}: diameter must be positive", t.id));
        }
    }
    for (i, p) in model.pipes.iter().enumerate() {
        if p.length <= 0.0 {
            error(Section::Pipes, i, format!("{}: length must be positive", p.id));
        }
        if p.diameter <= 0.0 {
            error(Section::Pipes, i, format!("{}: diameter must be positive", p.id));
        }
    }

    let nodes: HashSet<&str> = model.node_ids().collect();
    let mut link_rows: Vec<(Section, usize, &str, &str, &str)> = Vec::new();
    link_rows.extend(model.pipes.iter().enumerate().map(|(i, l)| (Section::Pipes, i, l.id.as_str(), l.from_node.as_str(), l.to_node.as_str())));
    link_rows.extend(model.pumps.iter().enumerate().map(|(i, l)| (Section::Pumps, i, l.id.as_str(), l.from_node.as_str(), l.to_node.as_str())));
    link_rows.extend(model.valves.iter().enumerate().map(|(i, l)| (Section::Valves, i, l.id.as_str(), l.from_node.as_str(), l.to_node.as_str())));
    for &(section, index, id, from, to) in &link_rows {
        for end in [from, to] {
            if !nodes.contains(end) {
                error(section, index, format!("{id} references unknown node '{end}'"));
            }
        }
        if from == to {
            error(section, index, format!("{id} connects node '{from}' to itself"));
        }
    }

    for id in model.coordinates.keys() {
        if !nodes.contains(id.as_str()) {
            report.warnings.push(Diagnostic {
                section: Some(Section::Coordinates),
                line: None,
                message: format!("coordinates given for unknown node '{id}'"),
            });
        }
    }

    connectivity_warnings(model, &nodes, &mut report.warnings);
    report
}

fn connectivity_warnings(model: &NetworkModel, nodes: &HashSet<&str>, out: &mut Vec<Diagnostic>) {
    let order: Vec<&str> = model.node_ids().collect();
    let index: HashMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut parent: Vec<usize> = (0..order.len()).collect();
    let mut degree = vec![0usize; order.len()];

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for (_, from, to) in model.links() {
        if !(nodes.contains(from) && nodes.contains(to)) {
            continue;
        }
        let (a, b) = (index[from], index[to]);
        degree[a] += 1;
        degree[b] += 1;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }

    let mut roots = HashSet::new();
    for (i, id) in order.iter().enumerate() {
        if degree[i] == 0 {
            out.push(Diagnostic {
                section: None,
                line: None,
                message: format!("node '{id}' is not connected to any link"),
            });
        } else {
            roots.insert(find(&mut parent, i));
        }
    }
    if roots.len() > 1 {
        out.push(Diagnostic {
            section: None,
            line: None,
            message: format!("network is split into {} disconnected parts", roots.len()),
        });
    }
}

/// Serializes a model back to INP text that [`parse_inp`] reads into an
/// equal model.
pub fn write_inp(model: &NetworkModel) -> String {
    let mut out = String::new();
    out.push_str("[JUNCTIONS]\n;ID Elevation Demand\n");
    for j in &model.junctions {
        let _ = write!(out, "{} {}", j.id, j.elevation);
        if let Some(d) = j.base_demand {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
    }
    out.push_str("\n[RESERVOIRS]\n;ID Head\n");
    for r in &model.reservoirs {
        let _ = writeln!(out, "{} {}", r.id, r.head);
    }
    out.push_str("\n[TANKS]\n;ID Elevation Diameter\n");
    for t in &model.tanks {
        let _ = write!(out, "{} {}", t.id, t.elevation);
        if let Some(d) = t.diameter {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
    }
    out.push_str("\n[PIPES]\n;ID Node1 Node2 Length Diameter Roughness\n");
    for p in &model.pipes {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            p.id, p.from_node, p.to_node, p.length, p.diameter, p.roughness
        );
    }
    for (section, links) in [(Section::Pumps, &model.pumps), (Section::Valves, &model.valves)] {
        let _ = write!(out, "\n{section}\n");
        for l in links {
            let _ = writeln!(out, "{} {} {}", l.id, l.from_node, l.to_node);
        }
    }
    out.push_str("\n[COORDINATES]\n");
    for (id, (x, y)) in &model.coordinates {
        let _ = writeln!(out, "{id} {x} {y}");
    }
    out.push_str("\n[END]\n");
    out
}
