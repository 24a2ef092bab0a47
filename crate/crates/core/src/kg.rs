//! Typed knowledge graph over network components and the sensors placed in
//! them.
//!
//! Links are stored as `(link, connected_to, node)` and sensors as
//! `(sensor, placed_in, component)`. Neighborhood queries ignore edge
//! direction: a sensor reaches its host at one hop and the host's links at
//! two.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inp::NetworkModel;
use crate::item::Label;

pub const JUNCTION: &str = "Junction";
pub const RESERVOIR: &str = "Reservoir";
pub const TANK: &str = "Tank";
pub const PIPE: &str = "Pipe";
pub const PUMP: &str = "Pump";
pub const VALVE: &str = "Valve";

const NODE_CLASSES: [&str; 3] = [JUNCTION, RESERVOIR, TANK];
const LINK_CLASSES: [&str; 3] = [PIPE, PUMP, VALVE];

pub fn is_component_class(class: &str) -> bool {
    NODE_CLASSES.contains(&class) || LINK_CLASSES.contains(&class)
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("sensor '{sensor}' is placed in unknown component '{host}'")]
    MissingHost { sensor: String, host: String },
    #[error("attribute '{attribute}' of class {class} is not in the schema")]
    AttributeNotInSchema { class: String, attribute: String },
    #[error("duplicate node id '{0}'")]
    DuplicateId(String),
    #[error("invalid edge {subject} {predicate} {object}: {reason}")]
    InvalidEdge {
        subject: String,
        predicate: Predicate,
        object: String,
        reason: String,
    },
    #[error("sensor '{0}' must be placed in exactly one component")]
    Placement(String),
    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("sensor map: {0}")]
    SensorMap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    ConnectedTo,
    PlacedIn,
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Predicate::ConnectedTo => "connected_to",
            Predicate::PlacedIn => "placed_in",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Pressure,
    Demand,
    Flow,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::Pressure => "pressure",
            Quantity::Demand => "demand",
            Quantity::Flow => "flow",
        })
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pressure" => Ok(Quantity::Pressure),
            "demand" => Ok(Quantity::Demand),
            "flow" => Ok(Quantity::Flow),
            other => Err(format!("unknown quantity '{other}'")),
        }
    }
}

/// Class name to ordered attribute list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    classes: BTreeMap<String, Vec<String>>,
}

impl Schema {
    pub fn empty() -> Schema {
        Schema::default()
    }

    /// Attribute lists mirroring the fields read from INP files. Sensor
    /// classes carry no attributes.
    pub fn epanet() -> Schema {
        let mut s = Schema::empty();
        let table: [(&str, &[&str]); 9] = [
            (JUNCTION, &["elevation", "base_demand"]),
            (RESERVOIR, &["head"]),
            (TANK, &["elevation", "diameter"]),
            (PIPE, &["length", "diameter", "roughness"]),
            (PUMP, &[]),
            (VALVE, &[]),
            ("WaterPressureSensor", &[]),
            ("WaterConsumptionSensor", &[]),
            ("FlowSensor", &[]),
        ];
        for (class, attrs) in table {
            s.classes
                .insert(class.to_string(), attrs.iter().map(|a| a.to_string()).collect());
        }
        s
    }

    pub fn set_class<I, S>(&mut self, class: &str, attributes: I) -> Result<(), KgError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let attrs: Vec<String> = attributes.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for a in &attrs {
            if !seen.insert(a.as_str()) {
                return Err(KgError::Schema {
                    line: 0,
                    message: format!("attribute '{a}' repeated in class {class}"),
                });
            }
        }
        self.classes.insert(class.to_string(), attrs);
        Ok(())
    }

    pub fn with_class(mut self, class: &str, attributes: &[&str]) -> Result<Schema, KgError> {
        self.set_class(class, attributes.iter().copied())?;
        Ok(self)
    }

    pub fn attributes(&self, class: &str) -> Option<&[String]> {
        self.classes.get(class).map(Vec::as_slice)
    }

    /// Number of attributes a class declares; unknown classes have none.
    pub fn attribute_count(&self, class: &str) -> usize {
        self.attributes(class).map_or(0, <[String]>::len)
    }

    pub fn contains_class(&self, class: &str) -> bool {
        self.classes.contains_key(class)
    }

    pub fn has_attribute(&self, class: &str, attribute: &str) -> bool {
        self.attributes(class)
            .is_some_and(|attrs| attrs.iter().any(|a| a == attribute))
    }

    /// Replaces (or adds) every class listed in `other`.
    pub fn overridden_by(mut self, other: &Schema) -> Schema {
        for (class, attrs) in &other.classes {
            self.classes.insert(class.clone(), attrs.clone());
        }
        self
    }

    /// Reads the schema text format: one `Class: attr, attr, ...` entry per
    /// line, `#` starts a comment, an empty list is allowed.
    pub fn parse(text: &str) -> Result<Schema, KgError> {
        let mut schema = Schema::empty();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| KgError::Schema {
                line: idx + 1,
                message,
            };
            let (class, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected 'Class: attr, ...'".to_string()))?;
            let class = class.trim();
            if class.is_empty() || class.contains(char::is_whitespace) {
                return Err(err(format!("invalid class name '{class}'")));
            }
            if schema.contains_class(class) {
                return Err(err(format!("class {class} listed twice")));
            }
            let attrs: Vec<&str> = rest
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .collect();
            schema
                .set_class(class, attrs)
                .map_err(|e| err(e.to_string()))?;
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Schema, KgError> {
        Schema::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.classes
            .iter()
            .map(|(c, a)| format!("{c}: {}\n", a.join(", ")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SensorSpec {
    pub sensor_id: String,
    pub sensor_class: String,
    pub host_component: String,
    pub quantity: Quantity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SensorMap {
    pub entries: Vec<SensorSpec>,
}

impl SensorMap {
    pub fn new(entries: Vec<SensorSpec>) -> Result<SensorMap, KgError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.sensor_id.as_str()) {
                return Err(KgError::SensorMap(format!("duplicate sensor id '{}'", e.sensor_id)));
            }
            if is_component_class(&e.sensor_class) {
                return Err(KgError::SensorMap(format!(
                    "sensor '{}' uses component class {}",
                    e.sensor_id, e.sensor_class
                )));
            }
        }
        Ok(SensorMap { entries })
    }

    /// Reads CSV with header `sensor_id,sensor_class,host_component,quantity`.
    pub fn from_reader<R: Read>(reader: R) -> Result<SensorMap, KgError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["sensor_id", "sensor_class", "host_component", "quantity"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(KgError::SensorMap(format!(
                "expected header '{}'",
                expected.join(",")
            )));
        }
        let entries = rdr
            .deserialize()
            .collect::<Result<Vec<SensorSpec>, csv::Error>>()?;
        SensorMap::new(entries)
    }

    pub fn load(path: &Path) -> Result<SensorMap, KgError> {
        SensorMap::from_reader(std::fs::File::open(path)?)
    }

    pub fn get(&self, sensor_id: &str) -> Option<&SensorSpec> {
        self.entries.iter().find(|e| e.sensor_id == sensor_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn retain_quantities(&mut self, keep: &[Quantity]) {
        self.entries.retain(|e| keep.contains(&e.quantity));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub class: Label,
    /// In schema order.
    pub attributes: Vec<(Label, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub subject: Label,
    pub predicate: Predicate,
    pub object: Label,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeFact {
    pub node: Label,
    pub class: Label,
    pub attribute: Label,
    pub value: f64,
}

/// Immutable once built.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<Label, Node>,
    edges: Vec<Edge>,
    adjacency: HashMap<Label, Vec<usize>>,
    schema: Schema,
}

/// Builds the graph for a network and its sensors.
pub fn build_kg(
    model: &NetworkModel,
    sensors: &SensorMap,
    schema: &Schema,
) -> Result<KnowledgeGraph, KgError> {
    let mut nodes: Vec<(String, String, Vec<(String, f64)>)> = Vec::new();
    let attr = |name: &str, v: f64| (name.to_string(), v);
    for j in &model.junctions {
        let mut a = vec![attr("elevation", j.elevation)];
        a.extend(j.base_demand.map(|d| attr("base_demand", d)));
        nodes.push((j.id.clone(), JUNCTION.into(), a));
    }
    for r in &model.reservoirs {
        nodes.push((r.id.clone(), RESERVOIR.into(), vec![attr("head", r.head)]));
    }
    for t in &model.tanks {
        let mut a = vec![attr("elevation", t.elevation)];
        a.extend(t.diameter.map(|d| attr("diameter", d)));
        nodes.push((t.id.clone(), TANK.into(), a));
    }
    for p in &model.pipes {
        let a = vec![
            attr("length", p.length),
            attr("diameter", p.diameter),
            attr("roughness", p.roughness),
        ];
        nodes.push((p.id.clone(), PIPE.into(), a));
    }
    for l in &model.pumps {
        nodes.push((l.id.clone(), PUMP.into(), vec![]));
    }
    for l in &model.valves {
        nodes.push((l.id.clone(), VALVE.into(), vec![]));
    }

    let mut edges = Vec::new();
    for (id, from, to) in model.links() {
        edges.push((id.to_string(), Predicate::ConnectedTo, from.to_string()));
        edges.push((id.to_string(), Predicate::ConnectedTo, to.to_string()));
    }
    for s in &sensors.entries {
        if !model.has_component(&s.host_component) {
            return Err(KgError::MissingHost {
                sensor: s.sensor_id.clone(),
                host: s.host_component.clone(),
            });
        }
        nodes.push((s.sensor_id.clone(), s.sensor_class.clone(), vec![]));
        edges.push((s.sensor_id.clone(), Predicate::PlacedIn, s.host_component.clone()));
    }
    KnowledgeGraph::from_parts(nodes, edges, schema.clone())
}

impl KnowledgeGraph {
    /// Assembles and checks a graph from raw nodes `(id, class, attributes)`
    /// and edges `(subject, predicate, object)`.
    pub fn from_parts<N, E>(nodes: N, edges: E, schema: Schema) -> Result<KnowledgeGraph, KgError>
    where
        N: IntoIterator<Item = (String, String, Vec<(String, f64)>)>,
        E: IntoIterator<Item = (String, Predicate, String)>,
    {
        let mut classes: HashMap<String, Label> = HashMap::new();
        let mut intern_class = |c: String| -> Label {
            classes.entry(c.clone()).or_insert_with(|| Arc::from(c)).clone()
        };

        let mut node_map: BTreeMap<Label, Node> = BTreeMap::new();
        for (id, class, attrs) in nodes {
            let class_label = intern_class(class);
            let mut attributes = Vec::with_capacity(attrs.len());
            for (name, value) in attrs {
                if !schema.has_attribute(&class_label, &name) {
                    return Err(KgError::AttributeNotInSchema {
                        class: class_label.to_string(),
                        attribute: name,
                    });
                }
                attributes.push((Label::from(name), value));
            }
            let order = schema.attributes(&class_label).unwrap_or(&[]);
            attributes.sort_by_key(|(n, _)| order.iter().position(|a| a.as_str() == &**n));
            let id: Label = Arc::from(id);
            if node_map.contains_key(&id) {
                return Err(KgError::DuplicateId(id.to_string()));
            }
            node_map.insert(
                id,
                Node {
                    class: class_label,
                    attributes,
                },
            );
        }

        let mut edge_list = Vec::new();
        let mut placements: HashMap<Label, usize> = HashMap::new();
        for (subject, predicate, object) in edges {
            let invalid = |reason: &str| KgError::InvalidEdge {
                subject: subject.clone(),
                predicate,
                object: object.clone(),
                reason: reason.to_string(),
            };
            let (Some((s_id, s_node)), Some((o_id, o_node))) = (
                node_map.get_key_value(subject.as_str()),
                node_map.get_key_value(object.as_str()),
            ) else {
                return Err(invalid("endpoint does not exist"));
            };
            match predicate {
                Predicate::ConnectedTo => {
                    if !LINK_CLASSES.contains(&&*s_node.class) || !NODE_CLASSES.contains(&&*o_node.class) {
                        return Err(invalid("connected_to must join a link to a node"));
                    }
                }
                Predicate::PlacedIn => {
                    if is_component_class(&s_node.class) || !is_component_class(&o_node.class) {
                        return Err(invalid("placed_in must join a sensor to a component"));
                    }
                    *placements.entry(s_id.clone()).or_default() += 1;
                }
            }
            edge_list.push(Edge {
                subject: s_id.clone(),
                predicate,
                object: o_id.clone(),
            });
        }
        for (id, node) in &node_map {
            if !is_component_class(&node.class) && placements.get(id).copied() != Some(1) {
                return Err(KgError::Placement(id.to_string()));
            }
        }

        edge_list.sort_by(|a, b| {
            let key = |e: &Edge| {
                (
                    e.predicate,
                    node_map[&e.subject].class.clone(),
                    node_map[&e.object].class.clone(),
                    e.subject.clone(),
                    e.object.clone(),
                )
            };
            key(a).cmp(&key(b))
        });
        edge_list.dedup();

        let mut adjacency: HashMap<Label, Vec<usize>> = HashMap::new();
        for (i, e) in edge_list.iter().enumerate() {
            adjacency.entry(e.subject.clone()).or_default().push(i);
            if e.object != e.subject {
                adjacency.entry(e.object.clone()).or_default().push(i);
            }
        }

        Ok(KnowledgeGraph {
            nodes: node_map,
            edges: edge_list,
            adjacency,
            schema,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&Label, &Node)> {
        self.nodes.iter()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    /// Stored label for `id`, shared with every edge that mentions it.
    pub fn label(&self, id: &str) -> Option<&Label> {
        self.nodes.get_key_value(id).map(|(k, _)| k)
    }

    /// Edges in canonical order: predicate, subject class, object class,
    /// subject id, object id.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn incident(&self, id: &str) -> impl Iterator<Item = &Edge> {
        self.adjacency
            .get(id)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    pub fn degree(&self, id: &str) -> usize {
        self.adjacency.get(id).map_or(0, Vec::len)
    }

    /// Hop distance of every node within `k` undirected hops of `start`.
    pub fn distances(&self, start: &str, k: usize) -> Result<HashMap<Label, usize>, KgError> {
        let start = self
            .label(start)
            .ok_or_else(|| KgError::UnknownNode(start.to_string()))?;
        let mut dist = HashMap::from([(start.clone(), 0usize)]);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(id) = queue.pop_front() {
            let d = dist[&id];
            if d == k {
                continue;
            }
            for edge in self.incident(&id) {
                let other = if edge.subject == id { &edge.object } else { &edge.subject };
                if !dist.contains_key(other) {
                    dist.insert(other.clone(), d + 1);
                    queue.push_back(other.clone());
                }
            }
        }
        Ok(dist)
    }

    /// Every edge lying on a walk of at most `k` hops from `start`.
    pub fn k_hop_topology(&self, start: &str, k: usize) -> Result<Vec<Edge>, KgError> {
        let dist = self.distances(start, k)?;
        Ok(self
            .edges
            .iter()
            .filter(|e| match (dist.get(&e.subject), dist.get(&e.object)) {
                (Some(&a), Some(&b)) => a.min(b) < k,
                _ => false,
            })
            .cloned()
            .collect())
    }

    /// Attribute values of `start` and every node within `k` hops, ordered
    /// by class, node id, then schema attribute order.
    pub fn k_hop_attributes(&self, start: &str, k: usize) -> Result<Vec<AttributeFact>, KgError> {
        let dist = self.distances(start, k)?;
        let mut ids: Vec<&Label> = dist.keys().collect();
        ids.sort_by(|a, b| (&self.nodes[*a].class, *a).cmp(&(&self.nodes[*b].class, *b)));
        let mut out = Vec::new();
        for id in ids {
            let node = &self.nodes[id];
            for (name, value) in &node.attributes {
                out.push(AttributeFact {
                    node: id.clone(),
                    class: node.class.clone(),
                    attribute: name.clone(),
                    value: *value,
                });
            }
        }
        Ok(out)
    }

    /// Copy of the graph with every node id passed through `rename`.
    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> Result<KnowledgeGraph, KgError> {
        let nodes = self.nodes.iter().map(|(id, n)| {
            (
                rename(id),
                n.class.to_string(),
                n.attributes
                    .iter()
                    .map(|(a, v)| (a.to_string(), *v))
                    .collect(),
            )
        });
        let edges = self
            .edges
            .iter()
            .map(|e| (rename(&e.subject), e.predicate, rename(&e.object)));
        KnowledgeGraph::from_parts(nodes.collect::<Vec<_>>(), edges.collect::<Vec<_>>(), self.schema.clone())
    }
}
