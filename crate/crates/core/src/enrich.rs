//! Semantic enrichment of transactions from the knowledge graph.
//!
//! Every measurement item is extended with the relations and (optionally)
//! binned attributes found within `k_neighbors` hops of its sensor. In
//! literal mode the added items name concrete components. In generalized
//! mode the sensor's neighborhood is relabelled canonically
//! (`Junction_1`, `Pipe_2`, ...) so that sensors sitting in structurally
//! identical surroundings produce identical items and rules can apply to any
//! of them.
//!
//! Canonical labels are scoped to one sensor's neighborhood. Two sensors in
//! the same window may therefore emit the same label for different
//! components; their items merge, which is the intended generalization.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::fpgrowth::{build_fp_tree, generate_rules_bounded, mine_frequent_bounded, MineError, MiningLimits, RuleSet};
use crate::item::{Item, Label, Transaction, TransactionDb};
use crate::kg::{Edge, KgError, KnowledgeGraph, Predicate};
use crate::quality::{score_rules, QualityError};

/// Upper bound on the orderings tried when breaking ties between
/// structurally equivalent nodes. Beyond it ties fall back to id order.
pub const MAX_TIE_ORDERINGS: usize = 40_320;

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("sensor '{0}' is not in the knowledge graph")]
    SensorNotInGraph(String),
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error(transparent)]
    Mine(#[from] MineError),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EnrichmentMode {
    /// Concrete component ids, exactly as found in the graph.
    Literal,
    /// Canonical per-neighborhood labels.
    #[default]
    Generalized,
}

impl FromStr for EnrichmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(EnrichmentMode::Literal),
            "generalized" => Ok(EnrichmentMode::Generalized),
            other => Err(format!("unknown enrichment mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnrichmentConfig {
    pub k_neighbors: usize,
    pub mode: EnrichmentMode,
    pub include_attributes: bool,
    pub attribute_bins: u32,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        EnrichmentConfig {
            k_neighbors: 1,
            mode: EnrichmentMode::Generalized,
            include_attributes: false,
            attribute_bins: 5,
        }
    }
}

/// Equal-width bins per `(class, attribute)` over the values observed in a
/// graph.
#[derive(Debug, Clone, Default)]
pub struct AttributeBins {
    ranges: HashMap<(Label, Label), (f64, f64)>,
    bins: u32,
}

impl AttributeBins {
    pub fn fit(kg: &KnowledgeGraph, bins: u32) -> AttributeBins {
        let mut ranges: HashMap<(Label, Label), (f64, f64)> = HashMap::new();
        for (_, node) in kg.nodes() {
            for (name, v) in &node.attributes {
                let r = ranges
                    .entry((node.class.clone(), name.clone()))
                    .or_insert((*v, *v));
                r.0 = r.0.min(*v);
                r.1 = r.1.max(*v);
            }
        }
        AttributeBins {
            ranges,
            bins: bins.max(1),
        }
    }

    pub fn bin(&self, class: &Label, attribute: &Label, value: f64) -> u32 {
        let Some(&(lo, hi)) = self.ranges.get(&(class.clone(), attribute.clone())) else {
            return 0;
        };
        if hi <= lo {
            return 0;
        }
        let b = ((value - lo) / (hi - lo) * self.bins as f64).floor();
        (b.max(0.0) as u32).min(self.bins - 1)
    }
}

/// A sensor's neighborhood under canonical labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalNeighborhood {
    /// Concrete id to canonical label, for every node within reach.
    pub labels: BTreeMap<Label, Label>,
    pub items: BTreeSet<Item>,
}

impl CanonicalNeighborhood {
    pub fn label_of(&self, id: &str) -> Option<&Label> {
        self.labels.get(id)
    }
}

/// Splits `Pipe_12` into `("Pipe_", 12)` so ids order numerically.
fn natural_key(id: &str) -> (&str, u64, &str) {
    let digits = id.len() - id.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (head, tail) = id.split_at(id.len() - digits);
    match tail.parse::<u64>() {
        Ok(n) if digits <= 18 => (head, n, id),
        _ => (id, 0, id),
    }
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    natural_key(a).cmp(&natural_key(b))
}

struct LocalGraph<'a> {
    ids: Vec<&'a Label>,
    classes: Vec<&'a Label>,
    /// `(subject index, predicate, object index)`
    edges: Vec<(usize, Predicate, usize)>,
    /// Binned attributes per node, in schema order.
    attributes: Vec<Vec<(&'a Label, u32)>>,
}

impl<'a> LocalGraph<'a> {
    fn extract(
        kg: &'a KnowledgeGraph,
        start: &str,
        config: &EnrichmentConfig,
        bins: &AttributeBins,
    ) -> Result<(LocalGraph<'a>, Vec<usize>), KgError> {
        let dist = kg.distances(start, config.k_neighbors)?;
        let mut ids: Vec<&Label> = dist.keys().map(|k| kg.label(k).expect("node exists")).collect();
        ids.sort_by(|a, b| natural_cmp(a, b));
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (&***id, i)).collect();
        let classes = ids.iter().map(|id| &kg.node(id).unwrap().class).collect();
        let edges = kg
            .k_hop_topology(start, config.k_neighbors)?
            .iter()
            .map(|e: &Edge| (index[&*e.subject], e.predicate, index[&*e.object]))
            .collect();
        let attributes = ids
            .iter()
            .map(|id| {
                let node = kg.node(id).unwrap();
                if !config.include_attributes {
                    return Vec::new();
                }
                node.attributes
                    .iter()
                    .map(|(name, v)| (name, bins.bin(&node.class, name, *v)))
                    .collect()
            })
            .collect();
        let hops = ids.iter().map(|id| dist[*id]).collect();
        Ok((
            LocalGraph {
                ids,
                classes,
                edges,
                attributes,
            },
            hops,
        ))
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    /// Stable colouring: hop distance, class, attribute bins and local
    /// degree, refined by the colours of adjacent nodes until no class
    /// splits further.
    fn colors(&self, hops: &[usize]) -> Vec<usize> {
        let mut degree = vec![0usize; self.len()];
        for &(s, _, o) in &self.edges {
            degree[s] += 1;
            degree[o] += 1;
        }
        let initial: Vec<_> = (0..self.len())
            .map(|v| (hops[v], self.classes[v], &self.attributes[v], degree[v]))
            .collect();
        let mut colors = rank(&initial);
        loop {
            let mut signature: Vec<(usize, Vec<(Predicate, bool, usize)>)> =
                colors.iter().map(|&c| (c, Vec::new())).collect();
            for &(s, p, o) in &self.edges {
                signature[s].1.push((p, true, colors[o]));
                signature[o].1.push((p, false, colors[s]));
            }
            for sig in &mut signature {
                sig.1.sort_unstable();
            }
            let refined = rank(&signature);
            let before = colors.iter().collect::<HashSet<_>>().len();
            let after = refined.iter().collect::<HashSet<_>>().len();
            colors = refined;
            if after == before {
                return colors;
            }
        }
    }

    /// Labels and items for a visit order.
    fn emit(&self, order: &[usize]) -> (Vec<Label>, Vec<Item>) {
        let mut labels: Vec<Option<Label>> = vec![None; self.len()];
        let mut counters: HashMap<&str, usize> = HashMap::new();
        for &v in order {
            let n = counters.entry(self.classes[v]).or_insert(0);
            *n += 1;
            labels[v] = Some(Arc::from(format!("{}_{}", self.classes[v], n)));
        }
        let labels: Vec<Label> = labels.into_iter().map(Option::unwrap).collect();
        let mut items: Vec<Item> = self
            .edges
            .iter()
            .map(|&(s, p, o)| Item::Relation {
                subject: labels[s].clone(),
                predicate: p,
                object: labels[o].clone(),
            })
            .collect();
        for (v, attrs) in self.attributes.iter().enumerate() {
            for &(name, bin) in attrs {
                items.push(Item::Attribute {
                    subject: labels[v].clone(),
                    class: self.classes[v].clone(),
                    attribute: name.clone(),
                    bin,
                });
            }
        }
        items.sort();
        items.dedup();
        (labels, items)
    }
}

/// Dense ranks of `keys` in sorted order.
fn rank<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<&K> = keys.iter().collect();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(&k).expect("present"))
        .collect()
}

/// Rearranges `v` into the next lexicographic permutation of its
/// positions; `false` once it wraps around.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Relabels the neighborhood of `sensor` canonically.
///
/// Nodes are coloured by hop distance, class, attribute bins and degree,
/// and the colouring is refined by neighbor colours. Nodes are visited in
/// colour order; when several nodes share a colour every ordering of them
/// is tried (up to [`MAX_TIE_ORDERINGS`]) and the one producing the
/// smallest item list wins, with id order kept among equals. Each node is
/// then labelled `<Class>_<n>` in visit order.
pub fn canonicalize_neighborhood(
    kg: &KnowledgeGraph,
    sensor: &str,
    config: &EnrichmentConfig,
    bins: &AttributeBins,
) -> Result<CanonicalNeighborhood, EnrichError> {
    if kg.node(sensor).is_none() {
        return Err(EnrichError::SensorNotInGraph(sensor.to_string()));
    }
    let (local, hops) = LocalGraph::extract(kg, sensor, config, bins)?;
    let colors = local.colors(&hops);

    // Cells in colour order, members in natural id order (ids are sorted).
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..local.len() {
        cells.entry(colors[v]).or_default().push(v);
    }
    let mut cells: Vec<Vec<usize>> = cells.into_values().collect();

    let mut orderings: usize = 1;
    for cell in &cells {
        for k in 2..=cell.len() {
            orderings = orderings.saturating_mul(k);
        }
    }

    let flatten = |cells: &[Vec<usize>]| cells.iter().flatten().copied().collect::<Vec<_>>();
    let mut best = local.emit(&flatten(&cells));
    if orderings > 1 && orderings <= MAX_TIE_ORDERINGS {
        let tied: Vec<usize> = (0..cells.len()).filter(|&c| cells[c].len() > 1).collect();
        // Odometer over the permutations of every tied cell.
        'outer: loop {
            let mut advanced = false;
            for &c in &tied {
                if next_permutation(&mut cells[c]) {
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break 'outer;
            }
            let candidate = local.emit(&flatten(&cells));
            if candidate.1 < best.1 {
                best = candidate;
            }
        }
    }

    let (labels, items) = best;
    Ok(CanonicalNeighborhood {
        labels: local
            .ids
            .iter()
            .zip(labels)
            .map(|(id, l)| ((*id).clone(), l))
            .collect(),
        items: items.into_iter().collect(),
    })
}

/// Literal `k`-hop relation and attribute items around a node.
fn literal_items(
    kg: &KnowledgeGraph,
    start: &str,
    config: &EnrichmentConfig,
    bins: &AttributeBins,
) -> Result<Vec<Item>, KgError> {
    let mut items: Vec<Item> = kg
        .k_hop_topology(start, config.k_neighbors)?
        .into_iter()
        .map(|e| Item::Relation {
            subject: e.subject,
            predicate: e.predicate,
            object: e.object,
        })
        .collect();
    if config.include_attributes {
        for fact in kg.k_hop_attributes(start, config.k_neighbors)? {
            let bin = bins.bin(&fact.class, &fact.attribute, fact.value);
            items.push(Item::Attribute {
                subject: fact.node,
                class: fact.class,
                attribute: fact.attribute,
                bin,
            });
        }
    }
    Ok(items)
}

#[derive(Debug, Clone)]
struct SensorContext {
    /// Replacement subject for the sensor's measurement items.
    label: Option<Label>,
    items: Vec<Item>,
}

/// Enriches transactions against one graph, caching each sensor's
/// neighborhood.
#[derive(Debug)]
pub struct Enricher<'a> {
    kg: &'a KnowledgeGraph,
    config: EnrichmentConfig,
    bins: AttributeBins,
}

impl<'a> Enricher<'a> {
    pub fn new(kg: &'a KnowledgeGraph, config: EnrichmentConfig) -> Enricher<'a> {
        Enricher {
            kg,
            config,
            bins: AttributeBins::fit(kg, config.attribute_bins),
        }
    }

    pub fn config(&self) -> &EnrichmentConfig {
        &self.config
    }

    fn context(&self, sensor: &str) -> Result<SensorContext, EnrichError> {
        if self.kg.node(sensor).is_none() {
            return Err(EnrichError::SensorNotInGraph(sensor.to_string()));
        }
        Ok(match self.config.mode {
            EnrichmentMode::Literal => SensorContext {
                label: None,
                items: literal_items(self.kg, sensor, &self.config, &self.bins)?,
            },
            EnrichmentMode::Generalized => {
                let hood = canonicalize_neighborhood(self.kg, sensor, &self.config, &self.bins)?;
                SensorContext {
                    label: hood.labels.get(sensor).cloned(),
                    items: hood.items.into_iter().collect(),
                }
            }
        })
    }

    fn contexts<'t>(
        &self,
        sensors: impl IntoIterator<Item = &'t Label>,
    ) -> Result<HashMap<Label, SensorContext>, EnrichError> {
        let unique: BTreeSet<&Label> = sensors.into_iter().collect();
        unique
            .into_par_iter()
            .map(|s| Ok((s.clone(), self.context(s)?)))
            .collect()
    }

    fn apply(&self, t: &Transaction, contexts: &HashMap<Label, SensorContext>) -> Transaction {
        // An empty graph has nothing to add.
        if self.kg.node_count() == 0 {
            return t.clone();
        }
        let mut items = BTreeSet::new();
        for item in &t.items {
            match item {
                Item::Measurement {
                    subject,
                    quantity,
                    level,
                } => {
                    let ctx = &contexts[subject];
                    items.insert(Item::Measurement {
                        subject: ctx.label.clone().unwrap_or_else(|| subject.clone()),
                        quantity: *quantity,
                        level: *level,
                    });
                    items.extend(ctx.items.iter().cloned());
                }
                other => {
                    items.insert(other.clone());
                }
            }
        }
        Transaction {
            window_start: t.window_start,
            items,
        }
    }

    fn measured<'t>(transactions: impl IntoIterator<Item = &'t Transaction>) -> Vec<&'t Label> {
        transactions
            .into_iter()
            .flat_map(|t| &t.items)
            .filter_map(|i| match i {
                Item::Measurement { subject, .. } => Some(subject),
                _ => None,
            })
            .collect()
    }

    pub fn enrich_transaction(&self, t: &Transaction) -> Result<Transaction, EnrichError> {
        if self.kg.node_count() == 0 {
            return Ok(t.clone());
        }
        let contexts = self.contexts(Self::measured([t]))?;
        Ok(self.apply(t, &contexts))
    }

    /// Enriches every transaction; the result matches sequential
    /// enrichment exactly.
    pub fn enrich_db(&self, db: &TransactionDb) -> Result<TransactionDb, EnrichError> {
        if self.kg.node_count() == 0 {
            return Ok(db.clone());
        }
        let contexts = self.contexts(Self::measured(db.iter()))?;
        let transactions = db
            .transactions
            .par_iter()
            .map(|t| self.apply(t, &contexts))
            .collect();
        Ok(TransactionDb { transactions })
    }
}

/// One-off enrichment of a single transaction.
pub fn enrich_transaction(
    kg: &KnowledgeGraph,
    t: &Transaction,
    config: &EnrichmentConfig,
) -> Result<Transaction, EnrichError> {
    Enricher::new(kg, *config).enrich_transaction(t)
}

/// Mines scored rules from an already prepared transaction database.
pub fn mine_rules(
    db: &TransactionDb,
    kg: &KnowledgeGraph,
    min_support: f64,
    min_confidence: f64,
    limits: MiningLimits,
) -> Result<RuleSet<Item>, EnrichError> {
    let tree = build_fp_tree(&db.transactions, min_support)?;
    let fis = mine_frequent_bounded(&tree, limits.max_itemsets)?;
    let mut rules = generate_rules_bounded(&fis, min_confidence, limits.max_rules)?;
    score_rules(&mut rules, kg.schema())?;
    Ok(rules)
}

/// Enriches every transaction from the graph, then mines and scores
/// association rules.
pub fn naive_semrl(
    kg: &KnowledgeGraph,
    db: &TransactionDb,
    config: &EnrichmentConfig,
    min_support: f64,
    min_confidence: f64,
) -> Result<RuleSet<Item>, EnrichError> {
    crate::fpgrowth::check_ratio("min_support", min_support)?;
    crate::fpgrowth::check_ratio("min_confidence", min_confidence)?;
    let enriched = Enricher::new(kg, *config).enrich_db(db)?;
    mine_rules(&enriched, kg, min_support, min_confidence, MiningLimits::UNBOUNDED)
}
