//! Semantic association rule learning over water-network sensor data.
//!
//! The pipeline: parse a network description ([`inp`]), build a typed
//! knowledge graph with the sensors placed in it ([`kg`]), turn raw
//! readings into one transaction per time window ([`ingest`]), extend each
//! transaction with what the graph knows about the reporting sensors
//! ([`enrich`]), mine rules with FP-Growth ([`fpgrowth`]) and score how
//! general each rule is ([`quality`]).

pub mod enrich;
pub mod fpgrowth;
pub mod ingest;
pub mod inp;
pub mod item;
pub mod kg;
pub mod quality;
pub mod report;
pub mod synthetic;

pub use enrich::{
    canonicalize_neighborhood, enrich_transaction, naive_semrl, CanonicalNeighborhood, EnrichError, Enricher,
    EnrichmentConfig, EnrichmentMode,
};
pub use fpgrowth::{
    apriori_oracle, build_fp_tree, frequent_itemsets, generate_rules, generate_rules_bounded, mine_frequent,
    mine_frequent_bounded, AssociationRule, FpTree, FrequentItemsets, MineError, MiningLimits, RuleSet,
};
pub use ingest::{discretize, load_measurements, DiscretizationScheme, IngestError, MeasurementSeries};
pub use inp::{parse_inp, validate_network, write_inp, InpError, NetworkModel, ValidationReport};
pub use item::{Item, Label, Level, Transaction, TransactionDb};
pub use kg::{build_kg, KgError, KnowledgeGraph, Predicate, Quantity, Schema, SensorMap, SensorSpec};
pub use quality::{attr_ratio, ruleset_stats, semantic_expressivity, QualityError, RuleSetStats};
pub use report::{check_rules, compare, Comparison, ReportError, RuleViolations};
