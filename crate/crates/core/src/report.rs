//! Rule records, rule set comparison and violation counting.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::fpgrowth::{Basket, RuleSet};
use crate::quality::{ruleset_stats, RuleSetStats};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("rule sets were mined with different thresholds: support {0} vs {1}, confidence {2} vs {3}")]
    MismatchedThresholds(f64, f64, f64, f64),
    #[error("rule sets were mined from different databases ({0} vs {1} transactions)")]
    MismatchedDatabases(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One serialized rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleRecord {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support: f64,
    pub confidence: f64,
    pub semantic_expressivity: Option<f64>,
}

pub fn records<T: Display>(rules: &RuleSet<T>) -> impl Iterator<Item = RuleRecord> + '_ {
    rules.rules.iter().map(|r| RuleRecord {
        antecedent: r.antecedent.iter().map(ToString::to_string).collect(),
        consequent: r.consequent.iter().map(ToString::to_string).collect(),
        support: r.support,
        confidence: r.confidence,
        semantic_expressivity: r.semantic_expressivity,
    })
}

/// One JSON object per line.
pub fn write_jsonl<T: Display, W: Write>(rules: &RuleSet<T>, mut out: W) -> Result<(), ReportError> {
    for rec in records(rules) {
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV with item lists joined by single spaces.
pub fn write_csv<T: Display, W: Write>(rules: &RuleSet<T>, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["antecedent", "consequent", "support", "confidence", "semantic_expressivity"])?;
    for rec in records(rules) {
        w.write_record([
            rec.antecedent.join(" "),
            rec.consequent.join(" "),
            rec.support.to_string(),
            rec.confidence.to_string(),
            rec.semantic_expressivity.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub min_support: f64,
    pub min_confidence: f64,
    pub baseline_rules: usize,
    pub semantic_rules: usize,
    /// Semantic over baseline count; `None` when the baseline is empty.
    pub ratio: Option<f64>,
    pub semantic: RuleSetStats,
}

/// Side-by-side counts for two rule sets mined at the same thresholds.
pub fn compare<T, U>(baseline: &RuleSet<T>, semantic: &RuleSet<U>) -> Result<Comparison, ReportError> {
    if baseline.min_support != semantic.min_support || baseline.min_confidence != semantic.min_confidence {
        return Err(ReportError::MismatchedThresholds(
            baseline.min_support,
            semantic.min_support,
            baseline.min_confidence,
            semantic.min_confidence,
        ));
    }
    if baseline.transactions != semantic.transactions {
        return Err(ReportError::MismatchedDatabases(baseline.transactions, semantic.transactions));
    }
    Ok(Comparison {
        min_support: baseline.min_support,
        min_confidence: baseline.min_confidence,
        baseline_rules: baseline.len(),
        semantic_rules: semantic.len(),
        ratio: (!baseline.is_empty()).then(|| semantic.len() as f64 / baseline.len() as f64),
        semantic: ruleset_stats(semantic),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleViolations {
    /// Position of the rule in its rule set.
    pub rule: usize,
    /// Transactions where the antecedent holds.
    pub antecedent_count: u64,
    /// Of those, transactions missing part of the consequent.
    pub violations: u64,
}

impl RuleViolations {
    pub fn rate(&self) -> f64 {
        if self.antecedent_count == 0 {
            0.0
        } else {
            self.violations as f64 / self.antecedent_count as f64
        }
    }
}

/// For each rule, counts transactions where the antecedent holds but the
/// consequent does not. Sorted by violation count, highest first; ties keep
/// rule order.
pub fn check_rules<B: Basket>(rules: &RuleSet<B::Item>, db: &[B]) -> Vec<RuleViolations> {
    let baskets: Vec<BTreeSet<&B::Item>> = db.iter().map(|b| b.basket_items().collect()).collect();
    let mut out: Vec<RuleViolations> = rules
        .rules
        .iter()
        .enumerate()
        .map(|(idx, rule)| {
            let mut antecedent_count = 0;
            let mut violations = 0;
            for basket in &baskets {
                if rule.antecedent.iter().all(|i| basket.contains(i)) {
                    antecedent_count += 1;
                    if !rule.consequent.iter().all(|i| basket.contains(i)) {
                        violations += 1;
                    }
                }
            }
            RuleViolations {
                rule: idx,
                antecedent_count,
                violations,
            }
        })
        .collect();
    out.sort_by(|a, b| b.violations.cmp(&a.violations).then(a.rule.cmp(&b.rule)));
    out
}
