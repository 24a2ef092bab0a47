//! Rule quality: semantic expressivity and rule set summaries.
//!
//! For one side of a rule, every distinct instance label counts as an
//! instance. Attribute items raise their instance's attribute count;
//! relation and measurement items only contribute instances. With
//! `attr_ratio(S) = prod_p attr_count(S, p) / attributes(class(p))`:
//!
//! ```text
//! SE(X -> Y) = (1 - attr_ratio(X)) (1 - attr_ratio(Y)) / ((instances(X) + instances(Y)) / 2)
//! ```
//!
//! All arithmetic is exact; the score is converted to `f64` only when it is
//! stored on a rule.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::fpgrowth::{AssociationRule, RuleSet};
use crate::item::{Item, Label};
use crate::kg::Schema;

pub type Exact = Ratio<u128>;

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("class {0} is not in the schema")]
    UnknownClass(String),
    #[error("attribute '{attribute}' is not declared for class {class}")]
    UnknownAttribute { class: String, attribute: String },
    #[error("instance '{label}' appears with classes {first} and {second}")]
    ConflictingClass {
        label: String,
        first: String,
        second: String,
    },
    #[error("rule side mentions no instance")]
    EmptySide,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceCoverage {
    /// Known only for instances carrying attribute items.
    pub class: Option<Label>,
    pub attributes: BTreeSet<Label>,
    /// Attributes the class declares.
    pub declared: usize,
}

impl InstanceCoverage {
    pub fn attr_count(&self) -> usize {
        self.attributes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideAnalysis {
    pub instances: BTreeMap<Label, InstanceCoverage>,
    pub attr_ratio: Exact,
}

impl SideAnalysis {
    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }
}

pub fn analyze_side<'a, I>(side: I, schema: &Schema) -> Result<SideAnalysis, QualityError>
where
    I: IntoIterator<Item = &'a Item>,
{
    let mut instances: BTreeMap<Label, InstanceCoverage> = BTreeMap::new();
    for item in side {
        for label in item.instances() {
            instances.entry(label.clone()).or_default();
        }
        if let Item::Attribute {
            subject,
            class,
            attribute,
            ..
        } = item
        {
            let attrs = schema
                .attributes(class)
                .ok_or_else(|| QualityError::UnknownClass(class.to_string()))?;
            if !attrs.iter().any(|a| a.as_str() == &**attribute) {
                return Err(QualityError::UnknownAttribute {
                    class: class.to_string(),
                    attribute: attribute.to_string(),
                });
            }
            let cov = instances.get_mut(subject).expect("inserted above");
            match &cov.class {
                Some(c) if c != class => {
                    return Err(QualityError::ConflictingClass {
                        label: subject.to_string(),
                        first: c.to_string(),
                        second: class.to_string(),
                    })
                }
                _ => cov.class = Some(class.clone()),
            }
            cov.declared = attrs.len();
            cov.attributes.insert(attribute.clone());
        }
    }
    if instances.is_empty() {
        return Err(QualityError::EmptySide);
    }
    let mut ratio = Exact::from_integer(1);
    for cov in instances.values() {
        if cov.attr_count() == 0 || cov.declared == 0 {
            ratio = Exact::from_integer(0);
            break;
        }
        ratio *= Exact::new(cov.attr_count() as u128, cov.declared as u128);
    }
    Ok(SideAnalysis {
        instances,
        attr_ratio: ratio,
    })
}

/// Product over the side's instances of covered / declared attributes.
pub fn attr_ratio(side: &[Item], schema: &Schema) -> Result<Exact, QualityError> {
    Ok(analyze_side(side, schema)?.attr_ratio)
}

pub fn semantic_expressivity(antecedent: &[Item], consequent: &[Item], schema: &Schema) -> Result<Exact, QualityError> {
    let x = analyze_side(antecedent, schema)?;
    let y = analyze_side(consequent, schema)?;
    let one = Exact::from_integer(1);
    let spread = (x.instance_count() + y.instance_count()) as u128;
    Ok((one - x.attr_ratio) * (one - y.attr_ratio) * Exact::new(2, spread))
}

pub fn to_f64(r: Exact) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Two-decimal presentation, truncated toward zero (2/3 shows as 0.66).
/// A 1e-9 allowance keeps values such as 0.29 from printing as 0.28.
pub fn two_decimals(v: f64) -> String {
    let hundredths = (v * 100.0 + 1e-9).floor() as i64;
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub fn score_rule(rule: &mut AssociationRule<Item>, schema: &Schema) -> Result<(), QualityError> {
    let se = semantic_expressivity(&rule.antecedent, &rule.consequent, schema)?;
    rule.semantic_expressivity = Some(to_f64(se));
    Ok(())
}

pub fn score_rules(rules: &mut RuleSet<Item>, schema: &Schema) -> Result<(), QualityError> {
    rules.rules.iter_mut().try_for_each(|r| score_rule(r, schema))
}

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSetStats {
    pub count: usize,
    /// `None` when no rule has a score.
    pub max_se: Option<f64>,
    pub min_se: Option<f64>,
    /// Ten equal-width bins over [0, 1]; 1.0 falls in the last one.
    pub support_histogram: [u64; HISTOGRAM_BINS],
    pub confidence_histogram: [u64; HISTOGRAM_BINS],
}

fn bin(v: f64) -> usize {
    ((v * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1)
}

pub fn ruleset_stats<T>(rules: &RuleSet<T>) -> RuleSetStats {
    let mut stats = RuleSetStats {
        count: rules.len(),
        max_se: None,
        min_se: None,
        support_histogram: [0; HISTOGRAM_BINS],
        confidence_histogram: [0; HISTOGRAM_BINS],
    };
    for r in &rules.rules {
        stats.support_histogram[bin(r.support)] += 1;
        stats.confidence_histogram[bin(r.confidence)] += 1;
        if let Some(se) = r.semantic_expressivity {
            stats.max_se = Some(stats.max_se.map_or(se, |m| m.max(se)));
            stats.min_se = Some(stats.min_se.map_or(se, |m| m.min(se)));
        }
    }
    stats
}
