//! Items, transactions and their stable text form.
//!
//! Item strings follow a small grammar that rule files and golden tests rely
//! on:
//!
//! * measurement: `m(<label>,<quantity>,<level>)`
//! * relation:    `r(<subject>,<predicate>,<object>)`
//! * attribute:   `a(<label>,<attribute>,<bin>)`

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Utc};

use crate::kg::{Predicate, Quantity};

pub type Label = Arc<str>;

/// A value rounded to a fixed number of decimal places, stored as an
/// integer multiple of `10^-precision`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Level {
    pub scaled: i64,
    pub precision: u32,
}

impl Level {
    /// Rounds half away from zero.
    pub fn round(value: f64, precision: u32) -> Level {
        let factor = 10f64.powi(precision as i32);
        Level {
            scaled: (value * factor).round() as i64,
            precision,
        }
    }

    pub fn value(&self) -> f64 {
        self.scaled as f64 / 10f64.powi(self.precision as i32)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.precision == 0 {
            return write!(f, "{}", self.scaled);
        }
        let sign = if self.scaled < 0 { "-" } else { "" };
        let abs = self.scaled.unsigned_abs();
        let unit = 10u64.pow(self.precision);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / unit,
            abs % unit,
            width = self.precision as usize
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    Measurement {
        subject: Label,
        quantity: Quantity,
        level: Level,
    },
    Relation {
        subject: Label,
        predicate: Predicate,
        object: Label,
    },
    Attribute {
        subject: Label,
        class: Label,
        attribute: Label,
        bin: u32,
    },
}

impl Item {
    /// Instance labels mentioned by this item.
    pub fn instances(&self) -> impl Iterator<Item = &Label> {
        let (first, second) = match self {
            Item::Measurement { subject, .. } | Item::Attribute { subject, .. } => (subject, None),
            Item::Relation {
                subject, object, ..
            } => (subject, Some(object)),
        };
        std::iter::once(first).chain(second)
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Item::Measurement { .. })
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Measurement {
                subject,
                quantity,
                level,
            } => write!(f, "m({subject},{quantity},{level})"),
            Item::Relation {
                subject,
                predicate,
                object,
            } => write!(f, "r({subject},{predicate},{object})"),
            Item::Attribute {
                subject,
                attribute,
                bin,
                ..
            } => write!(f, "a({subject},{attribute},{bin})"),
        }
    }
}

/// The items observed in one time window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub window_start: DateTime<Utc>,
    pub items: BTreeSet<Item>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransactionDb {
    pub transactions: Vec<Transaction>,
}

impl TransactionDb {
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transaction> {
        self.transactions.iter()
    }

    /// Item sets only, in transaction order.
    pub fn baskets(&self) -> Vec<&BTreeSet<Item>> {
        self.transactions.iter().map(|t| &t.items).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_rounding_and_display() {
        assert_eq!(Level::round(43.0, 0).to_string(), "43");
        assert_eq!(Level::round(42.5, 0).to_string(), "43");
        assert_eq!(Level::round(-42.5, 0).to_string(), "-43");
        assert_eq!(Level::round(1.25, 1).to_string(), "1.3");
        assert_eq!(Level::round(-0.04, 2).to_string(), "-0.04");
        assert_eq!(Level::round(7.0, 2).to_string(), "7.00");
        assert_eq!(Level::round(0.2, 0).to_string(), "0");
    }

    #[test]
    fn item_strings() {
        let m = Item::Measurement {
            subject: "S1".into(),
            quantity: Quantity::Pressure,
            level: Level::round(43.0, 0),
        };
        let r = Item::Relation {
            subject: "P1".into(),
            predicate: Predicate::ConnectedTo,
            object: "J1".into(),
        };
        let a = Item::Attribute {
            subject: "P1".into(),
            class: "Pipe".into(),
            attribute: "diameter".into(),
            bin: 2,
        };
        assert_eq!(m.to_string(), "m(S1,pressure,43)");
        assert_eq!(r.to_string(), "r(P1,connected_to,J1)");
        assert_eq!(a.to_string(), "a(P1,diameter,2)");
        assert!(m < r && r < a);
        assert_eq!(r.instances().count(), 2);
    }
}
