//! Level-wise Apriori enumeration over bitmasks. Slow and simple; used to
//! check the FP-Growth miner.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{check_ratio, min_count, Basket, FrequentItemsets, MineError};

pub const MAX_ITEMS: usize = 20;

/// Exhaustively counts candidate itemsets level by level. Refuses
/// databases with more than [`MAX_ITEMS`] distinct items.
pub fn apriori_oracle<B: Basket>(db: &[B], min_support: f64) -> Result<FrequentItemsets<B::Item>, MineError> {
    check_ratio("min_support", min_support)?;
    if db.is_empty() {
        return Err(MineError::EmptyDb);
    }
    let vocab: Vec<B::Item> = db
        .iter()
        .flat_map(|b| b.basket_items().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vocab.len() > MAX_ITEMS {
        return Err(MineError::TooManyItems(vocab.len()));
    }
    let masks: Vec<u32> = db
        .iter()
        .map(|b| {
            b.basket_items()
                .map(|i| 1u32 << vocab.binary_search(i).unwrap())
                .fold(0, |m, bit| m | bit)
        })
        .collect();
    let min = min_count(min_support, db.len());
    let support = |set: u32| masks.iter().filter(|&&m| m & set == set).count() as u64;

    let mut found: HashMap<u32, u64> = HashMap::new();
    let mut level: Vec<u32> = (0..vocab.len())
        .map(|i| 1u32 << i)
        .filter(|&s| {
            let c = support(s);
            (c >= min).then(|| found.insert(s, c)).is_some()
        })
        .collect();

    while !level.is_empty() {
        let frequent: HashSet<u32> = level.iter().copied().collect();
        let mut next = BTreeSet::new();
        for &set in &level {
            let top = 31 - set.leading_zeros();
            for i in (top + 1)..vocab.len() as u32 {
                let candidate = set | 1 << i;
                // every subset one item smaller must already be frequent
                let closed = (0..vocab.len())
                    .filter(|b| candidate >> b & 1 == 1)
                    .all(|b| frequent.contains(&(candidate & !(1 << b))));
                if closed {
                    next.insert(candidate);
                }
            }
        }
        level = next
            .into_iter()
            .filter(|&s| {
                let c = support(s);
                (c >= min).then(|| found.insert(s, c)).is_some()
            })
            .collect();
    }

    let sets = found
        .into_iter()
        .map(|(mask, c)| ((0..vocab.len() as u32).filter(|b| mask >> b & 1 == 1).collect(), c))
        .collect();
    Ok(FrequentItemsets::from_parts(vocab, sets, db.len(), min_support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn single_item() {
        let db = vec![BTreeSet::from(['a'])];
        let fis = apriori_oracle(&db, 1.0).unwrap();
        assert_eq!(fis.to_map(), BTreeMap::from([(vec!['a'], 1)]));
    }

    #[test]
    fn small_example() {
        let db: Vec<BTreeSet<char>> = ["ab", "ab", "ac"].iter().map(|r| r.chars().collect()).collect();
        let fis = apriori_oracle(&db, 0.5).unwrap();
        let expected = BTreeMap::from([(vec!['a'], 3), (vec!['b'], 2), (vec!['a', 'b'], 2)]);
        assert_eq!(fis.to_map(), expected);
    }

    #[test]
    fn refuses_wide_vocabularies() {
        let db = vec![(0..21).collect::<BTreeSet<u32>>()];
        assert_eq!(apriori_oracle(&db, 0.5).unwrap_err(), MineError::TooManyItems(21));
    }
}
