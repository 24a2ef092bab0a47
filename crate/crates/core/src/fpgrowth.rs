//! FP-Growth frequent itemset mining and association rule generation.
//!
//! Items are mapped to dense ids ranked by descending support (ties broken
//! by the item's own ordering), transactions are inserted into a prefix tree
//! in that rank order, and itemsets are mined bottom-up from conditional
//! pattern bases. Supports are kept as integer counts throughout; ratios are
//! only computed when rules are emitted.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use thiserror::Error;

use crate::item::{Item, Transaction};

pub mod oracle;

pub use oracle::apriori_oracle;

#[derive(Debug, Error, PartialEq)]
pub enum MineError {
    #[error("transaction database is empty")]
    EmptyDb,
    #[error("{name} must be in (0, 1], got {value}")]
    InvalidRatio { name: &'static str, value: f64 },
    #[error("{0} distinct items exceed the oracle limit of {max}", max = oracle::MAX_ITEMS)]
    TooManyItems(usize),
    #[error("more than {0} frequent itemsets; raise the support threshold or the limit")]
    TooManyItemsets(usize),
    #[error("more than {0} rules; raise the thresholds or the limit")]
    TooManyRules(usize),
}

/// Caps on the size of mining results. Itemset and rule counts can grow
/// exponentially with the number of items that co-occur everywhere, so
/// long-running callers should bound them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiningLimits {
    pub max_itemsets: usize,
    pub max_rules: usize,
}

impl MiningLimits {
    pub const UNBOUNDED: MiningLimits = MiningLimits {
        max_itemsets: usize::MAX,
        max_rules: usize::MAX,
    };
}

impl Default for MiningLimits {
    fn default() -> Self {
        MiningLimits::UNBOUNDED
    }
}

/// Shared countdown across worker threads.
struct Budget {
    used: AtomicUsize,
    limit: usize,
}

impl Budget {
    fn new(limit: usize) -> Budget {
        Budget {
            used: AtomicUsize::new(0),
            limit,
        }
    }

    /// Claims `n` more slots; `false` once the limit is passed.
    fn take(&self, n: usize) -> bool {
        self.used.fetch_add(n, AtomicOrdering::Relaxed).saturating_add(n) <= self.limit
    }

    fn exceeded(&self) -> bool {
        self.used.load(AtomicOrdering::Relaxed) > self.limit
    }
}

/// Anything that can be read as a set of items.
pub trait Basket {
    type Item: Ord + Clone;

    fn basket_items(&self) -> impl Iterator<Item = &Self::Item> + '_;
}

impl<T: Ord + Clone> Basket for BTreeSet<T> {
    type Item = T;

    fn basket_items(&self) -> impl Iterator<Item = &T> + '_ {
        self.iter()
    }
}

impl<T: Ord + Clone> Basket for Vec<T> {
    type Item = T;

    fn basket_items(&self) -> impl Iterator<Item = &T> + '_ {
        self.iter()
    }
}

impl Basket for Transaction {
    type Item = Item;

    fn basket_items(&self) -> impl Iterator<Item = &Item> + '_ {
        self.items.iter()
    }
}

impl<B: Basket> Basket for &B {
    type Item = B::Item;

    fn basket_items(&self) -> impl Iterator<Item = &B::Item> + '_ {
        (**self).basket_items()
    }
}

pub(crate) fn check_ratio(name: &'static str, value: f64) -> Result<(), MineError> {
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(MineError::InvalidRatio { name, value })
    }
}

/// Smallest count meeting `min_support` over `transactions`, i.e.
/// `ceil(min_support * transactions)`. Products within 1e-9 of an integer
/// are snapped to it so that e.g. 0.2 * 365 gives 73, not 74.
pub fn min_count(min_support: f64, transactions: usize) -> u64 {
    let exact = min_support * transactions as f64;
    let nearest = exact.round();
    let c = if (exact - nearest).abs() < 1e-9 { nearest } else { exact.ceil() };
    (c as u64).max(1)
}

#[derive(Debug, Clone)]
struct Node {
    rank: u32,
    count: u64,
    parent: u32,
    children: Vec<(u32, u32)>,
    next: Option<u32>,
}

#[derive(Debug, Clone, Default)]
struct Header {
    support: u64,
    head: Option<u32>,
    tail: Option<u32>,
}

/// Prefix tree over ranks. `labels[rank]` is the global item id of a rank.
#[derive(Debug, Clone)]
struct RankTree {
    nodes: Vec<Node>,
    header: Vec<Header>,
    labels: Vec<u32>,
}

const ROOT: u32 = 0;

impl RankTree {
    fn new(labels: Vec<u32>) -> RankTree {
        RankTree {
            nodes: vec![Node {
                rank: u32::MAX,
                count: 0,
                parent: ROOT,
                children: Vec::new(),
                next: None,
            }],
            header: vec![Header::default(); labels.len()],
            labels,
        }
    }

    /// `ranks` must be strictly increasing.
    fn insert(&mut self, ranks: &[u32], count: u64) {
        let mut at = ROOT;
        for &rank in ranks {
            let found = self.nodes[at as usize]
                .children
                .iter()
                .find(|(r, _)| *r == rank)
                .map(|&(_, n)| n);
            let child = match found {
                Some(n) => n,
                None => {
                    let n = self.nodes.len() as u32;
                    self.nodes.push(Node {
                        rank,
                        count: 0,
                        parent: at,
                        children: Vec::new(),
                        next: None,
                    });
                    self.nodes[at as usize].children.push((rank, n));
                    let h = &mut self.header[rank as usize];
                    match h.tail {
                        Some(t) => self.nodes[t as usize].next = Some(n),
                        None => h.head = Some(n),
                    }
                    h.tail = Some(n);
                    n
                }
            };
            self.nodes[child as usize].count += count;
            self.header[rank as usize].support += count;
            at = child;
        }
    }

    fn chain(&self, rank: usize) -> impl Iterator<Item = &Node> + '_ {
        std::iter::successors(self.header[rank].head, move |&n| self.nodes[n as usize].next)
            .map(move |n| &self.nodes[n as usize])
    }

    /// Prefix paths (as global ids, root side first) ending above each node
    /// of `rank`'s chain.
    fn pattern_base(&self, rank: usize) -> Vec<(Vec<u32>, u64)> {
        self.chain(rank)
            .filter_map(|node| {
                let mut path = Vec::new();
                let mut p = node.parent;
                while p != ROOT {
                    let n = &self.nodes[p as usize];
                    path.push(self.labels[n.rank as usize]);
                    p = n.parent;
                }
                path.reverse();
                (!path.is_empty()).then_some((path, node.count))
            })
            .collect()
    }

    /// Tree of a conditional pattern base, keeping items with support at
    /// least `min`. Ranks follow descending support then global id.
    fn conditional(base: &[(Vec<u32>, u64)], min: u64) -> Option<RankTree> {
        let mut support: HashMap<u32, u64> = HashMap::new();
        for (path, count) in base {
            for &g in path {
                *support.entry(g).or_default() += count;
            }
        }
        let mut kept: Vec<(u32, u64)> = support.into_iter().filter(|&(_, s)| s >= min).collect();
        if kept.is_empty() {
            return None;
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let rank_of: HashMap<u32, u32> = kept.iter().enumerate().map(|(r, &(g, _))| (g, r as u32)).collect();
        let mut tree = RankTree::new(kept.iter().map(|&(g, _)| g).collect());
        let mut ranks = Vec::new();
        for (path, count) in base {
            ranks.clear();
            ranks.extend(path.iter().filter_map(|g| rank_of.get(g).copied()));
            ranks.sort_unstable();
            tree.insert(&ranks, *count);
        }
        Some(tree)
    }

    fn mine_rank(&self, rank: usize, min: u64, suffix: &[u32], out: &mut Vec<(Vec<u32>, u64)>, budget: &Budget) {
        if !budget.take(1) {
            return;
        }
        let mut itemset = Vec::with_capacity(suffix.len() + 1);
        itemset.extend_from_slice(suffix);
        itemset.push(self.labels[rank]);
        out.push((itemset.clone(), self.header[rank].support));
        let base = self.pattern_base(rank);
        if let Some(cond) = RankTree::conditional(&base, min) {
            cond.mine_all(min, &itemset, out, budget);
        }
    }

    fn mine_all(&self, min: u64, suffix: &[u32], out: &mut Vec<(Vec<u32>, u64)>, budget: &Budget) {
        for rank in (0..self.header.len()).rev() {
            if budget.exceeded() {
                return;
            }
            self.mine_rank(rank, min, suffix, out, budget);
        }
    }
}

/// FP-tree over a transaction database, with the vocabulary of frequent
/// items.
#[derive(Debug, Clone)]
pub struct FpTree<T> {
    /// Frequent items by rank (descending support).
    items: Vec<T>,
    tree: RankTree,
    transactions: usize,
    min_support: f64,
    min_count: u64,
}

/// Counts items, prunes the infrequent ones and inserts every transaction.
pub fn build_fp_tree<B: Basket>(db: &[B], min_support: f64) -> Result<FpTree<B::Item>, MineError> {
    check_ratio("min_support", min_support)?;
    if db.is_empty() {
        return Err(MineError::EmptyDb);
    }
    let min = min_count(min_support, db.len());

    let mut counts: BTreeMap<&B::Item, u64> = BTreeMap::new();
    for basket in db {
        // Baskets may repeat items (e.g. a Vec); count each once.
        let distinct: BTreeSet<&B::Item> = basket.basket_items().collect();
        for item in distinct {
            *counts.entry(item).or_default() += 1;
        }
    }
    let mut frequent: Vec<(&B::Item, u64)> = counts.into_iter().filter(|&(_, c)| c >= min).collect();
    // Stable sort keeps item order among equal supports.
    frequent.sort_by(|a, b| b.1.cmp(&a.1));
    let rank_of: BTreeMap<&B::Item, u32> = frequent.iter().enumerate().map(|(r, (i, _))| (*i, r as u32)).collect();

    let mut tree = RankTree::new((0..frequent.len() as u32).collect());
    let mut ranks = Vec::new();
    for basket in db {
        ranks.clear();
        ranks.extend(basket.basket_items().filter_map(|i| rank_of.get(i).copied()));
        ranks.sort_unstable();
        ranks.dedup();
        if !ranks.is_empty() {
            tree.insert(&ranks, 1);
        }
    }
    Ok(FpTree {
        items: frequent.into_iter().map(|(i, _)| i.clone()).collect(),
        tree,
        transactions: db.len(),
        min_support,
        min_count: min,
    })
}

impl<T: Ord + Clone> FpTree<T> {
    /// Header table as `(item, total support)` in header order.
    pub fn header(&self) -> Vec<(&T, u64)> {
        self.items
            .iter()
            .zip(&self.tree.header)
            .map(|(i, h)| (i, h.support))
            .collect()
    }

    /// Tree nodes, excluding the root.
    pub fn node_count(&self) -> usize {
        self.tree.nodes.len() - 1
    }

    pub fn transactions(&self) -> usize {
        self.transactions
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Counts along each item's node chain, in header order.
    pub fn chain_counts(&self) -> Vec<Vec<u64>> {
        (0..self.items.len())
            .map(|r| self.tree.chain(r).map(|n| n.count).collect())
            .collect()
    }

    /// Every root-to-leaf path as `(items, leaf count)`.
    pub fn paths(&self) -> Vec<(Vec<&T>, u64)> {
        let mut out = Vec::new();
        for (idx, node) in self.tree.nodes.iter().enumerate().skip(1) {
            if !node.children.is_empty() {
                continue;
            }
            let mut path = Vec::new();
            let mut at = idx as u32;
            while at != ROOT {
                let n = &self.tree.nodes[at as usize];
                path.push(&self.items[n.rank as usize]);
                at = n.parent;
            }
            path.reverse();
            out.push((path, node.count));
        }
        out
    }

    /// `true` when every root-to-node path lists items in strictly
    /// descending header order.
    pub fn paths_follow_header_order(&self) -> bool {
        self.tree
            .nodes
            .iter()
            .skip(1)
            .all(|n| n.parent == ROOT || self.tree.nodes[n.parent as usize].rank < n.rank)
    }
}

/// Frequent itemsets with exact support counts.
#[derive(Debug, Clone)]
pub struct FrequentItemsets<T> {
    items: Vec<T>,
    /// Keys are id lists sorted ascending.
    sets: HashMap<Vec<u32>, u64>,
    transactions: usize,
    min_support: f64,
}

impl<T: Ord + Clone> FrequentItemsets<T> {
    pub(crate) fn from_parts(items: Vec<T>, sets: HashMap<Vec<u32>, u64>, transactions: usize, min_support: f64) -> Self {
        FrequentItemsets {
            items,
            sets,
            transactions,
            min_support,
        }
    }

    pub fn min_support(&self) -> f64 {
        self.min_support
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn transactions(&self) -> usize {
        self.transactions
    }

    fn decode(&self, ids: &[u32]) -> Vec<T> {
        let mut v: Vec<T> = ids.iter().map(|&i| self.items[i as usize].clone()).collect();
        v.sort();
        v
    }

    /// Support count of an itemset, if it is frequent.
    pub fn support_count(&self, itemset: &[T]) -> Option<u64> {
        let mut ids = Vec::with_capacity(itemset.len());
        for item in itemset {
            ids.push(self.items.iter().position(|i| i == item)? as u32);
        }
        ids.sort_unstable();
        ids.dedup();
        self.sets.get(&ids).copied()
    }

    /// Sorted itemset to count.
    pub fn to_map(&self) -> BTreeMap<Vec<T>, u64> {
        self.sets.iter().map(|(k, &c)| (self.decode(k), c)).collect()
    }
}

/// Mines every itemset whose support count reaches the tree's threshold.
/// Top-level header entries are mined in parallel; the result does not
/// depend on scheduling.
pub fn mine_frequent<T: Ord + Clone + Send + Sync>(tree: &FpTree<T>) -> FrequentItemsets<T> {
    mine_frequent_bounded(tree, usize::MAX).expect("unbounded")
}

/// [`mine_frequent`], giving up once more than `max_itemsets` itemsets
/// have been found.
pub fn mine_frequent_bounded<T: Ord + Clone + Send + Sync>(
    tree: &FpTree<T>,
    max_itemsets: usize,
) -> Result<FrequentItemsets<T>, MineError> {
    let min = tree.min_count;
    let budget = Budget::new(max_itemsets);
    let parts: Vec<Vec<(Vec<u32>, u64)>> = (0..tree.items.len())
        .into_par_iter()
        .map(|rank| {
            let mut out = Vec::new();
            tree.tree.mine_rank(rank, min, &[], &mut out, &budget);
            out
        })
        .collect();
    if budget.exceeded() {
        return Err(MineError::TooManyItemsets(max_itemsets));
    }
    let sets = parts
        .into_iter()
        .flatten()
        .map(|(mut ids, c)| {
            ids.sort_unstable();
            (ids, c)
        })
        .collect();
    Ok(FrequentItemsets::from_parts(tree.items.clone(), sets, tree.transactions, tree.min_support))
}

/// Builds the tree and mines it.
pub fn frequent_itemsets<B>(db: &[B], min_support: f64) -> Result<FrequentItemsets<B::Item>, MineError>
where
    B: Basket,
    B::Item: Send + Sync,
{
    Ok(mine_frequent(&build_fp_tree(db, min_support)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationRule<T> {
    /// Sorted, non-empty, disjoint from the consequent.
    pub antecedent: Vec<T>,
    pub consequent: Vec<T>,
    /// Transactions containing antecedent and consequent.
    pub support_count: u64,
    /// Transactions containing the antecedent.
    pub antecedent_count: u64,
    pub support: f64,
    pub confidence: f64,
    /// Filled in by scoring; `None` straight out of rule generation.
    pub semantic_expressivity: Option<f64>,
}

impl<T> AssociationRule<T> {
    /// Exact comparison of confidences via cross multiplication.
    fn cmp_confidence(&self, other: &Self) -> Ordering {
        let a = self.support_count as u128 * other.antecedent_count as u128;
        let b = other.support_count as u128 * self.antecedent_count as u128;
        a.cmp(&b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet<T> {
    pub rules: Vec<AssociationRule<T>>,
    pub transactions: usize,
    pub min_support: f64,
    pub min_confidence: f64,
}

impl<T> RuleSet<T> {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Emits `X -> Z \ X` for every frequent `Z` with at least two items and
/// every non-empty proper subset `X` whose confidence reaches
/// `min_confidence`. Rules are ordered by descending support, then
/// descending confidence, then antecedent and consequent.
pub fn generate_rules<T>(
    fis: &FrequentItemsets<T>,
    min_confidence: f64,
) -> Result<RuleSet<T>, MineError>
where
    T: Ord + Clone + Send + Sync,
{
    generate_rules_bounded(fis, min_confidence, usize::MAX)
}

/// [`generate_rules`], giving up once more than `max_rules` rules pass the
/// confidence threshold.
pub fn generate_rules_bounded<T>(
    fis: &FrequentItemsets<T>,
    min_confidence: f64,
    max_rules: usize,
) -> Result<RuleSet<T>, MineError>
where
    T: Ord + Clone + Send + Sync,
{
    check_ratio("min_confidence", min_confidence)?;
    let budget = Budget::new(max_rules);
    let n = fis.transactions as f64;
    let sets: Vec<(&Vec<u32>, u64)> = fis.sets.iter().filter(|(k, _)| k.len() >= 2).map(|(k, &c)| (k, c)).collect();

    let mut rules: Vec<AssociationRule<T>> = sets
        .par_iter()
        .flat_map_iter(|&(ids, z)| {
            assert!(ids.len() < 64, "itemset of {} items is too long to split", ids.len());
            let full: u64 = (1u64 << ids.len()) - 1;
            let mut out = Vec::new();
            let mut antecedent = Vec::with_capacity(ids.len());
            let mut consequent = Vec::with_capacity(ids.len());
            for mask in 1..full {
                if budget.exceeded() {
                    break;
                }
                antecedent.clear();
                consequent.clear();
                for (bit, &id) in ids.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        antecedent.push(id);
                    } else {
                        consequent.push(id);
                    }
                }
                let x = *fis
                    .sets
                    .get(&antecedent)
                    .expect("subsets of frequent itemsets are frequent");
                let confidence = z as f64 / x as f64;
                if confidence >= min_confidence && budget.take(1) {
                    out.push(AssociationRule {
                        antecedent: fis.decode(&antecedent),
                        consequent: fis.decode(&consequent),
                        support_count: z,
                        antecedent_count: x,
                        support: z as f64 / n,
                        confidence,
                        semantic_expressivity: None,
                    });
                }
            }
            out
        })
        .collect();
    if budget.exceeded() {
        return Err(MineError::TooManyRules(max_rules));
    }

    rules.par_sort_unstable_by(|a, b| {
        b.support_count
            .cmp(&a.support_count)
            .then_with(|| b.cmp_confidence(a))
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    Ok(RuleSet {
        rules,
        transactions: fis.transactions,
        min_support: fis.min_support,
        min_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(rows: &[&str]) -> Vec<BTreeSet<char>> {
        rows.iter().map(|r| r.chars().collect()).collect()
    }

    #[test]
    fn threshold_snaps_float_noise() {
        assert_eq!(min_count(0.2, 365), 73);
        assert_eq!(min_count(0.3, 10), 3);
        assert_eq!(min_count(0.5, 3), 2);
        assert_eq!(min_count(0.21, 10), 3);
        assert_eq!(min_count(1.0, 7), 7);
        assert_eq!(min_count(0.01, 5), 1);
    }

    #[test]
    fn header_prunes_infrequent() {
        let tree = build_fp_tree(&db(&["ab", "ab", "ac"]), 0.5).unwrap();
        assert_eq!(tree.header(), vec![(&'a', 3), (&'b', 2)]);
        assert_eq!(tree.min_count(), 2);
        // a:3 -> b:2, the third transaction only contributes a
        assert_eq!(tree.node_count(), 2);
        assert_eq!(tree.chain_counts(), vec![vec![3], vec![2]]);
    }

    #[test]
    fn single_transaction_single_node() {
        let tree = build_fp_tree(&db(&["a"]), 1.0).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert_eq!(tree.paths(), vec![(vec![&'a'], 1)]);
    }

    #[test]
    fn identical_transactions_share_one_path() {
        let tree = build_fp_tree(&db(&["abc", "abc", "abc", "abc"]), 0.5).unwrap();
        assert_eq!(tree.node_count(), 3);
        assert_eq!(tree.paths(), vec![(vec![&'a', &'b', &'c'], 4)]);
        assert!(tree.chain_counts().iter().all(|c| c == &vec![4]));
    }

    #[test]
    fn empty_db_and_bad_ratio() {
        let empty: Vec<BTreeSet<char>> = vec![];
        assert_eq!(build_fp_tree(&empty, 0.5).unwrap_err(), MineError::EmptyDb);
        assert!(matches!(
            build_fp_tree(&db(&["a"]), 0.0),
            Err(MineError::InvalidRatio { .. })
        ));
        assert!(build_fp_tree(&db(&["a"]), 1.5).is_err());
        assert!(build_fp_tree(&db(&["a"]), f64::NAN).is_err());
    }

    #[test]
    fn mines_small_example() {
        let fis = frequent_itemsets(&db(&["ab", "ab", "ac"]), 0.5).unwrap();
        let expected: BTreeMap<Vec<char>, u64> =
            [(vec!['a'], 3), (vec!['b'], 2), (vec!['a', 'b'], 2)].into_iter().collect();
        assert_eq!(fis.to_map(), expected);
        assert_eq!(fis.support_count(&['b', 'a']), Some(2));
        assert_eq!(fis.support_count(&['c']), None);
    }

    #[test]
    fn full_support_keeps_common_item() {
        let fis = frequent_itemsets(&db(&["xa", "xb", "xc"]), 1.0).unwrap();
        assert_eq!(fis.to_map(), [(vec!['x'], 3)].into_iter().collect());
    }

    #[test]
    fn rules_for_small_example() {
        let fis = frequent_itemsets(&db(&["ab", "ab", "ac"]), 0.5).unwrap();
        let rules = generate_rules(&fis, 0.9).unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules.rules[0];
        assert_eq!((r.antecedent.as_slice(), r.consequent.as_slice()), (&['b'][..], &['a'][..]));
        assert_eq!(r.confidence, 1.0);
        assert_eq!(r.support, 2.0 / 3.0);

        let loose = generate_rules(&fis, 0.6).unwrap();
        assert_eq!(loose.len(), 2);
        assert_eq!(loose.rules[1].confidence, 2.0 / 3.0);
    }

    #[test]
    fn confidence_one_rules_are_exact() {
        let fis = frequent_itemsets(&db(&["abc", "ab", "abd", "bc", "c"]), 0.2).unwrap();
        let rules = generate_rules(&fis, 1.0).unwrap();
        assert!(!rules.is_empty());
        assert!(rules.rules.iter().all(|r| r.confidence == 1.0));
    }

    #[test]
    fn limits_stop_runaway_results() {
        let rows = ["abcdef"; 4];
        let tree = build_fp_tree(&db(&rows), 0.5).unwrap();
        assert_eq!(mine_frequent_bounded(&tree, 63).unwrap().len(), 63);
        assert_eq!(mine_frequent_bounded(&tree, 62).unwrap_err(), MineError::TooManyItemsets(62));
        let fis = mine_frequent(&tree);
        // 3^6 - 2^7 + 1 rules among six always-present items
        assert_eq!(generate_rules_bounded(&fis, 0.5, 602).unwrap().len(), 602);
        assert_eq!(generate_rules_bounded(&fis, 0.5, 601).unwrap_err(), MineError::TooManyRules(601));
    }

    #[test]
    fn no_pairs_no_rules() {
        let fis = frequent_itemsets(&db(&["a", "b", "c"]), 0.3).unwrap();
        assert!(generate_rules(&fis, 0.5).unwrap().is_empty());
    }

    #[test]
    fn duplicate_items_in_vec_basket_count_once() {
        let rows: Vec<Vec<char>> = vec![vec!['a', 'a', 'b'], vec!['a']];
        let fis = frequent_itemsets(&rows, 0.5).unwrap();
        assert_eq!(fis.support_count(&['a']), Some(2));
        assert_eq!(fis.support_count(&['a', 'b']), Some(1));
    }

    #[test]
    fn rule_ordering() {
        let fis = frequent_itemsets(&db(&["abc", "abc", "ab", "c"]), 0.25).unwrap();
        let rules = generate_rules(&fis, 0.5).unwrap();
        for w in rules.rules.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(a.support_count >= b.support_count);
            if a.support_count == b.support_count {
                assert!(a.confidence >= b.confidence);
            }
        }
    }
}
