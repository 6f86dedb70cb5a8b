//! Tied and incomplete rankings, read both as data records and as events
//! (the set of permutations consistent with them).
//!
//! Items are dense indices `0..n`. External labels only exist at the text
//! boundary: without explicit labels, index `i` prints as `i + 1`, so the
//! notation `3|2|1,4` over four items means the groups `{2}, {1}, {0, 3}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::ln_factorial;

/// Dense item index.
pub type Item = usize;

/// Default largest `n` for which consistent permutations are enumerated.
pub const ENUMERATION_BOUND: usize = 8;

/// The item set `{0, .., n-1}` with optional external labels.
#[derive(Debug, Clone)]
pub struct ItemUniverse {
    size: usize,
    labels: Option<Vec<String>>,
    lookup: HashMap<String, Item>,
}

impl PartialEq for ItemUniverse {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.labels == other.labels
    }
}

impl ItemUniverse {
    /// Universe of `size` items labelled `1..=size`.
    pub fn new(size: usize) -> Result<Arc<Self>> {
        if size == 0 {
            return Err(Error::EmptyUniverse);
        }
        Ok(Arc::new(ItemUniverse {
            size,
            labels: None,
            lookup: HashMap::new(),
        }))
    }

    pub fn with_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Arc<Self>> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        let mut lookup = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Arc::new(ItemUniverse {
            size: labels.len(),
            labels: Some(labels),
            lookup,
        }))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, item: Item) -> String {
        match &self.labels {
            Some(l) => l[item].clone(),
            None => (item + 1).to_string(),
        }
    }

    pub fn resolve(&self, label: &str) -> Result<Item> {
        match &self.labels {
            Some(_) => self
                .lookup
                .get(label)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(label.to_string())),
            None => match label.parse::<usize>() {
                Ok(v) if v >= 1 && v <= self.size => Ok(v - 1),
                _ => Err(Error::UnknownLabel(label.to_string())),
            },
        }
    }

    pub fn check(&self, item: Item) -> Result<()> {
        if item < self.size {
            Ok(())
        } else {
            Err(Error::ItemOutOfRange {
                item,
                size: self.size,
            })
        }
    }
}

pub(crate) fn same_universe(a: &Arc<ItemUniverse>, b: &Arc<ItemUniverse>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Location of a ranked item: its group, best position `tau` (1-based, among
/// ranked items) and the size `phi` of its tie group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub group: u32,
    pub tau: u32,
    pub phi: u32,
}

/// Where to put an item in [`TiedRanking::insert_item`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Join an existing group (0-based) as a tie.
    Group(usize),
    /// New singleton group at gap `0..=k`; gap 0 is the most preferred.
    Gap(usize),
    /// Join the group carrying this level, or open a singleton at the
    /// position that keeps levels decreasing.
    Level(i32),
}

/// An ordered sequence of disjoint, nonempty item groups, most preferred first.
#[derive(Debug, Clone)]
pub struct TiedRanking {
    universe: Arc<ItemUniverse>,
    groups: Vec<Vec<Item>>,
    levels: Option<Vec<i32>>,
    // offsets[j] = number of items in groups before j; len = k + 1
    offsets: Vec<u32>,
    // (item, group) sorted by item
    index: Vec<(Item, u32)>,
}

impl PartialEq for TiedRanking {
    fn eq(&self, other: &Self) -> bool {
        same_universe(&self.universe, &other.universe)
            && self.groups == other.groups
            && self.levels == other.levels
    }
}

impl TiedRanking {
    pub fn new(universe: &Arc<ItemUniverse>, groups: Vec<Vec<Item>>) -> Result<Self> {
        Self::build(universe, groups, None)
    }

    pub fn with_levels(
        universe: &Arc<ItemUniverse>,
        groups: Vec<Vec<Item>>,
        levels: Vec<i32>,
    ) -> Result<Self> {
        Self::build(universe, groups, Some(levels))
    }

    fn build(
        universe: &Arc<ItemUniverse>,
        mut groups: Vec<Vec<Item>>,
        levels: Option<Vec<i32>>,
    ) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::EmptyRanking);
        }
        if let Some(lv) = &levels {
            if lv.len() != groups.len() || lv.windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::InvalidLevels);
            }
        }
        let mut offsets = Vec::with_capacity(groups.len() + 1);
        let mut index = Vec::new();
        let mut total = 0u32;
        for (g, group) in groups.iter_mut().enumerate() {
            if group.is_empty() {
                return Err(Error::EmptyGroup);
            }
            group.sort_unstable();
            offsets.push(total);
            for &item in group.iter() {
                universe.check(item)?;
                index.push((item, g as u32));
            }
            total += group.len() as u32;
        }
        offsets.push(total);
        index.sort_unstable();
        if let Some(w) = index.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateItem(universe.label(w[0].0)));
        }
        Ok(TiedRanking {
            universe: Arc::clone(universe),
            groups,
            levels,
            offsets,
            index,
        })
    }

    /// The event with no constraints: every item in one group.
    pub fn unconstrained(universe: &Arc<ItemUniverse>) -> Self {
        Self::new(universe, vec![(0..universe.size()).collect()]).expect("nonempty universe")
    }

    /// A strict chain `items[0] < items[1] < ...` with all other items unranked.
    pub fn chain(universe: &Arc<ItemUniverse>, items: &[Item]) -> Result<Self> {
        Self::new(universe, items.iter().map(|&i| vec![i]).collect())
    }

    /// Parse `a,b | c | d` (or with `≺`) against `universe`.
    pub fn parse(text: &str, universe: &Arc<ItemUniverse>) -> Result<Self> {
        let mut groups = Vec::new();
        for part in text.split(['|', '≺']) {
            let mut group = Vec::new();
            for label in part.split(',') {
                let label = label.trim();
                if label.is_empty() {
                    continue;
                }
                group.push(universe.resolve(label)?);
            }
            if group.is_empty() {
                return Err(Error::EmptyGroup);
            }
            groups.push(group);
        }
        Self::new(universe, groups)
    }

    pub fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    pub fn n(&self) -> usize {
        self.universe.size()
    }

    pub fn groups(&self) -> &[Vec<Item>] {
        &self.groups
    }

    pub fn levels(&self) -> Option<&[i32]> {
        self.levels.as_deref()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Number of ranked items `k`.
    pub fn num_ranked(&self) -> usize {
        self.index.len()
    }

    /// Ranked items with their group, sorted by item.
    pub fn ranked_index(&self) -> &[(Item, u32)] {
        &self.index
    }

    pub fn ranked_items(&self) -> impl Iterator<Item = Item> + '_ {
        self.index.iter().map(|&(i, _)| i)
    }

    pub fn group_of(&self, item: Item) -> Option<usize> {
        self.index
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|p| self.index[p].1 as usize)
    }

    pub fn contains(&self, item: Item) -> bool {
        self.group_of(item).is_some()
    }

    pub fn placement_in_group(&self, group: u32) -> Placement {
        let g = group as usize;
        Placement {
            group,
            tau: self.offsets[g] + 1,
            phi: self.offsets[g + 1] - self.offsets[g],
        }
    }

    pub fn placement(&self, item: Item) -> Option<Placement> {
        self.group_of(item)
            .map(|g| self.placement_in_group(g as u32))
    }

    /// `(tau, phi)` for a ranked item, `None` for an unranked one.
    pub fn ranked_position(&self, item: Item) -> Result<Option<(u32, u32)>> {
        self.universe.check(item)?;
        Ok(self.placement(item).map(|p| (p.tau, p.phi)))
    }

    /// `ln |R|`, the log number of consistent permutations.
    pub fn log_consistent_count(&self) -> f64 {
        ln_factorial(self.n()) + self.log_fraction()
    }

    /// `ln(|R| / n!)`: the uniform probability of the event.
    pub fn log_fraction(&self) -> f64 {
        self.groups.iter().map(|g| ln_factorial(g.len())).sum::<f64>()
            - ln_factorial(self.num_ranked())
    }

    /// True iff every permutation consistent with `self` is consistent with `other`.
    pub fn implies(&self, other: &TiedRanking) -> Result<bool> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        // Consecutive groups of `other` must be strictly separated in `self`;
        // the rest follows by transitivity.
        for w in other.groups.windows(2) {
            let mut max_before = 0usize;
            for &i in &w[0] {
                match self.group_of(i) {
                    Some(g) => max_before = max_before.max(g),
                    None => return Ok(false),
                }
            }
            for &j in &w[1] {
                match self.group_of(j) {
                    Some(g) if g > max_before => {}
                    _ => return Ok(false),
                }
            }
        }
        Ok(true)
    }

    /// A copy with `item` inserted at `slot`.
    pub fn insert_item(&self, item: Item, slot: Slot) -> Result<TiedRanking> {
        self.universe.check(item)?;
        if self.contains(item) {
            return Err(Error::AlreadyRanked(item));
        }
        let mut groups = self.groups.clone();
        let mut levels = self.levels.clone();
        match slot {
            Slot::Group(g) => {
                groups
                    .get_mut(g)
                    .ok_or_else(|| Error::SlotOutOfRange(format!("group {g}")))?
                    .push(item);
            }
            Slot::Gap(g) => {
                if g > groups.len() {
                    return Err(Error::SlotOutOfRange(format!("gap {g}")));
                }
                if levels.is_some() {
                    return Err(Error::InvalidArgument(
                        "gap insertion into a levelled ranking; insert by level".into(),
                    ));
                }
                groups.insert(g, vec![item]);
            }
            Slot::Level(level) => {
                let lv = levels.as_mut().ok_or(Error::MissingLevels)?;
                match lv.iter().position(|&l| l <= level) {
                    Some(p) if lv[p] == level => groups[p].push(item),
                    Some(p) => {
                        lv.insert(p, level);
                        groups.insert(p, vec![item]);
                    }
                    None => {
                        lv.push(level);
                        groups.push(vec![item]);
                    }
                }
            }
        }
        Self::build(&self.universe, groups, levels)
    }

    /// Keep only the items for which `keep` holds; `None` if nothing is left.
    pub fn retain(&self, mut keep: impl FnMut(Item) -> bool) -> Option<TiedRanking> {
        let mut groups = Vec::new();
        let mut levels = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            let kept: Vec<Item> = group.iter().copied().filter(|&i| keep(i)).collect();
            if !kept.is_empty() {
                groups.push(kept);
                if let Some(lv) = &self.levels {
                    levels.push(lv[g]);
                }
            }
        }
        if groups.is_empty() {
            return None;
        }
        let levels = self.levels.as_ref().map(|_| levels);
        Some(Self::build(&self.universe, groups, levels).expect("subset of a valid ranking"))
    }

    /// Strips level labels.
    pub fn without_levels(&self) -> TiedRanking {
        let mut r = self.clone();
        r.levels = None;
        r
    }

    /// True if every group is a singleton and every universe item is ranked.
    pub fn is_full(&self) -> bool {
        self.num_ranked() == self.n() && self.groups.len() == self.n()
    }

    pub fn is_consistent(&self, perm: &Permutation) -> bool {
        if perm.len() != self.n() {
            return false;
        }
        for w in self.groups.windows(2) {
            let last = w[0].iter().map(|&i| perm.position(i)).max().unwrap();
            let first = w[1].iter().map(|&i| perm.position(i)).min().unwrap();
            if last >= first {
                return false;
            }
        }
        true
    }

    /// Calls `f` with the item order of each consistent permutation, in
    /// lexicographic order.
    pub fn for_each_consistent(&self, bound: usize, mut f: impl FnMut(&[u32])) -> Result<()> {
        let n = self.n();
        if n > bound {
            return Err(Error::TooLarge { n, bound });
        }
        let mut group_of = vec![u32::MAX; n];
        for &(i, g) in &self.index {
            group_of[i] = g;
        }
        let mut state = Walk {
            groups: &self.groups,
            group_of: &group_of,
            used: vec![false; n],
            order: Vec::with_capacity(n),
        };
        state.walk(0, self.groups[0].len(), &mut f);
        Ok(())
    }

    pub fn enumerate_consistent(&self, bound: usize) -> Result<Vec<Permutation>> {
        let mut out = Vec::new();
        self.for_each_consistent(bound, |order| {
            out.push(Permutation::from_order_unchecked(order.to_vec()))
        })?;
        Ok(out)
    }
}

struct Walk<'a> {
    groups: &'a [Vec<Item>],
    group_of: &'a [u32],
    used: Vec<bool>,
    order: Vec<u32>,
}

impl Walk<'_> {
    fn walk(&mut self, cur: usize, left: usize, f: &mut impl FnMut(&[u32])) {
        let n = self.group_of.len();
        if self.order.len() == n {
            f(&self.order);
            return;
        }
        for item in 0..n {
            if self.used[item] {
                continue;
            }
            let g = self.group_of[item];
            let (next_cur, next_left) = if g == u32::MAX {
                (cur, left)
            } else if g as usize == cur {
                if left == 1 {
                    let nc = cur + 1;
                    (nc, self.groups.get(nc).map_or(0, Vec::len))
                } else {
                    (cur, left - 1)
                }
            } else {
                continue;
            };
            self.used[item] = true;
            self.order.push(item as u32);
            self.walk(next_cur, next_left, f);
            self.order.pop();
            self.used[item] = false;
        }
    }
}

impl fmt::Display for TiedRanking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, group) in self.groups.iter().enumerate() {
            if g > 0 {
                f.write_str(" | ")?;
            }
            for (j, &item) in group.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(&self.universe.label(item))?;
            }
        }
        Ok(())
    }
}

/// A total order: `positions[item]` is the 0-based rank of `item`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    order: Vec<u32>,
    positions: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self::from_order_unchecked((0..n as u32).collect())
    }

    /// Items listed from most to least preferred.
    pub fn from_order(order: Vec<Item>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation(format!("{order:?}")));
            }
            seen[i] = true;
        }
        Ok(Self::from_order_unchecked(
            order.into_iter().map(|i| i as u32).collect(),
        ))
    }

    pub(crate) fn from_order_unchecked(order: Vec<u32>) -> Self {
        let mut positions = vec![0u32; order.len()];
        for (p, &i) in order.iter().enumerate() {
            positions[i as usize] = p as u32;
        }
        Permutation { order, positions }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 0-based position of `item`.
    pub fn position(&self, item: Item) -> usize {
        self.positions[item] as usize
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// The reversed order.
    pub fn reversed(&self) -> Self {
        let mut o = self.order.clone();
        o.reverse();
        Self::from_order_unchecked(o)
    }

    /// As a chain event over `universe`.
    pub fn to_ranking(&self, universe: &Arc<ItemUniverse>) -> Result<TiedRanking> {
        if universe.size() != self.len() {
            return Err(Error::SizeMismatch(universe.size(), self.len()));
        }
        TiedRanking::new(universe, self.order.iter().map(|&i| vec![i as usize]).collect())
    }

    /// Rank among all permutations of the same size in lexicographic order of `order`.
    pub fn lex_index(&self) -> usize {
        let n = self.len();
        let mut idx = 0usize;
        for p in 0..n {
            let smaller_later = self.order[p + 1..]
                .iter()
                .filter(|&&x| x < self.order[p])
                .count();
            idx = idx * (n - p) + smaller_later;
        }
        idx
    }
}

/// All permutations of `n` items in lexicographic order.
pub fn all_permutations(n: usize, bound: usize) -> Result<Vec<Permutation>> {
    let universe = ItemUniverse::new(n.max(1))?;
    if n == 0 {
        return Ok(vec![Permutation::identity(0)]);
    }
    TiedRanking::unconstrained(&universe).enumerate_consistent(bound)
}
