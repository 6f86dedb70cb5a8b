//! Association rules read off the estimated ranking distribution: pair rules
//! scored by mutual information, lift rules over top and bottom positions, and
//! the affinity graph.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::EventScorer;
use crate::numeric::CompensatedSum;
use crate::ranking::{all_permutations, Item, ItemUniverse, TiedRanking};

/// Largest subset [`mine_mi_rules`] accepts without `allow_large`.
pub const MI_SUBSET_LIMIT: usize = 60;

/// Joint distribution of the orders of two disjoint item pairs. Cells are
/// row-major: `(i<j, k<l), (i<j, l<k), (j<i, k<l), (j<i, l<k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPairTable {
    pub quad: [Item; 4],
    pub cells: [f64; 4],
}

impl JointPairTable {
    pub fn rows(&self) -> [f64; 2] {
        [self.cells[0] + self.cells[1], self.cells[2] + self.cells[3]]
    }

    pub fn cols(&self) -> [f64; 2] {
        [self.cells[0] + self.cells[2], self.cells[1] + self.cells[3]]
    }

    /// Negative cells set to zero and the rest rescaled to sum to one. The
    /// flag reports whether anything was clamped.
    pub fn renormalized(&self) -> (JointPairTable, bool) {
        let clamped = self.cells.iter().any(|&c| c < 0.0);
        let mut cells = self.cells.map(|c| c.max(0.0));
        let total: f64 = cells.iter().sum();
        if total > 0.0 {
            cells.iter_mut().for_each(|c| *c /= total);
        } else {
            cells = [0.25; 4];
        }
        (
            JointPairTable {
                quad: self.quad,
                cells,
            },
            clamped,
        )
    }

    /// `p log(p / (row col))` per cell, zero where `p = 0`.
    pub fn pointwise(&self) -> [f64; 4] {
        let (rows, cols) = (self.rows(), self.cols());
        let mut out = [0.0; 4];
        for (c, slot) in out.iter_mut().enumerate() {
            let p = self.cells[c];
            if p > 0.0 {
                *slot = p * (p / (rows[c / 2] * cols[c % 2])).ln();
            }
        }
        out
    }
}

/// Sum the 24 total orders of `i, j, k, l` (other items unranked) into the
/// four cells.
pub fn joint_pair_table<S: EventScorer + ?Sized>(
    scorer: &S,
    i: Item,
    j: Item,
    k: Item,
    l: Item,
) -> Result<JointPairTable> {
    let quad = [i, j, k, l];
    let universe = scorer.universe();
    for (x, &a) in quad.iter().enumerate() {
        universe.check(a)?;
        if quad[..x].contains(&a) {
            return Err(Error::InvalidArgument(format!(
                "repeated item {} in quadruple",
                universe.label(a)
            )));
        }
    }
    let mut cells = [CompensatedSum::new(); 4];
    for perm in all_permutations(4, 4)? {
        let order: Vec<Item> = perm.order().iter().map(|&p| quad[p as usize]).collect();
        let a = usize::from(perm.position(0) > perm.position(1));
        let b = usize::from(perm.position(2) > perm.position(3));
        cells[2 * a + b].add(scorer.event_prob(&TiedRanking::chain(universe, &order)?)?);
    }
    Ok(JointPairTable {
        quad,
        cells: cells.map(|c| c.value()),
    })
}

/// Plug-in mutual information (natural log) of the renormalized table.
pub fn mutual_information(table: &JointPairTable) -> f64 {
    let (t, _) = table.renormalized();
    // tiny negative round-off of an independent table
    t.pointwise().iter().sum::<f64>().max(0.0)
}

/// `a before b`.
pub type Precedence = (Item, Item);

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub antecedent: Precedence,
    pub consequent: Precedence,
    pub score: f64,
}

impl Rule {
    pub fn describe(&self, universe: &ItemUniverse) -> String {
        let l = |i| universe.label(i);
        format!(
            "{} < {} => {} < {}",
            l(self.antecedent.0),
            l(self.antecedent.1),
            l(self.consequent.0),
            l(self.consequent.1)
        )
    }
}

fn sorted_subset(universe: &ItemUniverse, subset: &[Item]) -> Result<Vec<Item>> {
    let mut v = subset.to_vec();
    v.sort_unstable();
    v.dedup();
    for &i in &v {
        universe.check(i)?;
    }
    Ok(v)
}

/// Oriented rule for a scored table: the cell with the largest pointwise
/// contribution fixes the direction of both pairs.
pub fn orient(table: &JointPairTable) -> Rule {
    let (t, _) = table.renormalized();
    let pw = t.pointwise();
    let mut best = 0;
    for c in 1..4 {
        if pw[c] > pw[best] {
            best = c;
        }
    }
    let [i, j, k, l] = table.quad;
    Rule {
        antecedent: if best / 2 == 0 { (i, j) } else { (j, i) },
        consequent: if best % 2 == 0 { (k, l) } else { (l, k) },
        score: mutual_information(table),
    }
}

/// Score every pair of disjoint item pairs in `subset` by mutual information
/// and return the `top_t` best, oriented. Order: score descending, then the
/// sorted quadruple ascending. The result does not depend on the order of
/// `subset`.
pub fn mine_mi_rules<S: EventScorer + ?Sized>(
    scorer: &S,
    subset: &[Item],
    top_t: usize,
    allow_large: bool,
) -> Result<Vec<Rule>> {
    let v = sorted_subset(scorer.universe(), subset)?;
    if v.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 items, got {}",
            v.len()
        )));
    }
    if v.len() > MI_SUBSET_LIMIT && !allow_large {
        return Err(Error::InvalidArgument(format!(
            "{} items exceeds the {MI_SUBSET_LIMIT}-item limit for exhaustive quadruple search",
            v.len()
        )));
    }
    let mut pairs = Vec::new();
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            pairs.push((v[a], v[b]));
        }
    }
    let mut scored: Vec<(f64, [Item; 4], JointPairTable)> = (0..pairs.len())
        .into_par_iter()
        .map(|p| -> Result<Vec<_>> {
            let (i, j) = pairs[p];
            let mut out = Vec::new();
            for &(k, l) in &pairs[p + 1..] {
                if k == i || k == j || l == i || l == j {
                    continue;
                }
                let t = joint_pair_table(scorer, i, j, k, l)?;
                out.push((mutual_information(&t), [i, j, k, l], t));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(top_t).map(|(_, _, t)| orient(&t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    /// `i` ranked first and `j` second.
    Top2,
    /// `i` ranked first and `j` last.
    TopBottom,
}

fn rest(v: &[Item], skip: &[Item]) -> Vec<Item> {
    v.iter().copied().filter(|x| !skip.contains(x)).collect()
}

fn groups_event(universe: &std::sync::Arc<ItemUniverse>, groups: Vec<Vec<Item>>) -> Result<TiedRanking> {
    TiedRanking::new(universe, groups.into_iter().filter(|g| !g.is_empty()).collect())
}

/// `p(i first, j second-or-last) / (p(i first) p(j second-or-last))`, with
/// positions taken within `subset` and other items unranked. The marginal of
/// `j` second sums over which item comes first.
pub fn lift_score<S: EventScorer + ?Sized>(
    scorer: &S,
    i: Item,
    j: Item,
    mode: LiftMode,
    subset: &[Item],
) -> Result<f64> {
    let u = scorer.universe();
    let v = sorted_subset(u, subset)?;
    if i == j || !v.contains(&i) || !v.contains(&j) {
        return Err(Error::InvalidArgument("need two distinct subset items".into()));
    }
    let p = |groups| scorer.event_prob(&groups_event(u, groups)?);
    let first_i = p(vec![vec![i], rest(&v, &[i])])?;
    let (joint, marg_j) = match mode {
        LiftMode::Top2 => {
            let joint = p(vec![vec![i], vec![j], rest(&v, &[i, j])])?;
            let mut second = CompensatedSum::new();
            for &x in &v {
                if x != j {
                    second.add(p(vec![vec![x], vec![j], rest(&v, &[x, j])])?);
                }
            }
            (joint, second.value())
        }
        LiftMode::TopBottom => (
            p(vec![vec![i], rest(&v, &[i, j]), vec![j]])?,
            p(vec![rest(&v, &[j]), vec![j]])?,
        ),
    };
    let den = first_i * marg_j;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(joint / den)
}

/// Lift of every ordered pair in a subset, sharing the marginals.
#[derive(Debug, Clone)]
pub struct LiftTable {
    pub subset: Vec<Item>,
    pub mode: LiftMode,
    // row-major over subset positions; diagonal NaN
    lifts: Vec<f64>,
}

impl LiftTable {
    pub fn build<S: EventScorer + ?Sized>(scorer: &S, subset: &[Item], mode: LiftMode) -> Result<Self> {
        let u = scorer.universe();
        let v = sorted_subset(u, subset)?;
        let s = v.len();
        if s < 2 {
            return Err(Error::InvalidArgument("need at least 2 items".into()));
        }
        let p = |groups| scorer.event_prob(&groups_event(u, groups)?);
        let rows: Vec<(f64, f64, Vec<f64>)> = (0..s)
            .into_par_iter()
            .map(|a| -> Result<_> {
                let i = v[a];
                let first = p(vec![vec![i], rest(&v, &[i])])?;
                let last = p(vec![rest(&v, &[i]), vec![i]])?;
                let joints = (0..s)
                    .map(|b| {
                        if a == b {
                            return Ok(0.0);
                        }
                        let j = v[b];
                        match mode {
                            LiftMode::Top2 => p(vec![vec![i], vec![j], rest(&v, &[i, j])]),
                            LiftMode::TopBottom => p(vec![vec![i], rest(&v, &[i, j]), vec![j]]),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((first, last, joints))
            })
            .collect::<Result<_>>()?;
        let marg_j: Vec<f64> = (0..s)
            .map(|b| match mode {
                LiftMode::Top2 => (0..s).map(|a| rows[a].2[b]).collect::<CompensatedSum>().value(),
                LiftMode::TopBottom => rows[b].1,
            })
            .collect();
        let mut lifts = vec![f64::NAN; s * s];
        for a in 0..s {
            for b in 0..s {
                if a != b {
                    let den = rows[a].0 * marg_j[b];
                    if !(den > 0.0) {
                        return Err(Error::NonPositiveDenominator(den));
                    }
                    lifts[a * s + b] = rows[a].2[b] / den;
                }
            }
        }
        Ok(LiftTable {
            subset: v,
            mode,
            lifts,
        })
    }

    pub fn lift(&self, i: Item, j: Item) -> Option<f64> {
        let a = self.subset.binary_search(&i).ok()?;
        let b = self.subset.binary_search(&j).ok()?;
        (a != b).then(|| self.lifts[a * self.subset.len() + b])
    }

    /// Ordered pairs by lift descending, then by `(i, j)`.
    pub fn top(&self, top_t: usize) -> Vec<(Item, Item, f64)> {
        let s = self.subset.len();
        let mut all: Vec<(Item, Item, f64)> = Vec::with_capacity(s * s);
        for a in 0..s {
            for b in 0..s {
                if a != b {
                    all.push((self.subset[a], self.subset[b], self.lifts[a * s + b]));
                }
            }
        }
        all.sort_by(|x, y| y.2.total_cmp(&x.2).then_with(|| (x.0, x.1).cmp(&(y.0, y.1))));
        all.truncate(top_t);
        all
    }
}

/// Top lift rules `i first => j second` (or last).
pub fn mine_lift_rules<S: EventScorer + ?Sized>(
    scorer: &S,
    subset: &[Item],
    mode: LiftMode,
    top_t: usize,
) -> Result<Vec<(Item, Item, f64)>> {
    Ok(LiftTable::build(scorer, subset, mode)?.top(top_t))
}

/// Undirected edges between items whose mean two-way top-2 lift exceeds a
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    /// `(a, b, weight)` with `a < b`, sorted.
    pub edges: Vec<(Item, Item, f64)>,
}

pub fn affinity_graph<S: EventScorer + ?Sized>(
    scorer: &S,
    subset: &[Item],
    threshold: f64,
) -> Result<AffinityGraph> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be positive")));
    }
    let table = LiftTable::build(scorer, subset, LiftMode::Top2)?;
    Ok(affinity_from_table(&table, threshold))
}

pub fn affinity_from_table(table: &LiftTable, threshold: f64) -> AffinityGraph {
    let v = &table.subset;
    let mut edges = Vec::new();
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            let (i, j) = (v[a], v[b]);
            let w = 0.5 * (table.lift(i, j).unwrap() + table.lift(j, i).unwrap());
            if w > threshold {
                edges.push((i, j, w));
            }
        }
    }
    AffinityGraph { edges }
}

impl AffinityGraph {
    pub fn nodes(&self) -> Vec<Item> {
        let mut n: Vec<Item> = self.edges.iter().flat_map(|e| [e.0, e.1]).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// `item_a,item_b,weight` lines with a header.
    pub fn to_csv(&self, universe: &ItemUniverse) -> String {
        let mut s = String::from("item_a,item_b,weight\n");
        for &(a, b, w) in &self.edges {
            writeln!(s, "{},{},{w}", csv_field(&universe.label(a)), csv_field(&universe.label(b))).unwrap();
        }
        s
    }

    /// Graphviz `graph` with labelled nodes.
    pub fn to_dot(&self, universe: &ItemUniverse) -> String {
        let mut s = String::from("graph affinity {\n");
        for i in self.nodes() {
            writeln!(s, "  n{i} [label={:?}];", universe.label(i)).unwrap();
        }
        for &(a, b, w) in &self.edges {
            writeln!(s, "  n{a} -- n{b} [weight={w}];").unwrap();
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Fraction of rules whose antecedent and consequent items agree pairwise on
/// a category: `i, k` share one and `j, l` share one.
pub fn rule_category_agreement(rules: &[Rule], category: impl Fn(Item) -> Option<String>) -> Option<f64> {
    if rules.is_empty() {
        return None;
    }
    let same = |a: Item, b: Item| matches!((category(a), category(b)), (Some(x), Some(y)) if x == y);
    let good = rules
        .iter()
        .filter(|r| same(r.antecedent.0, r.consequent.0) && same(r.antecedent.1, r.consequent.1))
        .count();
    Some(good as f64 / rules.len() as f64)
}
