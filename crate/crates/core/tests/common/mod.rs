#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use rankdens::{ItemUniverse, TiedRanking};

/// Group assignment per item (`None` = unranked), compacted into a ranking.
pub fn from_assignment(u: &Arc<ItemUniverse>, slots: &[Option<usize>]) -> Option<TiedRanking> {
    let mut used: Vec<usize> = slots.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    if used.is_empty() {
        return None;
    }
    let mut groups = vec![Vec::new(); used.len()];
    for (item, s) in slots.iter().enumerate() {
        if let Some(s) = s {
            groups[used.binary_search(s).unwrap()].push(item);
        }
    }
    Some(TiedRanking::new(u, groups).unwrap())
}

pub fn assignment(n: usize, observe: f64) -> impl Strategy<Value = Vec<Option<usize>>> {
    prop::collection::vec(prop::option::weighted(observe, 0..n), n)
        .prop_filter("at least one ranked item", |v| v.iter().any(Option::is_some))
}

/// A random tied, incomplete ranking over `0..n`.
pub fn ranking(n: usize) -> impl Strategy<Value = (Arc<ItemUniverse>, TiedRanking)> {
    assignment(n, 0.75).prop_map(move |a| {
        let u = ItemUniverse::new(n).unwrap();
        let r = from_assignment(&u, &a).unwrap();
        (u, r)
    })
}

/// Several rankings over one universe of size `n`.
pub fn rankings(n: usize, count: std::ops::Range<usize>) -> impl Strategy<Value = (Arc<ItemUniverse>, Vec<TiedRanking>)> {
    prop::collection::vec(assignment(n, 0.75), count).prop_map(move |all| {
        let u = ItemUniverse::new(n).unwrap();
        let rs = all.iter().map(|a| from_assignment(&u, a).unwrap()).collect();
        (u, rs)
    })
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
