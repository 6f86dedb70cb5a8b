//! Closed-form statistics of tied-incomplete rankings under the uniform
//! distribution over their consistent permutations.
//!
//! Everything here goes through the pair factor `1 - 2 p_ij(U)`, which is
//! zero whenever neither item is ranked in `U` or both sit in the same tie
//! group. Pairs where either ranking has a zero factor are skipped.

use crate::error::{Error, Result};
use crate::kendall::max_distance;
use crate::ranking::{same_universe, Item, TiedRanking};

/// A ranked item reduced to what the pair factor needs: its group, and
/// `2 c - 1` where `c = (tau + (phi - 1) / 2) / (k + 1)` is the chance that
/// an unranked item lands before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Anchor {
    pub group: u32,
    pub skew: f64,
}

impl Anchor {
    pub fn new(r: &TiedRanking, group: u32) -> Anchor {
        let p = r.placement_in_group(group);
        let k = r.num_ranked() as f64;
        let c = (p.tau as f64 + (p.phi as f64 - 1.0) / 2.0) / (k + 1.0);
        Anchor {
            group,
            skew: 2.0 * c - 1.0,
        }
    }
}

/// `1 - 2 p_ab` for one ranking.
#[inline]
pub(crate) fn pair_factor(a: Option<Anchor>, b: Option<Anchor>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => match x.group.cmp(&y.group) {
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.0,
        },
        (Some(x), None) => x.skew,
        (None, Some(y)) => -y.skew,
        (None, None) => 0.0,
    }
}

/// Probability that `i` precedes `j` under the uniform distribution over
/// permutations consistent with `u`.
pub fn pair_pref_prob(u: &TiedRanking, i: Item, j: Item) -> Result<f64> {
    u.universe().check(i)?;
    u.universe().check(j)?;
    if i == j {
        return Err(Error::InvalidArgument("pair needs two distinct items".into()));
    }
    let center = |g: usize| {
        let p = u.placement_in_group(g as u32);
        (p.tau as f64 + (p.phi as f64 - 1.0) / 2.0) / (u.num_ranked() as f64 + 1.0)
    };
    Ok(match (u.group_of(i), u.group_of(j)) {
        (Some(a), Some(b)) if a < b => 1.0,
        (Some(a), Some(b)) if a > b => 0.0,
        (Some(a), None) => 1.0 - center(a),
        (None, Some(b)) => center(b),
        _ => 0.5,
    })
}

/// Ranked items of either ranking with their anchors in each.
pub(crate) type Entry = (Item, Option<Anchor>, Option<Anchor>);

pub(crate) fn merge_entries(s: &TiedRanking, r: &TiedRanking, out: &mut Vec<Entry>) {
    out.clear();
    let (a, b) = (s.ranked_index(), r.ranked_index());
    let (mut x, mut y) = (0, 0);
    while x < a.len() || y < b.len() {
        let take_a = y == b.len() || (x < a.len() && a[x].0 <= b[y].0);
        let take_b = x == a.len() || (y < b.len() && b[y].0 <= a[x].0);
        let item = if take_a { a[x].0 } else { b[y].0 };
        let sa = take_a.then(|| Anchor::new(s, a[x].1));
        let rb = take_b.then(|| Anchor::new(r, b[y].1));
        out.push((item, sa, rb));
        x += take_a as usize;
        y += take_b as usize;
    }
}

/// `sum_{a<b} (1 - 2 p_ab(S)) (1 - 2 p_ab(R))` over all pairs of the universe,
/// in `O(k^2)` for `k` items ranked in either ranking.
pub(crate) fn pair_product_sum(s: &TiedRanking, r: &TiedRanking, scratch: &mut Vec<Entry>) -> f64 {
    merge_entries(s, r, scratch);
    let entries = &scratch[..];
    let mut acc = 0.0;
    for (x, &(_, sa, ra)) in entries.iter().enumerate() {
        for &(_, sb, rb) in &entries[x + 1..] {
            let fs = pair_factor(sa, sb);
            if fs != 0.0 {
                acc += fs * pair_factor(ra, rb);
            }
        }
    }
    // pairs with an item unranked in both rankings: one term per such item,
    // identical for all of them
    let outside = (s.n() - entries.len()) as f64;
    if outside > 0.0 {
        for &(_, sa, ra) in entries {
            if let (Some(sa), Some(ra)) = (sa, ra) {
                acc += outside * sa.skew * ra.skew;
            }
        }
    }
    acc
}

/// Mean Kendall distance between uniform draws from the permutations
/// consistent with `s` and with `r`.
pub fn expected_kendall(s: &TiedRanking, r: &TiedRanking) -> Result<f64> {
    if !same_universe(s.universe(), r.universe()) {
        return Err(Error::UniverseMismatch);
    }
    let mut scratch = Vec::new();
    let acc = pair_product_sum(s, r, &mut scratch);
    Ok(max_distance(s.n()) as f64 / 2.0 - acc / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::ItemUniverse;

    fn r(text: &str, n: usize) -> TiedRanking {
        TiedRanking::parse(text, &ItemUniverse::new(n).unwrap()).unwrap()
    }

    #[test]
    fn pair_probabilities_for_the_listed_cases() {
        let u = r("3|2|4", 4);
        assert_eq!(pair_pref_prob(&u, 0, 2).unwrap(), 0.25);
        assert_eq!(pair_pref_prob(&u, 0, 1).unwrap(), 0.5);
        assert_eq!(pair_pref_prob(&u, 0, 3).unwrap(), 0.75);
        assert_eq!(pair_pref_prob(&u, 2, 1).unwrap(), 1.0);
        assert_eq!(pair_pref_prob(&u, 3, 1).unwrap(), 0.0);
        let tied = r("2,3|4", 4);
        assert_eq!(pair_pref_prob(&tied, 0, 1).unwrap(), 0.375);
        assert_eq!(pair_pref_prob(&tied, 1, 2).unwrap(), 0.5);
        let free = r("1", 4);
        assert_eq!(pair_pref_prob(&free, 1, 2).unwrap(), 0.5);
        assert!(pair_pref_prob(&u, 1, 1).is_err());
        assert!(pair_pref_prob(&u, 1, 4).is_err());
    }

    #[test]
    fn expected_kendall_cases() {
        let full = r("1|2|3", 3);
        assert_eq!(expected_kendall(&full, &full).unwrap(), 0.0);
        let free = r("1,2,3", 3);
        assert_eq!(expected_kendall(&free, &free).unwrap(), 1.5);
        let pair = r("1|2", 3);
        assert!((expected_kendall(&full, &pair).unwrap() - 1.0).abs() < 1e-12);
        assert!((expected_kendall(&pair, &full).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            expected_kendall(&full, &r("1|2", 4)),
            Err(Error::UniverseMismatch)
        ));
    }

    #[test]
    fn complementary_pairs_sum_to_one() {
        let u = r("5,2|7|1,3", 9);
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    let s = pair_pref_prob(&u, i, j).unwrap() + pair_pref_prob(&u, j, i).unwrap();
                    assert_eq!(s, 1.0);
                }
            }
        }
    }
}
