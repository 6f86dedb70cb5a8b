use std::sync::Arc;

use super::{closed_form, EventProbability, EventScorer, KernelModel};
use crate::censored::{pair_factor, Anchor};
use crate::error::{Error, Result};
use crate::kendall::{max_distance, TriangularNormalization};
use crate::numeric::CompensatedSum;
use crate::ranking::{same_universe, Item, ItemUniverse, TiedRanking};

const OUTSIDE: u32 = u32::MAX;

/// Training pair factors averaged over all training rankings, for events
/// whose ranked items lie in a fixed subset `V` of the universe.
///
/// The closed-form estimate is linear in the training pair factors, so
/// `W[a][b] = mean_i (1 - 2 p_ab(S_i))` for `a, b` in `V`, together with the
/// per-item total against everything outside `V`, answers any such event in
/// `O(k^2)` without touching the training set again.
#[derive(Debug, Clone)]
pub struct PairSummary {
    universe: Arc<ItemUniverse>,
    subset: Vec<Item>,
    slot: Vec<u32>,
    // row-major |V| x |V|, antisymmetric
    weights: Vec<f64>,
    row_sums: Vec<f64>,
    outside: Vec<f64>,
    norm: TriangularNormalization,
}

impl KernelModel {
    /// Precompute a [`PairSummary`] over `subset`. Requires a kernel for which
    /// the closed form is exact.
    pub fn summarize(&self, subset: &[Item]) -> Result<PairSummary> {
        if !self.closed_form_applies() {
            return Err(Error::Unsupported(
                "pair summaries need the modified kernel or h > n(n-1)/2".into(),
            ));
        }
        PairSummary::build(self, subset)
    }
}

impl PairSummary {
    fn build(model: &KernelModel, subset: &[Item]) -> Result<Self> {
        let universe = Arc::clone(model.universe());
        let n = universe.size();
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        subset.dedup();
        if subset.is_empty() {
            return Err(Error::InvalidArgument("empty item subset".into()));
        }
        let mut slot = vec![OUTSIDE; n];
        for (s, &item) in subset.iter().enumerate() {
            universe.check(item)?;
            slot[item] = s as u32;
        }
        let v = subset.len();
        let outside_count = n - v;

        // per-item mean of g_i(a) (skew when ranked, else 0)
        let mut skew_sum = vec![CompensatedSum::new(); v];
        // correction for pairs ranked together: f_i(a, b) - (g_i(a) - g_i(b))
        let mut corr = vec![0.0f64; v * v];
        let mut out_acc = vec![0.0f64; v];
        let mut beta_total = 0.0f64;

        let mut inside: Vec<(usize, Anchor)> = Vec::new();
        let mut outside_per_group: Vec<u32> = Vec::new();
        for s in model.training() {
            inside.clear();
            outside_per_group.clear();
            outside_per_group.resize(s.num_groups() + 1, 0);
            let mut beta = 0.0;
            let mut ranked_outside = 0usize;
            for &(item, g) in s.ranked_index() {
                let a = Anchor::new(s, g);
                match slot[item] {
                    OUTSIDE => {
                        outside_per_group[g as usize + 1] += 1;
                        ranked_outside += 1;
                        beta -= a.skew;
                    }
                    x => inside.push((x as usize, a)),
                }
            }
            // prefix: outside_per_group[g] = ranked outside items in groups < g
            for g in 1..outside_per_group.len() {
                outside_per_group[g] += outside_per_group[g - 1];
            }
            let unranked_outside = (outside_count - ranked_outside) as f64;
            beta_total += beta;
            for (x, &(a, anchor)) in inside.iter().enumerate() {
                skew_sum[a].add(anchor.skew);
                let g = anchor.group as usize;
                let earlier = outside_per_group[g] as f64;
                let later = (ranked_outside as u32 - outside_per_group[g + 1]) as f64;
                out_acc[a] += earlier - later + unranked_outside * anchor.skew - beta;
                for &(b, other) in &inside[x + 1..] {
                    let f = pair_factor(Some(anchor), Some(other));
                    let c = f - (anchor.skew - other.skew);
                    corr[a * v + b] += c;
                    corr[b * v + a] -= c;
                }
            }
        }

        let m = model.training().len() as f64;
        let mean_skew: Vec<f64> = skew_sum.iter().map(|s| s.value() / m).collect();
        let mut weights = vec![0.0f64; v * v];
        let mut row_sums = vec![0.0f64; v];
        for a in 0..v {
            let mut row = CompensatedSum::new();
            for b in 0..v {
                if a != b {
                    let w = mean_skew[a] - mean_skew[b] + corr[a * v + b] / m;
                    weights[a * v + b] = w;
                    row.add(w);
                }
            }
            row_sums[a] = row.value();
        }
        let outside = out_acc.iter().map(|o| (o + beta_total) / m).collect();
        Ok(PairSummary {
            universe,
            subset,
            slot,
            weights,
            row_sums,
            outside,
            norm: *model.normalization(),
        })
    }

    pub fn subset(&self) -> &[Item] {
        &self.subset
    }

    pub fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    /// Mean over training rankings of `1 - 2 p_ab(S_i)`.
    pub fn pair_weight(&self, a: Item, b: Item) -> Option<f64> {
        let (x, y) = (*self.slot.get(a)?, *self.slot.get(b)?);
        if x == OUTSIDE || y == OUTSIDE {
            return None;
        }
        Some(self.weights[x as usize * self.subset.len() + y as usize])
    }

    /// `mean_i E[T(R, S_i)]` for an event ranking only subset items.
    pub fn mean_expected_kendall(&self, event: &TiedRanking) -> Result<f64> {
        if !same_universe(event.universe(), &self.universe) {
            return Err(Error::UniverseMismatch);
        }
        let v = self.subset.len();
        let mut entries: Vec<(usize, Anchor)> = Vec::with_capacity(event.num_ranked());
        for &(item, g) in event.ranked_index() {
            match self.slot[item] {
                OUTSIDE => {
                    return Err(Error::InvalidArgument(format!(
                        "event ranks item {} outside the summarized subset",
                        self.universe.label(item)
                    )))
                }
                x => entries.push((x as usize, Anchor::new(event, g))),
            }
        }
        let mut acc = CompensatedSum::new();
        for (x, &(a, ra)) in entries.iter().enumerate() {
            let row = &self.weights[a * v..(a + 1) * v];
            // against subset items unranked in the event
            let mut unranked = self.row_sums[a];
            for &(b, _) in &entries {
                unranked -= row[b];
            }
            acc.add(ra.skew * (unranked + self.outside[a]));
            for &(b, rb) in &entries[x + 1..] {
                acc.add(pair_factor(Some(ra), Some(rb)) * row[b]);
            }
        }
        Ok(max_distance(self.universe.size()) as f64 / 2.0 - acc.value() / 2.0)
    }

    pub fn event_prob(&self, event: &TiedRanking) -> Result<EventProbability> {
        let mean_e = self.mean_expected_kendall(event)?;
        Ok(closed_form(event.log_fraction(), mean_e, &self.norm))
    }
}

impl EventScorer for PairSummary {
    fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    fn event_prob(&self, event: &TiedRanking) -> Result<f64> {
        PairSummary::event_prob(self, event).map(|p| p.value)
    }

    fn event_log_prob(&self, event: &TiedRanking) -> Result<f64> {
        let p = PairSummary::event_prob(self, event)?;
        Ok(if p.is_negative() { f64::NAN } else { p.log_value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kendall::KernelMode;

    fn r(text: &str, u: &Arc<ItemUniverse>) -> TiedRanking {
        TiedRanking::parse(text, u).unwrap()
    }

    #[test]
    fn agrees_with_the_direct_path() {
        let u = ItemUniverse::new(12).unwrap();
        let data = vec![
            r("1,8,9|4|2,3,7", &u),
            r("4|2,3|8", &u),
            r("4,8|2,6,9", &u),
            r("12|11,10|1", &u),
            r("5|6|7|8|9|10", &u),
        ];
        let model = KernelModel::fit(data, 50.0, KernelMode::Modified).unwrap();
        let subset = [0, 1, 2, 3, 7, 8, 9];
        let summary = model.summarize(&subset).unwrap();
        for ev in ["1|2", "4|9,10|2", "8,3|1", "2,3,4,8,9,10,1", "10|9|8|4|3|2|1"] {
            let e = r(ev, &u);
            let direct = model.event_prob(&e).unwrap().value;
            let fast = summary.event_prob(&e).unwrap().value;
            assert!((direct - fast).abs() <= 1e-12 * direct.abs().max(1e-3), "{ev}");
        }
        assert!(summary.event_prob(&r("5|1", &u)).is_err());
    }

    #[test]
    fn full_universe_subset() {
        let u = ItemUniverse::new(6).unwrap();
        let data = vec![r("1|2,3", &u), r("6|5|4|3|2|1", &u), r("2,4|6", &u)];
        let model = KernelModel::fit_default(data).unwrap();
        let summary = model.summarize(&(0..6).collect::<Vec<_>>()).unwrap();
        let e = r("3|1|6,2", &u);
        let a = model.event_prob(&e).unwrap().value;
        let b = summary.event_prob(&e).unwrap().value;
        assert!((a - b).abs() < 1e-14);
        let w = summary.pair_weight(0, 1).unwrap();
        assert_eq!(w, -summary.pair_weight(1, 0).unwrap());
    }

    #[test]
    fn rejects_truncated_exact_kernel() {
        let u = ItemUniverse::new(4).unwrap();
        let model = KernelModel::fit(vec![r("1|2", &u)], 3.0, KernelMode::ExactSupport).unwrap();
        assert!(model.summarize(&[0, 1]).is_err());
        let wide = KernelModel::fit(vec![r("1|2", &u)], 6.5, KernelMode::ExactSupport).unwrap();
        assert!(wide.summarize(&[0, 1]).is_ok());
    }
}
