//! Kernel smoothing of event probabilities over censored rankings.
//!
//! A model stores the training rankings and the kernel normalization; there
//! is nothing to optimize at fit time. With the modified triangular kernel the
//! probability of an event `R` reduces to the mean expected Kendall distance
//! between `R` and each training ranking:
//!
//! ```text
//! p(R) = |R|/n! * (1 - mean_i E[T(R, S_i)] / h) / (C(h)/n!)
//! ```
//!
//! which costs `O(k^2)` per training ranking. The exact-support kernel is
//! evaluated by enumeration and is limited to small universes.

mod archive;
mod baseline;
mod likelihood;
mod summary;

use std::sync::Arc;

pub use archive::ModelArchive;
pub use baseline::{empirical_prob, mallows_fit, EmpiricalMeasure, MallowsModel, MALLOWS_MAX_N};
pub use likelihood::{
    select_bandwidth, test_loglikelihood, BandwidthChoice, LoglikReport, LIKELIHOOD_FLOOR,
};
pub use summary::PairSummary;

use crate::censored::pair_product_sum;
use crate::error::{Error, Result};
use crate::kendall::{
    default_bandwidth, kendall_positions, max_distance, KernelMode, MahonianTable,
    TriangularNormalization,
};
use crate::numeric::{deterministic_sum_with, CompensatedSum};
use crate::ranking::{
    all_permutations, same_universe, Item, ItemUniverse, TiedRanking, ENUMERATION_BOUND,
};

/// Anything that assigns probabilities to ranking events.
pub trait EventScorer: Sync {
    fn universe(&self) -> &Arc<ItemUniverse>;

    fn event_prob(&self, event: &TiedRanking) -> Result<f64>;

    /// Natural log of [`EventScorer::event_prob`]; NaN for negative values.
    fn event_log_prob(&self, event: &TiedRanking) -> Result<f64> {
        Ok(self.event_prob(event)?.ln())
    }
}

impl<S: EventScorer + ?Sized> EventScorer for &S {
    fn universe(&self) -> &Arc<ItemUniverse> {
        (**self).universe()
    }

    fn event_prob(&self, event: &TiedRanking) -> Result<f64> {
        (**self).event_prob(event)
    }

    fn event_log_prob(&self, event: &TiedRanking) -> Result<f64> {
        (**self).event_log_prob(event)
    }
}

/// Estimated probability of an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventProbability {
    pub value: f64,
    /// `ln(value)`, computed without forming `value`; `-inf` when `value <= 0`.
    pub log_value: f64,
}

impl EventProbability {
    /// Only possible with the modified kernel below `h = n(n-1)/2`.
    pub fn is_negative(&self) -> bool {
        self.value < 0.0
    }
}

// Exact-support kernel state: the averaged surrogate mass over S_n and the
// kernel weight at each distance. Up to DENSE_MAX_N the estimate of every
// single permutation is tabulated at fit time.
#[derive(Debug, Clone)]
struct SurrogateMass {
    support: Vec<(Vec<u32>, f64)>,
    weights: Vec<f64>,
    dense: Option<Vec<f64>>,
}

const DENSE_MAX_N: usize = 6;

/// A fitted kernel estimator.
#[derive(Debug, Clone)]
pub struct KernelModel {
    universe: Arc<ItemUniverse>,
    training: Vec<TiedRanking>,
    norm: TriangularNormalization,
    exact: Option<SurrogateMass>,
}

impl KernelModel {
    pub fn fit(training: Vec<TiedRanking>, h: f64, mode: KernelMode) -> Result<Self> {
        let first = training.first().ok_or(Error::EmptyTraining)?;
        let universe = Arc::clone(first.universe());
        if training.iter().any(|s| !same_universe(s.universe(), &universe)) {
            return Err(Error::UniverseMismatch);
        }
        let n = universe.size();
        let (norm, exact) = match mode {
            KernelMode::Modified => (TriangularNormalization::new(n, h, mode)?, None),
            KernelMode::ExactSupport => {
                if n > ENUMERATION_BOUND {
                    return Err(Error::TooLarge {
                        n,
                        bound: ENUMERATION_BOUND,
                    });
                }
                let table = MahonianTable::new(n)?;
                let norm = TriangularNormalization::with_table(&table, h, mode)?;
                (norm, Some(surrogate_mass(&training, &norm)?))
            }
        };
        Ok(KernelModel {
            universe,
            training,
            norm,
            exact,
        })
    }

    /// Modified kernel at [`default_bandwidth`].
    pub fn fit_default(training: Vec<TiedRanking>) -> Result<Self> {
        let n = training.first().ok_or(Error::EmptyTraining)?.n();
        Self::fit(training, default_bandwidth(n), KernelMode::Modified)
    }

    pub fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    pub fn training(&self) -> &[TiedRanking] {
        &self.training
    }

    pub fn bandwidth(&self) -> f64 {
        self.norm.bandwidth()
    }

    pub fn mode(&self) -> KernelMode {
        self.norm.mode()
    }

    pub fn normalization(&self) -> &TriangularNormalization {
        &self.norm
    }

    /// Whether the closed form is exact for this kernel: always for the
    /// modified kernel, and for the exact-support kernel once `h` exceeds
    /// every possible distance.
    pub fn closed_form_applies(&self) -> bool {
        match self.mode() {
            KernelMode::Modified => true,
            KernelMode::ExactSupport => self.bandwidth() > max_distance(self.universe.size()) as f64,
        }
    }

    /// `mean_i E[T(R, S_i)]`.
    pub fn mean_expected_kendall(&self, event: &TiedRanking) -> Result<f64> {
        self.check_event(event)?;
        let total = deterministic_sum_with(&self.training, Vec::new, |scratch, s| {
            pair_product_sum(s, event, scratch)
        });
        let mean_product = total / self.training.len() as f64;
        Ok(max_distance(self.universe.size()) as f64 / 2.0 - mean_product / 2.0)
    }

    pub fn event_prob(&self, event: &TiedRanking) -> Result<EventProbability> {
        self.check_event(event)?;
        match &self.exact {
            None => {
                let mean_e = self.mean_expected_kendall(event)?;
                Ok(closed_form(event.log_fraction(), mean_e, &self.norm))
            }
            Some(mass) => {
                let mut acc = CompensatedSum::new();
                if let Some(dense) = &mass.dense {
                    event.for_each_consistent(ENUMERATION_BOUND, |order| {
                        acc.add(dense[lex_index(order)]);
                    })?;
                    let value = acc.value();
                    return Ok(EventProbability {
                        value,
                        log_value: if value > 0.0 { value.ln() } else { f64::NEG_INFINITY },
                    });
                }
                event.for_each_consistent(ENUMERATION_BOUND, |order| {
                    let mut pos = vec![0u32; order.len()];
                    for (p, &i) in order.iter().enumerate() {
                        pos[i as usize] = p as u32;
                    }
                    for (sigma, q) in &mass.support {
                        let w = mass.weights[kendall_positions(&pos, sigma) as usize];
                        if w != 0.0 {
                            acc.add(q * w);
                        }
                    }
                })?;
                let value = acc.value();
                Ok(EventProbability {
                    value,
                    log_value: if value > 0.0 { value.ln() } else { f64::NEG_INFINITY },
                })
            }
        }
    }

    /// `p(r | s) = p(r) / p(s)` for an event `r` refining `s`.
    pub fn conditional_prob(&self, r: &TiedRanking, s: &TiedRanking) -> Result<f64> {
        conditional_prob(self, r, s)
    }

    pub fn conjunction_prob(&self, constraints: &[(Item, Item)]) -> Result<f64> {
        conjunction_prob(self, constraints)
    }

    fn check_event(&self, event: &TiedRanking) -> Result<()> {
        if same_universe(event.universe(), &self.universe) {
            Ok(())
        } else {
            Err(Error::UniverseMismatch)
        }
    }
}

impl EventScorer for KernelModel {
    fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    fn event_prob(&self, event: &TiedRanking) -> Result<f64> {
        KernelModel::event_prob(self, event).map(|p| p.value)
    }

    fn event_log_prob(&self, event: &TiedRanking) -> Result<f64> {
        let p = KernelModel::event_prob(self, event)?;
        Ok(if p.is_negative() { f64::NAN } else { p.log_value })
    }
}

pub(crate) fn closed_form(
    log_fraction: f64,
    mean_distance: f64,
    norm: &TriangularNormalization,
) -> EventProbability {
    let factor = 1.0 - mean_distance / norm.bandwidth();
    let value = log_fraction.exp() * factor / norm.norm_c();
    let log_value = if factor > 0.0 {
        log_fraction + factor.ln() - norm.norm_c().ln()
    } else {
        f64::NEG_INFINITY
    };
    EventProbability { value, log_value }
}

fn surrogate_mass(training: &[TiedRanking], norm: &TriangularNormalization) -> Result<SurrogateMass> {
    let n = norm.n();
    let perms = all_permutations(n, ENUMERATION_BOUND)?;
    let mut mass = vec![0.0f64; perms.len()];
    let m = training.len() as f64;
    let mut members = Vec::new();
    for s in training {
        members.clear();
        s.for_each_consistent(ENUMERATION_BOUND, |order| {
            members.push(lex_index(order));
        })?;
        let w = 1.0 / (m * members.len() as f64);
        for &idx in &members {
            mass[idx] += w;
        }
    }
    let support: Vec<(Vec<u32>, f64)> = perms
        .iter()
        .zip(&mass)
        .filter(|(_, &q)| q > 0.0)
        .map(|(p, &q)| (p.positions().to_vec(), q))
        .collect();
    let weights: Vec<f64> = (0..=max_distance(n))
        .map(|t| norm.kernel_weight(t))
        .collect::<Result<_>>()?;
    let dense = (n <= DENSE_MAX_N).then(|| {
        perms
            .iter()
            .map(|p| {
                support
                    .iter()
                    .map(|(sigma, q)| q * weights[kendall_positions(p.positions(), sigma) as usize])
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect()
    });
    Ok(SurrogateMass {
        support,
        weights,
        dense,
    })
}

fn lex_index(order: &[u32]) -> usize {
    let n = order.len();
    let mut idx = 0usize;
    for p in 0..n {
        let smaller = order[p + 1..].iter().filter(|&&x| x < order[p]).count();
        idx = idx * (n - p) + smaller;
    }
    idx
}

/// `p(r | s) = p(r) / p(s)`; `r` must refine `s`.
pub fn conditional_prob<S: EventScorer + ?Sized>(
    scorer: &S,
    r: &TiedRanking,
    s: &TiedRanking,
) -> Result<f64> {
    if !r.implies(s)? {
        return Err(Error::NotRefinement);
    }
    let den = scorer.event_prob(s)?;
    if den <= 0.0 {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(scorer.event_prob(r)? / den)
}

/// Largest number of distinct items in a conjunction.
pub const CONJUNCTION_MAX_ITEMS: usize = 6;

/// Probability that every `(a, b)` constraint `a before b` holds: the sum over
/// all total orders of the involved items that satisfy them, each scored as a
/// chain event.
pub fn conjunction_prob<S: EventScorer + ?Sized>(
    scorer: &S,
    constraints: &[(Item, Item)],
) -> Result<f64> {
    let universe = scorer.universe();
    let mut items: Vec<Item> = Vec::new();
    for &(a, b) in constraints {
        universe.check(a)?;
        universe.check(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!("constraint {a} before itself")));
        }
        items.extend([a, b]);
    }
    items.sort_unstable();
    items.dedup();
    if items.is_empty() {
        return scorer.event_prob(&TiedRanking::unconstrained(universe));
    }
    if items.len() > CONJUNCTION_MAX_ITEMS {
        return Err(Error::Unsupported(format!(
            "conjunctions over more than {CONJUNCTION_MAX_ITEMS} items"
        )));
    }
    let mut acc = CompensatedSum::new();
    let mut any = false;
    for perm in all_permutations(items.len(), CONJUNCTION_MAX_ITEMS)? {
        let order: Vec<Item> = perm.order().iter().map(|&p| items[p as usize]).collect();
        let at = |x: Item| order.iter().position(|&y| y == x).unwrap();
        if constraints.iter().all(|&(a, b)| at(a) < at(b)) {
            any = true;
            acc.add(scorer.event_prob(&TiedRanking::chain(universe, &order)?)?);
        }
    }
    if !any {
        return Err(Error::Contradictory);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(n: usize) -> Arc<ItemUniverse> {
        ItemUniverse::new(n).unwrap()
    }

    fn r(text: &str, u: &Arc<ItemUniverse>) -> TiedRanking {
        TiedRanking::parse(text, u).unwrap()
    }

    #[test]
    fn hand_checked_pair_event() {
        let u = uni(3);
        let model = KernelModel::fit(vec![r("1|2|3", &u)], 3.0, KernelMode::Modified).unwrap();
        let p = model.event_prob(&r("1|2", &u)).unwrap();
        assert!((p.value - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.log_value - (2.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            KernelModel::fit(vec![], 3.0, KernelMode::Modified),
            Err(Error::EmptyTraining)
        ));
        let u = uni(4);
        // n(n-1)/4 = 3
        assert!(KernelModel::fit(vec![r("1|2", &u)], 3.0, KernelMode::Modified).is_err());
        let other = uni(4);
        let mixed = vec![r("1|2", &u), r("1|2", &uni(5))];
        assert!(matches!(
            KernelModel::fit(mixed, 6.0, KernelMode::Modified),
            Err(Error::UniverseMismatch)
        ));
        // equal universes built separately are accepted
        assert!(KernelModel::fit(vec![r("1|2", &u), r("2|1", &other)], 6.0, KernelMode::Modified).is_ok());
        let big = uni(9);
        assert!(matches!(
            KernelModel::fit(vec![r("1|2", &big)], 40.0, KernelMode::ExactSupport),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn small_corpus_fits() {
        let u = uni(9);
        let data = vec![r("1,8,9|4|2,3,7", &u), r("4|2,3|8", &u), r("4,8|2,6,9", &u)];
        let groups: Vec<usize> = data.iter().map(TiedRanking::num_groups).collect();
        assert_eq!(groups, [3, 3, 2]);
        let model = KernelModel::fit_default(data).unwrap();
        assert_eq!(model.bandwidth(), 36.0);
        let p = model.event_prob(&TiedRanking::unconstrained(&u)).unwrap();
        assert_eq!(p.value, 1.0);
    }

    #[test]
    fn single_training_ranking_is_echoed() {
        let u = uni(5);
        let s = r("2|5|1", &u);
        let model = KernelModel::fit(vec![s.clone()], 10.0, KernelMode::Modified).unwrap();
        // the training ranking itself is the most probable of its orderings
        let own = model.event_prob(&s).unwrap().value;
        for other in ["5|2|1", "1|5|2", "2|1|5"] {
            assert!(own > model.event_prob(&r(other, &u)).unwrap().value);
        }
    }

    #[test]
    fn complement_and_total_mass() {
        let u = uni(6);
        let data = vec![r("1|2,3|4", &u), r("6|1", &u), r("3,4,5|2", &u)];
        for mode in [KernelMode::Modified, KernelMode::ExactSupport] {
            let model = KernelModel::fit(data.clone(), 9.5, mode).unwrap();
            for i in 0..6 {
                for j in i + 1..6 {
                    let a = model.event_prob(&TiedRanking::chain(&u, &[i, j]).unwrap()).unwrap();
                    let b = model.event_prob(&TiedRanking::chain(&u, &[j, i]).unwrap()).unwrap();
                    assert!((a.value + b.value - 1.0).abs() < 1e-12, "{mode}");
                }
            }
            let total: f64 = all_permutations(6, 8)
                .unwrap()
                .iter()
                .map(|p| model.event_prob(&p.to_ranking(&u).unwrap()).unwrap().value)
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "{mode}: {total}");
        }
    }

    #[test]
    fn exact_support_agrees_with_closed_form_when_h_covers_all_distances() {
        let u = uni(5);
        let data = vec![r("1|2,3|4", &u), r("5|1", &u), r("3,4,5|2", &u)];
        let exact = KernelModel::fit(data.clone(), 10.5, KernelMode::ExactSupport).unwrap();
        let modified = KernelModel::fit(data, 10.5, KernelMode::Modified).unwrap();
        assert!(exact.closed_form_applies());
        for ev in ["1|2", "3|1,2|5", "4,5|1"] {
            let e = exact.event_prob(&r(ev, &u)).unwrap().value;
            let m = modified.event_prob(&r(ev, &u)).unwrap().value;
            assert!((e - m).abs() < 1e-12, "{ev}: {e} vs {m}");
        }
    }

    #[test]
    fn negative_values_are_reported_not_clamped() {
        let u = uni(4);
        let model = KernelModel::fit(vec![r("1|2|3|4", &u)], 3.1, KernelMode::Modified).unwrap();
        let p = model.event_prob(&r("4|3|2|1", &u)).unwrap();
        assert!(p.is_negative());
        assert_eq!(p.log_value, f64::NEG_INFINITY);
        assert!(model.event_log_prob(&r("4|3|2|1", &u)).unwrap().is_nan());
    }

    #[test]
    fn conditional_cases() {
        let u = uni(8);
        let data = vec![r("8|3|2|5", &u), r("3|8|5", &u), r("2|3", &u)];
        let model = KernelModel::fit_default(data).unwrap();
        let s = r("3|2|5", &u);
        let refined = r("8|3|2|5", &u);
        assert!((model.conditional_prob(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        let q = model.conditional_prob(&refined, &s).unwrap();
        let direct = model.event_prob(&refined).unwrap().value / model.event_prob(&s).unwrap().value;
        assert_eq!(q, direct);
        assert!(matches!(
            model.conditional_prob(&s, &refined),
            Err(Error::NotRefinement)
        ));
    }

    #[test]
    fn conjunction_cases() {
        let u = uni(5);
        let data = vec![r("1|2|3|4|5", &u), r("2|4|1", &u), r("5,3|1", &u)];
        let model = KernelModel::fit_default(data).unwrap();
        let single = model.conjunction_prob(&[(0, 1)]).unwrap();
        let chain = model.event_prob(&r("1|2", &u)).unwrap().value;
        assert!((single - chain).abs() < 1e-12);
        let cells = [
            model.conjunction_prob(&[(0, 1), (2, 3)]).unwrap(),
            model.conjunction_prob(&[(0, 1), (3, 2)]).unwrap(),
            model.conjunction_prob(&[(1, 0), (2, 3)]).unwrap(),
            model.conjunction_prob(&[(1, 0), (3, 2)]).unwrap(),
        ];
        assert!((cells.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((cells[0] + cells[1] - single).abs() < 1e-9);
        assert!(matches!(
            model.conjunction_prob(&[(0, 1), (1, 2), (2, 0)]),
            Err(Error::Contradictory)
        ));
        assert!(model.conjunction_prob(&[(0, 0)]).is_err());
    }
}
