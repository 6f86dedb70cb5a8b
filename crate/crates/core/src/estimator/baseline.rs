//! Reference estimators: the empirical measure and a Mallows model fitted by
//! maximum likelihood over small permutation groups.

use std::sync::Arc;

use super::EventScorer;
use crate::error::{Error, Result};
use crate::kendall::{kendall_positions, max_distance, MahonianTable};
use crate::numeric::{ln_factorial, log_sum_exp, CompensatedSum};
use crate::ranking::{all_permutations, same_universe, ItemUniverse, Permutation, TiedRanking};

/// Fraction of `rankings` that entail `event`.
pub fn empirical_prob(rankings: &[TiedRanking], event: &TiedRanking) -> Result<f64> {
    if rankings.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let mut hits = 0usize;
    for s in rankings {
        if s.implies(event)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / rankings.len() as f64)
}

/// The empirical measure as an [`EventScorer`].
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    universe: Arc<ItemUniverse>,
    training: Vec<TiedRanking>,
}

impl EmpiricalMeasure {
    pub fn new(training: Vec<TiedRanking>) -> Result<Self> {
        let universe = Arc::clone(training.first().ok_or(Error::EmptyTraining)?.universe());
        if training.iter().any(|s| !same_universe(s.universe(), &universe)) {
            return Err(Error::UniverseMismatch);
        }
        Ok(EmpiricalMeasure { universe, training })
    }
}

impl EventScorer for EmpiricalMeasure {
    fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    fn event_prob(&self, event: &TiedRanking) -> Result<f64> {
        empirical_prob(&self.training, event)
    }
}

/// Largest `n` accepted by [`mallows_fit`].
pub const MALLOWS_MAX_N: usize = 5;

/// Concentration reported when the data sit on a single permutation.
pub const MAX_CONCENTRATION: f64 = 30.0;

const CONCENTRATION_TOL: f64 = 1e-6;

/// `p(pi) = exp(-theta T(pi, center)) / Z(theta)`.
#[derive(Debug, Clone)]
pub struct MallowsModel {
    universe: Arc<ItemUniverse>,
    center: Permutation,
    concentration: f64,
    log_z: f64,
}

impl MallowsModel {
    pub fn new(universe: &Arc<ItemUniverse>, center: Permutation, concentration: f64) -> Result<Self> {
        let n = universe.size();
        if center.len() != n {
            return Err(Error::SizeMismatch(n, center.len()));
        }
        if n > MALLOWS_MAX_N {
            return Err(Error::TooLarge {
                n,
                bound: MALLOWS_MAX_N,
            });
        }
        if !(concentration >= 0.0 && concentration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "concentration must be finite and non-negative, got {concentration}"
            )));
        }
        let table = MahonianTable::new(n)?;
        Ok(MallowsModel {
            universe: Arc::clone(universe),
            center,
            concentration,
            log_z: log_partition(&table, concentration),
        })
    }

    pub fn center(&self) -> &Permutation {
        &self.center
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn log_prob(&self, perm: &Permutation) -> f64 {
        let t = kendall_positions(perm.positions(), self.center.positions());
        -self.concentration * t as f64 - self.log_z
    }
}

impl EventScorer for MallowsModel {
    fn universe(&self) -> &Arc<ItemUniverse> {
        &self.universe
    }

    fn event_prob(&self, event: &TiedRanking) -> Result<f64> {
        if !same_universe(event.universe(), &self.universe) {
            return Err(Error::UniverseMismatch);
        }
        let mut acc = CompensatedSum::new();
        event.for_each_consistent(MALLOWS_MAX_N, |order| {
            let perm = Permutation::from_order_unchecked(order.to_vec());
            acc.add(self.log_prob(&perm).exp());
        })?;
        Ok(acc.value())
    }
}

// ln Z(theta) = ln n! + ln sum_t g[t] exp(-theta t)
fn log_partition(table: &MahonianTable, theta: f64) -> f64 {
    let terms: Vec<f64> = table
        .mass()
        .iter()
        .enumerate()
        .map(|(t, g)| g.ln() - theta * t as f64)
        .collect();
    ln_factorial(table.n()) + log_sum_exp(&terms)
}

// E_theta[T]
fn mean_distance(table: &MahonianTable, theta: f64) -> f64 {
    let terms: Vec<f64> = table
        .mass()
        .iter()
        .enumerate()
        .map(|(t, g)| g.ln() - theta * t as f64)
        .collect();
    let lz = log_sum_exp(&terms);
    terms
        .iter()
        .enumerate()
        .map(|(t, l)| t as f64 * (l - lz).exp())
        .collect::<CompensatedSum>()
        .value()
}

/// Maximum-likelihood Mallows model for full permutations of a small universe.
///
/// The center minimizes the total Kendall distance to the data (exhaustive
/// search, ties to the lexicographically smallest order). The concentration
/// solves `E_theta[T] = mean distance` by bisection, which is where the
/// concave log-likelihood peaks.
pub fn mallows_fit(universe: &Arc<ItemUniverse>, data: &[Permutation]) -> Result<MallowsModel> {
    let n = universe.size();
    if data.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if n > MALLOWS_MAX_N {
        return Err(Error::TooLarge {
            n,
            bound: MALLOWS_MAX_N,
        });
    }
    if let Some(p) = data.iter().find(|p| p.len() != n) {
        return Err(Error::SizeMismatch(n, p.len()));
    }
    let perms = all_permutations(n, MALLOWS_MAX_N)?;
    let mut counts = vec![0usize; perms.len()];
    for p in data {
        counts[p.lex_index()] += 1;
    }
    let observed: Vec<(&Permutation, f64)> = perms
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(p, &c)| (p, c as f64))
        .collect();
    let mut best: Option<(f64, &Permutation)> = None;
    for candidate in &perms {
        let total: f64 = observed
            .iter()
            .map(|(p, c)| c * kendall_positions(p.positions(), candidate.positions()) as f64)
            .sum();
        // strict comparison keeps the first (lexicographically smallest) minimizer
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, candidate));
        }
    }
    let (total, center) = best.expect("nonempty permutation group");
    let mean = total / data.len() as f64;

    let table = MahonianTable::new(n)?;
    let uniform_mean = max_distance(n) as f64 / 2.0;
    let concentration = if mean >= uniform_mean {
        0.0
    } else if mean <= 0.0 {
        MAX_CONCENTRATION
    } else {
        let (mut lo, mut hi) = (0.0f64, MAX_CONCENTRATION);
        if mean_distance(&table, hi) > mean {
            hi
        } else {
            while hi - lo > CONCENTRATION_TOL {
                let mid = 0.5 * (lo + hi);
                if mean_distance(&table, mid) > mean {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    MallowsModel::new(universe, center.clone(), concentration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kendall::kendall_tau;

    fn perm(order: &[usize]) -> Permutation {
        Permutation::from_order(order.to_vec()).unwrap()
    }

    #[test]
    fn empirical_measure_cases() {
        let u = ItemUniverse::new(4).unwrap();
        let data: Vec<TiedRanking> = ["1|2|3", "1|3|2", "2|1"]
            .iter()
            .map(|t| TiedRanking::parse(t, &u).unwrap())
            .collect();
        let e = |t: &str| empirical_prob(&data, &TiedRanking::parse(t, &u).unwrap()).unwrap();
        assert!((e("1|2") - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e("1,2,3,4"), 1.0);
        assert_eq!(e("4|1"), 0.0);
        assert!(empirical_prob(&[], &data[0]).is_err());
    }

    #[test]
    fn degenerate_data_gives_large_concentration() {
        let u = ItemUniverse::new(4).unwrap();
        let data = vec![perm(&[2, 0, 3, 1]); 50];
        let m = mallows_fit(&u, &data).unwrap();
        assert_eq!(m.center(), &data[0]);
        assert_eq!(m.concentration(), MAX_CONCENTRATION);
    }

    #[test]
    fn uniform_data_gives_zero_concentration() {
        let u = ItemUniverse::new(3).unwrap();
        let data = all_permutations(3, 8).unwrap();
        let m = mallows_fit(&u, &data).unwrap();
        assert_eq!(m.concentration(), 0.0);
        assert_eq!(m.center(), &Permutation::identity(3));
        let p = m.event_prob(&TiedRanking::parse("1|2|3", &u).unwrap()).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn likelihood_is_maximized_at_the_fitted_concentration() {
        let u = ItemUniverse::new(4).unwrap();
        let center = perm(&[1, 0, 2, 3]);
        let data: Vec<Permutation> = all_permutations(4, 8)
            .unwrap()
            .into_iter()
            .flat_map(|p| {
                let d = kendall_tau(&p, &center).unwrap();
                std::iter::repeat_n(p, (6 - d) as usize * (6 - d) as usize)
            })
            .collect();
        let fitted = mallows_fit(&u, &data).unwrap();
        assert_eq!(fitted.center(), &center);
        let ll = |theta: f64| {
            let m = MallowsModel::new(&u, center.clone(), theta).unwrap();
            data.iter().map(|p| m.log_prob(p)).sum::<f64>()
        };
        let at = ll(fitted.concentration());
        assert!(at >= ll(fitted.concentration() + 1e-3));
        assert!(at >= ll(fitted.concentration() - 1e-3));
        let total: f64 = all_permutations(4, 8)
            .unwrap()
            .iter()
            .map(|p| fitted.log_prob(p).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mallows_rejects_large_or_empty_inputs() {
        let u = ItemUniverse::new(7).unwrap();
        assert!(mallows_fit(&u, &[Permutation::identity(7)]).is_err());
        let u3 = ItemUniverse::new(3).unwrap();
        assert!(mallows_fit(&u3, &[]).is_err());
    }
}
