use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EventScorer, KernelModel};
use crate::error::{Error, Result};
use crate::kendall::KernelMode;
use crate::numeric::CompensatedSum;
use crate::ranking::{Item, TiedRanking};

/// Probabilities below this are raised to it before taking logs.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoglikReport {
    pub mean: f64,
    /// Test rankings scored.
    pub used: usize,
    /// Test rankings that do not fully order the subset.
    pub dropped: usize,
    /// Scored events whose probability was raised to the floor.
    pub floored: usize,
}

/// Mean log-probability the scorer assigns to each test ranking's order of
/// `subset`. Rankings with ties among, or missing, subset items are dropped.
pub fn test_loglikelihood<S: EventScorer + ?Sized>(
    scorer: &S,
    test: &[TiedRanking],
    subset: &[Item],
) -> Result<LoglikReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let universe = scorer.universe();
    let mut in_subset = vec![false; universe.size()];
    for &i in subset {
        universe.check(i)?;
        in_subset[i] = true;
    }
    let want = in_subset.iter().filter(|&&b| b).count();
    let floor = LIKELIHOOD_FLOOR.ln();
    let mut acc = CompensatedSum::new();
    let (mut used, mut dropped, mut floored) = (0, 0, 0);
    for t in test {
        let projected = t.retain(|i| i < in_subset.len() && in_subset[i]);
        let Some(p) = projected.filter(|p| p.num_ranked() == want && p.num_groups() == want)
        else {
            dropped += 1;
            continue;
        };
        let order: Vec<Item> = p.groups().iter().map(|g| g[0]).collect();
        let event = TiedRanking::chain(universe, &order)?;
        let lp = scorer.event_log_prob(&event)?;
        // NaN (negative estimate) also lands here
        if lp >= floor {
            acc.add(lp);
        } else {
            acc.add(floor);
            floored += 1;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidArgument(
            "no test ranking fully orders the item subset".into(),
        ));
    }
    Ok(LoglikReport {
        mean: acc.value() / used as f64,
        used,
        dropped,
        floored,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthChoice {
    pub bandwidth: f64,
    /// `(h, mean held-out log-likelihood)` per candidate.
    pub scores: Vec<(f64, f64)>,
}

/// Pick `h` from `candidates` by `folds`-fold cross-validated log-likelihood
/// of the held-out rankings (each scored as its own event, floored as in
/// [`test_loglikelihood`]). Ties go to the earlier candidate.
pub fn select_bandwidth(
    training: &[TiedRanking],
    candidates: &[f64],
    mode: KernelMode,
    folds: usize,
    seed: u64,
) -> Result<BandwidthChoice> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no bandwidth candidates".into()));
    }
    if folds < 2 || training.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "need at least {folds} rankings and 2 folds"
        )));
    }
    let mut idx: Vec<usize> = (0..training.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; training.len()];
    for (pos, &i) in idx.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let floor = LIKELIHOOD_FLOOR.ln();
    let scores = candidates
        .par_iter()
        .map(|&h| -> Result<(f64, f64)> {
            let mut total = CompensatedSum::new();
            let mut count = 0usize;
            for f in 0..folds {
                let (held, fit): (Vec<_>, Vec<_>) = training
                    .iter()
                    .zip(&fold_of)
                    .partition(|(_, &g)| g == f);
                let model = KernelModel::fit(fit.into_iter().map(|(s, _)| s.clone()).collect(), h, mode)?;
                // the aggregated form scores each held-out ranking without another pass over the data
                let summary = if model.closed_form_applies() {
                    Some(model.summarize(&(0..model.universe().size()).collect::<Vec<_>>())?)
                } else {
                    None
                };
                let scorer: &dyn EventScorer = match &summary {
                    Some(s) => s,
                    None => &model,
                };
                for (s, _) in held {
                    let lp = scorer.event_log_prob(s)?;
                    total.add(if lp >= floor { lp } else { floor });
                    count += 1;
                }
            }
            Ok((h, total.value() / count as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = i;
        }
    }
    Ok(BandwidthChoice {
        bandwidth: scores[best].0,
        scores,
    })
}
