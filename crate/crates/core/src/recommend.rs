//! Rating-level prediction by minimizing expected loss under the kernel
//! posterior, and the held-out evaluation harness.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::EventScorer;
use crate::numeric::CompensatedSum;
use crate::ranking::{Item, Slot, TiedRanking};

// rows: predicted stars 0..5, columns: true stars 0..5
const ASYMMETRIC: [[f64; 6]; 6] = [
    [0.0, 0.0, 0.0, 3.0, 4.0, 5.0],
    [0.0, 0.0, 0.0, 2.0, 3.0, 4.0],
    [0.0, 0.0, 0.0, 1.0, 2.0, 3.0],
    [9.0, 4.0, 1.5, 0.0, 0.0, 0.0],
    [12.0, 6.0, 3.0, 0.0, 0.0, 0.0],
    [15.0, 8.0, 4.5, 0.0, 0.0, 0.0],
];

/// Square table of `loss(predicted, truth)` over consecutive levels
/// `min_level..min_level + size`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    min_level: i32,
    size: usize,
    entries: Vec<f64>,
}

impl LossMatrix {
    pub fn new(min_level: i32, rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidArgument("empty loss matrix".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    got: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidArgument(format!("loss entry {bad}")));
            }
            entries.extend(row);
        }
        Ok(LossMatrix {
            min_level,
            size,
            entries,
        })
    }

    fn from_fn(min_level: i32, max_level: i32, f: impl Fn(i32, i32) -> f64) -> Result<Self> {
        if max_level < min_level {
            return Err(Error::InvalidArgument(format!(
                "empty level range {min_level}..={max_level}"
            )));
        }
        let rows = (min_level..=max_level)
            .map(|a| (min_level..=max_level).map(|b| f(a, b)).collect())
            .collect();
        Self::new(min_level, rows)
    }

    /// 0/1 loss.
    pub fn zero_one(min_level: i32, max_level: i32) -> Result<Self> {
        Self::from_fn(min_level, max_level, |a, b| f64::from(u8::from(a != b)))
    }

    /// `|a - b|`.
    pub fn absolute(min_level: i32, max_level: i32) -> Result<Self> {
        Self::from_fn(min_level, max_level, |a, b| f64::from((a - b).abs()))
    }

    /// The asymmetric star loss on 0..=5, restricted to the given range
    /// (1..=5 drops the first row and column).
    pub fn asymmetric(min_level: i32, max_level: i32) -> Result<Self> {
        if min_level < 0 || max_level > 5 {
            return Err(Error::InvalidArgument(format!(
                "asymmetric loss is defined on levels 0..=5, not {min_level}..={max_level}"
            )));
        }
        Self::from_fn(min_level, max_level, |a, b| ASYMMETRIC[a as usize][b as usize])
    }

    /// `l0`, `l1` or `le`.
    pub fn builtin(name: &str, min_level: i32, max_level: i32) -> Result<Self> {
        match name {
            "l0" => Self::zero_one(min_level, max_level),
            "l1" => Self::absolute(min_level, max_level),
            "le" => Self::asymmetric(min_level, max_level),
            other => Err(Error::InvalidArgument(format!("unknown loss {other:?}"))),
        }
    }

    /// Comma-separated rows; blank lines and `#` comments are skipped.
    pub fn parse_csv(text: &str, min_level: i32) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("loss entry {x:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(min_level, rows)
    }

    pub fn from_csv(path: impl AsRef<Path>, min_level: i32) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, min_level)
    }

    pub fn min_level(&self) -> i32 {
        self.min_level
    }

    pub fn max_level(&self) -> i32 {
        self.min_level + self.size as i32 - 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn loss(&self, predicted: i32, truth: i32) -> Result<f64> {
        Ok(self.entries[self.index(predicted)? * self.size + self.index(truth)?])
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn index(&self, level: i32) -> Result<usize> {
        if level < self.min_level || level > self.max_level() {
            return Err(Error::InvalidArgument(format!(
                "level {level} outside {}..={}",
                self.min_level,
                self.max_level()
            )));
        }
        Ok((level - self.min_level) as usize)
    }
}

/// Distribution over consecutive levels starting at `min_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub min_level: i32,
    pub probs: Vec<f64>,
    /// Some raw weights were negative and set to zero (or all were
    /// non-positive and the posterior fell back to uniform).
    pub clamped: bool,
}

impl Posterior {
    pub fn new(min_level: i32, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty posterior".into()));
        }
        let clamped = weights.iter().any(|&w| w < 0.0);
        let mut probs: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
            Ok(Posterior {
                min_level,
                probs,
                clamped,
            })
        } else {
            let u = 1.0 / probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = u);
            Ok(Posterior {
                min_level,
                probs,
                clamped: true,
            })
        }
    }

    pub fn max_level(&self) -> i32 {
        self.min_level + self.probs.len() as i32 - 1
    }

    pub fn prob(&self, level: i32) -> f64 {
        usize::try_from(level - self.min_level)
            .ok()
            .and_then(|i| self.probs.get(i).copied())
            .unwrap_or(0.0)
    }

    /// Most probable level, ties to the higher level.
    pub fn mode(&self) -> i32 {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p >= self.probs[best] {
                best = i;
            }
        }
        self.min_level + best as i32
    }

    /// Highest level `l` with `P(level >= l) >= 1/2`.
    pub fn weighted_median(&self) -> i32 {
        let mut upper = 0.0;
        for i in (0..self.probs.len()).rev() {
            upper += self.probs[i];
            if upper >= 0.5 {
                return self.min_level + i as i32;
            }
        }
        self.min_level
    }
}

/// Posterior over `min_level..=max_level` for an unranked `item` given the
/// user's levelled ranking: each level is weighted by the probability of the
/// ranking with `item` inserted at that level.
pub fn level_posterior<S: EventScorer + ?Sized>(
    scorer: &S,
    user: &TiedRanking,
    item: Item,
    min_level: i32,
    max_level: i32,
) -> Result<Posterior> {
    if user.levels().is_none() {
        return Err(Error::MissingLevels);
    }
    if user.contains(item) {
        return Err(Error::AlreadyRanked(item));
    }
    let weights = (min_level..=max_level)
        .map(|l| scorer.event_prob(&user.insert_item(item, Slot::Level(l))?))
        .collect::<Result<Vec<_>>>()?;
    Posterior::new(min_level, weights)
}

/// Level minimizing expected loss under `posterior`; ties go to the higher
/// (more preferred) level.
pub fn predict_level(posterior: &Posterior, loss: &LossMatrix) -> Result<i32> {
    if posterior.probs.len() != loss.size() || posterior.min_level != loss.min_level() {
        return Err(Error::DimensionMismatch {
            expected: loss.size(),
            got: posterior.probs.len(),
        });
    }
    let mut best: Option<(f64, i32)> = None;
    for a in loss.min_level()..=loss.max_level() {
        let mut risk = CompensatedSum::new();
        for (j, &p) in posterior.probs.iter().enumerate() {
            risk.add(p * loss.loss(a, posterior.min_level + j as i32)?);
        }
        let r = risk.value();
        // later (higher) levels win ties up to rounding
        if best.is_none_or(|(b, _)| r <= b + 1e-12 * b.abs().max(1.0)) {
            best = Some((r, a));
        }
    }
    Ok(best.expect("nonempty level range").1)
}

/// A test user: the ranking used for conditioning and the withheld items
/// with their true levels.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutUser {
    pub user: String,
    pub observed: TiedRanking,
    pub held_out: Vec<(Item, i32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSplit {
    pub users: Vec<HeldOutUser>,
    pub seed: u64,
}

/// Withhold `fraction` of a levelled ranking's items, uniformly at random,
/// keeping at least one observed and one withheld. `None` for fewer than two
/// ranked items.
pub fn hold_out<R: Rng + ?Sized>(
    user: &str,
    ranking: &TiedRanking,
    fraction: f64,
    rng: &mut R,
) -> Result<Option<HeldOutUser>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("holdout fraction {fraction}")));
    }
    let levels = ranking.levels().ok_or(Error::MissingLevels)?;
    let k = ranking.num_ranked();
    if k < 2 {
        return Ok(None);
    }
    let count = ((fraction * k as f64).round() as usize).clamp(1, k - 1);
    let mut items: Vec<Item> = ranking.ranked_items().collect();
    items.shuffle(rng);
    let mut held: Vec<Item> = items[..count].to_vec();
    held.sort_unstable();
    let observed = ranking
        .retain(|i| held.binary_search(&i).is_err())
        .expect("at least one item kept");
    let held_out = held
        .into_iter()
        .map(|i| (i, levels[ranking.group_of(i).expect("ranked")]))
        .collect();
    Ok(Some(HeldOutUser {
        user: user.to_string(),
        observed,
        held_out,
    }))
}

/// Anything that predicts a level for a withheld item.
pub trait LevelPredictor: Sync {
    fn predict(&self, user: &HeldOutUser, item: Item) -> Result<i32>;
}

impl<F> LevelPredictor for F
where
    F: Fn(&HeldOutUser, Item) -> Result<i32> + Sync,
{
    fn predict(&self, user: &HeldOutUser, item: Item) -> Result<i32> {
        self(user, item)
    }
}

/// Posterior-loss minimization under a kernel scorer.
pub struct KernelPredictor<'a, S: EventScorer + ?Sized> {
    pub scorer: &'a S,
    pub loss: &'a LossMatrix,
}

impl<S: EventScorer + ?Sized> LevelPredictor for KernelPredictor<'_, S> {
    fn predict(&self, user: &HeldOutUser, item: Item) -> Result<i32> {
        let post = level_posterior(
            self.scorer,
            &user.observed,
            item,
            self.loss.min_level(),
            self.loss.max_level(),
        )?;
        predict_level(&post, self.loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub user_index: usize,
    pub item: Item,
    pub predicted: i32,
    pub truth: i32,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub mean_loss: f64,
    /// One entry per withheld (user, item), in user then item order.
    pub outcomes: Vec<Outcome>,
}

/// Mean loss over every withheld (user, item) pair. Users are scored in
/// parallel and merged in split order.
pub fn evaluate_prediction<P: LevelPredictor + ?Sized>(
    predictor: &P,
    split: &PredictionSplit,
    loss: &LossMatrix,
) -> Result<PredictionReport> {
    let per_user = split
        .users
        .par_iter()
        .enumerate()
        .map(|(u, user)| {
            user.held_out
                .iter()
                .map(|&(item, truth)| {
                    let predicted = predictor.predict(user, item)?;
                    Ok(Outcome {
                        user_index: u,
                        item,
                        predicted,
                        truth,
                        loss: loss.loss(predicted, truth)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Outcome> = per_user.into_iter().flatten().collect();
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument("split has no withheld items".into()));
    }
    let total: CompensatedSum = outcomes.iter().map(|o| o.loss).collect();
    Ok(PredictionReport {
        mean_loss: total.value() / outcomes.len() as f64,
        outcomes,
    })
}
