//! Brute-force references and a synthetic data generator.
//!
//! Everything here enumerates permutations directly and shares no code with
//! the closed forms it checks beyond the ranking types and [`kendall_tau`].

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kendall::{kendall_tau, KernelMode};
use crate::ranking::{all_permutations, Item, ItemUniverse, Permutation, TiedRanking, ENUMERATION_BOUND};

fn check_n(n: usize) -> Result<()> {
    if n > ENUMERATION_BOUND {
        Err(Error::TooLarge {
            n,
            bound: ENUMERATION_BOUND,
        })
    } else {
        Ok(())
    }
}

fn profile(t: u64, h: f64, mode: KernelMode) -> f64 {
    let x = 1.0 - t as f64 / h;
    match mode {
        KernelMode::Modified => x,
        KernelMode::ExactSupport if (t as f64) < h => x,
        KernelMode::ExactSupport => 0.0,
    }
}

/// `C(h) = sum over all permutations of the unnormalized kernel at distance
/// from the identity`.
pub fn brute_normalization(n: usize, h: f64, mode: KernelMode) -> Result<f64> {
    check_n(n)?;
    if n == 0 || !(h > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and h > 0".into()));
    }
    let id = Permutation::identity(n);
    let mut c = 0.0;
    for p in all_permutations(n, ENUMERATION_BOUND)? {
        c += profile(kendall_tau(&p, &id)?, h, mode);
    }
    Ok(c)
}

/// Fraction of permutations consistent with `u` that put `i` before `j`.
pub fn brute_pair_pref(u: &TiedRanking, i: Item, j: Item) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidArgument("pair of identical items".into()));
    }
    let perms = u.enumerate_consistent(ENUMERATION_BOUND)?;
    let hits = perms.iter().filter(|p| p.position(i) < p.position(j)).count();
    Ok(hits as f64 / perms.len() as f64)
}

/// Mean Kendall distance between independent uniform draws from the two
/// consistent sets. By linearity over item pairs this is the sum of
/// discordance probabilities, with each set's pair frequencies counted over
/// its enumeration.
pub fn brute_expected_kendall(s: &TiedRanking, r: &TiedRanking) -> Result<f64> {
    let n = s.n();
    let freq = |t: &TiedRanking| -> Result<Vec<f64>> {
        let perms = t.enumerate_consistent(ENUMERATION_BOUND)?;
        let mut before = vec![0.0; n * n];
        for p in &perms {
            for i in 0..n {
                for j in 0..n {
                    if p.position(i) < p.position(j) {
                        before[i * n + j] += 1.0;
                    }
                }
            }
        }
        Ok(before.into_iter().map(|c| c / perms.len() as f64).collect())
    };
    let (a, b) = (freq(s)?, freq(r)?);
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += a[i * n + j] * b[j * n + i] + a[j * n + i] * b[i * n + j];
        }
    }
    Ok(total)
}

/// Uniform mass over each training ranking's consistent permutations,
/// averaged over the training set: `q(sigma) = 1/m sum_i 1[sigma in S_i] / |S_i|`,
/// as `(sigma, q)` pairs with `q > 0`.
pub fn brute_surrogate_mass(rankings: &[TiedRanking]) -> Result<Vec<(Permutation, f64)>> {
    let first = rankings.first().ok_or(Error::EmptyTraining)?;
    let n = first.n();
    check_n(n)?;
    let perms = all_permutations(n, ENUMERATION_BOUND)?;
    let mut q = vec![0.0; perms.len()];
    let m = rankings.len() as f64;
    for s in rankings {
        let set = s.enumerate_consistent(ENUMERATION_BOUND)?;
        let w = 1.0 / (m * set.len() as f64);
        for sigma in &set {
            q[sigma.lex_index()] += w;
        }
    }
    Ok(perms.into_iter().zip(q).filter(|(_, w)| *w > 0.0).collect())
}

fn brute_single(mass: &[(Permutation, f64)], pi: &Permutation, h: f64, mode: KernelMode, c: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (sigma, q) in mass {
        acc += q * profile(kendall_tau(pi, sigma)?, h, mode);
    }
    Ok(acc / c)
}

/// Kernel estimate of every single permutation, indexed by lexicographic rank:
/// `p(pi) = 1/m sum_i 1/|S_i| sum_{sigma in S_i} K_h(T(pi, sigma))`.
pub fn brute_permutation_probs(rankings: &[TiedRanking], h: f64, mode: KernelMode) -> Result<Vec<f64>> {
    let mass = brute_surrogate_mass(rankings)?;
    let n = rankings[0].n();
    let c = brute_normalization(n, h, mode)?;
    all_permutations(n, ENUMERATION_BOUND)?
        .iter()
        .map(|pi| brute_single(&mass, pi, h, mode, c))
        .collect()
}

/// Kernel estimate of an event: [`brute_permutation_probs`] summed over its
/// consistent permutations.
pub fn brute_event_prob(rankings: &[TiedRanking], h: f64, mode: KernelMode, r: &TiedRanking) -> Result<f64> {
    let mass = brute_surrogate_mass(rankings)?;
    let c = brute_normalization(r.n(), h, mode)?;
    let mut total = 0.0;
    for pi in r.enumerate_consistent(ENUMERATION_BOUND)? {
        total += brute_single(&mass, &pi, h, mode, c)?;
    }
    Ok(total)
}

/// The four cells `(i<j, k<l), (i<j, l<k), (j<i, k<l), (j<i, l<k)` summed
/// from per-permutation probabilities.
pub fn brute_joint_cells(probs: &[f64], n: usize, quad: [Item; 4]) -> Result<[f64; 4]> {
    let [i, j, k, l] = quad;
    let mut cells = [0.0; 4];
    for p in all_permutations(n, ENUMERATION_BOUND)? {
        let a = usize::from(p.position(i) > p.position(j));
        let b = usize::from(p.position(k) > p.position(l));
        cells[2 * a + b] += probs[p.lex_index()];
    }
    Ok(cells)
}

/// Mutual information (natural log) of a 2x2 table given row-major.
pub fn brute_mutual_information(cells: [f64; 4]) -> f64 {
    let rows = [cells[0] + cells[1], cells[2] + cells[3]];
    let cols = [cells[0] + cells[2], cells[1] + cells[3]];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = cells[2 * a + b];
            if p > 0.0 {
                mi += p * (p / (rows[a] * cols[b])).ln();
            }
        }
    }
    mi
}

/// Draw from a Mallows model by repeated insertion: the `i`-th item of the
/// center lands `j` places before the end of the partial order with
/// probability proportional to `exp(-theta j)`, which adds `j` inversions.
pub fn sample_mallows<R: Rng + ?Sized>(center: &Permutation, theta: f64, rng: &mut R) -> Permutation {
    let n = center.len();
    let q = (-theta).exp();
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut weights: Vec<f64> = Vec::with_capacity(n);
    for (i, &item) in center.order().iter().enumerate() {
        weights.clear();
        let mut w = 1.0;
        for _ in 0..=i {
            weights.push(w);
            w *= q;
        }
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut shift = i;
        for (j, &w) in weights.iter().enumerate() {
            if u < w {
                shift = j;
                break;
            }
            u -= w;
        }
        order.insert(i - shift, item);
    }
    Permutation::from_order_unchecked(order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MallowsComponent {
    /// Center as item indices, most preferred first.
    pub center: Vec<Item>,
    pub concentration: f64,
    pub weight: f64,
}

/// Mixture of Mallows components observed through independent censoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub m: usize,
    pub components: Vec<MallowsComponent>,
    /// Each item is observed independently with this probability. Users who
    /// would observe nothing are redrawn.
    pub observe_prob: f64,
    /// Probability that an observed item joins the previous group instead of
    /// opening a new one.
    pub tie_prob: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Equal-weight components centered at the identity and at the identity
    /// rotated left by `n / 2 + 1`, both with concentration `theta`; full
    /// observation, no ties.
    pub fn two_component(n: usize, m: usize, theta: f64, seed: u64) -> Self {
        let a: Vec<Item> = (0..n).collect();
        let mut b = a.clone();
        b.rotate_left((n / 2 + 1) % n.max(1));
        SynthConfig {
            n,
            m,
            components: vec![
                MallowsComponent {
                    center: a,
                    concentration: theta,
                    weight: 0.5,
                },
                MallowsComponent {
                    center: b,
                    concentration: theta,
                    weight: 0.5,
                },
            ],
            observe_prob: 1.0,
            tie_prob: 0.0,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub universe: Arc<ItemUniverse>,
    pub latent: Vec<Permutation>,
    pub component: Vec<usize>,
    pub observed: Vec<TiedRanking>,
}

/// Generate `config.m` users. Each user draws from its own ChaCha stream, so
/// the output does not depend on thread count.
pub fn synthesize(config: &SynthConfig) -> Result<SynthData> {
    let n = config.n;
    let universe = ItemUniverse::new(n)?;
    if config.components.is_empty() {
        return Err(Error::InvalidArgument("no mixture components".into()));
    }
    let mut centers = Vec::with_capacity(config.components.len());
    let mut cumulative = Vec::with_capacity(config.components.len());
    let mut total = 0.0;
    for c in &config.components {
        if !(c.weight >= 0.0 && c.weight.is_finite()) {
            return Err(Error::InvalidArgument(format!("component weight {}", c.weight)));
        }
        if !(c.concentration >= 0.0 && c.concentration.is_finite()) {
            return Err(Error::InvalidArgument(format!("concentration {}", c.concentration)));
        }
        let center = Permutation::from_order(c.center.clone())?;
        if center.len() != n {
            return Err(Error::SizeMismatch(n, center.len()));
        }
        centers.push(center);
        total += c.weight;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("component weights sum to zero".into()));
    }
    if !(config.observe_prob > 0.0 && config.observe_prob <= 1.0) {
        return Err(Error::InvalidArgument("observe_prob must be in (0, 1]".into()));
    }
    if !(0.0..=1.0).contains(&config.tie_prob) {
        return Err(Error::InvalidArgument("tie_prob must be in [0, 1]".into()));
    }

    let users: Vec<(Permutation, usize, TiedRanking)> = (0..config.m)
        .into_par_iter()
        .map(|user| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(user as u64);
            let u = rng.random::<f64>() * total;
            let c = cumulative.iter().position(|&x| u < x).unwrap_or(centers.len() - 1);
            let pi = sample_mallows(&centers[c], config.components[c].concentration, &mut rng);
            let seen: Vec<u32> = loop {
                let seen: Vec<u32> = pi
                    .order()
                    .iter()
                    .copied()
                    .filter(|_| rng.random_bool(config.observe_prob))
                    .collect();
                if !seen.is_empty() {
                    break seen;
                }
            };
            let mut groups: Vec<Vec<Item>> = Vec::new();
            for (x, &item) in seen.iter().enumerate() {
                if x > 0 && rng.random_bool(config.tie_prob) {
                    groups.last_mut().unwrap().push(item as Item);
                } else {
                    groups.push(vec![item as Item]);
                }
            }
            let r = TiedRanking::new(&universe, groups).expect("valid censoring");
            (pi, c, r)
        })
        .collect();
    let mut data = SynthData {
        universe,
        latent: Vec::with_capacity(config.m),
        component: Vec::with_capacity(config.m),
        observed: Vec::with_capacity(config.m),
    };
    for (p, c, r) in users {
        data.latent.push(p);
        data.component.push(c);
        data.observed.push(r);
    }
    Ok(data)
}

/// Settings for a synthetic ratings file in the tab-separated
/// `user item rating timestamp` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsConfig {
    pub users: usize,
    pub items: usize,
    /// Approximate total; every user rates at least `min_per_user` items.
    pub ratings: usize,
    pub min_per_user: usize,
    /// Latent taste clusters; items get one genre each from the same set.
    pub genres: usize,
    pub seed: u64,
}

impl RatingsConfig {
    /// Same shape as the MovieLens 100k file: 943 users, 1682 items,
    /// about 100k ratings, at least 20 per user.
    pub fn ml100k_shape(seed: u64) -> Self {
        RatingsConfig {
            users: 943,
            items: 1682,
            ratings: 100_000,
            min_per_user: 20,
            genres: 6,
            seed,
        }
    }
}

/// Ratings from a small latent model: Zipf item popularity, per-item quality,
/// and a bonus when the user's favourite genre matches the item's. Returns
/// the file text and the item genres (index `i` is item id `i + 1`).
pub fn synthesize_ratings(config: &RatingsConfig) -> Result<(String, Vec<usize>)> {
    use std::fmt::Write as _;
    if config.users == 0 || config.items < config.min_per_user.max(1) || config.genres == 0 {
        return Err(Error::InvalidArgument("degenerate ratings config".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let genre: Vec<usize> = (0..config.items).map(|_| rng.random_range(0..config.genres)).collect();
    let quality: Vec<f64> = (0..config.items).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let popularity: Vec<f64> = (0..config.items).map(|i| 1.0 / (i as f64 + 10.0)).collect();
    // heavy-tailed activity, rescaled to the requested total
    let activity: Vec<f64> = (0..config.users).map(|_| (-rng.random::<f64>().ln()).powf(1.5)).collect();
    let total_activity: f64 = activity.iter().sum();
    let spare = config.ratings.saturating_sub(config.users * config.min_per_user) as f64;
    let mut text = String::new();
    for u in 0..config.users {
        let mut urng = ChaCha8Rng::seed_from_u64(config.seed);
        urng.set_stream(u as u64 + 1);
        let count = (config.min_per_user + (spare * activity[u] / total_activity).round() as usize)
            .min(config.items);
        let favourite = urng.random_range(0..config.genres);
        let disliked = urng.random_range(0..config.genres);
        let picked = rand::seq::index::sample_weighted(&mut urng, config.items, |i| popularity[i], count)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut items: Vec<usize> = picked.into_iter().collect();
        items.sort_unstable();
        for i in items {
            let mut score = 3.4 + quality[i] + 0.9 * (urng.random::<f64>() * 2.0 - 1.0);
            if genre[i] == favourite {
                score += 1.0;
            }
            if genre[i] == disliked {
                score -= 1.0;
            }
            let stars = score.round().clamp(1.0, 5.0) as i32;
            let ts = 874_724_710 + urng.random_range(0..20_000_000u64);
            writeln!(text, "{}\t{}\t{}\t{}", u + 1, i + 1, stars, ts).unwrap();
        }
    }
    Ok((text, genre))
}
