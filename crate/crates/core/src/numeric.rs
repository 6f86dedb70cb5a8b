//! Small numeric helpers shared by the estimators.

use std::sync::OnceLock;

use rayon::prelude::*;

const TABLE_LEN: usize = 256;

fn small_table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN];
        for k in 1..TABLE_LEN {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    })
}

/// `ln(k!)`. Exact table below 256, Stirling series above (relative error < 1e-15).
pub fn ln_factorial(k: usize) -> f64 {
    if k < TABLE_LEN {
        return small_table()[k];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Fixed chunk width for the parallel reductions. The partition depends only on
/// the input length, so results are bit-identical for any thread count.
pub const REDUCTION_CHUNK: usize = 64;

/// Sum `f` over `items` in parallel with a deterministic reduction order.
pub fn deterministic_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    if items.len() <= REDUCTION_CHUNK {
        return items.iter().map(&f).collect::<CompensatedSum>().value();
    }
    let partials: Vec<f64> = items
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| chunk.iter().map(&f).collect::<CompensatedSum>().value())
        .collect();
    partials.into_iter().collect::<CompensatedSum>().value()
}

/// Like [`deterministic_sum`], with per-chunk scratch state built by `init`.
pub fn deterministic_sum_with<T, S, I, F>(items: &[T], init: I, f: F) -> f64
where
    T: Sync,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &T) -> f64 + Sync,
{
    let run = |chunk: &[T]| {
        let mut state = init();
        chunk
            .iter()
            .map(|x| f(&mut state, x))
            .collect::<CompensatedSum>()
            .value()
    };
    if items.len() <= REDUCTION_CHUNK {
        return run(items);
    }
    let partials: Vec<f64> = items.par_chunks(REDUCTION_CHUNK).map(run).collect();
    partials.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(sum(exp(xs)))`, stable for large magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: CompensatedSum = xs.iter().map(|x| (x - max).exp()).collect();
    max + s.value().ln()
}
