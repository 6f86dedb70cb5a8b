//! Kendall's tau distance, its distribution under the uniform measure on
//! permutations, and normalization of the triangular kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, CompensatedSum};
use crate::ranking::Permutation;

/// Number of item pairs ordered differently by `a` and `b`.
pub fn kendall_tau(a: &Permutation, b: &Permutation) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    // positions under `a`, listed in `b`'s order; inversions are discordant pairs
    let mut seq: Vec<u32> = b.order().iter().map(|&i| a.positions()[i as usize]).collect();
    let mut buf = vec![0u32; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

fn count_inversions(v: &mut [u32], buf: &mut [u32]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    if n <= 16 {
        let mut inv = 0u64;
        for i in 1..n {
            let x = v[i];
            let mut j = i;
            while j > 0 && v[j - 1] > x {
                v[j] = v[j - 1];
                j -= 1;
                inv += 1;
            }
            v[j] = x;
        }
        return inv;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall distance between two position vectors, quadratic; for small `n`.
pub(crate) fn kendall_positions(a: &[u32], b: &[u32]) -> u64 {
    let n = a.len();
    let mut d = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] < a[j]) != (b[i] < b[j]) {
                d += 1;
            }
        }
    }
    d
}

/// `n(n-1)/2`, the largest Kendall distance.
pub fn max_distance(n: usize) -> u64 {
    (n as u64) * (n.saturating_sub(1) as u64) / 2
}

/// Distribution of the Kendall distance to a fixed permutation under the
/// uniform measure: the Mahonian numbers divided by `n!`.
#[derive(Debug, Clone, PartialEq)]
pub struct MahonianTable {
    n: usize,
    mass: Vec<f64>,
}

impl MahonianTable {
    /// Multiplies in one factor `(1 + z + .. + z^(k-1)) / k` per step, each
    /// coefficient from a running window sum. Only the lower half is computed;
    /// the upper half is its mirror image.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let full = max_distance(n) as usize;
        let mut prev = Vec::with_capacity(full + 1);
        let mut next = Vec::with_capacity(full + 1);
        prev.push(1.0f64);
        for k in 2..=n {
            let top = max_distance(k) as usize;
            let half = top / 2;
            let scale = 1.0 / k as f64;
            next.clear();
            next.resize(top + 1, 0.0);
            let mut window = 0.0;
            for t in 0..=half {
                if t < prev.len() {
                    window += prev[t];
                }
                if t >= k {
                    window -= prev[t - k];
                }
                next[t] = window * scale;
            }
            for t in half + 1..=top {
                next[t] = next[top - t];
            }
            std::mem::swap(&mut prev, &mut next);
        }
        Ok(MahonianTable { n, mass: prev })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_distance(&self) -> u64 {
        max_distance(self.n)
    }

    /// `mass[t]`: fraction of permutations at distance `t`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Unnormalized coefficients (`mass * n!`); exact integers while `n! < 2^53`.
    pub fn counts(&self) -> Vec<f64> {
        let nf = ln_factorial(self.n).exp();
        self.mass.iter().map(|g| (g * nf).round()).collect()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(t, g)| t as f64 * g)
            .collect::<CompensatedSum>()
            .value()
    }
}

pub fn mahonian_distribution(n: usize) -> Result<MahonianTable> {
    MahonianTable::new(n)
}

/// Triangular kernel variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// `(1 - t/h)` without the support cutoff; may go negative past `h`.
    #[default]
    Modified,
    /// `(1 - t/h)` for `t < h`, zero beyond.
    ExactSupport,
}

impl std::str::FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified" => Ok(KernelMode::Modified),
            "exact" | "exact-support" => Ok(KernelMode::ExactSupport),
            other => Err(Error::InvalidArgument(format!("unknown kernel mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for KernelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelMode::Modified => "modified",
            KernelMode::ExactSupport => "exact-support",
        })
    }
}

/// Normalizer of the triangular kernel, stored as `C(h) / n!`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularNormalization {
    n: usize,
    h: f64,
    mode: KernelMode,
    norm_c: f64,
}

impl TriangularNormalization {
    pub fn new(n: usize, h: f64, mode: KernelMode) -> Result<Self> {
        match mode {
            KernelMode::Modified => Self::modified(n, h),
            KernelMode::ExactSupport => Self::with_table(&MahonianTable::new(n)?, h, mode),
        }
    }

    pub fn with_table(table: &MahonianTable, h: f64, mode: KernelMode) -> Result<Self> {
        let n = table.n();
        match mode {
            KernelMode::Modified => Self::modified(n, h),
            KernelMode::ExactSupport => {
                check_positive(h)?;
                let norm_c = table
                    .mass()
                    .iter()
                    .enumerate()
                    .take_while(|(t, _)| (*t as f64) < h)
                    .map(|(t, g)| (1.0 - t as f64 / h) * g)
                    .collect::<CompensatedSum>()
                    .value();
                Ok(TriangularNormalization { n, h, mode, norm_c })
            }
        }
    }

    fn modified(n: usize, h: f64) -> Result<Self> {
        check_positive(h)?;
        let mean = max_distance(n) as f64 / 2.0;
        if h <= mean {
            return Err(Error::InvalidBandwidth {
                h,
                reason: format!("the modified kernel needs h > n(n-1)/4 = {mean}"),
            });
        }
        Ok(TriangularNormalization {
            n,
            h,
            mode: KernelMode::Modified,
            norm_c: 1.0 - mean / h,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// `C(h) / n!`.
    pub fn norm_c(&self) -> f64 {
        self.norm_c
    }

    /// `ln C(h)`.
    pub fn ln_c(&self) -> f64 {
        self.norm_c.ln() + ln_factorial(self.n)
    }

    /// `C(h)` itself; overflows to infinity for large `n`.
    pub fn c(&self) -> f64 {
        if self.n <= 170 {
            // n! is exact in f64 up to 22 and finite up to 170
            self.norm_c * (1..=self.n).map(|k| k as f64).product::<f64>()
        } else {
            self.ln_c().exp()
        }
    }

    /// Unnormalized kernel profile at distance `t`.
    pub fn profile(&self, t: f64) -> f64 {
        match self.mode {
            KernelMode::ExactSupport if t >= self.h => 0.0,
            _ => 1.0 - t / self.h,
        }
    }

    /// Per-permutation kernel weight `K_h(t)`.
    pub fn kernel_weight(&self, t: u64) -> Result<f64> {
        let max = max_distance(self.n);
        if t > max {
            return Err(Error::DistanceOutOfRange { t, max });
        }
        Ok(self.profile(t as f64) / self.c())
    }
}

fn check_positive(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth {
            h,
            reason: "must be a positive finite number".into(),
        })
    }
}

pub fn triangular_normalization(n: usize, h: f64, mode: KernelMode) -> Result<TriangularNormalization> {
    TriangularNormalization::new(n, h, mode)
}

/// Bandwidth used when none is given: `n(n-1)/2` (at least 1), with the
/// modified kernel this keeps every weight non-negative.
pub fn default_bandwidth(n: usize) -> f64 {
    (max_distance(n) as f64).max(1.0)
}
