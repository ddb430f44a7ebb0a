//! The discrete state space: nonnegative integer vectors of length `N` that sum
//! to `M`, their combinatorics, and exact uniform samplers over them.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::SparsityCondition;
use crate::scalar::Real;

/// `N` bins holding `M` balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceParams {
    bins: usize,
    total: u32,
}

impl SpaceParams {
    pub fn new(bins: usize, total: u32) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidSpace(format!("need at least 2 bins, got {bins}")));
        }
        if total < 1 {
            return Err(Error::InvalidSpace("total must be at least 1".into()));
        }
        Ok(Self { bins, total })
    }

    /// Number of bins `N`.
    #[inline]
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Total amount `M`.
    #[inline]
    pub fn total(&self) -> u32 {
        self.total
    }

    /// Largest attainable nonzero count, `min(N, M)`.
    #[inline]
    pub fn max_support(&self) -> usize {
        self.bins.min(self.total as usize)
    }

    /// `|X| = C(M + N - 1, N - 1)`, the number of weak compositions.
    pub fn state_count(&self) -> BigUint {
        binomial(self.total as u64 + self.bins as u64 - 1, self.bins as u64 - 1)
    }

    fn check_support(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_support() {
            Err(Error::OutOfRange { n, max: self.max_support() })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for SpaceParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={}, M={}", self.bins, self.total)
    }
}

/// A validated member of the state space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompositionRatio(Vec<u32>);

impl CompositionRatio {
    /// Checks length, sign and sum of raw values against `space`.
    pub fn validate(values: &[i64], space: &SpaceParams) -> Result<Self> {
        if values.len() != space.bins() {
            return Err(Error::WrongLength { expected: space.bins(), found: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(Error::NegativeEntry { index, value });
        }
        let sum: i64 = values.iter().sum();
        if sum != i64::from(space.total()) {
            return Err(Error::SumMismatch { expected: u64::from(space.total()), found: sum });
        }
        Ok(Self(values.iter().map(|&v| v as u32).collect()))
    }

    /// Same checks as [`validate`](Self::validate) for values already unsigned.
    pub fn from_counts(values: Vec<u32>, space: &SpaceParams) -> Result<Self> {
        if values.len() != space.bins() {
            return Err(Error::WrongLength { expected: space.bins(), found: values.len() });
        }
        let sum: u64 = values.iter().map(|&v| u64::from(v)).sum();
        if sum != u64::from(space.total()) {
            return Err(Error::SumMismatch { expected: u64::from(space.total()), found: sum as i64 });
        }
        Ok(Self(values))
    }

    /// Wraps values the caller already knows are valid.
    pub(crate) fn from_vec_unchecked(values: Vec<u32>) -> Self {
        Self(values)
    }

    #[inline]
    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    /// Number of strictly positive entries.
    pub fn l0_norm(&self) -> usize {
        l0_norm(&self.0)
    }

    /// Indices of the nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i).collect()
    }
}

impl fmt::Display for CompositionRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Number of strictly positive entries of a raw slice.
#[inline]
pub fn l0_norm(values: &[u32]) -> usize {
    values.iter().filter(|&&v| v > 0).count()
}

/// Exact number of states with exactly `n` nonzero entries,
/// `C(N, n) * C(M - 1, M - n)`.
pub fn count_states(space: &SpaceParams, n: usize) -> Result<BigUint> {
    space.check_support(n)?;
    let m = space.total() as usize;
    let choose_bins = binomial(space.bins() as u64, n as u64);
    let place_balls = binomial(m as u64 - 1, (m - n) as u64);
    Ok(choose_bins * place_balls)
}

/// Exact `C(n, k)` by the running product `Π (n - k + i) / i`, where every
/// partial product is itself a binomial coefficient and so divides exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// Natural log of an arbitrary-precision count, accurate to f64 precision even
/// when the value overflows `f64`.
pub fn ln_count(value: &BigUint) -> f64 {
    if value.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = value.bits();
    if bits <= 1000 {
        return value.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let head = (value >> shift).to_f64().expect("64-bit head");
    head.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `log(count_states(n) / count_states(n_next))` for adjacent nonzero counts,
/// without forming either count.
pub fn log_count_ratio<F: Real>(n: usize, n_next: usize, space: &SpaceParams) -> Result<F> {
    space.check_support(n)?;
    space.check_support(n_next)?;
    let big_n = space.bins() as f64;
    let big_m = f64::from(space.total());
    let nf = n as f64;
    let ratio = if n_next == n + 1 {
        nf * (nf + 1.0) / ((big_n - nf) * (big_m - nf))
    } else if n_next + 1 == n {
        (big_n - nf + 1.0) * (big_m - nf + 1.0) / (nf * (nf - 1.0))
    } else if n_next == n {
        1.0
    } else {
        return Err(Error::StepTooLarge { from: n, to: n_next });
    };
    Ok(F::lit(ratio.ln()))
}

/// A state in run-length form: `(bin, amount)` pairs with positive amounts,
/// ascending by bin.
pub type SparseState = Vec<(usize, u32)>;

/// Draws a uniformly random state into `out` via the stars-and-bars bijection.
///
/// Chooses whichever of the `M` star slots or `N - 1` bar slots is smaller among
/// the `M + N - 1` positions, so the cost is `O(min(M, N) log min(M, N))`.
pub fn sample_uniform_sparse<R: Rng + ?Sized>(space: &SpaceParams, rng: &mut R, out: &mut SparseState) {
    out.clear();
    let m = space.total() as usize;
    let bars = space.bins() - 1;
    let slots = m + bars;
    if m <= bars {
        let mut stars = index::sample(rng, slots, m).into_vec();
        stars.sort_unstable();
        for (rank, pos) in stars.into_iter().enumerate() {
            let bin = pos - rank;
            match out.last_mut() {
                Some((last, amount)) if *last == bin => *amount += 1,
                _ => out.push((bin, 1)),
            }
        }
    } else {
        let mut cuts = index::sample(rng, slots, bars).into_vec();
        cuts.sort_unstable();
        let mut prev: isize = -1;
        for (bin, &cut) in cuts.iter().enumerate() {
            let amount = (cut as isize - prev - 1) as u32;
            if amount > 0 {
                out.push((bin, amount));
            }
            prev = cut as isize;
        }
        let amount = (slots as isize - prev - 1) as u32;
        if amount > 0 {
            out.push((bars, amount));
        }
    }
}

/// Expands a run-length state into a dense vector of length `N`.
pub fn densify(space: &SpaceParams, sparse: &[(usize, u32)]) -> Vec<u32> {
    let mut values = vec![0; space.bins()];
    for &(bin, amount) in sparse {
        values[bin] = amount;
    }
    values
}

/// Uniform draw from the whole state space.
pub fn sample_uniform_state<R: Rng + ?Sized>(space: &SpaceParams, rng: &mut R) -> CompositionRatio {
    let mut sparse = SparseState::new();
    sample_uniform_sparse(space, rng, &mut sparse);
    CompositionRatio(densify(space, &sparse))
}

/// Uniform draw among the states with exactly `n` nonzero entries: a uniform
/// `n`-subset of bins, then a uniform composition of `M` into `n` positive parts.
pub fn sample_state_with_support<R: Rng + ?Sized>(
    space: &SpaceParams,
    n: usize,
    rng: &mut R,
) -> Result<CompositionRatio> {
    space.check_support(n)?;
    let m = space.total() as usize;
    let mut bins = index::sample(rng, space.bins(), n).into_vec();
    bins.sort_unstable();
    // Positive composition of M into n parts: n-1 cuts among the M-1 gaps.
    let mut cuts = index::sample(rng, m - 1, n - 1).into_vec();
    cuts.sort_unstable();
    let mut values = vec![0u32; space.bins()];
    let mut prev = 0usize;
    for (slot, &cut) in cuts.iter().enumerate() {
        values[bins[slot]] = (cut + 1 - prev) as u32;
        prev = cut + 1;
    }
    values[bins[n - 1]] = (m - prev) as u32;
    Ok(CompositionRatio(values))
}

/// Draws `n` from the prior, then a uniform state with that many nonzeros.
pub fn sample_initial<F: Real, R: Rng + ?Sized>(
    prior: &SparsityCondition<F>,
    space: &SpaceParams,
    rng: &mut R,
) -> Result<CompositionRatio> {
    let n = prior.sample_n(rng);
    sample_state_with_support(space, n, rng)
}
