//! Energy-based target distributions over composition ratios.
//!
//! The unnormalized log-probability of a state is minus its total energy:
//! one sparsity term that depends only on the nonzero count `n`, plus one
//! `-c log y(x)` term per property scorer. The normalizer is never formed here.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::composition::{l0_norm, log_count_ratio, CompositionRatio, SpaceParams};
use crate::error::{Error, Result};
use crate::prior::SparsityCondition;
use crate::scalar::Real;

/// Default clamp applied to scorer outputs before taking the log.
pub const DEFAULT_SCORE_FLOOR: f64 = 1e-9;

/// One constant piece of a scorer restricted to a pair line: the score holds
/// for every split `k >= start` up to the next segment's start. Along the line
/// of pair `(i, j)` with `s = x_i + x_j`, split `k` means `x_i = k, x_j = s - k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<F> {
    pub start: u32,
    pub value: F,
}

/// Nonnegative goodness-of-fit function over states.
pub trait Scorer<F>: Send + Sync {
    fn score(&self, values: &[u32]) -> Result<F>;

    /// Piecewise-constant scores along the pair line of `(i, j)`, covering every
    /// split `0..=x_i + x_j` with segments sorted by `start` and the first
    /// starting at 0. Scorers that cannot do better than pointwise evaluation
    /// return `None`.
    fn score_pair_line(&self, _values: &[u32], _i: usize, _j: usize) -> Option<Result<Vec<Segment<F>>>> {
        None
    }
}

/// Adapts a plain closure into a [`Scorer`].
pub struct FnScorer<G>(pub G);

impl<F, G> Scorer<F> for FnScorer<G>
where
    G: Fn(&[u32]) -> F + Send + Sync,
{
    fn score(&self, values: &[u32]) -> Result<F> {
        Ok((self.0)(values))
    }
}

/// A property condition: scorer, priority `c` and optional floor clamp.
#[derive(Clone)]
pub struct PropertyCondition<F> {
    scorer: Arc<dyn Scorer<F>>,
    priority: F,
    floor: Option<F>,
}

impl<F: Real> PropertyCondition<F> {
    pub fn new(scorer: Arc<dyn Scorer<F>>) -> Self {
        Self { scorer, priority: F::one(), floor: Some(F::lit(DEFAULT_SCORE_FLOOR)) }
    }

    pub fn from_fn<G>(f: G) -> Self
    where
        G: Fn(&[u32]) -> F + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnScorer(f)))
    }

    pub fn with_priority(mut self, priority: F) -> Result<Self> {
        if !priority.is_finite() || priority < F::zero() {
            return Err(Error::InvalidPrior(format!("property priority {priority} must be finite and >= 0")));
        }
        self.priority = priority;
        Ok(self)
    }

    /// `None` disables clamping: a zero score then means infinite energy.
    pub fn with_floor(mut self, floor: Option<F>) -> Result<Self> {
        if let Some(f) = floor {
            if !(f > F::zero()) || !f.is_finite() {
                return Err(Error::InvalidPrior(format!("score floor {f} must be positive")));
            }
        }
        self.floor = floor;
        Ok(self)
    }

    #[inline]
    pub fn priority(&self) -> F {
        self.priority
    }

    #[inline]
    pub fn floor(&self) -> Option<F> {
        self.floor
    }

    pub fn scorer(&self) -> &Arc<dyn Scorer<F>> {
        &self.scorer
    }

    #[inline]
    fn is_disabled(&self) -> bool {
        self.priority == F::zero()
    }

    /// `-c log(max(score, floor))`.
    pub fn energy_of_score(&self, score: F) -> Result<F> {
        if score.is_nan() || score < F::zero() || score.is_infinite() {
            return Err(Error::ScorerFailure(format!("scorer returned {score}, expected a finite value >= 0")));
        }
        if self.is_disabled() {
            return Ok(F::zero());
        }
        let clamped = match self.floor {
            Some(floor) => score.max(floor),
            None => score,
        };
        if clamped == F::zero() {
            return Ok(F::infinity());
        }
        Ok(-self.priority * clamped.ln())
    }

    pub fn energy(&self, values: &[u32]) -> Result<F> {
        if self.is_disabled() {
            return Ok(F::zero());
        }
        self.energy_of_score(self.scorer.score(values)?)
    }
}

impl<F: fmt::Debug> fmt::Debug for PropertyCondition<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PropertyCondition")
            .field("priority", &self.priority)
            .field("floor", &self.floor)
            .finish_non_exhaustive()
    }
}

/// `P(x | Y) ∝ exp(-E_sparse(x) - Σ_k E_k(x))`.
#[derive(Debug, Clone)]
pub struct TargetDistribution<F> {
    space: SpaceParams,
    sparsity: SparsityCondition<F>,
    properties: Vec<PropertyCondition<F>>,
    /// Sparsity energy by nonzero count; index 0 is unused.
    sparse_energy: Vec<F>,
    log_counts: Vec<F>,
}

impl<F: Real> TargetDistribution<F> {
    pub fn new(space: SpaceParams, sparsity: SparsityCondition<F>) -> Self {
        let max = space.max_support();
        // ln count(1) = ln N, then walk the adjacent-count ratios upward.
        let mut log_counts = vec![F::neg_infinity(); max + 1];
        log_counts[1] = F::lit((space.bins() as f64).ln());
        let mut acc = (space.bins() as f64).ln();
        for n in 1..max {
            let r: f64 = log_count_ratio(n, n + 1, &space).expect("adjacent feasible counts");
            acc -= r;
            log_counts[n + 1] = F::lit(acc);
        }
        let c = sparsity.priority();
        let sparse_energy = (0..=max)
            .map(|n| {
                let y = sparsity.weight(n);
                if n == 0 || y == F::zero() {
                    F::infinity()
                } else {
                    -c * (y.ln() - log_counts[n])
                }
            })
            .collect();
        Self { space, sparsity, properties: Vec::new(), sparse_energy, log_counts }
    }

    pub fn with_property(mut self, condition: PropertyCondition<F>) -> Self {
        self.properties.push(condition);
        self
    }

    #[inline]
    pub fn space(&self) -> &SpaceParams {
        &self.space
    }

    #[inline]
    pub fn sparsity(&self) -> &SparsityCondition<F> {
        &self.sparsity
    }

    pub fn properties(&self) -> &[PropertyCondition<F>] {
        &self.properties
    }

    /// True when some property condition can move the energy.
    pub fn has_active_properties(&self) -> bool {
        self.properties.iter().any(|p| !p.is_disabled())
    }

    /// `ln count_states(n)` from the running product of adjacent-count ratios.
    pub fn log_count(&self, n: usize) -> F {
        self.log_counts.get(n).copied().unwrap_or_else(F::neg_infinity)
    }

    /// Sparsity energy as a function of the nonzero count alone.
    #[inline]
    pub fn sparsity_energy_for(&self, n: usize) -> F {
        self.sparse_energy.get(n).copied().unwrap_or_else(F::infinity)
    }

    pub fn sparsity_energy(&self, x: &CompositionRatio) -> F {
        self.sparsity_energy_for(x.l0_norm())
    }

    pub fn property_energy(&self, values: &[u32]) -> Result<F> {
        let mut total = F::zero();
        for p in &self.properties {
            total = total + p.energy(values)?;
            if total == F::infinity() {
                break;
            }
        }
        Ok(total)
    }

    pub(crate) fn energy_of_values(&self, values: &[u32], n: usize) -> Result<F> {
        let sparse = self.sparsity_energy_for(n);
        if sparse == F::infinity() {
            return Ok(sparse);
        }
        Ok(sparse + self.property_energy(values)?)
    }

    pub fn total_energy(&self, x: &CompositionRatio) -> Result<F> {
        self.energy_of_values(x.values(), x.l0_norm())
    }

    /// `log P(x2) - log P(x)`; `-inf` whenever `x2` has zero probability.
    pub fn log_prob_ratio(&self, x: &CompositionRatio, x2: &CompositionRatio) -> Result<F> {
        let e2 = self.total_energy(x2)?;
        if e2 == F::infinity() {
            return Ok(F::neg_infinity());
        }
        let e1 = self.total_energy(x)?;
        Ok(e1 - e2)
    }

    /// Unnormalized log-weights `-E` of every split of the pair `(i, j)`, with
    /// all other coordinates fixed. `n_rest` is the nonzero count outside the
    /// pair. With `stride > 1` only splits that are multiples of `stride`, the
    /// current split and the endpoint `s` are candidates; the rest get `-inf`.
    ///
    /// `values` is restored before returning.
    pub(crate) fn fill_pair_log_weights(
        &self,
        values: &mut [u32],
        i: usize,
        j: usize,
        n_rest: usize,
        stride: u32,
        out: &mut Vec<F>,
    ) -> Result<()> {
        let (old_i, old_j) = (values[i], values[j]);
        let s = old_i + old_j;
        out.clear();
        out.extend((0..=s).map(|k| {
            if stride > 1 && k % stride != 0 && k != s && k != old_i {
                return F::neg_infinity();
            }
            let n = n_rest + usize::from(k > 0) + usize::from(k < s);
            -self.sparsity_energy_for(n)
        }));

        for prop in self.properties.iter().filter(|p| !p.is_disabled()) {
            match prop.scorer.score_pair_line(values, i, j) {
                Some(segments) => {
                    let segments = segments?;
                    for (idx, seg) in segments.iter().enumerate() {
                        let end = segments.get(idx + 1).map_or(s + 1, |next| next.start.min(s + 1));
                        if seg.start >= end {
                            continue;
                        }
                        let range = seg.start as usize..end as usize;
                        if out[range.clone()].iter().all(|w| *w == F::neg_infinity()) {
                            continue;
                        }
                        let e = prop.energy_of_score(seg.value)?;
                        for w in &mut out[range] {
                            *w = *w - e;
                        }
                    }
                }
                None => {
                    let result = (|| {
                        for k in 0..=s {
                            if out[k as usize] == F::neg_infinity() {
                                continue;
                            }
                            values[i] = k;
                            values[j] = s - k;
                            let e = prop.energy(values)?;
                            out[k as usize] = out[k as usize] - e;
                        }
                        Ok(())
                    })();
                    values[i] = old_i;
                    values[j] = old_j;
                    result?;
                }
            }
        }
        Ok(())
    }

    /// Unnormalized target probabilities of the `s + 1` splits of `(i, j)`,
    /// scaled so the largest is 1.
    ///
    /// # Panics
    /// If `i == j` or either index is out of range.
    pub fn pair_conditional_weights(&self, x: &CompositionRatio, i: usize, j: usize) -> Result<Vec<F>> {
        assert_ne!(i, j, "pair indices must differ");
        let mut values = x.values().to_vec();
        let n_rest = l0_norm(&values) - usize::from(values[i] > 0) - usize::from(values[j] > 0);
        let mut weights = Vec::new();
        self.fill_pair_log_weights(&mut values, i, j, n_rest, 1, &mut weights)?;
        exp_normalize_max(&mut weights).ok_or(Error::AllZeroWeights { i, j })?;
        Ok(weights)
    }
}

/// Replaces log-weights by `exp(w - max w)` in place. Returns the max, or
/// `None` if every entry is `-inf`.
pub(crate) fn exp_normalize_max<F: Real>(log_weights: &mut [F]) -> Option<F> {
    let max = log_weights.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() || max.is_nan() {
        return None;
    }
    for w in log_weights.iter_mut() {
        *w = (*w - max).exp();
    }
    Some(max)
}

/// Categorical draw proportional to `weights`.
pub fn sample_pair_conditional<F: Real, R: Rng + ?Sized>(weights: &[F], rng: &mut R) -> usize {
    let total = weights.iter().fold(F::zero(), |acc, &w| acc + w);
    let u = F::unit(rng) * total;
    let mut acc = F::zero();
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > F::zero() {
            acc = acc + w;
            last_positive = k;
            if u < acc {
                return k;
            }
        }
    }
    last_positive
}
