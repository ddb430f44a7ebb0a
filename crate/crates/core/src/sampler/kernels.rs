use rand::Rng;

use crate::composition::{densify, sample_uniform_sparse, SparseState};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::target::{sample_pair_conditional, TargetDistribution};

use super::state::ChainState;
use super::SamplerKind;

/// Probability that the nonzero-first selection picks the unordered pair
/// `{i, j}` from a state with `n` nonzeros: `2 / (n (N - 1))` when both entries
/// are nonzero, `1 / (n (N - 1))` when exactly one is.
#[inline]
pub fn pair_selection_probability<F: Real>(n: usize, bins: usize, both_nonzero: bool) -> F {
    let k = if both_nonzero { 2.0 } else { 1.0 };
    F::lit(k / (n as f64 * (bins as f64 - 1.0)))
}

/// The unordered pair chosen by the accelerated kernel and its selection
/// probability in the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSelection<F> {
    pub i: usize,
    pub j: usize,
    pub alpha: F,
}

impl<F: Real> PairSelection<F> {
    /// `None` for the double-zero case, which the selection rule never produces.
    pub fn new(values: &[u32], n: usize, i: usize, j: usize) -> Option<Self> {
        let (a, b) = (values[i] > 0, values[j] > 0);
        if !(a || b) || i == j {
            return None;
        }
        Some(Self { i, j, alpha: pair_selection_probability(n, values.len(), a && b) })
    }
}

/// The closed-form ratio `alpha(x') / alpha(x)` for a move from `n` to
/// `n_next` nonzeros.
#[inline]
pub fn selection_ratio<F: Real>(n: usize, n_next: usize) -> F {
    let nf = n as f64;
    if n_next == n + 1 {
        F::lit(2.0 * nf / (nf + 1.0))
    } else if n_next + 1 == n {
        F::lit(nf / (2.0 * (nf - 1.0)))
    } else {
        F::one()
    }
}

/// Acceptance ratio of one accelerated proposal computed by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceCheck<F> {
    pub n: usize,
    pub n_next: usize,
    /// `alpha(x') / alpha(x)` from the closed form.
    pub shortcut: F,
    /// `P(x') Q(x', x) / (P(x) Q(x, x'))` assembled from the pair selection
    /// probabilities and the pair-conditional weights. `None` when the current
    /// state has zero probability or a split stride is active.
    pub general: Option<F>,
}

impl<F: Real> AcceptanceCheck<F> {
    pub fn routes_agree(&self, tol: F) -> bool {
        self.general.map_or(true, |g| (g - self.shortcut).abs() <= tol * self.shortcut.max(F::one()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<F> {
    pub accepted: bool,
    pub updated: bool,
    pub check: Option<AcceptanceCheck<F>>,
}

/// One MCMC transition kernel bound to a target, with reusable buffers.
pub struct Sampler<'t, F> {
    kind: SamplerKind,
    target: &'t TargetDistribution<F>,
    stride: u32,
    log_weights: Vec<F>,
    probs: Vec<F>,
    proposal: SparseState,
    dense: Vec<u32>,
    energy_cache: Option<(u64, F)>,
}

impl<'t, F: Real> Sampler<'t, F> {
    pub fn new(kind: SamplerKind, target: &'t TargetDistribution<F>) -> Self {
        Self {
            kind,
            target,
            stride: 1,
            log_weights: Vec::new(),
            probs: Vec::new(),
            proposal: SparseState::new(),
            dense: Vec::new(),
            energy_cache: None,
        }
    }

    /// Evaluates only every `stride`-th split of a pair (plus the current split
    /// and the endpoint). Any stride above 1 changes the proposal and therefore
    /// the invariant distribution; it trades exactness for fewer scorer calls.
    pub fn with_split_stride(mut self, stride: u32) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<StepOutcome<F>> {
        match self.kind {
            SamplerKind::NaiveMH => self.naive_step(state, rng),
            SamplerKind::GibbsPair => self.gibbs_step(state, rng),
            SamplerKind::Accelerated => self.accelerated_step(state, rng),
        }
    }

    fn current_energy(&mut self, state: &ChainState) -> Result<F> {
        if let Some((version, e)) = self.energy_cache {
            if version == state.version() {
                return Ok(e);
            }
        }
        let e = self.target.energy_of_values(state.values(), state.nnz())?;
        self.energy_cache = Some((state.version(), e));
        Ok(e)
    }

    fn naive_step<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<StepOutcome<F>> {
        let space = *self.target.space();
        sample_uniform_sparse(&space, rng, &mut self.proposal);
        let n_next = self.proposal.len();
        let proposed = if self.target.has_active_properties() {
            self.dense = densify(&space, &self.proposal);
            self.target.energy_of_values(&self.dense, n_next)?
        } else {
            self.target.sparsity_energy_for(n_next)
        };
        let current = self.current_energy(state)?;
        let log_ratio = if proposed == F::infinity() {
            F::neg_infinity()
        } else if current == F::infinity() {
            F::infinity()
        } else {
            current - proposed
        };
        let a = log_ratio.min(F::zero()).exp();
        let u = F::unit(rng);
        let accepted = a >= F::one() || u < a;
        let mut updated = false;
        if accepted {
            updated = !state.equals_sparse(&self.proposal);
            if updated {
                state.assign_sparse(&self.proposal);
            }
            self.energy_cache = Some((state.version(), proposed));
        }
        Ok(StepOutcome { accepted, updated, check: None })
    }

    /// Fills `probs` with the normalized pair conditional and returns the
    /// log normalizer relative to `log_weights`.
    fn pair_conditional(&mut self, state: &mut ChainState, i: usize, j: usize) -> Result<F> {
        let values = state.values();
        let n_rest = state.nnz() - usize::from(values[i] > 0) - usize::from(values[j] > 0);
        self.target
            .fill_pair_log_weights(state.values_mut_raw(), i, j, n_rest, self.stride, &mut self.log_weights)?;
        let max = self.log_weights.iter().copied().fold(F::neg_infinity(), F::max);
        if max == F::neg_infinity() || max.is_nan() {
            return Err(Error::AllZeroWeights { i, j });
        }
        self.probs.clear();
        self.probs.extend(self.log_weights.iter().map(|&w| (w - max).exp()));
        let total = self.probs.iter().fold(F::zero(), |acc, &p| acc + p);
        for p in &mut self.probs {
            *p = *p / total;
        }
        Ok(max + total.ln())
    }

    fn draw_other<R: Rng + ?Sized>(bins: usize, i: usize, rng: &mut R) -> usize {
        let j = rng.gen_range(0..bins - 1);
        if j >= i {
            j + 1
        } else {
            j
        }
    }

    fn gibbs_step<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<StepOutcome<F>> {
        let bins = state.values().len();
        let i = rng.gen_range(0..bins);
        let j = Self::draw_other(bins, i, rng);
        let (xi, xj) = (state.values()[i], state.values()[j]);
        if xi + xj == 0 {
            return Ok(StepOutcome { accepted: true, updated: false, check: None });
        }
        self.pair_conditional(state, i, j)?;
        let k = sample_pair_conditional(&self.probs, rng) as u32;
        let updated = k != xi;
        if updated {
            state.set(i, k);
            state.set(j, xi + xj - k);
        }
        Ok(StepOutcome { accepted: true, updated, check: None })
    }

    fn accelerated_step<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<StepOutcome<F>> {
        let n = state.nnz();
        let bins = state.values().len();
        let i = state.support()[rng.gen_range(0..n)];
        let j = Self::draw_other(bins, i, rng);
        let (xi, xj) = (state.values()[i], state.values()[j]);
        let s = xi + xj;
        let selection = PairSelection::<F>::new(state.values(), n, i, j).expect("x_i > 0 by construction");

        let log_norm = self.pair_conditional(state, i, j)?;
        let k = sample_pair_conditional(&self.probs, rng) as u32;
        let n_next = n - usize::from(xi > 0) - usize::from(xj > 0) + usize::from(k > 0) + usize::from(k < s);

        let shortcut: F = selection_ratio(n, n_next);
        let general = if self.stride == 1 && self.log_weights[xi as usize] > F::neg_infinity() {
            let reverse = pair_selection_probability::<F>(n_next, bins, k > 0 && k < s);
            let log_p_ratio = self.log_weights[k as usize] - self.log_weights[xi as usize];
            let log_q_back = reverse.ln() + self.log_weights[xi as usize] - log_norm;
            let log_q_fwd = selection.alpha.ln() + self.log_weights[k as usize] - log_norm;
            Some((log_p_ratio + log_q_back - log_q_fwd).exp())
        } else {
            None
        };
        let check = AcceptanceCheck { n, n_next, shortcut, general };
        debug_assert!(shortcut > F::lit(0.5), "acceptance ratio {shortcut} must exceed 1/2");
        debug_assert!(
            check.routes_agree(F::lit(1e-9).max(F::epsilon() * F::lit(64.0))),
            "acceptance routes disagree: {check:?}"
        );

        let a = shortcut.min(F::one());
        let u = F::unit(rng);
        let accepted = a >= F::one() || u < a;
        let updated = accepted && k != xi;
        if updated {
            state.set(i, k);
            state.set(j, s - k);
        }
        Ok(StepOutcome { accepted, updated, check: Some(check) })
    }
}
