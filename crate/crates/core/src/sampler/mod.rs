//! MCMC kernels over composition ratios and the chain runner.
//!
//! Three kernels share one [`Sampler`] front end:
//!
//! * [`SamplerKind::NaiveMH`] proposes a fresh uniform state every step and
//!   accepts with `min(1, P(x') / P(x))`.
//! * [`SamplerKind::GibbsPair`] picks an unordered coordinate pair uniformly and
//!   resamples its split from the exact pair conditional. It never rejects.
//! * [`SamplerKind::Accelerated`] picks the first coordinate among the nonzero
//!   entries, the second uniformly among the rest, resamples the split from the
//!   pair conditional, and corrects for the state-dependent pair selection with
//!   `min(1, alpha(x') / alpha(x))`.

mod kernels;
mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{sample_initial, CompositionRatio};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::target::TargetDistribution;

pub use kernels::{
    pair_selection_probability, selection_ratio, AcceptanceCheck, PairSelection, Sampler, StepOutcome,
};
pub use state::ChainState;

/// Random generator used for every chain.
pub type ChainRng = ChaCha8Rng;

pub const DEFAULT_BURN_IN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SamplerKind {
    NaiveMH,
    GibbsPair,
    Accelerated,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::NaiveMH, SamplerKind::GibbsPair, SamplerKind::Accelerated];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::NaiveMH => "naive",
            SamplerKind::GibbsPair => "gibbs",
            SamplerKind::Accelerated => "accelerated",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "naive" => Ok(SamplerKind::NaiveMH),
            "gibbs" => Ok(SamplerKind::GibbsPair),
            "accelerated" => Ok(SamplerKind::Accelerated),
            other => Err(format!("unknown sampler `{other}` (expected naive, gibbs or accelerated)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Recorded iterations `T`.
    pub iterations: usize,
    /// Discarded iterations before recording starts.
    pub burn_in: usize,
    pub seed: u64,
    pub record_trace: bool,
    /// See [`Sampler::with_split_stride`]. 1 means exact.
    pub split_stride: u32,
}

impl ChainConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self { iterations, burn_in: DEFAULT_BURN_IN, seed, record_trace: false, split_stride: 1 }
    }

    pub fn burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn record_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn split_stride(mut self, stride: u32) -> Self {
        self.split_stride = stride;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidSpace("chain needs at least one recorded iteration".into()));
        }
        if self.split_stride == 0 {
            return Err(Error::InvalidSpace("split stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult<F> {
    /// Recorded states; empty unless the trace was requested.
    pub samples: Vec<CompositionRatio>,
    pub accepted_rate: F,
    pub updated_rate: F,
    /// Nonzero-count histogram over the recorded iterations.
    pub n_histogram: BTreeMap<usize, u64>,
    pub final_state: CompositionRatio,
    pub iterations: usize,
}

/// Runs a chain seeded from `cfg.seed`.
pub fn run_chain<F: Real>(
    kind: SamplerKind,
    target: &TargetDistribution<F>,
    cfg: &ChainConfig,
    x0: &CompositionRatio,
) -> Result<ChainResult<F>> {
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    run_chain_with(kind, target, cfg, x0, &mut rng, |_, _, _| {})
}

/// Runs a chain on a caller-supplied generator and reports every step
/// (burn-in included) to `observer` as `(iteration, recorded, outcome)`.
pub fn run_chain_with<F, R, O>(
    kind: SamplerKind,
    target: &TargetDistribution<F>,
    cfg: &ChainConfig,
    x0: &CompositionRatio,
    rng: &mut R,
    mut observer: O,
) -> Result<ChainResult<F>>
where
    F: Real,
    R: Rng + ?Sized,
    O: FnMut(usize, bool, &StepOutcome<F>),
{
    cfg.validate()?;
    let space = target.space();
    if x0.len() != space.bins() || x0.total() != u64::from(space.total()) {
        return Err(Error::SumMismatch { expected: u64::from(space.total()), found: x0.total() as i64 });
    }
    if kind == SamplerKind::Accelerated && x0.l0_norm() == 0 {
        return Err(Error::OutOfRange { n: 0, max: space.max_support() });
    }

    let mut sampler = Sampler::new(kind, target).with_split_stride(cfg.split_stride);
    let mut state = ChainState::new(x0);
    let mut samples = Vec::with_capacity(if cfg.record_trace { cfg.iterations } else { 0 });
    let mut n_histogram = BTreeMap::new();
    let (mut accepted, mut updated) = (0usize, 0usize);

    for iteration in 0..cfg.burn_in + cfg.iterations {
        let outcome = sampler
            .step(&mut state, rng)
            .map_err(|e| Error::AtIteration { iteration, source: Box::new(e) })?;
        let recorded = iteration >= cfg.burn_in;
        observer(iteration, recorded, &outcome);
        if !recorded {
            continue;
        }
        debug_assert!(state.is_consistent(space.total()), "state left the space at iteration {iteration}");
        accepted += usize::from(outcome.accepted);
        updated += usize::from(outcome.updated);
        *n_histogram.entry(state.nnz()).or_insert(0) += 1;
        if cfg.record_trace {
            samples.push(state.to_ratio());
        }
    }

    let t = F::lit(cfg.iterations as f64);
    Ok(ChainResult {
        samples,
        accepted_rate: F::lit(accepted as f64) / t,
        updated_rate: F::lit(updated as f64) / t,
        n_histogram,
        final_state: state.to_ratio(),
        iterations: cfg.iterations,
    })
}

/// Seed of chain `index` in a multi-chain run.
#[inline]
pub fn chain_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// Runs `chains` independent chains in parallel. Chain `c` uses a generator
/// seeded with `cfg.seed + c`, first draws its start state from the target's
/// sparsity prior, then runs. Results come back in chain order.
pub fn run_chains<F: Real>(
    kind: SamplerKind,
    target: &TargetDistribution<F>,
    cfg: &ChainConfig,
    chains: usize,
) -> Result<Vec<ChainResult<F>>> {
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChainRng::seed_from_u64(chain_seed(cfg.seed, c));
            let x0 = sample_initial(target.sparsity(), target.space(), &mut rng)?;
            run_chain_with(kind, target, cfg, &x0, &mut rng, |_, _, _| {})
        })
        .collect()
}

/// Recorded nonzero-count histogram normalized to sum 1.
pub fn n_marginal<F: Real>(result: &ChainResult<F>) -> Result<BTreeMap<usize, F>> {
    normalize_counts(&result.n_histogram)
}

pub(crate) fn normalize_counts<F: Real>(counts: &BTreeMap<usize, u64>) -> Result<BTreeMap<usize, F>> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyChain);
    }
    let t = F::lit(total as f64);
    Ok(counts.iter().map(|(&n, &c)| (n, F::lit(c as f64) / t)).collect())
}

fn single_step<F: Real, R: Rng + ?Sized>(
    kind: SamplerKind,
    x: &CompositionRatio,
    target: &TargetDistribution<F>,
    rng: &mut R,
) -> Result<(CompositionRatio, StepOutcome<F>)> {
    let mut state = ChainState::new(x);
    let outcome = Sampler::new(kind, target).step(&mut state, rng)?;
    Ok((state.to_ratio(), outcome))
}

/// One naive Metropolis–Hastings transition: `(next, accepted)`.
pub fn naive_mh_step<F: Real, R: Rng + ?Sized>(
    x: &CompositionRatio,
    target: &TargetDistribution<F>,
    rng: &mut R,
) -> Result<(CompositionRatio, bool)> {
    single_step(SamplerKind::NaiveMH, x, target, rng).map(|(next, o)| (next, o.accepted))
}

/// One uniform-pair Gibbs transition: `(next, accepted, updated)`.
pub fn gibbs_pair_step<F: Real, R: Rng + ?Sized>(
    x: &CompositionRatio,
    target: &TargetDistribution<F>,
    rng: &mut R,
) -> Result<(CompositionRatio, bool, bool)> {
    single_step(SamplerKind::GibbsPair, x, target, rng).map(|(next, o)| (next, o.accepted, o.updated))
}

/// One accelerated transition: `(next, accepted, updated)`.
pub fn accelerated_step<F: Real, R: Rng + ?Sized>(
    x: &CompositionRatio,
    target: &TargetDistribution<F>,
    rng: &mut R,
) -> Result<(CompositionRatio, bool, bool)> {
    if x.l0_norm() == 0 {
        return Err(Error::OutOfRange { n: 0, max: target.space().max_support() });
    }
    single_step(SamplerKind::Accelerated, x, target, rng).map(|(next, o)| (next, o.accepted, o.updated))
}
