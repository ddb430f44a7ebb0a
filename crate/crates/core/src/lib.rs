//! Markov chain Monte Carlo for sparse composition ratios.
//!
//! A composition ratio is a vector of `N` nonnegative integers summing to `M`
//! (for example per-mille amounts of `N` candidate ingredients). Targets
//! combine a categorical prior over the number of nonzero entries with any
//! number of property scorers, and three samplers draw from them:
//! a naive independence Metropolis–Hastings sampler, a uniform-pair Gibbs
//! sampler, and an accelerated pair sampler that only selects pairs touching a
//! nonzero entry and corrects the selection bias in its acceptance step.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which is what the command line uses.
//!
//! ```
//! use compmc::{run_chain, ChainConfig, SamplerKind, SpaceParams, SparsityCondition, Target};
//! use compmc::composition::sample_state_with_support;
//! use rand::SeedableRng;
//!
//! let space = SpaceParams::new(10, 5).unwrap();
//! let prior = SparsityCondition::uniform(2, 5, &space).unwrap();
//! let target = Target::new(space, prior);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let x0 = sample_state_with_support(&space, 3, &mut rng).unwrap();
//! let cfg = ChainConfig::new(2_000, 7).burn_in(500);
//! let result = run_chain(SamplerKind::Accelerated, &target, &cfg, &x0).unwrap();
//! assert!(result.accepted_rate > 0.5);
//! ```

pub mod composition;
pub mod error;
pub mod oracle;
pub mod prior;
pub mod sampler;
pub mod scalar;
pub mod target;

pub use composition::{count_states, log_count_ratio, CompositionRatio, SpaceParams};
pub use error::{Error, Result};
pub use prior::{PriorSpec, SparsityCondition};
pub use sampler::{
    n_marginal, run_chain, run_chain_with, run_chains, ChainConfig, ChainResult, ChainRng, SamplerKind,
};
pub use scalar::Real;
pub use target::{PropertyCondition, Scorer, Segment, TargetDistribution};

/// Exact nonzero-count tally.
pub type BigCount = num_bigint::BigUint;

pub type Target = TargetDistribution<f64>;
pub type Target32 = TargetDistribution<f32>;
pub type Sparsity = SparsityCondition<f64>;
pub type Sparsity32 = SparsityCondition<f32>;
pub type Property = PropertyCondition<f64>;
pub type Chain = ChainResult<f64>;
pub type Chain32 = ChainResult<f32>;
pub type Exact = oracle::ExactDistribution<f64>;
