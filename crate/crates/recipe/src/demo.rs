//! The recipe-generation pipeline: empirical prior plus taste and timing
//! scorers, one accelerated chain, and a comparison against random recipes
//! drawn from the prior alone.

use std::sync::Arc;

use compmc::composition::sample_initial;
use compmc::oracle::total_variation;
use compmc::{run_chain_with, ChainConfig, ChainRng, CompositionRatio, SamplerKind, Target};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condition::label_condition;
use crate::dataset::{empirical_sparsity_prior, RecipeDataset};
use crate::error::{RecipeError, Result};
use crate::forest::ForestModel;
use crate::similarity::nearest_recipes;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub taste_label: String,
    pub timing_label: String,
    pub c_taste: f64,
    pub c_timing: f64,
    /// Recorded samples, burn-in and seed of the chain.
    pub chain: ChainConfig,
    /// Independent baseline batches, each as large as the chain's sample.
    pub baseline_repeats: usize,
    pub histogram_bins: usize,
    pub nearest: usize,
}

impl DemoConfig {
    pub fn new(taste_label: &str, timing_label: &str, seed: u64) -> Self {
        Self {
            taste_label: taste_label.into(),
            timing_label: timing_label.into(),
            c_taste: 1.0,
            c_timing: 1.0,
            chain: ChainConfig::new(100_000, seed).burn_in(10_000),
            baseline_repeats: 10,
            histogram_bins: 10,
            nearest: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRecipe {
    pub composition: CompositionRatio,
    pub taste_score: f64,
    pub timing_score: f64,
    pub joint_score: f64,
    /// `(dataset recipe index, overlap coefficient)`, best first.
    pub nearest: Vec<(usize, f64)>,
}

/// Joint-score frequencies over equal-width bins of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub edges: Vec<f64>,
    pub mcmc: Vec<f64>,
    pub baseline_mean: Vec<f64>,
    pub baseline_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub samples: usize,
    pub accepted_rate: f64,
    pub updated_rate: f64,
    pub mcmc_mean: f64,
    pub baseline_mean: f64,
    /// 90th percentile of the pooled baseline joint scores.
    pub tail_threshold: f64,
    pub mcmc_tail_mass: f64,
    pub baseline_tail_mass: f64,
    /// Total variation between the MCMC and mean baseline histograms.
    pub histogram_tv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutput {
    pub samples: Vec<GeneratedRecipe>,
    pub histogram: ScoreHistogram,
    pub summary: DemoSummary,
}

fn bin_of(score: f64, bins: usize) -> usize {
    ((score * bins as f64) as usize).min(bins - 1)
}

fn frequencies(scores: &[f64], bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &s in scores {
        h[bin_of(s, bins)] += 1.0;
    }
    h.iter_mut().for_each(|c| *c /= scores.len().max(1) as f64);
    h
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn tail_mass(scores: &[f64], threshold: f64) -> f64 {
    scores.iter().filter(|&&s| s >= threshold).count() as f64 / scores.len().max(1) as f64
}

pub fn run_demo(d: &RecipeDataset, taste: Arc<ForestModel>, timing: Arc<ForestModel>, cfg: &DemoConfig) -> Result<DemoOutput> {
    for m in [&taste, &timing] {
        if m.ingredients != d.ingredient_names {
            return Err(RecipeError::VocabularyMismatch { expected: d.ingredient_names.len(), found: m.ingredients.len() });
        }
    }
    if cfg.histogram_bins == 0 {
        return Err(RecipeError::Core(compmc::Error::InvalidSpace("histogram needs at least one bin".into())));
    }
    let space = d.space();
    let prior = empirical_sparsity_prior(d)?;
    let target = Target::new(space, prior.clone())
        .with_property(label_condition(taste.clone(), &cfg.taste_label, cfg.c_taste)?)
        .with_property(label_condition(timing.clone(), &cfg.timing_label, cfg.c_timing)?);
    let (taste_class, timing_class) = (taste.class_index(&cfg.taste_label)?, timing.class_index(&cfg.timing_label)?);
    let score = |x: &[u32]| -> Result<(f64, f64)> {
        Ok((taste.predict_class(x, taste_class)?, timing.predict_class(x, timing_class)?))
    };

    let mut rng = ChainRng::seed_from_u64(cfg.chain.seed);
    let x0 = sample_initial(&prior, &space, &mut rng)?;
    let chain_cfg = cfg.chain.clone().record_trace(true);
    let chain = run_chain_with(SamplerKind::Accelerated, &target, &chain_cfg, &x0, &mut rng, |_, _, _| {})?;

    let mut samples: Vec<GeneratedRecipe> = Vec::with_capacity(chain.samples.len());
    for x in chain.samples {
        let repeat = samples.last().filter(|prev| prev.composition == x).cloned();
        let recipe = match repeat {
            Some(prev) => prev,
            None => {
                let (t, u) = score(x.values())?;
                let nearest = nearest_recipes(&x, d, cfg.nearest);
                GeneratedRecipe { composition: x, taste_score: t, timing_score: u, joint_score: t * u, nearest }
            }
        };
        samples.push(recipe);
    }
    let mcmc_scores: Vec<f64> = samples.iter().map(|s| s.joint_score).collect();

    let batch = mcmc_scores.len();
    let baseline: Vec<Vec<f64>> = (0..cfg.baseline_repeats.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChainRng::seed_from_u64(cfg.chain.seed);
            rng.set_stream(1 + r as u64);
            (0..batch)
                .map(|_| {
                    let x = sample_initial(&prior, &space, &mut rng)?;
                    score(x.values()).map(|(t, u)| t * u)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let bins = cfg.histogram_bins;
    let per_batch: Vec<Vec<f64>> = baseline.iter().map(|b| frequencies(b, bins)).collect();
    let reps = per_batch.len() as f64;
    let baseline_mean: Vec<f64> = (0..bins).map(|k| per_batch.iter().map(|h| h[k]).sum::<f64>() / reps).collect();
    let baseline_std: Vec<f64> = (0..bins)
        .map(|k| {
            if per_batch.len() < 2 {
                return 0.0;
            }
            let ss: f64 = per_batch.iter().map(|h| (h[k] - baseline_mean[k]).powi(2)).sum();
            (ss / (reps - 1.0)).sqrt()
        })
        .collect();
    let mcmc = frequencies(&mcmc_scores, bins);

    let mut pooled: Vec<f64> = baseline.concat();
    pooled.sort_by(f64::total_cmp);
    let rank = ((0.9 * pooled.len() as f64).ceil() as usize).clamp(1, pooled.len()) - 1;
    let tail_threshold = pooled[rank];

    let summary = DemoSummary {
        samples: batch,
        accepted_rate: chain.accepted_rate,
        updated_rate: chain.updated_rate,
        mcmc_mean: mean(&mcmc_scores),
        baseline_mean: mean(&pooled),
        tail_threshold,
        mcmc_tail_mass: tail_mass(&mcmc_scores, tail_threshold),
        baseline_tail_mass: tail_mass(&pooled, tail_threshold),
        histogram_tv: total_variation(&mcmc, &baseline_mean)?,
    };
    let edges = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    Ok(DemoOutput { samples, histogram: ScoreHistogram { edges, mcmc, baseline_mean, baseline_std }, summary })
}

/// The `k` best distinct generated recipes by joint score, earliest first on ties.
pub fn top_recipes(samples: &[GeneratedRecipe], k: usize) -> Vec<&GeneratedRecipe> {
    let mut seen = std::collections::HashSet::new();
    let mut distinct: Vec<&GeneratedRecipe> = samples.iter().filter(|s| seen.insert(s.composition.values())).collect();
    distinct.sort_by(|a, b| b.joint_score.total_cmp(&a.joint_score));
    distinct.truncate(k);
    distinct
}
