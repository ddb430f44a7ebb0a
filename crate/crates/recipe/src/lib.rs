//! Recipe generation on top of `compmc`.
//!
//! Loads a recipe table, turns it into per-mille composition ratios, learns an
//! empirical sparsity prior and random-forest label scorers from it, and runs
//! the accelerated sampler to propose new recipes that score well on both a
//! taste and a timing label.

pub mod condition;
pub mod dataset;
pub mod demo;
pub mod error;
pub mod forest;
pub mod similarity;
pub mod synth;
pub mod units;

pub use condition::{label_condition, LabelScorer};
pub use dataset::{
    empirical_sparsity_prior, largest_remainder, load_recipes, read_recipes, LabelKind, Recipe, RecipeDataset,
    RecipeRow,
};
pub use demo::{run_demo, DemoConfig, DemoOutput, DemoSummary, GeneratedRecipe, ScoreHistogram};
pub use error::{RecipeError, Result};
pub use forest::{train_forest, ForestModel, ForestParams};
pub use similarity::{nearest_recipes, overlap_coefficient};
pub use synth::synthetic_rows;
pub use units::UnitTable;
