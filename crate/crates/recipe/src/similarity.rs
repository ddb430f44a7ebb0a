use compmc::CompositionRatio;

use crate::dataset::RecipeDataset;

/// Szymkiewicz–Simpson coefficient of the two ingredient supports:
/// `|A ∩ B| / min(|A|, |B|)`.
pub fn overlap_coefficient(a: &CompositionRatio, b: &CompositionRatio) -> f64 {
    let (mut common, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        na += usize::from(x > 0);
        nb += usize::from(y > 0);
        common += usize::from(x > 0 && y > 0);
    }
    let smaller = na.min(nb);
    if smaller == 0 {
        0.0
    } else {
        common as f64 / smaller as f64
    }
}

/// The `k` dataset recipes most similar to `x` as `(recipe index, coefficient)`,
/// ties in dataset order.
pub fn nearest_recipes(x: &CompositionRatio, d: &RecipeDataset, k: usize) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> =
        d.recipes.iter().enumerate().map(|(r, recipe)| (r, overlap_coefficient(x, &recipe.composition))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}
