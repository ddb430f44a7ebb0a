//! Recipe CSV ingestion.
//!
//! One row per `(recipe, ingredient)` with header
//! `name,taste,timing,ingredient,amount,unit`. Amounts are converted to
//! milliliters, then to per-mille shares rounded by the largest-remainder
//! method so every recipe sums to exactly 1000.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use compmc::{CompositionRatio, SpaceParams, Sparsity};
use serde::{Deserialize, Serialize};

use crate::error::{RecipeError, Result};
use crate::units::UnitTable;

pub const PER_MILLE: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeRow {
    pub name: String,
    pub taste: String,
    pub timing: String,
    pub ingredient: String,
    pub amount: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub name: String,
    pub composition: CompositionRatio,
    pub taste: String,
    pub timing: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Taste,
    Timing,
}

impl LabelKind {
    pub fn name(self) -> &'static str {
        match self {
            LabelKind::Taste => "taste",
            LabelKind::Timing => "timing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeDataset {
    /// Ingredient vocabulary in order of first appearance; fixes `N`.
    pub ingredient_names: Vec<String>,
    pub recipes: Vec<Recipe>,
    pub taste_labels: Vec<String>,
    pub timing_labels: Vec<String>,
}

impl RecipeDataset {
    pub fn space(&self) -> SpaceParams {
        SpaceParams::new(self.ingredient_names.len(), PER_MILLE).expect("validated at load")
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn labels(&self, kind: LabelKind) -> &[String] {
        match kind {
            LabelKind::Taste => &self.taste_labels,
            LabelKind::Timing => &self.timing_labels,
        }
    }

    pub fn label_of(&self, recipe: usize, kind: LabelKind) -> &str {
        let r = &self.recipes[recipe];
        match kind {
            LabelKind::Taste => &r.taste,
            LabelKind::Timing => &r.timing,
        }
    }

    /// Sparse `(ingredient, per-mille)` listing of a composition.
    pub fn describe(&self, x: &CompositionRatio) -> Vec<(&str, u32)> {
        x.values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(k, &v)| (self.ingredient_names[k].as_str(), v))
            .collect()
    }
}

/// Rounds nonnegative `amounts` to integers summing to `total`, each within
/// one unit of its exact share. Leftover units go to the largest fractional
/// parts, ties to the lowest index.
pub fn largest_remainder(amounts: &[f64], total: u32) -> Option<Vec<u32>> {
    let sum: f64 = amounts.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) || amounts.iter().any(|&a| a < 0.0 || !a.is_finite()) {
        return None;
    }
    let exact: Vec<f64> = amounts.iter().map(|&a| a * f64::from(total) / sum).collect();
    let mut out: Vec<u32> = exact.iter().map(|&e| e.floor() as u32).collect();
    let assigned: u32 = out.iter().sum();
    let mut order: Vec<usize> = (0..amounts.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[k] += 1;
    }
    Some(out)
}

pub fn load_recipes(path: &Path, units: &UnitTable) -> Result<RecipeDataset> {
    read_recipes(std::fs::File::open(path)?, units)
}

pub fn read_recipes<R: Read>(reader: R, units: &UnitTable) -> Result<RecipeDataset> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected = ["name", "taste", "timing", "ingredient", "amount", "unit"];
    let header = csv.headers()?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(RecipeError::MalformedRow { line: 1, reason: format!("expected header `{}`", expected.join(",")) });
    }

    struct Pending {
        name: String,
        taste: String,
        timing: String,
        line: u64,
        amounts: BTreeMap<usize, f64>,
    }
    let mut names: Vec<String> = Vec::new();
    let mut name_index: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut recipe_index: HashMap<String, usize> = HashMap::new();

    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: RecipeRow = record
            .deserialize(Some(&header))
            .map_err(|e| RecipeError::MalformedRow { line, reason: e.to_string() })?;
        if row.name.is_empty() || row.ingredient.is_empty() {
            return Err(RecipeError::MalformedRow { line, reason: "empty recipe or ingredient name".into() });
        }
        if !(row.amount.is_finite() && row.amount >= 0.0) {
            return Err(RecipeError::MalformedRow { line, reason: format!("amount {} is not a nonnegative number", row.amount) });
        }
        let factor = units.factor(&row.unit).ok_or_else(|| RecipeError::UnknownUnit { unit: row.unit.clone(), line })?;
        let ingredient = *name_index.entry(row.ingredient.clone()).or_insert_with(|| {
            names.push(row.ingredient.clone());
            names.len() - 1
        });
        let slot = *recipe_index.entry(row.name.clone()).or_insert_with(|| {
            pending.push(Pending {
                name: row.name.clone(),
                taste: row.taste.clone(),
                timing: row.timing.clone(),
                line,
                amounts: BTreeMap::new(),
            });
            pending.len() - 1
        });
        let p = &mut pending[slot];
        if p.taste != row.taste || p.timing != row.timing {
            return Err(RecipeError::MalformedRow { line, reason: format!("labels of `{}` change between rows", p.name) });
        }
        *p.amounts.entry(ingredient).or_insert(0.0) += row.amount * factor;
    }

    if pending.is_empty() {
        return Err(RecipeError::EmptyDataset);
    }
    if names.len() < 2 {
        return Err(RecipeError::MalformedRow { line: 1, reason: "need at least two distinct ingredients".into() });
    }
    let space = SpaceParams::new(names.len(), PER_MILLE)?;
    let mut recipes = Vec::with_capacity(pending.len());
    for p in pending {
        let mut dense = vec![0.0; names.len()];
        for (&k, &v) in &p.amounts {
            dense[k] = v;
        }
        let values = largest_remainder(&dense, PER_MILLE).ok_or_else(|| RecipeError::MalformedRow {
            line: p.line,
            reason: format!("amounts of `{}` sum to zero", p.name),
        })?;
        recipes.push(Recipe {
            name: p.name,
            composition: CompositionRatio::from_counts(values, &space)?,
            taste: p.taste,
            timing: p.timing,
        });
    }
    let vocab = |f: fn(&Recipe) -> &String| -> Vec<String> {
        recipes.iter().map(f).cloned().collect::<BTreeSet<_>>().into_iter().collect()
    };
    let taste_labels = vocab(|r| &r.taste);
    let timing_labels = vocab(|r| &r.timing);
    Ok(RecipeDataset { ingredient_names: names, recipes, taste_labels, timing_labels })
}

pub fn write_rows<W: Write>(writer: W, rows: &[RecipeRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Fraction of recipes using each number of ingredients.
pub fn empirical_sparsity_prior(d: &RecipeDataset) -> Result<Sparsity> {
    if d.is_empty() {
        return Err(RecipeError::EmptyDataset);
    }
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &d.recipes {
        *counts.entry(r.composition.l0_norm()).or_insert(0.0) += 1.0;
    }
    Ok(Sparsity::new(counts, &d.space())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_examples() {
        assert_eq!(largest_remainder(&[9.0, 1.0, 0.0], 1000), Some(vec![900, 100, 0]));
        assert_eq!(largest_remainder(&[1.0, 1.0, 1.0], 1000), Some(vec![334, 333, 333]));
        assert_eq!(largest_remainder(&[0.0, 0.0], 1000), None);
        assert_eq!(largest_remainder(&[2.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1000), Some(vec![285, 143, 143, 143, 143, 143]));
    }

    #[test]
    fn reads_and_groups_rows() {
        let csv = "name,taste,timing,ingredient,amount,unit\n\
                   Kir Royal,Fresh,All day,Champagne,9,cl\n\
                   Kir Royal,Fresh,All day,Creme de cassis,1,cl\n\
                   Pair,Sweet,After dinner,Creme de cassis,1,bar spoon\n\
                   Pair,Sweet,After dinner,Cream,5,ml\n";
        let d = read_recipes(csv.as_bytes(), &UnitTable::default()).unwrap();
        assert_eq!(d.ingredient_names, ["Champagne", "Creme de cassis", "Cream"]);
        assert_eq!(d.recipes[0].composition.values(), [900, 100, 0]);
        assert_eq!(d.recipes[1].composition.values(), [0, 500, 500]);
        assert_eq!(d.taste_labels, ["Fresh", "Sweet"]);
    }

    #[test]
    fn reports_bad_rows() {
        let units = UnitTable::default();
        let head = "name,taste,timing,ingredient,amount,unit\n";
        let unknown = format!("{head}A,Fresh,All day,Gin,1,jigger\nA,Fresh,All day,Tonic,1,cl\n");
        assert!(matches!(read_recipes(unknown.as_bytes(), &units), Err(RecipeError::UnknownUnit { line: 2, .. })));
        let zero = format!("{head}A,Fresh,All day,Gin,0,cl\nA,Fresh,All day,Tonic,0,cl\n");
        assert!(matches!(read_recipes(zero.as_bytes(), &units), Err(RecipeError::MalformedRow { .. })));
        let negative = format!("{head}A,Fresh,All day,Gin,-1,cl\n");
        assert!(matches!(read_recipes(negative.as_bytes(), &units), Err(RecipeError::MalformedRow { .. })));
        let text = format!("{head}A,Fresh,All day,Gin,lots,cl\n");
        assert!(matches!(read_recipes(text.as_bytes(), &units), Err(RecipeError::MalformedRow { line: 2, .. })));
        assert!(matches!(read_recipes(head.as_bytes(), &units), Err(RecipeError::EmptyDataset)));
    }
}
