//! Seeded synthetic cocktail datasets in the recipe CSV schema.
//!
//! Labels follow simple rules over ingredient families so a classifier has
//! something to learn: bitters make a drink bittersweet and pre-dinner, a
//! large sparkling share makes it a long drink, cream or coffee an
//! after-dinner one, and so on.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::RecipeRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Spirit,
    Liqueur,
    Citrus,
    Sweetener,
    Sparkling,
    Bitter,
    Creamy,
    Savory,
}

/// `(ingredient, family, unit, min amount, max amount)`; amounts are drawn on
/// a half-unit grid.
pub const INGREDIENTS: &[(&str, Family, &str, f64, f64)] = &[
    ("Gin", Family::Spirit, "cl", 3.0, 6.0),
    ("Vodka", Family::Spirit, "cl", 3.0, 6.0),
    ("White rum", Family::Spirit, "cl", 3.0, 6.0),
    ("Dark rum", Family::Spirit, "cl", 2.0, 5.0),
    ("Tequila", Family::Spirit, "cl", 3.0, 5.0),
    ("Whisky", Family::Spirit, "cl", 3.0, 6.0),
    ("Brandy", Family::Spirit, "cl", 2.0, 5.0),
    ("Triple sec", Family::Liqueur, "cl", 1.0, 3.0),
    ("Creme de cassis", Family::Liqueur, "cl", 1.0, 2.0),
    ("Amaretto", Family::Liqueur, "cl", 1.5, 3.0),
    ("Maraschino", Family::Liqueur, "bar spoon", 1.0, 3.0),
    ("Peach schnapps", Family::Liqueur, "cl", 1.0, 3.0),
    ("Lime juice", Family::Citrus, "cl", 1.0, 3.0),
    ("Lemon juice", Family::Citrus, "cl", 1.0, 3.0),
    ("Orange juice", Family::Citrus, "cl", 3.0, 10.0),
    ("Grapefruit juice", Family::Citrus, "cl", 3.0, 8.0),
    ("Cranberry juice", Family::Citrus, "cl", 3.0, 8.0),
    ("Sugar syrup", Family::Sweetener, "bar spoon", 1.0, 4.0),
    ("Grenadine", Family::Sweetener, "splash", 1.0, 3.0),
    ("Honey syrup", Family::Sweetener, "bar spoon", 1.0, 3.0),
    ("Champagne", Family::Sparkling, "cl", 6.0, 12.0),
    ("Soda water", Family::Sparkling, "cl", 5.0, 12.0),
    ("Tonic water", Family::Sparkling, "cl", 8.0, 15.0),
    ("Ginger beer", Family::Sparkling, "cl", 8.0, 15.0),
    ("Angostura bitters", Family::Bitter, "dash", 1.0, 3.0),
    ("Campari", Family::Bitter, "cl", 2.0, 3.0),
    ("Dry vermouth", Family::Bitter, "cl", 1.0, 3.0),
    ("Cream", Family::Creamy, "cl", 2.0, 3.0),
    ("Coffee liqueur", Family::Creamy, "cl", 1.5, 3.0),
    ("Espresso", Family::Creamy, "cl", 2.0, 3.0),
    ("Tomato juice", Family::Savory, "cl", 8.0, 12.0),
    ("Salt", Family::Savory, "pinch", 1.0, 2.0),
];

pub const TASTE_LABELS: &[&str] = &["Bittersweet", "Boozy", "Fresh", "Salty", "Sour", "Sweet", "Unknown"];
pub const TIMING_LABELS: &[&str] = &["After dinner", "All day", "Long drink", "Pre-dinner"];

fn family_of(name: &str) -> Family {
    INGREDIENTS.iter().find(|e| e.0 == name).map(|e| e.1).expect("known ingredient")
}

fn ml(unit: &str, amount: f64) -> f64 {
    crate::units::DEFAULT_UNITS.iter().find(|u| u.0 == unit).map(|u| u.1).expect("default unit") * amount
}

/// Deterministic labels for a recipe given as `(ingredient, amount, unit)`.
pub fn label_recipe(parts: &[(&str, f64, &str)]) -> (&'static str, &'static str) {
    let total: f64 = parts.iter().map(|p| ml(p.2, p.1)).sum();
    let share = |f: Family| parts.iter().filter(|p| family_of(p.0) == f).map(|p| ml(p.2, p.1)).sum::<f64>() / total;
    let has = |f: Family| parts.iter().any(|p| family_of(p.0) == f);

    let taste = if has(Family::Savory) {
        "Salty"
    } else if has(Family::Bitter) {
        "Bittersweet"
    } else if share(Family::Spirit) > 0.6 {
        "Boozy"
    } else if has(Family::Citrus) && has(Family::Sweetener) {
        "Sour"
    } else if has(Family::Citrus) || has(Family::Sparkling) {
        "Fresh"
    } else {
        "Sweet"
    };
    let timing = if has(Family::Creamy) || share(Family::Liqueur) > 0.4 {
        "After dinner"
    } else if share(Family::Sparkling) >= 0.5 {
        "Long drink"
    } else if has(Family::Bitter) {
        "Pre-dinner"
    } else {
        "All day"
    };
    (taste, timing)
}

/// 60 to 80 recipes of 2 to 5 ingredients each.
pub fn synthetic_rows(seed: u64) -> Vec<RecipeRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(60..=80);
    // Ingredient-count frequencies close to a typical cocktail list.
    let sizes = [(2usize, 13u32), (3, 29), (4, 24), (5, 3)];
    let spirits: Vec<&str> = INGREDIENTS.iter().filter(|e| e.1 == Family::Spirit).map(|e| e.0).collect();
    let mut rows = Vec::new();
    for r in 0..count {
        let n = sizes.choose_weighted(&mut rng, |s| s.1).expect("nonempty").0;
        let mut names: Vec<&str> = Vec::with_capacity(n);
        if rng.gen_bool(0.85) {
            names.push(spirits.choose(&mut rng).expect("spirits"));
        }
        while names.len() < n {
            let candidate = INGREDIENTS.choose(&mut rng).expect("ingredients").0;
            if !names.contains(&candidate) {
                names.push(candidate);
            }
        }
        let parts: Vec<(&str, f64, &str)> = names
            .iter()
            .map(|&name| {
                let e = INGREDIENTS.iter().find(|e| e.0 == name).expect("known");
                let steps = ((e.4 - e.3) * 2.0) as u32;
                (name, e.3 + f64::from(rng.gen_range(0..=steps)) / 2.0, e.2)
            })
            .collect();
        let (mut taste, timing) = label_recipe(&parts);
        if rng.gen_bool(0.05) {
            taste = "Unknown";
        }
        let name = format!("Synthetic {:03}", r + 1);
        for (ingredient, amount, unit) in parts {
            rows.push(RecipeRow {
                name: name.clone(),
                taste: taste.into(),
                timing: timing.into(),
                ingredient: ingredient.into(),
                amount,
                unit: unit.into(),
            });
        }
    }
    rows
}
