//! Unit names to milliliters.
//!
//! The defaults are conventional bar measures; gram and pinch amounts are
//! treated as their approximate volume. Override any entry with a table file
//! of `name=factor` lines (`#` starts a comment).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{RecipeError, Result};

pub const DEFAULT_UNITS: &[(&str, f64)] = &[
    ("ml", 1.0),
    ("cl", 10.0),
    ("dl", 100.0),
    ("l", 1000.0),
    ("oz", 30.0),
    ("tsp", 5.0),
    ("tbsp", 15.0),
    ("bar spoon", 5.0),
    ("dash", 0.9),
    ("splash", 3.0),
    ("drop", 0.05),
    ("pinch", 0.5),
    ("g", 1.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct UnitTable {
    factors: BTreeMap<String, f64>,
}

impl Default for UnitTable {
    fn default() -> Self {
        Self { factors: DEFAULT_UNITS.iter().map(|&(u, f)| (u.to_string(), f)).collect() }
    }
}

fn normalize(unit: &str) -> String {
    unit.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl UnitTable {
    pub fn empty() -> Self {
        Self { factors: BTreeMap::new() }
    }

    /// Milliliters per unit; names are matched case-insensitively with
    /// whitespace collapsed.
    pub fn factor(&self, unit: &str) -> Option<f64> {
        self.factors.get(&normalize(unit)).copied()
    }

    pub fn insert(&mut self, unit: &str, factor: f64) -> Result<()> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(RecipeError::UnitTable(format!("factor for `{unit}` must be positive, got {factor}")));
        }
        self.factors.insert(normalize(unit), factor);
        Ok(())
    }

    /// Defaults overridden by the entries of `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let overrides: UnitTable = std::fs::read_to_string(path)?.parse()?;
        let mut table = Self::default();
        table.factors.extend(overrides.factors);
        Ok(table)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.factors.iter().map(|(u, &f)| (u.as_str(), f))
    }
}

impl FromStr for UnitTable {
    type Err = RecipeError;

    fn from_str(text: &str) -> Result<Self> {
        let mut table = Self::empty();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (unit, factor) = line
                .split_once('=')
                .ok_or_else(|| RecipeError::UnitTable(format!("line {}: expected `name=factor`", k + 1)))?;
            let factor: f64 = factor
                .trim()
                .parse()
                .map_err(|_| RecipeError::UnitTable(format!("line {}: bad factor `{}`", k + 1, factor.trim())))?;
            table.insert(unit, factor)?;
        }
        Ok(table)
    }
}

impl fmt::Display for UnitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (unit, factor) in &self.factors {
            writeln!(f, "{unit}={factor}")?;
        }
        Ok(())
    }
}
