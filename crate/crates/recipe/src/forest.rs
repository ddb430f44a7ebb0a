//! CART random forest grown from scratch.
//!
//! Features are raw per-mille ingredient amounts. A split sends `x[f] <= t`
//! left. Each tree is grown on its own bootstrap resample with its own
//! generator stream, so training is deterministic for a given seed and the
//! trees can be grown in parallel.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelKind, RecipeDataset};
use crate::error::{RecipeError, Result};

pub const MODEL_FORMAT: &str = "compmc-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` means `ceil(sqrt(N))`.
    pub max_features: Option<usize>,
    /// Grow each tree on a bootstrap resample (otherwise on the full data).
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { trees: 100, max_depth: 8, min_leaf: 1, max_features: None, bootstrap: true, seed: 0 }
    }
}

impl ForestParams {
    fn features_per_split(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Split { feature: usize, threshold: u32, left: usize, right: usize },
    Leaf { counts: Vec<u32>, probs: Vec<f64> },
}

/// Nodes in an arena, root first.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    fn leaf_probs(&self, x: &[u32]) -> &[f64] {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split { feature, threshold, left, right } => {
                    k = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { probs, .. } => return probs,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[u32]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts, .. } => Some(counts.as_slice()),
            Node::Split { .. } => None,
        })
    }
}

fn leaf(counts: Vec<u32>) -> Node {
    let total: u32 = counts.iter().sum();
    let probs = counts.iter().map(|&c| f64::from(c) / f64::from(total)).collect();
    Node::Leaf { counts, probs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub kind: LabelKind,
    pub classes: Vec<String>,
    pub ingredients: Vec<String>,
    pub params: ForestParams,
    pub trees: Vec<Tree>,
}

struct Grower<'a> {
    features: &'a [&'a [u32]],
    labels: &'a [usize],
    n_classes: usize,
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

/// Gini impurity scaled by node size: `n - Σ c² / n`.
fn weighted_gini(counts: &[u32], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
    f64::from(n) - sq / f64::from(n)
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut counts = vec![0u32; self.n_classes];
        for &r in rows.iter() {
            counts[self.labels[r]] += 1;
        }
        let id = self.nodes.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.params.max_depth || pure || rows.len() < 2 * self.params.min_leaf.max(1) {
            self.nodes.push(leaf(counts));
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows, &counts, rng) else {
            self.nodes.push(leaf(counts));
            return id;
        };
        // Placeholder until both children exist.
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let mut cut = 0;
        for k in 0..rows.len() {
            if self.features[rows[k]][feature] <= threshold {
                rows.swap(k, cut);
                cut += 1;
            }
        }
        let (l, r) = rows.split_at_mut(cut);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Examines features in random order until at least `mtry` have been
    /// tried and a valid split exists. Ties keep the first candidate found.
    fn best_split(&self, rows: &[usize], counts: &[u32], rng: &mut ChaCha8Rng) -> Option<(usize, u32)> {
        let n_features = self.features[0].len();
        let n = rows.len() as u32;
        let parent = weighted_gini(counts, n);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(f64, usize, u32)> = None;
        let mut column: Vec<(u32, usize)> = Vec::with_capacity(rows.len());
        for (tried, feature) in index::sample(rng, n_features, n_features).into_iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            column.clear();
            column.extend(rows.iter().map(|&r| (self.features[r][feature], self.labels[r])));
            column.sort_unstable();
            let mut left = vec![0u32; self.n_classes];
            let mut right = counts.to_vec();
            for p in 1..column.len() {
                let class = column[p - 1].1;
                left[class] += 1;
                right[class] -= 1;
                if column[p - 1].0 == column[p].0 || p < min_leaf || column.len() - p < min_leaf {
                    continue;
                }
                let impurity = weighted_gini(&left, p as u32) + weighted_gini(&right, n - p as u32);
                if impurity < parent - 1e-12 && best.map_or(true, |(b, _, _)| impurity < b) {
                    best = Some((impurity, feature, column[p - 1].0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Trains a forest for one label kind of `d`.
pub fn train_forest(d: &RecipeDataset, kind: LabelKind, params: &ForestParams) -> Result<ForestModel> {
    if d.is_empty() {
        return Err(RecipeError::EmptyDataset);
    }
    let classes = d.labels(kind).to_vec();
    if classes.len() < 2 {
        return Err(RecipeError::DegenerateLabels { kind: kind.name().into(), label: classes[0].clone() });
    }
    if params.trees == 0 {
        return Err(RecipeError::ModelFormat("a forest needs at least one tree".into()));
    }
    let labels: Vec<usize> = (0..d.len())
        .map(|r| classes.binary_search_by(|c| c.as_str().cmp(d.label_of(r, kind))).expect("label in vocabulary"))
        .collect();
    let features: Vec<&[u32]> = d.recipes.iter().map(|r| r.composition.values()).collect();
    let n_features = d.ingredient_names.len();
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let n = features.len();
            let mut rows: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            let mut grower = Grower {
                features: &features,
                labels: &labels,
                n_classes: classes.len(),
                params,
                mtry: params.features_per_split(n_features),
                nodes: Vec::new(),
            };
            grower.grow(&mut rows, 0, &mut rng);
            Tree { nodes: grower.nodes }
        })
        .collect();
    Ok(ForestModel { kind, classes, ingredients: d.ingredient_names.clone(), params: params.clone(), trees })
}

impl ForestModel {
    pub fn class_index(&self, label: &str) -> Result<usize> {
        self.classes.iter().position(|c| c == label).ok_or_else(|| RecipeError::UnknownLabel {
            label: label.into(),
            known: self.classes.join(", "),
        })
    }

    fn check_len(&self, x: &[u32]) -> Result<()> {
        if x.len() != self.ingredients.len() {
            return Err(RecipeError::VocabularyMismatch { expected: self.ingredients.len(), found: x.len() });
        }
        Ok(())
    }

    /// Mean of the leaf class proportions over all trees.
    pub fn predict_proba(&self, x: &[u32]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut out = vec![0.0; self.classes.len()];
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.leaf_probs(x)) {
                *o += p;
            }
        }
        let b = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= b);
        Ok(out)
    }

    /// Probability of one class.
    pub fn predict_class(&self, x: &[u32], class: usize) -> Result<f64> {
        self.check_len(x)?;
        let sum: f64 = self.trees.iter().map(|t| t.leaf_probs(x)[class]).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_label(&self, x: &[u32]) -> Result<&str> {
        let p = self.predict_proba(x)?;
        let best = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
        Ok(&self.classes[best])
    }

    /// Fraction of `d` whose label the forest predicts correctly.
    pub fn accuracy(&self, d: &RecipeDataset) -> Result<f64> {
        let mut hits = 0usize;
        for (r, recipe) in d.recipes.iter().enumerate() {
            hits += usize::from(self.predict_label(recipe.composition.values())? == d.label_of(r, self.kind));
        }
        Ok(hits as f64 / d.len().max(1) as f64)
    }

    /// Probability of `class` for every split `k` of the pair line
    /// `x_i = k, x_j = s - k`, as `(first_k, value)` runs.
    ///
    /// Each tree is walked once with an interval of `k` instead of once per
    /// split, so the cost is independent of `s` apart from the final sweep.
    pub fn class_along_pair_line(&self, x: &[u32], i: usize, j: usize, class: usize) -> Result<Vec<(u32, f64)>> {
        self.check_len(x)?;
        let s = x[i] + x[j];
        let mut delta = vec![0.0f64; s as usize + 2];
        let mut stack: Vec<(usize, u32, u32)> = Vec::new();
        for tree in &self.trees {
            stack.push((0, 0, s));
            while let Some((k, lo, hi)) = stack.pop() {
                match &tree.nodes[k] {
                    Node::Leaf { probs, .. } => {
                        delta[lo as usize] += probs[class];
                        delta[hi as usize + 1] -= probs[class];
                    }
                    Node::Split { feature, threshold, left, right } => {
                        let t = *threshold;
                        const EMPTY: (u32, u32) = (1, 0);
                        // Splits k in [lo, hi] going left and right.
                        let (l, r) = if *feature == i {
                            ((lo, hi.min(t)), (lo.max(t.saturating_add(1)), hi))
                        } else if *feature == j {
                            // s - k <= t  <=>  k >= s - t
                            let first_left = s.saturating_sub(t);
                            let r = if first_left == 0 { EMPTY } else { (lo, hi.min(first_left - 1)) };
                            ((lo.max(first_left), hi), r)
                        } else if x[*feature] <= t {
                            ((lo, hi), EMPTY)
                        } else {
                            (EMPTY, (lo, hi))
                        };
                        if l.0 <= l.1 {
                            stack.push((*left, l.0, l.1));
                        }
                        if r.0 <= r.1 {
                            stack.push((*right, r.0, r.1));
                        }
                    }
                }
            }
        }
        let b = self.trees.len() as f64;
        let mut runs: Vec<(u32, f64)> = Vec::new();
        let mut acc = 0.0;
        for k in 0..=s {
            acc += delta[k as usize];
            let value = (acc / b).clamp(0.0, 1.0);
            if runs.last().map_or(true, |&(_, v)| v != value) {
                runs.push((k, value));
            }
        }
        Ok(runs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(text)?.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Self-describing on-disk form: trees as nested split / leaf records.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    kind: LabelKind,
    classes: Vec<String>,
    ingredients: Vec<String>,
    params: ForestParams,
    trees: Vec<NodeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
enum NodeRecord {
    Split { feature: usize, threshold: u32, left: Box<NodeRecord>, right: Box<NodeRecord> },
    Leaf { counts: Vec<u32> },
}

fn to_record(nodes: &[Node], k: usize) -> NodeRecord {
    match &nodes[k] {
        Node::Split { feature, threshold, left, right } => NodeRecord::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(to_record(nodes, *left)),
            right: Box::new(to_record(nodes, *right)),
        },
        Node::Leaf { counts, .. } => NodeRecord::Leaf { counts: counts.clone() },
    }
}

fn from_record(rec: NodeRecord, n_features: usize, n_classes: usize, nodes: &mut Vec<Node>) -> Result<usize> {
    let id = nodes.len();
    match rec {
        NodeRecord::Leaf { counts } => {
            if counts.len() != n_classes || counts.iter().all(|&c| c == 0) {
                return Err(RecipeError::ModelFormat("leaf counts do not match the class list".into()));
            }
            nodes.push(leaf(counts));
        }
        NodeRecord::Split { feature, threshold, left, right } => {
            if feature >= n_features {
                return Err(RecipeError::ModelFormat(format!("split on unknown feature {feature}")));
            }
            nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
            let l = from_record(*left, n_features, n_classes, nodes)?;
            let r = from_record(*right, n_features, n_classes, nodes)?;
            nodes[id] = Node::Split { feature, threshold, left: l, right: r };
        }
    }
    Ok(id)
}

impl From<&ForestModel> for ModelFile {
    fn from(m: &ForestModel) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kind: m.kind,
            classes: m.classes.clone(),
            ingredients: m.ingredients.clone(),
            params: m.params.clone(),
            trees: m.trees.iter().map(|t| to_record(&t.nodes, 0)).collect(),
        }
    }
}

impl TryFrom<ModelFile> for ForestModel {
    type Error = RecipeError;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(RecipeError::ModelFormat(format!(
                "expected {MODEL_FORMAT} version {MODEL_VERSION}, found {} version {}",
                f.format, f.version
            )));
        }
        if f.trees.is_empty() || f.classes.len() < 2 {
            return Err(RecipeError::ModelFormat("model needs trees and at least two classes".into()));
        }
        let (nf, nc) = (f.ingredients.len(), f.classes.len());
        let trees = f
            .trees
            .into_iter()
            .map(|rec| {
                let mut nodes = Vec::new();
                from_record(rec, nf, nc, &mut nodes)?;
                Ok(Tree { nodes })
            })
            .collect::<Result<_>>()?;
        Ok(ForestModel { kind: f.kind, classes: f.classes, ingredients: f.ingredients, params: f.params, trees })
    }
}
