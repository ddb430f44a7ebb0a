use std::sync::Arc;

use compmc::{PropertyCondition, Real, Scorer, Segment};

use crate::error::Result;
use crate::forest::ForestModel;

/// Scores a state by the forest's probability of one label.
pub struct LabelScorer {
    model: Arc<ForestModel>,
    class: usize,
}

impl LabelScorer {
    pub fn new(model: Arc<ForestModel>, label: &str) -> Result<Self> {
        let class = model.class_index(label)?;
        Ok(Self { model, class })
    }

    pub fn model(&self) -> &ForestModel {
        &self.model
    }
}

fn core_error(e: crate::error::RecipeError) -> compmc::Error {
    compmc::Error::ScorerFailure(e.to_string())
}

impl<F: Real> Scorer<F> for LabelScorer {
    fn score(&self, values: &[u32]) -> compmc::Result<F> {
        self.model.predict_class(values, self.class).map(F::lit).map_err(core_error)
    }

    fn score_pair_line(&self, values: &[u32], i: usize, j: usize) -> Option<compmc::Result<Vec<Segment<F>>>> {
        Some(
            self.model
                .class_along_pair_line(values, i, j, self.class)
                .map(|runs| runs.into_iter().map(|(start, v)| Segment { start, value: F::lit(v) }).collect())
                .map_err(core_error),
        )
    }
}

/// Property condition demanding `label`, with priority `c`.
pub fn label_condition<F: Real>(model: Arc<ForestModel>, label: &str, c: F) -> Result<PropertyCondition<F>> {
    let scorer = LabelScorer::new(model, label)?;
    Ok(PropertyCondition::new(Arc::new(scorer)).with_priority(c)?)
}
