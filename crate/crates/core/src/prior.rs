//! Categorical priors over the nonzero count `n`, and the textual prior format
//! accepted by the command line.
//!
//! Accepted forms (whitespace is ignored):
//!
//! | spec                            | weight of `n`                                   |
//! |---------------------------------|-------------------------------------------------|
//! | `{2:13, 3:29, 4:24, 5:3}`        | explicit table                                  |
//! | `uniform{lo,hi}`                | 1 on `lo..=hi`                                  |
//! | `unimodal{center,scale}`        | `exp(-scale (n - center)^2)`                    |
//! | `bimodal{c1,s1,w1,c2,s2,w2}`    | `w1 exp(-s1 (n - c1)^2) + w2 exp(-s2 (n - c2)^2)` |
//! | `exponential{rate,coef}`        | `coef exp(-rate n)`                             |
//!
//! Families are evaluated on every feasible `n` in `1..=min(N, M)`; tables and
//! uniform ranges that reach outside that range are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::composition::SpaceParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Normalized prior `y_sparse(n)` with its priority `c_sparse`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityCondition<F> {
    weights: BTreeMap<usize, F>,
    cumulative: Vec<(usize, F)>,
    priority: F,
}

impl<F: Real> SparsityCondition<F> {
    /// Builds a prior from possibly unnormalized weights. Zero weights are
    /// dropped; any `n` outside `1..=min(N, M)` is an error.
    pub fn new(weights: impl IntoIterator<Item = (usize, F)>, space: &SpaceParams) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (n, w) in weights {
            if n == 0 || n > space.max_support() {
                return Err(Error::InvalidPrior(format!(
                    "n = {n} is infeasible for {space} (feasible range 1..={})",
                    space.max_support()
                )));
            }
            if !w.is_finite() || w < F::zero() {
                return Err(Error::InvalidPrior(format!("weight {w} for n = {n} is not a finite nonnegative number")));
            }
            if w > F::zero() {
                let slot = table.entry(n).or_insert_with(F::zero);
                *slot = *slot + w;
            }
        }
        let total = table.values().fold(F::zero(), |acc, &w| acc + w);
        if table.is_empty() || !(total > F::zero()) {
            return Err(Error::InvalidPrior("no positive weight".into()));
        }
        for w in table.values_mut() {
            *w = *w / total;
        }
        let mut acc = F::zero();
        let cumulative = table
            .iter()
            .map(|(&n, &w)| {
                acc = acc + w;
                (n, acc)
            })
            .collect();
        Ok(Self { weights: table, cumulative, priority: F::one() })
    }

    pub fn point_mass(n: usize, space: &SpaceParams) -> Result<Self> {
        Self::new([(n, F::one())], space)
    }

    pub fn uniform(lo: usize, hi: usize, space: &SpaceParams) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidPrior(format!("empty range {lo}..={hi}")));
        }
        Self::new((lo..=hi).map(|n| (n, F::one())), space)
    }

    /// Sets `c_sparse` (default 1).
    pub fn with_priority(mut self, priority: F) -> Result<Self> {
        if !priority.is_finite() || priority < F::zero() {
            return Err(Error::InvalidPrior(format!("priority {priority} must be finite and >= 0")));
        }
        self.priority = priority;
        Ok(self)
    }

    #[inline]
    pub fn priority(&self) -> F {
        self.priority
    }

    /// Normalized weight of `n`, zero off the support.
    #[inline]
    pub fn weight(&self, n: usize) -> F {
        self.weights.get(&n).copied().unwrap_or_else(F::zero)
    }

    pub fn weights(&self) -> &BTreeMap<usize, F> {
        &self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.keys().copied()
    }

    /// Categorical draw of `n`.
    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = F::unit(rng);
        self.cumulative
            .iter()
            .find(|(_, c)| u < *c)
            .or(self.cumulative.last())
            .map(|&(n, _)| n)
            .expect("prior has at least one support point")
    }
}

/// Parsed (but not yet space-bound) prior description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PriorSpec {
    Table(Vec<(usize, f64)>),
    Uniform { lo: usize, hi: usize },
    Unimodal { center: f64, scale: f64 },
    Bimodal { c1: f64, s1: f64, w1: f64, c2: f64, s2: f64, w2: f64 },
    Exponential { rate: f64, coef: f64 },
}

impl PriorSpec {
    /// Unnormalized weight the named family assigns to `n`; `None` for tables.
    pub fn family_weight(&self, n: usize) -> Option<f64> {
        let x = n as f64;
        match *self {
            PriorSpec::Table(_) => None,
            PriorSpec::Uniform { lo, hi } => Some(if (lo..=hi).contains(&n) { 1.0 } else { 0.0 }),
            PriorSpec::Unimodal { center, scale } => Some((-scale * (x - center).powi(2)).exp()),
            PriorSpec::Bimodal { c1, s1, w1, c2, s2, w2 } => {
                Some(w1 * (-s1 * (x - c1).powi(2)).exp() + w2 * (-s2 * (x - c2).powi(2)).exp())
            }
            PriorSpec::Exponential { rate, coef } => Some(coef * (-rate * x).exp()),
        }
    }

    /// Binds the description to a space.
    pub fn build<F: Real>(&self, space: &SpaceParams) -> Result<SparsityCondition<F>> {
        match self {
            PriorSpec::Table(rows) => SparsityCondition::new(rows.iter().map(|&(n, w)| (n, F::lit(w))), space),
            PriorSpec::Uniform { lo, hi } => SparsityCondition::uniform(*lo, *hi, space),
            family => SparsityCondition::new(
                (1..=space.max_support()).map(|n| (n, F::lit(family.family_weight(n).unwrap_or(0.0)))),
                space,
            ),
        }
    }

    /// Short filesystem-friendly label, e.g. `uniform_17_24`.
    pub fn slug(&self) -> String {
        let fmt = |v: f64| v.to_string().replace('-', "m").replace('.', "p");
        match self {
            PriorSpec::Table(rows) => format!("table{}", rows.len()),
            PriorSpec::Uniform { lo, hi } => format!("uniform_{lo}_{hi}"),
            PriorSpec::Unimodal { center, scale } => format!("unimodal_{}_{}", fmt(*center), fmt(*scale)),
            PriorSpec::Bimodal { c1, c2, .. } => format!("bimodal_{}_{}", fmt(*c1), fmt(*c2)),
            PriorSpec::Exponential { rate, coef } => format!("exponential_{}_{}", fmt(*rate), fmt(*coef)),
        }
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Table(rows) => {
                f.write_str("{")?;
                for (k, (n, w)) in rows.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{n}:{w}")?;
                }
                f.write_str("}")
            }
            PriorSpec::Uniform { lo, hi } => write!(f, "uniform{{{lo},{hi}}}"),
            PriorSpec::Unimodal { center, scale } => write!(f, "unimodal{{{center},{scale}}}"),
            PriorSpec::Bimodal { c1, s1, w1, c2, s2, w2 } => {
                write!(f, "bimodal{{{c1},{s1},{w1},{c2},{s2},{w2}}}")
            }
            PriorSpec::Exponential { rate, coef } => write!(f, "exponential{{{rate},{coef}}}"),
        }
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self> {
        let spec: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let fail = |reason: &str| Error::PriorSpec { spec: raw.to_string(), reason: reason.to_string() };
        let open = spec.find('{').ok_or_else(|| fail("expected `{`"))?;
        if !spec.ends_with('}') {
            return Err(fail("expected trailing `}`"));
        }
        let name = &spec[..open];
        let body = &spec[open + 1..spec.len() - 1];

        if name.is_empty() || name == "table" {
            let mut rows = Vec::new();
            for entry in body.split(',').filter(|e| !e.is_empty()) {
                let (n, w) = entry.split_once(':').ok_or_else(|| fail("table entries look like `n:weight`"))?;
                let n = n.parse::<usize>().map_err(|_| fail("table key is not a positive integer"))?;
                let w = w.parse::<f64>().map_err(|_| fail("table weight is not a number"))?;
                rows.push((n, w));
            }
            if rows.is_empty() {
                return Err(fail("empty table"));
            }
            return Ok(PriorSpec::Table(rows));
        }

        let args: Vec<f64> = body
            .split(',')
            .map(|a| a.parse::<f64>().map_err(|_| fail("arguments must be numbers")))
            .collect::<Result<_>>()?;
        let arity = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(fail(&format!("`{name}` takes {k} arguments, got {}", args.len())))
            }
        };
        match name {
            "uniform" => {
                arity(2)?;
                let as_index = |v: f64| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(fail("uniform bounds must be nonnegative integers"))
                    }
                };
                Ok(PriorSpec::Uniform { lo: as_index(args[0])?, hi: as_index(args[1])? })
            }
            "unimodal" => {
                arity(2)?;
                Ok(PriorSpec::Unimodal { center: args[0], scale: args[1] })
            }
            "bimodal" => {
                arity(6)?;
                Ok(PriorSpec::Bimodal { c1: args[0], s1: args[1], w1: args[2], c2: args[3], s2: args[4], w2: args[5] })
            }
            "exponential" => {
                arity(2)?;
                Ok(PriorSpec::Exponential { rate: args[0], coef: args[1] })
            }
            other => Err(fail(&format!("unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, m: u32) -> SpaceParams {
        SpaceParams::new(n, m).unwrap()
    }

    #[test]
    fn normalizes_weights() {
        let p = space(65, 1000);
        let prior = SparsityCondition::<f64>::new([(2, 13.0), (3, 29.0), (4, 24.0), (5, 3.0)], &p).unwrap();
        assert!((prior.weight(3) - 29.0 / 69.0).abs() < 1e-15);
        assert_eq!(prior.weight(6), 0.0);
        let sum: f64 = prior.weights().values().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_infeasible_or_empty() {
        let p = space(10, 5);
        assert!(SparsityCondition::<f64>::new([(6, 1.0)], &p).is_err());
        assert!(SparsityCondition::<f64>::new([(0, 1.0)], &p).is_err());
        assert!(SparsityCondition::<f64>::new([(2, 0.0)], &p).is_err());
        assert!(SparsityCondition::<f64>::new([(2, -1.0)], &p).is_err());
        assert!(SparsityCondition::<f64>::uniform(2, 6, &p).is_err());
        assert!(SparsityCondition::<f64>::uniform(1, 1, &p).unwrap().with_priority(-1.0).is_err());
    }

    #[test]
    fn parses_all_families() {
        let cases = [
            ("uniform{17,24}", PriorSpec::Uniform { lo: 17, hi: 24 }),
            ("unimodal{20, 0.25}", PriorSpec::Unimodal { center: 20.0, scale: 0.25 }),
            (
                "bimodal{15,0.5,1,20,0.5,2}",
                PriorSpec::Bimodal { c1: 15.0, s1: 0.5, w1: 1.0, c2: 20.0, s2: 0.5, w2: 2.0 },
            ),
            ("exponential{0.5,0.5}", PriorSpec::Exponential { rate: 0.5, coef: 0.5 }),
            ("{2:13,3:29}", PriorSpec::Table(vec![(2, 13.0), (3, 29.0)])),
            ("table{4:1}", PriorSpec::Table(vec![(4, 1.0)])),
        ];
        for (text, want) in cases {
            let got: PriorSpec = text.parse().unwrap();
            assert_eq!(got, want, "{text}");
            let again: PriorSpec = got.to_string().parse().unwrap();
            assert_eq!(again, got);
        }
        for bad in ["uniform{1}", "gauss{1,2}", "unimodal{a,b}", "{}", "uniform{1.5,3}", "uniform 1,2"] {
            assert!(bad.parse::<PriorSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn bimodal_family_matches_formula() {
        let spec: PriorSpec = "bimodal{15,0.5,1,20,0.5,2}".parse().unwrap();
        let p = space(2000, 100);
        let prior: SparsityCondition<f64> = spec.build(&p).unwrap();
        let raw = |n: f64| (-0.5 * (n - 15.0f64).powi(2)).exp() + 2.0 * (-0.5 * (n - 20.0f64).powi(2)).exp();
        let z: f64 = (1..=100).map(|n| raw(n as f64)).sum();
        for n in 10..25 {
            assert!((prior.weight(n) - raw(n as f64) / z).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_n_follows_weights() {
        let p = space(10, 5);
        let prior = SparsityCondition::<f64>::new([(2, 1.0), (4, 3.0)], &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fours = (0..40_000).filter(|_| prior.sample_n(&mut rng) == 4).count();
        assert!((fours as f64 / 40_000.0 - 0.75).abs() < 0.01);
    }
}
