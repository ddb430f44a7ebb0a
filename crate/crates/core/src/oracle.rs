//! Brute-force ground truth on small spaces: full enumeration, exact target
//! probabilities, exact one-step transition matrices of every kernel, and
//! total-variation distances.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;

use crate::composition::{l0_norm, CompositionRatio, SpaceParams};
use crate::error::{Error, Result};
use crate::sampler::{pair_selection_probability, SamplerKind};
use crate::scalar::Real;
use crate::target::TargetDistribution;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;
pub const MAX_MATRIX_STATES: usize = 500;

/// Every state of a space in lexicographic order.
#[derive(Debug, Clone)]
pub struct EnumeratedSpace {
    space: SpaceParams,
    states: Vec<CompositionRatio>,
    index: HashMap<Vec<u32>, usize>,
}

impl EnumeratedSpace {
    pub fn space(&self) -> &SpaceParams {
        &self.space
    }

    pub fn states(&self) -> &[CompositionRatio] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn position(&self, values: &[u32]) -> Option<usize> {
        self.index.get(values).copied()
    }
}

pub fn enumerate_space(space: &SpaceParams) -> Result<EnumeratedSpace> {
    enumerate_space_capped(space, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_space_capped(space: &SpaceParams, cap: usize) -> Result<EnumeratedSpace> {
    let size = space.state_count();
    if size > BigUint::from(cap) {
        return Err(Error::SpaceTooLarge { size: size.to_string(), cap });
    }
    let states: Vec<CompositionRatio> = LexStates::new(space).map(CompositionRatio::from_vec_unchecked).collect();
    let index = states.iter().enumerate().map(|(k, s)| (s.values().to_vec(), k)).collect();
    Ok(EnumeratedSpace { space: *space, states, index })
}

/// Streams every state in lexicographic order without storing them, from
/// `(0, …, 0, M)` up to `(M, 0, …, 0)`.
#[derive(Debug, Clone)]
pub struct LexStates {
    current: Option<Vec<u32>>,
}

impl LexStates {
    pub fn new(space: &SpaceParams) -> Self {
        let mut first = vec![0; space.bins()];
        first[space.bins() - 1] = space.total();
        Self { current: Some(first) }
    }
}

impl Iterator for LexStates {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.take()?;
        let mut next = out.clone();
        let last = next.len() - 1;
        // Rightmost position with mass after it takes one unit; the rest of the
        // suffix collapses into the last bin.
        let mut suffix = 0u32;
        for p in (0..last).rev() {
            suffix += next[p + 1];
            if suffix > 0 {
                next[p] += 1;
                for v in &mut next[p + 1..] {
                    *v = 0;
                }
                next[last] = suffix - 1;
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Exact target probabilities aligned with [`EnumeratedSpace::states`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution<F> {
    pub probs: Vec<F>,
}

pub fn exact_distribution<F: Real>(es: &EnumeratedSpace, target: &TargetDistribution<F>) -> Result<ExactDistribution<F>> {
    let energies: Vec<F> = es.states.iter().map(|x| target.total_energy(x)).collect::<Result<_>>()?;
    let min = energies.iter().copied().fold(F::infinity(), F::min);
    if min == F::infinity() {
        return Err(Error::DegenerateTarget);
    }
    let mut probs: Vec<F> = energies.iter().map(|&e| (min - e).exp()).collect();
    let z = probs.iter().fold(F::zero(), |acc, &p| acc + p);
    for p in &mut probs {
        *p = *p / z;
    }
    Ok(ExactDistribution { probs })
}

/// Distribution of the nonzero count under `ed`.
pub fn exact_n_marginal<F: Real>(ed: &ExactDistribution<F>, es: &EnumeratedSpace) -> BTreeMap<usize, F> {
    let mut marginal = BTreeMap::new();
    for (x, &p) in es.states.iter().zip(&ed.probs) {
        let slot = marginal.entry(x.l0_norm()).or_insert_with(F::zero);
        *slot = *slot + p;
    }
    marginal
}

/// Dense row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<F> {
    size: usize,
    data: Vec<F>,
    /// Probability that a step from each state passes its acceptance test
    /// (proposals equal to the current state included).
    acceptance: Vec<F>,
}

impl<F: Real> TransitionMatrix<F> {
    fn zeros(size: usize) -> Self {
        Self { size, data: vec![F::zero(); size * size], acceptance: vec![F::zero(); size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> F {
        self.data[from * self.size + to]
    }

    #[inline]
    fn add(&mut self, from: usize, to: usize, p: F) {
        self.data[from * self.size + to] = self.data[from * self.size + to] + p;
    }

    /// Per-state acceptance probability.
    pub fn acceptance(&self) -> &[F] {
        &self.acceptance
    }

    pub fn row(&self, from: usize) -> &[F] {
        &self.data[from * self.size..(from + 1) * self.size]
    }

    /// Largest `|Σ_b π(a, b) - 1|` over rows.
    pub fn max_row_sum_error(&self) -> F {
        (0..self.size)
            .map(|a| (self.row(a).iter().fold(F::zero(), |acc, &p| acc + p) - F::one()).abs())
            .fold(F::zero(), F::max)
    }

    /// `v π`.
    pub fn left_multiply(&self, v: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.size];
        for (a, &va) in v.iter().enumerate() {
            if va == F::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(a)) {
                *o = *o + va * p;
            }
        }
        out
    }
}

/// Exact one-step transition matrix of `kind` on an enumerated space.
pub fn transition_matrix<F: Real>(
    kind: SamplerKind,
    es: &EnumeratedSpace,
    target: &TargetDistribution<F>,
) -> Result<TransitionMatrix<F>> {
    transition_matrix_scaled(kind, es, target, F::one())
}

/// As [`transition_matrix`], with every Metropolis ratio multiplied by
/// `acceptance_scale` before the `min(1, ·)` clamp. Any scale other than 1
/// breaks detailed balance; it exists to check that the checks can fail.
pub fn transition_matrix_scaled<F: Real>(
    kind: SamplerKind,
    es: &EnumeratedSpace,
    target: &TargetDistribution<F>,
    acceptance_scale: F,
) -> Result<TransitionMatrix<F>> {
    let size = es.len();
    if size > MAX_MATRIX_STATES {
        return Err(Error::SpaceTooLarge { size: size.to_string(), cap: MAX_MATRIX_STATES });
    }
    let mut pi = TransitionMatrix::zeros(size);
    assemble(kind, es, target, acceptance_scale, &mut pi)?;
    Ok(pi)
}

/// Exact equilibrium `(accepted_rate, updated_rate)` of `kind`, streamed row by
/// row so spaces above the dense-matrix cap stay cheap.
pub fn exact_rates<F: Real>(
    kind: SamplerKind,
    es: &EnumeratedSpace,
    target: &TargetDistribution<F>,
) -> Result<(F, F)> {
    let ed = exact_distribution(es, target)?;
    let mut sink = DiagonalSink { stay: vec![F::zero(); es.len()], acceptance: vec![F::zero(); es.len()] };
    assemble(kind, es, target, F::one(), &mut sink)?;
    let mut accepted = F::zero();
    let mut updated = F::zero();
    for (a, &p) in ed.probs.iter().enumerate() {
        accepted = accepted + p * sink.acceptance[a];
        updated = updated + p * (F::one() - sink.stay[a]);
    }
    Ok((accepted, updated))
}

trait RowSink<F> {
    fn add(&mut self, from: usize, to: usize, p: F);
    fn accept(&mut self, from: usize, p: F);
}

impl<F: Real> RowSink<F> for TransitionMatrix<F> {
    fn add(&mut self, from: usize, to: usize, p: F) {
        TransitionMatrix::add(self, from, to, p);
    }

    fn accept(&mut self, from: usize, p: F) {
        self.acceptance[from] = self.acceptance[from] + p;
    }
}

struct DiagonalSink<F> {
    stay: Vec<F>,
    acceptance: Vec<F>,
}

impl<F: Real> RowSink<F> for DiagonalSink<F> {
    fn add(&mut self, from: usize, to: usize, p: F) {
        if from == to {
            self.stay[from] = self.stay[from] + p;
        }
    }

    fn accept(&mut self, from: usize, p: F) {
        self.acceptance[from] = self.acceptance[from] + p;
    }
}

/// Enumerates each kernel's randomness exactly: proposal choice, split
/// probability and acceptance.
fn assemble<F: Real, S: RowSink<F>>(
    kind: SamplerKind,
    es: &EnumeratedSpace,
    target: &TargetDistribution<F>,
    acceptance_scale: F,
    sink: &mut S,
) -> Result<()> {
    let size = es.len();
    let bins = es.space.bins();
    match kind {
        SamplerKind::NaiveMH => {
            let energies: Vec<F> = es.states.iter().map(|x| target.total_energy(x)).collect::<Result<_>>()?;
            let q = F::one() / F::lit(size as f64);
            for a in 0..size {
                let mut moved = F::zero();
                for b in 0..size {
                    if a == b {
                        continue;
                    }
                    let ratio = if energies[b] == F::infinity() {
                        F::zero()
                    } else if energies[a] == F::infinity() {
                        F::infinity()
                    } else {
                        (energies[a] - energies[b]).exp()
                    };
                    let p = q * (acceptance_scale * ratio).min(F::one());
                    sink.add(a, b, p);
                    moved = moved + p;
                }
                sink.add(a, a, F::one() - moved);
                sink.accept(a, moved + q * acceptance_scale.min(F::one()));
            }
        }
        SamplerKind::GibbsPair => {
            let pair_prob = F::lit(2.0 / (bins as f64 * (bins as f64 - 1.0)));
            let acc = acceptance_scale.min(F::one());
            for a in 0..size {
                let x = &es.states[a];
                for i in 0..bins {
                    for j in i + 1..bins {
                        if x.values()[i] + x.values()[j] == 0 {
                            sink.add(a, a, pair_prob);
                            sink.accept(a, pair_prob);
                            continue;
                        }
                        for_each_split(es, target, x, i, j, |b, p_split, _| {
                            sink.add(a, b, pair_prob * p_split * acc);
                            sink.add(a, a, pair_prob * p_split * (F::one() - acc));
                            sink.accept(a, pair_prob * p_split * acc);
                        })?;
                    }
                }
            }
        }
        SamplerKind::Accelerated => {
            for a in 0..size {
                let x = &es.states[a];
                let n = x.l0_norm();
                let select = F::one() / (F::lit(n as f64) * F::lit(bins as f64 - 1.0));
                for i in x.support() {
                    for j in (0..bins).filter(|&j| j != i) {
                        let alpha: F = pair_selection_probability(n, bins, x.values()[j] > 0);
                        for_each_split(es, target, x, i, j, |b, p_split, n_next| {
                            let to = es.states[b].values();
                            let alpha_next: F = pair_selection_probability(n_next, bins, to[i] > 0 && to[j] > 0);
                            let acc = (acceptance_scale * alpha_next / alpha).min(F::one());
                            sink.add(a, b, select * p_split * acc);
                            sink.add(a, a, select * p_split * (F::one() - acc));
                            sink.accept(a, select * p_split * acc);
                        })?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Visits each split of `(i, j)` from `x` with its conditional probability and
/// resulting nonzero count. A pair whose splits all have zero probability is
/// only reachable from zero-probability states; it is treated as staying put.
fn for_each_split<F: Real>(
    es: &EnumeratedSpace,
    target: &TargetDistribution<F>,
    x: &CompositionRatio,
    i: usize,
    j: usize,
    mut visit: impl FnMut(usize, F, usize),
) -> Result<()> {
    let weights = match target.pair_conditional_weights(x, i, j) {
        Ok(w) => w,
        Err(Error::AllZeroWeights { .. }) => {
            let a = es.position(x.values()).expect("state is enumerated");
            visit(a, F::one(), x.l0_norm());
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let total = weights.iter().fold(F::zero(), |acc, &w| acc + w);
    let s = x.values()[i] + x.values()[j];
    let mut next = x.values().to_vec();
    for (k, &w) in weights.iter().enumerate() {
        if w == F::zero() {
            continue;
        }
        next[i] = k as u32;
        next[j] = s - k as u32;
        let b = es.position(&next).expect("split stays in the space");
        visit(b, w / total, l0_norm(&next));
    }
    Ok(())
}

/// `max_{a,b} |P(a) π(a,b) - P(b) π(b,a)|`.
pub fn detailed_balance_residual<F: Real>(ed: &ExactDistribution<F>, pi: &TransitionMatrix<F>) -> F {
    let mut worst = F::zero();
    for a in 0..pi.size {
        for b in a + 1..pi.size {
            let flow = ed.probs[a] * pi.get(a, b) - ed.probs[b] * pi.get(b, a);
            worst = worst.max(flow.abs());
        }
    }
    worst
}

/// Long-run accepted and updated rates of a chain in equilibrium:
/// `Σ_a P(a) acc(a)` and `Σ_a P(a) (1 - π(a, a))`.
pub fn stationary_rates<F: Real>(ed: &ExactDistribution<F>, pi: &TransitionMatrix<F>) -> (F, F) {
    let mut accepted = F::zero();
    let mut updated = F::zero();
    for (a, &p) in ed.probs.iter().enumerate() {
        accepted = accepted + p * pi.acceptance[a];
        updated = updated + p * (F::one() - pi.get(a, a));
    }
    (accepted, updated)
}

/// `max_b |(P π)_b - P_b|`.
pub fn stationarity_residual<F: Real>(ed: &ExactDistribution<F>, pi: &TransitionMatrix<F>) -> F {
    pi.left_multiply(&ed.probs)
        .iter()
        .zip(&ed.probs)
        .map(|(a, b)| (*a - *b).abs())
        .fold(F::zero(), F::max)
}

/// Stationary vector by power iteration on the lazy chain `(I + π) / 2`,
/// started from the uniform vector.
pub fn stationary_distribution<F: Real>(pi: &TransitionMatrix<F>) -> Vec<F> {
    let half = F::lit(0.5);
    let mut v = vec![F::one() / F::lit(pi.size as f64); pi.size];
    for _ in 0..1_000_000 {
        let moved = pi.left_multiply(&v);
        let next: Vec<F> = v.iter().zip(&moved).map(|(&a, &b)| half * (a + b)).collect();
        let change = next.iter().zip(&v).fold(F::zero(), |acc, (a, b)| acc + (*a - *b).abs());
        v = next;
        if change < F::lit(1e-15).max(F::epsilon()) {
            break;
        }
    }
    let z = v.iter().fold(F::zero(), |acc, &p| acc + p);
    v.iter().map(|&p| p / z).collect()
}

/// Normalized visit frequencies of `samples` over the enumerated states.
pub fn empirical_distribution<'a, F: Real>(
    es: &EnumeratedSpace,
    samples: impl IntoIterator<Item = &'a [u32]>,
) -> Result<Vec<F>> {
    let mut counts = vec![0u64; es.len()];
    for s in samples {
        let k = es
            .position(s)
            .ok_or_else(|| Error::SupportMismatch(format!("sample {s:?} is not a state of {}", es.space)))?;
        counts[k] += 1;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyChain);
    }
    Ok(counts.iter().map(|&c| F::lit(c as f64 / total as f64)).collect())
}

/// `(1/2) Σ |p - q|` after normalizing both vectors.
pub fn total_variation<F: Real>(p: &[F], q: &[F]) -> Result<F> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch(format!("lengths {} and {}", p.len(), q.len())));
    }
    let norm = |v: &[F]| -> Result<F> {
        let z = v.iter().fold(F::zero(), |acc, &x| acc + x);
        if !(z > F::zero()) || v.iter().any(|&x| x < F::zero()) {
            return Err(Error::SupportMismatch("distribution has no positive mass or a negative entry".into()));
        }
        Ok(z)
    };
    let (zp, zq) = (norm(p)?, norm(q)?);
    let sum = p.iter().zip(q).fold(F::zero(), |acc, (&a, &b)| acc + (a / zp - b / zq).abs());
    Ok(F::lit(0.5) * sum)
}

/// Total variation between two histograms keyed by the same domain; keys
/// missing on one side count as zero mass there.
pub fn total_variation_maps<K: Ord + Clone, F: Real>(p: &BTreeMap<K, F>, q: &BTreeMap<K, F>) -> Result<F> {
    let mut keys: Vec<&K> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    let pv: Vec<F> = keys.iter().map(|k| p.get(*k).copied().unwrap_or_else(F::zero)).collect();
    let qv: Vec<F> = keys.iter().map(|k| q.get(*k).copied().unwrap_or_else(F::zero)).collect();
    total_variation(&pv, &qv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::SparsityCondition;

    fn space(n: usize, m: u32) -> SpaceParams {
        SpaceParams::new(n, m).unwrap()
    }

    #[test]
    fn enumerates_in_lex_order() {
        let es = enumerate_space(&space(2, 2)).unwrap();
        let got: Vec<&[u32]> = es.states().iter().map(|s| s.values()).collect();
        assert_eq!(got, vec![&[0, 2][..], &[1, 1], &[2, 0]]);
    }

    #[test]
    fn enumeration_matches_table_total() {
        let p = space(50, 5);
        // 3 162 510 states: above the default cap, so stream instead of storing.
        assert!(matches!(enumerate_space(&p), Err(Error::SpaceTooLarge { .. })));
        let mut count = 0usize;
        let mut prev: Option<Vec<u32>> = None;
        for s in LexStates::new(&p) {
            assert_eq!(s.iter().sum::<u32>(), 5);
            if let Some(q) = &prev {
                assert!(q < &s);
            }
            prev = Some(s);
            count += 1;
        }
        assert_eq!(count, 50 + 4_900 + 117_600 + 921_200 + 2_118_760);
    }

    #[test]
    fn lex_stream_matches_recursive_definition() {
        let p = space(4, 3);
        let es = enumerate_space(&p).unwrap();
        assert_eq!(es.len(), 20);
        let mut brute = Vec::new();
        for a in 0..=3u32 {
            for b in 0..=3 - a {
                for c in 0..=3 - a - b {
                    brute.push(vec![a, b, c, 3 - a - b - c]);
                }
            }
        }
        let got: Vec<Vec<u32>> = es.states().iter().map(|s| s.values().to_vec()).collect();
        assert_eq!(got, brute);
    }

    #[test]
    fn refuses_huge_spaces() {
        assert!(matches!(enumerate_space(&space(2000, 100)), Err(Error::SpaceTooLarge { .. })));
    }

    #[test]
    fn small_exact_distribution() {
        let p = space(3, 2);
        let t = TargetDistribution::new(p, SparsityCondition::<f64>::uniform(1, 2, &p).unwrap());
        let es = enumerate_space(&p).unwrap();
        let ed = exact_distribution(&es, &t).unwrap();
        for prob in &ed.probs {
            assert!((prob - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_target_is_reported() {
        let p = space(3, 2);
        let t = TargetDistribution::new(p, SparsityCondition::<f64>::uniform(1, 2, &p).unwrap())
            .with_property(crate::target::PropertyCondition::from_fn(|_| 0.0).with_floor(None).unwrap());
        let es = enumerate_space(&p).unwrap();
        assert_eq!(exact_distribution(&es, &t), Err(Error::DegenerateTarget));
    }

    #[test]
    fn tv_examples() {
        let p = [0.2f64, 0.3, 0.5];
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
        assert!((total_variation(&[1.0f64, 0.0], &[0.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(total_variation(&[1.0f64], &[0.5, 0.5]).is_err());
        let a: BTreeMap<usize, f64> = [(2, 1.0)].into();
        let b: BTreeMap<usize, f64> = [(3, 1.0)].into();
        assert!((total_variation_maps(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_cap_is_enforced() {
        let p = space(6, 4);
        let t = TargetDistribution::new(p, SparsityCondition::<f64>::uniform(1, 4, &p).unwrap());
        let es = enumerate_space(&p).unwrap();
        assert!(matches!(transition_matrix(SamplerKind::Accelerated, &es, &t), Ok(_)));
        let big = space(8, 6);
        let es = enumerate_space(&big).unwrap();
        let t = TargetDistribution::new(big, SparsityCondition::<f64>::uniform(1, 6, &big).unwrap());
        assert!(matches!(transition_matrix(SamplerKind::GibbsPair, &es, &t), Err(Error::SpaceTooLarge { .. })));
    }

    #[test]
    fn streamed_rates_match_dense_matrix() {
        let p = space(5, 3);
        let t = TargetDistribution::new(p, SparsityCondition::<f64>::uniform(2, 3, &p).unwrap());
        let es = enumerate_space(&p).unwrap();
        let ed = exact_distribution(&es, &t).unwrap();
        for kind in SamplerKind::ALL {
            let pi = transition_matrix(kind, &es, &t).unwrap();
            let (a, u) = stationary_rates(&ed, &pi);
            let (a2, u2) = exact_rates(kind, &es, &t).unwrap();
            assert!((a - a2).abs() < 1e-12 && (u - u2).abs() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn exact_rates_beyond_matrix_cap() {
        // 2002 states; reference values from an independent enumeration.
        let p = space(10, 5);
        let t = TargetDistribution::new(p, SparsityCondition::<f64>::uniform(2, 5, &p).unwrap());
        let es = enumerate_space(&p).unwrap();
        let (a, u) = exact_rates(SamplerKind::Accelerated, &es, &t).unwrap();
        assert!((a - 0.9564).abs() < 5e-4, "{a}");
        assert!((u - 0.5378).abs() < 5e-4, "{u}");
    }
}
