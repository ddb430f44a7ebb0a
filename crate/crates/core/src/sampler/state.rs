use crate::composition::CompositionRatio;

const NOT_IN_SUPPORT: usize = usize::MAX;

/// Mutable chain state with an O(1)-updatable index of its nonzero entries, so
/// kernels can draw a uniform nonzero coordinate without scanning all `N` bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    values: Vec<u32>,
    support: Vec<usize>,
    slot: Vec<usize>,
    version: u64,
}

impl ChainState {
    pub fn new(x: &CompositionRatio) -> Self {
        let values = x.values().to_vec();
        let mut slot = vec![NOT_IN_SUPPORT; values.len()];
        let mut support = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v > 0 {
                slot[i] = support.len();
                support.push(i);
            }
        }
        Self { values, support, slot, version: 0 }
    }

    #[inline]
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    #[inline]
    pub(crate) fn values_mut_raw(&mut self) -> &mut [u32] {
        &mut self.values
    }

    /// Nonzero indices in insertion order (not sorted).
    #[inline]
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Current nonzero count.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    /// Incremented on every mutation.
    #[inline]
    pub(crate) fn version(&self) -> u64 {
        self.version
    }

    pub fn to_ratio(&self) -> CompositionRatio {
        CompositionRatio::from_vec_unchecked(self.values.clone())
    }

    pub(crate) fn set(&mut self, i: usize, value: u32) {
        let was = self.values[i];
        self.values[i] = value;
        self.version += 1;
        match (was > 0, value > 0) {
            (false, true) => {
                self.slot[i] = self.support.len();
                self.support.push(i);
            }
            (true, false) => {
                let pos = self.slot[i];
                let last = *self.support.last().expect("nonempty support");
                self.support.swap_remove(pos);
                if last != i {
                    self.slot[last] = pos;
                }
                self.slot[i] = NOT_IN_SUPPORT;
            }
            _ => {}
        }
    }

    /// Replaces the state with a run-length representation.
    pub(crate) fn assign_sparse(&mut self, sparse: &[(usize, u32)]) {
        while let Some(&i) = self.support.last() {
            self.set(i, 0);
        }
        for &(i, v) in sparse {
            self.set(i, v);
        }
    }

    /// True when the state equals the run-length representation.
    pub(crate) fn equals_sparse(&self, sparse: &[(usize, u32)]) -> bool {
        sparse.len() == self.nnz() && sparse.iter().all(|&(i, v)| self.values[i] == v)
    }

    /// Sum over the support equals `total` and the support index is coherent.
    pub fn is_consistent(&self, total: u32) -> bool {
        let sum: u64 = self.support.iter().map(|&i| u64::from(self.values[i])).sum();
        sum == u64::from(total)
            && self.support.iter().enumerate().all(|(pos, &i)| self.slot[i] == pos && self.values[i] > 0)
    }
}
