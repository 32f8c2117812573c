//! Fock-index arithmetic, cutoff predicates, and dense tensors.
//!
//! A Fock index is a length-`D` vector of non-negative photon numbers. For
//! state vectors `D = M` (one axis per mode); for density matrices `D = 2M`,
//! with the two indices of mode `i` interleaved at axes `2i` and `2i+1`. The
//! first axis of each pair develops the complex-conjugated amplitudes, so the
//! tensor of a density matrix satisfies `G[..,m,n,..] = conj(G[..,n,m,..])`
//! under swapping every pair, and the fully paired entries `[n1,n1,n2,n2,..]`
//! are the (real) detection probabilities.
//!
//! Decrementing any index below zero always denotes an identically-zero
//! amplitude, never an error; walkers encode this by predicate rather than by
//! padding.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::C64;

/// A lattice coordinate: one non-negative photon count per tensor axis.
pub type FockIndex = Vec<usize>;

/// Sum of the index entries. The recurrence advances strictly by weight.
#[must_use]
pub fn weight(k: &[usize]) -> usize {
    k.iter().sum()
}

/// Index of the last nonzero axis, if any. Drives the write-ownership
/// partition of the reference walker: each cell is written exactly once, by
/// the pivot one step below it along its last nonzero axis.
#[must_use]
pub fn last_nonzero(k: &[usize]) -> Option<usize> {
    (0..k.len()).rev().find(|&i| k[i] > 0)
}

/// Bounds on the simulated lattice.
///
/// `Local` carries one cutoff per *mode*; for density matrices the same
/// cutoff bounds both interleaved axes of the mode. `GlobalWeight` admits
/// indices with weight strictly below `w_max` (callers convert a total-photon
/// bound `N_max` to `N_max` for state vectors and `2·N_max` for density
/// matrices). `ProbabilityMass` is not a geometric bound: the walker grows the
/// lattice shell by shell until the accumulated probability reaches the
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum CutoffSpec {
    Local(Vec<usize>),
    GlobalWeight(usize),
    ProbabilityMass(f64),
}

impl CutoffSpec {
    /// True when `k` lies inside the bound. `axis_bounds` must be the
    /// per-axis expansion (see [`dm_shape`]) when the spec is `Local`.
    #[must_use]
    pub fn admits(&self, k: &[usize], axis_bounds: &[usize]) -> bool {
        match self {
            CutoffSpec::Local(_) => k.iter().zip(axis_bounds).all(|(&ki, &ci)| ki < ci),
            CutoffSpec::GlobalWeight(w_max) => weight(k) < *w_max,
            CutoffSpec::ProbabilityMass(_) => true,
        }
    }
}

/// Interleaved density-matrix shape `[C1, C1, C2, C2, ...]` from per-mode
/// cutoffs.
#[must_use]
pub fn dm_shape(cutoffs: &[usize]) -> Vec<usize> {
    let mut shape = Vec::with_capacity(cutoffs.len() * 2);
    for &c in cutoffs {
        shape.push(c);
        shape.push(c);
    }
    shape
}

/// `[n1, n1, n2, n2, ...]`: the interleaved index of a fully paired
/// (diagonal) density-matrix entry.
#[must_use]
pub fn interleave_pairs(n: &[usize]) -> Vec<usize> {
    let mut k = Vec::with_capacity(n.len() * 2);
    for &ni in n {
        k.push(ni);
        k.push(ni);
    }
    k
}

/// Row-major strides for a shape.
#[must_use]
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Row-major linear offset of `k` under `strides`.
#[must_use]
pub fn linear_index(k: &[usize], strides: &[usize]) -> usize {
    debug_assert_eq!(k.len(), strides.len());
    k.iter().zip(strides).map(|(&ki, &si)| ki * si).sum()
}

/// Inverse of [`linear_index`] for the given shape.
#[must_use]
pub fn unravel(mut lin: usize, shape: &[usize]) -> Vec<usize> {
    let st = strides(shape);
    let mut k = vec![0usize; shape.len()];
    for i in 0..shape.len() {
        k[i] = lin / st[i];
        lin %= st[i];
    }
    k
}

/// All indices of exactly weight `w` inside the box `0 ≤ k < shape`, in
/// lexicographic order. The union over `w` partitions the box exactly.
#[must_use]
pub fn indices_of_weight(w: usize, shape: &[usize]) -> Vec<FockIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; shape.len()];
    push_weighted(w, 0, shape, &mut cur, &mut out);
    out
}

fn push_weighted(rem: usize, axis: usize, shape: &[usize], cur: &mut Vec<usize>, out: &mut Vec<FockIndex>) {
    if axis == shape.len() {
        if rem == 0 {
            out.push(cur.clone());
        }
        return;
    }
    // Prune: the remaining axes can absorb at most Σ (shape_i − 1).
    let cap: usize = shape[axis..].iter().map(|&c| c - 1).sum();
    if rem > cap {
        return;
    }
    let hi = rem.min(shape[axis] - 1);
    for v in 0..=hi {
        cur[axis] = v;
        push_weighted(rem - v, axis + 1, shape, cur, out);
        cur[axis] = 0;
    }
}

/// Paired (diagonal) indices of pair-sum `s`: all `[a, b, c, ...]` with
/// `a + b + ... = s` and each entry below its mode cutoff, lexicographic.
/// These are the *mode-level* coordinates; interleave to get the tensor
/// index.
#[must_use]
pub fn diag_indices_of_pair_sum(s: usize, mode_cutoffs: &[usize]) -> Vec<FockIndex> {
    indices_of_weight(s, mode_cutoffs)
}

/// All mode-level compositions of `s` into `parts` entries with no upper
/// bound, lexicographic. Used by the global-weight scheduler, where per-mode
/// cutoffs drop out.
#[must_use]
pub fn compositions(s: usize, parts: usize) -> Vec<FockIndex> {
    // An unbounded composition of s has every entry ≤ s, so a box of side
    // s+1 is exact.
    indices_of_weight(s, &vec![s + 1; parts])
}

/// Dense row-major complex tensor. Unwritten entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    pub shape: Vec<usize>,
    pub data: Vec<C64>,
}

impl DenseTensor {
    #[must_use]
    pub fn zeros(shape: &[usize]) -> Self {
        let size = shape.iter().product();
        DenseTensor { shape: shape.to_vec(), data: vec![C64::new(0.0, 0.0); size] }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[must_use]
    pub fn get(&self, k: &[usize]) -> C64 {
        let st = strides(&self.shape);
        self.data[linear_index(k, &st)]
    }

    pub fn set(&mut self, k: &[usize], v: C64) {
        let st = strides(&self.shape);
        let lin = linear_index(k, &st);
        self.data[lin] = v;
    }
}

/// Dense row-major real tensor (probability outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl RealTensor {
    #[must_use]
    pub fn zeros(shape: &[usize]) -> Self {
        let size = shape.iter().product();
        RealTensor { shape: shape.to_vec(), data: vec![0.0; size] }
    }

    #[must_use]
    pub fn get(&self, k: &[usize]) -> f64 {
        let st = strides(&self.shape);
        self.data[linear_index(k, &st)]
    }

    /// Sum of all entries (total captured probability for diagonal tensors).
    #[must_use]
    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_is_entry_sum() {
        assert_eq!(weight(&[0, 0, 0, 0]), 0);
        assert_eq!(weight(&[2, 1, 0, 3]), 6);
        assert_eq!(weight(&[1, 1, 2, 2]), 6);
    }

    #[test]
    fn weight_one_enumeration_is_lexicographic() {
        let idx = indices_of_weight(1, &[3, 3]);
        assert_eq!(idx, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn diag_pair_sum_one_two_modes() {
        let d = diag_indices_of_pair_sum(1, &[4, 4]);
        assert_eq!(d, vec![vec![0, 1], vec![1, 0]]);
        // Interleaved these are [0,0,1,1] and [1,1,0,0].
        assert_eq!(interleave_pairs(&d[0]), vec![0, 0, 1, 1]);
        assert_eq!(interleave_pairs(&d[1]), vec![1, 1, 0, 0]);
    }

    #[test]
    fn global_weight_is_strict() {
        let spec = CutoffSpec::GlobalWeight(3);
        assert!(!spec.admits(&[2, 1], &[4, 4]));
        assert!(spec.admits(&[2, 0], &[4, 4]));
        // Enumerating weight-3 indices under w_max = 3 must come up empty.
        let admitted: Vec<_> = indices_of_weight(3, &[4, 4])
            .into_iter()
            .filter(|k| spec.admits(k, &[4, 4]))
            .collect();
        assert!(admitted.is_empty());
    }

    #[test]
    fn indices_of_weight_partition_the_box() {
        let shape = [3usize, 2, 4];
        let total: usize = shape.iter().product();
        let max_w: usize = shape.iter().map(|&c| c - 1).sum();
        let mut seen = alloc::collections::BTreeSet::new();
        for w in 0..=max_w {
            for k in indices_of_weight(w, &shape) {
                assert_eq!(weight(&k), w);
                assert!(k.iter().zip(shape.iter()).all(|(&ki, &ci)| ki < ci));
                assert!(seen.insert(k), "duplicate index emitted");
            }
        }
        assert_eq!(seen.len(), total);
    }

    #[test]
    fn linear_index_roundtrip() {
        let shape = [3usize, 4, 2];
        let st = strides(&shape);
        assert_eq!(st, vec![8, 2, 1]);
        for lin in 0..24 {
            let k = unravel(lin, &shape);
            assert_eq!(linear_index(&k, &st), lin);
        }
    }

    #[test]
    fn compositions_have_no_upper_bound() {
        let c = compositions(3, 2);
        assert_eq!(c, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
    }

    #[test]
    fn last_nonzero_positions() {
        assert_eq!(last_nonzero(&[0, 0, 0]), None);
        assert_eq!(last_nonzero(&[1, 0, 0]), Some(0));
        assert_eq!(last_nonzero(&[1, 0, 2]), Some(2));
    }

    #[test]
    fn dense_tensor_starts_zero() {
        let t = DenseTensor::zeros(&[2, 2]);
        assert_eq!(t.len(), 4);
        assert!(t.data.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }
}
