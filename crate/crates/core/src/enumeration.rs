//! Exhaustive enumeration over the sequence space.
//!
//! Sequences are indexed in row-major order with position 0 most significant,
//! so `index([x_0, .., x_{n-1}]) = sum_i x_i * stride_i`. Positions may have
//! different arities (composite alphabets encode tuples as integers).

use crate::error::{Error, Result};
use crate::mechanism::rule::{ContextTable, ReleaseTable};
use crate::scalar::Prob;
use crate::sequence::{SensitiveSet, Symbol};

/// Largest number of sequences any enumeration routine will visit.
pub const MAX_SEQUENCES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSpace {
    arities: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl SequenceSpace {
    pub fn new(arities: Vec<usize>) -> Result<Self> {
        let mut size: f64 = 1.0;
        for &a in &arities {
            if a == 0 {
                return Err(Error::input("position with empty alphabet"));
            }
            size *= a as f64;
        }
        if size > MAX_SEQUENCES as f64 {
            return Err(Error::capacity("sequence enumeration", size, MAX_SEQUENCES as f64));
        }
        let n = arities.len();
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * arities[i + 1];
        }
        Ok(SequenceSpace {
            arities,
            strides,
            size: size as usize,
        })
    }

    pub fn uniform(n: usize, arity: usize) -> Result<Self> {
        Self::new(vec![arity; n])
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn arity(&self, i: usize) -> usize {
        self.arities[i]
    }

    #[inline]
    pub fn symbol(&self, index: usize, i: usize) -> Symbol {
        ((index / self.strides[i]) % self.arities[i]) as Symbol
    }

    pub fn index(&self, x: &[Symbol]) -> usize {
        x.iter()
            .zip(&self.strides)
            .map(|(&s, &st)| s as usize * st)
            .sum()
    }

    pub fn decode(&self, index: usize) -> Vec<Symbol> {
        (0..self.len()).map(|i| self.symbol(index, i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<Symbol>> + '_ {
        (0..self.size).map(|idx| self.decode(idx))
    }
}

/// Mixed-radix code for assignments `u` to the sensitive positions, first
/// sensitive position most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveCodec {
    positions: Vec<usize>,
    arities: Vec<usize>,
    strides: Vec<usize>,
    count: usize,
}

impl SensitiveCodec {
    pub fn new(k: &SensitiveSet, arities: &[usize]) -> Self {
        let positions = k.positions().to_vec();
        let ka: Vec<usize> = positions.iter().map(|&p| arities[p]).collect();
        let mut strides = vec![1; ka.len()];
        for j in (0..ka.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * ka[j + 1];
        }
        let count = ka.iter().product();
        SensitiveCodec {
            positions,
            arities: ka,
            strides,
            count,
        }
    }

    /// Number of assignments, `prod_k |X_k|` (1 when K is empty).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn encode(&self, u: &[Symbol]) -> usize {
        u.iter()
            .zip(&self.strides)
            .map(|(&s, &st)| s as usize * st)
            .sum()
    }

    pub fn decode(&self, code: usize) -> Vec<Symbol> {
        self.strides
            .iter()
            .zip(&self.arities)
            .map(|(&st, &a)| ((code / st) % a) as Symbol)
            .collect()
    }

    /// Code of `x_K` for a full sequence.
    pub fn of_sequence(&self, x: &[Symbol]) -> usize {
        self.positions
            .iter()
            .zip(&self.strides)
            .map(|(&p, &st)| x[p] as usize * st)
            .sum()
    }

    /// Symbol that assignment `code` gives to sensitive position `i`, if `i` is sensitive.
    pub fn value_at(&self, code: usize, i: usize) -> Option<Symbol> {
        self.positions
            .iter()
            .position(|&p| p == i)
            .map(|j| ((code / self.strides[j]) % self.arities[j]) as Symbol)
    }
}

/// Materialized joint distribution over a sequence space.
#[derive(Debug, Clone)]
pub struct JointTable<T> {
    space: SequenceSpace,
    probs: Vec<T>,
}

impl<T: Prob> JointTable<T> {
    pub fn from_fn(space: SequenceSpace, mut f: impl FnMut(&[Symbol]) -> Result<T>) -> Result<Self> {
        let mut probs = Vec::with_capacity(space.size());
        let mut x = vec![0 as Symbol; space.len()];
        for idx in 0..space.size() {
            for (i, s) in x.iter_mut().enumerate() {
                *s = space.symbol(idx, i);
            }
            probs.push(f(&x)?);
        }
        Ok(JointTable { space, probs })
    }

    pub fn new(space: SequenceSpace, probs: Vec<T>) -> Result<Self> {
        if probs.len() != space.size() {
            return Err(Error::input(format!(
                "table has {} entries, space has {}",
                probs.len(),
                space.size()
            )));
        }
        Ok(JointTable { space, probs })
    }

    pub fn space(&self) -> &SequenceSpace {
        &self.space
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, x: &[Symbol]) -> T {
        self.probs[self.space.index(x)].clone()
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |acc, p| acc + p.clone())
    }

    /// Marginal distribution of the sensitive assignment.
    pub fn sensitive_marginal(&self, codec: &SensitiveCodec) -> Vec<T> {
        let mut out = vec![T::zero(); codec.count()];
        for (idx, p) in self.probs.iter().enumerate() {
            let u = self.sensitive_code(codec, idx);
            out[u] = out[u].clone() + p.clone();
        }
        out
    }

    /// `p(x_i = a, x_K = u)` as a `count(u) x arity(i)` row-major table.
    pub fn pair_marginal(&self, codec: &SensitiveCodec, i: usize) -> Vec<T> {
        let a = self.space.arity(i);
        let mut out = vec![T::zero(); codec.count() * a];
        for (idx, p) in self.probs.iter().enumerate() {
            let cell = self.sensitive_code(codec, idx) * a + self.space.symbol(idx, i) as usize;
            out[cell] = out[cell].clone() + p.clone();
        }
        out
    }

    #[inline]
    pub(crate) fn sensitive_code(&self, codec: &SensitiveCodec, idx: usize) -> usize {
        codec
            .positions
            .iter()
            .zip(&codec.strides)
            .map(|(&pos, &st)| self.space.symbol(idx, pos) as usize * st)
            .sum()
    }
}

/// One sequence that is still consistent with the processed outputs, with its
/// joint weight `p(x, y_prefix)` under the mechanism's belief model and under
/// the model that actually generated the data (the same model unless a
/// mismatch is being studied).
#[derive(Debug, Clone)]
pub struct WeightedSequence<T> {
    pub index: u32,
    pub sensitive: u32,
    pub belief: T,
    pub truth: T,
}

/// Sparse joint weights over sequences given a processed output prefix.
///
/// Only sequences with positive belief or truth weight are stored, so a
/// deterministic branch touches each sequence once per level.
#[derive(Debug, Clone)]
pub struct PrefixWeights<T> {
    entries: Vec<WeightedSequence<T>>,
}

impl<T: Prob> PrefixWeights<T> {
    /// Weights before any output has been produced.
    pub fn initial(
        belief: &JointTable<T>,
        truth: Option<&JointTable<T>>,
        codec: &SensitiveCodec,
    ) -> Result<Self> {
        if let Some(t) = truth {
            if t.space() != belief.space() {
                return Err(Error::input("belief and truth models have different shapes"));
            }
        }
        let entries = (0..belief.space().size())
            .filter_map(|idx| {
                let b = belief.probs[idx].clone();
                let t = truth.map_or_else(|| b.clone(), |t| t.probs[idx].clone());
                (b.is_positive() || t.is_positive()).then(|| WeightedSequence {
                    index: idx as u32,
                    sensitive: belief.sensitive_code(codec, idx) as u32,
                    belief: b,
                    truth: t,
                })
            })
            .collect();
        Ok(PrefixWeights { entries })
    }

    pub fn entries(&self) -> &[WeightedSequence<T>] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn belief_mass(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, e| acc + e.belief.clone())
    }

    pub fn truth_mass(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, e| acc + e.truth.clone())
    }

    /// Truth-weighted mass per sensitive assignment: `p(x_K = u, y_prefix)`.
    pub fn truth_by_sensitive(&self, count: usize) -> Vec<T> {
        let mut out = vec![T::zero(); count];
        for e in &self.entries {
            let c = e.sensitive as usize;
            out[c] = out[c].clone() + e.truth.clone();
        }
        out
    }

    /// Belief conditionals `p(x_i = a | x_K = u, y_prefix)` for every `u`.
    pub fn context(
        &self,
        space: &SequenceSpace,
        codec: &SensitiveCodec,
        i: usize,
        sensitive: bool,
    ) -> ContextTable<T> {
        let arity = space.arity(i);
        let mut mass = vec![T::zero(); codec.count() * arity];
        for e in &self.entries {
            let cell = e.sensitive as usize * arity + space.symbol(e.index as usize, i) as usize;
            mass[cell] = mass[cell].clone() + e.belief.clone();
        }
        ContextTable::from_masses(codec.count(), arity, mass, sensitive)
    }

    /// Weights after position `i` produced `outcome` (`None` = erasure) under
    /// the given release probabilities.
    pub fn branch(
        &self,
        space: &SequenceSpace,
        i: usize,
        outcome: Option<Symbol>,
        release: &ReleaseTable<T>,
    ) -> Self {
        let entries = self
            .entries
            .iter()
            .filter_map(|e| {
                let xi = space.symbol(e.index as usize, i);
                let r = release.release(e.sensitive as usize, xi);
                let factor = match outcome {
                    Some(a) if a == xi => r,
                    Some(_) => return None,
                    None => T::one() - r,
                };
                if !factor.is_positive() {
                    return None;
                }
                let belief = e.belief.clone() * factor.clone();
                let truth = e.truth.clone() * factor;
                (belief.is_positive() || truth.is_positive()).then(|| WeightedSequence {
                    index: e.index,
                    sensitive: e.sensitive,
                    belief,
                    truth,
                })
            })
            .collect();
        PrefixWeights { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_position_zero_most_significant() {
        let space = SequenceSpace::new(vec![2, 3, 2]).unwrap();
        assert_eq!(space.size(), 12);
        assert_eq!(space.index(&[1, 0, 0]), 6);
        assert_eq!(space.index(&[0, 2, 1]), 5);
        for idx in 0..space.size() {
            assert_eq!(space.index(&space.decode(idx)), idx);
        }
    }

    #[test]
    fn codec_orders_sensitive_values() {
        let k = SensitiveSet::new(vec![2, 0], 3).unwrap();
        let codec = SensitiveCodec::new(&k, &[2, 2, 3]);
        assert_eq!(codec.count(), 6);
        assert_eq!(codec.encode(&[1, 2]), 5);
        assert_eq!(codec.decode(4), vec![1, 1]);
        assert_eq!(codec.of_sequence(&[1, 0, 2]), 5);
        assert_eq!(codec.value_at(5, 2), Some(2));
        assert_eq!(codec.value_at(5, 1), None);
    }

    #[test]
    fn empty_sensitive_set_has_one_assignment() {
        let codec = SensitiveCodec::new(&SensitiveSet::empty(), &[2, 2]);
        assert_eq!(codec.count(), 1);
        assert_eq!(codec.of_sequence(&[1, 1]), 0);
    }

    #[test]
    fn oversize_space_is_capacity_error() {
        assert!(matches!(
            SequenceSpace::uniform(21, 2),
            Err(Error::Capacity { .. })
        ));
    }
}
