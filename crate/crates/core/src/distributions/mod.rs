//! Sequence models: distributions over length-n symbol sequences.

mod config;
mod explicit;
mod hmm;
mod markov;

pub use config::{AnyModel, ModelConfig};
pub use explicit::ExplicitJointModel;
pub use hmm::{read_panel, write_panel, HmmModel};
pub use markov::MarkovChainModel;

use rand::RngCore;

use crate::enumeration::{JointTable, PrefixWeights, SensitiveCodec, SequenceSpace};
use crate::error::{Error, Result};
use crate::mechanism::rule::ReleaseTable;
use crate::scalar::Prob;
use crate::sequence::{SensitiveSet, Symbol};

/// A distribution `p(x)` over sequences of fixed length.
///
/// Implementations are immutable once built; sampling takes the random stream
/// from the caller so concurrent runs each own theirs.
pub trait SequenceModel<T: Prob>: Send + Sync {
    fn len(&self) -> usize;

    /// Number of symbols position `i` can take.
    fn arity(&self, i: usize) -> usize;

    /// Exact probability of `x`; errors if `x` has the wrong length or symbols.
    fn joint_prob(&self, x: &[Symbol]) -> Result<T>;

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<Symbol>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn arities(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.arity(i)).collect()
    }

    fn check_sequence(&self, x: &[Symbol]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::input(format!(
                "sequence has length {}, model has {}",
                x.len(),
                self.len()
            )));
        }
        if let Some(i) = (0..x.len()).find(|&i| x[i] as usize >= self.arity(i)) {
            return Err(Error::input(format!(
                "symbol {} at position {} outside alphabet of size {}",
                x[i],
                i + 1,
                self.arity(i)
            )));
        }
        Ok(())
    }

    fn space(&self) -> Result<SequenceSpace> {
        SequenceSpace::new(self.arities())
    }

    /// Materializes `p(x)` for every sequence (small `n` only).
    fn joint_table(&self) -> Result<JointTable<T>> {
        JointTable::from_fn(self.space()?, |x| self.joint_prob(x))
    }

    /// `p(x_i | x_K = u, y_prefix)` by exhaustive enumeration.
    ///
    /// `prefix` lists processed positions in processing order with their
    /// outputs (`None` = erased). The probability of each erased entry is the
    /// mechanism's own erasure probability at that step, so the result is the
    /// conditional the mechanism consumes at position `i`.
    fn conditional_query(
        &self,
        i: usize,
        u: &[Symbol],
        k: &SensitiveSet,
        prefix: &[(usize, Option<Symbol>)],
    ) -> Result<Vec<T>> {
        let table = self.joint_table()?;
        conditional_from_table(&table, i, u, k, prefix)
    }
}

/// [`SequenceModel::conditional_query`] against an already materialized table.
pub fn conditional_from_table<T: Prob>(
    table: &JointTable<T>,
    i: usize,
    u: &[Symbol],
    k: &SensitiveSet,
    prefix: &[(usize, Option<Symbol>)],
) -> Result<Vec<T>> {
    let space = table.space();
    if i >= space.len() || u.len() != k.len() {
        return Err(Error::input("query position or assignment out of range"));
    }
    if k.positions().iter().any(|&p| p >= space.len()) {
        return Err(Error::input("sensitive index out of range"));
    }
    let mut seen = vec![false; space.len()];
    for &(j, _) in prefix {
        if j >= space.len() || std::mem::replace(&mut seen[j], true) {
            return Err(Error::input(format!("prefix position {} repeated or out of range", j + 1)));
        }
    }
    if seen[i] {
        return Err(Error::input("query position already processed"));
    }
    let codec = SensitiveCodec::new(k, space.arities());
    let mut weights = PrefixWeights::initial(table, None, &codec)?;
    for &(j, y) in prefix {
        let ctx = weights.context(space, &codec, j, k.contains(j));
        let release = ReleaseTable::from_context(&ctx)?;
        weights = weights.branch(space, j, y, &release);
    }
    let ctx = weights.context(space, &codec, i, k.contains(i));
    let code = codec.encode(u);
    ctx.row(code).map(<[T]>::to_vec).ok_or_else(|| {
        Error::ImpossibleContext(format!(
            "assignment {u:?} with the given prefix has probability zero"
        ))
    })
}

/// Checks a probability vector: non-negative entries summing to one within `tol`.
pub(crate) fn check_distribution<T: Prob>(what: &str, p: &[T], tol: f64) -> Result<()> {
    if p.iter().any(|v| *v < T::zero()) {
        return Err(Error::input(format!("{what} has negative entries")));
    }
    let total = p.iter().fold(T::zero(), |acc, v| acc + v.clone()).approx_f64();
    if (total - 1.0).abs() > tol {
        return Err(Error::input(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Draws an index from a discrete distribution by inversion.
pub(crate) fn draw_index<T: Prob>(rng: &mut dyn RngCore, probs: &[T]) -> usize {
    use rand::Rng;
    let mut r: f64 = rng.random();
    for (idx, p) in probs.iter().enumerate() {
        r -= p.approx_f64();
        if r < 0.0 {
            return idx;
        }
    }
    // round-off: fall back to the last index with positive mass
    probs.iter().rposition(|p| p.is_positive()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_model_conditional_is_marginal() {
        let model = ExplicitJointModel::<f64>::independent(&[vec![0.3, 0.7], vec![0.6, 0.4], vec![0.5, 0.5]])
            .unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        for u in 0..2 {
            let c = model.conditional_query(1, &[u], &k, &[]).unwrap();
            assert!((c[0] - 0.6).abs() < 1e-12 && (c[1] - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn markov_erased_sensitive_prefix_carries_no_information() {
        let model = MarkovChainModel::<f64>::binary_symmetric(3, 0.9).unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let c0 = model.conditional_query(1, &[0], &k, &[(0, None)]).unwrap();
        let c1 = model.conditional_query(1, &[1], &k, &[(0, None)]).unwrap();
        assert!((c0[0] - 0.9).abs() < 1e-12);
        assert!((c1[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn impossible_conditioning_event() {
        let model = MarkovChainModel::<f64>::binary_symmetric(3, 1.0).unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        // x_1 = 0 forces x_2 = 0 under a stay-probability-1 chain, so releasing
        // x_2 = 1 is impossible.
        let err = model
            .conditional_query(2, &[0], &k, &[(0, None), (1, Some(1))])
            .unwrap_err();
        assert!(matches!(err, Error::ImpossibleContext(_)));
    }

    #[test]
    fn conditional_rejects_processed_query() {
        let model = MarkovChainModel::<f64>::binary_symmetric(3, 0.9).unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        assert!(model.conditional_query(1, &[0], &k, &[(1, None)]).is_err());
    }
}
