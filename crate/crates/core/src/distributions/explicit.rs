use rand::RngCore;

use super::{check_distribution, draw_index, SequenceModel};
use crate::enumeration::SequenceSpace;
use crate::error::{Error, Result};
use crate::scalar::Prob;
use crate::sequence::{Alphabet, Symbol};

const SUM_TOLERANCE: f64 = 1e-12;

/// A joint distribution given as a full table over `|X|^n` sequences, indexed
/// row-major with position 1 most significant.
#[derive(Debug, Clone)]
pub struct ExplicitJointModel<T> {
    alphabet: Alphabet,
    space: SequenceSpace,
    probs: Vec<T>,
}

impl<T: Prob> ExplicitJointModel<T> {
    pub fn new(n: usize, alphabet: Alphabet, probs: Vec<T>) -> Result<Self> {
        let space = SequenceSpace::uniform(n, alphabet.size())?;
        if probs.len() != space.size() {
            return Err(Error::input(format!(
                "table needs {} entries, got {}",
                space.size(),
                probs.len()
            )));
        }
        check_distribution("joint table", &probs, SUM_TOLERANCE)?;
        Ok(ExplicitJointModel {
            alphabet,
            space,
            probs,
        })
    }

    pub fn uniform(n: usize, alphabet: Alphabet) -> Result<Self> {
        let size = SequenceSpace::uniform(n, alphabet.size())?.size();
        Self::new(n, alphabet, vec![T::one() / T::from_count(size); size])
    }

    /// Product of independent per-position marginals (all of one alphabet size).
    pub fn independent(marginals: &[Vec<T>]) -> Result<Self> {
        let a = marginals
            .first()
            .map_or(2, Vec::len);
        if marginals.iter().any(|m| m.len() != a) {
            return Err(Error::input("marginals must share one alphabet"));
        }
        for m in marginals {
            check_distribution("marginal", m, SUM_TOLERANCE)?;
        }
        let alphabet = Alphabet::new(a)?;
        let space = SequenceSpace::uniform(marginals.len(), a)?;
        let probs = (0..space.size())
            .map(|idx| {
                marginals
                    .iter()
                    .enumerate()
                    .fold(T::one(), |acc, (i, m)| acc * m[space.symbol(idx, i) as usize].clone())
            })
            .collect();
        Self::new(marginals.len(), alphabet, probs)
    }

    /// Materializes any model of uniform arity into a table.
    pub fn from_model(model: &dyn SequenceModel<T>) -> Result<Self> {
        let a = model.arity(0);
        if (0..model.len()).any(|i| model.arity(i) != a) {
            return Err(Error::input("explicit models need one alphabet for all positions"));
        }
        let table = model.joint_table()?;
        Self::new(model.len(), Alphabet::new(a)?, table.probs().to_vec())
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

impl<T: Prob> SequenceModel<T> for ExplicitJointModel<T> {
    fn len(&self) -> usize {
        self.space.len()
    }

    fn arity(&self, _i: usize) -> usize {
        self.alphabet.size()
    }

    fn joint_prob(&self, x: &[Symbol]) -> Result<T> {
        self.check_sequence(x)?;
        Ok(self.probs[self.space.index(x)].clone())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<Symbol> {
        self.space.decode(draw_index(rng, &self.probs))
    }
}
