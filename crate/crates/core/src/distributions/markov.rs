use rand::RngCore;

use super::{check_distribution, draw_index, SequenceModel};
use crate::error::{Error, Result};
use crate::scalar::Prob;
use crate::sequence::{Alphabet, Symbol};

const SUM_TOLERANCE: f64 = 1e-12;

/// Homogeneous first-order Markov chain over a fixed alphabet.
#[derive(Debug, Clone)]
pub struct MarkovChainModel<T> {
    n: usize,
    alphabet: Alphabet,
    initial: Vec<T>,
    /// Row-major `|X| x |X|`, row = previous symbol.
    transition: Vec<T>,
}

impl<T: Prob> MarkovChainModel<T> {
    pub fn new(n: usize, alphabet: Alphabet, initial: Vec<T>, transition: Vec<T>) -> Result<Self> {
        let a = alphabet.size();
        if n == 0 {
            return Err(Error::input("sequence length must be positive"));
        }
        if initial.len() != a || transition.len() != a * a {
            return Err(Error::input("initial/transition dimensions do not match alphabet"));
        }
        check_distribution("initial distribution", &initial, SUM_TOLERANCE)?;
        for row in transition.chunks(a) {
            check_distribution("transition row", row, SUM_TOLERANCE)?;
        }
        Ok(MarkovChainModel {
            n,
            alphabet,
            initial,
            transition,
        })
    }

    /// Binary chain with uniform start that keeps its symbol with probability `stay`.
    pub fn binary_symmetric(n: usize, stay: T) -> Result<Self> {
        let half = T::one() / T::from_count(2);
        let flip = T::one() - stay.clone();
        Self::new(
            n,
            Alphabet::BINARY,
            vec![half.clone(), half],
            vec![stay.clone(), flip.clone(), flip, stay],
        )
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    pub fn transition(&self, from: Symbol, to: Symbol) -> T {
        self.transition[from as usize * self.alphabet.size() + to as usize].clone()
    }

    fn row(&self, from: Symbol) -> &[T] {
        let a = self.alphabet.size();
        &self.transition[from as usize * a..(from as usize + 1) * a]
    }
}

impl<T: Prob> SequenceModel<T> for MarkovChainModel<T> {
    fn len(&self) -> usize {
        self.n
    }

    fn arity(&self, _i: usize) -> usize {
        self.alphabet.size()
    }

    fn joint_prob(&self, x: &[Symbol]) -> Result<T> {
        self.check_sequence(x)?;
        let start = self.initial[x[0] as usize].clone();
        Ok(x.windows(2)
            .fold(start, |acc, w| acc * self.transition(w[0], w[1])))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<Symbol> {
        let mut x = Vec::with_capacity(self.n);
        x.push(draw_index(rng, &self.initial) as Symbol);
        for _ in 1..self.n {
            let prev = *x.last().unwrap();
            x.push(draw_index(rng, self.row(prev)) as Symbol);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_product_of_chain_factors() {
        let m = MarkovChainModel::<f64>::binary_symmetric(3, 0.9).unwrap();
        assert!((m.joint_prob(&[0, 0, 0]).unwrap() - 0.405).abs() < 1e-15);
        assert!((m.joint_prob(&[0, 1, 1]).unwrap() - 0.5 * 0.1 * 0.9).abs() < 1e-15);
        let total: f64 = m.joint_table().unwrap().probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stay_one_gives_constant_sequences() {
        let m = MarkovChainModel::binary_symmetric(6, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = m.sample(&mut rng);
            assert!(x.iter().all(|&s| s == x[0]));
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let r = MarkovChainModel::new(2, Alphabet::BINARY, vec![0.5, 0.5], vec![0.9, 0.2, 0.5, 0.5]);
        assert!(matches!(r, Err(Error::Input(_))));
    }
}
