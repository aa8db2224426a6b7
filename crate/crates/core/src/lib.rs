//! Privacy-preserving release of sequences by sequential erasure.
//!
//! The mechanism processes positions one at a time and erases a symbol with
//! exactly the probability needed to make the output independent of the
//! values at a set of sensitive positions.

pub mod baselines;
pub mod bounds;
pub mod distributions;
pub mod enumeration;
pub mod error;
pub mod experiments;
pub mod hmm_mechanism;
pub mod information;
pub mod mechanism;
pub mod ordering;
pub mod scalar;
pub mod seeding;
pub mod sequence;

pub use distributions::{ExplicitJointModel, HmmModel, MarkovChainModel, SequenceModel};
pub use error::{Error, Result};
pub use mechanism::{EnumeratedMechanism, Transcript};
pub use scalar::{Prob, Real};
pub use sequence::{Alphabet, MaskedSequence, ProcessingOrder, SensitiveSet, Symbol};

/// Exact rational probabilities.
pub type Exact = num_rational::Ratio<i64>;
pub type ExplicitModel = ExplicitJointModel<f64>;
pub type MarkovModel = MarkovChainModel<f64>;
pub type Hmm = HmmModel<f64>;
pub type Mechanism = EnumeratedMechanism<f64>;
