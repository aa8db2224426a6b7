//! The sequential erasure mechanism for an arbitrary sequence model.
//!
//! Positions are processed in a fixed order. At each step the conditionals of
//! the current symbol given every sensitive assignment and the outputs so far
//! are computed by enumeration, and [`rule`] decides the release probability.
//! Erased outputs condition later steps through their erasure probability,
//! not as missing data.

mod exact;
mod montecarlo;
pub mod rule;

pub use exact::{OutputDistribution, PrivacyReport, StepView, Visit};
pub use montecarlo::{achievable_rate_mc, RateEstimate};
pub use rule::{erasure_probability, ContextTable, ReleaseTable};

use std::fmt::Write as _;

use rand::{Rng, RngCore};

use crate::distributions::SequenceModel;
use crate::enumeration::{JointTable, PrefixWeights, SensitiveCodec, SequenceSpace};
use crate::error::{Error, Result};
use crate::scalar::Prob;
use crate::sequence::{symbol_to_char, MaskedSequence, ProcessingOrder, SensitiveSet, Symbol};

/// One processed position.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    /// 0-based position.
    pub position: usize,
    /// Probability with which the observed symbol was released.
    pub release_prob: f64,
    pub outcome: Option<Symbol>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    pub warnings: Vec<String>,
}

impl Transcript {
    /// Outputs produced before step `t`, in processing order.
    pub fn context(&self, t: usize) -> Vec<(usize, Option<Symbol>)> {
        self.entries[..t]
            .iter()
            .map(|e| (e.position, e.outcome))
            .collect()
    }

    /// One JSON object per line: `{"i":…,"release_prob":…,"outcome":…}`, `i` 1-based.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let outcome = e.outcome.map_or('*', symbol_to_char).to_string();
            let line = serde_json::json!({
                "i": e.position + 1,
                "release_prob": e.release_prob,
                "outcome": outcome,
            });
            writeln!(out, "{line}").expect("write to string");
        }
        out
    }
}

/// The mechanism for a model materialized as a joint table.
#[derive(Debug, Clone)]
pub struct EnumeratedMechanism<T> {
    table: JointTable<T>,
    codec: SensitiveCodec,
    sensitive: SensitiveSet,
    order: ProcessingOrder,
}

impl<T: Prob> EnumeratedMechanism<T> {
    pub fn new(
        model: &dyn SequenceModel<T>,
        sensitive: SensitiveSet,
        order: ProcessingOrder,
    ) -> Result<Self> {
        Self::from_table(model.joint_table()?, sensitive, order)
    }

    pub fn from_table(table: JointTable<T>, sensitive: SensitiveSet, order: ProcessingOrder) -> Result<Self> {
        let n = table.space().len();
        if order.len() != n {
            return Err(Error::input(format!("order has {} positions, model has {n}", order.len())));
        }
        if sensitive.positions().iter().any(|&p| p >= n) {
            return Err(Error::input("sensitive index out of range"));
        }
        let codec = SensitiveCodec::new(&sensitive, table.space().arities());
        Ok(EnumeratedMechanism {
            table,
            codec,
            sensitive,
            order,
        })
    }

    pub fn space(&self) -> &SequenceSpace {
        self.table.space()
    }

    pub fn table(&self) -> &JointTable<T> {
        &self.table
    }

    pub fn codec(&self) -> &SensitiveCodec {
        &self.codec
    }

    pub fn sensitive(&self) -> &SensitiveSet {
        &self.sensitive
    }

    pub fn order(&self) -> &ProcessingOrder {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Runs the mechanism on `x`, one uniform draw per position.
    pub fn mask(&self, x: &[Symbol], rng: &mut dyn RngCore) -> Result<(MaskedSequence, Transcript)> {
        let space = self.space();
        if x.len() != space.len() || (0..x.len()).any(|i| x[i] as usize >= space.arity(i)) {
            return Err(Error::input("sequence does not match the model"));
        }
        let mut transcript = Transcript::default();
        if !self.table.prob(x).is_positive() {
            transcript
                .warnings
                .push("input sequence has probability zero under the model".into());
        }
        let observed = self.codec.of_sequence(x);
        let mut weights = PrefixWeights::initial(&self.table, None, &self.codec)?;
        let mut y = vec![None; x.len()];
        for &i in self.order.positions() {
            let ctx = weights.context(space, &self.codec, i, self.sensitive.contains(i));
            let release = ReleaseTable::from_context(&ctx)?;
            let r = release.release(observed, x[i]).approx_f64();
            let outcome = (rng.random::<f64>() < r).then_some(x[i]);
            y[i] = outcome;
            transcript.entries.push(TranscriptEntry {
                position: i,
                release_prob: r,
                outcome,
            });
            weights = weights.branch(space, i, outcome, &release);
        }
        Ok((MaskedSequence(y), transcript))
    }

    /// Exact joint law of `(x_K, Y)` under the mechanism's own model.
    pub fn exact_output(&self) -> Result<OutputDistribution<T>> {
        exact::output_distribution(self, None)
    }

    /// Exact joint law of `(x_K, Y)` when the data actually come from `truth`
    /// while the mechanism still uses its own model.
    pub fn exact_output_under(&self, truth: &JointTable<T>) -> Result<OutputDistribution<T>> {
        exact::output_distribution(self, Some(truth))
    }

    /// Depth-first walk over every reachable output prefix.
    pub fn walk(&self, visit: &mut dyn FnMut(Visit<'_, T>) -> Result<()>) -> Result<()> {
        exact::walk(self, None, visit)
    }
}

/// Masks `x` with the mechanism built for `model`.
pub fn mask_sequence<T: Prob>(
    model: &dyn SequenceModel<T>,
    x: &[Symbol],
    sensitive: &SensitiveSet,
    order: &ProcessingOrder,
    rng: &mut dyn RngCore,
) -> Result<(MaskedSequence, Transcript)> {
    model.check_sequence(x)?;
    EnumeratedMechanism::new(model, sensitive.clone(), order.clone())?.mask(x, rng)
}

/// `1 - E[e(Y)] / n`, computed exactly.
pub fn achievable_rate_exact<T: Prob>(
    model: &dyn SequenceModel<T>,
    sensitive: &SensitiveSet,
    order: &ProcessingOrder,
) -> Result<T> {
    let mech = EnumeratedMechanism::new(model, sensitive.clone(), order.clone())?;
    Ok(mech.exact_output()?.rate())
}

/// Maximum deviation `|p(y | x_K = u) - p(y)|` and `I(X_K; Y)`, exactly.
pub fn verify_privacy_exact<T: Prob>(
    model: &dyn SequenceModel<T>,
    sensitive: &SensitiveSet,
    order: &ProcessingOrder,
) -> Result<PrivacyReport> {
    let mech = EnumeratedMechanism::new(model, sensitive.clone(), order.clone())?;
    mech.exact_output()?.privacy_report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ExplicitJointModel, MarkovChainModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn independent(n: usize) -> ExplicitJointModel<f64> {
        let marg: Vec<Vec<f64>> = (0..n).map(|i| vec![0.2 + 0.1 * i as f64, 0.8 - 0.1 * i as f64]).collect();
        ExplicitJointModel::independent(&marg).unwrap()
    }

    #[test]
    fn independent_model_erases_only_sensitive() {
        let model = independent(4);
        let k = SensitiveSet::new(vec![0], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let x = model.sample(&mut rng);
            let (y, t) = mask_sequence(&model, &x, &k, &ProcessingOrder::linear(4), &mut rng).unwrap();
            assert_eq!(y.0[0], None);
            assert_eq!(&y.0[1..], &x[1..].iter().map(|&s| Some(s)).collect::<Vec<_>>()[..]);
            assert_eq!(t.entries[0].release_prob, 0.0);
        }
    }

    #[test]
    fn markov_release_is_absorbing() {
        let model = MarkovChainModel::binary_symmetric(6, 0.8).unwrap();
        let k = SensitiveSet::new(vec![0], 6).unwrap();
        let mech = EnumeratedMechanism::new(&model, k, ProcessingOrder::linear(6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let x = model.sample(&mut rng);
            let (y, t) = mech.mask(&x, &mut rng).unwrap();
            for i in 2..6 {
                if y.0[i - 1].is_some() {
                    assert!(y.0[i].is_some());
                    assert!((t.entries[i].release_prob - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn markov_erasure_probability_example() {
        // stay 0.9, K = {1}: after y_1 = *, x_1 = 0 and x_2 = 0 give 1 - 0.1/0.9
        let model = MarkovChainModel::binary_symmetric(3, 0.9).unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let mech = EnumeratedMechanism::new(&model, k, ProcessingOrder::linear(3)).unwrap();
        let (_, t) = mech.mask(&[0, 0, 0], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((t.entries[1].release_prob - 0.1 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_input_is_flagged() {
        let model = MarkovChainModel::binary_symmetric(3, 1.0).unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let (y, t) = mask_sequence(&model, &[0, 1, 0], &k, &ProcessingOrder::linear(3), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert_eq!(t.warnings.len(), 1);
        assert!(y.is_faithful_to(&[0, 1, 0]));
    }

    #[test]
    fn transcript_json_lines() {
        let t = Transcript {
            entries: vec![
                TranscriptEntry { position: 0, release_prob: 0.0, outcome: None },
                TranscriptEntry { position: 1, release_prob: 1.0, outcome: Some(1) },
            ],
            warnings: vec![],
        };
        let lines: Vec<serde_json::Value> = t
            .to_json_lines()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[0]["i"], 1);
        assert_eq!(lines[0]["outcome"], "*");
        assert_eq!(lines[1]["outcome"], "1");
        assert_eq!(lines[1]["release_prob"], 1.0);
    }
}
