//! Converse bound on the rate, the condition under which the mechanism meets
//! it, and the optimal mechanism by linear programming on tiny instances.

mod lp;
pub mod simplex;

pub use lp::{lp_optimal_rate, LpEntry, LpSolution, LpStatus};

use crate::distributions::{MarkovChainModel, SequenceModel};
use crate::enumeration::{JointTable, SensitiveCodec};
use crate::error::{Error, Result};
use crate::mechanism::{ContextTable, EnumeratedMechanism, Visit};
use crate::scalar::{Prob, Real};
use crate::sequence::{ProcessingOrder, SensitiveSet};

/// `p(x_i | x_K = u)` with nothing released, for every position.
pub fn prior_contexts<T: Prob>(table: &JointTable<T>, k: &SensitiveSet) -> Vec<ContextTable<T>> {
    let space = table.space();
    let codec = SensitiveCodec::new(k, space.arities());
    (0..space.len())
        .map(|i| {
            ContextTable::from_masses(
                codec.count(),
                space.arity(i),
                table.pair_marginal(&codec, i),
                k.contains(i),
            )
        })
        .collect()
}

/// `(1/n) sum_i sum_a min_u p(x_i = a | x_K = u)`.
pub fn upper_bound_rate<T: Prob>(model: &dyn SequenceModel<T>, k: &SensitiveSet) -> Result<T> {
    upper_bound_from_table(&model.joint_table()?, k)
}

pub fn upper_bound_from_table<T: Prob>(table: &JointTable<T>, k: &SensitiveSet) -> Result<T> {
    let n = table.space().len();
    if k.positions().iter().any(|&p| p >= n) {
        return Err(Error::input("sensitive index out of range"));
    }
    let total = prior_contexts(table, k)
        .iter()
        .fold(T::zero(), |acc, c| acc + c.release_mass());
    Ok(total / T::from_count(n))
}

/// Upper bound for an HMM without enumerating sequences.
pub fn hmm_upper_bound<T: Real>(hmm: &crate::distributions::HmmModel<T>, k: &SensitiveSet) -> Result<T> {
    crate::hmm_mechanism::hmm_upper_bound_rate(hmm, k)
}

/// Checks, on every reachable output prefix, that each assignment minimizing
/// `p(x_i = a | x_K = u)` still minimizes `p(x_i = a | x_K = u, y_prefix)`.
/// When this holds the mechanism attains [`upper_bound_rate`].
pub fn minimizer_stability_check<T: Prob>(mech: &EnumeratedMechanism<T>) -> Result<bool> {
    let priors = prior_contexts(mech.table(), mech.sensitive());
    let tol = T::roundoff();
    let mut stable = true;
    mech.walk(&mut |v| {
        let Visit::Step(step) = v else { return Ok(()) };
        let i = step.position;
        let (prior, ctx) = (&priors[i], step.context);
        if !stable || ctx.is_sensitive() {
            return Ok(());
        }
        for a in 0..ctx.arity() {
            let a = a as u8;
            let prior_min = prior.min_conditional(a);
            let ctx_min = ctx.min_conditional(a);
            for u in (0..ctx.u_count()).filter(|&u| prior.is_active(u) && ctx.is_active(u)) {
                let minimizer = prior.conditional(u, a) <= prior_min.clone() + tol.clone();
                if minimizer && ctx.conditional(u, a) > ctx_min.clone() + tol.clone() {
                    stable = false;
                }
            }
        }
        Ok(())
    })?;
    Ok(stable)
}

/// The minimizer-stability condition for a Markov chain with `K = {1}`.
pub fn markov_sufficient_condition_check<T: Prob>(chain: &MarkovChainModel<T>) -> Result<bool> {
    let n = chain.len();
    let mech = EnumeratedMechanism::new(chain, SensitiveSet::new(vec![0], n)?, ProcessingOrder::linear(n))?;
    minimizer_stability_check(&mech)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ExplicitJointModel;
    use crate::mechanism::achievable_rate_exact;
    use crate::sequence::Alphabet;
    use crate::Exact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn independent_model_bound() {
        let model = ExplicitJointModel::<f64>::independent(&vec![vec![0.3, 0.7]; 5]).unwrap();
        let k = SensitiveSet::new(vec![0], 5).unwrap();
        assert!((upper_bound_rate(&model, &k).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn markov_bound_is_attained_exactly() {
        let chain = MarkovChainModel::<Exact>::binary_symmetric(3, Exact::new(9, 10)).unwrap();
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let bound = upper_bound_rate(&chain, &k).unwrap();
        // position 2: 2 * 0.1, position 3: 2 * min(0.82, 0.18)
        assert_eq!(bound, Exact::new(2, 10 * 3) + Exact::new(36, 100 * 3));
        let rate = achievable_rate_exact(&chain, &k, &ProcessingOrder::linear(3)).unwrap();
        assert_eq!(rate, bound);
        assert!(markov_sufficient_condition_check(&chain).unwrap());
    }

    #[test]
    fn deterministic_chain_satisfies_condition() {
        let chain = MarkovChainModel::<f64>::binary_symmetric(5, 1.0).unwrap();
        assert!(markov_sufficient_condition_check(&chain).unwrap());
        let k = SensitiveSet::new(vec![0], 5).unwrap();
        assert_eq!(upper_bound_rate(&chain, &k).unwrap(), 0.0);
    }

    #[test]
    fn hmm_route_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let panel = crate::HmmModel::<f64>::random_panel(3, 6, Alphabet::BINARY, &mut rng);
        let hmm = crate::HmmModel::new(panel, Alphabet::BINARY, 0.2, 0.05).unwrap();
        for ks in [vec![0], vec![2], vec![1, 4]] {
            let k = SensitiveSet::new(ks, 6).unwrap();
            let a: f64 = upper_bound_rate(&hmm, &k).unwrap();
            let b = hmm_upper_bound(&hmm, &k).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn random_table(rng: &mut ChaCha8Rng) -> ExplicitJointModel<f64> {
        let w: Vec<f64> = (0..8).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = w.iter().sum();
        let probs = w.iter().map(|v| v / s).collect();
        ExplicitJointModel::new(3, Alphabet::BINARY, probs).unwrap()
    }

    #[test]
    fn minimizer_flip_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let order = ProcessingOrder::linear(3);
        let mut found = None;
        for _ in 0..500 {
            let model = random_table(&mut rng);
            let mech = EnumeratedMechanism::new(&model, k.clone(), order.clone()).unwrap();
            if !minimizer_stability_check(&mech).unwrap() {
                found = Some(model);
                break;
            }
        }
        let model = found.expect("a counterexample among random tables");
        let bound = upper_bound_rate(&model, &k).unwrap();
        let rate = achievable_rate_exact(&model, &k, &order).unwrap();
        assert!(rate <= bound + 1e-12);
    }

    #[test]
    fn stable_minimizers_give_tightness_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let order = ProcessingOrder::linear(3);
        for _ in 0..200 {
            let model = random_table(&mut rng);
            let mech = EnumeratedMechanism::new(&model, k.clone(), order.clone()).unwrap();
            let bound = upper_bound_rate(&model, &k).unwrap();
            let rate = mech.exact_output().unwrap().rate();
            assert!(rate <= bound + 1e-12);
            if minimizer_stability_check(&mech).unwrap() {
                assert!((bound - rate).abs() < 1e-12);
            }
        }
    }
}
