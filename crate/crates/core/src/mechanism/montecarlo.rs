use super::EnumeratedMechanism;
use crate::distributions::SequenceModel;
use crate::error::{Error, Result};
use crate::scalar::Prob;
use crate::seeding::{par_estimate, Estimate};
use crate::sequence::{ProcessingOrder, SensitiveSet};

pub type RateEstimate = Estimate;

/// Monte-Carlo estimate of the rate: mean of `1 - e(Y)/n` over `runs`
/// sequences drawn from the model and masked independently.
pub fn achievable_rate_mc<T: Prob>(
    model: &dyn SequenceModel<T>,
    sensitive: &SensitiveSet,
    order: &ProcessingOrder,
    runs: usize,
    seed: u64,
) -> Result<RateEstimate> {
    if runs == 0 {
        return Err(Error::input("runs must be at least 1"));
    }
    let mech = EnumeratedMechanism::new(model, sensitive.clone(), order.clone())?;
    let n = model.len() as f64;
    par_estimate(runs, seed, |_, rng| {
        let x = model.sample(rng);
        let (y, _) = mech.mask(&x, rng)?;
        Ok(1.0 - y.erasures() as f64 / n)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::MarkovChainModel;
    use crate::mechanism::achievable_rate_exact;

    #[test]
    fn agrees_with_exact_rate() {
        let model = MarkovChainModel::binary_symmetric(6, 0.85).unwrap();
        let k = SensitiveSet::new(vec![0], 6).unwrap();
        let order = ProcessingOrder::linear(6);
        let exact = achievable_rate_exact(&model, &k, &order).unwrap();
        let est = achievable_rate_mc(&model, &k, &order, 20_000, 17).unwrap();
        assert!((est.mean - exact).abs() < 4.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn zero_runs_rejected() {
        let model = MarkovChainModel::binary_symmetric(2, 0.85).unwrap();
        let k = SensitiveSet::new(vec![0], 2).unwrap();
        assert!(achievable_rate_mc(&model, &k, &ProcessingOrder::linear(2), 0, 1).is_err());
    }
}
