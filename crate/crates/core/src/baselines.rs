//! The window-erasure baseline and the model-mismatch experiment.
//!
//! The baseline erases a fixed block of positions and releases the rest.
//! Its leakage `I(X_K; X_released) / H(X_K)` is computed exactly by
//! enumeration, or estimated on long HMM sequences as the mean of
//! `D(p(x_K | x_released) || p(x_K))` over samples, with exact posteriors.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distributions::{HmmModel, SequenceModel};
use crate::enumeration::SensitiveCodec;
use crate::error::{Error, Result};
use crate::information::{entropy, kl_divergence, mutual_information};
use crate::mechanism::EnumeratedMechanism;
use crate::seeding::{par_estimate, par_map, Estimate};
use crate::sequence::{MaskedSequence, ProcessingOrder, SensitiveSet, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// Erase positions `0..omega`.
    Prefix,
    /// Erase every position within distance `omega` of a sensitive index.
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowPolicy {
    pub mode: WindowMode,
    pub omega: usize,
}

impl WindowPolicy {
    pub fn prefix(omega: usize) -> Self {
        WindowPolicy {
            mode: WindowMode::Prefix,
            omega,
        }
    }

    pub fn radius(omega: usize) -> Self {
        WindowPolicy {
            mode: WindowMode::Radius,
            omega,
        }
    }

    /// `erased[i]` for a sequence of length `n`.
    pub fn erased(&self, n: usize, k: &SensitiveSet) -> Result<Vec<bool>> {
        if self.omega > n {
            return Err(Error::input(format!("window {} longer than sequence {n}", self.omega)));
        }
        Ok(match self.mode {
            WindowMode::Prefix => (0..n).map(|i| i < self.omega).collect(),
            WindowMode::Radius => (0..n)
                .map(|i| k.positions().iter().any(|&p| p.abs_diff(i) <= self.omega))
                .collect(),
        })
    }
}

pub fn window_mask(x: &[Symbol], policy: &WindowPolicy, k: &SensitiveSet) -> Result<MaskedSequence> {
    let erased = policy.erased(x.len(), k)?;
    Ok(MaskedSequence(
        x.iter()
            .zip(&erased)
            .map(|(&s, &e)| (!e).then_some(s))
            .collect(),
    ))
}

/// `I(X_K; X_released) / H(X_K)` by enumeration.
pub fn window_leakage_exact(
    model: &dyn SequenceModel<f64>,
    k: &SensitiveSet,
    policy: &WindowPolicy,
) -> Result<f64> {
    let table = model.joint_table()?;
    let space = table.space();
    let erased = policy.erased(space.len(), k)?;
    let codec = SensitiveCodec::new(k, space.arities());
    let prior = table.sensitive_marginal(&codec);
    let h = entropy(&prior)?;
    if h <= 0.0 {
        return Err(Error::DegenerateSensitive);
    }
    let mut joint: BTreeMap<Vec<Symbol>, Vec<f64>> = BTreeMap::new();
    for (idx, &p) in table.probs().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let released: Vec<Symbol> = (0..space.len())
            .filter(|&i| !erased[i])
            .map(|i| space.symbol(idx, i))
            .collect();
        joint.entry(released).or_insert_with(|| vec![0.0; codec.count()])[table.sensitive_code(&codec, idx)] += p;
    }
    let rows: Vec<Vec<f64>> = joint.into_values().collect();
    Ok((mutual_information(&rows)? / h).max(0.0))
}

/// Scaled forward pass with per-position emission weights; returns `ln` of the total.
fn constrained_log_likelihood(hmm: &HmmModel<f64>, weight: impl Fn(usize, usize) -> f64) -> f64 {
    let m = hmm.m();
    let mut alpha: Vec<f64> = (0..m).map(|s| hmm.initial_prob() * weight(0, s)).collect();
    let mut next = vec![0.0; m];
    let mut log_scale = 0.0;
    for i in 0..hmm.n() {
        if i > 0 {
            hmm.propagate_forward(&alpha, &mut next);
            for (s, v) in next.iter_mut().enumerate() {
                *v *= weight(i, s);
            }
            std::mem::swap(&mut alpha, &mut next);
        }
        let c: f64 = alpha.iter().sum();
        if c <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log_scale += c.ln();
        alpha.iter_mut().for_each(|a| *a /= c);
    }
    log_scale
}

/// `p(x_K = u | released coordinates of x)` for every `u`.
pub fn sensitive_posterior(
    hmm: &HmmModel<f64>,
    k: &SensitiveSet,
    x: &[Symbol],
    erased: &[bool],
) -> Result<Vec<f64>> {
    let codec = SensitiveCodec::new(k, &hmm.arities());
    let logs: Vec<f64> = (0..codec.count())
        .map(|u| {
            let vals = codec.decode(u);
            constrained_log_likelihood(hmm, |i, s| {
                let forced = k.rank(i).map(|j| vals[j]);
                match (forced, erased[i]) {
                    (Some(a), true) => hmm.emission(i, s, a),
                    (Some(a), false) if a != x[i] => 0.0,
                    (_, false) => hmm.emission(i, s, x[i]),
                    (None, true) => 1.0,
                }
            })
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::ImpossibleContext("released symbols have probability zero".into()));
    }
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// `p(x_K)` and its entropy in bits.
fn sensitive_prior(hmm: &HmmModel<f64>, k: &SensitiveSet) -> Result<(Vec<f64>, f64)> {
    let mech = crate::hmm_mechanism::HmmMechanism::new(hmm, k.clone())?;
    let prior = mech.sensitive_prior().to_vec();
    let h = entropy(&prior)?;
    if h <= 0.0 {
        return Err(Error::DegenerateSensitive);
    }
    Ok((prior, h))
}

/// `D(posterior || prior)` in bits. Averaged over samples this estimates
/// `I(X_K; X_released)` with much lower variance than `-log p(x_K | released)`.
fn information_gain(post: &[f64], prior: &[f64]) -> f64 {
    post.iter()
        .zip(prior)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q).log2())
        .sum::<f64>()
        .max(0.0)
}

/// Monte-Carlo normalized leakage of one window on an HMM.
pub fn window_leakage_mc(
    hmm: &HmmModel<f64>,
    k: &SensitiveSet,
    policy: &WindowPolicy,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::input("at least one sample is required"));
    }
    let (prior, h) = sensitive_prior(hmm, k)?;
    let erased = policy.erased(hmm.n(), k)?;
    if k.positions().iter().all(|&p| !erased[p]) {
        return Ok(Estimate {
            mean: 1.0,
            stderr: 0.0,
            runs: samples,
        });
    }
    let est = par_estimate(samples, seed, |_, rng| {
        let x = hmm.sample(rng);
        let post = sensitive_posterior(hmm, k, &x, &erased)?;
        Ok(information_gain(&post, &prior))
    })?;
    Ok(Estimate {
        mean: est.mean / h,
        stderr: est.stderr / h,
        runs: samples,
    })
}

/// Normalized leakage of every prefix window `omega in omegas` for `K = {1}`,
/// sharing one backward pass per sample across all windows.
pub fn prefix_window_sweep_mc(
    hmm: &HmmModel<f64>,
    omegas: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    let (n, m) = (hmm.n(), hmm.m());
    let arity = hmm.alphabet().size();
    if samples == 0 {
        return Err(Error::input("at least one sample is required"));
    }
    if let Some(&w) = omegas.iter().find(|&&w| w > n) {
        return Err(Error::input(format!("window {w} longer than sequence {n}")));
    }
    let k = SensitiveSet::new(vec![0], n)?;
    let (prior, h) = sensitive_prior(hmm, &k)?;
    // forward[w - 1][a][s] = p(x_0 = a, s_{w-1} = s), normalized per (w, a) with log scale
    let mut forward = vec![vec![0.0; arity * m]; n];
    let mut forward_log = vec![vec![0.0; arity]; n];
    for a in 0..arity {
        let mut alpha: Vec<f64> = (0..m).map(|s| hmm.initial_prob() * hmm.emission(0, s, a as Symbol)).collect();
        let mut log_scale = 0.0;
        let mut next = vec![0.0; m];
        for j in 0..n {
            if j > 0 {
                hmm.propagate_forward(&alpha, &mut next);
                std::mem::swap(&mut alpha, &mut next);
            }
            let c: f64 = alpha.iter().sum();
            log_scale += c.ln();
            if c > 0.0 {
                alpha.iter_mut().for_each(|v| *v /= c);
            }
            forward[j][a * m..(a + 1) * m].copy_from_slice(&alpha);
            forward_log[j][a] = log_scale;
        }
    }
    let per_sample = par_map(samples, seed, |_, rng| {
        let x = hmm.sample(rng);
        // beta[j][s] ∝ p(x_{j+1..n} | s_j = s); the scale is common to every x_0
        let mut beta = vec![vec![1.0; m]; n];
        let mut tmp = vec![0.0; m];
        for j in (0..n - 1).rev() {
            for s in 0..m {
                tmp[s] = beta[j + 1][s] * hmm.emission(j + 1, s, x[j + 1]);
            }
            hmm.propagate_backward(&tmp, &mut beta[j]);
            let c: f64 = beta[j].iter().sum();
            beta[j].iter_mut().for_each(|v| *v /= c);
        }
        Ok(omegas
            .iter()
            .map(|&w| {
                if w == 0 {
                    return h;
                }
                let logs: Vec<f64> = (0..arity)
                    .map(|a| {
                        let f = &forward[w - 1][a * m..(a + 1) * m];
                        let dot: f64 = f.iter().zip(&beta[w - 1]).map(|(p, q)| p * q).sum();
                        forward_log[w - 1][a] + dot.ln()
                    })
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logs.iter().map(|l| (l - top).exp()).sum();
                let post: Vec<f64> = logs.iter().map(|l| (l - top).exp() / z).collect();
                information_gain(&post, &prior)
            })
            .collect::<Vec<f64>>())
    })?;
    Ok((0..omegas.len())
        .map(|w| {
            let column: Vec<f64> = per_sample.iter().map(|v| v[w]).collect();
            let est = Estimate::from_samples(&column);
            Estimate {
                mean: est.mean / h,
                stderr: est.stderr / h,
                runs: samples,
            }
        })
        .collect())
}

/// A data model and the (possibly wrong) model the mechanism is built from.
pub struct MismatchPair<'a> {
    pub truth: &'a dyn SequenceModel<f64>,
    pub belief: &'a dyn SequenceModel<f64>,
}

impl<'a> MismatchPair<'a> {
    pub fn new(truth: &'a dyn SequenceModel<f64>, belief: &'a dyn SequenceModel<f64>) -> Result<Self> {
        if truth.arities() != belief.arities() {
            return Err(Error::input("models differ in length or alphabet"));
        }
        Ok(MismatchPair { truth, belief })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessReport {
    /// `I(X_K; Y)` in bits when data follow the true model.
    pub leakage_bits: f64,
    /// `D(p || q)` over whole sequences, in bits; infinite on a support violation.
    pub kl_bound_bits: f64,
    /// `I(X_K; Y)` measured under the belief model itself.
    pub belief_leakage_bits: f64,
}

/// Builds the mechanism from `pair.belief` and measures it under `pair.truth`.
pub fn robustness_experiment(
    pair: &MismatchPair<'_>,
    k: &SensitiveSet,
    order: &ProcessingOrder,
) -> Result<RobustnessReport> {
    let p = pair.truth.joint_table()?;
    let q = pair.belief.joint_table()?;
    let mech = EnumeratedMechanism::from_table(q.clone(), k.clone(), order.clone())?;
    let leakage_bits = mech.exact_output_under(&p)?.mutual_information()?.max(0.0);
    let belief_leakage_bits = mech.exact_output()?.mutual_information()?.max(0.0);
    let kl_bound_bits = kl_divergence(p.probs(), q.probs())?;
    Ok(RobustnessReport {
        leakage_bits,
        kl_bound_bits,
        belief_leakage_bits,
    })
}

/// `D(p || q)` between two HMMs by sampling from `p`, in bits.
pub fn hmm_kl_mc(p: &HmmModel<f64>, q: &HmmModel<f64>, samples: usize, seed: u64) -> Result<Estimate> {
    if p.arities() != q.arities() {
        return Err(Error::input("models differ in length or alphabet"));
    }
    par_estimate(samples, seed, |_, rng| {
        let x = p.sample(rng);
        let lq = q.log_joint_prob(&x)?;
        if lq == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok((p.log_joint_prob(&x)? - lq) / std::f64::consts::LN_2)
    })
}
