//! The erasure mechanism for the Li–Stephens HMM in `O(|X|^|K| n m^2)` time.
//!
//! Two belief tables replace enumeration over sequences:
//!
//! * `gamma[i][u][s] = p(x_{K ∩ [i, n)} = u | s_i = s)`, computed once by a
//!   backward pass over the hidden chain;
//! * `psi[u][s] = p(s_i = s | x_K = u, y_0..y_i)`, updated after every output.
//!
//! From these the conditionals `p(x_i | x_K = u, y_prefix)` follow by one
//! O(m^2) propagation per assignment, and the release rule is the same one
//! the enumerated mechanism uses.

use rand::{Rng, RngCore};

use crate::distributions::{HmmModel, SequenceModel};
use crate::enumeration::SensitiveCodec;
use crate::error::{Error, Result};
use crate::mechanism::{ContextTable, OutputDistribution, ReleaseTable, Transcript, TranscriptEntry};
use crate::scalar::{Prob, Real};
use crate::seeding::{par_estimate, Estimate};
use crate::sequence::{MaskedSequence, SensitiveSet, Symbol};

/// Largest sensitive set the HMM mechanism accepts.
pub const MAX_SENSITIVE: usize = 12;
/// Cap on the entries of one gamma table.
pub const GAMMA_BUDGET: usize = 1 << 25;
const EXACT_NODE_BUDGET: usize = 1 << 22;
const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Backward likelihoods of the sensitive values.
///
/// Rows past the last sensitive position are identically one and are not
/// stored unless the table is built with `full`.
#[derive(Debug, Clone)]
pub struct GammaTable<T> {
    n: usize,
    m: usize,
    u_count: usize,
    stored: usize,
    gamma: Vec<T>,
    z: Vec<T>,
}

impl<T: Real> GammaTable<T> {
    #[inline]
    fn at(&self, i: usize, u: usize) -> usize {
        (i * self.u_count + u) * self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn u_count(&self) -> usize {
        self.u_count
    }

    /// Number of leading positions held explicitly.
    pub fn stored_rows(&self) -> usize {
        self.stored
    }

    /// `gamma[i][u][.]`, or `None` where it is identically one.
    pub fn row(&self, i: usize, u: usize) -> Option<&[T]> {
        (i < self.stored).then(|| &self.gamma[self.at(i, u)..self.at(i, u) + self.m])
    }

    /// `Z[i][u][s] = sum_s' P(s, s') gamma[i][u][s']`, or `None` where it is one.
    pub fn z_row(&self, i: usize, u: usize) -> Option<&[T]> {
        (i < self.stored).then(|| &self.z[self.at(i, u)..self.at(i, u) + self.m])
    }

    pub fn gamma(&self, i: usize, u: usize, s: usize) -> T {
        self.row(i, u).map_or_else(T::one, |r| r[s])
    }
}

struct Layout {
    codec: SensitiveCodec,
    /// `values[u * |K| + j]`: symbol of assignment `u` at the `j`-th sensitive position.
    values: Vec<Symbol>,
    rank: Vec<Option<usize>>,
}

impl Layout {
    fn new<T: Real>(hmm: &HmmModel<T>, k: &SensitiveSet) -> Result<Self> {
        let n = hmm.n();
        if let Some(&p) = k.positions().iter().find(|&&p| p >= n) {
            return Err(Error::input(format!("sensitive index {} outside 1..={n}", p + 1)));
        }
        let codec = SensitiveCodec::new(k, &hmm.arities());
        let values = (0..codec.count()).flat_map(|u| codec.decode(u)).collect();
        let rank = (0..n).map(|i| k.rank(i)).collect();
        Ok(Layout { codec, values, rank })
    }

    #[inline]
    fn value(&self, u: usize, i: usize) -> Option<Symbol> {
        let width = self.codec.positions().len();
        self.rank[i].map(|j| self.values[u * width + j])
    }
}

fn build_gamma<T: Real>(hmm: &HmmModel<T>, layout: &Layout, full: bool) -> Result<GammaTable<T>> {
    let n = hmm.n();
    let m = hmm.m();
    let u_count = layout.codec.count();
    let stored = if full {
        n
    } else {
        layout.codec.positions().last().map_or(0, |&p| p + 1)
    };
    let needed = stored * u_count * m;
    if needed > GAMMA_BUDGET {
        return Err(Error::capacity("gamma table entries", needed as f64, GAMMA_BUDGET as f64));
    }
    let mut table = GammaTable {
        n,
        m,
        u_count,
        stored,
        gamma: vec![T::one(); needed],
        z: vec![T::one(); needed],
    };
    let mut next = vec![T::zero(); m];
    for i in (0..stored).rev() {
        for u in 0..u_count {
            let at = table.at(i, u);
            if i + 1 < stored {
                let after = table.at(i + 1, u);
                next.copy_from_slice(&table.gamma[after..after + m]);
                hmm.propagate_backward(&next, &mut table.gamma[at..at + m]);
            }
            if let Some(a) = layout.value(u, i) {
                for s in 0..m {
                    table.gamma[at + s] = table.gamma[at + s] * hmm.emission(i, s, a);
                }
            }
            next.copy_from_slice(&table.gamma[at..at + m]);
            hmm.propagate_backward(&next, &mut table.z[at..at + m]);
        }
    }
    Ok(table)
}

/// Backward pass for `gamma`, stopping at the last sensitive position.
pub fn backward_gamma<T: Real>(hmm: &HmmModel<T>, k: &SensitiveSet) -> Result<GammaTable<T>> {
    build_gamma(hmm, &Layout::new(hmm, k)?, false)
}

/// As [`backward_gamma`] but materializing every row.
pub fn backward_gamma_full<T: Real>(hmm: &HmmModel<T>, k: &SensitiveSet) -> Result<GammaTable<T>> {
    build_gamma(hmm, &Layout::new(hmm, k)?, true)
}

/// `p(s_i | s_{i-1}, x_K = u)` as a row-major `m x m` kernel, for `i >= 1`.
pub fn transition_given_sensitive<T: Real>(
    hmm: &HmmModel<T>,
    gamma: &GammaTable<T>,
    i: usize,
    u: usize,
) -> Result<Vec<T>> {
    if i == 0 || i >= hmm.n() {
        return Err(Error::input(format!("transition index {i} outside 1..{}", hmm.n())));
    }
    let m = hmm.m();
    let mut kernel = vec![T::zero(); m * m];
    for from in 0..m {
        let row = &mut kernel[from * m..(from + 1) * m];
        let mut total = T::zero();
        for (to, v) in row.iter_mut().enumerate() {
            *v = hmm.transition(from, to) * gamma.gamma(i, u, to);
            total = total + *v;
        }
        if total <= T::zero() {
            return Err(Error::ImpossibleContext(format!(
                "assignment {u} unreachable from state {from} at position {}",
                i + 1
            )));
        }
        row.iter_mut().for_each(|v| *v = *v / total);
    }
    Ok(kernel)
}

/// The mechanism for one HMM and sensitive set; shareable across sessions.
pub struct HmmMechanism<'a, T> {
    hmm: &'a HmmModel<T>,
    sensitive: SensitiveSet,
    layout: Layout,
    gamma: GammaTable<T>,
    prior: Vec<T>,
}

impl<'a, T: Real> HmmMechanism<'a, T> {
    pub fn new(hmm: &'a HmmModel<T>, sensitive: SensitiveSet) -> Result<Self> {
        Self::build(hmm, sensitive, false)
    }

    /// Keeps explicit gamma rows past the last sensitive position.
    pub fn without_shortcut(hmm: &'a HmmModel<T>, sensitive: SensitiveSet) -> Result<Self> {
        Self::build(hmm, sensitive, true)
    }

    fn build(hmm: &'a HmmModel<T>, sensitive: SensitiveSet, full: bool) -> Result<Self> {
        if sensitive.len() > MAX_SENSITIVE {
            return Err(Error::capacity(
                "sensitive positions",
                sensitive.len() as f64,
                MAX_SENSITIVE as f64,
            ));
        }
        let layout = Layout::new(hmm, &sensitive)?;
        let gamma = build_gamma(hmm, &layout, full)?;
        let init = hmm.initial_prob();
        let prior = (0..layout.codec.count())
            .map(|u| (0..hmm.m()).fold(T::zero(), |acc, s| acc + init * gamma.gamma(0, u, s)))
            .collect();
        Ok(HmmMechanism {
            hmm,
            sensitive,
            layout,
            gamma,
            prior,
        })
    }

    pub fn hmm(&self) -> &HmmModel<T> {
        self.hmm
    }

    pub fn sensitive(&self) -> &SensitiveSet {
        &self.sensitive
    }

    pub fn codec(&self) -> &SensitiveCodec {
        &self.layout.codec
    }

    pub fn gamma(&self) -> &GammaTable<T> {
        &self.gamma
    }

    /// `p(x_K = u)` for every assignment.
    pub fn sensitive_prior(&self) -> &[T] {
        &self.prior
    }

    pub fn session(&self) -> HmmMaskingSession<'_, 'a, T> {
        let u_count = self.layout.codec.count();
        HmmMaskingSession {
            mech: self,
            position: 0,
            psi: vec![T::zero(); u_count * self.hmm.m()],
            active: self.prior.iter().map(Prob::is_positive).collect(),
            pred: None,
            output: Vec::with_capacity(self.hmm.n()),
        }
    }

    /// Masks `x`, one uniform draw per position.
    pub fn mask(&self, x: &[Symbol], rng: &mut dyn RngCore) -> Result<(MaskedSequence, Transcript)> {
        self.hmm.check_sequence(x)?;
        let mut transcript = Transcript::default();
        if self.hmm.log_joint_prob(x)? == T::neg_infinity() {
            transcript
                .warnings
                .push("input sequence has probability zero under the model".into());
        }
        let observed = self.layout.codec.of_sequence(x);
        let mut session = self.session();
        for (i, &xi) in x.iter().enumerate() {
            let (outcome, r) = session.step(xi, observed, rng)?;
            transcript.entries.push(TranscriptEntry {
                position: i,
                release_prob: r,
                outcome,
            });
        }
        Ok((MaskedSequence(session.output), transcript))
    }

    /// `p(x_i | x_K = u)` for every position, with no outputs conditioned on.
    pub fn prior_contexts(&self) -> Result<Vec<ContextTable<T>>> {
        let hmm = self.hmm;
        let (n, m) = (hmm.n(), hmm.m());
        let arity = hmm.alphabet().size();
        let u_count = self.layout.codec.count();
        let active: Vec<bool> = self.prior.iter().map(Prob::is_positive).collect();
        // forward[u][s] = p(x_{K ∩ [0, i)} = u, s_i = s)
        let mut forward = vec![hmm.initial_prob(); u_count * m];
        let mut scratch = vec![T::zero(); m];
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut cond = vec![T::zero(); u_count * arity];
            for u in (0..u_count).filter(|&u| active[u]) {
                let f = &forward[u * m..(u + 1) * m];
                let row = &mut cond[u * arity..(u + 1) * arity];
                match self.layout.value(u, i) {
                    Some(a) => row[a as usize] = T::one(),
                    None => {
                        for s in 0..m {
                            let w = f[s] * self.gamma.gamma(i, u, s);
                            for (a, c) in row.iter_mut().enumerate() {
                                *c = *c + w * hmm.emission(i, s, a as Symbol);
                            }
                        }
                        let total = row.iter().fold(T::zero(), |acc, &v| acc + v);
                        row.iter_mut().for_each(|v| *v = *v / total);
                    }
                }
            }
            out.push(ContextTable::from_conditionals(
                u_count,
                arity,
                cond,
                active.clone(),
                self.sensitive.contains(i),
            )?);
            if i + 1 < n {
                for u in 0..u_count {
                    let f = &mut forward[u * m..(u + 1) * m];
                    if let Some(a) = self.layout.value(u, i) {
                        for (s, v) in f.iter_mut().enumerate() {
                            *v = *v * hmm.emission(i, s, a);
                        }
                    }
                    scratch.copy_from_slice(f);
                    hmm.propagate_forward(&scratch, f);
                }
            }
        }
        Ok(out)
    }

    /// Exact joint law of `(x_K, Y)` by walking every output prefix.
    pub fn exact_output(&self) -> Result<OutputDistribution<T>> {
        let mut rows = Vec::new();
        let mut nodes = 0usize;
        self.descend(self.session(), self.prior.clone(), &mut rows, &mut nodes)?;
        Ok(OutputDistribution::from_rows(self.hmm.n(), self.prior.clone(), rows))
    }

    fn descend(
        &self,
        mut session: HmmMaskingSession<'_, 'a, T>,
        path: Vec<T>,
        rows: &mut Vec<(MaskedSequence, Vec<T>)>,
        nodes: &mut usize,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > EXACT_NODE_BUDGET {
            return Err(Error::capacity("output prefixes", *nodes as f64, EXACT_NODE_BUDGET as f64));
        }
        if session.position() == self.hmm.n() {
            rows.push((MaskedSequence(session.output), path));
            return Ok(());
        }
        let ctx = session.context()?;
        let release = ReleaseTable::from_context(&ctx)?;
        let arity = self.hmm.alphabet().size();
        let outcomes = (0..arity).map(|a| Some(a as Symbol)).chain([None]);
        for outcome in outcomes {
            let mut child = session.clone();
            let lik = child.advance(outcome, &release)?;
            let next: Vec<T> = path.iter().zip(&lik).map(|(&p, &l)| p * l).collect();
            if next.iter().any(Prob::is_positive) {
                self.descend(child, next, rows, nodes)?;
            }
        }
        Ok(())
    }
}

/// Streaming state of one masking run: feed `x_i`, receive `y_i`.
#[derive(Clone)]
pub struct HmmMaskingSession<'m, 'a, T> {
    mech: &'m HmmMechanism<'a, T>,
    position: usize,
    /// `psi[u * m + s]`: posterior of the state at the last processed position.
    psi: Vec<T>,
    active: Vec<bool>,
    /// Predictive state law at the current position, once computed.
    pred: Option<Vec<T>>,
    output: Vec<Option<Symbol>>,
}

impl<T: Real> HmmMaskingSession<'_, '_, T> {
    /// Index of the next position to be processed.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn output(&self) -> &[Option<Symbol>] {
        &self.output
    }

    pub fn is_active(&self, u: usize) -> bool {
        self.active[u]
    }

    /// `psi[u][.]` after the last processed position.
    pub fn psi(&self, u: usize) -> &[T] {
        let m = self.mech.hmm.m();
        &self.psi[u * m..(u + 1) * m]
    }

    /// `p(s_i | x_K = u, y_prefix)` for every `u` at the current position.
    fn predictive_state(&mut self) -> Result<&[T]> {
        if self.pred.is_none() {
            self.pred = Some(self.compute_predictive_state()?);
        }
        Ok(self.pred.as_deref().expect("just computed"))
    }

    fn compute_predictive_state(&self) -> Result<Vec<T>> {
        let mech = self.mech;
        let hmm = mech.hmm;
        let m = hmm.m();
        let i = self.position;
        if i >= hmm.n() {
            return Err(Error::input("session already produced every output"));
        }
        let mut pred = vec![T::zero(); self.psi.len()];
        let mut weighted = vec![T::zero(); m];
        for u in (0..self.active.len()).filter(|&u| self.active[u]) {
            let out = &mut pred[u * m..(u + 1) * m];
            if i == 0 {
                for (s, v) in out.iter_mut().enumerate() {
                    *v = mech.gamma.gamma(0, u, s);
                }
            } else {
                let psi = &self.psi[u * m..(u + 1) * m];
                match mech.gamma.z_row(i, u) {
                    Some(z) => {
                        for s in 0..m {
                            weighted[s] = if z[s] > T::zero() { psi[s] / z[s] } else { T::zero() };
                        }
                        hmm.propagate_forward(&weighted, out);
                    }
                    None => hmm.propagate_forward(psi, out),
                }
                if let Some(g) = mech.gamma.row(i, u) {
                    out.iter_mut().zip(g).for_each(|(v, &g)| *v = *v * g);
                }
            }
            let total = out.iter().fold(T::zero(), |acc, &v| acc + v);
            if i > 0 && (total.approx_f64() - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::numerical(format!(
                    "predictive state for assignment {u} at position {} sums to {}",
                    i + 1,
                    total.approx_f64()
                )));
            }
            if total <= T::zero() {
                return Err(Error::numerical(format!("assignment {u} lost all state mass")));
            }
            out.iter_mut().for_each(|v| *v = *v / total);
        }
        Ok(pred)
    }

    /// Conditionals `p(x_i | x_K = u, y_prefix)` for every `u` at the current position.
    pub fn context(&mut self) -> Result<ContextTable<T>> {
        let mech = self.mech;
        let hmm = mech.hmm;
        let (m, i) = (hmm.m(), self.position);
        let arity = hmm.alphabet().size();
        let u_count = self.active.len();
        let sensitive = mech.sensitive.contains(i);
        let mut cond = vec![T::zero(); u_count * arity];
        if sensitive {
            for u in (0..u_count).filter(|&u| self.active[u]) {
                let a = mech.layout.value(u, i).expect("sensitive position");
                cond[u * arity + a as usize] = T::one();
            }
        } else {
            let pred = self.predictive_state()?.to_vec();
            for u in (0..u_count).filter(|&u| self.active[u]) {
                let row = &mut cond[u * arity..(u + 1) * arity];
                for s in 0..m {
                    let w = pred[u * m + s];
                    if w == T::zero() {
                        continue;
                    }
                    for (a, c) in row.iter_mut().enumerate() {
                        *c = *c + w * hmm.emission(i, s, a as Symbol);
                    }
                }
            }
        }
        ContextTable::from_conditionals(u_count, arity, cond, self.active.clone(), sensitive)
    }

    /// `p(x_i | x_K = u, y_prefix)`, or `None` if `u` is impossible.
    pub fn predictive_prob(&mut self, u: usize) -> Result<Option<Vec<T>>> {
        let ctx = self.context()?;
        Ok(ctx.row(u).map(<[T]>::to_vec))
    }

    /// Conditions on the output `outcome` at the current position and moves on.
    ///
    /// Returns `p(y_i = outcome | x_K = u, y_prefix)` for every `u`; assignments
    /// for which it is zero become inactive.
    pub fn advance(&mut self, outcome: Option<Symbol>, release: &ReleaseTable<T>) -> Result<Vec<T>> {
        let mech = self.mech;
        let hmm = mech.hmm;
        let (m, i) = (hmm.m(), self.position);
        let arity = hmm.alphabet().size();
        let u_count = self.active.len();
        let sensitive = mech.sensitive.contains(i);
        let mut pred = self.predictive_state()?.to_vec();
        let mut lik = vec![T::zero(); u_count];
        let live: Vec<usize> = (0..u_count).filter(|&u| self.active[u]).collect();
        for u in live {
            let row = &mut pred[u * m..(u + 1) * m];
            if sensitive {
                // x_i = u_i is already inside gamma; the erasure is certain
                if outcome.is_some() {
                    row.iter_mut().for_each(|v| *v = T::zero());
                }
            } else {
                for (s, v) in row.iter_mut().enumerate() {
                    let l = match outcome {
                        Some(a) => hmm.emission(i, s, a) * release.release(u, a),
                        None => (0..arity).fold(T::zero(), |acc, a| {
                            let a = a as Symbol;
                            acc + hmm.emission(i, s, a) * (T::one() - release.release(u, a))
                        }),
                    };
                    *v = *v * l;
                }
            }
            let total = row.iter().fold(T::zero(), |acc, &v| acc + v);
            lik[u] = total;
            if total > T::zero() {
                row.iter_mut().for_each(|v| *v = *v / total);
            } else {
                self.active[u] = false;
            }
        }
        self.psi = pred;
        self.pred = None;
        self.position += 1;
        self.output.push(outcome);
        Ok(lik)
    }

    /// Processes the true symbol `x_i` given the true assignment `observed`.
    /// Returns the output and the probability with which `x_i` was released.
    pub fn step(&mut self, xi: Symbol, observed: usize, rng: &mut dyn RngCore) -> Result<(Option<Symbol>, f64)> {
        if xi as usize >= self.mech.hmm.alphabet().size() {
            return Err(Error::input(format!("symbol {xi} outside the alphabet")));
        }
        let ctx = self.context()?;
        let release = ReleaseTable::from_context(&ctx)?;
        let r = release.release(observed, xi).approx_f64();
        let outcome = (rng.random::<f64>() < r).then_some(xi);
        self.advance(outcome, &release)?;
        Ok((outcome, r))
    }
}

/// Masks `x` with a freshly built HMM mechanism.
///
/// When every position is sensitive the output is all-erased whatever the
/// model, so the capacity limit on `|K|` does not apply.
pub fn mask_hmm<T: Real>(
    hmm: &HmmModel<T>,
    x: &[Symbol],
    k: &SensitiveSet,
    rng: &mut dyn RngCore,
) -> Result<(MaskedSequence, Transcript)> {
    if k.len() == hmm.n() && k.len() > MAX_SENSITIVE {
        hmm.check_sequence(x)?;
        let entries = (0..x.len())
            .map(|i| {
                let _ = rng.random::<f64>();
                TranscriptEntry { position: i, release_prob: 0.0, outcome: None }
            })
            .collect();
        return Ok((MaskedSequence::all_erased(x.len()), Transcript { entries, warnings: Vec::new() }));
    }
    HmmMechanism::new(hmm, k.clone())?.mask(x, rng)
}

/// How one Monte-Carlo run turns into a rate sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateEstimator {
    /// Fraction of released symbols in the sampled output.
    #[default]
    Count,
    /// Mean release probability along the sampled path; same expectation,
    /// lower variance.
    ReleaseProbability,
}

/// Monte-Carlo estimate of the achievable rate on sequences drawn from `hmm`.
pub fn hmm_rate_mc<T: Real>(
    hmm: &HmmModel<T>,
    k: &SensitiveSet,
    runs: usize,
    seed: u64,
    estimator: RateEstimator,
) -> Result<Estimate> {
    if runs == 0 {
        return Err(Error::input("at least one run is required"));
    }
    let mech = HmmMechanism::new(hmm, k.clone())?;
    let n = hmm.n() as f64;
    par_estimate(runs, seed, |_, rng| {
        let x = hmm.sample(rng);
        let (y, t) = mech.mask(&x, rng)?;
        Ok(match estimator {
            RateEstimator::Count => (y.len() - y.erasures()) as f64 / n,
            RateEstimator::ReleaseProbability => t.entries.iter().map(|e| e.release_prob).sum::<f64>() / n,
        })
    })
}

/// `(1/n) sum_i sum_a min_u p(x_i = a | x_K = u)` for an HMM.
pub fn hmm_upper_bound_rate<T: Real>(hmm: &HmmModel<T>, k: &SensitiveSet) -> Result<T> {
    let mech = HmmMechanism::new(hmm, k.clone())?;
    let total = mech
        .prior_contexts()?
        .iter()
        .fold(T::zero(), |acc, ctx| acc + ctx.release_mass());
    Ok(total / T::from_count(hmm.n()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::EnumeratedMechanism;
    use crate::sequence::{Alphabet, ProcessingOrder};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hmm(panel: &[&str], eps: f64, theta: f64) -> HmmModel<f64> {
        let panel = panel
            .iter()
            .map(|r| crate::sequence::parse_symbols(r).unwrap())
            .collect();
        HmmModel::new(panel, Alphabet::BINARY, eps, theta).unwrap()
    }

    /// `p(x_K = u | s_i = s)` by enumerating every state path and emission.
    fn brute_gamma(h: &HmmModel<f64>, k: &[usize], u: &[u8], i: usize, s: usize) -> f64 {
        let (n, m) = (h.n(), h.m());
        let later: Vec<(usize, u8)> = k.iter().zip(u).filter(|(&p, _)| p >= i).map(|(&p, &a)| (p, a)).collect();
        let tail = n - i - 1;
        let mut total = 0.0;
        for code in 0..m.pow(tail as u32) {
            let mut path = vec![s];
            let mut c = code;
            for _ in 0..tail {
                path.push(c % m);
                c /= m;
            }
            let mut p = 1.0;
            for w in path.windows(2) {
                p *= h.transition(w[0], w[1]);
            }
            for &(pos, a) in &later {
                p *= h.emission(pos, path[pos - i], a);
            }
            total += p;
        }
        total
    }

    #[test]
    fn gamma_matches_path_enumeration() {
        let h = hmm(&["010", "110"], 0.2, 0.1);
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let g = backward_gamma_full(&h, &k).unwrap();
        for u in 0..2u8 {
            for s in 0..2 {
                let b = brute_gamma(&h, &[0], &[u], 0, s);
                assert!((g.gamma(0, u as usize, s) - b).abs() < 1e-12);
            }
        }
        let h = hmm(&["0101", "1100", "0011"], 0.3, 0.15);
        let k = SensitiveSet::new(vec![1, 3], 4).unwrap();
        let g = backward_gamma_full(&h, &k).unwrap();
        let codec = SensitiveCodec::new(&k, &[2; 4]);
        for u in 0..4 {
            let vals = codec.decode(u);
            for i in 0..4 {
                for s in 0..3 {
                    let b = brute_gamma(&h, &[1, 3], &vals, i, s);
                    assert!((g.gamma(i, u, s) - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gamma_is_one_past_the_last_sensitive_position() {
        let h = hmm(&["0101", "1100"], 0.3, 0.15);
        let g = backward_gamma_full(&h, &SensitiveSet::new(vec![1], 4).unwrap()).unwrap();
        for i in 2..4 {
            for u in 0..2 {
                assert!(g.row(i, u).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-15));
            }
        }
        let g = backward_gamma_full(&h, &SensitiveSet::empty()).unwrap();
        assert!(g.gamma.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn conditioned_kernel_matches_bayes() {
        let h = hmm(&["010", "110"], 0.2, 0.1);
        let k = SensitiveSet::new(vec![0], 3).unwrap();
        let g = backward_gamma(&h, &k).unwrap();
        // K in the past: the kernel at i = 1 is the plain one
        let plain = transition_given_sensitive(&h, &g, 1, 0).unwrap();
        for (a, b) in plain.iter().zip(h.kernel()) {
            assert!((a - b).abs() < 1e-15);
        }
        let k = SensitiveSet::new(vec![2], 3).unwrap();
        let g = backward_gamma(&h, &k).unwrap();
        for u in 0..2u8 {
            let kern = transition_given_sensitive(&h, &g, 1, u as usize).unwrap();
            for from in 0..2 {
                // p(s_1 = to, x_2 = u | s_0 = from) / p(x_2 = u | s_0 = from)
                let joint: Vec<f64> = (0..2)
                    .map(|to| {
                        h.transition(from, to)
                            * (0..2).map(|t| h.transition(to, t) * h.emission(2, t, u)).sum::<f64>()
                    })
                    .collect();
                let z: f64 = joint.iter().sum();
                for to in 0..2 {
                    assert!((kern[from * 2 + to] - joint[to] / z).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn impossible_kernel_row_is_reported() {
        let h = hmm(&["00", "00"], 0.0, 0.0);
        let k = SensitiveSet::new(vec![1], 2).unwrap();
        let g = backward_gamma(&h, &k).unwrap();
        assert!(matches!(
            transition_given_sensitive(&h, &g, 1, 1),
            Err(Error::ImpossibleContext(_))
        ));
    }

    fn cross_check(h: &HmmModel<f64>, k: &SensitiveSet) {
        let n = h.n();
        let mech = HmmMechanism::new(h, k.clone()).unwrap();
        let brute = EnumeratedMechanism::new(h, k.clone(), ProcessingOrder::linear(n)).unwrap();
        let mut checked = 0;
        let mut worst = 0.0f64;
        // every enumerated step is compared with a session replaying its prefix
        brute
            .walk(&mut |v| {
                if let crate::mechanism::Visit::Step(step) = v {
                    let mut s = mech.session();
                    for &(_, o) in step.prefix {
                        let ctx = s.context()?;
                        let rel = ReleaseTable::from_context(&ctx)?;
                        s.advance(o, &rel)?;
                    }
                    let ctx = s.context()?;
                    for u in 0..step.context.u_count() {
                        assert_eq!(ctx.is_active(u), step.context.is_active(u), "u={u} prefix={:?} brute={:?} fast={:?}", step.prefix, step.context, ctx);
                        if let (Some(a), Some(b)) = (ctx.row(u), step.context.row(u)) {
                            for (x, y) in a.iter().zip(b) {
                                worst = worst.max((x - y).abs());
                            }
                        }
                    }
                    checked += 1;
                }
                Ok(())
            })
            .unwrap();
        assert!(checked > 0);
        assert!(worst < 1e-10, "predictive deviation {worst}");
        let tv = mech.exact_output().unwrap().total_variation(&brute.exact_output().unwrap());
        assert!(tv < 1e-9, "total variation {tv}");
    }

    #[test]
    fn predictive_and_output_law_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, m, ks) in [(4, 2, vec![0]), (5, 3, vec![2]), (5, 3, vec![0, 4]), (6, 2, vec![1, 3])] {
            let panel = HmmModel::<f64>::random_panel(m, n, Alphabet::BINARY, &mut rng);
            let h = HmmModel::new(panel, Alphabet::BINARY, 0.15, 0.05).unwrap();
            cross_check(&h, &SensitiveSet::new(ks, n).unwrap());
        }
    }

    #[test]
    fn shortcut_matches_full_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let panel = HmmModel::<f64>::random_panel(4, 8, Alphabet::BINARY, &mut rng);
        let h = HmmModel::new(panel, Alphabet::BINARY, 0.2, 0.05).unwrap();
        let k = SensitiveSet::new(vec![2], 8).unwrap();
        let fast = HmmMechanism::new(&h, k.clone()).unwrap();
        let full = HmmMechanism::without_shortcut(&h, k).unwrap();
        assert_eq!(fast.gamma().stored_rows(), 3);
        for run in 0..50 {
            let x = h.sample(&mut rng);
            let (ya, ta) = fast.mask(&x, &mut ChaCha8Rng::seed_from_u64(run)).unwrap();
            let (yb, tb) = full.mask(&x, &mut ChaCha8Rng::seed_from_u64(run)).unwrap();
            assert_eq!(ya, yb);
            for (a, b) in ta.entries.iter().zip(&tb.entries) {
                assert!((a.release_prob - b.release_prob).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seeded_masks_agree_with_enumerated_mechanism() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let panel = HmmModel::<f64>::random_panel(3, 6, Alphabet::BINARY, &mut rng);
        let h = HmmModel::new(panel, Alphabet::BINARY, 0.1, 0.05).unwrap();
        let k = SensitiveSet::new(vec![0, 3], 6).unwrap();
        let fast = HmmMechanism::new(&h, k.clone()).unwrap();
        let brute = EnumeratedMechanism::new(&h, k, ProcessingOrder::linear(6)).unwrap();
        for run in 0..200 {
            let x = h.sample(&mut rng);
            let (ya, ta) = fast.mask(&x, &mut ChaCha8Rng::seed_from_u64(run)).unwrap();
            let (yb, tb) = brute.mask(&x, &mut ChaCha8Rng::seed_from_u64(run)).unwrap();
            assert_eq!(ya, yb);
            for (a, b) in ta.entries.iter().zip(&tb.entries) {
                assert!((a.release_prob - b.release_prob).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pure_noise_emissions_give_uniform_predictive() {
        let h = hmm(&["0101", "1100"], 0.2, 0.5);
        let k = SensitiveSet::new(vec![0], 4).unwrap();
        let mech = HmmMechanism::new(&h, k).unwrap();
        let mut s = mech.session();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for xi in [1, 0, 1, 1] {
            for u in 0..2 {
                if let Some(p) = s.predictive_prob(u).unwrap() {
                    if !mech.sensitive().contains(s.position()) {
                        assert!((p[0] - 0.5).abs() < 1e-12);
                    }
                }
            }
            s.step(xi, 1, &mut rng).unwrap();
        }
    }

    #[test]
    fn single_haplotype_releases_everything_outside_k() {
        let h = hmm(&["01101"], 0.3, 0.1);
        let k = SensitiveSet::new(vec![2], 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = h.sample(&mut rng);
            let (y, t) = mask_hmm(&h, &x, &k, &mut rng).unwrap();
            for (i, e) in t.entries.iter().enumerate() {
                if i == 2 {
                    assert_eq!(e.release_prob, 0.0);
                    assert!(y.is_erased(2));
                } else {
                    assert!((e.release_prob - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn empty_k_releases_the_input() {
        let h = hmm(&["0101", "1100"], 0.2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = h.sample(&mut rng);
        let (y, _) = mask_hmm(&h, &x, &SensitiveSet::empty(), &mut rng).unwrap();
        assert_eq!(y, MaskedSequence::released(&x));
    }

    #[test]
    fn psi_stays_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let panel = HmmModel::<f64>::random_panel(5, 30, Alphabet::BINARY, &mut rng);
        let h = HmmModel::new(panel, Alphabet::BINARY, 0.1, 0.02).unwrap();
        let k = SensitiveSet::new(vec![0, 10], 30).unwrap();
        let mech = HmmMechanism::new(&h, k).unwrap();
        let x = h.sample(&mut rng);
        let observed = mech.codec().of_sequence(&x);
        let mut s = mech.session();
        for &xi in &x {
            s.step(xi, observed, &mut rng).unwrap();
            for u in 0..4 {
                if s.is_active(u) {
                    let t: f64 = s.psi(u).iter().sum();
                    assert!((t - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn oversized_k_is_a_capacity_error() {
        let h = hmm(&["01010101010101", "11001100110011"], 0.2, 0.1);
        let k = SensitiveSet::new((0..13).collect(), 14).unwrap();
        assert!(matches!(HmmMechanism::new(&h, k), Err(Error::Capacity { .. })));
    }

    #[test]
    fn rate_estimators_agree_with_exact_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let panel = HmmModel::<f64>::random_panel(3, 6, Alphabet::BINARY, &mut rng);
        let h = HmmModel::new(panel, Alphabet::BINARY, 0.1, 0.05).unwrap();
        let k = SensitiveSet::new(vec![0], 6).unwrap();
        let exact = HmmMechanism::new(&h, k.clone()).unwrap().exact_output().unwrap().rate();
        for est in [RateEstimator::Count, RateEstimator::ReleaseProbability] {
            let e = hmm_rate_mc(&h, &k, 20_000, 7, est).unwrap();
            assert!((e.mean - exact).abs() < 4.0 * e.stderr + 1e-12, "{est:?}: {e:?} vs {exact}");
        }
        let bound = hmm_upper_bound_rate(&h, &k).unwrap();
        assert!(exact <= bound + 1e-9);
    }

    #[test]
    fn all_sensitive_masks_everything_past_capacity() {
        let h = hmm(&["0110011001100110", "1010101010101010"], 0.1, 0.05);
        let k = SensitiveSet::new((0..16).collect(), 16).unwrap();
        let x = h.sample(&mut ChaCha8Rng::seed_from_u64(0));
        let (y, t) = mask_hmm(&h, &x, &k, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(y.erasures(), 16);
        assert!(t.entries.iter().all(|e| e.release_prob == 0.0));
        assert!(matches!(HmmMechanism::new(&h, k), Err(Error::Capacity { .. })));
    }
}
