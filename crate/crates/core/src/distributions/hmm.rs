//! Haplotype-copying hidden Markov model.
//!
//! The hidden state `s_i` indexes the reference haplotype being copied at
//! position `i`. The first state is uniform, the state is kept with
//! probability `1 - epsilon` and otherwise jumps uniformly to one of the other
//! `m - 1` haplotypes, and the observed symbol equals the copied one except
//! with probability `theta`, in which case it is uniform over the remaining
//! symbols.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, RngCore};

use super::SequenceModel;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sequence::{char_to_symbol, format_symbols, Alphabet, Symbol};

#[derive(Debug, Clone)]
pub struct HmmModel<T> {
    panel: Vec<Vec<Symbol>>,
    alphabet: Alphabet,
    epsilon: T,
    theta: T,
    stay: T,
    switch: T,
    /// `p(x_i = a | s_i = s)` when the panel symbol differs from `a`.
    mismatch: T,
}

impl<T: Real> HmmModel<T> {
    pub fn new(panel: Vec<Vec<Symbol>>, alphabet: Alphabet, epsilon: T, theta: T) -> Result<Self> {
        let m = panel.len();
        if m == 0 {
            return Err(Error::input("reference panel is empty"));
        }
        let n = panel[0].len();
        if n == 0 || panel.iter().any(|row| row.len() != n) {
            return Err(Error::input("panel rows must be non-empty and of equal length"));
        }
        if panel.iter().flatten().any(|&s| !alphabet.contains(s)) {
            return Err(Error::input("panel symbol outside alphabet"));
        }
        for (name, v) in [("epsilon", epsilon), ("theta", theta)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::input(format!("{name} must lie in [0, 1]")));
            }
        }
        let (stay, switch) = if m == 1 {
            (T::one(), T::zero())
        } else {
            (T::one() - epsilon, epsilon / T::from_count(m - 1))
        };
        Ok(HmmModel {
            panel,
            alphabet,
            epsilon,
            theta,
            stay,
            switch,
            mismatch: theta / T::from_count(alphabet.size() - 1),
        })
    }

    /// Panel of `m` rows of `n` uniform random symbols.
    pub fn random_panel(m: usize, n: usize, alphabet: Alphabet, rng: &mut dyn RngCore) -> Vec<Vec<Symbol>> {
        (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| rng.random_range(0..alphabet.size()) as Symbol)
                    .collect()
            })
            .collect()
    }

    pub fn panel(&self) -> &[Vec<Symbol>] {
        &self.panel
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Number of reference haplotypes (hidden states).
    pub fn m(&self) -> usize {
        self.panel.len()
    }

    pub fn n(&self) -> usize {
        self.panel[0].len()
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    /// Same panel with other parameters.
    pub fn with_params(&self, epsilon: T, theta: T) -> Result<Self> {
        Self::new(self.panel.clone(), self.alphabet, epsilon, theta)
    }

    /// Model restricted to the first `n` positions, parameters unchanged.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::input(format!("cannot truncate length {} to {n}", self.n())));
        }
        let panel = self.panel.iter().map(|row| row[..n].to_vec()).collect();
        Self::new(panel, self.alphabet, self.epsilon, self.theta)
    }

    /// A single haplotype has no state dynamics: it is kept with probability 1.
    pub fn stay_prob(&self) -> T {
        self.stay
    }

    pub fn switch_prob(&self) -> T {
        self.switch
    }

    pub fn transition(&self, from: usize, to: usize) -> T {
        if from == to {
            self.stay_prob()
        } else {
            self.switch_prob()
        }
    }

    pub fn initial_prob(&self) -> T {
        T::one() / T::from_count(self.m())
    }

    /// Dense `m x m` transition matrix, row = previous state.
    pub fn kernel(&self) -> Vec<T> {
        let m = self.m();
        (0..m * m).map(|idx| self.transition(idx / m, idx % m)).collect()
    }

    /// `p(x_i = a | s_i = s)`.
    #[inline]
    pub fn emission(&self, i: usize, s: usize, a: Symbol) -> T {
        if self.panel[s][i] == a {
            T::one() - self.theta
        } else {
            self.mismatch
        }
    }

    /// `out[s'] = sum_s v[s] P(s, s')`, dense O(m^2).
    ///
    /// Kernel entries are generated from the stay/switch pair instead of read
    /// from a stored matrix, which would not fit in cache for large panels.
    pub fn propagate_forward(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (s, &vs) in v.iter().enumerate() {
            if vs == T::zero() {
                continue;
            }
            let off = vs * self.switch;
            for o in &mut out[..s] {
                *o = *o + off;
            }
            out[s] = out[s] + vs * self.stay;
            for o in &mut out[s + 1..] {
                *o = *o + off;
            }
        }
    }

    /// `out[s] = sum_s' P(s, s') v[s']`, dense O(m^2).
    pub fn propagate_backward(&self, v: &[T], out: &mut [T]) {
        for (s, o) in out.iter_mut().enumerate() {
            let before = v[..s].iter().fold(T::zero(), |acc, &x| acc + self.switch * x);
            let with_diag = before + self.stay * v[s];
            *o = v[s + 1..].iter().fold(with_diag, |acc, &x| acc + self.switch * x);
        }
    }

    /// `ln p(x)` by a forward pass with per-step renormalization.
    pub fn log_joint_prob(&self, x: &[Symbol]) -> Result<T> {
        self.check_sequence(x)?;
        let m = self.m();
        let mut alpha: Vec<T> = (0..m)
            .map(|s| self.initial_prob() * self.emission(0, s, x[0]))
            .collect();
        let mut log_scale = T::zero();
        let mut next = vec![T::zero(); m];
        for i in 0..x.len() {
            if i > 0 {
                self.propagate_forward(&alpha, &mut next);
                for (s, a) in next.iter_mut().enumerate() {
                    *a = *a * self.emission(i, s, x[i]);
                }
                std::mem::swap(&mut alpha, &mut next);
            }
            let c = alpha.iter().fold(T::zero(), |acc, &v| acc + v);
            if c == T::zero() {
                return Ok(T::neg_infinity());
            }
            log_scale = log_scale + c.ln();
            alpha.iter_mut().for_each(|a| *a = *a / c);
        }
        Ok(log_scale)
    }
}

impl<T: Real> SequenceModel<T> for HmmModel<T> {
    fn len(&self) -> usize {
        self.n()
    }

    fn arity(&self, _i: usize) -> usize {
        self.alphabet.size()
    }

    fn joint_prob(&self, x: &[Symbol]) -> Result<T> {
        Ok(self.log_joint_prob(x)?.exp())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<Symbol> {
        let m = self.m();
        let a = self.alphabet.size();
        let eps = self.epsilon.approx_f64();
        let theta = self.theta.approx_f64();
        let mut s = rng.random_range(0..m);
        (0..self.n())
            .map(|i| {
                if i > 0 && m > 1 && rng.random::<f64>() < eps {
                    // jump to one of the other m - 1 haplotypes
                    let t = rng.random_range(0..m - 1);
                    s = if t >= s { t + 1 } else { t };
                }
                let copied = self.panel[s][i];
                if rng.random::<f64>() < theta {
                    let t = rng.random_range(0..a - 1) as Symbol;
                    if t >= copied {
                        t + 1
                    } else {
                        t
                    }
                } else {
                    copied
                }
            })
            .collect()
    }
}

/// Reads a panel: one haplotype per line, one character per symbol.
pub fn read_panel(path: impl AsRef<Path>) -> Result<Vec<Vec<Symbol>>> {
    let file = fs::File::open(path)?;
    let mut panel = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .chars()
            .map(|c| {
                char_to_symbol(c).ok_or_else(|| {
                    Error::input(format!("panel line {}: bad symbol {c:?}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        panel.push(row);
    }
    if panel.is_empty() {
        return Err(Error::input("panel file has no haplotypes"));
    }
    Ok(panel)
}

pub fn write_panel(path: impl AsRef<Path>, panel: &[Vec<Symbol>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for row in panel {
        writeln!(out, "{}", format_symbols(row))?;
    }
    out.flush()?;
    Ok(())
}
