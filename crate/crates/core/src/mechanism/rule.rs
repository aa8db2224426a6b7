//! The per-position release rule.
//!
//! Given the conditionals `p(x_i = a | x_K = u, y_prefix)` for every
//! sensitive assignment `u`, the symbol `a` is released with probability
//! `min_u' p(a | u', prefix) / p(a | u_obs, prefix)` and erased otherwise.
//! The released mass `min_u' p(a | u', prefix)` is then the same for every
//! `u`, which is what makes the output independent of `x_K`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Prob};
use crate::sequence::Symbol;

/// Violations of [0, 1] beyond this are logic errors, not round-off.
const HARD_TOLERANCE: f64 = 1e-9;

/// Conditionals of one position given each sensitive assignment and the
/// processed prefix.
#[derive(Debug, Clone)]
pub struct ContextTable<T> {
    u_count: usize,
    arity: usize,
    cond: Vec<T>,
    active: Vec<bool>,
    sensitive: bool,
}

impl<T: Prob> ContextTable<T> {
    /// Builds the table from unnormalized masses `p(x_i = a, x_K = u, y_prefix)`.
    /// Assignments with zero mass are inactive (their context is impossible).
    pub fn from_masses(u_count: usize, arity: usize, mass: Vec<T>, sensitive: bool) -> Self {
        debug_assert_eq!(mass.len(), u_count * arity);
        let mut cond = mass;
        let mut active = vec![false; u_count];
        for (u, row) in cond.chunks_mut(arity).enumerate() {
            let total = row.iter().fold(T::zero(), |acc, v| acc + v.clone());
            if total.is_positive() {
                active[u] = true;
                for v in row.iter_mut() {
                    *v = v.clone() / total.clone();
                }
            }
        }
        ContextTable {
            u_count,
            arity,
            cond,
            active,
            sensitive,
        }
    }

    /// Builds the table from already-normalized conditionals.
    pub fn from_conditionals(
        u_count: usize,
        arity: usize,
        cond: Vec<T>,
        active: Vec<bool>,
        sensitive: bool,
    ) -> Result<Self> {
        if cond.len() != u_count * arity || active.len() != u_count {
            return Err(Error::input("context table dimensions do not match"));
        }
        let tol = lit::<T>(HARD_TOLERANCE);
        for (u, row) in cond.chunks(arity).enumerate() {
            if !active[u] {
                continue;
            }
            let total = row.iter().fold(T::zero(), |acc, v| acc + v.clone());
            let dev = if total > T::one() {
                total - T::one()
            } else {
                T::one() - total
            };
            if dev > tol || row.iter().any(|v| *v < T::zero() || v.approx_f64().is_nan()) {
                return Err(Error::numerical(format!(
                    "conditional row for assignment {u} is not a distribution"
                )));
            }
        }
        Ok(ContextTable {
            u_count,
            arity,
            cond,
            active,
            sensitive,
        })
    }

    pub fn u_count(&self) -> usize {
        self.u_count
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_sensitive(&self) -> bool {
        self.sensitive
    }

    pub fn is_active(&self, u: usize) -> bool {
        self.active[u]
    }

    pub fn conditional(&self, u: usize, a: Symbol) -> T {
        self.cond[u * self.arity + a as usize].clone()
    }

    /// Distribution of `x_i` given assignment `u`, or `None` if impossible.
    pub fn row(&self, u: usize) -> Option<&[T]> {
        self.active[u].then(|| &self.cond[u * self.arity..(u + 1) * self.arity])
    }

    /// `min_u p(x_i = a | x_K = u, prefix)` over the possible assignments.
    pub fn min_conditional(&self, a: Symbol) -> T {
        if self.sensitive {
            return T::zero();
        }
        (0..self.u_count)
            .filter(|&u| self.active[u])
            .map(|u| self.conditional(u, a))
            .reduce(T::min_of)
            .unwrap_or_else(T::zero)
    }

    /// `sum_a min_u p(a | u, prefix)`: the probability that this position is
    /// released, which the rule makes identical for every `u`.
    pub fn release_mass(&self) -> T {
        (0..self.arity)
            .map(|a| self.min_conditional(a as Symbol))
            .fold(T::zero(), |acc, v| acc + v)
    }
}

/// Probability of erasing `symbol` when the true sensitive assignment is `observed`.
///
/// Sensitive positions are always erased. An impossible observed context (zero
/// conditional) is erased with probability one.
pub fn erasure_probability<T: Prob>(
    ctx: &ContextTable<T>,
    symbol: Symbol,
    observed: usize,
) -> Result<T> {
    if ctx.sensitive || !ctx.active[observed] {
        return Ok(T::one());
    }
    let denom = ctx.conditional(observed, symbol);
    if !denom.is_positive() {
        return Ok(T::one());
    }
    let e = clamp_probability(T::one() - ctx.min_conditional(symbol) / denom)?;
    // a ratio that should be exactly 0 or 1 often lands a few ulps away, which
    // would keep measure-zero output branches alive
    Ok(if e <= T::roundoff() {
        T::zero()
    } else if e >= T::one() - T::roundoff() {
        T::one()
    } else {
        e
    })
}

/// Clamps round-off excursions out of [0, 1]; larger ones are errors.
pub fn clamp_probability<T: Prob>(p: T) -> Result<T> {
    let f = p.approx_f64();
    if !(-HARD_TOLERANCE..=1.0 + HARD_TOLERANCE).contains(&f) {
        return Err(Error::numerical(format!("probability {f} outside [0, 1]")));
    }
    Ok(if p < T::zero() {
        T::zero()
    } else if p > T::one() {
        T::one()
    } else {
        p
    })
}

/// `P(y_i = a | x_i = a, x_K = u, prefix)` for every `u` and `a`.
#[derive(Debug, Clone)]
pub struct ReleaseTable<T> {
    arity: usize,
    release: Vec<T>,
}

impl<T: Prob> ReleaseTable<T> {
    pub fn from_context(ctx: &ContextTable<T>) -> Result<Self> {
        let mut release = Vec::with_capacity(ctx.u_count * ctx.arity);
        for u in 0..ctx.u_count {
            for a in 0..ctx.arity {
                release.push(T::one() - erasure_probability(ctx, a as Symbol, u)?);
            }
        }
        Ok(ReleaseTable {
            arity: ctx.arity,
            release,
        })
    }

    #[inline]
    pub fn release(&self, u: usize, a: Symbol) -> T {
        self.release[u * self.arity + a as usize].clone()
    }

    /// Every release probability is exactly 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.release
            .iter()
            .all(|r| *r == T::zero() || *r == T::one())
    }
}
