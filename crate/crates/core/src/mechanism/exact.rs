//! Exact enumeration of the mechanism's output law.

use std::collections::BTreeMap;

use serde::Serialize;

use super::rule::{ContextTable, ReleaseTable};
use super::EnumeratedMechanism;
use crate::enumeration::{JointTable, PrefixWeights, SensitiveCodec};
use crate::error::{Error, Result};
use crate::information;
use crate::scalar::Prob;
use crate::sequence::{MaskedSequence, Symbol};

/// Cap on the summed support sizes visited by one walk.
pub const WALK_BUDGET: usize = 1 << 31;

/// State of the walk just before a position is processed.
pub struct StepView<'a, T> {
    pub depth: usize,
    pub position: usize,
    pub prefix: &'a [(usize, Option<Symbol>)],
    pub weights: &'a PrefixWeights<T>,
    pub context: &'a ContextTable<T>,
    pub release: &'a ReleaseTable<T>,
}

pub enum Visit<'a, T> {
    Step(StepView<'a, T>),
    Leaf {
        prefix: &'a [(usize, Option<Symbol>)],
        weights: &'a PrefixWeights<T>,
    },
}

pub(crate) fn walk<T: Prob>(
    mech: &EnumeratedMechanism<T>,
    truth: Option<&JointTable<T>>,
    visit: &mut dyn FnMut(Visit<'_, T>) -> Result<()>,
) -> Result<()> {
    let initial = PrefixWeights::initial(&mech.table, truth, &mech.codec)?;
    let mut prefix = Vec::with_capacity(mech.len());
    let mut work = 0usize;
    descend(mech, 0, &initial, &mut prefix, &mut work, visit)
}

fn descend<T: Prob>(
    mech: &EnumeratedMechanism<T>,
    depth: usize,
    weights: &PrefixWeights<T>,
    prefix: &mut Vec<(usize, Option<Symbol>)>,
    work: &mut usize,
    visit: &mut dyn FnMut(Visit<'_, T>) -> Result<()>,
) -> Result<()> {
    *work += weights.entries().len().max(1);
    if *work > WALK_BUDGET {
        return Err(Error::capacity("output enumeration", *work as f64, WALK_BUDGET as f64));
    }
    if depth == mech.len() {
        return visit(Visit::Leaf { prefix, weights });
    }
    let space = mech.space();
    let i = mech.order.positions()[depth];
    let context = weights.context(space, &mech.codec, i, mech.sensitive.contains(i));
    let release = ReleaseTable::from_context(&context)?;
    visit(Visit::Step(StepView {
        depth,
        position: i,
        prefix,
        weights,
        context: &context,
        release: &release,
    }))?;
    let outcomes = (0..space.arity(i)).map(|a| Some(a as Symbol)).chain([None]);
    for outcome in outcomes {
        let child = weights.branch(space, i, outcome, &release);
        if child.is_empty() {
            continue;
        }
        prefix.push((i, outcome));
        descend(mech, depth + 1, &child, prefix, work, visit)?;
        prefix.pop();
    }
    Ok(())
}

pub(crate) fn output_distribution<T: Prob>(
    mech: &EnumeratedMechanism<T>,
    truth: Option<&JointTable<T>>,
) -> Result<OutputDistribution<T>> {
    let n = mech.len();
    let count = mech.codec.count();
    let mut rows = Vec::new();
    walk(mech, truth, &mut |v| {
        if let Visit::Leaf { prefix, weights } = v {
            let mut y = vec![None; n];
            for &(i, o) in prefix {
                y[i] = o;
            }
            let row = weights.truth_by_sensitive(count);
            if row.iter().any(Prob::is_positive) {
                rows.push((MaskedSequence(y), row));
            }
        }
        Ok(())
    })?;
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let marginal = truth.unwrap_or(&mech.table).sensitive_marginal(&mech.codec);
    Ok(OutputDistribution {
        n,
        sensitive_marginal: marginal,
        rows,
    })
}

/// Joint law `p(x_K = u, y)` over outputs with positive probability.
#[derive(Debug, Clone)]
pub struct OutputDistribution<T> {
    n: usize,
    sensitive_marginal: Vec<T>,
    rows: Vec<(MaskedSequence, Vec<T>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyReport {
    /// `max_{u, y} |p(y | x_K = u) - p(y)|` over assignments with `p(u) > 0`.
    pub max_deviation: f64,
    /// `I(X_K; Y)` in bits.
    pub mutual_information: f64,
}

impl<T: Prob> OutputDistribution<T> {
    /// Law induced by an explicit channel `w(y | x)` (e.g. an LP solution).
    pub fn from_channel(
        table: &JointTable<T>,
        codec: &SensitiveCodec,
        mut channel: impl FnMut(usize) -> Vec<(MaskedSequence, T)>,
    ) -> Self {
        let mut acc: BTreeMap<MaskedSequence, Vec<T>> = BTreeMap::new();
        for (idx, p) in table.probs().iter().enumerate() {
            if !p.is_positive() {
                continue;
            }
            let u = table.sensitive_code(codec, idx);
            for (y, w) in channel(idx) {
                let row = acc
                    .entry(y)
                    .or_insert_with(|| vec![T::zero(); codec.count()]);
                row[u] = row[u].clone() + p.clone() * w;
            }
        }
        OutputDistribution {
            n: table.space().len(),
            sensitive_marginal: table.sensitive_marginal(codec),
            rows: acc
                .into_iter()
                .filter(|(_, r)| r.iter().any(Prob::is_positive))
                .collect(),
        }
    }

    /// Law from explicit rows `(y, [p(x_K = u, y) for u])`; zero rows are dropped.
    pub fn from_rows(n: usize, sensitive_marginal: Vec<T>, rows: Vec<(MaskedSequence, Vec<T>)>) -> Self {
        let mut rows: Vec<_> = rows
            .into_iter()
            .filter(|(_, r)| r.iter().any(Prob::is_positive))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        OutputDistribution {
            n,
            sensitive_marginal,
            rows,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sensitive_marginal(&self) -> &[T] {
        &self.sensitive_marginal
    }

    /// `(y, [p(x_K = u, y) for u])`, sorted by `y`.
    pub fn rows(&self) -> &[(MaskedSequence, Vec<T>)] {
        &self.rows
    }

    pub fn output_prob(row: &[T]) -> T {
        row.iter().fold(T::zero(), |acc, v| acc + v.clone())
    }

    pub fn total(&self) -> T {
        self.rows
            .iter()
            .fold(T::zero(), |acc, (_, r)| acc + Self::output_prob(r))
    }

    /// `p(y_i = *)` for every position.
    pub fn erasure_by_position(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (y, row) in &self.rows {
            let p = Self::output_prob(row);
            for (i, o) in out.iter_mut().enumerate() {
                if y.is_erased(i) {
                    *o = o.clone() + p.clone();
                }
            }
        }
        out
    }

    /// `E[e(Y)]`.
    pub fn expected_erasures(&self) -> T {
        self.erasure_by_position()
            .into_iter()
            .fold(T::zero(), |acc, v| acc + v)
    }

    /// `1 - E[e(Y)] / n`.
    pub fn rate(&self) -> T {
        T::one() - self.expected_erasures() / T::from_count(self.n)
    }

    pub fn max_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (_, row) in &self.rows {
            let py = Self::output_prob(row);
            for (u, pu) in self.sensitive_marginal.iter().enumerate() {
                if !pu.is_positive() {
                    continue;
                }
                let cond = row[u].clone() / pu.clone();
                let d = if cond > py {
                    cond - py.clone()
                } else {
                    py.clone() - cond
                };
                worst = worst.max(d.approx_f64());
            }
        }
        worst
    }

    /// `I(X_K; Y)` in bits.
    pub fn mutual_information(&self) -> Result<f64> {
        let joint: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|(_, r)| r.iter().map(Prob::approx_f64).collect())
            .collect();
        information::mutual_information(&joint)
    }

    pub fn privacy_report(&self) -> Result<PrivacyReport> {
        Ok(PrivacyReport {
            max_deviation: self.max_deviation(),
            mutual_information: self.mutual_information()?,
        })
    }

    /// Total variation distance between two laws over `(x_K, y)`.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let mut cells: BTreeMap<(&MaskedSequence, usize), (f64, f64)> = BTreeMap::new();
        for (y, row) in &self.rows {
            for (u, v) in row.iter().enumerate() {
                cells.entry((y, u)).or_default().0 = v.approx_f64();
            }
        }
        for (y, row) in &other.rows {
            for (u, v) in row.iter().enumerate() {
                cells.entry((y, u)).or_default().1 = v.approx_f64();
            }
        }
        0.5 * cells.values().map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}
