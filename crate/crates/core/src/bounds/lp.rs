//! The rate-optimal private mechanism as a linear program.
//!
//! Variables are `w(y | x)` for every `x` with `p(x) > 0` and every `y`
//! faithful to `x` (each position either kept or erased). Privacy requires
//! `sum_x p(x | u) w(y | x)` to be the same for all possible `u`, imposed
//! between consecutive assignments.

use std::collections::BTreeMap;

use serde::Serialize;

use super::simplex::{LinearProgram, SimplexStatus};
use crate::distributions::SequenceModel;
use crate::enumeration::{JointTable, SensitiveCodec};
use crate::error::{Error, Result};
use crate::mechanism::OutputDistribution;
use crate::sequence::{format_symbols, MaskedSequence, SensitiveSet, Symbol};

/// Largest sequence length the LP accepts (`2^n` masks per sequence).
pub const MAX_LP_LENGTH: usize = 12;
const ROW_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Capacity,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpEntry {
    pub x: Vec<Symbol>,
    pub y: MaskedSequence,
    pub prob: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    pub optimal_rate: f64,
    pub status: LpStatus,
    /// Non-zero `w(y | x)`, sorted by `x` then `y`.
    pub mechanism: Vec<LpEntry>,
    pub pivots: usize,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        LpSolution {
            optimal_rate: f64::NAN,
            status,
            mechanism: Vec::new(),
            pivots: 0,
        }
    }

    /// `{"rate":…,"status":…,"mechanism":[[x, y, prob], …]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let triples: Vec<_> = self
            .mechanism
            .iter()
            .map(|e| serde_json::json!([format_symbols(&e.x), e.y.to_string(), e.prob]))
            .collect();
        let rate = if self.optimal_rate.is_finite() {
            serde_json::json!(self.optimal_rate)
        } else {
            serde_json::Value::Null
        };
        serde_json::json!({
            "rate": rate,
            "status": self.status,
            "mechanism": triples,
        })
    }

    /// Joint law of `(x_K, Y)` when this mechanism is applied to `table`.
    pub fn output_distribution(&self, table: &JointTable<f64>, k: &SensitiveSet) -> OutputDistribution<f64> {
        let codec = SensitiveCodec::new(k, table.space().arities());
        let mut by_x: BTreeMap<usize, Vec<(MaskedSequence, f64)>> = BTreeMap::new();
        for e in &self.mechanism {
            by_x.entry(table.space().index(&e.x))
                .or_default()
                .push((e.y.clone(), e.prob));
        }
        OutputDistribution::from_channel(table, &codec, |idx| by_x.get(&idx).cloned().unwrap_or_default())
    }
}

fn faithful(x: &[Symbol], mask: usize) -> MaskedSequence {
    let n = x.len();
    MaskedSequence(
        (0..n)
            .map(|i| (mask >> (n - 1 - i) & 1 == 0).then_some(x[i]))
            .collect(),
    )
}

/// Maximizes the rate over all faithful, perfectly private mechanisms.
pub fn lp_optimal_rate(model: &dyn SequenceModel<f64>, k: &SensitiveSet) -> Result<LpSolution> {
    let n = model.len();
    if n > MAX_LP_LENGTH {
        return Ok(LpSolution::failed(LpStatus::Capacity));
    }
    let table = match model.joint_table() {
        Ok(t) => t,
        Err(Error::Capacity { .. }) => return Ok(LpSolution::failed(LpStatus::Capacity)),
        Err(e) => return Err(e),
    };
    lp_from_table(&table, k)
}

pub fn lp_from_table(table: &JointTable<f64>, k: &SensitiveSet) -> Result<LpSolution> {
    let space = table.space();
    let n = space.len();
    if k.positions().iter().any(|&p| p >= n) {
        return Err(Error::input("sensitive index out of range"));
    }
    let codec = SensitiveCodec::new(k, space.arities());
    let marginal = table.sensitive_marginal(&codec);
    let active: Vec<usize> = (0..codec.count()).filter(|&u| marginal[u] > 0.0).collect();
    let support: Vec<usize> = (0..space.size()).filter(|&x| table.probs()[x] > 0.0).collect();
    let masks = 1usize << n;

    let n_vars = support.len() * masks;
    let mut lp = LinearProgram::new(n_vars);
    let mut y_ids: BTreeMap<MaskedSequence, usize> = BTreeMap::new();
    let mut var_y = Vec::with_capacity(n_vars);
    for &x in &support {
        let xs = space.decode(x);
        for mask in 0..masks {
            let y = faithful(&xs, mask);
            let next = y_ids.len();
            var_y.push(*y_ids.entry(y).or_insert(next));
        }
    }
    let privacy_rows = y_ids.len() * active.len().saturating_sub(1);
    let entries = (support.len() + privacy_rows) * (n_vars + support.len() + privacy_rows + 1);
    if entries > super::simplex::TABLEAU_BUDGET {
        return Ok(LpSolution::failed(LpStatus::Capacity));
    }

    for (sx, &x) in support.iter().enumerate() {
        let p = table.probs()[x];
        let row = (0..masks).map(|mask| (sx * masks + mask, 1.0)).collect();
        lp.add_equality(row, 1.0);
        for mask in 0..masks {
            let kept = n - (mask.count_ones() as usize);
            lp.set_objective(sx * masks + mask, p * kept as f64 / n as f64);
        }
    }
    // per y, p(y | u_j) - p(y | u_{j+1}) = 0
    let mut privacy: Vec<Vec<BTreeMap<usize, f64>>> = vec![vec![BTreeMap::new(); y_ids.len()]; active.len()];
    let slot: BTreeMap<usize, usize> = active.iter().enumerate().map(|(j, &u)| (u, j)).collect();
    for (sx, &x) in support.iter().enumerate() {
        let u = table.sensitive_code(&codec, x);
        let j = slot[&u];
        let weight = table.probs()[x] / marginal[u];
        for mask in 0..masks {
            let var = sx * masks + mask;
            privacy[j][var_y[var]].insert(var, weight);
        }
    }
    for j in 0..active.len().saturating_sub(1) {
        for y in 0..y_ids.len() {
            let mut row: Vec<(usize, f64)> = privacy[j][y].iter().map(|(&v, &w)| (v, w)).collect();
            row.extend(privacy[j + 1][y].iter().map(|(&v, &w)| (v, -w)));
            if row.is_empty() {
                continue;
            }
            let scale = row.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max);
            row.iter_mut().for_each(|(_, w)| *w /= scale);
            lp.add_equality(row, 0.0);
        }
    }

    let solved = match lp.maximize() {
        Ok(s) => s,
        Err(Error::Capacity { .. }) => return Ok(LpSolution::failed(LpStatus::Capacity)),
        Err(Error::Numerical(_)) => return Ok(LpSolution::failed(LpStatus::Numerical)),
        Err(e) => return Err(e),
    };
    let status = match solved.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Infeasible => LpStatus::Infeasible,
        SimplexStatus::Unbounded | SimplexStatus::IterationLimit => LpStatus::Numerical,
    };
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            pivots: solved.pivots,
            ..LpSolution::failed(status)
        });
    }

    let mut mechanism = Vec::new();
    let mut rate = 0.0;
    let mut status = LpStatus::Optimal;
    for x in 0..space.size() {
        let xs = space.decode(x);
        match support.binary_search(&x) {
            Ok(sx) => {
                let row = &solved.x[sx * masks..(sx + 1) * masks];
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_TOLERANCE {
                    status = LpStatus::Numerical;
                }
                for (mask, &w) in row.iter().enumerate() {
                    if w > 0.0 {
                        let kept = n - mask.count_ones() as usize;
                        rate += table.probs()[x] * w * kept as f64 / n as f64;
                        mechanism.push(LpEntry {
                            x: xs.clone(),
                            y: faithful(&xs, mask),
                            prob: w / total,
                        });
                    }
                }
            }
            // unconstrained by the objective: erase everything
            Err(_) => mechanism.push(LpEntry {
                x: xs,
                y: MaskedSequence::all_erased(n),
                prob: 1.0,
            }),
        }
    }
    if (rate - solved.value).abs() > ROW_TOLERANCE {
        status = LpStatus::Numerical;
    }
    Ok(LpSolution {
        optimal_rate: rate,
        status,
        mechanism,
        pivots: solved.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ExplicitJointModel, MarkovChainModel};
    use crate::mechanism::achievable_rate_exact;
    use crate::sequence::ProcessingOrder;

    #[test]
    fn independent_model_erases_only_k() {
        let model = ExplicitJointModel::independent(&vec![vec![0.35, 0.65]; 4]).unwrap();
        let k = SensitiveSet::new(vec![0], 4).unwrap();
        let sol = lp_optimal_rate(&model, &k).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.optimal_rate - 0.75).abs() < 1e-9);
    }

    #[test]
    fn markov_lp_meets_mechanism_and_bound() {
        let chain = MarkovChainModel::binary_symmetric(4, 0.85).unwrap();
        let k = SensitiveSet::new(vec![0], 4).unwrap();
        let sol = lp_optimal_rate(&chain, &k).unwrap();
        let rate = achievable_rate_exact(&chain, &k, &ProcessingOrder::linear(4)).unwrap();
        let bound = super::super::upper_bound_rate(&chain, &k).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.optimal_rate - rate).abs() < 1e-7);
        assert!((sol.optimal_rate - bound).abs() < 1e-7);
        let out = sol.output_distribution(&chain.joint_table().unwrap(), &k);
        let rep = out.privacy_report().unwrap();
        assert!(rep.mutual_information < 1e-7 && rep.max_deviation < 1e-7);
        assert!((out.rate() - sol.optimal_rate).abs() < 1e-8);
    }

    #[test]
    fn json_export_shape() {
        let chain = MarkovChainModel::binary_symmetric(2, 0.7).unwrap();
        let k = SensitiveSet::new(vec![0], 2).unwrap();
        let v = lp_optimal_rate(&chain, &k).unwrap().to_json();
        assert_eq!(v["status"], "optimal");
        let first = &v["mechanism"][0];
        assert_eq!(first[0].as_str().unwrap().len(), 2);
        assert!(first[2].as_f64().unwrap() > 0.0);
        // rows per x sum to one
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for t in v["mechanism"].as_array().unwrap() {
            *sums.entry(t[0].as_str().unwrap().into()).or_default() += t[2].as_f64().unwrap();
        }
        assert!(sums.values().all(|s| (s - 1.0).abs() < 1e-8));
    }

    #[test]
    fn zero_probability_inputs_get_a_fixed_row() {
        let model = ExplicitJointModel::new(2, crate::Alphabet::BINARY, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let k = SensitiveSet::new(vec![0], 2).unwrap();
        let sol = lp_optimal_rate(&model, &k).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.optimal_rate.abs() < 1e-9);
        assert!(sol
            .mechanism
            .iter()
            .any(|e| e.x == vec![0, 1] && e.y == MaskedSequence::all_erased(2) && e.prob == 1.0));
    }
}
