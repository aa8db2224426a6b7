//! Optimal processing order is as hard as minimum hitting set.
//!
//! A hitting-set instance (universe `{1..m}`, sets `S_1..S_k`) becomes a
//! sequence model: every membership `i ∈ S_j` is an independent uniform bit
//! `b_ij`, position `i <= m` holds the tuple of its bits, and position `m + j`
//! holds the parity of the bits of `S_j`. The parities are sensitive. Under
//! this model every release probability of the mechanism is 0 or 1, and the
//! erased positions of an ordering are given by a combinatorial rule.

use std::path::Path;

use itertools::Itertools;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::distributions::SequenceModel;
use crate::error::{Error, Result};
use crate::mechanism::{EnumeratedMechanism, Visit};
use crate::scalar::Prob;
use crate::sequence::{ProcessingOrder, SensitiveSet, Symbol};

pub const MAX_ORDERING_UNIVERSE: usize = 8;
pub const MAX_HITTING_UNIVERSE: usize = 20;
/// Edge bits per universe element; tuples must fit a symbol.
const MAX_DEGREE: usize = 8;

/// Universe `{0..m}` and sets over it (0-based; JSON is 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingSetInstance {
    m: usize,
    sets: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    m: usize,
    sets: Vec<Vec<usize>>,
}

impl HittingSetInstance {
    pub fn new(m: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 || sets.is_empty() {
            return Err(Error::input("instance needs a non-empty universe and at least one set"));
        }
        let mut covered = vec![false; m];
        let mut clean = Vec::with_capacity(sets.len());
        for (j, set) in sets.into_iter().enumerate() {
            let set: Vec<usize> = set.into_iter().sorted().dedup().collect();
            if set.is_empty() {
                return Err(Error::input(format!("set {} is empty", j + 1)));
            }
            if let Some(&i) = set.iter().find(|&&i| i >= m) {
                return Err(Error::input(format!("set {} names element {} outside 1..={m}", j + 1, i + 1)));
            }
            set.iter().for_each(|&i| covered[i] = true);
            clean.push(set);
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::input(format!("element {} is in no set", i + 1)));
        }
        let inst = HittingSetInstance { m, sets: clean };
        if let Some(i) = (0..m).find(|&i| inst.degree(i) > MAX_DEGREE) {
            return Err(Error::input(format!("element {} is in more than {MAX_DEGREE} sets", i + 1)));
        }
        Ok(inst)
    }

    pub fn from_one_based(m: usize, sets: &[Vec<usize>]) -> Result<Self> {
        if sets.iter().flatten().any(|&i| i == 0) {
            return Err(Error::input("set elements are 1-based"));
        }
        Self::new(m, sets.iter().map(|s| s.iter().map(|i| i - 1).collect()).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(text)?;
        Self::from_one_based(raw.m, &raw.sets)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let raw = InstanceJson {
            m: self.m,
            sets: self.sets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect(),
        };
        serde_json::to_string(&raw).expect("plain data serializes")
    }

    /// Random instance: each set a uniform non-empty subset, then every
    /// uncovered element joins a random set.
    pub fn random(m: usize, k: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::input("instance needs m >= 1 and k >= 1"));
        }
        let mut sets: Vec<Vec<usize>> = (0..k)
            .map(|_| {
                let mask = rng.random_range(1..1usize << m);
                (0..m).filter(|i| mask >> i & 1 == 1).collect()
            })
            .collect();
        for i in 0..m {
            if !sets.iter().any(|s| s.contains(&i)) {
                let j = rng.random_range(0..k);
                sets[j].push(i);
            }
        }
        Self::new(m, sets)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn degree(&self, i: usize) -> usize {
        self.sets.iter().filter(|s| s.contains(&i)).count()
    }

    pub fn edges(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_hitting_set(&self, v: &[usize]) -> bool {
        self.sets.iter().all(|s| s.iter().any(|i| v.contains(i)))
    }
}

/// Parity model of an instance. Position `i < m` carries the bits of element
/// `i` packed little-endian in set order; position `m + j` the parity of `S_j`.
#[derive(Debug, Clone)]
pub struct ParityModel {
    instance: HittingSetInstance,
    /// `slot[j][t]`: bit index of `S_j`'s `t`-th member inside that member's tuple.
    slot: Vec<Vec<usize>>,
}

impl ParityModel {
    pub fn new(instance: HittingSetInstance) -> Self {
        let mut seen = vec![0usize; instance.m];
        let slot = instance
            .sets
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&i| {
                        seen[i] += 1;
                        seen[i] - 1
                    })
                    .collect()
            })
            .collect();
        ParityModel { instance, slot }
    }

    pub fn instance(&self) -> &HittingSetInstance {
        &self.instance
    }

    /// Parity positions, which are sensitive.
    pub fn sensitive(&self) -> SensitiveSet {
        let (m, k) = (self.instance.m, self.instance.k());
        SensitiveSet::new((m..m + k).collect(), m + k).expect("parity positions in range")
    }

    fn consistent(&self, x: &[Symbol]) -> bool {
        let m = self.instance.m;
        self.instance.sets.iter().enumerate().all(|(j, s)| {
            let parity = s
                .iter()
                .zip(&self.slot[j])
                .fold(0u8, |acc, (&i, &t)| acc ^ (x[i] >> t & 1));
            parity == x[m + j]
        })
    }
}

impl<T: Prob> SequenceModel<T> for ParityModel {
    fn len(&self) -> usize {
        self.instance.m + self.instance.k()
    }

    fn arity(&self, i: usize) -> usize {
        if i < self.instance.m {
            1 << self.instance.degree(i)
        } else {
            2
        }
    }

    fn joint_prob(&self, x: &[Symbol]) -> Result<T> {
        <Self as SequenceModel<T>>::check_sequence(self, x)?;
        Ok(if self.consistent(x) {
            T::one() / T::from_count(1 << self.instance.edges())
        } else {
            T::zero()
        })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<Symbol> {
        let m = self.instance.m;
        let mut x: Vec<Symbol> = (0..m)
            .map(|i| rng.random_range(0..1usize << self.instance.degree(i)) as Symbol)
            .collect();
        for (j, s) in self.instance.sets.iter().enumerate() {
            let parity = s
                .iter()
                .zip(&self.slot[j])
                .fold(0u8, |acc, (&i, &t)| acc ^ (x[i] >> t & 1));
            x.push(parity);
        }
        x
    }
}

fn check_ordering(instance: &HittingSetInstance, ordering: &[usize]) -> Result<()> {
    let mut seen = vec![false; instance.m];
    if ordering.len() != instance.m || ordering.iter().any(|&o| o >= instance.m || std::mem::replace(&mut seen[o], true)) {
        return Err(Error::input("ordering must be a permutation of the universe"));
    }
    Ok(())
}

/// Elements erased when processing the universe in `ordering`: `o` is erased
/// iff some set lies inside the earlier released elements plus `o`.
pub fn deterministic_erasure_set(instance: &HittingSetInstance, ordering: &[usize]) -> Result<Vec<usize>> {
    check_ordering(instance, ordering)?;
    let mut released = vec![false; instance.m];
    let mut erased = Vec::new();
    for &o in ordering {
        let closes = instance
            .sets
            .iter()
            .any(|s| s.iter().all(|&i| i == o || released[i]));
        if closes {
            erased.push(o);
        } else {
            released[o] = true;
        }
    }
    erased.sort_unstable();
    Ok(erased)
}

/// Full processing order: `ordering` over the universe with the parity
/// positions inserted at `parity_slots` (indices into the final order).
pub fn full_order(instance: &HittingSetInstance, ordering: &[usize], parity_at: usize) -> Result<ProcessingOrder> {
    check_ordering(instance, ordering)?;
    let parity_at = parity_at.min(ordering.len());
    let m = instance.m;
    let perm = ordering[..parity_at]
        .iter()
        .copied()
        .chain(m..m + instance.k())
        .chain(ordering[parity_at..].iter().copied())
        .collect();
    ProcessingOrder::new(perm)
}

/// Erased universe elements found by running the generic mechanism on the
/// parity model, if every release probability is exactly 0 or 1 and every
/// reachable output erases the same elements.
pub fn mechanism_erasure_set<T: Prob>(
    instance: &HittingSetInstance,
    order: ProcessingOrder,
) -> Result<Option<Vec<usize>>> {
    let model = ParityModel::new(instance.clone());
    let k = model.sensitive();
    let mech = EnumeratedMechanism::<T>::new(&model, k, order)?;
    let m = instance.m;
    let mut deterministic = true;
    let mut erased: Option<Vec<usize>> = None;
    mech.walk(&mut |v| {
        match v {
            Visit::Step(step) => deterministic &= step.release.is_deterministic(),
            Visit::Leaf { prefix, weights } => {
                if !weights.truth_mass().is_positive() {
                    return Ok(());
                }
                let set: Vec<usize> = prefix
                    .iter()
                    .filter(|&&(i, o)| i < m && o.is_none())
                    .map(|&(i, _)| i)
                    .sorted()
                    .collect();
                match &erased {
                    None => erased = Some(set),
                    Some(e) if *e != set => deterministic = false,
                    _ => {}
                }
            }
        }
        Ok(())
    })?;
    Ok(if deterministic { erased } else { None })
}

/// Runs the mechanism over every bit assignment and checks that it is
/// deterministic and erases exactly [`deterministic_erasure_set`].
pub fn verify_deterministic_rule<T: Prob>(instance: &HittingSetInstance, ordering: &[usize]) -> Result<bool> {
    let expected = deterministic_erasure_set(instance, ordering)?;
    let order = full_order(instance, ordering, instance.m)?;
    Ok(mechanism_erasure_set::<T>(instance, order)?.as_ref() == Some(&expected))
}

/// `min_pi |E_pi|` over all orderings of the universe, with a minimizing ordering.
pub fn best_ordering_exhaustive(instance: &HittingSetInstance) -> Result<(usize, Vec<usize>)> {
    let m = instance.m;
    if m > MAX_ORDERING_UNIVERSE {
        return Err(Error::capacity("orderings universe", m as f64, MAX_ORDERING_UNIVERSE as f64));
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    for perm in (0..m).permutations(m) {
        let e = deterministic_erasure_set(instance, &perm)?.len();
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, perm));
        }
    }
    Ok(best.expect("at least one ordering"))
}

/// Smallest hitting set by scanning subsets in order of size.
pub fn min_hitting_set_bruteforce(instance: &HittingSetInstance) -> Result<(usize, Vec<usize>)> {
    let m = instance.m;
    if m > MAX_HITTING_UNIVERSE {
        return Err(Error::capacity("hitting-set universe", m as f64, MAX_HITTING_UNIVERSE as f64));
    }
    for size in 0..=m {
        if let Some(v) = (0..m).combinations(size).find(|v| instance.is_hitting_set(v)) {
            return Ok((size, v));
        }
    }
    unreachable!("the whole universe hits every set")
}

/// Ordering that visits everything outside `v` first, then `v`.
pub fn hitting_set_last_ordering(instance: &HittingSetInstance, v: &[usize]) -> Vec<usize> {
    (0..instance.m)
        .filter(|i| !v.contains(i))
        .chain(v.iter().copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardnessReport {
    pub e_star: usize,
    pub h_star: usize,
    /// 1-based.
    pub ordering: Vec<usize>,
    /// 1-based.
    pub witness: Vec<usize>,
}

pub fn hardness_report(instance: &HittingSetInstance) -> Result<HardnessReport> {
    let (e_star, ordering) = best_ordering_exhaustive(instance)?;
    let (h_star, witness) = min_hitting_set_bruteforce(instance)?;
    Ok(HardnessReport {
        e_star,
        h_star,
        ordering: ordering.iter().map(|i| i + 1).collect(),
        witness: witness.iter().map(|i| i + 1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(m: usize, sets: &[&[usize]]) -> HittingSetInstance {
        HittingSetInstance::from_one_based(m, &sets.iter().map(|s| s.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_edge_model() {
        let model = ParityModel::new(inst(1, &[&[1]]));
        assert_eq!(SequenceModel::<f64>::arities(&model), vec![2, 2]);
        let p: Exact = model.joint_prob(&[0, 0]).unwrap();
        assert_eq!(p, Exact::new(1, 2));
        let p: Exact = model.joint_prob(&[0, 1]).unwrap();
        assert_eq!(p, Exact::new(0, 1));
    }

    #[test]
    fn parity_is_independent_of_each_member() {
        let model = ParityModel::new(inst(2, &[&[1, 2]]));
        let table = SequenceModel::<Exact>::joint_table(&model).unwrap();
        for i in 0..2 {
            for a in 0..2u8 {
                for b in 0..2u8 {
                    let joint = table
                        .space()
                        .iter()
                        .filter(|x| x[i] == a && x[2] == b)
                        .map(|x| table.prob(&x))
                        .fold(Exact::new(0, 1), |acc, p| acc + p);
                    assert_eq!(joint, Exact::new(1, 4));
                }
            }
        }
    }

    #[test]
    fn samples_are_consistent() {
        let model = ParityModel::new(inst(3, &[&[1, 2], &[2, 3], &[1, 3]]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let x = SequenceModel::<f64>::sample(&model, &mut rng);
            assert!(SequenceModel::<f64>::joint_prob(&model, &x).unwrap() > 0.0);
        }
    }

    #[test]
    fn rule_examples() {
        assert_eq!(deterministic_erasure_set(&inst(2, &[&[1], &[2]]), &[1, 0]).unwrap(), vec![0, 1]);
        assert_eq!(deterministic_erasure_set(&inst(2, &[&[1, 2]]), &[0, 1]).unwrap(), vec![1]);
        let chain = inst(3, &[&[1, 2], &[2, 3]]);
        assert_eq!(deterministic_erasure_set(&chain, &[0, 2, 1]).unwrap(), vec![1]);
        assert_eq!(deterministic_erasure_set(&chain, &[1, 0, 2]).unwrap(), vec![0, 2]);
    }

    #[test]
    fn exhaustive_and_bruteforce_examples() {
        for (i, e, h) in [
            (inst(2, &[&[1, 2]]), 1, 1),
            (inst(2, &[&[1], &[2]]), 2, 2),
            (inst(3, &[&[1, 2], &[2, 3]]), 1, 1),
        ] {
            assert_eq!(best_ordering_exhaustive(&i).unwrap().0, e);
            assert_eq!(min_hitting_set_bruteforce(&i).unwrap().0, h);
        }
        assert_eq!(min_hitting_set_bruteforce(&inst(3, &[&[1, 2], &[2, 3]])).unwrap().1, vec![1]);
    }

    #[test]
    fn mechanism_is_deterministic_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 1..=3 {
            for k in 1..=2 {
                for _ in 0..4 {
                    let i = HittingSetInstance::random(m, k, &mut rng).unwrap();
                    for perm in (0..m).permutations(m) {
                        assert!(verify_deterministic_rule::<Exact>(&i, &perm).unwrap(), "{i:?} {perm:?}");
                    }
                }
            }
        }
        let singletons = inst(3, &[&[1], &[3], &[2, 3]]);
        assert!(verify_deterministic_rule::<Exact>(&singletons, &[0, 1, 2]).unwrap());
        assert_eq!(deterministic_erasure_set(&singletons, &[2, 1, 0]).unwrap(), vec![0, 2]);
    }

    #[test]
    fn parity_placement_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let i = HittingSetInstance::random(3, 2, &mut rng).unwrap();
            for perm in (0..3).permutations(3) {
                let expected = deterministic_erasure_set(&i, &perm).unwrap();
                for at in 0..=3 {
                    let order = full_order(&i, &perm, at).unwrap();
                    assert_eq!(mechanism_erasure_set::<Exact>(&i, order).unwrap(), Some(expected.clone()));
                }
            }
        }
    }

    #[test]
    fn both_directions_of_the_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let i = HittingSetInstance::random(5, 3, &mut rng).unwrap();
            for perm in (0..5).permutations(5).step_by(7) {
                assert!(i.is_hitting_set(&deterministic_erasure_set(&i, &perm).unwrap()));
            }
            let (h, v) = min_hitting_set_bruteforce(&i).unwrap();
            let last = hitting_set_last_ordering(&i, &v);
            assert!(deterministic_erasure_set(&i, &last).unwrap().len() <= h);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let i = HittingSetInstance::from_json(r#"{"m": 3, "sets": [[1, 2], [2, 3]]}"#).unwrap();
        assert_eq!(i.sets(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(HittingSetInstance::from_json(&i.to_json()).unwrap(), i);
        assert!(HittingSetInstance::from_json(r#"{"m": 3, "sets": [[1, 2]]}"#).is_err());
        assert!(HittingSetInstance::from_json(r#"{"m": 2, "sets": [[], [1, 2]]}"#).is_err());
        let r = hardness_report(&i).unwrap();
        assert_eq!((r.e_star, r.h_star, r.witness.clone()), (1, 1, vec![2]));
    }

    #[test]
    fn capacity_guards() {
        let sets: Vec<Vec<usize>> = (1..=9).map(|i| vec![i]).collect();
        let big = HittingSetInstance::from_one_based(9, &sets).unwrap();
        assert!(matches!(best_ordering_exhaustive(&big), Err(Error::Capacity { .. })));
    }
}
