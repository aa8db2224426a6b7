//! Entropy, mutual information and relative entropy of discrete
//! distributions, in bits. `0 log 0 = 0` throughout.

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

fn check(what: &str, p: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for v in p {
        if !(v >= 0.0) {
            return Err(Error::input(format!("{what} has a negative or NaN entry")));
        }
        total += v;
    }
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::input(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub fn entropy(p: &[f64]) -> Result<f64> {
    check("distribution", p.iter().copied())?;
    Ok(-p.iter().map(|&v| plogp(v)).sum::<f64>())
}

/// Binary entropy function.
pub fn binary_entropy(p: f64) -> f64 {
    -plogp(p) - plogp(1.0 - p)
}

/// `I(A; B)` for a joint table with rows indexed by `A` and columns by `B`.
pub fn mutual_information(joint: &[Vec<f64>]) -> Result<f64> {
    check("joint distribution", joint.iter().flatten().copied())?;
    let cols = joint.first().map_or(0, Vec::len);
    if joint.iter().any(|r| r.len() != cols) {
        return Err(Error::input("joint table rows differ in length"));
    }
    let row_m: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let col_m: Vec<f64> = (0..cols).map(|c| joint.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (r, row) in joint.iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (row_m[r] * col_m[c])).log2();
            }
        }
    }
    Ok(mi)
}

/// `H(A | B)` for a joint table with rows `A`, columns `B`.
pub fn conditional_entropy(joint: &[Vec<f64>]) -> Result<f64> {
    check("joint distribution", joint.iter().flatten().copied())?;
    let cols = joint.first().map_or(0, Vec::len);
    let col_m: Vec<f64> = (0..cols).map(|c| joint.iter().map(|r| r[c]).sum()).collect();
    let mut h = 0.0;
    for row in joint {
        for (c, &p) in row.iter().enumerate() {
            if p > 0.0 {
                h -= p * (p / col_m[c]).log2();
            }
        }
    }
    Ok(h)
}

/// `D(p || q)`; `+inf` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::input("distributions differ in length"));
    }
    check("p", p.iter().copied())?;
    check("q", q.iter().copied())?;
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).log2();
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn product_joint_has_zero_information() {
        let joint = vec![vec![0.12, 0.28], vec![0.18, 0.42]];
        assert!(mutual_information(&joint).unwrap().abs() < 1e-15);
    }

    #[test]
    fn correlated_uniform_pair_is_one_bit() {
        let joint = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        assert!((mutual_information(&joint).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noisy_pair_against_direct_definition() {
        let joint = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
        let closed = 1.0 - binary_entropy(0.2);
        // brute-force definition: sum p log p / (pa pb) with marginals 1/2
        let brute: f64 = [0.4f64, 0.1, 0.1, 0.4]
            .iter()
            .map(|p| p * (p / 0.25).log2())
            .sum();
        let mi = mutual_information(&joint).unwrap();
        assert!((mi - closed).abs() < 1e-12);
        assert!((mi - brute).abs() < 1e-12);
        assert!((mi - 0.278_071_905_112_638_4).abs() < 1e-12);
    }

    #[test]
    fn kl_support_violation_is_infinite() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
    }

    #[test]
    fn unnormalized_input_rejected() {
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(mutual_information(&[vec![0.5, 0.2]]).is_err());
    }

    fn dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("non-zero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn kl_is_non_negative(p in dist(5), q in dist(5)) {
            prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        }

        #[test]
        fn information_is_entropy_minus_conditional(flat in dist(6)) {
            let joint: Vec<Vec<f64>> = flat.chunks(3).map(<[f64]>::to_vec).collect();
            let row_m: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
            let h = entropy(&row_m).unwrap();
            let hc = conditional_entropy(&joint).unwrap();
            let mi = mutual_information(&joint).unwrap();
            prop_assert!((mi - (h - hc)).abs() < 1e-10);
        }
    }
}
