//! Progression-free subsets of `{1..N}`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sets are certified by a pair scan while `|A|²` stays below this.
pub const CERTIFY_PAIR_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ternary,
    Behrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionResult {
    #[serde(rename = "N")]
    pub n: u64,
    pub method: Method,
    pub set: Vec<i64>,
    pub size: usize,
    pub certified_free: bool,
    /// Behrend parameters: dimension, digit bound and squared radius.
    pub dim: Option<u32>,
    pub base_m: Option<u64>,
    pub radius_sq: Option<u64>,
}

/// No `a1 ≠ a2` in `A` with `2 a2 - a1 ∈ A`.
pub fn is_3ap_free(a: &[i64]) -> bool {
    let set: HashSet<i64> = a.iter().copied().collect();
    let mut v: Vec<i64> = set.iter().copied().collect();
    v.sort_unstable();
    for (i, &a1) in v.iter().enumerate() {
        for &a2 in &v[i + 1..] {
            if set.contains(&(2 * a2 - a1)) {
                return false;
            }
        }
    }
    true
}

fn certify(a: &[i64]) -> bool {
    let k = a.len() as u64;
    k * k <= CERTIFY_PAIR_CAP && is_3ap_free(a)
}

/// `{n ≤ N : n - 1 has only digits 0 and 1 in base 3}`.
pub fn ternary_free_set(n: u64) -> Result<ConstructionResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let mut set = Vec::new();
    // enumerate digit patterns as binary numbers read in base 3
    let mut bits = 0u64;
    loop {
        let mut v = 0u64;
        let mut p = 1u64;
        let mut b = bits;
        while b > 0 {
            if b & 1 == 1 {
                v += p;
            }
            p *= 3;
            b >>= 1;
        }
        if v + 1 > n {
            break;
        }
        set.push(v as i64 + 1);
        bits += 1;
    }
    Ok(ConstructionResult {
        n,
        method: Method::Ternary,
        size: set.len(),
        certified_free: certify(&set),
        set,
        dim: None,
        base_m: None,
        radius_sq: None,
    })
}

/// Largest `m` with `(2m - 1)^d ≤ N`, or `None` when even `m = 1` fails.
fn max_base(n: u64, d: u32) -> Option<u64> {
    let fits = |m: u64| -> bool {
        let b = 2 * m - 1;
        let mut acc: u64 = 1;
        for _ in 0..d {
            acc = match acc.checked_mul(b) {
                Some(v) if v <= n => v,
                _ => return false,
            };
        }
        true
    };
    if !fits(1) {
        return None;
    }
    let (mut lo, mut hi) = (1u64, 2u64);
    while fits(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Points of `[0, m)^d` on the most popular sphere (smallest radius on
/// ties), mapped by `x ↦ 1 + Σ x_i (2m-1)^i`.
fn behrend_fixed(n: u64, d: u32, m: u64) -> (Vec<i64>, u64) {
    let base = 2 * m - 1;
    let total = m.pow(d);
    let mut pop: BTreeMap<u64, u64> = BTreeMap::new();
    let point = |mut idx: u64| -> (u64, u64) {
        let (mut r2, mut val, mut p) = (0u64, 0u64, 1u64);
        for _ in 0..d {
            let x = idx % m;
            idx /= m;
            r2 += x * x;
            val += x * p;
            p *= base;
        }
        (r2, val)
    };
    for idx in 0..total {
        *pop.entry(point(idx).0).or_default() += 1;
    }
    let mut best = (0u64, 0u64);
    for (&r2, &c) in &pop {
        if c > best.1 {
            best = (r2, c);
        }
    }
    let mut set: Vec<i64> = (0..total)
        .map(point)
        .filter(|&(r2, _)| r2 == best.0)
        .map(|(_, v)| v as i64 + 1)
        .collect();
    set.sort_unstable();
    debug_assert!(set.iter().all(|&v| v as u64 <= n));
    (set, best.0)
}

/// Behrend's sphere construction. With `dim = None` every feasible
/// dimension is tried and the largest set kept (smallest `d` on ties).
pub fn behrend_set(n: u64, dim: Option<u32>) -> Result<ConstructionResult> {
    if n < 8 {
        return Err(Error::NoConstruction(n as usize));
    }
    let dims: Vec<u32> = match dim {
        Some(0) => return Err(Error::InvalidArgument("dimension must be >= 1".into())),
        Some(d) => vec![d],
        None => (1..=64).filter(|&d| max_base(n, d).is_some_and(|m| m >= 2)).collect(),
    };
    let mut best: Option<(Vec<i64>, u32, u64, u64)> = None;
    for d in dims {
        let m = max_base(n, d).ok_or(Error::NoConstruction(n as usize))?;
        let (set, r2) = behrend_fixed(n, d, m);
        if best.as_ref().is_none_or(|b| set.len() > b.0.len()) {
            best = Some((set, d, m, r2));
        }
    }
    let (set, d, m, r2) = best.ok_or(Error::NoConstruction(n as usize))?;
    Ok(ConstructionResult {
        n,
        method: Method::Behrend,
        size: set.len(),
        certified_free: certify(&set),
        set,
        dim: Some(d),
        base_m: Some(m),
        radius_sq: Some(r2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ternary_examples() {
        assert_eq!(ternary_free_set(2).unwrap().set, vec![1, 2]);
        let r = ternary_free_set(14).unwrap();
        assert_eq!(r.set, vec![1, 2, 4, 5, 10, 11, 13, 14]);
        assert!(r.certified_free);
    }

    #[test]
    fn ternary_size_matches_digit_count() {
        for n in [1u64, 3, 10, 27, 28, 100, 728, 729, 730, 5000] {
            let direct = (0..n)
                .filter(|&v| {
                    let mut v = v;
                    while v > 0 {
                        if v % 3 == 2 {
                            return false;
                        }
                        v /= 3;
                    }
                    true
                })
                .count();
            assert_eq!(ternary_free_set(n).unwrap().size, direct, "N = {n}");
        }
    }

    #[test]
    fn free_checks() {
        assert!(!is_3ap_free(&[1, 2, 3]));
        assert!(is_3ap_free(&[]));
        assert!(is_3ap_free(&[7]));
        assert!(is_3ap_free(&[1, 2, 4, 5]));
    }

    #[test]
    fn behrend_small() {
        assert!(matches!(behrend_set(7, None), Err(Error::NoConstruction(7))));
        let r = behrend_set(10_000, None).unwrap();
        assert!(r.size >= 20 && r.certified_free);
        assert!(r.set.iter().all(|&v| (1..=10_000).contains(&v)));
        let one = behrend_set(50, Some(1)).unwrap();
        assert_eq!(one.size, 1);
    }

    #[test]
    fn spheres_hold_no_lattice_progressions() {
        for d in 1..=3u32 {
            for m in 1..=4i64 {
                let pts: Vec<Vec<i64>> = (0..m.pow(d))
                    .map(|mut i| {
                        (0..d)
                            .map(|_| {
                                let x = i % m;
                                i /= m;
                                x
                            })
                            .collect()
                    })
                    .collect();
                let r2 = |p: &Vec<i64>| p.iter().map(|x| x * x).sum::<i64>();
                for x in &pts {
                    for y in &pts {
                        if x == y || r2(x) != r2(y) {
                            continue;
                        }
                        let z: Vec<i64> = y.iter().zip(x).map(|(b, a)| 2 * b - a).collect();
                        assert!(!pts.contains(&z) || r2(&z) != r2(x));
                    }
                }
            }
        }
    }
}
