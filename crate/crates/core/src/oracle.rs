//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with the production routines beyond the group
//! indexing: characters are evaluated from coordinates with `exp`, sums are
//! plain loops, and counts are plain enumerations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{DensityFn, Group, Subset, ORACLE_SIZE_CAP};

/// `γ(x)` from coordinates, without the phase-residue shortcut.
pub fn character(g: &Group, gamma: usize, x: usize) -> Complex64 {
    let gc = g.coords(gamma);
    let xc = g.coords(x);
    let theta: f64 = g
        .orders()
        .iter()
        .zip(gc.iter().zip(&xc))
        .map(|(&n, (&a, &b))| ((a * b) % n) as f64 / n as f64)
        .sum();
    Complex64::from_polar(1.0, 2.0 * PI * theta)
}

/// `(1/N) Σ_x f(x) conj(γ(x))` for every `γ`.
pub fn dft(f: &DensityFn) -> Result<Vec<Complex64>> {
    let g = f.group();
    g.require_cap(ORACLE_SIZE_CAP)?;
    let n = g.size();
    Ok((0..n)
        .map(|gamma| {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..n {
                acc += f.value(x) * character(g, gamma, x).conj();
            }
            acc / n as f64
        })
        .collect())
}

/// `(1/N) Σ_y f(y) h(x - y)` for every `x`.
pub fn convolve(f: &DensityFn, h: &DensityFn) -> Result<Vec<Complex64>> {
    let g = f.group();
    if g != h.group() {
        return Err(Error::GroupMismatch);
    }
    g.require_cap(ORACLE_SIZE_CAP)?;
    let n = g.size();
    Ok((0..n)
        .map(|x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..n {
                acc += f.value(y) * h.value(g.sub(x, y));
            }
            acc / n as f64
        })
        .collect())
}

/// `(1/N) Σ_x f(x) conj(h(x)) w(x)`.
pub fn inner_product(f: &DensityFn, h: &DensityFn, w: &DensityFn) -> Complex64 {
    let n = f.group().size();
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..n {
        acc += f.value(x) * h.value(x).conj() * w.value(x);
    }
    acc / n as f64
}

/// `|1 - γ(x)|` from the complex exponential.
pub fn char_distance(g: &Group, gamma: usize, x: usize) -> f64 {
    (Complex64::new(1.0, 0.0) - character(g, gamma, x)).norm()
}

/// `#{(a1, a2, a3) in A^3 : a1 + a3 = 2 a2}` by triple enumeration.
pub fn triple_count(a: &Subset) -> u64 {
    let g = a.group();
    let m = a.members();
    let mut count = 0u64;
    for &a1 in m {
        for &a2 in m {
            let twice = g.add(a2, a2);
            for &a3 in m {
                if g.add(a1, a3) == twice {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Number of integer triples `(a1, a2, a3)` in `A` with `a1 + a3 = 2 a2`,
/// trivial ones included, and the number of nontrivial ones.
pub fn integer_3ap_counts(a: &[i64]) -> (u64, u64) {
    let mut all = 0u64;
    for &a1 in a {
        for &a2 in a {
            for &a3 in a {
                if a1 + a3 == 2 * a2 {
                    all += 1;
                }
            }
        }
    }
    let distinct = {
        let mut v = a.to_vec();
        v.sort_unstable();
        v.dedup();
        v.len() as u64
    };
    (all, all - distinct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonality_small_groups() {
        for orders in [vec![8], vec![2, 4], vec![3, 3], vec![2, 2, 2]] {
            let g = Group::new(&orders).unwrap();
            let n = g.size();
            for a in 0..n {
                for b in 0..n {
                    let s: Complex64 = (0..n)
                        .map(|x| character(&g, a, x) * character(&g, b, x).conj())
                        .sum::<Complex64>()
                        / n as f64;
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((s - want).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn integer_counts() {
        assert_eq!(integer_3ap_counts(&[1, 2, 3]), (5, 2));
        assert_eq!(integer_3ap_counts(&[1, 2, 4, 5]), (4, 0));
    }
}
