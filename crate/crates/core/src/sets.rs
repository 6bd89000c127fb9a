//! Exact integer set arithmetic: representation counts, sumsets, overlaps.

use crate::error::{Error, Result};
use crate::group::Subset;
use crate::par;

/// `r(x) = #{(a, b) in X x Y : a + b = x}` for every `x`.
pub fn representation_counts(x: &Subset, y: &Subset) -> Result<Vec<u64>> {
    if x.group() != y.group() {
        return Err(Error::GroupMismatch);
    }
    let g = x.group();
    let n = g.size();
    let (outer, inner) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let chunk = 64usize;
    let chunks: Vec<&[usize]> = outer.members().chunks(chunk).collect();
    let partials = par::map_slice(&chunks, |part| {
        let mut acc = vec![0u64; n];
        for &a in part.iter() {
            for &b in inner.members() {
                acc[g.add(a, b)] += 1;
            }
        }
        acc
    });
    let mut out = vec![0u64; n];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// `X + Y`.
pub fn sumset(x: &Subset, y: &Subset) -> Result<Subset> {
    let r = representation_counts(x, y)?;
    Subset::from_mask(x.group(), r.into_iter().map(|c| c > 0).collect())
}

/// `|X ∩ (t + Y)|` for every `t`.
pub fn overlap_counts(x: &Subset, y: &Subset) -> Result<Vec<u64>> {
    representation_counts(x, &y.neg())
}

/// `|X ∩ (t + Y)|` for the listed `t` only; cheaper when few shifts matter.
pub fn overlap_counts_at(x: &Subset, y: &Subset, shifts: &[usize]) -> Result<Vec<u64>> {
    if x.group() != y.group() {
        return Err(Error::GroupMismatch);
    }
    let g = x.group();
    Ok(par::map_slice(shifts, |&t| {
        y.members()
            .iter()
            .filter(|&&b| x.contains(g.add(t, b)))
            .count() as u64
    }))
}
