//! Finite abelian groups as products of cyclic factors, their subsets, and
//! densities with respect to Haar probability measure.
//!
//! Elements and characters share one index space: the lexicographic rank of
//! the coordinate tuple, first factor most significant. A character with
//! coordinates `g` acts by `x -> exp(2 pi i sum_j g_j x_j / n_j)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on group size for transform operations.
pub const TRANSFORM_SIZE_CAP: usize = 1 << 20;
/// Default cap on group size for brute-force oracles.
pub const ORACLE_SIZE_CAP: usize = 1 << 12;

#[derive(Debug)]
struct GroupInner {
    orders: Vec<usize>,
    size: usize,
    strides: Vec<usize>,
    // size / n_j, used to express phases as residues mod `size`
    phase_weights: Vec<usize>,
}

/// A finite abelian group `Z/n_1 x ... x Z/n_m`. Cheap to clone.
#[derive(Clone)]
pub struct Group {
    inner: Arc<GroupInner>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.orders == other.inner.orders
    }
}
impl Eq for Group {}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({})", self.spec_string())
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

/// An element of a group, as reduced coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub coords: Vec<usize>,
}

/// A character of a group, as reduced coordinates in the dual.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualElement {
    pub coords: Vec<usize>,
}

impl Group {
    /// Build a group, refusing sizes above [`TRANSFORM_SIZE_CAP`].
    pub fn new(orders: &[usize]) -> Result<Self> {
        Self::with_cap(orders, TRANSFORM_SIZE_CAP)
    }

    pub fn with_cap(orders: &[usize], cap: usize) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors".into()));
        }
        if let Some(&bad) = orders.iter().find(|&&n| n == 0) {
            return Err(Error::InvalidGroup(format!("factor order {bad} must be >= 1")));
        }
        let mut size: usize = 1;
        for &n in orders {
            size = size
                .checked_mul(n)
                .filter(|&s| s <= cap)
                .ok_or(Error::SizeCapExceeded {
                    size: orders.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
                    cap,
                })?;
        }
        let m = orders.len();
        let mut strides = vec![1usize; m];
        for j in (0..m.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * orders[j + 1];
        }
        let phase_weights = orders.iter().map(|&n| size / n).collect();
        Ok(Group {
            inner: Arc::new(GroupInner {
                orders: orders.to_vec(),
                size,
                strides,
                phase_weights,
            }),
        })
    }

    /// The cyclic group `Z/nZ`.
    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    /// Parse a spec string such as `Z101`, `Z3^4` or `Z4xZ9`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut orders = Vec::new();
        for part in spec.trim().split(['x', 'X', '*']) {
            let part = part.trim();
            let body = part
                .strip_prefix('Z')
                .or_else(|| part.strip_prefix('z'))
                .ok_or_else(|| Error::Parse(format!("bad group factor '{part}' in '{spec}'")))?;
            let (n, k) = match body.split_once('^') {
                Some((n, k)) => (n, k),
                None => (body, "1"),
            };
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad factor order '{n}' in '{spec}'")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent '{k}' in '{spec}'")))?;
            if k == 0 {
                return Err(Error::Parse(format!("zero exponent in '{spec}'")));
            }
            orders.extend(std::iter::repeat_n(n, k));
        }
        Self::new(&orders)
    }

    pub fn spec_string(&self) -> String {
        let orders = &self.inner.orders;
        let mut parts = Vec::new();
        let mut i = 0;
        while i < orders.len() {
            let mut j = i;
            while j + 1 < orders.len() && orders[j + 1] == orders[i] {
                j += 1;
            }
            let run = j - i + 1;
            if run > 1 {
                parts.push(format!("Z{}^{}", orders[i], run));
            } else {
                parts.push(format!("Z{}", orders[i]));
            }
            i = j + 1;
        }
        parts.join("x")
    }

    pub fn orders(&self) -> &[usize] {
        &self.inner.orders
    }

    pub fn size(&self) -> usize {
        self.inner.size
    }

    pub fn rank(&self) -> usize {
        self.inner.orders.len()
    }

    pub fn is_odd(&self) -> bool {
        self.inner.size % 2 == 1
    }

    pub fn require_cap(&self, cap: usize) -> Result<()> {
        if self.size() > cap {
            Err(Error::SizeCapExceeded {
                size: self.size(),
                cap,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn strides(&self) -> &[usize] {
        &self.inner.strides
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.rank());
        for (&n, &s) in self.inner.orders.iter().zip(&self.inner.strides) {
            out.push((idx / s) % n);
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.rank() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.rank(),
                coords.len()
            )));
        }
        let mut idx = 0;
        for ((&c, &n), &s) in coords.iter().zip(&self.inner.orders).zip(&self.inner.strides) {
            if c >= n {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {c} not reduced mod {n}"
                )));
            }
            idx += c * s;
        }
        Ok(idx)
    }

    /// Index of the element with the given (unreduced, possibly negative)
    /// coordinates.
    pub fn index_reduced(&self, coords: &[i64]) -> Result<usize> {
        if coords.len() != self.rank() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.rank(),
                coords.len()
            )));
        }
        let mut idx = 0;
        for ((&c, &n), &s) in coords.iter().zip(&self.inner.orders).zip(&self.inner.strides) {
            idx += (c.rem_euclid(n as i64) as usize) * s;
        }
        Ok(idx)
    }

    pub fn element(&self, idx: usize) -> Element {
        Element {
            coords: self.coords(idx),
        }
    }

    pub fn dual_element(&self, idx: usize) -> DualElement {
        DualElement {
            coords: self.coords(idx),
        }
    }

    pub fn element_index(&self, x: &Element) -> Result<usize> {
        self.index(&x.coords)
    }

    pub fn dual_index(&self, g: &DualElement) -> Result<usize> {
        self.index(&g.coords)
    }

    /// All elements in lexicographic order.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.size()).map(|i| self.element(i))
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        if self.rank() == 1 {
            let n = self.inner.size;
            let s = a + b;
            return if s >= n { s - n } else { s };
        }
        let mut out = 0;
        for (&n, &s) in self.inner.orders.iter().zip(&self.inner.strides) {
            let d = (a / s) % n + (b / s) % n;
            out += if d >= n { d - n } else { d } * s;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        if self.rank() == 1 {
            return if a == 0 { 0 } else { self.inner.size - a };
        }
        let mut out = 0;
        for (&n, &s) in self.inner.orders.iter().zip(&self.inner.strides) {
            let d = (a / s) % n;
            out += if d == 0 { 0 } else { n - d } * s;
        }
        out
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// `k * a` for an integer `k`.
    pub fn scale(&self, a: usize, k: i64) -> usize {
        let mut out = 0;
        for (&n, &s) in self.inner.orders.iter().zip(&self.inner.strides) {
            let d = ((a / s) % n) as i128;
            let v = (d * k as i128).rem_euclid(n as i128) as usize;
            out += v * s;
        }
        out
    }

    /// The unique `y` with `2y = a`; requires odd order.
    pub fn halve(&self, a: usize) -> Result<usize> {
        if !self.is_odd() {
            return Err(Error::EvenOrder(self.size()));
        }
        let mut out = 0;
        for (&n, &s) in self.inner.orders.iter().zip(&self.inner.strides) {
            let d = (a / s) % n;
            let inv2 = n.div_ceil(2) % n.max(1); // (n+1)/2 inverts 2 mod odd n
            out += ((d * inv2) % n) * s;
        }
        Ok(out)
    }

    /// Phase of character `gamma` at `x`, as a residue `r` mod `size` with
    /// `gamma(x) = exp(2 pi i r / size)`.
    pub fn phase(&self, gamma: usize, x: usize) -> usize {
        let size = self.inner.size;
        if self.rank() == 1 {
            return ((gamma as u128 * x as u128) % size as u128) as usize;
        }
        let mut acc: u128 = 0;
        for ((&n, &s), &w) in self
            .inner
            .orders
            .iter()
            .zip(&self.inner.strides)
            .zip(&self.inner.phase_weights)
        {
            let g = ((gamma / s) % n) as u128;
            let y = ((x / s) % n) as u128;
            acc += ((g * y) % n as u128) * w as u128;
        }
        (acc % size as u128) as usize
    }

    /// `gamma(x)` by index.
    pub fn char_value(&self, gamma: usize, x: usize) -> Complex64 {
        let theta = 2.0 * PI * self.phase(gamma, x) as f64 / self.size() as f64;
        Complex64::from_polar(1.0, theta)
    }

    /// `|1 - gamma(x)| = 2 |sin(pi theta)|`.
    pub fn char_distance(&self, gamma: usize, x: usize) -> f64 {
        let theta = self.phase(gamma, x) as f64 / self.size() as f64;
        2.0 * (PI * theta).sin().abs()
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Group::parse(s)
    }
}

/// Construct a group from its cyclic factor orders.
pub fn make_group(orders: &[usize]) -> Result<Group> {
    Group::new(orders)
}

/// Evaluate a character at an element.
pub fn char_eval(g: &Group, gamma: &DualElement, x: &Element) -> Result<Complex64> {
    let gi = g
        .dual_index(gamma)
        .map_err(|_| Error::GroupMismatch)?;
    let xi = g.element_index(x).map_err(|_| Error::GroupMismatch)?;
    Ok(g.char_value(gi, xi))
}

/// A subset of a group, stored both as a membership mask and as a sorted
/// member list.
#[derive(Clone, PartialEq, Eq)]
pub struct Subset {
    group: Group,
    mask: Vec<bool>,
    members: Vec<usize>,
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subset({} of {}: {:?})", self.len(), self.group, self.members)
    }
}

impl Subset {
    pub fn from_mask(group: &Group, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != group.size() {
            return Err(Error::GroupMismatch);
        }
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Ok(Subset {
            group: group.clone(),
            mask,
            members,
        })
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(group: &Group, idx: I) -> Result<Self> {
        let mut mask = vec![false; group.size()];
        for i in idx {
            if i >= group.size() {
                return Err(Error::InvalidArgument(format!(
                    "index {i} outside group of size {}",
                    group.size()
                )));
            }
            mask[i] = true;
        }
        Self::from_mask(group, mask)
    }

    pub fn empty(group: &Group) -> Self {
        Self::from_mask(group, vec![false; group.size()]).expect("sized mask")
    }

    pub fn full(group: &Group) -> Self {
        Self::from_mask(group, vec![true; group.size()]).expect("sized mask")
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    /// Haar measure `|A| / |G|`.
    pub fn measure(&self) -> f64 {
        self.len() as f64 / self.group.size() as f64
    }

    fn map_members(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_indices(&self.group, self.members.iter().map(|&a| f(a))).expect("in range")
    }

    /// `x + A`.
    pub fn translate(&self, x: usize) -> Self {
        self.map_members(|a| self.group.add(a, x))
    }

    /// `-A`.
    pub fn neg(&self) -> Self {
        self.map_members(|a| self.group.neg(a))
    }

    /// `k.A = {k a : a in A}`.
    pub fn dilate(&self, k: i64) -> Self {
        self.map_members(|a| self.group.scale(a, k))
    }

    pub fn intersect(&self, other: &Subset) -> Result<Self> {
        self.check_same(other)?;
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| a && b)
            .collect();
        Self::from_mask(&self.group, mask)
    }

    pub fn union(&self, other: &Subset) -> Result<Self> {
        self.check_same(other)?;
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| a || b)
            .collect();
        Self::from_mask(&self.group, mask)
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.group == other.group && self.members.iter().all(|&a| other.mask[a])
    }

    /// `|A ∩ B| / |B|`, the relative density of `self` in `within`.
    pub fn density_in(&self, within: &Subset) -> f64 {
        if within.is_empty() {
            return 0.0;
        }
        let hits = within.members.iter().filter(|&&b| self.mask[b]).count();
        hits as f64 / within.len() as f64
    }

    pub fn is_symmetric(&self) -> bool {
        self.members.iter().all(|&a| self.mask[self.group.neg(a)])
    }

    fn check_same(&self, other: &Subset) -> Result<()> {
        if self.group != other.group {
            Err(Error::GroupMismatch)
        } else {
            Ok(())
        }
    }
}

/// A complex-valued function on a group, read as a density with respect to
/// Haar probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityFn {
    group: Group,
    values: Vec<Complex64>,
}

impl DensityFn {
    pub fn new(group: &Group, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.size() {
            return Err(Error::GroupMismatch);
        }
        Ok(DensityFn {
            group: group.clone(),
            values,
        })
    }

    pub fn from_real(group: &Group, values: &[f64]) -> Result<Self> {
        Self::new(group, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(group: &Group, f: impl Fn(usize) -> Complex64) -> Self {
        DensityFn {
            group: group.clone(),
            values: (0..group.size()).map(f).collect(),
        }
    }

    pub fn constant(group: &Group, c: Complex64) -> Self {
        DensityFn {
            group: group.clone(),
            values: vec![c; group.size()],
        }
    }

    /// Haar probability measure itself: the constant density 1.
    pub fn haar(group: &Group) -> Self {
        Self::constant(group, Complex64::new(1.0, 0.0))
    }

    /// `1_A`.
    pub fn indicator(set: &Subset) -> Self {
        DensityFn {
            group: set.group().clone(),
            values: set
                .mask()
                .iter()
                .map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        }
    }

    /// The density of `mu_A`, i.e. `(|G|/|A|) 1_A`.
    pub fn uniform(set: &Subset) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidArgument("uniform measure on empty set".into()));
        }
        let w = set.group().size() as f64 / set.len() as f64;
        Ok(DensityFn {
            group: set.group().clone(),
            values: set
                .mask()
                .iter()
                .map(|&b| Complex64::new(if b { w } else { 0.0 }, 0.0))
                .collect(),
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn value(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// `∫ f dμ_G`.
    pub fn mean(&self) -> Complex64 {
        let s: Complex64 = self.values.iter().sum();
        s / self.group.size() as f64
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    /// Nonnegative real density with mean 1.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol && v.re >= -tol)
            && (self.mean() - Complex64::new(1.0, 0.0)).norm() <= tol.max(1e-12) * 10.0
    }

    /// `y -> f(x + y)`.
    pub fn translate(&self, x: usize) -> Self {
        let g = &self.group;
        DensityFn {
            group: g.clone(),
            values: (0..g.size()).map(|y| self.values[g.add(x, y)]).collect(),
        }
    }

    /// `y -> f(-y)`.
    pub fn reflect(&self) -> Self {
        let g = &self.group;
        DensityFn {
            group: g.clone(),
            values: (0..g.size()).map(|y| self.values[g.neg(y)]).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        DensityFn {
            group: self.group.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn zip_with(
        &self,
        other: &DensityFn,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        Ok(DensityFn {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn mul(&self, other: &DensityFn) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &DensityFn) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DensityFn) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }
}

/// `x -> f(x + y)` for a typed element.
pub fn translate(f: &DensityFn, x: &Element) -> Result<DensityFn> {
    let xi = f.group().element_index(x)?;
    Ok(f.translate(xi))
}

/// `(∫ |f|^p w dμ_G)^{1/p}`; `p = ∞` gives the max of `|f|` over the
/// support of `w`.
pub fn lp_norm(f: &DensityFn, p: f64, weight: &DensityFn) -> Result<f64> {
    if f.group() != weight.group() {
        return Err(Error::GroupMismatch);
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    if !weight.is_probability(1e-9) {
        return Err(Error::InvalidArgument(
            "weight is not a probability density".into(),
        ));
    }
    Ok(lp_norm_unchecked(f.values(), p, weight.values()))
}

pub(crate) fn lp_norm_unchecked(f: &[Complex64], p: f64, w: &[Complex64]) -> f64 {
    let n = f.len() as f64;
    if p.is_infinite() {
        return f
            .iter()
            .zip(w)
            .filter(|(_, w)| w.re > 0.0)
            .fold(0.0, |m, (v, _)| m.max(v.norm()));
    }
    let mut acc = 0.0;
    for (v, w) in f.iter().zip(w) {
        if w.re != 0.0 {
            acc += v.norm().powf(p) * w.re;
        }
    }
    (acc / n).powf(1.0 / p)
}

/// L^p(μ_G) norm of a real-valued vector.
pub(crate) fn lp_norm_haar(f: &[f64], p: f64) -> f64 {
    let n = f.len() as f64;
    if p.is_infinite() {
        return f.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let acc: f64 = f.iter().map(|v| v.abs().powf(p)).sum();
    (acc / n).powf(1.0 / p)
}

/// `∫ f conj(g) w dμ_G`.
pub fn inner_product(f: &DensityFn, g: &DensityFn, weight: &DensityFn) -> Result<Complex64> {
    if f.group() != g.group() || f.group() != weight.group() {
        return Err(Error::GroupMismatch);
    }
    if !weight.is_probability(1e-9) {
        return Err(Error::InvalidArgument(
            "weight is not a probability density".into(),
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for ((a, b), w) in f.values().iter().zip(g.values()).zip(weight.values()) {
        acc += a * b.conj() * w;
    }
    Ok(acc / f.group().size() as f64)
}
