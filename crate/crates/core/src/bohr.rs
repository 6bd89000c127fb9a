//! Bohr sets, their dilates, measured dimension, and the search for regular
//! dilates.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{DensityFn, DualElement, Group, Subset};
use crate::par;

/// Additive guard on the inclusive width comparison.
pub const MEMBERSHIP_GUARD: f64 = 1e-12;

/// Per-element ratio `r(x) = max_γ (|1 - γ(x)| - guard) / δ_γ` for a fixed
/// base width vector. `x ∈ B_s` is decided by comparing `r(x)` with `s`,
/// falling back to the exact width test near the boundary.
struct Profile {
    base_width: Vec<f64>,
    ratio: OnceLock<Vec<f64>>,
}

/// `{x : |1 - γ(x)| ≤ δ_γ for all γ in Γ}` together with all its dilates.
///
/// Widths are stored as `min(scale · δ0, 2)` over a shared base `δ0`, so a
/// chain of unclamped dilations reuses one ratio profile. Member sets are
/// memoised per dilation factor; the cache is invisible to callers.
pub struct BohrSet {
    group: Group,
    freq: Vec<usize>,
    base: Arc<Profile>,
    scale: f64,
    width: Vec<f64>,
    cache: RwLock<HashMap<u64, Arc<Subset>>>,
}

impl Clone for BohrSet {
    fn clone(&self) -> Self {
        BohrSet {
            group: self.group.clone(),
            freq: self.freq.clone(),
            base: self.base.clone(),
            scale: self.scale,
            width: self.width.clone(),
            cache: RwLock::new(self.cache.read().expect("bohr cache poisoned").clone()),
        }
    }
}

impl fmt::Debug for BohrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BohrSet")
            .field("group", &self.group)
            .field("freq", &self.freq)
            .field("width", &self.width)
            .finish()
    }
}

impl PartialEq for BohrSet {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.freq == other.freq && self.width == other.width
    }
}

fn scaled_widths(base: &[f64], scale: f64) -> Vec<f64> {
    base.iter().map(|&w| (scale * w).min(2.0)).collect()
}

impl BohrSet {
    /// Build from character indices and widths. Repeated characters keep
    /// the smaller width.
    pub fn from_indices(group: &Group, freq: Vec<usize>, width: Vec<f64>) -> Result<Self> {
        if freq.len() != width.len() {
            return Err(Error::InvalidArgument(format!(
                "{} frequencies but {} widths",
                freq.len(),
                width.len()
            )));
        }
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(freq.len());
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for (g, w) in freq.into_iter().zip(width) {
            if g >= group.size() {
                return Err(Error::GroupMismatch);
            }
            if !(w > 0.0 && w <= 2.0) {
                return Err(Error::InvalidArgument(format!("width {w} outside (0, 2]")));
            }
            match seen.get(&g) {
                Some(&pos) => merged[pos].1 = merged[pos].1.min(w),
                None => {
                    seen.insert(g, merged.len());
                    merged.push((g, w));
                }
            }
        }
        let (freq, width): (Vec<usize>, Vec<f64>) = merged.into_iter().unzip();
        Ok(Self::from_parts(group, freq, width))
    }

    fn from_parts(group: &Group, freq: Vec<usize>, width: Vec<f64>) -> Self {
        BohrSet {
            group: group.clone(),
            freq,
            base: Arc::new(Profile {
                base_width: width.clone(),
                ratio: OnceLock::new(),
            }),
            scale: 1.0,
            width,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn new(group: &Group, freq: &[DualElement], width: Vec<f64>) -> Result<Self> {
        let idx = freq
            .iter()
            .map(|g| group.dual_index(g).map_err(|_| Error::GroupMismatch))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(group, idx, width)
    }

    /// The Bohr set with empty frequency set, i.e. the whole group.
    pub fn whole(group: &Group) -> Self {
        Self::from_parts(group, Vec::new(), Vec::new())
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn freq(&self) -> &[usize] {
        &self.freq
    }

    pub fn freq_elements(&self) -> Vec<DualElement> {
        self.freq.iter().map(|&g| self.group.dual_element(g)).collect()
    }

    pub fn width(&self) -> &[f64] {
        &self.width
    }

    pub fn rank(&self) -> usize {
        self.freq.len()
    }

    fn clamped(&self) -> bool {
        self.base.base_width.iter().any(|&w| self.scale * w > 2.0)
    }

    /// Base profile and scale describing `B_ρ`.
    fn resolve(&self, rho: f64) -> (Arc<Profile>, f64) {
        if self.clamped() {
            (
                Arc::new(Profile {
                    base_width: self.width.clone(),
                    ratio: OnceLock::new(),
                }),
                rho,
            )
        } else {
            (self.base.clone(), self.scale * rho)
        }
    }

    /// `B_ρ` as a Bohr set in its own right: widths `min(ρ δ_γ, 2)`.
    pub fn dilate(&self, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let (base, scale) = self.resolve(rho);
        let width = scaled_widths(&base.base_width, scale);
        Ok(BohrSet {
            group: self.group.clone(),
            freq: self.freq.clone(),
            base,
            scale,
            width,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Members of `B_ρ`.
    pub fn members(&self, rho: f64) -> Result<Arc<Subset>> {
        check_rho(rho)?;
        let key = rho.to_bits();
        if let Some(s) = self.cache.read().expect("bohr cache poisoned").get(&key) {
            return Ok(s.clone());
        }
        let set = Arc::new(self.compute_members(rho));
        self.cache
            .write()
            .expect("bohr cache poisoned")
            .entry(key)
            .or_insert_with(|| set.clone());
        Ok(set)
    }

    /// Members of `B_ρ` by the plain width test over every character,
    /// bypassing both the cache and the ratio profile.
    pub fn members_uncached(&self, rho: f64) -> Result<Subset> {
        check_rho(rho)?;
        let (base, scale) = self.resolve(rho);
        let g = &self.group;
        let widths = scaled_widths(&base.base_width, scale);
        let mask = par::map_range(g.size(), |x| exact_member(g, &self.freq, &widths, x));
        Ok(Subset::from_mask(g, mask).expect("sized mask"))
    }

    fn compute_members(&self, rho: f64) -> Subset {
        let (base, scale) = self.resolve(rho);
        let g = &self.group;
        let ratio = base.ratio.get_or_init(|| {
            par::map_range(g.size(), |x| {
                self.freq
                    .iter()
                    .zip(&base.base_width)
                    .map(|(&gamma, &w)| (g.char_distance(gamma, x) - MEMBERSHIP_GUARD) / w)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
        });
        let widths = scaled_widths(&base.base_width, scale);
        let (lo, hi) = (scale * (1.0 - 1e-9), scale * (1.0 + 1e-9));
        let mask = par::map_range(g.size(), |x| {
            let r = ratio[x];
            if r < lo {
                true
            } else if r > hi {
                false
            } else {
                exact_member(g, &self.freq, &widths, x)
            }
        });
        Subset::from_mask(g, mask).expect("sized mask")
    }

    pub fn count(&self, rho: f64) -> Result<usize> {
        Ok(self.members(rho)?.len())
    }

    /// `μ_G(B_ρ)`.
    pub fn measure(&self, rho: f64) -> Result<f64> {
        Ok(self.members(rho)?.measure())
    }

    /// Density of `β_ρ`, the uniform probability measure on `B_ρ`.
    pub fn beta(&self, rho: f64) -> Result<DensityFn> {
        DensityFn::uniform(&*self.members(rho)?)
    }

    /// The Bohr set `2.B`, i.e. `{2y : y in B}` with frequencies
    /// `γ ↦ γ∘(1/2)`. Requires odd order.
    pub fn doubled(&self) -> Result<Self> {
        let g = &self.group;
        if !g.is_odd() {
            return Err(Error::EvenOrder(g.size()));
        }
        let freq = self
            .freq
            .iter()
            .map(|&gamma| g.halve(gamma))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(g, freq, self.width.clone())
    }

    /// Adds characters with a common width; existing characters keep the
    /// smaller of the two widths.
    pub fn with_extra(&self, extra: &[usize], width: f64) -> Result<Self> {
        let mut freq = self.freq.clone();
        let mut widths = self.width.clone();
        for &gamma in extra {
            freq.push(gamma);
            widths.push(width);
        }
        Self::from_indices(&self.group, freq, widths)
    }

    /// `self ≤ other` checked on a grid of dilation factors.
    pub fn is_sub_bohr_of(&self, other: &BohrSet, rho_grid: &[f64]) -> Result<bool> {
        for &rho in rho_grid {
            if !self.members(rho)?.is_subset_of(&*other.members(rho)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_spec(&self) -> BohrSpec {
        BohrSpec {
            group: self.group.spec_string(),
            freq: self.freq.iter().map(|&g| self.group.coords(g)).collect(),
            width: self.width.clone(),
        }
    }
}

fn exact_member(g: &Group, freq: &[usize], widths: &[f64], x: usize) -> bool {
    freq.iter()
        .zip(widths)
        .all(|(&gamma, &w)| g.char_distance(gamma, x) <= w + MEMBERSHIP_GUARD)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dilation factor {rho} must be > 0")))
    }
}

/// JSON form of a Bohr set: `{"group": "Z101", "freq": [[1], [5]], "width": [0.5, 0.3]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohrSpec {
    pub group: String,
    pub freq: Vec<Vec<usize>>,
    pub width: Vec<f64>,
}

impl BohrSpec {
    pub fn build(&self) -> Result<BohrSet> {
        let g = Group::parse(&self.group)?;
        let freq = self
            .freq
            .iter()
            .map(|c| g.index(c))
            .collect::<Result<Vec<_>>>()?;
        BohrSet::from_indices(&g, freq, self.width.clone())
    }
}

/// Exact member set of `B_ρ`.
pub fn bohr_members(b: &BohrSet, rho: f64) -> Result<Arc<Subset>> {
    b.members(rho)
}

pub fn dilate(b: &BohrSet, rho: f64) -> Result<BohrSet> {
    b.dilate(rho)
}

pub fn beta_measure(b: &BohrSet, rho: f64) -> Result<DensityFn> {
    b.beta(rho)
}

/// Least `d` with `μ(B_{2ρ}) ≤ 2^d μ(B_ρ)` at every grid point.
pub fn estimate_dimension(b: &BohrSet, rho_grid: &[f64]) -> Result<f64> {
    if rho_grid.is_empty() {
        return Err(Error::InvalidArgument("empty dimension grid".into()));
    }
    let mut d: f64 = 0.0;
    for &rho in rho_grid {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dimension grid point {rho} outside (0, 1]"
            )));
        }
        let small = b.count(rho)? as f64;
        let big = b.count(2.0 * rho)? as f64;
        d = d.max((big / small).log2());
    }
    Ok(d)
}

/// Evidence that `B_λ` is `C`-regular: the measured ratios at every tested η.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub lambda: f64,
    pub constant_c: f64,
    pub dimension_d: f64,
    pub eta_grid: Vec<f64>,
    pub base_count: usize,
    pub counts: Vec<usize>,
    pub ratio_bounds: Vec<f64>,
}

impl RegularityCertificate {
    /// Recompute every count from scratch (no cache) and re-check the band.
    pub fn revalidate(&self, b: &BohrSet) -> Result<bool> {
        let fresh = BohrSet::from_indices(b.group(), b.freq().to_vec(), b.width().to_vec())?;
        let bl = fresh.dilate(self.lambda)?;
        let base = bl.members_uncached(1.0)?.len();
        if base != self.base_count {
            return Ok(false);
        }
        for ((&eta, &count), &ratio) in self.eta_grid.iter().zip(&self.counts).zip(&self.ratio_bounds)
        {
            let c = bl.members_uncached(1.0 + eta)?.len();
            if c != count || (c as f64 / base as f64) != ratio {
                return Ok(false);
            }
            if !in_band(ratio, self.constant_c * self.dimension_d * eta.abs()) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn in_band(ratio: f64, slack: f64) -> bool {
    let eps = 1e-12;
    ratio >= 1.0 / (1.0 + slack) - eps && ratio <= 1.0 + slack + eps
}

/// Default η grid `±{1..steps}/(steps·C·d)`; `d` below 1 is floored at 1
/// for spacing purposes only.
pub fn default_eta_grid(c: f64, d: f64, steps: usize) -> Vec<f64> {
    let scale = 1.0 / (steps as f64 * c * d.max(1.0));
    let mut grid = Vec::with_capacity(2 * steps);
    for j in 1..=steps {
        grid.push(-(j as f64) * scale);
        grid.push(j as f64 * scale);
    }
    grid
}

/// Check regularity of `b` itself (λ = 1) at the given constant.
fn check_regular(
    b: &BohrSet,
    c: f64,
    eta_grid: Option<&[f64]>,
    eta_steps: usize,
    dim_grid: &[f64],
) -> Result<Option<(f64, Vec<f64>, usize, Vec<usize>, Vec<f64>)>> {
    let d = estimate_dimension(b, dim_grid)?;
    let etas: Vec<f64> = match eta_grid {
        Some(g) => g
            .iter()
            .copied()
            .filter(|e| d == 0.0 || e.abs() <= 1.0 / (c * d))
            .collect(),
        None => default_eta_grid(c, d, eta_steps),
    };
    let base = b.count(1.0)?;
    let mut counts = Vec::with_capacity(etas.len());
    let mut ratios = Vec::with_capacity(etas.len());
    for &eta in &etas {
        if 1.0 + eta <= 0.0 {
            return Err(Error::InvalidArgument(format!("η = {eta} gives a nonpositive dilate")));
        }
        let cnt = b.count(1.0 + eta)?;
        let ratio = cnt as f64 / base as f64;
        if !in_band(ratio, c * d * eta.abs()) {
            return Ok(None);
        }
        counts.push(cnt);
        ratios.push(ratio);
    }
    Ok(Some((d, etas, base, counts, ratios)))
}

/// First λ in `lambda_grid` (ascending) whose dilate `B_λ` is `C`-regular.
pub fn find_regular_dilate(
    b: &BohrSet,
    c: f64,
    eta_grid: Option<&[f64]>,
    lambda_grid: &[f64],
    eta_steps: usize,
    dim_grid: &[f64],
) -> Result<RegularityCertificate> {
    if !(c >= 1.0) {
        return Err(Error::InvalidArgument(format!("C = {c} must be >= 1")));
    }
    let mut lambdas = lambda_grid.to_vec();
    if lambdas.iter().any(|l| !(0.5..1.0).contains(l)) {
        return Err(Error::InvalidArgument("λ grid must lie in [1/2, 1)".into()));
    }
    lambdas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    for &lambda in &lambdas {
        let bl = b.dilate(lambda)?;
        if let Some((d, etas, base, counts, ratios)) =
            check_regular(&bl, c, eta_grid, eta_steps, dim_grid)?
        {
            return Ok(RegularityCertificate {
                lambda,
                constant_c: c,
                dimension_d: d,
                eta_grid: etas,
                base_count: base,
                counts,
                ratio_bounds: ratios,
            });
        }
    }
    Err(Error::NoRegularDilate {
        c,
        tried: lambdas.len(),
    })
}

/// A Bohr set carrying the certificate of its own regularity.
#[derive(Debug, Clone)]
pub struct RegularBohr {
    pub set: BohrSet,
    pub cert: RegularityCertificate,
}

impl RegularBohr {
    /// Regular dilate of `b` under the grids of `cfg`.
    pub fn find(b: &BohrSet, cfg: &crate::config::RunConfig) -> Result<Self> {
        let cert = find_regular_dilate(
            b,
            cfg.c_regular,
            None,
            &cfg.grids.lambda_grid(),
            cfg.grids.eta_steps,
            &cfg.grids.dimension_grid,
        )?;
        let set = b.dilate(cert.lambda)?;
        Ok(RegularBohr { set, cert })
    }

    /// The whole group: regular with all ratios exactly 1.
    pub fn whole(group: &Group, cfg: &crate::config::RunConfig) -> Result<Self> {
        Self::find(&BohrSet::whole(group), cfg)
    }

    pub fn dimension(&self) -> f64 {
        self.cert.dimension_d
    }
}
