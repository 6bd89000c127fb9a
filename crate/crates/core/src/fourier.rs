//! Fourier transform and convolution on finite abelian groups.
//!
//! Normalisation: `f^(γ) = ∫ f conj(γ) dμ_G = (1/|G|) Σ_x f(x) conj(γ(x))`,
//! with inverse `f(x) = Σ_γ f^(γ) γ(x)`. The fast path runs a one-dimensional
//! FFT along each cyclic factor; the direct path sums over the whole group.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::group::{DensityFn, DualElement, Group, ORACLE_SIZE_CAP};
use crate::par;

/// Which algorithm computes a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierPath {
    Fast,
    Direct,
}

/// Fourier coefficients indexed by character index.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    group: Group,
    values: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn new(group: &Group, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.size() {
            return Err(Error::GroupMismatch);
        }
        Ok(FourierCoeffs {
            group: group.clone(),
            values,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, gamma: usize) -> Complex64 {
        self.values[gamma]
    }

    pub fn get(&self, gamma: &DualElement) -> Result<Complex64> {
        Ok(self.values[self.group.dual_index(gamma)?])
    }

    pub fn mul(&self, other: &FourierCoeffs) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::GroupMismatch);
        }
        Ok(FourierCoeffs {
            group: self.group.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// `Σ_γ |f^(γ)|²`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

type PlanKey = (usize, bool);

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cell = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cell.lock().expect("fft plan cache poisoned");
    let (planner, cache) = &mut *guard;
    cache
        .entry((n, forward))
        .or_insert_with(|| {
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            planner.plan_fft(n, dir)
        })
        .clone()
}

/// Unnormalised multidimensional DFT in place (sign per `forward`).
fn transform_in_place(group: &Group, data: &mut [Complex64], forward: bool) {
    let size = group.size();
    for (axis, &n) in group.orders().iter().enumerate() {
        if n == 1 {
            continue;
        }
        let stride = group.strides()[axis];
        let block = n * stride;
        let lines = size / n;
        let fft = plan(n, forward);
        let snapshot: &[Complex64] = data;
        let line_start = |l: usize| (l / stride) * block + (l % stride);
        let results = par::map_range(lines, |l| {
            let base = line_start(l);
            let mut buf: Vec<Complex64> = (0..n).map(|t| snapshot[base + t * stride]).collect();
            fft.process(&mut buf);
            buf
        });
        for (l, buf) in results.into_iter().enumerate() {
            let base = line_start(l);
            for (t, v) in buf.into_iter().enumerate() {
                data[base + t * stride] = v;
            }
        }
    }
}

/// Fast transform via per-factor FFTs.
pub fn fourier_fast(f: &DensityFn) -> FourierCoeffs {
    let g = f.group();
    let mut data = f.values().to_vec();
    transform_in_place(g, &mut data, true);
    let scale = 1.0 / g.size() as f64;
    for v in &mut data {
        *v *= scale;
    }
    FourierCoeffs {
        group: g.clone(),
        values: data,
    }
}

/// Direct `O(|G|²)` summation. Limited to the oracle size cap.
pub fn fourier_direct(f: &DensityFn) -> Result<FourierCoeffs> {
    let g = f.group();
    g.require_cap(ORACLE_SIZE_CAP)?;
    let n = g.size();
    let roots = roots_of_unity(n);
    let vals = f.values();
    let values = par::map_range(n, |gamma| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, v) in vals.iter().enumerate() {
            acc += v * roots[g.phase(gamma, x)].conj();
        }
        acc / n as f64
    });
    Ok(FourierCoeffs {
        group: g.clone(),
        values,
    })
}

pub(crate) fn roots_of_unity(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

/// `f^` on all of the dual group.
pub fn fourier(f: &DensityFn) -> FourierCoeffs {
    fourier_fast(f)
}

pub fn fourier_with(f: &DensityFn, path: FourierPath) -> Result<FourierCoeffs> {
    match path {
        FourierPath::Fast => Ok(fourier_fast(f)),
        FourierPath::Direct => fourier_direct(f),
    }
}

/// `x -> Σ_γ c(γ) γ(x)`.
pub fn inverse_fourier(c: &FourierCoeffs) -> DensityFn {
    let mut data = c.values.clone();
    transform_in_place(&c.group, &mut data, false);
    DensityFn::new(&c.group, data).expect("sized")
}

pub fn inverse_fourier_direct(c: &FourierCoeffs) -> Result<DensityFn> {
    let g = &c.group;
    g.require_cap(ORACLE_SIZE_CAP)?;
    let n = g.size();
    let roots = roots_of_unity(n);
    let values = par::map_range(n, |x| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (gamma, v) in c.values.iter().enumerate() {
            acc += v * roots[g.phase(gamma, x)];
        }
        acc
    });
    DensityFn::new(g, values)
}

/// `f ∗ g (x) = ∫ f(y) g(x - y) dμ_G(y)`, computed through the transform.
pub fn convolve(f: &DensityFn, g: &DensityFn) -> Result<DensityFn> {
    if f.group() != g.group() {
        return Err(Error::GroupMismatch);
    }
    let prod = fourier_fast(f).mul(&fourier_fast(g))?;
    Ok(inverse_fourier(&prod))
}

/// Real part of `f ∗ g` for real inputs.
pub fn convolve_real(f: &DensityFn, g: &DensityFn) -> Result<Vec<f64>> {
    Ok(convolve(f, g)?.re())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Subset;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn constant_and_point_mass() {
        let g = Group::cyclic(9).unwrap();
        let one = fourier(&DensityFn::haar(&g));
        assert!(close(one.at(0), Complex64::new(1.0, 0.0), 1e-12));
        assert!((1..9).all(|k| one.at(k).norm() < 1e-12));
        let delta = fourier(&DensityFn::indicator(&Subset::from_indices(&g, [0]).unwrap()));
        assert!((0..9).all(|k| close(delta.at(k), Complex64::new(1.0 / 9.0, 0.0), 1e-12)));
    }

    #[test]
    fn fast_matches_direct_on_mixed_group() {
        let g = Group::new(&[4, 3, 5]).unwrap();
        let f = DensityFn::from_fn(&g, |i| {
            Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())
        });
        let a = fourier_fast(&f);
        let b = fourier_direct(&f).unwrap();
        for k in 0..g.size() {
            assert!(close(a.at(k), b.at(k), 1e-10));
        }
        let back = inverse_fourier(&a);
        let back2 = inverse_fourier_direct(&b).unwrap();
        for x in 0..g.size() {
            assert!(close(back.value(x), f.value(x), 1e-10));
            assert!(close(back2.value(x), f.value(x), 1e-10));
        }
    }

    #[test]
    fn point_mass_convolution_is_scaled_copy() {
        let g = Group::cyclic(11).unwrap();
        let a = Subset::from_indices(&g, [1, 4, 5]).unwrap();
        let z = Subset::from_indices(&g, [0]).unwrap();
        let c = convolve(&DensityFn::indicator(&a), &DensityFn::indicator(&z)).unwrap();
        for x in 0..11 {
            let want = if a.contains(x) { 1.0 / 11.0 } else { 0.0 };
            assert!((c.value(x).re - want).abs() < 1e-12);
        }
        let f = DensityFn::from_fn(&g, |i| Complex64::new(i as f64, 0.0));
        let c = convolve(&f, &DensityFn::haar(&g)).unwrap();
        let mean = f.mean();
        assert!((0..11).all(|x| close(c.value(x), mean, 1e-12)));
    }

    #[test]
    fn direct_path_respects_cap() {
        let g = Group::cyclic(ORACLE_SIZE_CAP + 1).unwrap();
        assert!(fourier_direct(&DensityFn::haar(&g)).is_err());
    }
}
