//! Almost periodicity of convolutions: sets of translates `t` with
//! `‖τ_t(f ∗ μ_A) - f ∗ μ_A‖_p` small, found by random sampling or by an
//! exhaustive scan, plus the smoothing dichotomy built on top of them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bohr::{BohrSet, RegularBohr, RegularityCertificate};
use crate::config::{CsMode, RunConfig};
use crate::error::{Error, Result};
use crate::fourier::{convolve, fourier, inverse_fourier, FourierCoeffs};
use crate::group::{lp_norm_haar, lp_norm_unchecked, DensityFn, Group, Subset};
use crate::par;
use crate::sets::{overlap_counts, representation_counts, sumset};
use crate::spectra::{energy_increment, hypothesis_sum, EnergyIncrement, EnergyIncrementInput};

#[derive(Debug, Clone)]
pub struct CsInstance {
    pub f: DensityFn,
    /// The convolving set.
    pub a_set: Subset,
    /// The pool of translates.
    pub s_set: Subset,
    pub p: f64,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsResult {
    pub mode: CsMode,
    pub s: usize,
    pub t: Vec<usize>,
    /// `‖τ_{t-s}(g) - g‖_p` for each `t` in `T`.
    pub per_t_norms: Vec<f64>,
    /// `‖f‖_p` and the admissible error `ε ‖f‖_p`.
    pub f_norm: f64,
    pub limit: f64,
    pub worst_norm: f64,
    /// `|S + A| / |A|`.
    pub k_ratio: f64,
    pub k_samples: usize,
    pub draws: usize,
    pub mu_s_t: f64,
    /// `log((2K)^{-C ε⁻² p})` with the configured `C`.
    pub log_bound: f64,
    pub c_cs: f64,
    /// Both readings of the pigeonhole bound with `k = k_samples`:
    /// `log(1 / (2 K^k))` and `log((2K)^{-k})`.
    pub log_bound_two_over_k_pow: f64,
    pub log_bound_two_k_pow: f64,
    /// Candidates that failed direct re-verification and were dropped.
    pub dropped: usize,
}

impl CsResult {
    pub fn t_subset(&self, g: &Group) -> Subset {
        Subset::from_indices(g, self.t.iter().copied()).expect("indices in range")
    }
}

/// `u ↦ ‖τ_u(g) - g‖_p` under Haar measure, where `τ_u g(y) = g(y + u)`.
fn translate_norm(group: &Group, g: &[f64], u: usize, p: f64) -> f64 {
    let diff: Vec<f64> = (0..g.len()).map(|y| g[group.add(y, u)] - g[y]).collect();
    lp_norm_haar(&diff, p)
}

fn validate(inst: &CsInstance) -> Result<()> {
    let g = inst.f.group();
    if inst.a_set.group() != g || inst.s_set.group() != g {
        return Err(Error::GroupMismatch);
    }
    if inst.a_set.is_empty() || inst.s_set.is_empty() {
        return Err(Error::InvalidArgument("A and S must be nonempty".into()));
    }
    if !(inst.p >= 1.0 && inst.p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {} must be finite and >= 1", inst.p)));
    }
    if !(inst.epsilon > 0.0 && inst.epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {} outside (0, 1]", inst.epsilon)));
    }
    if !inst.f.is_real(0.0) {
        return Err(Error::InvalidArgument("f must be real-valued".into()));
    }
    if inst.f.is_zero() {
        return Err(Error::InvalidArgument("f vanishes identically".into()));
    }
    Ok(())
}

/// `f ∗ μ_A` as a real vector.
pub fn smoothed(f: &DensityFn, a: &Subset) -> Result<Vec<f64>> {
    Ok(convolve(f, &DensityFn::uniform(a)?)?.re())
}

pub fn cs_translates(inst: &CsInstance, mode: CsMode, cfg: &RunConfig) -> Result<CsResult> {
    validate(inst)?;
    let grp = inst.f.group();
    let g = smoothed(&inst.f, &inst.a_set)?;
    let fv = inst.f.re();
    let f_norm = lp_norm_haar(&fv, inst.p);
    let limit = inst.epsilon * f_norm;
    let k_samples = (cfg.c_k * inst.epsilon.powi(-2) * inst.p).ceil() as usize;

    let (s, cands, draws) = match mode {
        CsMode::Exhaustive => {
            let diffs = sumset(&inst.s_set, &inst.s_set.neg())?;
            let norms = par::map_slice(diffs.members(), |&u| translate_norm(grp, &g, u, inst.p));
            let good = Subset::from_indices(
                grp,
                diffs
                    .members()
                    .iter()
                    .zip(&norms)
                    .filter(|(_, &d)| d <= limit)
                    .map(|(&u, _)| u),
            )?;
            let (s, t) = best_translate(&inst.s_set, &good)?;
            (s, t, 0)
        }
        CsMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(inst.seed);
            let members = inst.a_set.members();
            let mut found = None;
            for draw in 1..=cfg.cs_draws {
                let z: Vec<usize> = (0..k_samples)
                    .map(|_| members[rng.gen_range(0..members.len())])
                    .collect();
                if let Some(w) = good_shifts(grp, &inst.f, &inst.a_set, &g, &z, inst.p, limit / 2.0)? {
                    found = Some((w, draw));
                    break;
                }
            }
            let (w, draws) = found.ok_or(Error::EmptyResult { draws: cfg.cs_draws })?;
            let (s, t) = best_translate(&inst.s_set, &w)?;
            (s, t, draws)
        }
    };

    let norms = par::map_slice(&cands, |&t| translate_norm(grp, &g, grp.sub(t, s), inst.p));
    let mut t = Vec::new();
    let mut per_t = Vec::new();
    let mut dropped = 0;
    for (&x, &d) in cands.iter().zip(&norms) {
        if d <= limit + cfg.tolerance {
            t.push(x);
            per_t.push(d);
        } else {
            dropped += 1;
        }
    }
    if t.is_empty() {
        return Err(Error::EmptyResult { draws });
    }
    let k_ratio = sumset(&inst.s_set, &inst.a_set)?.len() as f64 / inst.a_set.len() as f64;
    let kf = k_samples as f64;
    Ok(CsResult {
        mode,
        s,
        worst_norm: per_t.iter().copied().fold(0.0, f64::max),
        mu_s_t: t.len() as f64 / inst.s_set.len() as f64,
        t,
        per_t_norms: per_t,
        f_norm,
        limit,
        k_ratio,
        k_samples,
        draws,
        log_bound: -cfg.c_cs * inst.epsilon.powi(-2) * inst.p * (2.0 * k_ratio).ln(),
        c_cs: cfg.c_cs,
        log_bound_two_over_k_pow: -(2.0f64.ln()) - kf * k_ratio.ln(),
        log_bound_two_k_pow: -kf * (2.0 * k_ratio).ln(),
        dropped,
    })
}

/// First `s ∈ S` maximising `|S ∩ (s + W)|`, with that intersection.
fn best_translate(s_set: &Subset, w: &Subset) -> Result<(usize, Vec<usize>)> {
    let counts = overlap_counts(s_set, w)?;
    let mut best: Option<(usize, u64)> = None;
    for &s in s_set.members() {
        if best.is_none_or(|(_, c)| counts[s] > c) {
            best = Some((s, counts[s]));
        }
    }
    let (s, _) = best.expect("S nonempty");
    let t = s_set.intersect(&w.translate(s))?.members().to_vec();
    Ok((s, t))
}

/// For a sample tuple `z ∈ A^k` whose empirical average
/// `h = (1/k) Σ τ_{-z_i} f` is within `half` of `f ∗ μ_A`, the shifts `u`
/// with `z + u ∈ A^k` and `‖τ_{-u} h - f ∗ μ_A‖_p ≤ half`; `None` if `z`
/// itself is not good.
fn good_shifts(
    grp: &Group,
    f: &DensityFn,
    a: &Subset,
    g: &[f64],
    z: &[usize],
    p: f64,
    half: f64,
) -> Result<Option<Subset>> {
    let n = grp.size();
    let mut mult = vec![0u32; n];
    for &zi in z {
        mult[zi] += 1;
    }
    let zcount = DensityFn::from_real(grp, &mult.iter().map(|&m| m as f64).collect::<Vec<_>>())?;
    // h(y) = (1/k) Σ_i f(y - z_i) = (N/k) (f ∗ zcount)(y)
    let h = convolve(f, &zcount)?.re();
    let scale = n as f64 / z.len() as f64;
    let h: Vec<f64> = h.into_iter().map(|v| v * scale).collect();
    let dist = |u: usize| -> f64 {
        let diff: Vec<f64> = (0..n).map(|y| h[grp.sub(y, u)] - g[y]).collect();
        lp_norm_haar(&diff, p)
    };
    if dist(0) > half {
        return Ok(None);
    }
    let distinct: Vec<usize> = (0..n).filter(|&x| mult[x] > 0).collect();
    let support = Subset::from_indices(grp, distinct.iter().copied())?;
    // u with z_i + u ∈ A for every i: |A ∩ (u + supp z)| = |supp z|
    let fits = overlap_counts(a, &support)?;
    let cands: Vec<usize> = (0..n).filter(|&u| fits[u] as usize == distinct.len()).collect();
    let ok = par::map_slice(&cands, |&u| dist(u) <= half);
    let w = cands.iter().zip(ok).filter(|(_, ok)| *ok).map(|(&u, _)| u);
    Ok(Some(Subset::from_indices(grp, w)?))
}

/// `g ∗ K` with `K = μ_T^{∗l} ∗ μ_{-T}^{∗l}`, whose transform is
/// `|μ_T^|^{2l}`. Returns the output and the kernel's transform.
pub fn smooth_by_kernel(g: &DensityFn, t: &Subset, l: usize) -> Result<(DensityFn, FourierCoeffs)> {
    if t.is_empty() || l == 0 {
        return Err(Error::InvalidArgument("need T nonempty and l >= 1".into()));
    }
    let mt = fourier(&DensityFn::uniform(t)?);
    let kernel_hat: Vec<Complex64> = mt
        .values()
        .iter()
        .map(|c| Complex64::new(c.norm_sqr().powi(l as i32), 0.0))
        .collect();
    let kernel_hat = FourierCoeffs::new(g.group(), kernel_hat)?;
    let out = inverse_fourier(&fourier(g).mul(&kernel_hat)?);
    Ok((out, kernel_hat))
}

/// The smoothing kernel itself as a density.
pub fn kernel_density(t: &Subset, l: usize) -> Result<DensityFn> {
    let g = t.group();
    let (_, kh) = smooth_by_kernel(&DensityFn::haar(g), t, l)?;
    Ok(inverse_fourier(&kh))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    pub lambda: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub l: usize,
    pub p: f64,
    pub epsilon: f64,
    pub rho_pp: f64,
    pub sumset_ratio: f64,
    pub regular: RegularityCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub params: DichotomyParams,
    pub cs: CsResult,
    /// `⟨1_L ∗ (1_S dβ'), 1_A⟩_{L²(β)}`.
    pub inner_product: f64,
    pub threshold: f64,
    /// The same inner product after smoothing by the kernel.
    pub smoothed_inner_product: f64,
    /// `‖F ∗ K - F‖_{L^p(β)}` and its bound `2 l ε σ`.
    pub smoothing_error: f64,
    pub smoothing_bound: f64,
}

#[derive(Debug, Clone)]
pub enum Dichotomy {
    LargeInnerProduct {
        value: f64,
        report: Box<DichotomyReport>,
    },
    Increment {
        evidence: Box<EnergyIncrement>,
        eta: f64,
        report: Box<DichotomyReport>,
    },
}

impl Dichotomy {
    pub fn report(&self) -> &DichotomyReport {
        match self {
            Dichotomy::LargeInnerProduct { report, .. } => report,
            Dichotomy::Increment { report, .. } => report,
        }
    }
}

/// `⟨1_L ∗ (1_S dβ'), 1_A⟩_{L²(β)} = Σ_{x∈A} r_{L,S}(x) / (|B'| |B|)`.
pub fn large_inner_product(l: &Subset, s: &Subset, a: &Subset, nb: usize, nbp: usize) -> Result<f64> {
    let r = representation_counts(l, s)?;
    let total: u64 = a.members().iter().map(|&x| r[x]).sum();
    Ok(total as f64 / (nb as f64 * nbp as f64))
}

/// Either the inner product `⟨1_L ∗ (1_S dβ'), 1_A⟩_{L²(β)}` is at least
/// `λσα/2`, or `A` has a density increment on a smaller Bohr set.
/// `L, A ⊆ B`, `S ⊆ B'`.
pub fn cs_dichotomy(
    b: &BohrSet,
    bp: &BohrSet,
    l: &Subset,
    s: &Subset,
    a: &Subset,
    cfg: &RunConfig,
) -> Result<Dichotomy> {
    let grp = b.group();
    let bm = b.members(1.0)?;
    let bpm = bp.members(1.0)?;
    if !l.is_subset_of(&bm) || !a.is_subset_of(&bm) || !s.is_subset_of(&bpm) {
        return Err(Error::InvalidArgument("need L, A ⊆ B and S ⊆ B'".into()));
    }
    let lambda = l.len() as f64 / bm.len() as f64;
    let alpha = a.len() as f64 / bm.len() as f64;
    let sigma = s.len() as f64 / bpm.len() as f64;
    if lambda == 0.0 || alpha == 0.0 || sigma == 0.0 {
        return Err(Error::InvalidArgument("λ, α, σ must be positive".into()));
    }
    let lcount = (2.0 / (lambda * alpha)).ln().ceil().max(1.0) as usize;
    let p = 2.0 + (1.0 / alpha).ln();
    let epsilon = lambda / (8.0 * std::f64::consts::E * lcount as f64);

    let k = bp.rank();
    let start = if k == 0 { 1.0 } else { 1.0 / k as f64 };
    let mut chosen = None;
    for rho in cfg.grids.dyadic(start) {
        let cand = match RegularBohr::find(&bp.dilate(rho / (2.0 * lcount as f64))?, cfg) {
            Ok(r) => r,
            Err(Error::NoRegularDilate { .. }) => continue,
            Err(e) => return Err(e),
        };
        let sum = sumset(&*cand.set.members(1.0)?, &bpm)?.len();
        let ratio = sum as f64 / bpm.len() as f64;
        if ratio <= 2.0 {
            chosen = Some((rho, cand, ratio));
            break;
        }
    }
    let (rho_pp, bpp, ratio) = chosen.ok_or_else(|| {
        Error::DichotomyFailed("no ρ'' on the grid gives a regular B'' with |B''+B'| ≤ 2|B'|".into())
    })?;
    let bppm = bpp.set.members(1.0)?;

    let inst = CsInstance {
        f: DensityFn::indicator(l),
        a_set: s.clone(),
        s_set: (*bppm).clone(),
        p,
        epsilon,
        seed: cfg.seed,
    };
    let cs = cs_translates(&inst, cfg.cs_mode, cfg)?;
    let t = cs.t_subset(grp);

    // F = 1_L ∗ (1_S dβ') and its smoothed version.
    let big_f = convolve(&DensityFn::indicator(l), &DensityFn::indicator(s).mul(&bp.beta(1.0)?)?)?;
    let (smooth, _) = smooth_by_kernel(&big_f, &t, lcount)?;
    let beta = b.beta(1.0)?;
    let diff = smooth.sub(&big_f)?;
    let smoothing_error = lp_norm_unchecked(diff.values(), p, beta.values());
    let smoothing_bound = 2.0 * lcount as f64 * epsilon * sigma;
    let ind_a = DensityFn::indicator(a);
    let smoothed_ip = inner(&smooth, &ind_a, &beta);

    let value = large_inner_product(l, s, a, bm.len(), bpm.len())?;
    let threshold = lambda * sigma * alpha / 2.0;
    let report = DichotomyReport {
        params: DichotomyParams {
            lambda,
            alpha,
            sigma,
            l: lcount,
            p,
            epsilon,
            rho_pp,
            sumset_ratio: ratio,
            regular: bpp.cert.clone(),
        },
        cs,
        inner_product: value,
        threshold,
        smoothed_inner_product: smoothed_ip,
        smoothing_error,
        smoothing_bound,
    };
    if smoothing_error > smoothing_bound * (1.0 + 1e-9) + cfg.tolerance {
        return Err(Error::PostconditionFailed(format!(
            "smoothing error {smoothing_error} exceeds 2lεσ = {smoothing_bound}"
        )));
    }
    if value >= threshold {
        return Ok(Dichotomy::LargeInnerProduct {
            value,
            report: Box::new(report),
        });
    }

    let eta = (lambda * alpha).powf(1.0 / (2.0 * lcount as f64)) / 16f64.powf(1.0 / lcount as f64);
    let (hyp, _) = hypothesis_sum(b, a, &bpp.set, &t, eta.min(1.0))?;
    let nu = hyp / (alpha * alpha * bm.measure());
    if !(nu > 0.0) {
        return Err(Error::DichotomyFailed(format!(
            "inner product {value} < λσα/2 = {threshold} but the spectral energy on Spec_η(1_T, β'') vanishes"
        )));
    }
    let inp = EnergyIncrementInput {
        b: b.clone(),
        a: a.clone(),
        bp: bpp.set.clone(),
        t,
        eta: eta.min(1.0),
        nu,
        dimension: None,
        rho_prime: None,
    };
    let evidence = energy_increment(&inp, cfg)?;
    Ok(Dichotomy::Increment {
        evidence: Box::new(evidence),
        eta,
        report: Box::new(report),
    })
}

fn inner(f: &DensityFn, h: &DensityFn, w: &DensityFn) -> f64 {
    let n = f.group().size() as f64;
    f.values()
        .iter()
        .zip(h.values())
        .zip(w.values())
        .map(|((a, b), c)| (a * b.conj() * c).re)
        .sum::<f64>()
        / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn interval(g: &Group, r: usize) -> Subset {
        let n = g.size();
        Subset::from_indices(g, (0..=r).chain(n - r..n)).unwrap()
    }

    #[test]
    fn constant_f_keeps_all_translates() {
        let g = Group::cyclic(101).unwrap();
        let inst = CsInstance {
            f: DensityFn::haar(&g),
            a_set: interval(&g, 5),
            s_set: interval(&g, 3),
            p: 2.0,
            epsilon: 0.25,
            seed: 1,
        };
        let r = cs_translates(&inst, CsMode::Exhaustive, &RunConfig::default()).unwrap();
        assert_eq!(r.t.len(), 7);
        assert!(r.worst_norm < 1e-12);
    }

    #[test]
    fn sampled_translates_are_exhaustive_translates() {
        let g = Group::cyclic(401).unwrap();
        let l = Subset::from_indices(&g, (0..401).filter(|x| (x * 13 + 7) % 5 < 3)).unwrap();
        let inst = CsInstance {
            f: DensityFn::indicator(&l),
            a_set: interval(&g, 40),
            s_set: interval(&g, 10),
            p: 2.0,
            epsilon: 0.5,
            seed: 3,
        };
        let cfg = RunConfig::default();
        let ex = cs_translates(&inst, CsMode::Exhaustive, &cfg).unwrap();
        assert!(ex.t.contains(&ex.s));
        let sm = cs_translates(&inst, CsMode::Sampled, &cfg).unwrap();
        let g_vec = smoothed(&inst.f, &inst.a_set).unwrap();
        for &t in &sm.t {
            let d = translate_norm(&g, &g_vec, g.sub(t, sm.s), 2.0);
            assert!(d <= sm.limit + 1e-9);
        }
        assert_eq!(sm.dropped, 0);
    }

    #[test]
    fn kernel_of_zero_is_identity() {
        let g = Group::cyclic(37).unwrap();
        let f = DensityFn::from_fn(&g, |i| Complex64::new((i as f64).sin(), 0.0));
        let (out, _) = smooth_by_kernel(&f, &Subset::from_indices(&g, [0]).unwrap(), 3).unwrap();
        for x in 0..37 {
            assert!((out.value(x) - f.value(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_matches_repeated_convolution() {
        let g = Group::cyclic(29).unwrap();
        let t = Subset::from_indices(&g, [0, 1, 5]).unwrap();
        let mt = DensityFn::uniform(&t).unwrap();
        let mneg = DensityFn::uniform(&t.neg()).unwrap();
        let mut k = mt.clone();
        let to_d = |v: Vec<Complex64>| DensityFn::new(&g, v).unwrap();
        k = to_d(oracle::convolve(&k, &mt).unwrap());
        k = to_d(oracle::convolve(&k, &mneg).unwrap());
        k = to_d(oracle::convolve(&k, &mneg).unwrap());
        let kd = kernel_density(&t, 2).unwrap();
        for x in 0..29 {
            assert!((kd.value(x) - k.value(x)).norm() < 1e-9);
        }
        assert!(kd.is_probability(1e-9));
        assert!((0..29).all(|x| (kd.value(x) - kd.value(g.neg(x))).norm() < 1e-12));
    }

    #[test]
    fn degenerate_full_sets_take_first_branch() {
        let g = Group::cyclic(31).unwrap();
        let b = BohrSet::whole(&g);
        let full = Subset::full(&g);
        let d = cs_dichotomy(&b, &b, &full, &full, &full, &RunConfig::default()).unwrap();
        match d {
            Dichotomy::LargeInnerProduct { value, .. } => assert!((value - 1.0).abs() < 1e-12),
            Dichotomy::Increment { .. } => panic!("expected large inner product"),
        }
    }
}
