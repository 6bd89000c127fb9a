//! Large spectra, relative entropy certificates, Bohr majorisation of
//! spectra, and the energy-increment step.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bohr::{BohrSet, RegularBohr, RegularityCertificate, MEMBERSHIP_GUARD};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fourier::{convolve, fourier};
use crate::group::{lp_norm_unchecked, DensityFn, Group, Subset};
use crate::par;
use crate::sets::representation_counts;

/// Relative slack on the inclusive spectrum threshold.
const THRESHOLD_GUARD: f64 = 1e-12;

/// `Spec_ε(f, μ)`: characters with `|(f dμ)^(γ)| ≥ ε ‖f‖_{L¹(μ)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    /// Character indices, ascending.
    pub chars: Vec<usize>,
    /// `|(f dμ)^(γ)|` for each entry of `chars`.
    pub magnitudes: Vec<f64>,
    pub epsilon: f64,
    pub l1_norm: f64,
    pub threshold: f64,
}

impl SpectrumSet {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn contains(&self, gamma: usize) -> bool {
        self.chars.binary_search(&gamma).is_ok()
    }

    /// Characters by decreasing magnitude, ties by index.
    pub fn by_magnitude(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.chars.len()).collect();
        idx.sort_by(|&i, &j| {
            self.magnitudes[j]
                .partial_cmp(&self.magnitudes[i])
                .expect("finite magnitudes")
                .then(self.chars[i].cmp(&self.chars[j]))
        });
        idx.into_iter().map(|i| self.chars[i]).collect()
    }
}

/// `‖f‖_{L¹(μ)}` with `μ` given as a density.
pub fn l1_norm(f: &DensityFn, mu: &DensityFn) -> f64 {
    lp_norm_unchecked(f.values(), 1.0, mu.values())
}

pub fn l2_norm(f: &DensityFn, mu: &DensityFn) -> f64 {
    lp_norm_unchecked(f.values(), 2.0, mu.values())
}

pub fn spectrum(f: &DensityFn, mu: &DensityFn, epsilon: f64) -> Result<SpectrumSet> {
    if f.group() != mu.group() {
        return Err(Error::GroupMismatch);
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {epsilon} outside (0, 1]")));
    }
    if !mu.is_probability(1e-9) {
        return Err(Error::InvalidArgument("μ is not a probability density".into()));
    }
    let l1 = l1_norm(f, mu);
    if l1 == 0.0 {
        return Err(Error::InvalidArgument("f vanishes on the support of μ".into()));
    }
    let coeffs = fourier(&f.mul(mu)?);
    let threshold = epsilon * l1;
    let cut = threshold * (1.0 - THRESHOLD_GUARD);
    let mut chars = Vec::new();
    let mut magnitudes = Vec::new();
    for (gamma, c) in coeffs.values().iter().enumerate() {
        let m = c.norm();
        if m >= cut {
            chars.push(gamma);
            magnitudes.push(m);
        }
    }
    Ok(SpectrumSet {
        chars,
        magnitudes,
        epsilon,
        l1_norm: l1,
        threshold,
    })
}

/// Record of a greedy relative-entropy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissociationCertificate {
    pub lambda_set: Vec<usize>,
    #[serde(rename = "K")]
    pub k: f64,
    /// Whether every sign pattern in `{±1}^Λ` was among the tested ω.
    pub all_sign_patterns: bool,
    /// Random unit-modulus ω tested on the final Λ, as angles in radians.
    pub tested_omegas: Vec<Vec<f64>>,
    pub max_integral: f64,
    pub candidates_scanned: usize,
    pub candidates_total: usize,
}

impl DissociationCertificate {
    /// Recompute every tested integral for the final Λ from scratch.
    pub fn reevaluate(&self, group: &Group, mu: &DensityFn, sign_pattern_limit: usize) -> f64 {
        let ev = EntropyEval::new(group, mu);
        let mut worst: f64 = 1.0;
        if self.all_sign_patterns && self.lambda_set.len() <= sign_pattern_limit {
            worst = worst.max(ev.sign_pattern_max(&self.lambda_set));
        }
        for angles in &self.tested_omegas {
            let omega: Vec<Complex64> = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
            worst = worst.max(ev.omega_integral(&self.lambda_set, &omega));
        }
        worst
    }
}

struct EntropyEval<'a> {
    group: &'a Group,
    /// `(x, μ(x)/N)` over the support of μ.
    support: Vec<(usize, f64)>,
}

impl<'a> EntropyEval<'a> {
    fn new(group: &'a Group, mu: &DensityFn) -> Self {
        let n = group.size() as f64;
        let support = mu
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.re != 0.0)
            .map(|(x, v)| (x, v.re / n))
            .collect();
        EntropyEval { group, support }
    }

    /// Largest `∫ Π (1 + s_λ Re λ) dμ` over all sign vectors `s`.
    fn sign_pattern_max(&self, lambda: &[usize]) -> f64 {
        let m = lambda.len();
        if m == 0 {
            return self.support.iter().map(|(_, w)| w).sum();
        }
        let np = 1usize << m;
        let chunks: Vec<&[(usize, f64)]> = self.support.chunks(64).collect();
        let partials = par::map_slice(&chunks, |part| {
            let mut acc = vec![0.0; np];
            let mut prods = vec![0.0; np];
            for &(x, w) in part.iter() {
                prods[0] = w;
                let mut len = 1;
                for &gamma in lambda {
                    let c = self.group.char_value(gamma, x).re;
                    for p in 0..len {
                        let v = prods[p];
                        prods[p] = v * (1.0 + c);
                        prods[p + len] = v * (1.0 - c);
                    }
                    len *= 2;
                }
                for (a, p) in acc.iter_mut().zip(&prods) {
                    *a += p;
                }
            }
            acc
        });
        let mut total = vec![0.0; np];
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    fn omega_integral(&self, lambda: &[usize], omega: &[Complex64]) -> f64 {
        let vals = par::map_slice(&self.support, |&(x, w)| {
            let mut p = w;
            for (&gamma, om) in lambda.iter().zip(omega) {
                p *= 1.0 + (om * self.group.char_value(gamma, x)).re;
            }
            p
        });
        vals.into_iter().sum()
    }
}

/// Options for the greedy relative-entropy search.
#[derive(Debug, Clone, Copy)]
pub struct EntropyOptions {
    pub omega_trials: usize,
    pub seed: u64,
    pub sign_pattern_limit: usize,
    pub max_candidates: usize,
}

impl EntropyOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        EntropyOptions {
            omega_trials: cfg.omega_trials,
            seed: cfg.seed,
            sign_pattern_limit: cfg.sign_pattern_limit,
            max_candidates: cfg.entropy_max_candidates,
        }
    }
}

/// Greedy Λ ⊆ `delta` (scanned in the given order) whose product integrals
/// stay at most `exp(K)` for every tested ω.
pub fn dissociated_subset(
    delta: &[usize],
    mu: &DensityFn,
    k: f64,
    opts: &EntropyOptions,
) -> Result<DissociationCertificate> {
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("K = {k} must be >= 0")));
    }
    if opts.omega_trials == 0 {
        return Err(Error::InvalidArgument("omega_trials must be >= 1".into()));
    }
    let g = mu.group();
    let ev = EntropyEval::new(g, mu);
    // Exactly-dissociated sets hit the bound with equality, so allow rounding.
    let limit = k.exp() * (1.0 + 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut lambda: Vec<usize> = Vec::new();
    let mut final_omegas: Vec<Vec<f64>> = Vec::new();
    let mut worst = ev.sign_pattern_max(&[]);
    let scanned = delta.len().min(opts.max_candidates);
    for &gamma in &delta[..scanned] {
        let mut trial = lambda.clone();
        trial.push(gamma);
        let omegas: Vec<Vec<f64>> = (0..opts.omega_trials)
            .map(|_| {
                (0..trial.len())
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect()
            })
            .collect();
        let mut trial_worst: f64 = 0.0;
        if trial.len() <= opts.sign_pattern_limit {
            trial_worst = trial_worst.max(ev.sign_pattern_max(&trial));
        }
        if trial_worst <= limit {
            for angles in &omegas {
                let omega: Vec<Complex64> =
                    angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
                trial_worst = trial_worst.max(ev.omega_integral(&trial, &omega));
                if trial_worst > limit {
                    break;
                }
            }
        }
        if trial_worst <= limit {
            lambda = trial;
            final_omegas = omegas;
            worst = trial_worst;
        }
    }
    Ok(DissociationCertificate {
        all_sign_patterns: lambda.len() <= opts.sign_pattern_limit,
        lambda_set: lambda,
        k,
        tested_omegas: final_omegas,
        max_integral: worst,
        candidates_scanned: scanned,
        candidates_total: delta.len(),
    })
}

/// Measured entropy of a spectrum against the bound
/// `C ε⁻² log(2 ‖f‖₂ / ‖f‖₁)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangReport {
    pub epsilon: f64,
    pub spectrum_size: usize,
    pub lambda_size: usize,
    pub bound: f64,
    pub ratio: f64,
    pub passes: bool,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub certificate: DissociationCertificate,
}

pub fn chang_entropy_check(
    f: &DensityFn,
    mu: &DensityFn,
    epsilon: f64,
    c_chang: f64,
    opts: &EntropyOptions,
) -> Result<ChangReport> {
    let spec = spectrum(f, mu, epsilon)?;
    let cert = dissociated_subset(&spec.by_magnitude(), mu, 1.0, opts)?;
    let l1 = l1_norm(f, mu);
    let l2 = l2_norm(f, mu);
    let bound = c_chang * epsilon.powi(-2) * (2.0 * l2 / l1).ln();
    let size = cert.lambda_set.len();
    Ok(ChangReport {
        epsilon,
        spectrum_size: spec.len(),
        lambda_size: size,
        bound,
        ratio: size as f64 / bound,
        passes: size as f64 <= bound,
        l1_norm: l1,
        l2_norm: l2,
        certificate: cert,
    })
}

/// `B'` with the characters of `delta` added at width 1/2, checked directly
/// on every member.
pub fn majorize_by_bohr(b: &BohrSet, delta: &[usize]) -> Result<BohrSet> {
    let out = b.with_extra(delta, 0.5)?;
    let g = b.group();
    let members = out.members(1.0)?;
    let bad = par::map_slice(members.members(), |&x| {
        delta
            .iter()
            .any(|&gamma| g.char_distance(gamma, x) > 0.5 + MEMBERSHIP_GUARD)
    });
    if bad.into_iter().any(|b| b) {
        return Err(Error::PostconditionFailed(
            "majorising Bohr set has a member with |1 - γ(x)| > 1/2".into(),
        ));
    }
    Ok(out)
}

/// Inputs of the energy-increment step. `A ⊆ B`, `T ⊆ B'`.
#[derive(Debug, Clone)]
pub struct EnergyIncrementInput {
    pub b: BohrSet,
    pub a: Subset,
    pub bp: BohrSet,
    pub t: Subset,
    pub eta: f64,
    pub nu: f64,
    /// Dimension of `B` and the dilation `ρ'` with `B' ⊆ B_ρ'`, when known;
    /// used only to report the width condition.
    pub dimension: Option<f64>,
    pub rho_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyIncrementReport {
    pub alpha: f64,
    pub nu: f64,
    pub eta: f64,
    pub hypothesis_sum: f64,
    pub hypothesis_required: f64,
    pub spectrum_size: usize,
    pub entropy_lambda_size: usize,
    pub entropy_max_integral: f64,
    pub rank_before: usize,
    pub rank_after: usize,
    /// `μ_{B'}(B'')`.
    pub relative_measure: f64,
    pub regular: Option<RegularityCertificate>,
    /// `Σ_γ |(1_A - α1_B)^(γ)|² |β''^(γ)|²`.
    pub weighted_energy: f64,
    /// `‖(1_A - α1_B) ∗ β''‖²`, computed in physical space.
    pub smoothed_energy: f64,
    /// `‖1_A ∗ β''‖² - α² μ(B) - smoothed_energy`, the regularity error.
    pub correction: f64,
    pub linf_fourier: f64,
    pub linf_direct: f64,
    pub measured_increment: f64,
    pub required_increment: f64,
    /// `c ν α / d - ρ'` when both are known.
    pub width_slack: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EnergyIncrement {
    pub b2: BohrSet,
    pub report: EnergyIncrementReport,
}

/// `Σ_{γ in Spec_η(1_T, β')} |(1_A - α1_B)^(γ)|²` and the spectrum.
pub fn hypothesis_sum(
    b: &BohrSet,
    a: &Subset,
    bp: &BohrSet,
    t: &Subset,
    eta: f64,
) -> Result<(f64, SpectrumSet)> {
    let bm = b.members(1.0)?;
    let alpha = a.len() as f64 / bm.len() as f64;
    let h = DensityFn::indicator(a).sub(&DensityFn::indicator(&bm).scale(alpha))?;
    let hc = fourier(&h);
    let spec = spectrum(&DensityFn::indicator(t), &bp.beta(1.0)?, eta)?;
    let sum = spec.chars.iter().map(|&g| hc.at(g).norm_sqr()).sum();
    Ok((sum, spec))
}

/// `max_x |A ∩ (x - B)| / |B|`, the exact value of `‖1_A ∗ β‖_∞` for a
/// member set `B`.
pub fn max_density(a: &Subset, b: &Subset) -> Result<f64> {
    let r = representation_counts(a, b)?;
    let m = r.into_iter().max().unwrap_or(0);
    Ok(m as f64 / b.len() as f64)
}

pub fn energy_increment(inp: &EnergyIncrementInput, cfg: &RunConfig) -> Result<EnergyIncrement> {
    let g = inp.b.group();
    let bm = inp.b.members(1.0)?;
    let bpm = inp.bp.members(1.0)?;
    if !inp.a.is_subset_of(&bm) {
        return Err(Error::InvalidArgument("A is not contained in B".into()));
    }
    if inp.t.is_empty() || !inp.t.is_subset_of(&bpm) {
        return Err(Error::InvalidArgument("T must be a nonempty subset of B'".into()));
    }
    if !(inp.nu >= 0.0) || !(inp.eta > 0.0 && inp.eta <= 1.0) {
        return Err(Error::InvalidArgument("need ν ≥ 0 and η in (0, 1]".into()));
    }
    let alpha = inp.a.len() as f64 / bm.len() as f64;
    if alpha == 0.0 {
        return Err(Error::InvalidArgument("A is empty".into()));
    }
    let mu_b = bm.measure();
    let (hyp, spec) = hypothesis_sum(&inp.b, &inp.a, &inp.bp, &inp.t, inp.eta)?;
    let required = inp.nu * alpha * alpha * mu_b;
    if hyp < required * (1.0 - cfg.tolerance) || (inp.nu > 0.0 && hyp <= 0.0) {
        return Err(Error::HypothesisFailed { sum: hyp, required });
    }

    let beta_p = inp.bp.beta(1.0)?;
    let cert = dissociated_subset(&spec.by_magnitude(), &beta_p, 1.0, &EntropyOptions::from_config(cfg))?;
    let majorant = majorize_by_bohr(&inp.bp, &spec.chars)?;
    let (b2, regular) = match RegularBohr::find(&majorant, cfg) {
        Ok(r) => (r.set, Some(r.cert)),
        Err(Error::NoRegularDilate { .. }) => (majorant, None),
        Err(e) => return Err(e),
    };
    let b2m = b2.members(1.0)?;
    let beta2 = b2.beta(1.0)?;

    let h = DensityFn::indicator(&inp.a).sub(&DensityFn::indicator(&bm).scale(alpha))?;
    let hc = fourier(&h);
    let bc = fourier(&beta2);
    let weighted: f64 = hc
        .values()
        .iter()
        .zip(bc.values())
        .map(|(x, y)| x.norm_sqr() * y.norm_sqr())
        .sum();
    let hs = convolve(&h, &beta2)?;
    let smoothed = hs.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.size() as f64;
    let ab = convolve(&DensityFn::indicator(&inp.a), &beta2)?;
    let ab_l2 = ab.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.size() as f64;
    let linf_fourier = ab.values().iter().fold(0.0f64, |m, v| m.max(v.re));
    let linf_direct = max_density(&inp.a, &b2m)?;
    let measured = linf_direct / alpha - 1.0;
    let width_slack = match (inp.dimension, inp.rho_prime) {
        (Some(d), Some(r)) if d > 0.0 => Some(cfg.c_rho * inp.nu * alpha / d - r),
        _ => None,
    };
    let report = EnergyIncrementReport {
        alpha,
        nu: inp.nu,
        eta: inp.eta,
        hypothesis_sum: hyp,
        hypothesis_required: required,
        spectrum_size: spec.len(),
        entropy_lambda_size: cert.lambda_set.len(),
        entropy_max_integral: cert.max_integral,
        rank_before: inp.bp.rank(),
        rank_after: b2.rank(),
        relative_measure: b2m.len() as f64 / bpm.len() as f64,
        regular,
        weighted_energy: weighted,
        smoothed_energy: smoothed,
        correction: ab_l2 - alpha * alpha * mu_b - smoothed,
        linf_fourier,
        linf_direct,
        measured_increment: measured,
        required_increment: cfg.c_inc * inp.nu,
        width_slack,
    };
    if (linf_fourier - linf_direct).abs() > 1e-9 * linf_direct.max(1.0) {
        return Err(Error::PostconditionFailed(format!(
            "L∞ norm disagrees: transform {linf_fourier} vs direct {linf_direct}"
        )));
    }
    if measured < report.required_increment {
        return Err(Error::IncrementTooSmall {
            measured,
            required: report.required_increment,
            diagnostics: serde_json::to_string(&report).unwrap_or_default(),
        });
    }
    Ok(EnergyIncrement { b2, report })
}
