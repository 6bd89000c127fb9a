//! The acceptance battery: ten criteria, each checked against an
//! independent recount, reported as a table.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::almost_periodic::{cs_translates, CsInstance};
use crate::bohr::{BohrSet, RegularBohr};
use crate::config::{CsMode, RunConfig};
use crate::constructions::{behrend_set, is_3ap_free, ternary_free_set};
use crate::error::Result;
use crate::fourier::{convolve, fourier_fast};
use crate::group::{DensityFn, Group, Subset};
use crate::kk::{Kk, KkSetup, StepResult};
use crate::oracle;
use crate::par;
use crate::roth::{count_3ap, freiman_embed, run_main_iteration, CountMode};
use crate::spectra::{chang_entropy_check, energy_increment, hypothesis_sum, EnergyIncrementInput, EntropyOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock seconds; omitted from reports unless timings are requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
    pub limit_seconds: Option<f64>,
    pub metrics: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub passed: usize,
    pub total: usize,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }

    /// Aligned text table, one line per criterion.
    pub fn to_text(&self) -> String {
        let width = self.criteria.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.criteria {
            let time = c.seconds.map(|s| format!("  {s:>8.2}s")).unwrap_or_default();
            out.push_str(&format!(
                "{:>2}  {:<width$}  {}{}  {}\n",
                c.id,
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                time,
                c.detail
            ));
        }
        out.push_str(&format!("{}/{} criteria passed\n", self.passed, self.total));
        out
    }
}

pub const CRITERIA: [(u32, &str, Option<f64>); 10] = [
    (1, "transform correctness", Some(30.0)),
    (2, "3AP counting equivalence", Some(120.0)),
    (3, "embedding exactness", Some(60.0)),
    (4, "Bohr-set laws and regularity", Some(120.0)),
    (5, "almost-periodic translates", Some(300.0)),
    (6, "Katz-Koester iteration", Some(300.0)),
    (7, "energy increment", Some(120.0)),
    (8, "end-to-end soundness", Some(900.0)),
    (9, "constructions", Some(120.0)),
    (10, "reproducibility", None),
];

/// Outcome of one criterion body: pass flag, a short detail line and metrics.
type Body = Result<(bool, String, Value)>;

pub fn run_criterion(id: u32, cfg: &RunConfig, timings: bool) -> CriterionResult {
    let (_, name, limit) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    let body = match id {
        1 => transforms(cfg),
        2 => counting(cfg),
        3 => embedding(),
        4 => bohr_laws(cfg),
        5 => almost_periodic(cfg),
        6 => katz_koester(cfg),
        7 => increments(cfg),
        8 => soundness(cfg),
        9 => construction_checks(cfg),
        10 => reproducibility(cfg),
        _ => unreachable!("criterion ids are 1..=10"),
    };
    let secs = start.elapsed().as_secs_f64();
    let (mut passed, mut detail, metrics) = match body {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}"), json!({ "error": e.kind() })),
    };
    if let Some(l) = limit {
        if secs > l {
            passed = false;
            detail = format!("{detail}; over the {l}s budget");
        }
    }
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds: timings.then_some(secs),
        limit_seconds: limit,
        metrics,
    }
}

pub fn run_suite(cfg: &RunConfig, only: Option<&[u32]>, timings: bool) -> SuiteReport {
    let ids: Vec<u32> = match only {
        Some(v) => v.to_vec(),
        None => (1..=10).collect(),
    };
    let criteria: Vec<CriterionResult> = ids.iter().map(|&id| run_criterion(id, cfg, timings)).collect();
    SuiteReport {
        passed: criteria.iter().filter(|c| c.passed).count(),
        total: criteria.len(),
        criteria,
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}

fn max_rel_diff(x: &[Complex64], y: &[Complex64]) -> f64 {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-300);
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / scale
}

fn random_group(rng: &mut ChaCha8Rng, cap: usize, odd: bool) -> Group {
    loop {
        let mut orders = Vec::new();
        let mut size = 1usize;
        let factors = rng.gen_range(1..=3);
        for _ in 0..factors {
            let hi = cap / size;
            if hi < 2 {
                break;
            }
            let mut n = rng.gen_range(2..=hi);
            if odd && n % 2 == 0 {
                n -= 1;
            }
            if n < 2 {
                continue;
            }
            orders.push(n);
            size *= n;
        }
        if !orders.is_empty() && size >= 2 {
            return Group::new(&orders).expect("valid orders");
        }
    }
}

fn random_subset(g: &Group, rng: &mut ChaCha8Rng, density: f64) -> Subset {
    let idx: Vec<usize> = (0..g.size()).filter(|_| rng.gen::<f64>() < density).collect();
    Subset::from_indices(g, idx).expect("indices in range")
}

fn random_subset_of(within: &Subset, rng: &mut ChaCha8Rng, density: f64) -> Subset {
    let mut idx: Vec<usize> = within.members().iter().copied().filter(|_| rng.gen::<f64>() < density).collect();
    if idx.is_empty() {
        idx.push(within.members()[0]);
    }
    Subset::from_indices(within.group(), idx).expect("indices in range")
}

fn transforms(cfg: &RunConfig) -> Body {
    let tol = cfg.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
    let (mut worst_dft, mut worst_parseval, mut worst_conv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = random_group(&mut rng, 256, false);
        let n = g.size();
        let mut random_fn = || -> Result<DensityFn> {
            let v = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            DensityFn::new(&g, v)
        };
        let f = random_fn()?;
        let h = random_fn()?;
        let fast = fourier_fast(&f);
        let direct = oracle::dft(&f)?;
        worst_dft = worst_dft.max(max_rel_diff(fast.values(), &direct));
        let phys = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let spec: f64 = direct.iter().map(|v| v.norm_sqr()).sum();
        worst_parseval = worst_parseval.max((phys - spec).abs() / phys.max(1e-300));
        let conv = oracle::dft(&DensityFn::new(&g, oracle::convolve(&f, &h)?)?)?;
        let hd = oracle::dft(&h)?;
        let prod: Vec<Complex64> = direct.iter().zip(&hd).map(|(a, b)| a * b).collect();
        worst_conv = worst_conv.max(max_rel_diff(&prod, &conv));
        let fast_conv = convolve(&f, &h)?;
        let oracle_conv = oracle::convolve(&f, &h)?;
        worst_conv = worst_conv.max(max_rel_diff(fast_conv.values(), &oracle_conv));
    }
    let ok = worst_dft <= tol && worst_parseval <= tol && worst_conv <= tol;
    Ok((
        ok,
        format!("max rel. error: dft {worst_dft:.1e}, Parseval {worst_parseval:.1e}, convolution {worst_conv:.1e}"),
        json!({ "functions": 100, "dft": worst_dft, "parseval": worst_parseval, "convolution": worst_conv }),
    ))
}

fn counting(cfg: &RunConfig) -> Body {
    let tol = cfg.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 2);
    let mut mismatches = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let g = random_group(&mut rng, 2003, true);
        let density = rng.gen_range(0.02..0.6);
        let a = random_subset(&g, &mut rng, density);
        let b = count_3ap(&g, &a, CountMode::Brute)?;
        let f = count_3ap(&g, &a, CountMode::Fourier)?;
        if b.value > 0.0 {
            worst = worst.max((b.value - f.value).abs() / b.value);
        }
        if b.triple_count != f.triple_count || !rel_close(b.value, f.value, tol) {
            mismatches += 1;
        }
    }
    let mut free_failures = 0usize;
    let mut free_sizes = Vec::new();
    for j in 0..20u64 {
        let c = if j < 10 {
            ternary_free_set(20 + 97 * j)?
        } else {
            behrend_set(60 + 90 * (j - 10), None)?
        };
        let (g, s) = freiman_embed(&c.set, c.n as usize)?;
        let count = count_3ap(&g, &s, CountMode::Brute)?.triple_count;
        let fcount = count_3ap(&g, &s, CountMode::Fourier)?.triple_count;
        if !c.certified_free || count != s.len() as u64 || fcount != s.len() as u64 {
            free_failures += 1;
        }
        free_sizes.push(s.len());
    }
    Ok((
        mismatches == 0 && free_failures == 0,
        format!("{mismatches}/200 mismatches (worst rel. {worst:.1e}); {free_failures}/20 free-set failures"),
        json!({ "mismatches": mismatches, "worst_relative": worst, "free_failures": free_failures, "free_sizes": free_sizes }),
    ))
}

fn embedded_nontrivial(a: &[i64], n: usize) -> Result<u64> {
    let (g, s) = freiman_embed(a, n)?;
    let c = count_3ap(&g, &s, CountMode::Brute)?.triple_count;
    Ok(c - s.len() as u64)
}

fn embedding() -> Body {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0usize;
    for _ in 0..500 {
        let density = rng.gen_range(0.05..0.5);
        let a: Vec<i64> = (1..=60).filter(|_| rng.gen::<f64>() < density).collect();
        if oracle::integer_3ap_counts(&a).1 != embedded_nontrivial(&a, 60)? {
            bad += 1;
        }
    }
    let exhaustive: usize = par::map_range(20, |i| -> usize {
        let n = i + 1;
        let mut bad = 0;
        for mask in 0u32..(1u32 << n) {
            let a: Vec<i64> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| b as i64 + 1).collect();
            match embedded_nontrivial(&a, n) {
                Ok(c) if c == oracle::integer_3ap_counts(&a).1 => {}
                _ => bad += 1,
            }
        }
        bad
    })
    .into_iter()
    .sum();
    let total: u64 = (1..=20u32).map(|n| 1u64 << n).sum();
    Ok((
        bad == 0 && exhaustive == 0,
        format!("{bad}/500 random and {exhaustive}/{total} exhaustive mismatches"),
        json!({ "random_mismatches": bad, "exhaustive_mismatches": exhaustive, "exhaustive_sets": total }),
    ))
}

fn bohr_laws(cfg: &RunConfig) -> Body {
    let g = Group::cyclic(2003)?;
    let n = g.size();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 4);
    let mut law_failures = Vec::new();
    let mut found = 0usize;
    let mut revalid_failures = 0usize;
    let rhos = [0.25, 0.5, 1.0, 1.5];
    let mut lcfg = cfg.clone();
    lcfg.c_regular = 64.0;
    for inst in 0..100 {
        let rank = rng.gen_range(1..=3);
        let freq: Vec<usize> = (0..rank).map(|_| rng.gen_range(1..n)).collect();
        let width: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.05..1.0)).collect();
        let b = BohrSet::from_indices(&g, freq.clone(), width.clone())?;
        let mut prev: Option<Subset> = None;
        for &rho in &rhos {
            let m = b.members_uncached(rho)?;
            // membership against exp-evaluated characters
            let direct = (0..n).filter(|&x| {
                freq.iter().zip(&width).all(|(&gm, &w)| {
                    oracle::char_distance(&g, gm, x) <= (rho * w).min(2.0) + 1e-12
                })
            });
            let direct = Subset::from_indices(&g, direct)?;
            if direct != m {
                law_failures.push(format!("instance {inst}: membership differs at ρ = {rho}"));
            }
            if !m.contains(0) {
                law_failures.push(format!("instance {inst}: 0 missing at ρ = {rho}"));
            }
            if !m.is_symmetric() {
                law_failures.push(format!("instance {inst}: asymmetric at ρ = {rho}"));
            }
            if let Some(p) = &prev {
                if !p.is_subset_of(&m) {
                    law_failures.push(format!("instance {inst}: nesting fails below ρ = {rho}"));
                }
            }
            prev = Some(m);
        }
        let wmin = width.iter().copied().fold(f64::INFINITY, f64::min);
        if b.members_uncached(2.0 / wmin)?.len() != n {
            law_failures.push(format!("instance {inst}: clamped dilate is not G"));
        }
        if let Ok(r) = RegularBohr::find(&b, &lcfg) {
            found += 1;
            if !r.cert.revalidate(&b)? {
                revalid_failures += 1;
            }
        }
    }
    let ok = law_failures.is_empty() && found >= 90 && revalid_failures == 0;
    Ok((
        ok,
        format!(
            "{} law violations; regular dilate found {found}/100; {revalid_failures} certificates failed revalidation",
            law_failures.len()
        ),
        json!({ "law_failures": law_failures, "regular_found": found, "revalidation_failures": revalid_failures }),
    ))
}

/// `(f ∗ μ_A)(y) = (1/|A|) Σ_{a∈A} f(y - a)` by direct summation.
fn direct_smoothed(f: &[f64], a: &Subset) -> Vec<f64> {
    let g = a.group();
    let k = a.len() as f64;
    par::map_range(g.size(), |y| a.members().iter().map(|&x| f[g.sub(y, x)]).sum::<f64>() / k)
}

fn direct_translate_norm(g: &Group, h: &[f64], u: usize, p: f64) -> f64 {
    let s: f64 = (0..h.len()).map(|y| (h[g.add(y, u)] - h[y]).abs().powf(p)).sum();
    (s / h.len() as f64).powf(1.0 / p)
}

fn almost_periodic(cfg: &RunConfig) -> Body {
    let g = Group::cyclic(4001)?;
    let n = g.size();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 5);
    let mut instances = Vec::new();
    for j in 0..5 {
        let fa = rng.gen_range(1..n);
        let fs = rng.gen_range(1..n);
        let a = BohrSet::from_indices(&g, vec![fa], vec![rng.gen_range(0.2..0.5)])?.members_uncached(1.0)?;
        let s = BohrSet::from_indices(&g, vec![fs], vec![rng.gen_range(0.05..0.15)])?.members_uncached(1.0)?;
        let l = random_subset(&g, &mut rng, 0.2 + 0.05 * j as f64);
        for (eps, p) in [(0.25, 2.0), (0.25, 4.0), (0.125, 2.0), (0.125, 4.0)] {
            instances.push((l.clone(), a.clone(), s.clone(), eps, p));
        }
    }
    let mut ex_fail = Vec::new();
    let mut sampled_valid = 0usize;
    let mut sampled_bad_t = 0usize;
    let mut sampled_runs = 0usize;
    let mut log_margin = f64::INFINITY;
    for (idx, (l, a, s, eps, p)) in instances.iter().enumerate() {
        let f = DensityFn::indicator(l);
        let fv = f.re();
        let g_direct = direct_smoothed(&fv, a);
        let f_norm = (l.len() as f64 / n as f64).powf(1.0 / p);
        let limit = eps * f_norm + 1e-9;
        let inst = CsInstance {
            f,
            a_set: a.clone(),
            s_set: s.clone(),
            p: *p,
            epsilon: *eps,
            seed: 0,
        };
        match cs_translates(&inst, CsMode::Exhaustive, cfg) {
            Ok(r) => {
                let bad = r
                    .t
                    .iter()
                    .filter(|&&t| direct_translate_norm(&g, &g_direct, g.sub(t, r.s), *p) > limit)
                    .count();
                let log_mu = r.mu_s_t.ln();
                log_margin = log_margin.min(log_mu - r.log_bound);
                if r.t.is_empty() || bad > 0 || log_mu < r.log_bound {
                    ex_fail.push(format!("instance {idx}: |T| = {}, {bad} bad translates", r.t.len()));
                }
            }
            Err(e) => ex_fail.push(format!("instance {idx}: {e}")),
        }
        for seed in 0..20u64 {
            sampled_runs += 1;
            let mut inst = inst.clone();
            inst.seed = seed;
            if let Ok(r) = cs_translates(&inst, CsMode::Sampled, cfg) {
                let bad = r
                    .t
                    .iter()
                    .filter(|&&t| direct_translate_norm(&g, &g_direct, g.sub(t, r.s), *p) > limit)
                    .count();
                sampled_bad_t += bad;
                if !r.t.is_empty() && bad == 0 {
                    sampled_valid += 1;
                }
            }
        }
    }
    let rate = sampled_valid as f64 / sampled_runs as f64;
    let ok = ex_fail.is_empty() && rate >= 0.8 && sampled_bad_t == 0;
    Ok((
        ok,
        format!(
            "exhaustive failures {}/20; sampled valid {sampled_valid}/{sampled_runs}; {sampled_bad_t} unverified translates",
            ex_fail.len()
        ),
        json!({
            "exhaustive_failures": ex_fail,
            "sampled_valid": sampled_valid,
            "sampled_runs": sampled_runs,
            "sampled_bad_translates": sampled_bad_t,
            "min_log_margin": log_margin,
            "c_cs": cfg.c_cs,
        }),
    ))
}

/// `#{(l, s) ∈ X × Y : l + s = x}` by a pair loop.
fn pair_counts(x: &Subset, y: &Subset) -> Vec<u64> {
    let g = x.group();
    let mut out = vec![0u64; g.size()];
    for &a in x.members() {
        for &b in y.members() {
            out[g.add(a, b)] += 1;
        }
    }
    out
}

fn katz_koester(cfg: &RunConfig) -> Body {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 6);
    let primes = [101usize, 211, 401, 809, 1009];
    let mut failures = Vec::new();
    let mut steps_total = 0usize;
    let mut increments = 0usize;
    for inst in 0..20 {
        let g = Group::cyclic(primes[inst % primes.len()])?;
        let alpha = [0.2, 0.3, 0.4, 0.5][inst / 5];
        let (b, bp, bpp) = if inst % 2 == 0 {
            let w = BohrSet::whole(&g);
            let inner = RegularBohr::find(&BohrSet::from_indices(&g, vec![rng.gen_range(1..g.size())], vec![1.0])?, cfg)?;
            (w.clone(), w, inner.set)
        } else {
            let b = RegularBohr::find(&BohrSet::from_indices(&g, vec![rng.gen_range(1..g.size())], vec![1.5])?, cfg)?.set;
            let bp = RegularBohr::find(&BohrSet::from_indices(&g, vec![rng.gen_range(1..g.size())], vec![1.5])?, cfg)?.set;
            let bpp = RegularBohr::find(&bp.dilate(0.5)?, cfg)?.set;
            (b, bp, bpp)
        };
        let a = random_subset_of(&*b.members(1.0)?, &mut rng, alpha);
        let density = rng.gen_range(0.3..0.7);
        let ap = random_subset_of(&*bp.members(1.0)?, &mut rng, density);
        let kk = Kk::new(KkSetup {
            b,
            bp,
            bpp,
            a: a.clone(),
            ap: ap.clone(),
            dimension: None,
            rho_prime: None,
        })?;
        let (al, alp) = (kk.alpha, kk.alpha_prime);
        let r_aap = pair_counts(&a, &ap);
        let limit = (cfg.c_iter / al).ceil() as usize;
        let (mut st, _, _) = match kk.init() {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        let mut ok = st.sigma >= alp / 2.0 - cfg.tolerance;
        while ok && st.lambda <= cfg.c1_kk {
            if st.i >= limit {
                failures.push(format!("instance {inst}: no termination within {limit} steps"));
                break;
            }
            match kk.step(&st, cfg) {
                Ok(StepResult::Continue(next, _)) => {
                    let i = next.i;
                    let r_ls = pair_counts(&next.l, &next.s);
                    let dominated = r_ls.iter().zip(&r_aap).all(|(&l, &m)| l <= i as u64 * m);
                    let lam_ok = next.lambda >= al * i as f64 / 4.0 - cfg.tolerance;
                    let sig_ok = next.sigma >= (alp / 2.0).powi(i as i32 + 1) * (1.0 - 1e-12);
                    if !(dominated && lam_ok && sig_ok) {
                        failures.push(format!(
                            "instance {inst} step {i}: domination {dominated}, λ bound {lam_ok}, σ bound {sig_ok}"
                        ));
                        ok = false;
                    }
                    st = next;
                }
                Ok(StepResult::Increment(..)) => {
                    increments += 1;
                    break;
                }
                Err(e) => {
                    failures.push(format!("instance {inst} step {}: {e}", st.i + 1));
                    ok = false;
                }
            }
        }
        steps_total += st.i;
    }
    Ok((
        failures.is_empty(),
        format!("{} failing instances of 20; {steps_total} steps; {increments} ended in an increment", failures.len()),
        json!({ "failures": failures, "steps": steps_total, "increments": increments }),
    ))
}

fn increments(cfg: &RunConfig) -> Body {
    let mut failures = Vec::new();
    let mut margins = Vec::new();
    let shapes = [
        (1009usize, 150usize, 7usize, 10usize),
        (1009, 200, 5, 15),
        (1201, 250, 9, 12),
        (1499, 200, 11, 20),
        (1601, 300, 6, 10),
        (2003, 300, 11, 20),
        (2003, 400, 7, 25),
        (2503, 350, 13, 18),
        (3001, 500, 9, 30),
        (4001, 600, 11, 25),
    ];
    for (inst, &(n, run, modulus, half)) in shapes.iter().enumerate() {
        let g = Group::cyclic(n)?;
        let b = BohrSet::whole(&g);
        let mut idx: Vec<usize> = (0..run).collect();
        idx.extend((run..n).filter(|x| (x * 37) % modulus == 0));
        let a = Subset::from_indices(&g, idx)?;
        let t = Subset::from_indices(&g, (0..=half).chain(n - half..n))?;
        let eta = 0.25;
        let (hyp, _) = hypothesis_sum(&b, &a, &b, &t, eta)?;
        let alpha = a.measure();
        let nu = hyp / (alpha * alpha);
        let inp = EnergyIncrementInput {
            b: b.clone(),
            a: a.clone(),
            bp: b,
            t,
            eta,
            nu,
            dimension: None,
            rho_prime: None,
        };
        match energy_increment(&inp, cfg) {
            Ok(out) => {
                // ‖1_A ∗ β''‖_∞ recounted from member sets
                let m = out.b2.members_uncached(1.0)?;
                let best = (0..n)
                    .map(|x| m.members().iter().filter(|&&y| a.contains(g.sub(x, y))).count())
                    .max()
                    .unwrap_or(0);
                let linf = best as f64 / m.len() as f64;
                let need = alpha * (1.0 + nu / 16.0);
                margins.push(linf / need);
                if linf < need {
                    failures.push(format!("instance {inst}: {linf} < α(1 + ν/16) = {need}"));
                }
            }
            Err(e) => failures.push(format!("instance {inst}: {e}")),
        }
    }
    Ok((
        failures.is_empty(),
        format!("{} of 10 instances short of α(1 + ν/16)", failures.len()),
        json!({ "failures": failures, "ratio_to_required": margins }),
    ))
}

fn soundness(cfg: &RunConfig) -> Body {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 8);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let combos: Vec<(usize, f64)> = [101usize, 1001, 2003]
        .iter()
        .flat_map(|&m| [0.1, 0.2, 0.5].map(|d| (m, d)))
        .collect();
    for run in 0..20 {
        let (m, d) = combos[run % combos.len()];
        let g = Group::cyclic(m)?;
        let a = random_subset(&g, &mut rng, d);
        if a.is_empty() {
            continue;
        }
        match run_main_iteration(&g, &a, cfg, run as u64) {
            Ok(log) => {
                let v = log.violations(cfg);
                rows.push(json!({
                    "M": m, "density": d, "i0": log.i0, "brute": log.brute.value,
                    "claimed": log.terminal.claimed(), "fallback": log.terminal.fallback,
                }));
                if !v.is_empty() {
                    failures.push(format!("run {run}: {}", v.join("; ")));
                }
            }
            Err(e) => failures.push(format!("run {run}: {e}")),
        }
    }
    Ok((
        failures.is_empty(),
        format!("{} of 20 runs violate monotonicity, step bound or soundness", failures.len()),
        json!({ "failures": failures, "runs": rows }),
    ))
}

fn construction_checks(cfg: &RunConfig) -> Body {
    let t = ternary_free_set(14)?;
    let ternary_ok = t.set == vec![1, 2, 4, 5, 10, 11, 13, 14];
    let b = behrend_set(10_000, None)?;
    let (g, s) = freiman_embed(&b.set, 10_000)?;
    let embedded_free = count_3ap(&g, &s, CountMode::Brute)?.triple_count == s.len() as u64;
    let behrend_ok = b.size >= 20 && b.certified_free && is_3ap_free(&b.set) && embedded_free;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 9);
    let opts = EntropyOptions::from_config(cfg);
    let mut ratios = Vec::new();
    for _ in 0..20 {
        let g = Group::cyclic(rng.gen_range(50..400) * 2 + 1)?;
        let density = rng.gen_range(0.05..0.5);
        let a = random_subset(&g, &mut rng, density);
        if a.is_empty() {
            continue;
        }
        let eps = rng.gen_range(0.2..0.6);
        let r = chang_entropy_check(&DensityFn::indicator(&a), &DensityFn::haar(&g), eps, cfg.c_chang, &opts)?;
        ratios.push(r.ratio);
    }
    let finite = ratios.len() == 20 && ratios.iter().all(|r| r.is_finite());
    Ok((
        ternary_ok && behrend_ok && finite,
        format!(
            "ternary(14) {}; Behrend(10⁴) size {} certified {}; {} finite Chang ratios",
            if ternary_ok { "matches" } else { "differs" },
            b.size,
            behrend_ok,
            ratios.iter().filter(|r| r.is_finite()).count()
        ),
        json!({ "ternary_14": t.set, "behrend_size": b.size, "behrend_dim": b.dim, "chang_ratios": ratios }),
    ))
}

/// Serialised outputs of a small battery of seeded computations.
fn battery(cfg: &RunConfig) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let g = Group::cyclic(1001)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 10);
    let a = random_subset(&g, &mut rng, 0.2);
    let log = run_main_iteration(&g, &a, cfg, 7)?;
    out.push(serde_json::to_string(&log).expect("serialisable"));
    let inst = CsInstance {
        f: DensityFn::indicator(&random_subset(&g, &mut rng, 0.3)),
        a_set: BohrSet::from_indices(&g, vec![1], vec![0.6])?.members_uncached(1.0)?,
        s_set: BohrSet::from_indices(&g, vec![3], vec![0.2])?.members_uncached(1.0)?,
        p: 2.0,
        epsilon: 0.25,
        seed: 11,
    };
    out.push(serde_json::to_string(&cs_translates(&inst, CsMode::Sampled, cfg)?).expect("serialisable"));
    let r = chang_entropy_check(&DensityFn::indicator(&a), &DensityFn::haar(&g), 0.3, cfg.c_chang, &EntropyOptions::from_config(cfg))?;
    out.push(serde_json::to_string(&r).expect("serialisable"));
    out.push(serde_json::to_string(&behrend_set(5000, None)?).expect("serialisable"));
    Ok(out)
}

fn reproducibility(cfg: &RunConfig) -> Body {
    let was = par::is_parallel();
    let first = battery(cfg)?;
    let second = battery(cfg)?;
    par::set_enabled(false);
    let sequential = battery(cfg);
    par::set_enabled(was);
    let sequential = sequential?;
    let repeat = first == second;
    let across = first == sequential;
    Ok((
        repeat && across,
        format!("repeat identical: {repeat}; parallel vs sequential identical: {across}"),
        json!({ "outputs": first.len(), "repeat": repeat, "parallel_vs_sequential": across }),
    ))
}
