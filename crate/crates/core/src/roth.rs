//! Counting three-term progressions and the density-increment iteration
//! that either certifies many of them or finds a denser Bohr set.
//!
//! Every lower bound the driver reports is a product of measured
//! quantities, and every run is checked against a brute-force count.

use serde::{Deserialize, Serialize};

use crate::almost_periodic::{cs_dichotomy, Dichotomy, DichotomyReport};
use crate::bohr::{BohrSet, BohrSpec, RegularBohr, RegularityCertificate};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fourier::{fourier, inverse_fourier, FourierCoeffs};
use crate::group::{DensityFn, Group, Subset};
use crate::kk::{Kk, KkOutcome, KkPair, KkSetup, KkStepRecord};
use crate::par;
use crate::sets::representation_counts;
use crate::spectra::{max_density, EnergyIncrement, EnergyIncrementReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Fourier,
    Brute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApCount {
    pub alpha: f64,
    /// `⟨1_A ∗ 1_{-2.A}, 1_{-A}⟩_{L²(μ_G)}`.
    pub value: f64,
    /// `#{(a1, a2, a3) ∈ A³ : a1 + a3 = 2 a2}`.
    pub triple_count: u64,
}

fn require_odd(g: &Group) -> Result<()> {
    if g.is_odd() {
        Ok(())
    } else {
        Err(Error::EvenOrder(g.size()))
    }
}

pub fn count_3ap(g: &Group, a: &Subset, mode: CountMode) -> Result<ApCount> {
    require_odd(g)?;
    if a.group() != g {
        return Err(Error::GroupMismatch);
    }
    let n = g.size() as f64;
    let (value, triple_count) = match mode {
        CountMode::Brute => {
            let m = a.members();
            let per = par::map_slice(m, |&a1| {
                m.iter()
                    .filter(|&&a2| a.contains(g.sub(g.add(a2, a2), a1)))
                    .count() as u64
            });
            let c: u64 = per.iter().sum();
            (c as f64 / (n * n), c)
        }
        CountMode::Fourier => {
            let fa = fourier(&DensityFn::indicator(a));
            let f2 = fourier(&DensityFn::indicator(&a.dilate(2).neg()));
            let fn_ = fourier(&DensityFn::indicator(&a.neg()));
            let v: f64 = (0..g.size())
                .map(|k| (fa.at(k) * f2.at(k) * fn_.at(k).conj()).re)
                .sum();
            (v, (v * n * n).round().max(0.0) as u64)
        }
    };
    Ok(ApCount {
        alpha: a.measure(),
        value,
        triple_count,
    })
}

/// `A ⊆ {1..N}` placed in `Z/(2N+1)`, where integer and cyclic
/// progressions coincide.
pub fn freiman_embed(a: &[i64], n: usize) -> Result<(Group, Subset)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if let Some(&v) = a.iter().find(|&&v| v < 1 || v > n as i64) {
        return Err(Error::OutOfRange { value: v, n });
    }
    let g = Group::cyclic(2 * n + 1)?;
    let s = Subset::from_indices(&g, a.iter().map(|&v| v as usize))?;
    Ok((g, s))
}

/// Stage `i` of the iteration: a regular Bohr set and `‖1_A ∗ β‖_∞` on it.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub i: usize,
    pub bohr: RegularBohr,
    pub alpha: f64,
}

impl IterationState {
    pub fn initial(a: &Subset, cfg: &RunConfig) -> Result<Self> {
        Ok(IterationState {
            i: 0,
            bohr: RegularBohr::whole(a.group(), cfg)?,
            alpha: a.measure(),
        })
    }

    pub fn rank(&self) -> usize {
        self.bohr.set.rank()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `‖1_A ∗ β'‖_∞` already exceeds the threshold.
    QuickPrime,
    /// `‖1_A ∗ β'_{ρ''}‖_∞` does.
    QuickDouble,
    /// Energy increment from the Katz-Koester case split.
    KkIncrement,
    /// Energy increment from the almost-periodicity dichotomy.
    CsIncrement,
    Terminal,
}

/// The measured lower bound on `⟨1_A ∗ 1_{-2.A}, 1_{-A}⟩` at termination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApCountEvidence {
    /// `⟨1_{A1} ∗ (1_{A2} dβ''), 1_{-A1}⟩_{L²(β')}`.
    pub inner_product: f64,
    pub mu_bp: f64,
    pub mu_bpp: f64,
    /// `μ_G(B') μ_G(B'') ⟨…⟩`, a count of progressions of `A` over `N²`.
    pub lb_direct: f64,
    /// The bound through the Katz-Koester domination and the
    /// almost-periodicity branch: `μ(B') μ(B'') μ_{B''}(B_kk) ⟨1_L ∗ (1_S dβ_kk), 1_{-A1}⟩ / i0`.
    pub lb_chain: Option<f64>,
    pub kk_relative_measure: Option<f64>,
    pub kk_steps: Option<usize>,
    pub cs_inner_product: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `(α/2)^{1/α}` for the initial density, reported for comparison only.
    pub symbolic_reference: f64,
    /// Set when no branch certified and the terminal uses `lb_direct` alone.
    pub fallback: Option<String>,
}

impl ApCountEvidence {
    /// The reported lower bound: the chain bound when present.
    pub fn claimed(&self) -> f64 {
        self.lb_chain.unwrap_or(self.lb_direct)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub i: usize,
    pub bohr: BohrSpec,
    pub rank: usize,
    pub dimension: f64,
    pub measure: f64,
    pub alpha: f64,
    pub rho_p: Option<f64>,
    pub rho_pp: Option<f64>,
    pub smoothing_error: Option<f64>,
    pub smoothing_limit: Option<f64>,
    pub quick_prime: Option<f64>,
    pub quick_double: Option<f64>,
    pub x: Option<Vec<usize>>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub rho_kk: Option<f64>,
    pub kk_trace: Vec<KkStepRecord>,
    pub dichotomy: Option<DichotomyReport>,
    pub increment: Option<EnergyIncrementReport>,
    pub branch: Branch,
    pub next_alpha: Option<f64>,
    pub next_rank: Option<usize>,
    pub next_measure: Option<f64>,
    pub next_certificate: Option<RegularityCertificate>,
    /// Attempts that did not certify, with their reasons.
    pub rejected: Vec<String>,
}

pub enum StepOutcome {
    Next(IterationState, StepRecord),
    Terminal(ApCountEvidence, StepRecord),
}

fn whole_measure(s: &Subset) -> f64 {
    s.len() as f64 / s.group().size() as f64
}

/// `sup |1_A ∗ β ∗ β' + 1_A ∗ β ∗ β_R - 2 (1_A ∗ β)|`.
fn smoothing_error(a: &Subset, b: &BohrSet, bp: &BohrSet, br: &BohrSet) -> Result<f64> {
    let fa = fourier(&DensityFn::indicator(a));
    let fb = fourier(&b.beta(1.0)?);
    let fp = fourier(&bp.beta(1.0)?);
    let fr = fourier(&br.beta(1.0)?);
    let vals = (0..a.group().size())
        .map(|k| fa.at(k) * fb.at(k) * (fp.at(k) + fr.at(k) - 2.0))
        .collect();
    let e = inverse_fourier(&FourierCoeffs::new(a.group(), vals)?);
    Ok(e.max_abs())
}

/// Width choices for one stage.
struct Widths {
    rho_p: f64,
    rho_pp: f64,
    bp: RegularBohr,
    /// Regular `B'_{ρ''}`; `B''` is its doubling.
    br: RegularBohr,
    bpp: BohrSet,
    err: f64,
    limit: f64,
}

fn choose_widths(st: &IterationState, a: &Subset, cfg: &RunConfig) -> Result<Option<Widths>> {
    let b = &st.bohr.set;
    let limit = cfg.c_main * st.alpha / 4.0;
    for rho_p in cfg.grids.dyadic(0.5) {
        let bp = match RegularBohr::find(&b.dilate(rho_p)?, cfg) {
            Ok(r) => r,
            Err(Error::NoRegularDilate { .. }) => continue,
            Err(e) => return Err(e),
        };
        let d = bp.dimension().max(1.0);
        let target = bp.set.members(cfg.c_main * st.alpha / (2.0 * d))?;
        for rho_pp in cfg.grids.dyadic(0.5) {
            // B'' only shrinks under regularisation, so test the raw dilate first.
            let raw = bp.set.dilate(rho_pp)?.doubled()?;
            if !raw.members(1.0)?.is_subset_of(&target) {
                continue;
            }
            let br = match RegularBohr::find(&bp.set.dilate(rho_pp)?, cfg) {
                Ok(r) => r,
                Err(Error::NoRegularDilate { .. }) => continue,
                Err(e) => return Err(e),
            };
            let err = smoothing_error(a, b, &bp.set, &br.set)?;
            if err > limit {
                continue;
            }
            let bpp = br.set.doubled()?;
            return Ok(Some(Widths {
                rho_p,
                rho_pp,
                bp,
                br,
                bpp,
                err,
                limit,
            }));
        }
    }
    Ok(None)
}

fn is_non_certifying(e: &Error) -> bool {
    matches!(
        e,
        Error::NoRegularDilate { .. }
            | Error::HypothesisFailed { .. }
            | Error::IncrementTooSmall { .. }
            | Error::InitFailed { .. }
            | Error::CaseSplitFailed(_)
            | Error::PostconditionFailed(_)
            | Error::MaxStepsExceeded(_)
            | Error::EmptyResult { .. }
            | Error::DichotomyFailed(_)
    )
}

/// One stage of the iteration.
pub fn increment_step(st: &IterationState, a: &Subset, cfg: &RunConfig) -> Result<StepOutcome> {
    let g = a.group();
    require_odd(g)?;
    let b = &st.bohr.set;
    let mut rec = StepRecord {
        i: st.i,
        bohr: b.to_spec(),
        rank: b.rank(),
        dimension: st.bohr.dimension(),
        measure: b.measure(1.0)?,
        alpha: st.alpha,
        rho_p: None,
        rho_pp: None,
        smoothing_error: None,
        smoothing_limit: None,
        quick_prime: None,
        quick_double: None,
        x: None,
        alpha1: None,
        alpha2: None,
        rho_kk: None,
        kk_trace: Vec::new(),
        dichotomy: None,
        increment: None,
        branch: Branch::Terminal,
        next_alpha: None,
        next_rank: None,
        next_measure: None,
        next_certificate: None,
        rejected: Vec::new(),
    };
    let threshold = st.alpha * (1.0 + cfg.c_main / 4.0);

    let w = choose_widths(st, a, cfg)?.ok_or_else(|| Error::StepStalled {
        step: st.i,
        reason: "no (ρ', ρ'') on the grid meets regularity, containment and smoothing".into(),
    })?;
    rec.rho_p = Some(w.rho_p);
    rec.rho_pp = Some(w.rho_pp);
    rec.smoothing_error = Some(w.err);
    rec.smoothing_limit = Some(w.limit);

    let bpm = w.bp.set.members(1.0)?;
    let brm = w.br.set.members(1.0)?;
    let qp = max_density(a, &bpm)?;
    let qd = max_density(a, &brm)?;
    rec.quick_prime = Some(qp);
    rec.quick_double = Some(qd);
    for (q, set, branch) in [(qp, &w.bp, Branch::QuickPrime), (qd, &w.br, Branch::QuickDouble)] {
        if q >= threshold {
            return Ok(advance(st, set.clone(), q, branch, rec));
        }
    }

    // Centre: first x maximising min(1_A ∗ β'(x), 1_A ∗ β_R(x)).
    let rp = representation_counts(a, &bpm)?;
    let rr = representation_counts(a, &brm)?;
    let (np, nr) = (bpm.len() as f64, brm.len() as f64);
    let mut x = 0;
    let mut best = f64::NEG_INFINITY;
    for y in 0..g.size() {
        let v = (rp[y] as f64 / np).min(rr[y] as f64 / nr);
        if v > best {
            best = v;
            x = y;
        }
    }
    rec.x = Some(g.coords(x));
    let bppm = w.bpp.members(1.0)?;
    let a1 = a.translate(g.neg(x)).intersect(&bpm)?;
    let a2 = a.dilate(2).neg().translate(g.add(x, x)).intersect(&bppm)?;
    let alpha1 = a1.len() as f64 / bpm.len() as f64;
    let alpha2 = a2.len() as f64 / bppm.len() as f64;
    rec.alpha1 = Some(alpha1);
    rec.alpha2 = Some(alpha2);

    // μ(B')μ(B'')⟨1_{A1} ∗ (1_{A2} dβ''), 1_{-A1}⟩_{β'} = #{u + v + w = 0} / N².
    let n = g.size() as f64;
    let r12 = representation_counts(&a1, &a2)?;
    let zero_sums: u64 = a1.members().iter().map(|&w| r12[g.neg(w)]).sum();
    let mu_bp = whole_measure(&bpm);
    let mu_bpp = whole_measure(&bppm);
    let mut ev = ApCountEvidence {
        inner_product: zero_sums as f64 / (bpm.len() as f64 * bppm.len() as f64),
        mu_bp,
        mu_bpp,
        lb_direct: zero_sums as f64 / (n * n),
        lb_chain: None,
        kk_relative_measure: None,
        kk_steps: None,
        cs_inner_product: None,
        lambda: None,
        sigma: None,
        alpha1,
        alpha2,
        symbolic_reference: (a.measure() / 2.0).powf(1.0 / a.measure()),
        fallback: None,
    };
    if a1.is_empty() || a2.is_empty() {
        ev.fallback = Some("A1 or A2 is empty".into());
        return Ok(StepOutcome::Terminal(ev, rec));
    }

    // Katz-Koester on (B', B'', B_kk) with B_kk a regular dilate of B''.
    let mut pair: Option<(KkPair, BohrSet, f64)> = None;
    for rho_kk in cfg.grids.dyadic(0.5).into_iter().take(KK_ATTEMPTS) {
        let bkk = match RegularBohr::find(&w.bpp.dilate(rho_kk)?, cfg) {
            Ok(r) => r.set,
            Err(e) if is_non_certifying(&e) => {
                rec.rejected.push(format!("ρ_kk = {rho_kk}: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let setup = KkSetup {
            b: w.bp.set.clone(),
            bp: w.bpp.clone(),
            bpp: bkk.clone(),
            a: a1.clone(),
            ap: a2.clone(),
            dimension: Some(w.bp.dimension()),
            rho_prime: Some(w.rho_pp),
        };
        let run = match Kk::new(setup).and_then(|k| k.iterate(cfg)) {
            Ok(r) => r,
            Err(e) if is_non_certifying(&e) => {
                rec.rejected.push(format!("ρ_kk = {rho_kk}: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        rec.rho_kk = Some(rho_kk);
        rec.kk_trace = run.trace;
        match run.outcome {
            KkOutcome::Increment(inc) => match take_increment(st, a, &inc, cfg)? {
                Some((next, q)) => {
                    rec.increment = Some(inc.report.clone());
                    return Ok(advance(st, next, q, Branch::KkIncrement, rec));
                }
                None => {
                    rec.rejected.push(format!(
                        "ρ_kk = {rho_kk}: increment leaves ‖1_A ∗ β‖_∞ below {threshold}"
                    ));
                    continue;
                }
            },
            KkOutcome::Pair(p) => {
                pair = Some((p, bkk, rho_kk));
                break;
            }
        }
    }
    let Some((p, bkk, _)) = pair else {
        ev.fallback = Some(format!("Katz-Koester did not certify: {}", rec.rejected.join("; ")));
        return Ok(StepOutcome::Terminal(ev, rec));
    };

    let neg_a1 = a1.neg();
    match cs_dichotomy(&w.bp.set, &bkk, &p.l, &p.s, &neg_a1, cfg) {
        Ok(Dichotomy::LargeInnerProduct { value, report }) => {
            let rel = bkk.count(1.0)? as f64 / bppm.len() as f64;
            ev.kk_relative_measure = Some(rel);
            ev.kk_steps = Some(p.steps);
            ev.cs_inner_product = Some(value);
            ev.lambda = Some(p.lambda);
            ev.sigma = Some(p.sigma);
            ev.lb_chain = Some(mu_bp * mu_bpp * rel * value / p.steps.max(1) as f64);
            rec.dichotomy = Some(*report);
            Ok(StepOutcome::Terminal(ev, rec))
        }
        Ok(Dichotomy::Increment { evidence, report, .. }) => {
            rec.dichotomy = Some(*report);
            rec.increment = Some(evidence.report.clone());
            match take_increment(st, a, &evidence, cfg)? {
                Some((next, q)) => Ok(advance(st, next, q, Branch::CsIncrement, rec)),
                None => {
                    ev.fallback = Some(format!(
                        "dichotomy increment leaves ‖1_A ∗ β‖_∞ below {threshold}"
                    ));
                    Ok(StepOutcome::Terminal(ev, rec))
                }
            }
        }
        Err(e) if is_non_certifying(&e) => {
            ev.fallback = Some(format!("dichotomy did not certify: {e}"));
            Ok(StepOutcome::Terminal(ev, rec))
        }
        Err(e) => Err(e),
    }
}

/// Attempts at the Katz-Koester width before giving up.
const KK_ATTEMPTS: usize = 6;

/// The regular Bohr set produced by an increment, if `A` is dense enough
/// on it to count as progress for the original set.
fn take_increment(
    st: &IterationState,
    a: &Subset,
    inc: &EnergyIncrement,
    cfg: &RunConfig,
) -> Result<Option<(RegularBohr, f64)>> {
    let reg = match &inc.report.regular {
        Some(cert) => RegularBohr {
            set: inc.b2.clone(),
            cert: RegularityCertificate {
                lambda: 1.0,
                ..cert.clone()
            },
        },
        None => match RegularBohr::find(&inc.b2, cfg) {
            Ok(r) => r,
            Err(Error::NoRegularDilate { .. }) => return Ok(None),
            Err(e) => return Err(e),
        },
    };
    let q = max_density(a, &*reg.set.members(1.0)?)?;
    if q >= st.alpha * (1.0 + cfg.c_main / 4.0) {
        Ok(Some((reg, q)))
    } else {
        Ok(None)
    }
}

fn advance(
    st: &IterationState,
    next: RegularBohr,
    q: f64,
    branch: Branch,
    mut rec: StepRecord,
) -> StepOutcome {
    rec.branch = branch;
    rec.next_alpha = Some(q);
    rec.next_rank = Some(next.set.rank());
    rec.next_measure = next.set.measure(1.0).ok();
    rec.next_certificate = Some(next.cert.clone());
    StepOutcome::Next(
        IterationState {
            i: st.i + 1,
            bohr: next,
            alpha: q,
        },
        rec,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub group: String,
    pub alpha: f64,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub terminal: ApCountEvidence,
    pub brute: ApCount,
    /// `i0` and its allowance `C_steps · log(2/α)`.
    pub i0: usize,
    pub step_bound: f64,
}

impl IterationLog {
    /// Every violated run-level check, empty when the run is sound.
    pub fn violations(&self, cfg: &RunConfig) -> Vec<String> {
        let mut out = Vec::new();
        let factor = 1.0 + cfg.c_main / 4.0;
        for s in &self.steps {
            if let Some(next) = s.next_alpha {
                if !(next > s.alpha) || next < s.alpha * factor * (1.0 - 1e-12) {
                    out.push(format!("step {}: α {} → {} below factor {factor}", s.i, s.alpha, next));
                }
            }
        }
        if self.i0 as f64 > self.step_bound {
            out.push(format!("i0 = {} exceeds {}", self.i0, self.step_bound));
        }
        let claimed = self.terminal.claimed();
        if claimed > self.brute.value * (1.0 + 1e-12) {
            out.push(format!("claimed bound {claimed} exceeds brute-force value {}", self.brute.value));
        }
        if self.terminal.lb_direct > self.brute.value * (1.0 + 1e-12) {
            out.push(format!(
                "direct bound {} exceeds brute-force value {}",
                self.terminal.lb_direct, self.brute.value
            ));
        }
        out
    }
}

pub fn run_main_iteration(g: &Group, a: &Subset, cfg: &RunConfig, seed: u64) -> Result<IterationLog> {
    require_odd(g)?;
    if a.group() != g {
        return Err(Error::GroupMismatch);
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("A must be nonempty".into()));
    }
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    let alpha = a.measure();
    let mut st = IterationState::initial(a, &cfg)?;
    let mut steps = Vec::new();
    loop {
        if st.i >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded(cfg.max_steps));
        }
        match increment_step(&st, a, &cfg)? {
            StepOutcome::Next(next, rec) => {
                steps.push(rec);
                st = next;
            }
            StepOutcome::Terminal(ev, rec) => {
                steps.push(rec);
                return Ok(IterationLog {
                    group: g.spec_string(),
                    alpha,
                    seed,
                    i0: st.i,
                    step_bound: cfg.c_steps * (2.0 / alpha).ln(),
                    steps,
                    terminal: ev,
                    brute: count_3ap(g, a, CountMode::Brute)?,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    #[test]
    fn full_group_counts() {
        let g = Group::cyclic(5).unwrap();
        let a = Subset::full(&g);
        for mode in [CountMode::Brute, CountMode::Fourier] {
            let c = count_3ap(&g, &a, mode).unwrap();
            assert_eq!(c.triple_count, 25);
            assert!((c.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_set_matches_oracle() {
        let g = Group::cyclic(7).unwrap();
        let a = Subset::from_indices(&g, [0, 1, 3]).unwrap();
        let want = oracle::triple_count(&a);
        for mode in [CountMode::Brute, CountMode::Fourier] {
            assert_eq!(count_3ap(&g, &a, mode).unwrap().triple_count, want);
        }
    }

    #[test]
    fn even_order_rejected() {
        let g = Group::cyclic(8).unwrap();
        assert!(matches!(
            count_3ap(&g, &Subset::full(&g), CountMode::Brute),
            Err(Error::EvenOrder(8))
        ));
    }

    #[test]
    fn embedding_keeps_progressions() {
        let (g, s) = freiman_embed(&[1, 2, 3], 3).unwrap();
        assert_eq!(g.size(), 7);
        assert_eq!(count_3ap(&g, &s, CountMode::Brute).unwrap().triple_count, 5);
        let (g, s) = freiman_embed(&[1, 10], 10).unwrap();
        assert_eq!(count_3ap(&g, &s, CountMode::Brute).unwrap().triple_count, 2);
        assert!(matches!(freiman_embed(&[0], 5), Err(Error::OutOfRange { value: 0, .. })));
    }

    #[test]
    fn whole_group_terminates_immediately() {
        let g = Group::cyclic(31).unwrap();
        let a = Subset::full(&g);
        let cfg = RunConfig::default();
        let log = run_main_iteration(&g, &a, &cfg, 0).unwrap();
        assert_eq!(log.i0, 0);
        assert!((log.brute.value - 1.0).abs() < 1e-12);
        assert!((log.terminal.lb_direct - 1.0).abs() < 1e-12);
        assert!(log.violations(&cfg).is_empty());
    }

    #[test]
    fn random_set_run_is_sound() {
        let g = Group::cyclic(101).unwrap();
        let a = Subset::from_indices(&g, (0..101).filter(|x| (x * 37 + 11) % 7 < 3)).unwrap();
        let cfg = RunConfig::default();
        let log = run_main_iteration(&g, &a, &cfg, 1).unwrap();
        assert!(log.violations(&cfg).is_empty(), "{:?}", log.violations(&cfg));
    }
}
