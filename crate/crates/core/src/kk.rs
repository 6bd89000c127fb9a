//! The Katz-Koester iteration: grow a thick set `L ⊆ B` while keeping a
//! not-too-thin `S ⊆ B''` with `1_L ∗ (1_S dβ'')` dominated by
//! `1_A ∗ (1_{A'} dβ')`, or find a density increment for `A`.
//!
//! All convolution values reduce to integer counts:
//! `1_{-L} ∗ (1_A dβ)(-x) = |L ∩ (x + A)| / |B|`,
//! `(1_{-S} dβ'') ∗ 1_{A'}(x) = |S ∩ (A' - x)| / |B''|`, and the
//! domination `1_L ∗ (1_S dβ'') ≤ i μ_{B'}(B'')⁻¹ 1_A ∗ (1_{A'} dβ')`
//! is `r_{L,S}(x) ≤ i r_{A,A'}(x)` for representation counts `r`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bohr::BohrSet;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::group::Subset;
use crate::sets::{overlap_counts, representation_counts};
use crate::spectra::{energy_increment, hypothesis_sum, EnergyIncrement, EnergyIncrementInput};

/// The fixed data of one iteration: `A ⊆ B`, `A' ⊆ B'`, `B'' ⊆ B'`.
#[derive(Debug, Clone)]
pub struct KkSetup {
    pub b: BohrSet,
    pub bp: BohrSet,
    pub bpp: BohrSet,
    pub a: Subset,
    pub ap: Subset,
    /// Dimension of `B` and `ρ'`, reported to the energy-increment step.
    pub dimension: Option<f64>,
    pub rho_prime: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KkState {
    pub i: usize,
    pub l: Subset,
    pub s: Subset,
    pub lambda: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KkStepRecord {
    pub i: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub case: String,
    pub x: Option<Vec<usize>>,
    /// `β'(𝓛)` for the step's case split.
    pub large_measure: Option<f64>,
    /// `β'(𝓢)`.
    pub s_measure: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KkPair {
    pub l: Subset,
    pub s: Subset,
    pub lambda: f64,
    pub sigma: f64,
    pub steps: usize,
    /// `C` with `1_L ∗ (1_S dβ'') ≤ C α⁻¹ μ_{B'}(B'')⁻¹ 1_A ∗ (1_{A'} dβ')`.
    pub domination_constant: f64,
    /// `C_σ` with `σ = (α'/2)^{C_σ / α}`.
    pub sigma_exponent: f64,
}

#[derive(Debug, Clone)]
pub enum KkOutcome {
    Increment(Box<EnergyIncrement>),
    Pair(KkPair),
}

#[derive(Debug, Clone)]
pub struct KkRun {
    pub outcome: KkOutcome,
    pub trace: Vec<KkStepRecord>,
    pub alpha: f64,
    pub alpha_prime: f64,
    /// `∫ 1_{A'} ∗ β'' dβ'`, which should be close to `α'`.
    pub init_average: f64,
}

pub enum StepResult {
    Continue(KkState, KkStepRecord),
    Increment(Box<EnergyIncrement>, KkStepRecord),
}

/// Precomputed member sets and counts for one setup.
pub struct Kk {
    pub setup: KkSetup,
    b: Arc<Subset>,
    bp: Arc<Subset>,
    bpp: Arc<Subset>,
    pub alpha: f64,
    pub alpha_prime: f64,
    r_aap: Vec<u64>,
}

impl Kk {
    pub fn new(setup: KkSetup) -> Result<Self> {
        let b = setup.b.members(1.0)?;
        let bp = setup.bp.members(1.0)?;
        let bpp = setup.bpp.members(1.0)?;
        if !setup.a.is_subset_of(&b) || setup.a.is_empty() {
            return Err(Error::InvalidArgument("A must be a nonempty subset of B".into()));
        }
        if !setup.ap.is_subset_of(&bp) || setup.ap.is_empty() {
            return Err(Error::InvalidArgument("A' must be a nonempty subset of B'".into()));
        }
        if !bpp.is_subset_of(&bp) {
            return Err(Error::InvalidArgument("B'' must be contained in B'".into()));
        }
        let alpha = setup.a.len() as f64 / b.len() as f64;
        let alpha_prime = setup.ap.len() as f64 / bp.len() as f64;
        let r_aap = representation_counts(&setup.a, &setup.ap)?;
        Ok(Kk {
            setup,
            b,
            bp,
            bpp,
            alpha,
            alpha_prime,
            r_aap,
        })
    }

    fn coords(&self, x: usize) -> Vec<usize> {
        self.setup.a.group().coords(x)
    }

    /// `|B'' ∩ (A' - x)|` for every `x`.
    fn s0_counts(&self) -> Result<Vec<u64>> {
        representation_counts(&self.setup.ap, &self.bpp.neg())
    }

    /// First `x ∈ B'` maximising `β''(B'' ∩ (A' - x))`; returns the initial
    /// state and `∫ 1_{A'} ∗ β'' dβ'`.
    pub fn init(&self) -> Result<(KkState, f64, KkStepRecord)> {
        let counts = self.s0_counts()?;
        let nbpp = self.bpp.len() as f64;
        let mut best: Option<(usize, u64)> = None;
        let mut total = 0u64;
        for &x in self.bp.members() {
            total += counts[x];
            if best.is_none_or(|(_, c)| counts[x] > c) {
                best = Some((x, counts[x]));
            }
        }
        let (x, c) = best.expect("B' contains 0");
        let achieved = c as f64 / nbpp;
        let average = total as f64 / (nbpp * self.bp.len() as f64);
        if achieved < self.alpha_prime / 2.0 {
            return Err(Error::InitFailed {
                achieved,
                required: self.alpha_prime / 2.0,
            });
        }
        let s = self.bpp.intersect(&self.setup.ap.translate(self.setup.a.group().neg(x)))?;
        let g = self.setup.a.group();
        let state = KkState {
            i: 0,
            l: Subset::empty(g),
            sigma: s.len() as f64 / nbpp,
            s,
            lambda: 0.0,
        };
        let rec = KkStepRecord {
            i: 0,
            lambda: 0.0,
            sigma: state.sigma,
            case: "init".into(),
            x: Some(self.coords(x)),
            large_measure: None,
            s_measure: None,
        };
        Ok((state, average, rec))
    }

    /// One application of the case split.
    pub fn step(&self, st: &KkState, cfg: &RunConfig) -> Result<StepResult> {
        let g = self.setup.a.group();
        let nb = self.b.len() as f64;
        let nbp = self.bp.len() as f64;
        let nbpp = self.bpp.len() as f64;
        let (alpha, alpha_p) = (self.alpha, self.alpha_prime);

        let l_counts = overlap_counts(&st.l, &self.setup.a)?;
        let large: Vec<usize> = self
            .bp
            .members()
            .iter()
            .copied()
            .filter(|&x| l_counts[x] as f64 / nb >= alpha / 2.0)
            .collect();
        let large_measure = large.len() as f64 / nbp;

        if large_measure >= alpha_p / 8.0 {
            let t = Subset::from_indices(g, large.iter().map(|&x| g.neg(x)))?;
            let eta = alpha.sqrt() / 16.0;
            let (hyp, _) = hypothesis_sum(&self.setup.b, &self.setup.a, &self.setup.bp, &t, eta)?;
            let nu = hyp / (alpha * alpha * self.b.measure());
            let inp = EnergyIncrementInput {
                b: self.setup.b.clone(),
                a: self.setup.a.clone(),
                bp: self.setup.bp.clone(),
                t,
                eta,
                nu,
                dimension: self.setup.dimension,
                rho_prime: self.setup.rho_prime,
            };
            let inc = energy_increment(&inp, cfg)?;
            let rec = KkStepRecord {
                i: st.i + 1,
                lambda: st.lambda,
                sigma: st.sigma,
                case: "increment".into(),
                x: None,
                large_measure: Some(large_measure),
                s_measure: None,
            };
            return Ok(StepResult::Increment(Box::new(inc), rec));
        }

        let s_counts = representation_counts(&self.setup.ap, &st.s.neg())?;
        let cut = alpha_p * st.sigma / 2.0;
        let in_s: Vec<usize> = self
            .bp
            .members()
            .iter()
            .copied()
            .filter(|&x| s_counts[x] as f64 / nbpp >= cut)
            .collect();
        let s_measure = in_s.len() as f64 / nbp;
        let is_large = |x: usize| large.binary_search(&x).is_ok();
        let x = match in_s.iter().copied().find(|&x| !is_large(x)) {
            Some(x) => x,
            None => {
                return Err(Error::CaseSplitFailed(format!(
                    "no x in 𝓢 \\ 𝓛: β'(𝓛) = {large_measure}, β'(𝓢) = {s_measure}, step {}",
                    st.i + 1
                )))
            }
        };
        let l2 = st.l.union(&self.setup.a.translate(x).intersect(&self.b)?)?;
        let s2 = st.s.intersect(&self.setup.ap.translate(g.neg(x)))?;
        let lambda = l2.len() as f64 / nb;
        let sigma = s2.len() as f64 / nbpp;
        let tol = cfg.tolerance;
        if lambda < st.lambda + alpha / 4.0 - tol {
            return Err(Error::PostconditionFailed(format!(
                "β(L') = {lambda} < λ + α/4 = {} at step {}",
                st.lambda + alpha / 4.0,
                st.i + 1
            )));
        }
        if sigma < alpha_p * st.sigma / 2.0 - tol {
            return Err(Error::PostconditionFailed(format!(
                "β''(S') = {sigma} < α'σ/2 = {} at step {}",
                alpha_p * st.sigma / 2.0,
                st.i + 1
            )));
        }
        let next = KkState {
            i: st.i + 1,
            l: l2,
            s: s2,
            lambda,
            sigma,
        };
        if let Some(x_bad) = self.domination_violation(&next)? {
            return Err(Error::PostconditionFailed(format!(
                "domination fails at {x_bad:?} after step {}",
                next.i
            )));
        }
        let rec = KkStepRecord {
            i: next.i,
            lambda,
            sigma,
            case: "pair".into(),
            x: Some(self.coords(x)),
            large_measure: Some(large_measure),
            s_measure: Some(s_measure),
        };
        Ok(StepResult::Continue(next, rec))
    }

    /// First `x` where `r_{L,S}(x) > i r_{A,A'}(x)`, checked over all of G.
    pub fn domination_violation(&self, st: &KkState) -> Result<Option<Vec<usize>>> {
        let r_ls = representation_counts(&st.l, &st.s)?;
        Ok(r_ls
            .iter()
            .zip(&self.r_aap)
            .position(|(&l, &a)| l > st.i as u64 * a)
            .map(|x| self.coords(x)))
    }

    pub fn iterate(&self, cfg: &RunConfig) -> Result<KkRun> {
        let (mut st, init_average, rec) = self.init()?;
        let mut trace = vec![rec];
        while st.lambda <= cfg.c1_kk {
            if st.i >= cfg.kk_max_steps {
                return Err(Error::MaxStepsExceeded(cfg.kk_max_steps));
            }
            match self.step(&st, cfg)? {
                StepResult::Continue(next, rec) => {
                    trace.push(rec);
                    st = next;
                }
                StepResult::Increment(inc, rec) => {
                    trace.push(rec);
                    return Ok(KkRun {
                        outcome: KkOutcome::Increment(inc),
                        trace,
                        alpha: self.alpha,
                        alpha_prime: self.alpha_prime,
                        init_average,
                    });
                }
            }
        }
        let limit = (cfg.c_iter / self.alpha).ceil() as usize;
        if st.i > limit {
            return Err(Error::PostconditionFailed(format!(
                "iteration took {} steps, more than ⌈C_iter/α⌉ = {limit}",
                st.i
            )));
        }
        let floor = (self.alpha_prime / 2.0).powi(st.i as i32 + 1);
        if st.sigma < floor * (1.0 - cfg.tolerance) {
            return Err(Error::PostconditionFailed(format!(
                "σ = {} below (α'/2)^(i+1) = {floor}",
                st.sigma
            )));
        }
        let sigma_exponent = self.alpha * st.sigma.ln() / (self.alpha_prime / 2.0).ln();
        Ok(KkRun {
            outcome: KkOutcome::Pair(KkPair {
                domination_constant: st.i as f64 * self.alpha,
                sigma_exponent,
                steps: st.i,
                lambda: st.lambda,
                sigma: st.sigma,
                l: st.l,
                s: st.s,
            }),
            trace,
            alpha: self.alpha,
            alpha_prime: self.alpha_prime,
            init_average,
        })
    }
}

pub fn kk_init(setup: &KkSetup) -> Result<KkState> {
    Ok(Kk::new(setup.clone())?.init()?.0)
}

pub fn kk_step(setup: &KkSetup, state: &KkState, cfg: &RunConfig) -> Result<StepResult> {
    Kk::new(setup.clone())?.step(state, cfg)
}

pub fn kk_iterate(setup: &KkSetup, cfg: &RunConfig) -> Result<KkRun> {
    Kk::new(setup.clone())?.iterate(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;

    fn whole_setup(g: &Group, a: Subset, ap: Subset) -> KkSetup {
        let b = BohrSet::whole(g);
        KkSetup {
            b: b.clone(),
            bp: b.clone(),
            bpp: b,
            a,
            ap,
            dimension: None,
            rho_prime: None,
        }
    }

    #[test]
    fn full_sets_terminate_fast() {
        let g = Group::cyclic(31).unwrap();
        let setup = whole_setup(&g, Subset::full(&g), Subset::full(&g));
        let run = kk_iterate(&setup, &RunConfig::default()).unwrap();
        match run.outcome {
            KkOutcome::Pair(p) => {
                assert_eq!(p.steps, 1);
                assert!(p.lambda > 0.25);
            }
            KkOutcome::Increment(_) => panic!("full A cannot increment"),
        }
    }

    #[test]
    fn init_beats_the_average() {
        let g = Group::cyclic(31).unwrap();
        let b = BohrSet::whole(&g);
        let bpp = BohrSet::from_indices(&g, vec![1], vec![1.0]).unwrap();
        let setup = KkSetup {
            b: b.clone(),
            bp: b,
            bpp,
            a: Subset::full(&g),
            ap: Subset::from_indices(&g, [3]).unwrap(),
            dimension: None,
            rho_prime: None,
        };
        let (st, average, _) = Kk::new(setup).unwrap().init().unwrap();
        assert!(st.sigma >= average - 1e-12);
        assert_eq!(st.s.len(), 1);
    }

    #[test]
    fn first_step_takes_small_branch() {
        let g = Group::cyclic(101).unwrap();
        let a = Subset::from_indices(&g, (0..101).filter(|x| x % 3 == 0)).unwrap();
        let ap = Subset::from_indices(&g, (0..101).filter(|x| x % 4 != 1)).unwrap();
        let setup = whole_setup(&g, a, ap);
        let kk = Kk::new(setup).unwrap();
        let (st, avg, _) = kk.init().unwrap();
        assert!((avg - kk.alpha_prime).abs() < 1e-12);
        match kk.step(&st, &RunConfig::default()).unwrap() {
            StepResult::Continue(next, rec) => {
                assert_eq!(rec.large_measure, Some(0.0));
                assert!(next.lambda >= kk.alpha / 4.0);
                assert!(kk.domination_violation(&next).unwrap().is_none());
            }
            StepResult::Increment(..) => panic!("empty L cannot give a large 𝓛"),
        }
    }
}
