use bohrlab_core::almost_periodic::{cs_translates, CsInstance};
use bohrlab_core::constructions::ternary_free_set;
use bohrlab_core::kk::{kk_iterate, KkOutcome, KkSetup};
use bohrlab_core::roth::*;
use bohrlab_core::spectra::max_density;
use bohrlab_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(g: &Group, density: f64, seed: u64) -> Subset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Subset::from_indices(g, (0..g.size()).filter(|_| rng.gen::<f64>() < density)).unwrap()
}

#[test]
fn whole_group_run() {
    let g = Group::cyclic(101).unwrap();
    let cfg = RunConfig::default();
    let log = run_main_iteration(&g, &Subset::full(&g), &cfg, 0).unwrap();
    assert_eq!(log.i0, 0);
    assert!((log.brute.value - 1.0).abs() < 1e-12);
    assert!(log.violations(&cfg).is_empty());
}

#[test]
fn free_set_bound_never_exceeds_count() {
    let t = ternary_free_set(200).unwrap();
    let (g, a) = freiman_embed(&t.set, 200).unwrap();
    let cfg = RunConfig::default();
    let log = run_main_iteration(&g, &a, &cfg, 3).unwrap();
    let n = g.size() as f64;
    assert!((log.brute.value - a.len() as f64 / (n * n)).abs() < 1e-15);
    assert!(log.terminal.claimed() <= log.brute.value);
    assert!(log.violations(&cfg).is_empty(), "{:?}", log.violations(&cfg));
}

#[test]
fn half_density_terminal_matches_count() {
    let g = Group::cyclic(101).unwrap();
    let a = random_set(&g, 0.5, 5);
    let cfg = RunConfig::default();
    let log = run_main_iteration(&g, &a, &cfg, 1).unwrap();
    assert!(log.violations(&cfg).is_empty());
    // at stage 0 every Bohr set is G, so the direct bound is the full count
    if log.i0 == 0 {
        assert!((log.terminal.lb_direct - log.brute.value).abs() <= 1e-9 * log.brute.value);
    }
}

/// Re-derive each reported density and the terminal bound from raw sets.
#[test]
fn certificates_reverify_from_raw_sets() {
    let g = Group::cyclic(2003).unwrap();
    let a = random_set(&g, 0.2, 11);
    let cfg = RunConfig::default();
    let log = run_main_iteration(&g, &a, &cfg, 2).unwrap();
    for s in &log.steps {
        let b = s.bohr.build().unwrap();
        let m = b.members_uncached(1.0).unwrap();
        let recount = (0..g.size())
            .map(|x| m.members().iter().filter(|&&y| a.contains(g.sub(x, y))).count())
            .max()
            .unwrap() as f64
            / m.len() as f64;
        assert!((recount - s.alpha).abs() < 1e-12, "step {}", s.i);
    }
    let ev = &log.terminal;
    assert!(ev.lb_direct <= log.brute.value);
    assert!((ev.lb_direct - ev.mu_bp * ev.mu_bpp * ev.inner_product).abs() < 1e-12);
}

#[test]
fn concentrated_set_takes_quick_increment() {
    let g = Group::cyclic(2003).unwrap();
    let cfg = RunConfig::default();
    let b = RegularBohr::find(&BohrSet::from_indices(&g, vec![1], vec![1.0]).unwrap(), &cfg).unwrap();
    let a = (*b.set.members(0.3).unwrap()).clone();
    let alpha = max_density(&a, &b.set.members(1.0).unwrap()).unwrap();
    let st = IterationState { i: 0, bohr: b, alpha };
    match increment_step(&st, &a, &cfg).unwrap() {
        StepOutcome::Next(next, rec) => {
            assert!(matches!(rec.branch, Branch::QuickPrime | Branch::QuickDouble));
            assert_eq!(rec.next_rank, Some(1));
            assert!(next.alpha >= alpha * (1.0 + cfg.c_main / 4.0));
        }
        StepOutcome::Terminal(..) => panic!("expected a quick increment"),
    }
}

#[test]
fn runs_do_not_depend_on_parallelism() {
    let g = Group::cyclic(1001).unwrap();
    let a = random_set(&g, 0.1, 9);
    let cfg = RunConfig::default();
    let first = serde_json::to_string(&run_main_iteration(&g, &a, &cfg, 4).unwrap()).unwrap();
    par::set_enabled(false);
    let second = serde_json::to_string(&run_main_iteration(&g, &a, &cfg, 4).unwrap());
    par::set_enabled(true);
    assert_eq!(first, second.unwrap());
}

#[test]
fn kk_domination_on_bohr_sets() {
    let g = Group::cyclic(1009).unwrap();
    let cfg = RunConfig::default();
    let b = RegularBohr::find(&BohrSet::from_indices(&g, vec![5], vec![1.2]).unwrap(), &cfg).unwrap().set;
    let bpp = RegularBohr::find(&b.dilate(0.4).unwrap(), &cfg).unwrap().set;
    let bm = b.members(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = Subset::from_indices(&g, bm.members().iter().copied().filter(|_| rng.gen::<f64>() < 0.15)).unwrap();
    let ap = Subset::from_indices(&g, bm.members().iter().copied().filter(|_| rng.gen::<f64>() < 0.5)).unwrap();
    let setup = KkSetup {
        b: b.clone(),
        bp: b,
        bpp,
        a,
        ap,
        dimension: None,
        rho_prime: None,
    };
    let run = kk_iterate(&setup, &cfg).unwrap();
    assert!(run.trace.len() as f64 <= (cfg.c_iter / run.alpha).ceil() + 1.0);
    if let KkOutcome::Pair(p) = run.outcome {
        assert!(p.lambda > cfg.c1_kk);
        assert!(p.sigma >= (run.alpha_prime / 2.0).powi(p.steps as i32 + 1));
    }
}

#[test]
fn exhaustive_translates_on_bohr_intervals() {
    let g = Group::cyclic(4001).unwrap();
    let a = BohrSet::from_indices(&g, vec![17], vec![0.4]).unwrap().members(1.0).unwrap();
    let s = BohrSet::from_indices(&g, vec![17], vec![0.1]).unwrap().members(1.0).unwrap();
    let l = random_set(&g, 0.3, 2);
    let inst = CsInstance {
        f: DensityFn::indicator(&l),
        a_set: (*a).clone(),
        s_set: (*s).clone(),
        p: 2.0,
        epsilon: 0.25,
        seed: 0,
    };
    let r = cs_translates(&inst, CsMode::Exhaustive, &RunConfig::default()).unwrap();
    assert!(!r.t.is_empty() && r.t.contains(&r.s));
    assert!(r.per_t_norms.iter().all(|&d| d <= r.limit + 1e-9));
    assert!(r.mu_s_t.ln() >= r.log_bound);
}
