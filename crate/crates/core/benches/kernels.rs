//! Parallel against sequential execution of the hot kernels.

use bohrlab_core::roth::{count_3ap, run_main_iteration, CountMode};
use bohrlab_core::sets::representation_counts;
use bohrlab_core::{par, BohrSet, Group, RunConfig, Subset};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(g: &Group, density: f64, seed: u64) -> Subset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Subset::from_indices(g, (0..g.size()).filter(|_| rng.gen::<f64>() < density)).unwrap()
}

const PATHS: [(&str, bool); 2] = [("parallel", true), ("sequential", false)];

fn kernels(c: &mut Criterion) {
    let g = Group::cyclic(2003).unwrap();
    let a = random_set(&g, 0.2, 1);
    let b = BohrSet::from_indices(&g, vec![3, 11], vec![0.6, 0.9]).unwrap();

    let mut grp = c.benchmark_group("count_brute_Z2003");
    for (name, on) in PATHS {
        par::set_enabled(on);
        grp.bench_function(name, |bch| bch.iter(|| count_3ap(&g, &a, CountMode::Brute).unwrap()));
    }
    grp.finish();

    let mut grp = c.benchmark_group("representation_counts_Z2003");
    for (name, on) in PATHS {
        par::set_enabled(on);
        grp.bench_function(name, |bch| bch.iter(|| representation_counts(&a, &a).unwrap()));
    }
    grp.finish();

    let mut grp = c.benchmark_group("bohr_members_Z2003");
    for (name, on) in PATHS {
        par::set_enabled(on);
        for rho in [0.25, 1.0] {
            grp.bench_with_input(BenchmarkId::new(name, rho), &rho, |bch, &r| {
                bch.iter(|| b.members_uncached(r).unwrap())
            });
        }
    }
    grp.finish();

    let cfg = RunConfig::default();
    let h = Group::cyclic(1001).unwrap();
    let s = random_set(&h, 0.1, 9);
    let mut grp = c.benchmark_group("roth_run_Z1001");
    grp.sample_size(10);
    for (name, on) in PATHS {
        par::set_enabled(on);
        grp.bench_function(name, |bch| bch.iter(|| run_main_iteration(&h, &s, &cfg, 4).unwrap()));
    }
    grp.finish();
    par::set_enabled(true);
}

criterion_group!(benches, kernels);
criterion_main!(benches);
