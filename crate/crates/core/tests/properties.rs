use bohrlab_core::constructions::{behrend_set, is_3ap_free};
use bohrlab_core::fourier::fourier_fast;
use bohrlab_core::io::{decode_bitmap, encode_bitmap, format_set_lines, parse_set_lines};
use bohrlab_core::roth::{count_3ap, freiman_embed, CountMode};
use bohrlab_core::sets::{representation_counts, sumset};
use bohrlab_core::spectra::{dissociated_subset, spectrum, EntropyOptions};
use bohrlab_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn group_strategy(cap: usize) -> impl Strategy<Value = Group> {
    prop::collection::vec(2usize..=16, 1..=3)
        .prop_filter("size within cap", move |o| o.iter().product::<usize>() <= cap)
        .prop_map(|o| Group::new(&o).unwrap())
}

fn odd_group_strategy(cap: usize) -> impl Strategy<Value = Group> {
    prop::collection::vec((1usize..=20).prop_map(|k| 2 * k + 1), 1..=2)
        .prop_filter("size within cap", move |o| o.iter().product::<usize>() <= cap)
        .prop_map(|o| Group::new(&o).unwrap())
}

fn with_function(g: Group) -> impl Strategy<Value = (Group, DensityFn)> {
    let n = g.size();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
        let vals = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        (g.clone(), DensityFn::new(&g, vals).unwrap())
    })
}

fn with_subset(g: Group) -> impl Strategy<Value = (Group, Subset)> {
    let n = g.size();
    prop::collection::vec(any::<bool>(), n).prop_map(move |m| (g.clone(), Subset::from_mask(&g, m).unwrap()))
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-9 * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_transform_matches_oracle((g, f) in group_strategy(128).prop_flat_map(with_function)) {
        let fast = fourier_fast(&f);
        let direct = oracle::dft(&f).unwrap();
        for k in 0..g.size() {
            prop_assert!(close(fast.at(k), direct[k]));
        }
        let back = inverse_fourier(&fast);
        for x in 0..g.size() {
            prop_assert!(close(back.value(x), f.value(x)));
        }
        let phys: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.size() as f64;
        prop_assert!((phys - fast.energy()).abs() <= 1e-9 * phys.max(1.0));
    }

    #[test]
    fn convolution_matches_oracle((g, f) in group_strategy(64).prop_flat_map(with_function), shift in 0usize..64) {
        let h = f.translate(shift % g.size()).conj();
        let fast = convolve(&f, &h).unwrap();
        let slow = oracle::convolve(&f, &h).unwrap();
        let swapped = convolve(&h, &f).unwrap();
        for x in 0..g.size() {
            prop_assert!(close(fast.value(x), slow[x]));
            prop_assert!(close(fast.value(x), swapped.value(x)));
        }
    }

    #[test]
    fn progression_counts_agree((g, a) in odd_group_strategy(400).prop_flat_map(with_subset)) {
        let b = count_3ap(&g, &a, CountMode::Brute).unwrap();
        let f = count_3ap(&g, &a, CountMode::Fourier).unwrap();
        prop_assert_eq!(b.triple_count, f.triple_count);
        prop_assert!((b.value - f.value).abs() <= 1e-9 * b.value.max(1e-12));
        if g.size() <= 125 {
            prop_assert_eq!(b.triple_count, oracle::triple_count(&a));
        }
    }

    #[test]
    fn embedding_preserves_progressions(mask in prop::collection::vec(any::<bool>(), 1..=60)) {
        let n = mask.len();
        let a: Vec<i64> = (0..n).filter(|&i| mask[i]).map(|i| i as i64 + 1).collect();
        let (g, s) = freiman_embed(&a, n).unwrap();
        prop_assert_eq!(g.size(), 2 * n + 1);
        let c = count_3ap(&g, &s, CountMode::Brute).unwrap().triple_count;
        let (all, nontrivial) = oracle::integer_3ap_counts(&a);
        prop_assert_eq!(c, all);
        prop_assert_eq!(c - a.len() as u64, nontrivial);
        prop_assert_eq!(is_3ap_free(&a), nontrivial == 0);
    }

    #[test]
    fn bohr_laws(freq in prop::collection::vec(1usize..2003, 1..=3), widths in prop::collection::vec(0.02f64..2.0, 3)) {
        let g = Group::cyclic(2003).unwrap();
        let w = widths[..freq.len()].to_vec();
        let b = BohrSet::from_indices(&g, freq.clone(), w.clone()).unwrap();
        let mut prev: Option<Subset> = None;
        for rho in [0.1, 0.3, 1.0, 1.7] {
            let m = b.members_uncached(rho).unwrap();
            prop_assert!(m.contains(0));
            prop_assert!(m.is_symmetric());
            if let Some(p) = &prev {
                prop_assert!(p.is_subset_of(&m));
            }
            let cached = b.members(rho).unwrap();
            prop_assert_eq!(&*cached, &m);
            prev = Some(m);
        }
        let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(b.count(2.0 / wmin).unwrap(), 2003);
        let d = b.doubled().unwrap();
        let orig = b.members(1.0).unwrap();
        let dm = d.members(1.0).unwrap();
        prop_assert_eq!(orig.len(), dm.len());
        prop_assert_eq!(&*dm, &orig.dilate(2));
    }

    #[test]
    fn sumsets_match_pair_loop((g, x) in group_strategy(100).prop_flat_map(with_subset), seed in any::<u64>()) {
        let y = x.translate((seed as usize) % g.size()).dilate(3);
        let r = representation_counts(&x, &y).unwrap();
        let mut want = vec![0u64; g.size()];
        for &a in x.members() {
            for &b in y.members() {
                want[g.add(a, b)] += 1;
            }
        }
        prop_assert_eq!(&r, &want);
        let s = sumset(&x, &y).unwrap();
        for t in 0..g.size() {
            prop_assert_eq!(s.contains(t), want[t] > 0);
        }
    }

    #[test]
    fn set_formats_roundtrip((g, a) in group_strategy(300).prop_flat_map(with_subset)) {
        prop_assert_eq!(decode_bitmap(&encode_bitmap(&a)).unwrap(), a.clone());
        prop_assert_eq!(parse_set_lines(&g, &format_set_lines(&a)).unwrap(), a);
    }

    #[test]
    fn spectra_of_sets((g, a) in group_strategy(200).prop_flat_map(with_subset), eps in 0.1f64..1.0) {
        prop_assume!(!a.is_empty());
        let f = DensityFn::indicator(&a);
        let haar = DensityFn::haar(&g);
        let s = spectrum(&f, &haar, eps).unwrap();
        prop_assert!(s.contains(0));
        for &gm in &s.chars {
            prop_assert!(s.contains(g.neg(gm)));
        }
        let opts = EntropyOptions { omega_trials: 4, ..EntropyOptions::from_config(&RunConfig::default()) };
        let cert = dissociated_subset(&s.by_magnitude(), &haar, 1.0, &opts).unwrap();
        prop_assert!(cert.max_integral <= 1f64.exp() * (1.0 + 1e-9));
        prop_assert!(cert.reevaluate(&g, &haar, 12) <= 1f64.exp() * (1.0 + 1e-9) || !cert.all_sign_patterns);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn behrend_sets_are_free(n in 8u64..3000) {
        let r = behrend_set(n, None).unwrap();
        prop_assert!(r.certified_free);
        prop_assert!(is_3ap_free(&r.set));
        prop_assert!(r.set.iter().all(|&v| v >= 1 && v as u64 <= n));
    }
}
