use std::collections::HashMap;

use sparsedp::harness::brute_probability;
use sparsedp::harness::stats::{chi2_goodness_of_fit, ks_two_sample};
use sparsedp::summarize::{
    choose_theta, conditional_cdf, filter_shortcut, filter_threshold_shortcut, inclusion_probability,
    priority_shortcut, sample_conditional, select_zero_locations, threshold_shortcut, Kind, Sided,
};
use sparsedp::{summarize, DomainSpec, MethodSpec, NoiseSpec, RngHandle, SparseTable};

fn alpha(a: f64) -> NoiseSpec {
    NoiseSpec::from_alpha(a).unwrap()
}

fn table(m: u64, cells: impl IntoIterator<Item = (u64, i64)>) -> SparseTable {
    SparseTable::from_entries(DomainSpec::flat(m).unwrap(), cells).unwrap()
}

#[test]
fn inclusion_worked_values() {
    let s = alpha(0.5);
    let p = |k, th, tau| inclusion_probability(k, &s, th, tau).unwrap();
    assert!((p(Kind::Filter1, 1, 0) - 1.0 / 3.0).abs() < 1e-15);
    assert!((p(Kind::Filter2, 1, 0) - 2.0 / 3.0).abs() < 1e-15);
    assert!((p(Kind::Combined, 1, 2) - 0.5).abs() < 1e-15);
    assert!(inclusion_probability(Kind::Combined, &s, 3, 2).is_err());
}

#[test]
fn combined_reductions() {
    for (a, tau) in [(0.3, 1), (0.5, 4), (0.9, 17), (0.99, 250)] {
        let s = alpha(a);
        let combined0 = inclusion_probability(Kind::Combined, &s, 0, tau).unwrap();
        let combined1 = inclusion_probability(Kind::Combined, &s, 1, tau).unwrap();
        let thresh = inclusion_probability(Kind::Threshold, &s, 0, tau).unwrap();
        assert!((combined0 - thresh).abs() < 1e-14 * thresh.max(1e-300));
        assert!((combined1 - thresh).abs() < 1e-14 * thresh.max(1e-300));
    }
    let s = alpha(0.7);
    let f2 = inclusion_probability(Kind::Filter2, &s, 6, 0).unwrap();
    let c = inclusion_probability(Kind::Combined, &s, 6, 6).unwrap();
    assert!((f2 - c).abs() < 1e-14);
}

#[test]
fn cdf_worked_values() {
    let s = alpha(0.5);
    assert!((conditional_cdf(Kind::Filter1, &s, 2, 0, 2).unwrap() - 0.5).abs() < 1e-12);
    for (a, tau) in [(0.5, 2), (0.9, 7), (0.2, 1)] {
        let s = alpha(a);
        assert!((conditional_cdf(Kind::Threshold, &s, 0, tau, 0).unwrap() - 0.5).abs() < 1e-12);
        assert!((conditional_cdf(Kind::Threshold, &s, 0, tau, 10_000).unwrap() - 1.0).abs() < 1e-12);
    }
    // per side: weight 1/4 at |nu| = 1 and 1/2 beyond, so the lower tail holds 1/3
    assert!((conditional_cdf(Kind::Threshold, &s, 0, 2, -2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(conditional_cdf(Kind::Filter1, &s, 3, 0, 2).unwrap(), 0.0);
}

#[test]
fn cdf_matches_brute_force() {
    for (kind, th, tau) in [(Kind::Filter1, 4, 0), (Kind::Filter2, 3, 0), (Kind::Threshold, 0, 7), (Kind::Combined, 2, 9)] {
        for a in [0.2, 0.6, 0.95] {
            let s = alpha(a);
            let brute = brute_probability(kind, &s, th, tau);
            for nu in -40..=40 {
                let got = conditional_cdf(kind, &s, th, tau, nu).unwrap();
                assert!((got - brute.cdf(nu)).abs() < 1e-10, "{kind:?} a={a} nu={nu}");
            }
        }
    }
}

fn sampler_fits_oracle(kind: Kind, a: f64, th: u64, tau: u64, seed: u64) -> f64 {
    let s = alpha(a);
    let brute = brute_probability(kind, &s, th, tau);
    let slot: HashMap<i64, usize> = brute.pmf.iter().enumerate().map(|(k, &(nu, _))| (nu, k)).collect();
    let mut observed = vec![0u64; brute.pmf.len()];
    let mut rng = RngHandle::new(seed);
    for _ in 0..100_000 {
        let v = sample_conditional(kind, &s, th, tau, &mut rng).unwrap();
        observed[*slot.get(&v).unwrap_or_else(|| panic!("{v} outside the support"))] += 1;
    }
    let probs: Vec<f64> = brute.pmf.iter().map(|p| p.1).collect();
    chi2_goodness_of_fit(&observed, &probs).p_value
}

#[test]
fn conditional_sampler_matches_oracle() {
    assert!(sampler_fits_oracle(Kind::Threshold, 0.5, 0, 3, 1) > 0.001);
    assert!(sampler_fits_oracle(Kind::Combined, 0.5, 2, 5, 2) > 0.001);
    assert!(sampler_fits_oracle(Kind::Filter1, 0.9, 5, 0, 3) > 0.001);
    assert!(sampler_fits_oracle(Kind::Filter2, 0.99, 30, 0, 4) > 0.001);
    assert!(sampler_fits_oracle(Kind::Threshold, 0.905, 0, 60, 5) > 0.001);
}

#[test]
fn combined_frequencies_follow_magnitude() {
    // kept values have Pr[nu] proportional to |nu| a^|nu| for 2 <= |nu| <= 5
    let s = alpha(0.5);
    let mut rng = RngHandle::new(7);
    let mut counts: HashMap<i64, u64> = HashMap::new();
    let n = 200_000;
    for _ in 0..n {
        *counts.entry(sample_conditional(Kind::Combined, &s, 2, 5, &mut rng).unwrap()).or_default() += 1;
    }
    assert!(counts.keys().all(|v| v.abs() >= 2));
    let r = counts[&3] as f64 / counts[&2] as f64;
    assert!((r - 0.75).abs() < 0.03, "{r}");
    let sym = counts[&-4] as f64 / counts[&4] as f64;
    assert!((sym - 1.0).abs() < 0.05);
}

#[test]
fn zero_locations_are_uniform_pairs() {
    let t = table(16, [(1, 1), (5, 2), (9, 3), (15, 4)]);
    let mut rng = RngHandle::new(11);
    let mut counts: HashMap<(u64, u64), u64> = HashMap::new();
    for _ in 0..100_000 {
        let mut v = select_zero_locations(&t, 2, &mut rng).unwrap();
        assert!(v.iter().all(|&i| !t.is_nonzero(i)));
        v.sort_unstable();
        assert_ne!(v[0], v[1]);
        *counts.entry((v[0], v[1])).or_default() += 1;
    }
    assert_eq!(counts.len(), 66);
    let observed: Vec<u64> = counts.values().copied().collect();
    assert!(chi2_goodness_of_fit(&observed, &vec![1.0 / 66.0; 66]).p_value > 0.001);
}

#[test]
fn zero_locations_dense_branch() {
    let t = table(16, [(1, 1), (5, 2), (9, 3), (15, 4)]);
    let mut rng = RngHandle::new(12);
    let mut marginal = vec![0u64; 16];
    for _ in 0..20_000 {
        let v = select_zero_locations(&t, 9, &mut rng).unwrap();
        let mut d = v.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 9);
        for i in v {
            marginal[i as usize] += 1;
        }
    }
    let zeros: Vec<u64> = (0..16).filter(|&i| !t.is_nonzero(i)).map(|i| marginal[i as usize]).collect();
    assert!(chi2_goodness_of_fit(&zeros, &vec![1.0 / 12.0; 12]).p_value > 0.001);
    assert!(select_zero_locations(&t, 0, &mut rng).unwrap().is_empty());
    assert_eq!(select_zero_locations(&t, 12, &mut rng).unwrap().len(), 12);
    assert!(select_zero_locations(&t, 13, &mut rng).is_err());
}

#[test]
fn strong_privacy_filter_keeps_the_big_cell() {
    let t = table(10, [(2, 1000)]);
    let s = NoiseSpec::with_epsilon(10.0).unwrap();
    let out = filter_shortcut(&t, 5, Sided::One, &s, &mut RngHandle::new(1)).unwrap();
    assert_eq!(out.entries.len(), 1);
    assert_eq!(out.entries[0].index, 2);
    assert!((out.entries[0].value - 1000).abs() <= 2);
}

#[test]
fn filter_support_and_upgraded_zero_count() {
    let spec = NoiseSpec::with_epsilon(0.1).unwrap();
    let t = table(1_000_000, (0..100_000u64).map(|i| (i * 10, 100)));
    let theta = 40;
    let p = inclusion_probability(Kind::Filter1, &spec, theta, 0).unwrap();
    let runs = 60;
    let mut total = 0u64;
    for r in 0..runs {
        let s = filter_shortcut(&t, theta, Sided::One, &spec, &mut RngHandle::new(100 + r)).unwrap();
        assert!(s.entries.iter().all(|e| e.value >= theta as i64));
        total += s.entries.iter().filter(|e| !t.is_nonzero(e.index)).count() as u64;
    }
    let zeros = t.zeros() as f64;
    let mean = total as f64 / runs as f64;
    let se = (zeros * p * (1.0 - p) / runs as f64).sqrt();
    assert!((mean - zeros * p).abs() < 4.0 * se, "{mean} vs {}", zeros * p);
}

#[test]
fn choose_theta_bracket() {
    let spec = NoiseSpec::with_epsilon(0.1).unwrap();
    assert_eq!(choose_theta(1_000_000, 100_000, 10_000.0, &spec, Sided::One).unwrap(), 39);
}

#[test]
fn threshold_tau_one_keeps_every_nonzero_value() {
    let spec = NoiseSpec::with_epsilon(1.0).unwrap();
    let t = table(100_000, (0..1000u64).map(|i| (i * 97, 100)));
    let a = spec.alpha();
    let p = 2.0 * a / (1.0 + a);
    let s = threshold_shortcut(&t, 1, &spec, &mut RngHandle::new(3)).unwrap();
    assert!(s.entries.iter().all(|e| e.value != 0));
    assert!(t.entries().iter().all(|&(i, _)| s.get(i).is_some()));
    let zeros = s.entries.iter().filter(|e| !t.is_nonzero(e.index)).count() as f64;
    let z = t.zeros() as f64;
    assert!((zeros - z * p).abs() < 4.0 * (z * p * (1.0 - p)).sqrt());
}

#[test]
fn threshold_inclusion_of_a_mid_count() {
    let spec = NoiseSpec::with_epsilon(0.1).unwrap();
    let t = table(2, [(0, 100)]);
    // E[min(|100 + X|/200, 1)] by summation
    let expected: f64 = (-2000i64..=2000)
        .map(|x| sparsedp::noise::geom_pmf(&spec, x) * ((100 + x).unsigned_abs() as f64 / 200.0).min(1.0))
        .sum();
    let trials = 40_000;
    let mut rng = RngHandle::new(4);
    let hits = (0..trials)
        .filter(|_| threshold_shortcut(&t, 200, &spec, &mut rng).unwrap().get(0).is_some())
        .count() as f64;
    let se = (expected * (1.0 - expected) / trials as f64).sqrt();
    assert!((hits / trials as f64 - expected).abs() < 4.0 * se);
}

#[test]
fn combined_zero_rate_worked_example() {
    let spec = alpha(0.5);
    let t = table(200_000, [(0, 10)]);
    let s = filter_threshold_shortcut(&t, 1, 2, &spec, &mut RngHandle::new(5)).unwrap();
    let kept = s.entries.iter().filter(|e| e.index != 0).count() as f64;
    let z = t.zeros() as f64;
    assert!((kept / z - 0.5).abs() < 4.0 * (0.25 / z).sqrt());
    assert!(s.entries.iter().all(|e| e.value.abs() >= 1));
}

#[test]
fn combined_theta_zero_is_threshold() {
    let spec = NoiseSpec::with_epsilon(0.5).unwrap();
    let t = table(50_000, (0..500u64).map(|i| (i * 100, 20)));
    let sizes = |ft: bool, seed: u64| -> Vec<usize> {
        let mut rng = RngHandle::new(seed);
        (0..400)
            .map(|_| {
                if ft {
                    filter_threshold_shortcut(&t, 0, 8, &spec, &mut rng).unwrap().len()
                } else {
                    threshold_shortcut(&t, 8, &spec, &mut rng).unwrap().len()
                }
            })
            .collect()
    };
    assert!(ks_two_sample(&sizes(true, 1), &sizes(false, 2)).p_value > 0.001);
}

#[test]
fn two_sided_filter_support() {
    let spec = alpha(0.8);
    let t = table(10_000, (0..100u64).map(|i| (i * 50, 3)));
    let s = filter_shortcut(&t, 4, Sided::Two, &spec, &mut RngHandle::new(6)).unwrap();
    assert!(s.entries.iter().all(|e| e.value.abs() >= 4));
    assert!(s.entries.iter().any(|e| e.value < 0));
}

#[test]
fn priority_has_fixed_size_and_valid_tau() {
    let spec = NoiseSpec::with_epsilon(0.5).unwrap();
    let t = table(4096, (0..200u64).map(|i| (i * 20, 30)));
    for seed in 0..20 {
        let s = priority_shortcut(&t, 64, &spec, &mut RngHandle::new(seed)).unwrap();
        assert_eq!(s.len(), 64);
        let tau_s = s.params.tau_s.unwrap();
        assert!(tau_s > 0.0);
        for e in &s.entries {
            assert!((e.weight.abs() - (e.value.abs() as f64).max(tau_s)).abs() < 1e-9);
        }
    }
}

#[test]
fn priority_inclusion_tracks_threshold_inclusion() {
    let spec = NoiseSpec::with_epsilon(0.5).unwrap();
    let m = 4096u64;
    let t = table(m, (0..400u64).map(|i| (i * 10, 5 + (i % 40) as i64)));
    let tau = 60;
    let trials = 3000;
    let mut rng = RngHandle::new(21);
    let mut thr = vec![0u32; m as usize];
    let mut size = 0usize;
    for _ in 0..trials {
        let s = threshold_shortcut(&t, tau, &spec, &mut rng).unwrap();
        size += s.len();
        for e in &s.entries {
            thr[e.index as usize] += 1;
        }
    }
    let s_size = (size as f64 / trials as f64).round() as usize;
    let mut pri = vec![0u32; m as usize];
    for _ in 0..trials {
        let s = priority_shortcut(&t, s_size, &spec, &mut rng).unwrap();
        for e in &s.entries {
            pri[e.index as usize] += 1;
        }
    }
    assert!(ks_two_sample(&thr, &pri).p_value > 0.001);
}

#[test]
fn summarize_rejects_bad_parameters() {
    let spec = NoiseSpec::with_epsilon(0.5).unwrap();
    let t = table(100, [(1, 1)]);
    let mut rng = RngHandle::new(0);
    assert!(summarize(&t, &MethodSpec::Filter { theta: 0, sided: Sided::One }, &spec, &mut rng).is_err());
    assert!(summarize(&t, &MethodSpec::Threshold { tau: 0 }, &spec, &mut rng).is_err());
    assert!(summarize(&t, &MethodSpec::FilterThreshold { theta: 5, tau: 4 }, &spec, &mut rng).is_err());
}

mod round_trip {
    use proptest::prelude::*;
    use sparsedp::summarize::{read_summary, write_summary, Sided};
    use sparsedp::{summarize, DomainSpec, MethodSpec, NoiseSpec, RngHandle, SparseTable};

    fn methods() -> impl Strategy<Value = MethodSpec> {
        prop_oneof![
            (1u64..20).prop_map(|theta| MethodSpec::Filter { theta, sided: Sided::One }),
            (1u64..20).prop_map(|theta| MethodSpec::Filter { theta, sided: Sided::Two }),
            (1u64..50).prop_map(|tau| MethodSpec::Threshold { tau }),
            (1u64..10).prop_map(|theta| MethodSpec::FilterThreshold { theta, tau: theta + 5 }),
            (1usize..300).prop_map(|size| MethodSpec::Priority { size }),
            (1usize..300).prop_map(|size| MethodSpec::FilterPriority { theta: 3, size }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn write_then_read_is_identity(method in methods(), seed in 0u64..1000, eps in 0.05f64..3.0) {
            let t = SparseTable::from_entries(
                DomainSpec::flat(3000).unwrap(),
                (0..100u64).map(|i| (i * 29, 1 + (i * seed) as i64 % 60)),
            ).unwrap();
            let spec = NoiseSpec::with_epsilon(eps).unwrap();
            let s = summarize(&t, &method, &spec, &mut RngHandle::new(seed)).unwrap();
            let mut buf = Vec::new();
            write_summary(&s, &mut buf).unwrap();
            prop_assert_eq!(read_summary(buf.as_slice()).unwrap(), s);
        }
    }
}
