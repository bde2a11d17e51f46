mod common;

use std::collections::BTreeMap;

use coalescent::ancestral::{lineage_mean, lineage_pmf, r_pmf, tmrca_cdf};
use coalescent::ewens::{esf_log_prob, expected_k, parse_allele_data, theta_mle, AlleleConfiguration};
use coalescent::posterior::{factorial_moment_r, cond_r_pmf, predictive_lineage_pmf, PredictiveQuery};
use coalescent::simulator::{replicate_rng, step_block_process, BlockState, Histogram};
use common::params;
use proptest::prelude::*;

fn histogram(values: &[usize]) -> Histogram {
    let mut h = Histogram::default();
    for &v in values {
        h.add(v);
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lineage_pmf_is_a_distribution(m in 1usize..40, theta in 0.1f64..12.0, t in 0.3f64..5.0) {
        let p = params(theta, t);
        let pmf = lineage_pmf(m, &p).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-12);
        prop_assert!(pmf.probs.iter().all(|&v| v >= 0.0));
        prop_assert!(pmf.mass_defect < 1e-8);
        prop_assert!((pmf.mean() - lineage_mean(m, &p).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn tmrca_cdf_is_monotone_in_t(m in 2usize..20, theta in 0.1f64..10.0, t in 0.2f64..3.0, dt in 0.01f64..1.0) {
        let r = m / 2;
        let a = tmrca_cdf(m, r, &params(theta, t)).unwrap();
        let b = tmrca_cdf(m, r, &params(theta, t + dt)).unwrap();
        prop_assert!(a <= b + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
    }

    #[test]
    fn r_pmf_moments_agree(n in 0usize..30, m in 0usize..30, theta in 0.1f64..10.0, r in 0usize..4) {
        let pmf = r_pmf(n, m, theta).unwrap();
        let exact = factorial_moment_r(r, n, 0, m, 0, theta).unwrap();
        prop_assert!((pmf.factorial_moment(r) - exact).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn conditional_support(n in 1usize..12, m in 1usize..12, mp in 0usize..8, theta in 0.2f64..6.0, seed in 0u64..1000) {
        let y = (seed as usize) % (n.min(m) + 1);
        let pmf = cond_r_pmf(n, m, mp, y, theta).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-10);
        prop_assert!(pmf.iter().all(|(x, p)| p == 0.0 || (y..=(y + mp).min(n)).contains(&x)));
    }

    #[test]
    fn predictive_support(m in 1usize..10, mp in 0usize..6, theta in 0.3f64..6.0, t in 0.3f64..2.0, seed in 0u64..100) {
        let y = 1 + (seed as usize) % m;
        let q = PredictiveQuery::new(m, mp, y, params(theta, t)).unwrap();
        if let Ok(pmf) = predictive_lineage_pmf(&q) {
            prop_assert!((pmf.total() - 1.0).abs() < 1e-12);
            prop_assert!(pmf.iter().all(|(x, p)| p == 0.0 || (y..=y + mp).contains(&x)));
        }
    }

    #[test]
    fn esf_is_exchangeable(counts in prop::collection::vec(1usize..20, 1..12), theta in 0.05f64..20.0) {
        let a = AlleleConfiguration::new(counts.clone()).unwrap();
        let mut rev = counts.clone();
        rev.reverse();
        let mut sorted = counts;
        sorted.sort_unstable();
        let lp = esf_log_prob(&a, theta);
        let r = esf_log_prob(&AlleleConfiguration::new(rev).unwrap(), theta);
        prop_assert!((lp - r).abs() <= 1e-12 * lp.abs().max(1.0));
        let s = esf_log_prob(&AlleleConfiguration::new(sorted).unwrap(), theta);
        prop_assert!((lp - s).abs() <= 1e-12 * lp.abs().max(1.0));
    }

    #[test]
    fn mle_solves_the_moment_equation(counts in prop::collection::vec(1usize..30, 2..20)) {
        let c = AlleleConfiguration::new(counts).unwrap();
        prop_assume!(c.k() < c.m());
        let fit = theta_mle(&c).unwrap();
        if !fit.at_floor {
            prop_assert!((expected_k(c.m(), fit.theta) - c.k() as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn data_forms_agree(counts in prop::collection::vec(1usize..30, 1..15)) {
        let c = AlleleConfiguration::new(counts.clone()).unwrap();
        let spectrum: BTreeMap<String, usize> = c.to_partition().spectrum().iter().map(|(l, n)| (l.to_string(), *n)).collect();
        let from_counts = parse_allele_data(&serde_json::json!({ "counts": counts }).to_string()).unwrap();
        let from_spectrum = parse_allele_data(&serde_json::json!({ "spectrum": spectrum, "m": c.m() }).to_string()).unwrap();
        prop_assert_eq!(&from_counts.partition, &from_spectrum.partition);
        prop_assert_eq!(from_spectrum.partition.to_configuration().to_partition(), from_counts.partition);
    }

    #[test]
    fn block_steps_remove_one_lineage(spectrum in prop::collection::vec(0usize..4, 1..8), theta in 0.1f64..5.0, seed in any::<u64>()) {
        let mut state = BlockState::new(spectrum);
        prop_assume!(!state.is_empty());
        let mut rng = replicate_rng(seed, 0);
        while !state.is_empty() {
            let (hold, next) = step_block_process(&state, theta, &mut rng).unwrap();
            prop_assert!(hold > 0.0);
            prop_assert_eq!(next.x() + 1, state.x());
            prop_assert!(next.d(1) <= next.x() && next.classes() <= next.x());
            state = next;
        }
    }

    #[test]
    fn histogram_merge_is_associative(a in prop::collection::vec(0usize..20, 0..50), b in prop::collection::vec(0usize..20, 0..50), c in prop::collection::vec(0usize..20, 0..50)) {
        let (ha, hb, hc) = (histogram(&a), histogram(&b), histogram(&c));
        let left = ha.clone().merge(hb.clone()).merge(hc.clone());
        let right = ha.clone().merge(hb.clone().merge(hc.clone()));
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(ha.clone().merge(hb.clone()), hb.merge(ha));
        let all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        prop_assert_eq!(left, histogram(&all));
    }

    #[test]
    fn narrowest_interval_is_narrowest(values in prop::collection::vec(0usize..15, 1..200), level in 0.5f64..0.99) {
        let h = histogram(&values);
        let (lo, hi) = h.narrowest_interval(level).unwrap();
        let mass = |a: usize, b: usize| (a..=b).map(|x| h.count(x)).sum::<u64>() as f64;
        let need = level * h.total as f64;
        prop_assert!(mass(lo, hi) >= need - 1e-9);
        for a in 0..h.counts.len() {
            for b in a..h.counts.len() {
                if mass(a, b) >= need - 1e-9 {
                    prop_assert!(b - a > hi - lo || (b - a == hi - lo && a >= lo));
                }
            }
        }
    }
}
