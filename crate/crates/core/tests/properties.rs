//! Randomised invariants across modules.

use fsl_core::carpet::{CarpetEntry, CarpetFamily, CarpetTemplate};
use fsl_core::gwtree::{GapMode, GwTree, OffspringDistribution, DEFAULT_NODE_CAP};
use fsl_core::ldp::BoundedDiscreteRV;
use fsl_core::onevar_ss::IfsFamily;
use fsl_core::{derive_seed, DimensionFunction};
use proptest::prelude::*;

fn pmf(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut p: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let rest: f64 = p[..p.len() - 1].iter().sum();
    *p.last_mut().unwrap() = 1.0 - rest;
    p
}

fn offspring() -> impl Strategy<Value = OffspringDistribution> {
    prop::collection::vec(0.05f64..1.0, 2..5).prop_map(|w| OffspringDistribution::with_base2(pmf(w)).unwrap())
}

fn atoms() -> impl Strategy<Value = BoundedDiscreteRV> {
    prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 2..5).prop_filter_map("distinct atoms", |raw| {
        let mut values: Vec<f64> = raw.iter().map(|x| (x.0 * 8.0).round() / 8.0).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.len() < 2 {
            return None;
        }
        let probs = pmf(raw.iter().take(values.len()).map(|x| x.1).collect());
        BoundedDiscreteRV::new(values.into_iter().zip(probs).collect()).ok()
    })
}

fn carpet_template() -> impl Strategy<Value = CarpetTemplate> {
    (2u32..5, 1u32..5, any::<u64>()).prop_map(|(m, extra, bits)| {
        let n = m + extra;
        let mut cells: Vec<(u32, u32)> = (0..m * n)
            .filter(|i| bits.rotate_left(*i % 64) & 1 == 1)
            .map(|i| (i % m, i / m))
            .collect();
        if cells.is_empty() {
            cells.push((0, 0));
        }
        CarpetTemplate::new(m, n, cells).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gap_levels_monotone_in_multiplier(k in 4u64..5000, c in 0.01f64..5.0, dc in 0.0f64..5.0) {
        let a = DimensionFunction::log_log(c).unwrap().gap_levels(k, 2.0).unwrap();
        let b = DimensionFunction::log_log(c + dc).unwrap().gap_levels(k, 2.0).unwrap();
        prop_assert!(a >= 1 && b >= a);
    }

    #[test]
    fn tree_partition_and_bounds(dist in offspring(), seed in any::<u64>()) {
        let tree = GwTree::simulate(&dist, 12, seed, DEFAULT_NODE_CAP).unwrap();
        for k in 0..=12 {
            for l in k..=12 {
                let counts = tree.covering_counts(k, l).unwrap();
                prop_assert_eq!(counts.iter().sum::<u64>(), tree.population(l));
            }
        }
        if tree.extinct_at().is_none() {
            let phi = DimensionFunction::log_log(1.0).unwrap();
            let exact = tree.phi_assouad_estimate(&phi, 2..=8, GapMode::ExactGap);
            let wide = tree.phi_assouad_estimate(&phi, 2..=8, GapMode::AtLeastGap);
            if let (Ok(e), Ok(w)) = (exact, wide) {
                let top = (dist.max_offspring() as f64).ln() / 2f64.ln();
                prop_assert!(e.s_hat >= 0.0 && e.s_hat <= top + 1e-12);
                prop_assert!(w.s_hat >= e.s_hat);
            }
        }
        let again = GwTree::simulate(&dist, 12, seed, DEFAULT_NODE_CAP).unwrap();
        prop_assert_eq!(tree.populations(), again.populations());
    }

    #[test]
    fn ss_estimate_within_dimensions(seed in any::<u64>(), c in 0.02f64..0.15) {
        let fam = IfsFamily::from_triples(&[(2, 0.5, 0.5), (3, 0.2, 0.5)], false).unwrap();
        let coding = fam.sample_coding(3000, seed).unwrap();
        let phi = DimensionFunction::constant(c).unwrap();
        let est = coding.phi_assouad_estimate(&phi, 500..=2000).unwrap();
        let lowest = fam.entries().iter().map(|e| e.ifs.exponent()).fold(f64::INFINITY, f64::min);
        prop_assert!(est.s_hat <= fam.assouad_dim() + 1e-9);
        prop_assert!(est.s_hat >= lowest - 1e-9);
        prop_assert!(est.witness.l > est.witness.k);
    }

    #[test]
    fn centred_log_similarity_has_zero_mean(n1 in 2u32..5, c1 in 0.05f64..0.2, p in 0.1f64..0.9) {
        let fam = IfsFamily::from_triples(&[(n1, c1, p), (2, 0.45, 1.0 - p)], false).unwrap();
        let x = fam.log_similarity_rv(fam.box_dim()).unwrap();
        prop_assert!(x.mean().abs() < 1e-12);
        prop_assert!(x.centered().mean().abs() < 1e-12);
    }

    #[test]
    fn carpet_ordering(t1 in carpet_template(), t2 in carpet_template(), w in 0.1f64..0.9) {
        let fam = CarpetFamily::new(vec![
            CarpetEntry { template: t1, weight: w },
            CarpetEntry { template: t2, weight: 1.0 - w },
        ]).unwrap();
        let (b, q, a) = (fam.box_dim(), fam.quasi_assouad(), fam.assouad_dim());
        let mut prev = b;
        for i in 1..100 {
            let s = fam.assouad_spectrum(i as f64 / 100.0).unwrap();
            prop_assert!(b <= s + 1e-12 && s <= q + 1e-12 && q <= a + 1e-12);
            prop_assert!(s >= prev - 1e-12);
            prev = s;
        }
    }

    #[test]
    fn rate_function_shape(rv in atoms()) {
        let (lo, hi, mean) = (rv.ess_inf(), rv.ess_sup(), rv.mean());
        prop_assert!(rv.rate(mean).abs() < 1e-12);
        let h = (hi - lo) / 64.0;
        let grid: Vec<f64> = (1..64).map(|i| lo + i as f64 * h).collect();
        let values: Vec<f64> = grid.iter().map(|&a| rv.rate(a)).collect();
        for v in &values {
            prop_assert!(*v >= -1e-12);
        }
        for w in values.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8);
        }
        for (pair, a) in values.windows(2).zip(&grid) {
            if *a >= mean {
                prop_assert!(pair[1] >= pair[0] - 1e-10);
            }
        }
        for i in -20..20 {
            let t = i as f64 * 0.1;
            let d2 = rv.log_mgf(t + 0.1) + rv.log_mgf(t - 0.1) - 2.0 * rv.log_mgf(t);
            prop_assert!(d2 >= -1e-10);
        }
        prop_assert_eq!(rv.rate(hi + 0.1), f64::INFINITY);
    }

    #[test]
    fn chernoff_upper_bound_holds(a in 0.1f64..0.5, n in 10u64..60, seed in any::<u64>()) {
        let rv = BoundedDiscreteRV::rademacher();
        let bound = (-(n as f64) * rv.rate(a)).exp();
        let trials = 20_000u64;
        if trials as f64 * bound >= 100.0 {
            let p = rv.empirical_tail(a, n, trials, seed).unwrap().p_hat;
            prop_assert!(p <= bound);
        }
    }

    #[test]
    fn derive_seed_injective_in_index(master in any::<u64>(), tag in "[a-z]{1,8}") {
        let mut seen: Vec<u64> = (0..2000).map(|i| derive_seed(master, i, &tag)).collect();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), 2000);
    }
}
