//! Seeded values frozen from first runs; any change means the sampled stream
//! or an estimator changed.

use fsl_core::carpet::{example_templates, BandPolicy, CarpetEntry, CarpetFamily};
use fsl_core::gwtree::{GapMode, GwTree, OffspringDistribution, DEFAULT_NODE_CAP};
use fsl_core::ldp::BoundedDiscreteRV;
use fsl_core::onevar_ss::IfsFamily;
use fsl_core::DimensionFunction;

const SEED: u64 = 1729;

fn mixed_carpet() -> CarpetFamily {
    let (f1, f2) = example_templates();
    CarpetFamily::new(vec![
        CarpetEntry { template: f1, weight: 0.5 },
        CarpetEntry { template: f2, weight: 0.5 },
    ])
    .unwrap()
}

#[test]
fn gw_tree_stream() {
    let dist = OffspringDistribution::with_base2(vec![0.0, 0.5, 0.5]).unwrap();
    let tree = GwTree::simulate(&dist, 30, SEED, DEFAULT_NODE_CAP).unwrap();
    assert_eq!(tree.population(30), 89857);
    assert_eq!(tree.normalized_population(20), 0.47725638313706564);
    let phi = DimensionFunction::log_log(0.25).unwrap();
    let est = tree.phi_assouad_estimate(&phi, 8..=20, GapMode::ExactGap).unwrap();
    assert_eq!(est.s_hat, 1.0);
    assert_eq!((est.witness.k, est.witness.node, est.witness.l, est.witness.count), (8, 0, 9, 2));
}

#[test]
fn self_similar_convergent_estimate() {
    let fam = IfsFamily::from_triples(&[(2, 0.5, 0.5), (2, 0.25, 0.5)], false).unwrap();
    let c = fam.sample_coding(10_000, SEED).unwrap();
    let e = c.phi_assouad_estimate(&DimensionFunction::constant(0.05).unwrap(), 5000..=9000).unwrap();
    assert!((e.s_hat - 0.6931818181818167).abs() < 1e-12);
    assert!(e.s_hat <= 2.0 / 3.0 + 0.06);
    assert_eq!((e.witness.k, e.witness.l), (5876, 6181));
}

#[test]
fn carpet_loglog_estimate_exceeds_quasi_assouad() {
    let fam = mixed_carpet();
    let c = fam.sample_coding(100_000, SEED).unwrap();
    let phi = DimensionFunction::log_log(0.3).unwrap();
    let e = c.phi_assouad_estimate(&phi, 10_000..=50_000, BandPolicy::Enforce).unwrap();
    assert!((e.s_hat - 2.48126710308263).abs() < 1e-12);
    assert_eq!(e.k, 11870);
    assert!(e.s_hat > fam.quasi_assouad());
}

#[test]
fn carpet_event_count() {
    let c = mixed_carpet().sample_coding(500_000, SEED).unwrap();
    let events = c.detect_two_block_runs(&DimensionFunction::log_log(0.4).unwrap());
    assert_eq!(events.len(), 2083);
}

#[test]
fn rademacher_tail() {
    let r = BoundedDiscreteRV::rademacher();
    let t = r.empirical_tail(0.2, 200, 1_000_000, SEED).unwrap();
    assert_eq!(t.hits, 2914);
    assert!(t.p_hat <= (-200.0 * r.rate(0.2)).exp());
}

#[test]
fn seed_derivation_is_fixed() {
    assert_eq!(fsl_core::derive_seed(SEED, 0, "gw"), 5172213069052521777);
    assert_eq!(fsl_core::derive_seed(SEED, 1, "gw"), 15265885621223326161);
}
