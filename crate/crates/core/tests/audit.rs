mod common;

use cachepir::audit::{
    enumerate_privacy, montecarlo_privacy, montecarlo_privacy_with, structural_symmetry, AuditMode,
    MonteCarloOptions, Signature,
};
use cachepir::protocol::{prefetch, MessageStore};
use cachepir::rational::ratio;
use cachepir::scheme::{Mutation, PlanBuilder, QueryPlan};
use cachepir::seed::Seed;
use cachepir::{Error, Rational};
use common::p;
use num_traits::Zero;

fn plan(k: usize, n: usize, s: usize, theta: usize, mutation: Mutation, seed: u64) -> QueryPlan {
    let b = PlanBuilder::corner(p(k, n), s, theta).unwrap().with_mutation(mutation);
    let store = MessageStore::random(k, b.msg_len(), Seed(seed));
    let cache = prefetch(&store, b.cached_per_message(), Seed(seed)).unwrap();
    b.build(&cache, Seed(seed)).unwrap()
}

fn mc(k: usize, n: usize, s: usize, mutation: Mutation) -> cachepir::audit::PrivacyReport {
    let options = MonteCarloOptions {
        mutation,
        ..MonteCarloOptions::default()
    };
    montecarlo_privacy_with(p(k, n), s, 2000, Seed(11), &options).unwrap()
}

#[test]
fn exhaustive_enumeration_small_instances() {
    for (k, n, s) in [(2, 2, 1), (3, 2, 2)] {
        let report = enumerate_privacy(p(k, n), s).unwrap();
        assert_eq!(report.mode, AuditMode::Exact);
        assert!(report.passed);
        assert_eq!(report.distance, Rational::zero());
        assert_eq!(report.raw_distance, Some(Rational::zero()));
    }
    let err = enumerate_privacy(p(3, 3), 1).unwrap_err();
    assert!(matches!(err, Error::TooLarge { .. }), "{err}");
}

#[test]
fn honest_scheme_passes_montecarlo() {
    let report = montecarlo_privacy(p(3, 2), 1, 2000, Seed(1)).unwrap();
    assert!(report.passed);
    assert_eq!(report.trials, Some(2000));
    assert_eq!(report.threshold, ratio(1, 20));
}

#[test]
fn skipping_message_symmetry_is_caught_by_both_audits() {
    assert!(!structural_symmetry(&plan(3, 2, 1, 0, Mutation::SkipMessageSymmetry, 0)).passed);
    let report = mc(3, 2, 1, Mutation::SkipMessageSymmetry);
    assert!(!report.passed);
    assert_eq!(report.distance, Rational::from_integer(1.into()));
}

#[test]
fn dropping_an_undesired_query_is_caught() {
    assert!(!structural_symmetry(&plan(4, 2, 2, 1, Mutation::DropUndesired, 3)).passed);
    assert!(!mc(4, 2, 2, Mutation::DropUndesired).passed);
}

#[test]
fn biased_mixture_is_caught() {
    assert!(!structural_symmetry(&plan(4, 2, 2, 0, Mutation::BiasMixture, 3)).passed);
    assert!(!mc(4, 2, 2, Mutation::BiasMixture).passed);
}

#[test]
fn skipping_the_shuffle_keeps_signatures_but_not_order() {
    // signatures forget order by design; the shuffle protects raw positions
    let a = plan(3, 2, 1, 0, Mutation::SkipShuffle, 1);
    let b = plan(3, 2, 1, 1, Mutation::SkipShuffle, 1);
    assert!(mc(3, 2, 1, Mutation::SkipShuffle).passed);
    let first_desired = |q: &QueryPlan, theta| q.per_db[0][0].term_for(theta).is_some();
    assert!(first_desired(&a, 0) && first_desired(&b, 1));
}

#[test]
fn signatures_are_the_same_for_every_desired_message() {
    for theta in 1..4 {
        for db in 0..2 {
            assert_eq!(
                Signature::of(&plan(4, 2, 1, theta, Mutation::None, 8).per_db[db]),
                Signature::of(&plan(4, 2, 1, 0, Mutation::None, 8).per_db[db])
            );
        }
    }
}
