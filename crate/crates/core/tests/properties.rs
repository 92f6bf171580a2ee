mod common;

use std::collections::{BTreeMap, HashSet};

use cachepir::audit::{census, spans_desired, structural_symmetry, verify_cost, verify_decodability};
use cachepir::bounds::{self, corner_point, inner_bound, known_prefetch_cost, outer_bound, Params};
use cachepir::protocol::{collect_answers, decode, prefetch, retrieve, MessageStore};
use cachepir::rational::{decimal, exact, parse_rational, ratio, to_f64};
use cachepir::scheme::{round_profile, BitRef, Equation, PlanBuilder, QueryPlan};
use cachepir::seed::Seed;
use cachepir::{DecodeError, Rational};
use common::{baseline_direct, corner_by_counting, inner_direct, outer_chord, p};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

fn unit_ratio() -> impl Strategy<Value = Rational> {
    (1i64..=400).prop_flat_map(|d| (0..=d).prop_map(move |a| ratio(a, d)))
}

fn small_params() -> impl Strategy<Value = Params> {
    (2usize..=12, 2usize..=6).prop_map(|(k, n)| p(k, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inner_matches_direct_sums(params in small_params(), r in unit_ratio()) {
        prop_assert_eq!(inner_bound(params, &r).unwrap(), inner_direct(params, &r));
    }

    #[test]
    fn outer_matches_chord_minimum(params in small_params(), r in unit_ratio()) {
        prop_assert_eq!(outer_bound(params, &r).unwrap(), outer_chord(params, &r));
    }

    #[test]
    fn bounds_are_ordered(params in small_params(), r in unit_ratio()) {
        let outer = outer_bound(params, &r).unwrap();
        let inner = inner_bound(params, &r).unwrap();
        let baseline = known_prefetch_cost(params, &r).unwrap();
        prop_assert!(inner >= Rational::zero());
        prop_assert!(outer >= inner);
        prop_assert!(outer <= baseline);
        prop_assert_eq!(baseline, baseline_direct(params, &r));
    }

    #[test]
    fn outer_is_decreasing_and_convex(params in small_params(), a in unit_ratio(), b in unit_ratio()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mid = (&lo + &hi) / Rational::from_integer(2.into());
        let f = |r: &Rational| outer_bound(params, r).unwrap();
        prop_assert!(f(&lo) >= f(&hi));
        prop_assert!(f(&mid) * Rational::from_integer(2.into()) <= f(&lo) + f(&hi));
    }

    #[test]
    fn rational_text_round_trips(a in -10_000i64..10_000, b in 1i64..10_000) {
        let r = ratio(a, b);
        prop_assert_eq!(parse_rational(&exact(&r)).unwrap(), r.clone());
        let shown: f64 = decimal(&r, 12).parse().unwrap();
        let truth = to_f64(&r);
        prop_assert!((shown - truth).abs() <= truth.abs() * 1e-11 + 1e-300);
    }
}

#[test]
fn corners_agree_with_equation_counts() {
    for k in 2..=8 {
        for n in 2..=5 {
            let params = p(k, n);
            for s in 0..k {
                let c = corner_point(params, s).unwrap();
                assert_eq!((c.ratio, c.cost), corner_by_counting(params, s), "{params} s={s}");
            }
        }
    }
}

/// Desired equations whose interference is not cached must carry, verbatim,
/// an undesired equation sent to another database.
fn side_information_is_reused(plan: &QueryPlan, cached: &HashSet<BitRef>) -> bool {
    let theta = plan.meta.theta;
    plan.per_db.iter().enumerate().all(|(db, queries)| {
        queries.iter().filter(|e| e.term_for(theta).is_some()).all(|eq| {
            let rest: Vec<BitRef> = eq.terms().iter().copied().filter(|t| t.msg != theta).collect();
            if rest.iter().all(|t| cached.contains(t)) {
                return true;
            }
            plan.per_db
                .iter()
                .enumerate()
                .filter(|(other, _)| *other != db)
                .any(|(_, list)| list.iter().any(|u| u.terms() == rest.as_slice()))
        })
    })
}

fn plan_for(params: Params, s: usize, theta: usize, seed: u64) -> (QueryPlan, MessageStore, cachepir::protocol::CacheState) {
    let b = PlanBuilder::corner(params, s, theta).unwrap();
    let store = MessageStore::random(params.k, b.msg_len(), Seed(seed));
    let cache = prefetch(&store, b.cached_per_message(), Seed(seed)).unwrap();
    (b.build(&cache, Seed(seed)).unwrap(), store, cache)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn corner_plans_have_the_scheme_shape(
        (k, n, s, theta) in (2usize..=5, 2usize..=3).prop_flat_map(|(k, n)| (Just(k), Just(n), 0..k, 0..k)),
        seed in any::<u64>(),
    ) {
        let params = p(k, n);
        let (plan, store, cache) = plan_for(params, s, theta, seed);
        let profile = round_profile(params, s).unwrap();

        // database symmetry and the per-size census of the round profile
        let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &profile.rounds {
            *by_size.entry(r.round).or_default() += r.desired_per_db + r.undesired_per_db;
        }
        by_size.retain(|_, c| *c > 0);
        for list in &plan.per_db {
            prop_assert_eq!(list.len(), profile.per_db());
            let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
            for eq in list {
                *sizes.entry(eq.len()).or_default() += 1;
            }
            prop_assert_eq!(&sizes, &by_size);
        }
        prop_assert_eq!(
            BigInt::from(plan.total_downloads()),
            bounds::corner_download_total(params, s).unwrap()
        );

        prop_assert!(structural_symmetry(&plan).passed);

        let cached: HashSet<BitRef> = (0..k).flat_map(|m| cache.indices(m).map(move |b| BitRef::new(m, b))).collect();
        prop_assert!(side_information_is_reused(&plan, &cached));

        // every cached undesired bit is mixed in exactly once per database
        for list in &plan.per_db {
            let mut used: Vec<BitRef> = list.iter().flat_map(|e| e.terms().iter().copied()).filter(|t| cached.contains(t)).collect();
            used.sort();
            let mut expected: Vec<BitRef> = if s == 0 {
                Vec::new()
            } else {
                cached.iter().copied().filter(|t| t.msg != theta).collect()
            };
            expected.sort();
            prop_assert_eq!(used, expected);
        }

        let answers = collect_answers(&store, &plan).unwrap();
        prop_assert_eq!(decode(&plan, &answers, &cache).unwrap(), store.message(theta).to_vec());
        prop_assert!(spans_desired(&plan, &cache));
    }

    #[test]
    fn census_does_not_depend_on_the_desired_message(
        (k, n, s) in (2usize..=5, 2usize..=3).prop_flat_map(|(k, n)| (Just(k), Just(n), 0..k)),
        seed in any::<u64>(),
    ) {
        let params = p(k, n);
        let census_of = |theta| -> Vec<BTreeMap<Vec<usize>, usize>> {
            plan_for(params, s, theta, seed).0.per_db.iter().map(|l| census(l)).collect()
        };
        let first = census_of(0);
        for theta in 1..k {
            prop_assert_eq!(&census_of(theta), &first);
        }
    }

    #[test]
    fn dropping_any_query_breaks_both_recovery_routes(
        (k, n, s, theta) in (2usize..=4, 2usize..=3).prop_flat_map(|(k, n)| (Just(k), Just(n), 0..k, 0..k)),
        seed in any::<u64>(),
        pick in any::<prop::sample::Index>(),
    ) {
        let params = p(k, n);
        let (mut plan, store, cache) = plan_for(params, s, theta, seed);
        let (db, pos) = {
            let flat: Vec<(usize, usize)> = plan.per_db.iter().enumerate()
                .flat_map(|(db, l)| (0..l.len()).map(move |i| (db, i))).collect();
            flat[pick.index(flat.len())]
        };
        plan.per_db[db].remove(pos);
        let answers = collect_answers(&store, &plan).unwrap();
        let decoded = decode(&plan, &answers, &cache);
        let expected_failure = matches!(
            decoded,
            Err(DecodeError::MissingSideInformation { .. }) | Err(DecodeError::Incomplete { .. })
        );
        prop_assert!(expected_failure, "unexpected decode result {:?}", decoded);
        prop_assert!(!spans_desired(&plan, &cache));
    }

    #[test]
    fn composed_ratios_retrieve_at_the_outer_bound(
        (k, n, theta) in (2usize..=4, 2usize..=3).prop_flat_map(|(k, n)| (Just(k), Just(n), 0..k)),
        d in 1i64..=24,
        a in 0i64..=24,
        seed in any::<u64>(),
    ) {
        let r = ratio(a.min(d), d);
        let params = p(k, n);
        let t = retrieve(params, theta, &r, Seed(seed)).unwrap();
        prop_assert_eq!(&t.decoded, &t.desired_message);
        prop_assert!(verify_decodability(&t).unwrap());
        prop_assert!(verify_cost(&t));
        prop_assert_eq!(t.cost, outer_bound(params, &r).unwrap());
        prop_assert!(structural_symmetry(&t.plan).passed);
    }
}

#[test]
fn single_message_equations_only_at_the_no_cache_corner() {
    let (plan, _, _) = plan_for(p(3, 2), 0, 1, 9);
    let singles: Vec<&Equation> = plan.per_db[0].iter().filter(|e| e.len() == 1).collect();
    assert_eq!(singles.len(), 3);
    assert!(plan_for(p(3, 2), 1, 1, 9).0.per_db.iter().flatten().all(|e| e.len() > 1));
    assert_eq!(plan.cost(), ratio(7, 4));
}

#[test]
fn corners_approach_the_many_message_curve() {
    use cachepir::bounds::{asymptotic_outer, corner_cost, corner_ratio};
    use num_traits::Signed;
    let tol = ratio(1, 1000);
    for n in [2, 3] {
        let params = p(500, n);
        for s in [350, 400, 450, 475] {
            let r = corner_ratio(params, s).unwrap();
            let diff = (corner_cost(params, s).unwrap() - asymptotic_outer(n, &r).unwrap()).abs();
            assert!(diff < tol, "N={n} s={s}: {}", to_f64(&diff));
        }
    }
    // at s/K = 0.6 the two-database difference is still above the tolerance
    let params = p(500, 2);
    let r = corner_ratio(params, 300).unwrap();
    let diff = (corner_cost(params, 300).unwrap() - asymptotic_outer(2, &r).unwrap()).abs();
    assert!(diff > tol);
}
