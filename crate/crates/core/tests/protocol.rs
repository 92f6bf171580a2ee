mod common;

use cachepir::audit::{verify_cost, verify_decodability};
use cachepir::protocol::{decode, retrieve, retrieve_corner, CacheState, Transcript};
use cachepir::rational::ratio;
use cachepir::scheme::{split_for_ratio, PlanBuilder};
use cachepir::seed::Seed;
use cachepir::{DecodeError, Error, Rational};
use common::p;
use num_bigint::BigInt;

#[test]
fn corner_examples_cost_what_the_tables_show() {
    let t = retrieve_corner(p(3, 2), 1, 0, Seed(42)).unwrap();
    assert_eq!((t.per_db_downloads.clone(), t.cost.clone()), (vec![4, 4], ratio(8, 7)));
    let t = retrieve_corner(p(4, 3), 2, 1, Seed(1)).unwrap();
    assert_eq!((t.per_db_downloads.clone(), t.cost.clone()), (vec![6, 6, 6], ratio(18, 17)));
    let t = retrieve(p(3, 2), 0, &Rational::from_integer(0.into()), Seed(3)).unwrap();
    assert_eq!(t.cost, ratio(7, 4));
}

#[test]
fn same_seed_same_transcript() {
    let a = retrieve(p(4, 2), 3, &ratio(1, 10), Seed(5)).unwrap();
    let b = retrieve(p(4, 2), 3, &ratio(1, 10), Seed(5)).unwrap();
    assert_eq!(a, b);
    let c = retrieve(p(4, 2), 3, &ratio(1, 10), Seed(6)).unwrap();
    assert_ne!(a.plan, c.plan);
}

#[test]
fn split_for_one_tenth_clears_both_block_denominators() {
    let split = split_for_ratio(p(4, 2), &ratio(1, 10)).unwrap();
    assert_eq!(split.s, 1);
    assert_eq!(split.alpha, ratio(3, 4));
    assert_eq!(split.l_total, BigInt::from(40));
    assert_eq!((split.block_s, split.block_s1), (BigInt::from(2), BigInt::from(1)));
    let t = retrieve(p(4, 2), 0, &ratio(1, 10), Seed(0)).unwrap();
    assert_eq!(t.msg_len, 40);
    assert_eq!(t.cost, ratio(3, 4) * ratio(22, 15) + ratio(1, 4));
}

#[test]
fn transcript_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let t = retrieve(p(3, 2), 2, &ratio(1, 5), Seed(7)).unwrap();
    t.save(&path).unwrap();
    let back = Transcript::load(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(decode(&back.plan, &back.answers, &back.cache).unwrap(), t.decoded);
    assert_eq!(verify_cost(&back), verify_cost(&t));
    assert!(verify_decodability(&back).unwrap());

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"ratio\":\"1/5\""));
    assert!(text.contains("\"cost\":\"1/1\""));
}

#[test]
fn malformed_transcript_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"params\": 3}").unwrap();
    assert!(matches!(Transcript::load(&path), Err(Error::Contract(_))));
    assert!(matches!(Transcript::load(dir.path().join("missing.json")), Err(Error::Io(_))));

    // an equation naming the same message twice is refused at load time
    let t = retrieve_corner(p(2, 2), 1, 0, Seed(1)).unwrap();
    let mut value = serde_json::to_value(&t).unwrap();
    value["plan"]["per_db"][0][0] = serde_json::json!([[0, 0], [0, 1]]);
    std::fs::write(&path, value.to_string()).unwrap();
    assert!(Transcript::load(&path).is_err());
}

#[test]
fn decoder_needs_the_cache_it_was_planned_for() {
    let t = retrieve_corner(p(3, 2), 2, 0, Seed(2)).unwrap();
    let empty = CacheState::new(t.msg_len, vec![vec![]; 3]).unwrap();
    assert!(matches!(
        decode(&t.plan, &t.answers, &empty),
        Err(DecodeError::MissingSideInformation { .. })
    ));
}

#[test]
fn oversized_simulations_are_refused() {
    assert!(PlanBuilder::for_ratio(p(3, 2), &ratio(1, 2_000_000), 0).is_err());
    assert!(PlanBuilder::corner(p(40, 4), 0, 0).is_err());
}
