//! Verification instruments: decodability, cost reconciliation and privacy.
//!
//! Privacy is compared at the level of [`Signature`]s: what one database can
//! say about its query list once bit identities are forgotten. Under the
//! per-message index permutation, raw indices carry no information beyond
//! that.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bounds::{self, outer_bound, Params};
use crate::error::{Error, Result};
use crate::gf2::Eliminator;
use crate::protocol::{decode, CacheState, Transcript};
use crate::rational::{ratio, serde_exact, Rational};
use crate::scheme::{round_profile, Equation, Mutation, PlanBuilder, QueryPlan};
use crate::seed::Seed;

/// Largest randomness space [`enumerate_privacy`] walks through.
pub const MAX_ENUMERATION_OUTCOMES: u64 = 10_000_000;

/// Smallest trial count accepted by [`montecarlo_privacy`].
pub const MIN_TRIALS: u64 = 1000;

/// Default pass threshold of the Monte-Carlo audit.
pub fn default_threshold() -> Rational {
    ratio(1, 20)
}

fn check_well_formed(t: &Transcript) -> Result<()> {
    let plan = &t.plan;
    let p = t.params;
    if plan.meta.params != p || plan.meta.theta != t.theta || t.theta >= p.k {
        return Err(Error::contract("transcript header disagrees with its plan"));
    }
    if plan.per_db.len() != p.n || t.answers.0.len() != p.n {
        return Err(Error::contract("transcript does not cover every database"));
    }
    if plan.per_db.iter().zip(&t.answers.0).any(|(q, a)| q.len() != a.len()) {
        return Err(Error::contract("answer lists are not aligned with the queries"));
    }
    if t.cache.k() != p.k || t.cache.msg_len() != plan.meta.msg_len || t.desired_message.len() != plan.meta.msg_len {
        return Err(Error::contract("cache or message length disagrees with the plan"));
    }
    Ok(())
}

/// True iff the decoder reproduces the stored message and, independently,
/// the downloaded equations plus cached bits span every desired unit vector
/// over GF(2).
pub fn verify_decodability(t: &Transcript) -> Result<bool> {
    check_well_formed(t)?;
    let decoded_ok = matches!(decode(&t.plan, &t.answers, &t.cache), Ok(bits) if bits == t.desired_message);
    Ok(decoded_ok && spans_desired(&t.plan, &t.cache))
}

/// Rank-based recoverability check. Desired columns are numbered last so
/// that interference is eliminated before desired bits are pivoted on.
pub fn spans_desired(plan: &QueryPlan, cache: &CacheState) -> bool {
    let k = plan.meta.params.k;
    let len = plan.meta.msg_len;
    let theta = plan.meta.theta;
    let column = |msg: usize, bit: usize| ((msg + k - theta - 1) % k) * len + bit;
    let row = |eq: &Equation| eq.terms().iter().map(|t| column(t.msg, t.bit)).collect::<Vec<_>>();

    let mut elim = Eliminator::new();
    let all = plan.per_db.iter().flatten();
    for eq in all.clone().filter(|e| e.term_for(theta).is_none()) {
        elim.insert(&row(eq));
    }
    for m in 0..k {
        for b in cache.indices(m) {
            elim.insert(&[column(m, b)]);
        }
    }
    for eq in all.filter(|e| e.term_for(theta).is_some()) {
        elim.insert(&row(eq));
    }
    (0..len).all(|b| elim.contains(&[column(theta, b)]))
}

/// True iff every database answers equally many queries and the normalized
/// cost equals the achievable bound at the transcript's caching ratio.
pub fn verify_cost(t: &Transcript) -> bool {
    let counts = t.plan.per_db_counts();
    if counts.windows(2).any(|w| w[0] != w[1]) {
        return false;
    }
    let total: usize = counts.iter().sum();
    if total != t.total_downloads || counts != t.per_db_downloads || t.msg_len == 0 {
        return false;
    }
    let cost = Rational::new(BigInt::from(total), BigInt::from(t.msg_len));
    match outer_bound(t.params, &t.ratio) {
        Ok(bound) => cost == bound && cost == t.cost && t.ratio == t.cache.ratio(),
        Err(_) => false,
    }
}

/// Canonical, bit-renaming-invariant description of one database's query
/// list: for every equation its message subset and, per term, how many
/// times that exact bit is referenced in the whole list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(Vec<(Vec<usize>, Vec<usize>)>);

impl Signature {
    pub fn of(queries: &[Equation]) -> Signature {
        let mut uses: HashMap<_, usize> = HashMap::new();
        for t in queries.iter().flat_map(Equation::terms) {
            *uses.entry(*t).or_default() += 1;
        }
        let mut entries: Vec<_> = queries
            .iter()
            .map(|eq| (eq.messages(), eq.terms().iter().map(|t| uses[t]).collect()))
            .collect();
        entries.sort();
        Signature(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    Structural,
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for AuditMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AuditMode::Structural => "structural",
            AuditMode::Exact => "exact",
            AuditMode::MonteCarlo => "montecarlo",
        })
    }
}

/// Outcome of a privacy audit.
///
/// `per_db` holds one distance per database: the largest subset-count
/// imbalance (structural) or the largest total-variation distance between
/// desired indices (exact, Monte-Carlo). `distance` is their maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyReport {
    pub mode: AuditMode,
    #[serde(with = "serde_exact::vec")]
    pub per_db: Vec<Rational>,
    #[serde(with = "serde_exact")]
    pub distance: Rational,
    #[serde(with = "serde_exact")]
    pub threshold: Rational,
    pub passed: bool,
    pub trials: Option<u64>,
    pub outcomes: Option<u64>,
    pub seed: Option<Seed>,
    /// Exact mode only: the same distance over raw ordered query lists.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_exact")]
    pub raw_distance: Option<Rational>,
}

fn opt_exact<S: serde::Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => serde_exact::serialize(r, s),
        None => s.serialize_none(),
    }
}

fn max_of(values: &[Rational]) -> Rational {
    values.iter().cloned().max().unwrap_or_else(Rational::zero)
}

/// Checks that within each database, for every size `t`, all `t`-subsets of
/// messages are queried equally often.
pub fn structural_symmetry(plan: &QueryPlan) -> PrivacyReport {
    let k = plan.meta.params.k;
    let per_db: Vec<Rational> = plan
        .per_db
        .iter()
        .map(|queries| {
            let census = census(queries);
            let worst = (1..=k)
                .map(|t| {
                    let counts: Vec<usize> = (0..k)
                        .combinations(t)
                        .map(|subset| census.get(&subset).copied().unwrap_or(0))
                        .collect();
                    counts.iter().max().unwrap_or(&0) - counts.iter().min().unwrap_or(&0)
                })
                .max()
                .unwrap_or(0);
            Rational::from_integer(worst.into())
        })
        .collect();
    let distance = max_of(&per_db);
    PrivacyReport {
        mode: AuditMode::Structural,
        passed: distance.is_zero(),
        per_db,
        distance,
        threshold: Rational::zero(),
        trials: None,
        outcomes: None,
        seed: None,
        raw_distance: None,
    }
}

/// Number of equations per message subset.
pub fn census(queries: &[Equation]) -> BTreeMap<Vec<usize>, usize> {
    let mut out = BTreeMap::new();
    for eq in queries {
        *out.entry(eq.messages()).or_default() += 1;
    }
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// Size of the randomness space walked by [`enumerate_privacy`], summed
/// over all desired indices.
pub fn enumeration_size(p: Params, s: usize) -> Result<BigInt> {
    let corner = bounds::corner_point(p, s)?;
    let len = bounds::to_usize(&corner.msg_len).ok_or_else(|| Error::arg("message too long"))?;
    let cached = bounds::to_usize(&bounds::corner_cached_bits(p, s)?).ok_or_else(|| Error::arg("cache too large"))?;
    let per_message = bounds::binom(len as i64, cached as i64)? * factorial(len);
    let per_db = round_profile(p, s)?.per_db();
    let per_theta = per_message.pow(p.k as u32) * factorial(per_db).pow(p.n as u32);
    Ok(per_theta * p.k)
}

/// Total-variation distance between two count tables with equal totals.
fn tv<K: Eq + Hash>(a: &HashMap<K, u64>, b: &HashMap<K, u64>, total: u64) -> Rational {
    let mut diff: u64 = 0;
    for (key, &x) in a {
        diff += x.abs_diff(b.get(key).copied().unwrap_or(0));
    }
    for (key, &y) in b {
        if !a.contains_key(key) {
            diff += y;
        }
    }
    Rational::new(BigInt::from(diff), BigInt::from(2 * total.max(1)))
}

fn pairwise_tv<K: Eq + Hash>(tables: &[Vec<HashMap<K, u64>>], n: usize, total: u64) -> Vec<Rational> {
    (0..n)
        .map(|db| {
            let mut worst = Rational::zero();
            for (a, b) in (0..tables.len()).tuple_combinations() {
                worst = worst.max(tv(&tables[a][db], &tables[b][db], total));
            }
            worst
        })
        .collect()
}

/// Exhaustive privacy audit: walks every cache choice, index permutation and
/// database shuffle for every desired index and compares each database's
/// exact query distributions. Passes iff the distance is exactly zero.
pub fn enumerate_privacy(p: Params, s: usize) -> Result<PrivacyReport> {
    let size = enumeration_size(p, s)?;
    if size > BigInt::from(MAX_ENUMERATION_OUTCOMES) {
        return Err(Error::TooLarge {
            estimate: size.to_string(),
            limit: MAX_ENUMERATION_OUTCOMES,
        });
    }
    let outcomes = size.to_u64().unwrap_or(u64::MAX);

    let builder = PlanBuilder::corner(p, s, 0)?;
    let len = builder.msg_len();
    let cached = builder.cached_per_message();
    let per_db = round_profile(p, s)?.per_db();

    let per_message: Vec<(Vec<usize>, Vec<usize>)> = (0..len)
        .combinations(cached)
        .cartesian_product((0..len).permutations(len))
        .collect();
    let shuffles: Vec<Vec<usize>> = (0..per_db).permutations(per_db).collect();

    let mut sig_tables = Vec::with_capacity(p.k);
    let mut raw_tables = Vec::with_capacity(p.k);
    let mut total = 0u64;
    for theta in 0..p.k {
        let builder = PlanBuilder::corner(p, s, theta)?;
        let mut sig: Vec<HashMap<Signature, u64>> = vec![HashMap::new(); p.n];
        let mut raw: Vec<HashMap<Vec<Equation>, u64>> = vec![HashMap::new(); p.n];
        total = 0;
        for choice in (0..p.k).map(|_| per_message.iter()).multi_cartesian_product() {
            let indices: Vec<Vec<usize>> = choice.iter().map(|(c, _)| c.clone()).collect();
            let orders: Vec<Vec<usize>> = choice.iter().map(|(_, o)| o.clone()).collect();
            let cache = CacheState::from_indices(len, &indices)?;
            let lists = builder.arrange(&cache, &orders)?;
            for (db, list) in lists.iter().enumerate() {
                *sig[db].entry(Signature::of(list)).or_default() += shuffles.len() as u64;
                for order in &shuffles {
                    let seen: Vec<Equation> = order.iter().map(|&j| list[j].clone()).collect();
                    *raw[db].entry(seen).or_default() += 1;
                }
            }
            total += shuffles.len() as u64;
        }
        sig_tables.push(sig);
        raw_tables.push(raw);
    }

    let per_db = pairwise_tv(&sig_tables, p.n, total);
    let raw = max_of(&pairwise_tv(&raw_tables, p.n, total));
    let distance = max_of(&per_db);
    Ok(PrivacyReport {
        mode: AuditMode::Exact,
        passed: distance.is_zero() && raw.is_zero(),
        per_db,
        distance,
        threshold: Rational::zero(),
        trials: None,
        outcomes: Some(outcomes),
        seed: None,
        raw_distance: Some(raw),
    })
}

/// Options for [`montecarlo_privacy_with`].
#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub threshold: Rational,
    pub mutation: Mutation,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions {
            threshold: default_threshold(),
            mutation: Mutation::None,
        }
    }
}

/// Statistical privacy audit: `trials` plans each for desired indices 0 and
/// 1, comparing per-database signature frequencies.
pub fn montecarlo_privacy(p: Params, s: usize, trials: u64, seed: Seed) -> Result<PrivacyReport> {
    montecarlo_privacy_with(p, s, trials, seed, &MonteCarloOptions::default())
}

pub fn montecarlo_privacy_with(
    p: Params,
    s: usize,
    trials: u64,
    seed: Seed,
    options: &MonteCarloOptions,
) -> Result<PrivacyReport> {
    if trials < MIN_TRIALS {
        return Err(Error::arg(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let mut tables = Vec::with_capacity(2);
    for theta in 0..2 {
        let builder = PlanBuilder::corner(p, s, theta)?.with_mutation(options.mutation);
        let base = seed.trial(theta as u64 * trials);
        tables.push(sample_signatures(&builder, base, trials)?);
    }
    let per_db = pairwise_tv(&tables, p.n, trials);
    let distance = max_of(&per_db);
    Ok(PrivacyReport {
        mode: AuditMode::MonteCarlo,
        passed: distance < options.threshold,
        per_db,
        distance,
        threshold: options.threshold.clone(),
        trials: Some(trials),
        outcomes: None,
        seed: Some(seed),
        raw_distance: None,
    })
}

/// Per-database signature counts over trials `base, base+1, ..`, spread
/// over the available cores.
fn sample_signatures(builder: &PlanBuilder, base: Seed, trials: u64) -> Result<Vec<HashMap<Signature, u64>>> {
    let n = builder.params().n;
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()).min(trials as usize).max(1) as u64;
    let chunk = trials.div_ceil(workers);
    let parts: Vec<Result<Vec<HashMap<Signature, u64>>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut counts = vec![HashMap::new(); n];
                    for t in (w * chunk)..((w + 1) * chunk).min(trials) {
                        let trial = base.trial(t);
                        let indices = crate::protocol::prefetch_indices(
                            builder.params().k,
                            builder.msg_len(),
                            builder.cached_per_message(),
                            trial,
                        )?;
                        let cache = CacheState::from_indices(builder.msg_len(), &indices)?;
                        let plan = builder.build(&cache, trial)?;
                        for (db, list) in plan.per_db.iter().enumerate() {
                            *counts[db].entry(Signature::of(list)).or_default() += 1;
                        }
                    }
                    Ok(counts)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("audit worker panicked")).collect()
    });
    let mut merged: Vec<HashMap<Signature, u64>> = vec![HashMap::new(); n];
    for part in parts {
        for (db, counts) in part?.into_iter().enumerate() {
            for (sig, c) in counts {
                *merged[db].entry(sig).or_default() += c;
            }
        }
    }
    Ok(merged)
}

/// Distinct message subsets a plan touches, per database.
pub fn touched_subsets(plan: &QueryPlan) -> Vec<BTreeSet<Vec<usize>>> {
    plan.per_db.iter().map(|q| census(q).into_keys().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{prefetch, retrieve, retrieve_corner, MessageStore};
    use crate::scheme::BitRef;

    fn p(k: usize, n: usize) -> Params {
        Params::new(k, n).unwrap()
    }

    #[test]
    fn transcripts_verify() {
        let t = retrieve_corner(p(3, 2), 1, 0, Seed(42)).unwrap();
        assert!(verify_decodability(&t).unwrap());
        assert!(verify_cost(&t));
        let t = retrieve(p(4, 3), 1, &ratio(2, 17), Seed(1)).unwrap();
        assert_eq!(t.per_db_downloads, vec![6, 6, 6]);
        assert!(verify_cost(&t));
    }

    #[test]
    fn flipped_answer_fails_decodability() {
        let mut t = retrieve_corner(p(3, 2), 1, 0, Seed(4)).unwrap();
        t.answers.0[0][0] ^= true;
        assert!(!verify_decodability(&t).unwrap());
    }

    #[test]
    fn deleted_desired_query_loses_rank() {
        let mut t = retrieve_corner(p(3, 2), 1, 0, Seed(4)).unwrap();
        let pos = t.plan.per_db[0].iter().position(|e| e.term_for(0).is_some()).unwrap();
        t.plan.per_db[0].remove(pos);
        t.answers.0[0].remove(pos);
        assert!(!spans_desired(&t.plan, &t.cache));
        assert!(!verify_decodability(&t).unwrap());
        assert!(!verify_cost(&t));
    }

    #[test]
    fn misaligned_transcript_is_a_contract_error() {
        let mut t = retrieve_corner(p(3, 2), 1, 0, Seed(4)).unwrap();
        t.answers.0[1].pop();
        assert!(matches!(verify_decodability(&t), Err(Error::Contract(_))));
    }

    #[test]
    fn signature_ignores_bit_names() {
        let e = |v: &[(usize, usize)]| Equation::new(v.iter().map(|&(m, b)| BitRef::new(m, b)).collect()).unwrap();
        let a = [e(&[(0, 1), (1, 2)]), e(&[(1, 2), (2, 0)])];
        let b = [e(&[(1, 7), (2, 3)]), e(&[(0, 9), (1, 7)])];
        let c = [e(&[(0, 1), (1, 2)]), e(&[(1, 3), (2, 0)])];
        assert_eq!(Signature::of(&a), Signature::of(&b));
        assert_ne!(Signature::of(&a), Signature::of(&c));
    }

    #[test]
    fn structural_census_three_messages() {
        let b = PlanBuilder::corner(p(3, 2), 1, 0).unwrap();
        let store = MessageStore::random(3, 7, Seed(0));
        let cache = prefetch(&store, 1, Seed(0)).unwrap();
        let plan = b.build(&cache, Seed(0)).unwrap();
        assert!(structural_symmetry(&plan).passed);
        let broken = b.with_mutation(Mutation::DropUndesired).build(&cache, Seed(0)).unwrap();
        assert!(!structural_symmetry(&broken).passed);
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumeration_size(p(2, 2), 1).unwrap(), BigInt::from(2 * 324));
        assert_eq!(enumeration_size(p(3, 2), 2).unwrap(), BigInt::from(3 * 5832));
        assert!(matches!(enumerate_privacy(p(4, 2), 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn exhaustive_privacy_small() {
        let r = enumerate_privacy(p(2, 2), 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.distance, Rational::zero());
        assert_eq!(r.raw_distance, Some(Rational::zero()));
    }

    #[test]
    fn trials_floor() {
        assert!(montecarlo_privacy(p(3, 2), 1, 999, Seed(0)).is_err());
    }
}
