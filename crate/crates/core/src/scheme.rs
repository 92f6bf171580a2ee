//! Query-plan construction.
//!
//! A corner plan for mixing size `s` runs rounds `i = s+1..=K`; round `i`
//! queries sums of `i` bits from `i` distinct messages:
//!
//! 1. Round `s+1` pairs a fresh desired bit with a mixture of `s` cached bits,
//!    one mixture per `s`-subset of the undesired messages. The same mixtures
//!    are used at every database.
//! 2. Later rounds pair a fresh desired bit with each undesired equation that
//!    the *other* databases answered in the previous round.
//! 3. Every round also asks each database for sums of fresh bits over every
//!    `i`-subset of undesired messages, so each `i`-subset of messages is
//!    queried equally often.
//! 4. Each database's list is shuffled.
//!
//! Non-corner ratios split the message into blocks handled by the two
//! enclosing corner schemes ([`split_for_ratio`]).

use std::collections::BTreeSet;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, check_ratio, Params};
use crate::error::{Error, Result};
use crate::protocol::CacheState;
use crate::rational::{serde_exact, Rational};
use crate::seed::{Seed, Stream};

/// Largest message length a plan is built for.
pub const MAX_PLAN_MESSAGE_LEN: usize = 10_000_000;

/// Largest denominator accepted when simulating a non-corner ratio.
pub const MAX_SIMULATION_DENOMINATOR: u64 = 1_000_000;

/// One message bit, `bit` counted in the message's original indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct BitRef {
    pub msg: usize,
    pub bit: usize,
}

impl BitRef {
    pub fn new(msg: usize, bit: usize) -> Self {
        BitRef { msg, bit }
    }
}

impl From<(usize, usize)> for BitRef {
    fn from((msg, bit): (usize, usize)) -> Self {
        BitRef { msg, bit }
    }
}

impl From<BitRef> for (usize, usize) {
    fn from(b: BitRef) -> Self {
        (b.msg, b.bit)
    }
}

/// A GF(2) sum of bits from pairwise distinct messages, kept sorted by
/// message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<BitRef>", into = "Vec<BitRef>")]
pub struct Equation {
    terms: Vec<BitRef>,
}

impl Equation {
    pub fn new(mut terms: Vec<BitRef>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::contract("equation without terms"));
        }
        terms.sort();
        if terms.windows(2).any(|w| w[0].msg == w[1].msg) {
            return Err(Error::contract("equation uses the same message twice"));
        }
        Ok(Equation { terms })
    }

    pub fn terms(&self) -> &[BitRef] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn messages(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.msg).collect()
    }

    pub fn term_for(&self, msg: usize) -> Option<BitRef> {
        self.terms.iter().copied().find(|t| t.msg == msg)
    }

    /// Copy of `self` with `extra` added; `extra.msg` must not already occur.
    fn plus(&self, extra: BitRef) -> Equation {
        debug_assert!(self.term_for(extra.msg).is_none());
        let mut terms = self.terms.clone();
        let at = terms.partition_point(|t| t < &extra);
        terms.insert(at, extra);
        Equation { terms }
    }
}

impl TryFrom<Vec<BitRef>> for Equation {
    type Error = Error;

    fn try_from(terms: Vec<BitRef>) -> Result<Self> {
        Equation::new(terms)
    }
}

impl From<Equation> for Vec<BitRef> {
    fn from(e: Equation) -> Self {
        e.terms
    }
}

impl std::fmt::Display for Equation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = self
            .terms
            .iter()
            .map(|t| format!("w{}[{}]", t.msg, t.bit))
            .join(" + ");
        f.write_str(&text)
    }
}

/// Per-database equation counts of one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundCounts {
    pub round: usize,
    pub desired_per_db: usize,
    pub undesired_per_db: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundProfile {
    pub params: Params,
    pub s: usize,
    pub rounds: Vec<RoundCounts>,
}

impl RoundProfile {
    pub fn per_db(&self) -> usize {
        self.rounds.iter().map(|r| r.desired_per_db + r.undesired_per_db).sum()
    }

    pub fn total_downloads(&self) -> usize {
        self.per_db() * self.params.n
    }

    pub fn desired_total(&self) -> usize {
        self.rounds.iter().map(|r| r.desired_per_db).sum::<usize>() * self.params.n
    }
}

fn small(value: BigInt, what: &str) -> Result<usize> {
    value
        .to_usize()
        .ok_or_else(|| Error::arg(format!("{what} does not fit in memory: {value}")))
}

fn binom_usize(n: usize, k: i64) -> Result<usize> {
    small(bounds::binom(n as i64, k)?, "binomial coefficient")
}

fn pow_usize(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .ok_or_else(|| Error::arg(format!("{base}^{exp} overflows")))
}

/// Equation counts per round and database for corner `s`.
pub fn round_profile(p: Params, s: usize) -> Result<RoundProfile> {
    if s >= p.k {
        return Err(Error::arg(format!("corner index s={s} outside 0..={}", p.k - 1)));
    }
    let mut rounds = Vec::with_capacity(p.k - s);
    for round in (s + 1)..=p.k {
        let reps = pow_usize(p.n - 1, round - s - 1)?;
        rounds.push(RoundCounts {
            round,
            desired_per_db: binom_usize(p.k - 1, round as i64 - 1)? * reps,
            undesired_per_db: binom_usize(p.k - 1, round as i64)? * reps,
        });
    }
    Ok(RoundProfile { params: p, s, rounds })
}

/// Memory-sharing split of a message between corners `s` and `s+1`.
///
/// `s == K` denotes the fully cached end point `r = 1` (block length 1, one
/// cached bit, no downloads).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub s: usize,
    #[serde(with = "serde_exact")]
    pub alpha: Rational,
    pub l_total: BigInt,
    pub block_s: BigInt,
    pub block_s1: BigInt,
}

impl SplitSpec {
    pub fn is_corner(&self) -> bool {
        self.block_s1.is_zero()
    }
}

/// `(ratio, block length, cached bits per message)` of corner `idx`, with
/// `idx == K` the fully cached end point.
fn segment_end(p: Params, idx: usize) -> Result<(Rational, BigInt, BigInt)> {
    if idx == p.k {
        return Ok((Rational::one(), BigInt::one(), BigInt::one()));
    }
    let c = bounds::corner_point(p, idx)?;
    Ok((c.ratio, c.msg_len, bounds::corner_cached_bits(p, idx)?))
}

/// Locates the corners enclosing `r` and the smallest total length for which
/// both corner schemes tile the message exactly.
pub fn split_for_ratio(p: Params, r: &Rational) -> Result<SplitSpec> {
    check_ratio(r)?;
    let mut s = 0;
    while s < p.k && &segment_end(p, s + 1)?.0 <= r {
        s += 1;
    }
    let (r_lo, len_lo, _) = segment_end(p, s)?;
    if &r_lo == r {
        return Ok(SplitSpec {
            s,
            alpha: Rational::one(),
            l_total: len_lo,
            block_s: BigInt::one(),
            block_s1: BigInt::zero(),
        });
    }
    let (r_hi, len_hi, _) = segment_end(p, s + 1)?;
    let alpha = (&r_hi - r) / (&r_hi - &r_lo);
    let (a, q) = (alpha.numer().clone(), alpha.denom().clone());
    let b = &q - &a;
    // alpha*L/len_lo and (1-alpha)*L/len_hi integral
    let need_lo = &q * &len_lo / a.gcd(&len_lo);
    let need_hi = &q * &len_hi / b.gcd(&len_hi);
    let l_total = need_lo.lcm(&need_hi);
    let block_s = &a * &l_total / (&q * &len_lo);
    let block_s1 = &b * &l_total / (&q * &len_hi);
    Ok(SplitSpec {
        s,
        alpha,
        l_total,
        block_s,
        block_s1,
    })
}

/// Deliberate deviations from the scheme, used as negative controls for the
/// audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    #[default]
    None,
    /// Remove one undesired equation from the first database.
    DropUndesired,
    /// Reuse the first cached mixture for every side-information query.
    BiasMixture,
    /// Leave each database's queries in construction order.
    SkipShuffle,
    /// Never ask for undesired-only sums.
    SkipMessageSymmetry,
}

/// A run of `count` consecutive blocks, each handled by corner `s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub s: usize,
    pub count: usize,
    pub len: usize,
    pub cached: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanMeta {
    pub params: Params,
    pub theta: usize,
    pub msg_len: usize,
    pub cached_per_message: usize,
    pub blocks: Vec<BlockSpec>,
    pub seed: Option<Seed>,
    #[serde(default)]
    pub mutation: Mutation,
}

/// Equations to send to each database, in the order they are sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub meta: PlanMeta,
    pub per_db: Vec<Vec<Equation>>,
}

impl QueryPlan {
    pub fn per_db_counts(&self) -> Vec<usize> {
        self.per_db.iter().map(Vec::len).collect()
    }

    pub fn total_downloads(&self) -> usize {
        self.per_db.iter().map(Vec::len).sum()
    }

    /// Downloads per desired-message bit.
    pub fn cost(&self) -> Rational {
        Rational::new(BigInt::from(self.total_downloads()), BigInt::from(self.meta.msg_len))
    }
}

/// Builds plans for one `(params, theta, layout)`. The layout is either a
/// single corner or a memory-sharing split.
#[derive(Debug, Clone)]
pub struct PlanBuilder {
    params: Params,
    theta: usize,
    blocks: Vec<BlockSpec>,
    mutation: Mutation,
}

impl PlanBuilder {
    pub fn corner(p: Params, s: usize, theta: usize) -> Result<Self> {
        check_theta(p, theta)?;
        if s >= p.k {
            return Err(Error::arg(format!("corner index s={s} outside 0..={}", p.k - 1)));
        }
        let block = block_spec(p, s, 1)?;
        Self::from_blocks(p, theta, vec![block])
    }

    pub fn for_ratio(p: Params, r: &Rational, theta: usize) -> Result<Self> {
        check_theta(p, theta)?;
        check_ratio(r)?;
        if r.denom() > &BigInt::from(MAX_SIMULATION_DENOMINATOR) {
            return Err(Error::arg(format!(
                "ratio {r} has a denominator above {MAX_SIMULATION_DENOMINATOR}"
            )));
        }
        let split = split_for_ratio(p, r)?;
        let mut blocks = vec![block_spec(p, split.s, small(split.block_s, "block count")?)?];
        if !split.block_s1.is_zero() {
            blocks.push(block_spec(p, split.s + 1, small(split.block_s1, "block count")?)?);
        }
        Self::from_blocks(p, theta, blocks)
    }

    fn from_blocks(params: Params, theta: usize, blocks: Vec<BlockSpec>) -> Result<Self> {
        let len: usize = blocks.iter().map(|b| b.len * b.count).sum();
        if len > MAX_PLAN_MESSAGE_LEN {
            return Err(Error::arg(format!(
                "message length {len} exceeds the simulation limit {MAX_PLAN_MESSAGE_LEN}"
            )));
        }
        Ok(PlanBuilder {
            params,
            theta,
            blocks,
            mutation: Mutation::None,
        })
    }

    pub fn with_mutation(mut self, mutation: Mutation) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn msg_len(&self) -> usize {
        self.blocks.iter().map(|b| b.len * b.count).sum()
    }

    pub fn cached_per_message(&self) -> usize {
        self.blocks.iter().map(|b| b.cached * b.count).sum()
    }

    fn meta(&self, seed: Option<Seed>) -> PlanMeta {
        PlanMeta {
            params: self.params,
            theta: self.theta,
            msg_len: self.msg_len(),
            cached_per_message: self.cached_per_message(),
            blocks: self.blocks.clone(),
            seed,
            mutation: self.mutation,
        }
    }

    /// Draws the per-message index permutations and per-database shuffles
    /// from `seed`, then builds the plan.
    pub fn build(&self, cache: &CacheState, seed: Seed) -> Result<QueryPlan> {
        let len = self.msg_len();
        let mut rng = seed.rng(Stream::MessageOrder);
        let orders: Vec<Vec<usize>> = (0..self.params.k)
            .map(|_| {
                let mut order: Vec<usize> = (0..len).collect();
                order.shuffle(&mut rng);
                order
            })
            .collect();
        let lists = self.arrange(cache, &orders)?;
        let mut rng = seed.rng(Stream::Shuffle);
        let shuffles: Vec<Vec<usize>> = lists.iter().map(|l| random_permutation(l.len(), &mut rng)).collect();
        self.finish(lists, &shuffles, Some(seed))
    }

    /// Builds the plan from explicit randomness: `orders[m]` permutes the
    /// indices of message `m`, `shuffles[n]` permutes database `n`'s queries.
    pub fn build_with(&self, cache: &CacheState, orders: &[Vec<usize>], shuffles: &[Vec<usize>]) -> Result<QueryPlan> {
        let lists = self.arrange(cache, orders)?;
        self.finish(lists, shuffles, None)
    }

    pub(crate) fn finish(&self, lists: Vec<Vec<Equation>>, shuffles: &[Vec<usize>], seed: Option<Seed>) -> Result<QueryPlan> {
        if shuffles.len() != lists.len() {
            return Err(Error::contract("one shuffle per database is required"));
        }
        let per_db = lists
            .into_iter()
            .zip(shuffles)
            .map(|(list, order)| {
                check_permutation(order, list.len(), "database shuffle")?;
                if self.mutation == Mutation::SkipShuffle {
                    return Ok(list);
                }
                Ok(order.iter().map(|&j| list[j].clone()).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QueryPlan {
            meta: self.meta(seed),
            per_db,
        })
    }

    /// Unshuffled per-database query lists.
    pub fn arrange(&self, cache: &CacheState, orders: &[Vec<usize>]) -> Result<Vec<Vec<Equation>>> {
        let p = self.params;
        let len = self.msg_len();
        let want = self.cached_per_message();
        if cache.k() != p.k || cache.msg_len() != len {
            return Err(Error::contract(format!(
                "cache covers {} messages of {} bits, plan needs {} of {len}",
                cache.k(),
                cache.msg_len(),
                p.k
            )));
        }
        if cache.bits_per_message() != want {
            return Err(Error::contract(format!(
                "cache holds {} bits per message, plan needs {want}",
                cache.bits_per_message()
            )));
        }
        if orders.len() != p.k {
            return Err(Error::contract("one index permutation per message is required"));
        }

        // Deal each message's cached and uncached indices to the blocks in
        // permutation order.
        let mut pools: Vec<Vec<usize>> = Vec::with_capacity(p.k);
        let mut fresh: Vec<Vec<usize>> = Vec::with_capacity(p.k);
        for (m, order) in orders.iter().enumerate() {
            check_permutation(order, len, "message permutation")?;
            let (c, u): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&b| cache.contains(BitRef::new(m, b)));
            pools.push(c);
            fresh.push(u);
        }

        let mut out = vec![Vec::new(); p.n];
        let mut pool_at = 0;
        let mut fresh_at = 0;
        for block in &self.blocks {
            let fresh_len = block.len - block.cached;
            for _ in 0..block.count {
                let view = BlockView {
                    pools: pools.iter().map(|v| &v[pool_at..pool_at + block.cached]).collect(),
                    fresh: fresh.iter().map(|v| &v[fresh_at..fresh_at + fresh_len]).collect(),
                };
                if block.s < p.k {
                    emit_corner(p, block.s, self.theta, &view, self.mutation, &mut out)?;
                }
                pool_at += block.cached;
                fresh_at += fresh_len;
            }
        }

        if self.mutation == Mutation::DropUndesired {
            if let Some(pos) = out[0].iter().position(|e| e.term_for(self.theta).is_none()) {
                out[0].remove(pos);
            }
        }
        Ok(out)
    }
}

fn check_theta(p: Params, theta: usize) -> Result<()> {
    if theta >= p.k {
        return Err(Error::arg(format!("desired index {theta} outside 0..{}", p.k)));
    }
    Ok(())
}

fn check_permutation(order: &[usize], len: usize, what: &str) -> Result<()> {
    let distinct: BTreeSet<_> = order.iter().copied().collect();
    if order.len() != len || distinct.len() != len || order.iter().any(|&j| j >= len) {
        return Err(Error::contract(format!("{what} is not a permutation of 0..{len}")));
    }
    Ok(())
}

pub(crate) fn random_permutation(len: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    order
}

fn block_spec(p: Params, s: usize, count: usize) -> Result<BlockSpec> {
    let (_, len, cached) = segment_end(p, s)?;
    Ok(BlockSpec {
        s,
        count,
        len: small(len, "block length")?,
        cached: small(cached, "cached bits")?,
    })
}

/// Indices available to one block: `pools[m]` cached, `fresh[m]` uncached.
struct BlockView<'a> {
    pools: Vec<&'a [usize]>,
    fresh: Vec<&'a [usize]>,
}

struct Cursors<'a> {
    fresh: &'a [&'a [usize]],
    next: Vec<usize>,
}

impl<'a> Cursors<'a> {
    fn take(&mut self, msg: usize) -> Result<BitRef> {
        let at = self.next[msg];
        let bit = *self.fresh[msg]
            .get(at)
            .ok_or_else(|| Error::contract(format!("message {msg} ran out of uncached bits")))?;
        self.next[msg] += 1;
        Ok(BitRef::new(msg, bit))
    }
}

fn emit_corner(
    p: Params,
    s: usize,
    theta: usize,
    view: &BlockView<'_>,
    mutation: Mutation,
    out: &mut [Vec<Equation>],
) -> Result<()> {
    let others: Vec<usize> = (0..p.k).filter(|&m| m != theta).collect();
    let mut cursors = Cursors {
        fresh: &view.fresh,
        next: vec![0; p.k],
    };

    // Cached mixtures, one per s-subset of undesired messages; each message's
    // pool is consumed by the subsets containing it in lexicographic order.
    let mut pool_next = vec![0usize; p.k];
    let mut mixtures = Vec::new();
    for subset in others.iter().copied().combinations(s) {
        let mut terms = Vec::with_capacity(s);
        for m in subset {
            let bit = *view.pools[m]
                .get(pool_next[m])
                .ok_or_else(|| Error::contract(format!("message {m} has too few cached bits")))?;
            pool_next[m] += 1;
            terms.push(BitRef::new(m, bit));
        }
        mixtures.push(terms);
    }
    if mutation == Mutation::BiasMixture && s > 0 {
        let first = mixtures[0].clone();
        mixtures.iter_mut().for_each(|m| *m = first.clone());
    }

    let skip_undesired = mutation == Mutation::SkipMessageSymmetry;
    let mut previous: Vec<Vec<Equation>> = vec![Vec::new(); p.n];
    for round in (s + 1)..=p.k {
        let reps = pow_usize(p.n - 1, round - s - 1)?;
        let mut current: Vec<Vec<Equation>> = vec![Vec::new(); p.n];
        for db in 0..p.n {
            if round == s + 1 {
                for mix in &mixtures {
                    let mut terms = mix.clone();
                    terms.push(cursors.take(theta)?);
                    out[db].push(Equation::new(terms)?);
                }
            } else {
                for donor in (0..p.n).filter(|&d| d != db) {
                    for side in &previous[donor] {
                        out[db].push(side.plus(cursors.take(theta)?));
                    }
                }
            }
            if skip_undesired {
                continue;
            }
            for subset in others.iter().copied().combinations(round) {
                for _ in 0..reps {
                    let terms = subset.iter().map(|&m| cursors.take(m)).collect::<Result<Vec<_>>>()?;
                    let eq = Equation::new(terms)?;
                    out[db].push(eq.clone());
                    current[db].push(eq);
                }
            }
        }
        previous = current;
    }

    if mutation == Mutation::None && cursors.next[theta] != view.fresh[theta].len() {
        return Err(Error::contract(format!(
            "corner s={s} recovered {} of {} uncached desired bits",
            cursors.next[theta],
            view.fresh[theta].len()
        )));
    }
    Ok(())
}

/// Corner-`s` plan for desired message `theta` with randomness from `seed`.
pub fn build_corner_plan(p: Params, s: usize, theta: usize, cache: &CacheState, seed: Seed) -> Result<QueryPlan> {
    PlanBuilder::corner(p, s, theta)?.build(cache, seed)
}

/// Plan for any rational ratio: corner plans over the blocks of
/// [`split_for_ratio`], concatenated and shuffled per database.
pub fn compose_plans(p: Params, r: &Rational, theta: usize, cache: &CacheState, seed: Seed) -> Result<QueryPlan> {
    PlanBuilder::for_ratio(p, r, theta)?.build(cache, seed)
}
