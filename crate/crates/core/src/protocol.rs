//! End-to-end retrieval: prefetching, database answers and decoding.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::Params;
use crate::error::{DecodeError, Error, Result};
use crate::rational::{serde_exact, Rational};
use crate::scheme::{BitRef, Equation, PlanBuilder, QueryPlan};
use crate::seed::{Seed, Stream};

/// `K` messages of equal length, one bit per `bool`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    messages: Vec<Vec<bool>>,
}

impl MessageStore {
    pub fn new(messages: Vec<Vec<bool>>) -> Result<Self> {
        let len = messages.first().map(Vec::len).unwrap_or(0);
        if messages.len() < 2 || messages.iter().any(|m| m.len() != len) {
            return Err(Error::arg("need at least two messages of equal length"));
        }
        Ok(MessageStore { messages })
    }

    /// Uniformly random contents drawn from `seed`'s content stream.
    pub fn random(k: usize, len: usize, seed: Seed) -> Self {
        let mut rng = seed.rng(Stream::Content);
        let messages = (0..k).map(|_| (0..len).map(|_| rng.random()).collect()).collect();
        MessageStore { messages }
    }

    pub fn k(&self) -> usize {
        self.messages.len()
    }

    pub fn msg_len(&self) -> usize {
        self.messages[0].len()
    }

    pub fn message(&self, m: usize) -> &[bool] {
        &self.messages[m]
    }

    pub fn bit(&self, b: BitRef) -> Option<bool> {
        self.messages.get(b.msg)?.get(b.bit).copied()
    }
}

/// The user's cache: the same number of bits of every message, at indices
/// the databases never learn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CacheFile", into = "CacheFile")]
pub struct CacheState {
    msg_len: usize,
    entries: Vec<BTreeMap<usize, bool>>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    msg_len: usize,
    #[serde(with = "bits::entries")]
    entries: Vec<Vec<(usize, bool)>>,
}

impl TryFrom<CacheFile> for CacheState {
    type Error = Error;

    fn try_from(f: CacheFile) -> Result<Self> {
        CacheState::new(f.msg_len, f.entries)
    }
}

impl From<CacheState> for CacheFile {
    fn from(c: CacheState) -> Self {
        CacheFile {
            msg_len: c.msg_len,
            entries: c.entries.into_iter().map(|e| e.into_iter().collect()).collect(),
        }
    }
}

impl CacheState {
    /// `entries[m]` lists `(index, value)` pairs cached from message `m`.
    pub fn new(msg_len: usize, entries: Vec<Vec<(usize, bool)>>) -> Result<Self> {
        let mut maps = Vec::with_capacity(entries.len());
        for (m, list) in entries.into_iter().enumerate() {
            let count = list.len();
            let map: BTreeMap<usize, bool> = list.into_iter().collect();
            if map.len() != count {
                return Err(Error::contract(format!("message {m} caches an index twice")));
            }
            if map.keys().any(|&i| i >= msg_len) {
                return Err(Error::contract(format!("message {m} caches an index outside 0..{msg_len}")));
            }
            maps.push(map);
        }
        if maps.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::contract("every message must have the same number of cached bits"));
        }
        Ok(CacheState { msg_len, entries: maps })
    }

    /// Cache holding the given indices with placeholder values; useful when
    /// only the index pattern matters.
    pub fn from_indices(msg_len: usize, indices: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            msg_len,
            indices.iter().map(|ix| ix.iter().map(|&i| (i, false)).collect()).collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn msg_len(&self) -> usize {
        self.msg_len
    }

    pub fn bits_per_message(&self) -> usize {
        self.entries.first().map(BTreeMap::len).unwrap_or(0)
    }

    pub fn contains(&self, b: BitRef) -> bool {
        self.value(b).is_some()
    }

    pub fn value(&self, b: BitRef) -> Option<bool> {
        self.entries.get(b.msg)?.get(&b.bit).copied()
    }

    pub fn indices(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries[m].keys().copied()
    }

    /// Cached fraction of each message.
    pub fn ratio(&self) -> Rational {
        Rational::new(self.bits_per_message().into(), self.msg_len.into())
    }
}

/// `bits` distinct uniformly random indices of `0..len` per message.
pub fn prefetch_indices(k: usize, len: usize, bits: usize, seed: Seed) -> Result<Vec<Vec<usize>>> {
    if bits > len {
        return Err(Error::arg(format!("cannot cache {bits} of {len} bits")));
    }
    let mut rng = seed.rng(Stream::CacheIndices);
    Ok((0..k)
        .map(|_| {
            let mut ix = index::sample(&mut rng, len, bits).into_vec();
            ix.sort_unstable();
            ix
        })
        .collect())
}

/// Caches `bits` uniformly chosen bits of every message.
pub fn prefetch(store: &MessageStore, bits: usize, seed: Seed) -> Result<CacheState> {
    let indices = prefetch_indices(store.k(), store.msg_len(), bits, seed)?;
    let entries = indices
        .iter()
        .enumerate()
        .map(|(m, ix)| ix.iter().map(|&i| (i, store.message(m)[i])).collect())
        .collect();
    CacheState::new(store.msg_len(), entries)
}

/// A replicated database. It sees only the stored messages and the
/// equations it is asked.
#[derive(Debug, Clone, Copy)]
pub struct Database<'a> {
    store: &'a MessageStore,
}

impl<'a> Database<'a> {
    pub fn new(store: &'a MessageStore) -> Self {
        Database { store }
    }

    /// XOR of each equation's bits, in query order.
    pub fn answer(&self, queries: &[Equation]) -> Result<Vec<bool>> {
        queries
            .iter()
            .map(|eq| {
                eq.terms().iter().try_fold(false, |acc, &t| {
                    self.store
                        .bit(t)
                        .map(|v| acc ^ v)
                        .ok_or_else(|| Error::contract(format!("query refers to missing bit {}[{}]", t.msg, t.bit)))
                })
            })
            .collect()
    }
}

/// Answers of all databases, aligned with the plan's per-database lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnswerString(#[serde(with = "bits::nested")] pub Vec<Vec<bool>>);

pub fn collect_answers(store: &MessageStore, plan: &QueryPlan) -> Result<AnswerString> {
    let db = Database::new(store);
    Ok(AnswerString(
        plan.per_db.iter().map(|q| db.answer(q)).collect::<Result<_>>()?,
    ))
}

/// Recovers the desired message from the answers and the cache.
///
/// Answers to equations without a desired term become known sums. Each
/// desired equation is then resolved by cancelling its other terms either
/// bit by bit from the cache or as one known sum.
pub fn decode(plan: &QueryPlan, answers: &AnswerString, cache: &CacheState) -> std::result::Result<Vec<bool>, DecodeError> {
    let theta = plan.meta.theta;
    let len = plan.meta.msg_len;
    for (db, (q, a)) in plan.per_db.iter().zip(&answers.0).enumerate() {
        if q.len() != a.len() {
            return Err(DecodeError::AnswerLength { db, expected: q.len(), got: a.len() });
        }
    }
    if answers.0.len() != plan.per_db.len() {
        return Err(DecodeError::AnswerLength {
            db: plan.per_db.len().min(answers.0.len()),
            expected: plan.per_db.len(),
            got: answers.0.len(),
        });
    }

    let mut known: HashMap<&[BitRef], bool> = HashMap::new();
    let mut desired = Vec::new();
    for (db, (queries, values)) in plan.per_db.iter().zip(&answers.0).enumerate() {
        for (position, (eq, &value)) in queries.iter().zip(values).enumerate() {
            for t in eq.terms() {
                if t.msg >= cache.k() || t.bit >= len {
                    return Err(DecodeError::OutOfRange { db, position, msg: t.msg, bit: t.bit });
                }
            }
            match eq.term_for(theta) {
                Some(_) => desired.push((db, position, eq, value)),
                None => {
                    known.insert(eq.terms(), value);
                }
            }
        }
    }
    desired.sort_by_key(|(_, _, eq, _)| eq.len());

    let mut out: Vec<Option<bool>> = (0..len).map(|b| cache.value(BitRef::new(theta, b))).collect();
    let mut seen = HashSet::new();
    for (db, position, eq, value) in desired {
        let target = eq.term_for(theta).expect("desired term present");
        let rest: Vec<BitRef> = eq.terms().iter().copied().filter(|t| t.msg != theta).collect();
        let side = if rest.iter().all(|&t| cache.contains(t)) {
            rest.iter().fold(false, |acc, &t| acc ^ cache.value(t).unwrap_or(false))
        } else if let Some(&v) = known.get(rest.as_slice()) {
            v
        } else {
            return Err(DecodeError::MissingSideInformation { db, position });
        };
        if !seen.insert(target.bit) || cache.contains(target) {
            return Err(DecodeError::DuplicateDesiredBit { bit: target.bit });
        }
        out[target.bit] = Some(value ^ side);
    }

    let missing = out.iter().filter(|b| b.is_none()).count();
    if missing > 0 {
        return Err(DecodeError::Incomplete { missing });
    }
    Ok(out.into_iter().map(|b| b.unwrap_or(false)).collect())
}

/// Everything one retrieval run produced, in a replayable form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub params: Params,
    pub theta: usize,
    #[serde(with = "serde_exact")]
    pub ratio: Rational,
    pub seed: Seed,
    pub plan: QueryPlan,
    pub answers: AnswerString,
    pub cache: CacheState,
    #[serde(with = "bits::flat")]
    pub desired_message: Vec<bool>,
    #[serde(with = "bits::flat")]
    pub decoded: Vec<bool>,
    pub per_db_downloads: Vec<usize>,
    pub total_downloads: usize,
    pub msg_len: usize,
    #[serde(with = "serde_exact")]
    pub cost: Rational,
}

impl Transcript {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::contract(e.to_string()))?;
        std::fs::write(path.as_ref(), text)
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&text).map_err(|e| Error::contract(format!("malformed transcript: {e}")))
    }
}

fn run(builder: PlanBuilder, seed: Seed) -> Result<Transcript> {
    let p = builder.params();
    let store = MessageStore::random(p.k, builder.msg_len(), seed);
    let cache = prefetch(&store, builder.cached_per_message(), seed)?;
    let plan = builder.build(&cache, seed)?;
    let answers = collect_answers(&store, &plan)?;
    let decoded = decode(&plan, &answers, &cache)?;
    let desired_message = store.message(builder.theta()).to_vec();
    if decoded != desired_message {
        return Err(Error::contract("decoded message differs from the stored one"));
    }
    Ok(Transcript {
        params: p,
        theta: builder.theta(),
        ratio: cache.ratio(),
        seed,
        per_db_downloads: plan.per_db_counts(),
        total_downloads: plan.total_downloads(),
        msg_len: plan.meta.msg_len,
        cost: plan.cost(),
        plan,
        answers,
        cache,
        desired_message,
        decoded,
    })
}

/// Retrieves message `theta` with a cache fraction `r`, using corner schemes
/// and memory sharing.
pub fn retrieve(p: Params, theta: usize, r: &Rational, seed: Seed) -> Result<Transcript> {
    run(PlanBuilder::for_ratio(p, r, theta)?, seed)
}

/// Retrieves message `theta` with the corner-`s` scheme.
pub fn retrieve_corner(p: Params, s: usize, theta: usize, seed: Seed) -> Result<Transcript> {
    run(PlanBuilder::corner(p, s, theta)?, seed)
}

/// Bits serialized as 0/1 integers.
mod bits {
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    fn to_u8(b: &[bool]) -> Vec<u8> {
        b.iter().map(|&x| x as u8).collect()
    }

    fn from_u8<E: serde::de::Error>(v: Vec<u8>) -> Result<Vec<bool>, E> {
        v.into_iter()
            .map(|x| match x {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(E::custom(format!("bit value {other}"))),
            })
            .collect()
    }

    pub mod flat {
        use super::*;

        pub fn serialize<S: Serializer>(b: &[bool], s: S) -> Result<S::Ok, S::Error> {
            to_u8(b).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
            from_u8(Vec::<u8>::deserialize(d)?)
        }
    }

    pub mod nested {
        use super::*;

        pub fn serialize<S: Serializer>(b: &[Vec<bool>], s: S) -> Result<S::Ok, S::Error> {
            b.iter().map(|v| to_u8(v)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<bool>>, D::Error> {
            Vec::<Vec<u8>>::deserialize(d)?.into_iter().map(from_u8).collect()
        }
    }

    pub mod entries {
        use super::*;

        pub fn serialize<S: Serializer>(e: &[Vec<(usize, bool)>], s: S) -> Result<S::Ok, S::Error> {
            e.iter()
                .map(|v| v.iter().map(|&(i, b)| (i, b as u8)).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<(usize, bool)>>, D::Error> {
            Vec::<Vec<(usize, u8)>>::deserialize(d)?
                .into_iter()
                .map(|v| {
                    v.into_iter()
                        .map(|(i, b)| match b {
                            0 => Ok((i, false)),
                            1 => Ok((i, true)),
                            other => Err(D::Error::custom(format!("bit value {other}"))),
                        })
                        .collect()
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn p(k: usize, n: usize) -> Params {
        Params::new(k, n).unwrap()
    }

    #[test]
    fn corner_retrievals_decode() {
        for (k, n) in [(2, 2), (3, 2), (3, 3), (4, 2)] {
            for s in 0..k {
                for theta in 0..k {
                    let t = retrieve_corner(p(k, n), s, theta, Seed(7)).unwrap();
                    assert_eq!(t.decoded, t.desired_message);
                }
            }
        }
    }

    #[test]
    fn composite_retrieval_decodes() {
        let t = retrieve(p(3, 2), 2, &ratio(1, 5), Seed(2)).unwrap();
        assert_eq!(t.msg_len, 10);
        assert_eq!(t.cost, Rational::from_integer(1.into()));
    }

    #[test]
    fn decode_reports_short_answers() {
        let mut t = retrieve_corner(p(3, 2), 1, 0, Seed(1)).unwrap();
        t.answers.0[1].pop();
        assert_eq!(
            decode(&t.plan, &t.answers, &t.cache),
            Err(DecodeError::AnswerLength { db: 1, expected: 4, got: 3 })
        );
    }

    #[test]
    fn cache_validation() {
        assert!(CacheState::new(3, vec![vec![(0, true)], vec![]]).is_err());
        assert!(CacheState::new(3, vec![vec![(3, true)], vec![(0, true)]]).is_err());
        assert!(CacheState::new(3, vec![vec![(1, true), (1, false)], vec![(0, true), (2, true)]]).is_err());
        assert!(prefetch_indices(2, 3, 4, Seed(0)).is_err());
    }

    #[test]
    fn database_rejects_unknown_bits() {
        let store = MessageStore::random(2, 3, Seed(0));
        let eq = Equation::new(vec![BitRef::new(0, 9)]).unwrap();
        assert!(Database::new(&store).answer(&[eq]).is_err());
    }
}
