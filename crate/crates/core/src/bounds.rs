//! Closed-form download-cost bounds, all in exact rational arithmetic.
//!
//! The achievable (outer) curve is the piece-wise linear interpolation of the
//! corner points `(r_s, D(r_s)/L(s))` for `s = 0..K-1`, closed by `(1, 0)`.
//! The converse (inner) curve is the maximum of `K` affine segments in `r`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{int, Rational};

/// Number of messages `k` and of replicated, non-colluding databases `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub k: usize,
    pub n: usize,
}

impl Params {
    /// Both counts must be at least 2: with one message there is nothing to
    /// hide and with one database private retrieval degenerates to
    /// downloading everything.
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::arg(format!("need at least 2 messages, got K={k}")));
        }
        if n < 2 {
            return Err(Error::arg(format!("need at least 2 databases, got N={n}")));
        }
        Ok(Params { k, n })
    }
}

impl std::fmt::Display for Params {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "K={}, N={}", self.k, self.n)
    }
}

/// One achievable corner: mixing `s` cached bits per side-information
/// equation at caching ratio `ratio`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerPoint {
    pub s: usize,
    pub ratio: Rational,
    pub msg_len: BigInt,
    pub total_download: BigInt,
    pub cost: Rational,
}

/// Outer, inner and baseline costs at one caching ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvePoint {
    pub r: Rational,
    pub outer: Rational,
    pub inner: Rational,
    pub baseline: Rational,
    pub gap: Rational,
}

/// `C(n, k)`, zero when `k < 0` or `k > n`.
pub fn binom(n: i64, k: i64) -> Result<BigInt> {
    if n < 0 {
        return Err(Error::arg(format!("binomial with negative n={n}")));
    }
    Ok(binom_nonneg(n as u64, k))
}

fn binom_nonneg(n: u64, k: i64) -> BigInt {
    if k < 0 || k as u64 > n {
        return BigInt::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Row `C(n, 0..=n)` by the multiplicative recurrence.
fn binom_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = BigInt::one();
    row.push(acc.clone());
    for j in 0..n {
        acc = acc * (n - j) / (j + 1);
        row.push(acc.clone());
    }
    row
}

fn at(row: &[BigInt], k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    row.get(k as usize).cloned().unwrap_or_default()
}

pub(crate) fn check_ratio(r: &Rational) -> Result<()> {
    if r.is_negative() || r > &Rational::one() {
        return Err(Error::arg(format!("caching ratio {r} is outside [0, 1]")));
    }
    Ok(())
}

fn check_corner(p: Params, s: usize) -> Result<()> {
    if s >= p.k {
        return Err(Error::arg(format!("corner index s={s} outside 0..={} for {p}", p.k - 1)));
    }
    Ok(())
}

fn check_databases(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::arg(format!("need at least 2 databases, got N={n}")));
    }
    Ok(())
}

/// Integer ingredients of a corner: cached bits per message, message length
/// and total downloads.
struct CornerCounts {
    cached: BigInt,
    msg_len: BigInt,
    downloads: BigInt,
}

struct Rows {
    km2: Vec<BigInt>,
    km1: Vec<BigInt>,
    k: Vec<BigInt>,
}

impl Rows {
    fn new(k: usize) -> Self {
        Rows {
            km2: binom_row(k - 2),
            km1: binom_row(k - 1),
            k: binom_row(k),
        }
    }

    fn counts(&self, p: Params, s: usize) -> CornerCounts {
        let s = s as i64;
        let k = p.k as i64;
        let cached = at(&self.km2, s - 1);
        let base = BigInt::from(p.n - 1);
        let mut weight = BigInt::from(p.n);
        let mut uncached = BigInt::zero();
        let mut downloads = BigInt::zero();
        for i in 0..(k - s) {
            uncached += at(&self.km1, s + i) * &weight;
            downloads += at(&self.k, s + 1 + i) * &weight;
            weight *= &base;
        }
        CornerCounts {
            msg_len: &cached + uncached,
            cached,
            downloads,
        }
    }
}

fn counts(p: Params, s: usize) -> Result<CornerCounts> {
    check_corner(p, s)?;
    Ok(Rows::new(p.k).counts(p, s))
}

/// Bits of every message cached at corner `s`: `C(K-2, s-1)`.
pub fn corner_cached_bits(p: Params, s: usize) -> Result<BigInt> {
    Ok(counts(p, s)?.cached)
}

pub fn corner_ratio(p: Params, s: usize) -> Result<Rational> {
    let c = counts(p, s)?;
    Ok(Rational::new(c.cached, c.msg_len))
}

/// Message length `L(s)` used by the corner-`s` scheme.
pub fn corner_message_length(p: Params, s: usize) -> Result<BigInt> {
    Ok(counts(p, s)?.msg_len)
}

/// Total bits downloaded over all databases by the corner-`s` scheme.
pub fn corner_download_total(p: Params, s: usize) -> Result<BigInt> {
    Ok(counts(p, s)?.downloads)
}

pub fn corner_cost(p: Params, s: usize) -> Result<Rational> {
    let c = counts(p, s)?;
    Ok(Rational::new(c.downloads, c.msg_len))
}

pub fn corner_point(p: Params, s: usize) -> Result<CornerPoint> {
    check_corner(p, s)?;
    Ok(corner_from(s, Rows::new(p.k).counts(p, s)))
}

fn corner_from(s: usize, c: CornerCounts) -> CornerPoint {
    CornerPoint {
        s,
        ratio: Rational::new(c.cached, c.msg_len.clone()),
        cost: Rational::new(c.downloads.clone(), c.msg_len.clone()),
        msg_len: c.msg_len,
        total_download: c.downloads,
    }
}

/// All corners `s = 0..K-1`, in increasing caching ratio.
pub fn corner_points(p: Params) -> Vec<CornerPoint> {
    let rows = Rows::new(p.k);
    (0..p.k).map(|s| corner_from(s, rows.counts(p, s))).collect()
}

/// Achievable curve with its corners precomputed, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct OuterCurve {
    /// `(ratio, cost)` from `(0, D(0)/L(0))` through `(1, 0)`.
    knots: Vec<(Rational, Rational)>,
}

impl OuterCurve {
    pub fn new(p: Params) -> Self {
        let mut knots: Vec<_> = corner_points(p).into_iter().map(|c| (c.ratio, c.cost)).collect();
        knots.push((Rational::one(), Rational::zero()));
        OuterCurve { knots }
    }

    pub fn knots(&self) -> &[(Rational, Rational)] {
        &self.knots
    }

    pub fn eval(&self, r: &Rational) -> Result<Rational> {
        check_ratio(r)?;
        let upper = self.knots.partition_point(|(x, _)| x < r);
        let (x1, y1) = &self.knots[upper];
        if x1 == r || upper == 0 {
            return Ok(y1.clone());
        }
        let (x0, y0) = &self.knots[upper - 1];
        // r = alpha*x0 + (1-alpha)*x1
        let alpha = (x1 - r) / (x1 - x0);
        Ok(&alpha * y0 + (Rational::one() - alpha) * y1)
    }
}

/// Achievable normalized download cost at any caching ratio (memory-sharing
/// between the two enclosing corners).
pub fn outer_bound(p: Params, r: &Rational) -> Result<Rational> {
    check_ratio(r)?;
    OuterCurve::new(p).eval(r)
}

/// Ratio where the converse curve changes slope: `1/(1+N+...+N^(K-i))`.
pub fn inner_corner(p: Params, i: usize) -> Result<Rational> {
    if i == 0 || i >= p.k {
        return Err(Error::arg(format!("inner corner index i={i} outside 1..={} for {p}", p.k - 1)));
    }
    let n = BigInt::from(p.n);
    let mut sum = BigInt::zero();
    let mut pow = BigInt::one();
    for _ in 0..=(p.k - i) {
        sum += &pow;
        pow *= &n;
    }
    Ok(Rational::new(BigInt::one(), sum))
}

/// Converse curve as the upper envelope of its `K` affine segments.
#[derive(Debug, Clone)]
pub struct InnerCurve {
    k: usize,
    /// `(intercept, slope magnitude)` for segment index `i = 2..=K+1`; the
    /// segment reads `(1-r)*a - r*b`.
    segments: Vec<(Rational, Rational)>,
}

impl InnerCurve {
    pub fn new(p: Params) -> Self {
        // With m = K+1-i: a_m = 1 + a_{m-1}/N, b_m = m + b_{m-1}/N, a_0 = 1, b_0 = 0.
        let n = int(p.n);
        let mut by_m = Vec::with_capacity(p.k);
        let mut a = Rational::one();
        let mut b = Rational::zero();
        by_m.push((a.clone(), b.clone()));
        for m in 1..p.k {
            a = Rational::one() + &a / &n;
            b = int(m) + &b / &n;
            by_m.push((a.clone(), b.clone()));
        }
        by_m.reverse();
        InnerCurve { k: p.k, segments: by_m }
    }

    fn segment_value(&self, idx: usize, r: &Rational) -> Rational {
        let (a, b) = &self.segments[idx];
        (Rational::one() - r) * a - r * b
    }

    pub fn eval(&self, r: &Rational) -> Result<Rational> {
        check_ratio(r)?;
        let best = (0..self.segments.len())
            .map(|idx| self.segment_value(idx, r))
            .max()
            .expect("at least one segment");
        Ok(best.max(Rational::zero()))
    }

    /// Segment indices `i in 2..=K+1` attaining the maximum at `r`.
    pub fn maximizers(&self, r: &Rational) -> Result<Vec<usize>> {
        check_ratio(r)?;
        let values: Vec<_> = (0..self.segments.len()).map(|idx| self.segment_value(idx, r)).collect();
        let best = values.iter().max().expect("at least one segment");
        Ok(values
            .iter()
            .enumerate()
            .filter(|(_, v)| *v == best)
            .map(|(idx, _)| idx + 2)
            .collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Converse lower bound on the normalized download cost, floored at 0.
pub fn inner_bound(p: Params, r: &Rational) -> Result<Rational> {
    check_ratio(r)?;
    InnerCurve::new(p).eval(r)
}

fn geometric_inverse_sum(n: usize, terms: usize) -> Rational {
    let n = int(n);
    let mut sum = Rational::zero();
    let mut w = Rational::one();
    for _ in 0..terms {
        sum += &w;
        w /= &n;
    }
    sum
}

/// Cost of memory-sharing when the databases know the cached bits:
/// `(1-r)(1 + 1/N + ... + 1/N^(K-1))`.
pub fn known_prefetch_cost(p: Params, r: &Rational) -> Result<Rational> {
    check_ratio(r)?;
    Ok((Rational::one() - r) * geometric_inverse_sum(p.n, p.k))
}

pub fn gap(p: Params, r: &Rational) -> Result<Rational> {
    Ok(outer_bound(p, r)? - inner_bound(p, r)?)
}

/// Both curves plus the baseline, for evaluating many ratios of one `(K, N)`.
#[derive(Debug, Clone)]
pub struct TradeoffCurves {
    pub params: Params,
    pub outer: OuterCurve,
    pub inner: InnerCurve,
    baseline_at_zero: Rational,
}

impl TradeoffCurves {
    pub fn new(p: Params) -> Self {
        TradeoffCurves {
            params: p,
            outer: OuterCurve::new(p),
            inner: InnerCurve::new(p),
            baseline_at_zero: geometric_inverse_sum(p.n, p.k),
        }
    }

    pub fn point(&self, r: &Rational) -> Result<CurvePoint> {
        let outer = self.outer.eval(r)?;
        let inner = self.inner.eval(r)?;
        let baseline = (Rational::one() - r) * &self.baseline_at_zero;
        Ok(CurvePoint {
            r: r.clone(),
            gap: &outer - &inner,
            outer,
            inner,
            baseline,
        })
    }
}

pub fn curve_point(p: Params, r: &Rational) -> Result<CurvePoint> {
    TradeoffCurves::new(p).point(r)
}

/// Exact optimal tradeoff for three messages, three affine pieces.
pub fn exact_tradeoff_k3(n: usize, r: &Rational) -> Result<Rational> {
    check_databases(n)?;
    check_ratio(r)?;
    let nn = int(n);
    let one = Rational::one();
    let first_kink = Rational::new(BigInt::one(), BigInt::from(1 + n + n * n));
    let second_kink = Rational::new(BigInt::one(), BigInt::from(1 + n));
    let value = if r <= &first_kink {
        (&one - r) * (&one + &one / &nn + &one / (&nn * &nn)) - r * (int(2) + &one / &nn)
    } else if r <= &second_kink {
        (&one - r) * (&one + &one / &nn) - r
    } else {
        &one - r
    };
    Ok(value)
}

/// `(r_1, r_{K-2})`: the bounds coincide on `[0, r_1]` and on `[r_{K-2}, 1]`.
pub fn matching_region(p: Params) -> Result<(Rational, Rational)> {
    if p.k < 3 {
        return Err(Error::arg(format!(
            "matching region needs K >= 3 (for K={} the corners already pin down the whole curve)",
            p.k
        )));
    }
    let low = inner_corner(p, 1)?;
    let (k, n) = (p.k as i64, p.n as i64);
    let high = Rational::new(BigInt::from(k - 2), BigInt::from((n + 1) * k + n * n - 2 * n - 2));
    Ok((low, high))
}

/// Result of placing corner `s` of the `(K+1)`-message curve on the chord
/// between corners `s-1` and `s` of the `K`-message curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collinearity {
    pub alpha: Rational,
    /// Cost at `r_s` for `K+1` messages.
    pub cost: Rational,
    /// `alpha * cost(r_{s-1}) + (1-alpha) * cost(r_s)` for `K` messages.
    pub chord: Rational,
}

impl Collinearity {
    pub fn holds(&self) -> bool {
        !self.alpha.is_negative() && self.alpha <= Rational::one() && self.cost == self.chord
    }
}

pub fn collinearity(p: Params, s: usize) -> Result<Collinearity> {
    if s == 0 || s >= p.k {
        return Err(Error::arg(format!("collinearity needs 1 <= s <= {}, got s={s}", p.k - 1)));
    }
    let next = Params { k: p.k + 1, n: p.n };
    let r_prev = corner_ratio(p, s - 1)?;
    let r_here = corner_ratio(p, s)?;
    let r_next = corner_ratio(next, s)?;
    let alpha = (&r_here - &r_next) / (&r_here - &r_prev);
    let chord = &alpha * corner_cost(p, s - 1)? + (Rational::one() - &alpha) * corner_cost(p, s)?;
    Ok(Collinearity {
        alpha,
        cost: corner_cost(next, s)?,
        chord,
    })
}

/// Checks that adding a message moves corner `s` onto the previous curve's
/// chord, with the interpolation weight inside `[0, 1]`.
pub fn collinearity_check(p: Params, s: usize) -> Result<bool> {
    Ok(collinearity(p, s)?.holds())
}

/// Large-`K` envelope of the achievable curve: `N(1-r)^2 / ((N-1) + r)`.
pub fn asymptotic_outer(n: usize, r: &Rational) -> Result<Rational> {
    check_databases(n)?;
    check_ratio(r)?;
    let one = Rational::one();
    let rest = &one - r;
    Ok(int(n) * &rest * &rest / (int(n - 1) + r))
}

/// Large-`K` multiplicative gain over known-prefetching memory-sharing:
/// `(1-r) / (1 + r/(N-1))`.
pub fn asymptotic_gain(n: usize, r: &Rational) -> Result<Rational> {
    check_databases(n)?;
    check_ratio(r)?;
    let one = Rational::one();
    Ok((&one - r) / (&one + r / int(n - 1)))
}

/// Smallest `K` accepted as a stand-in for `K -> infinity`.
pub const MIN_K_PROXY: usize = 10;

/// Maximum over the inner corners of `asymptotic_outer - inner_bound`, with
/// the inner curve taken at `K = k_proxy`. Returns `(argmax ratio, max gap)`.
pub fn worst_case_gap(n: usize, k_proxy: usize) -> Result<(Rational, Rational)> {
    check_databases(n)?;
    if k_proxy < MIN_K_PROXY {
        return Err(Error::arg(format!("K proxy must be at least {MIN_K_PROXY}, got {k_proxy}")));
    }
    let p = Params::new(k_proxy, n)?;
    let inner = InnerCurve::new(p);
    let mut best: Option<(Rational, Rational)> = None;
    for i in 1..p.k {
        let r = inner_corner(p, i)?;
        let delta = asymptotic_outer(n, &r)? - inner.eval(&r)?;
        if best.as_ref().is_none_or(|(_, b)| &delta > b) {
            best = Some((r, delta));
        }
    }
    Ok(best.expect("k_proxy >= 2 gives at least one corner"))
}

/// Convenience for rendering: `msg_len` as `usize` when it fits.
pub fn to_usize(value: &BigInt) -> Option<usize> {
    value.to_usize()
}
