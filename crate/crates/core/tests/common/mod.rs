//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use cachepir::bounds::{corner_cached_bits, corner_points, Params};
use cachepir::rational::{int, ratio};
use cachepir::scheme::round_profile;
use cachepir::Rational;
use num_bigint::BigInt;
use num_traits::{One, Zero};

pub fn p(k: usize, n: usize) -> Params {
    Params::new(k, n).unwrap()
}

fn inv_pow(n: usize, j: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(n).pow(j as u32))
}

/// Converse bound as the plain maximum of its defining sums.
pub fn inner_direct(p: Params, r: &Rational) -> Rational {
    let (k, n) = (p.k, p.n);
    let one = Rational::one();
    (2..=k + 1)
        .map(|i| {
            let a: Rational = (0..=k + 1 - i).map(|j| inv_pow(n, j)).sum();
            let b: Rational = (0..=(k as i64 - i as i64))
                .map(|j| int((k + 1 - i) as i64 - j) * inv_pow(n, j as usize))
                .sum();
            (&one - r) * a - r * b
        })
        .max()
        .unwrap()
}

/// Achievable curve as the smallest chord value over all pairs of corners
/// (plus the fully cached end point) that bracket `r`.
pub fn outer_chord(p: Params, r: &Rational) -> Rational {
    let mut pts: Vec<(Rational, Rational)> = corner_points(p).into_iter().map(|c| (c.ratio, c.cost)).collect();
    pts.push((Rational::one(), Rational::zero()));
    let mut best: Option<Rational> = None;
    for (a, fa) in &pts {
        for (b, fb) in &pts {
            let value = if a == r {
                fa.clone()
            } else if a < r && r < b {
                fa + (fb - fa) * (r - a) / (b - a)
            } else {
                continue;
            };
            best = Some(match best {
                Some(v) if v <= value => v,
                _ => value,
            });
        }
    }
    best.unwrap()
}

/// Corner ratio and cost obtained by counting the scheme's equations.
pub fn corner_by_counting(p: Params, s: usize) -> (Rational, Rational) {
    let profile = round_profile(p, s).unwrap();
    let cached = corner_cached_bits(p, s).unwrap();
    let len = BigInt::from(profile.desired_total()) + &cached;
    (
        Rational::new(cached, len.clone()),
        Rational::new(BigInt::from(profile.total_downloads()), len),
    )
}

/// Known-prefetching cost from its defining sum.
pub fn baseline_direct(p: Params, r: &Rational) -> Rational {
    (Rational::one() - r) * (0..p.k).map(|j| inv_pow(p.n, j)).sum::<Rational>()
}

pub fn geometric(n: usize, terms: usize) -> Rational {
    (0..terms).map(|j| inv_pow(n, j)).sum()
}

/// `count` evenly spaced rationals in `[lo, hi]`.
pub fn samples(lo: &Rational, hi: &Rational, count: usize) -> Vec<Rational> {
    (0..count)
        .map(|i| lo + (hi - lo) * ratio(i as i64, count as i64 - 1))
        .collect()
}
