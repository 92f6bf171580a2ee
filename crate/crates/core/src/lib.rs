//! Cache-aided private information retrieval with unknown, uncoded prefetching.
//!
//! A user holds a cache of raw message bits that the `N` replicated databases
//! know nothing about, and wants one of `K` messages without any single
//! database learning which one. This crate provides:
//!
//! - [`bounds`]: exact-rational achievable (outer) and converse (inner)
//!   download-cost bounds, the known-prefetching baseline, the gap between the
//!   bounds and its asymptotics.
//! - [`scheme`]: explicit GF(2) query plans for every corner caching ratio and
//!   memory-sharing compositions for arbitrary rational ratios.
//! - [`protocol`]: an end-to-end simulation (messages, prefetching, database
//!   answers, decoding) producing replayable [`protocol::Transcript`]s.
//! - [`audit`]: decodability rank checks, cost reconciliation and privacy
//!   audits (structural, exhaustive and Monte-Carlo).
//! - [`cli`]: the `cachepir` command-line front end.
//!
//! Every ratio and cost is a [`Rational`]; floating point only appears when
//! rendering decimals for humans.
//!
//! ```
//! use cachepir::bounds::{corner_cost, corner_ratio, Params};
//! use cachepir::rational::ratio;
//!
//! let p = Params::new(3, 2).unwrap();
//! assert_eq!(corner_ratio(p, 1).unwrap(), ratio(1, 7));
//! assert_eq!(corner_cost(p, 1).unwrap(), ratio(8, 7));
//! ```

pub mod audit;
pub mod bounds;
pub mod cli;
mod error;
pub mod gf2;
pub mod protocol;
pub mod rational;
pub mod scheme;
pub mod seed;

pub use error::{DecodeError, Error, Result};
pub use rational::Rational;
