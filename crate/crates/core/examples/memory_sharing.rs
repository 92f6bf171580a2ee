//! Caching ratios between corners: how the message is split and what it
//! costs.
//!
//! ```text
//! cargo run --example memory_sharing
//! ```

use cachepir::bounds::{outer_bound, Params};
use cachepir::protocol::retrieve;
use cachepir::rational::{exact, ratio};
use cachepir::scheme::split_for_ratio;
use cachepir::seed::Seed;

fn main() -> cachepir::Result<()> {
    let cases = [(3, 2, ratio(1, 5)), (4, 2, ratio(1, 10)), (4, 3, ratio(1, 12)), (5, 2, ratio(3, 10))];
    for (k, n, r) in cases {
        let p = Params::new(k, n)?;
        let split = split_for_ratio(p, &r)?;
        let t = retrieve(p, k - 1, &r, Seed(1))?;
        println!(
            "{p} r={}: corners {} and {}, alpha={}, {} + {} blocks, L={}, cost {} (bound {}), decoded {}",
            exact(&r),
            split.s,
            split.s + 1,
            exact(&split.alpha),
            split.block_s,
            split.block_s1,
            split.l_total,
            exact(&t.cost),
            exact(&outer_bound(p, &r)?),
            t.decoded == t.desired_message
        );
    }
    Ok(())
}
