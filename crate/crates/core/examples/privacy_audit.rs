//! Privacy audits of the honest scheme and of deliberately broken variants.
//!
//! ```text
//! cargo run --release --example privacy_audit
//! ```

use cachepir::audit::{enumerate_privacy, montecarlo_privacy_with, MonteCarloOptions};
use cachepir::bounds::Params;
use cachepir::rational::decimal;
use cachepir::scheme::Mutation;
use cachepir::seed::Seed;

fn main() -> cachepir::Result<()> {
    for (k, n, s) in [(2, 2, 1), (3, 2, 2)] {
        let r = enumerate_privacy(Params::new(k, n)?, s)?;
        println!(
            "exhaustive K={k} N={n} s={s}: {} outcomes, distance {} -> {}",
            r.outcomes.unwrap_or(0),
            r.distance,
            if r.passed { "pass" } else { "fail" }
        );
    }

    let p = Params::new(4, 2)?;
    for mutation in [
        Mutation::None,
        Mutation::SkipShuffle,
        Mutation::DropUndesired,
        Mutation::BiasMixture,
        Mutation::SkipMessageSymmetry,
    ] {
        let options = MonteCarloOptions {
            mutation,
            ..MonteCarloOptions::default()
        };
        let r = montecarlo_privacy_with(p, 2, 5000, Seed(9), &options)?;
        println!(
            "sampled {p} s=2 {mutation:?}: distance {} -> {}",
            decimal(&r.distance, 4),
            if r.passed { "pass" } else { "fail" }
        );
    }
    Ok(())
}
