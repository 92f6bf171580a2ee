//! Where the achievable and converse bounds disagree, and by how much.
//!
//! ```text
//! cargo run --release --example gap_analysis
//! ```

use cachepir::bounds::{gap, inner_corner, matching_region, worst_case_gap, Params};
use cachepir::rational::{decimal, exact};

fn main() -> cachepir::Result<()> {
    for k in 3..=7 {
        let p = Params::new(k, 2)?;
        let (lo, hi) = matching_region(p)?;
        let worst = (1..k)
            .map(|i| {
                let r = inner_corner(p, i)?;
                Ok((gap(p, &r)?, r))
            })
            .collect::<cachepir::Result<Vec<_>>>()?
            .into_iter()
            .max()
            .expect("at least one corner");
        println!(
            "{p}: bounds meet outside ({}, {}); largest corner gap {} at r={}",
            exact(&lo),
            exact(&hi),
            decimal(&worst.0, 6),
            exact(&worst.1)
        );
    }

    println!();
    for n in 2..=6 {
        let (r, delta) = worst_case_gap(n, 100)?;
        println!("N={n}: many-message worst gap {} ({}) at r={}", exact(&delta), decimal(&delta, 6), exact(&r));
    }
    Ok(())
}
