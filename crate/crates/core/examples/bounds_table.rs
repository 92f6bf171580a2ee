//! Corner points and bounds at a few caching ratios.
//!
//! ```text
//! cargo run --example bounds_table
//! ```

use cachepir::bounds::{corner_points, curve_point, Params};
use cachepir::rational::{decimal, exact, ratio};

fn main() -> cachepir::Result<()> {
    let p = Params::new(4, 2)?;
    println!("achievable corners for {p}");
    for c in corner_points(p) {
        println!(
            "  s={}  r={:<6} L={:<3} downloads={:<3} cost={} ({})",
            c.s,
            exact(&c.ratio),
            c.msg_len,
            c.total_download,
            exact(&c.cost),
            decimal(&c.cost, 6)
        );
    }

    println!("\n{:>8} {:>10} {:>10} {:>10} {:>10}", "r", "outer", "inner", "baseline", "gap");
    for r in [ratio(0, 1), ratio(1, 15), ratio(1, 10), ratio(1, 7), ratio(1, 5), ratio(1, 2)] {
        let pt = curve_point(p, &r)?;
        println!(
            "{:>8} {:>10} {:>10} {:>10} {:>10}",
            exact(&r),
            decimal(&pt.outer, 6),
            decimal(&pt.inner, 6),
            decimal(&pt.baseline, 6),
            decimal(&pt.gap, 6)
        );
    }
    Ok(())
}
