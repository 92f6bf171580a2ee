//! One retrieval at a corner ratio, with the queries each database sees.
//!
//! ```text
//! cargo run --example retrieve_corner
//! ```

use cachepir::audit::{verify_cost, verify_decodability};
use cachepir::bounds::Params;
use cachepir::protocol::retrieve_corner;
use cachepir::rational::exact;
use cachepir::seed::Seed;

fn main() -> cachepir::Result<()> {
    let p = Params::new(3, 2)?;
    let t = retrieve_corner(p, 1, 0, Seed(42))?;

    println!("{p}, want message 0, {} bits per message", t.msg_len);
    for m in 0..p.k {
        let cached: Vec<usize> = t.cache.indices(m).collect();
        println!("cache of message {m}: bits {cached:?}");
    }
    for (db, queries) in t.plan.per_db.iter().enumerate() {
        println!("database {db}:");
        for (q, a) in queries.iter().zip(&t.answers.0[db]) {
            println!("  {q:<24} -> {}", *a as u8);
        }
    }
    println!("cost {}", exact(&t.cost));
    println!("decoded correctly: {}", t.decoded == t.desired_message);
    println!("rank check: {}, cost check: {}", verify_decodability(&t)?, verify_cost(&t));
    Ok(())
}
