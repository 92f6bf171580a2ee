//! Saves a transcript, loads it back and re-checks it offline.
//!
//! ```text
//! cargo run --example transcript_replay -- /tmp/run.json
//! ```

use cachepir::audit::{verify_cost, verify_decodability};
use cachepir::bounds::Params;
use cachepir::protocol::{decode, retrieve, Transcript};
use cachepir::rational::{exact, ratio};
use cachepir::seed::Seed;

fn main() -> cachepir::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("cachepir-transcript.json").display().to_string());

    let t = retrieve(Params::new(4, 3)?, 1, &ratio(1, 12), Seed(5))?;
    t.save(&path)?;
    println!("saved {} queries over {} bits to {path}", t.total_downloads, t.msg_len);

    let back = Transcript::load(&path)?;
    let again = decode(&back.plan, &back.answers, &back.cache)?;
    println!("identical after reload: {}", back == t);
    println!("decoder reproduces the recorded message: {}", again == back.decoded);
    println!("rank check: {}", verify_decodability(&back)?);
    println!("cost {} matches the bound: {}", exact(&back.cost), verify_cost(&back));
    Ok(())
}
