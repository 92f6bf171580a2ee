//! Writes the sampled tradeoff curves of one system to a CSV file.
//!
//! ```text
//! cargo run --example tradeoff_curve -- 5 2 curve.csv
//! ```

use cachepir::bounds::Params;
use cachepir::cli::CurveFile;

fn main() -> cachepir::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k = args.first().and_then(|a| a.parse().ok()).unwrap_or(5);
    let n = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let p = Params::new(k, n)?;

    let file = CurveFile::compute(p, 51, 12)?;
    let csv = file.to_csv()?;
    match args.get(2) {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| cachepir::Error::Io(e.to_string()))?;
            println!("wrote {} rows for {p} to {path}", file.rows.len());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
