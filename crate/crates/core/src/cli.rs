//! The `cachepir` command line.
//!
//! Exit codes: 0 when everything checked passes, 1 on a verification or I/O
//! failure, 2 on a usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::audit::{self, PrivacyReport};
use crate::bounds::{self, CurvePoint, Params, TradeoffCurves, MIN_K_PROXY};
use crate::error::{Error, Result};
use crate::protocol::{self, Transcript};
use crate::rational::{decimal, exact, parse_rational, serde_exact, Rational};
use crate::scheme::{round_profile, PlanBuilder};
use crate::seed::Seed;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Header of the CSV curve format.
pub const CSV_HEADER: [&str; 10] = [
    "r",
    "r_exact",
    "outer",
    "outer_exact",
    "inner",
    "inner_exact",
    "baseline",
    "baseline_exact",
    "gap",
    "gap_exact",
];

#[derive(Debug, Parser)]
#[command(name = "cachepir", version, about = "Private retrieval with an unknown uncoded cache: bounds, simulation and audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corner table and, optionally, all bounds at one ratio.
    Bounds {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_ratio_arg)]
        r: Option<Rational>,
        #[arg(long, default_value_t = 12)]
        precision: usize,
    },
    /// Tradeoff curves sampled on a grid that includes every corner.
    Curve {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        precision: usize,
    },
    /// Run one retrieval end to end and check it.
    Simulate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        theta: usize,
        /// Corner index; mutually exclusive with --r.
        #[arg(long, conflicts_with = "r", required_unless_present = "r")]
        s: Option<usize>,
        #[arg(long, value_parser = parse_ratio_arg)]
        r: Option<Rational>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the transcript (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Privacy audit of the corner-s scheme.
    Audit {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value_t = Mode::Structural)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Gap between the bounds at the converse corners.
    Gap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kmax: usize,
        /// Also report the worst case against the large-K achievable curve.
        #[arg(long)]
        asymptotic: bool,
        #[arg(long, default_value_t = 12)]
        precision: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Structural,
    Exact,
    Montecarlo,
}

fn parse_ratio_arg(text: &str) -> std::result::Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn both(r: &Rational, precision: usize) -> String {
    format!("{} ({})", exact(r), decimal(r, precision))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Bounds { k, n, r, precision } => cmd_bounds(Params::new(k, n)?, r.as_ref(), precision, out),
        Command::Curve {
            k,
            n,
            samples,
            format,
            out: path,
            precision,
        } => cmd_curve(Params::new(k, n)?, samples, format, path.as_deref(), precision, out),
        Command::Simulate {
            k,
            n,
            theta,
            s,
            r,
            seed,
            out: path,
        } => {
            let p = Params::new(k, n)?;
            let target = match (s, r) {
                (Some(s), _) => Target::Corner(s),
                (None, Some(r)) => Target::Ratio(r),
                (None, None) => return Err(Error::arg("one of --s or --r is required")),
            };
            cmd_simulate(p, theta, target, Seed(seed), path.as_deref(), out)
        }
        Command::Audit {
            k,
            n,
            s,
            mode,
            trials,
            seed,
            format,
        } => cmd_audit(Params::new(k, n)?, s, mode, trials, Seed(seed), format, out),
        Command::Gap {
            n,
            kmax,
            asymptotic,
            precision,
        } => cmd_gap(n, kmax, asymptotic, precision, out),
    }
}

pub fn cmd_bounds(p: Params, r: Option<&Rational>, precision: usize, out: &mut dyn Write) -> Result<bool> {
    writeln!(out, "corner points for {p}").map_err(io)?;
    writeln!(out, "s\tr_s\tL(s)\tD(r_s)\tcost").map_err(io)?;
    for c in bounds::corner_points(p) {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            c.s,
            both(&c.ratio, precision),
            c.msg_len,
            c.total_download,
            both(&c.cost, precision)
        )
        .map_err(io)?;
    }
    writeln!(out, "-\t{}\t1\t0\t{}", both(&Rational::one(), precision), both(&Rational::from_integer(0.into()), precision))
        .map_err(io)?;
    if let Some(r) = r {
        let pt = bounds::curve_point(p, r)?;
        writeln!(out, "at r = {}", both(r, precision)).map_err(io)?;
        writeln!(out, "outer\t{}", both(&pt.outer, precision)).map_err(io)?;
        writeln!(out, "inner\t{}", both(&pt.inner, precision)).map_err(io)?;
        writeln!(out, "baseline\t{}", both(&pt.baseline, precision)).map_err(io)?;
        writeln!(out, "gap\t{}", both(&pt.gap, precision)).map_err(io)?;
    }
    Ok(true)
}

/// Sorted, deduplicated ratios: a uniform grid plus every achievable and
/// converse corner.
pub fn curve_grid(p: Params, samples: usize) -> Result<Vec<Rational>> {
    if samples < 2 {
        return Err(Error::arg(format!("need at least 2 samples, got {samples}")));
    }
    let mut grid: Vec<Rational> = (0..samples)
        .map(|i| Rational::new(i.into(), (samples - 1).into()))
        .collect();
    grid.extend(bounds::corner_points(p).into_iter().map(|c| c.ratio));
    for i in 1..p.k {
        grid.push(bounds::inner_corner(p, i)?);
    }
    grid.sort();
    grid.dedup();
    Ok(grid)
}

/// One row of a curve file; every value as an exact `p/q` plus a decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveRow {
    pub r: String,
    pub r_exact: String,
    pub outer: String,
    pub outer_exact: String,
    pub inner: String,
    pub inner_exact: String,
    pub baseline: String,
    pub baseline_exact: String,
    pub gap: String,
    pub gap_exact: String,
}

impl CurveRow {
    pub fn new(pt: &CurvePoint, precision: usize) -> Self {
        CurveRow {
            r: decimal(&pt.r, precision),
            r_exact: exact(&pt.r),
            outer: decimal(&pt.outer, precision),
            outer_exact: exact(&pt.outer),
            inner: decimal(&pt.inner, precision),
            inner_exact: exact(&pt.inner),
            baseline: decimal(&pt.baseline, precision),
            baseline_exact: exact(&pt.baseline),
            gap: decimal(&pt.gap, precision),
            gap_exact: exact(&pt.gap),
        }
    }

    /// Exact values parsed back.
    pub fn point(&self) -> Result<CurvePoint> {
        Ok(CurvePoint {
            r: parse_rational(&self.r_exact)?,
            outer: parse_rational(&self.outer_exact)?,
            inner: parse_rational(&self.inner_exact)?,
            baseline: parse_rational(&self.baseline_exact)?,
            gap: parse_rational(&self.gap_exact)?,
        })
    }
}

/// A sampled tradeoff curve as written by `cachepir curve`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveFile {
    pub params: Params,
    pub rows: Vec<CurveRow>,
}

impl CurveFile {
    pub fn compute(p: Params, samples: usize, precision: usize) -> Result<Self> {
        let curves = TradeoffCurves::new(p);
        let rows = curve_grid(p, samples)?
            .iter()
            .map(|r| curves.point(r).map(|pt| CurveRow::new(&pt, precision)))
            .collect::<Result<_>>()?;
        Ok(CurveFile { params: p, rows })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(fail)?;
        for row in &self.rows {
            w.serialize(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Rows from CSV text with the standard header.
    pub fn rows_from_csv(text: &str) -> Result<Vec<CurveRow>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::contract(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::contract("unexpected curve header"));
        }
        r.deserialize().map(|row| row.map_err(|e| Error::contract(e.to_string()))).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::contract(e.to_string()))
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(io),
    }
}

pub fn cmd_curve(
    p: Params,
    samples: usize,
    format: Format,
    path: Option<&Path>,
    precision: usize,
    out: &mut dyn Write,
) -> Result<bool> {
    let file = CurveFile::compute(p, samples, precision)?;
    let text = match format {
        Format::Csv => file.to_csv()?,
        Format::Json => file.to_json()?,
        Format::Text => return Err(Error::arg("curve output is csv or json")),
    };
    emit(&text, path, out)?;
    if let Some(path) = path {
        writeln!(out, "wrote {} rows to {}", file.rows.len(), path.display()).map_err(io)?;
    }
    Ok(true)
}

/// What to simulate: a corner scheme or an arbitrary caching ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Corner(usize),
    Ratio(Rational),
}

pub fn cmd_simulate(
    p: Params,
    theta: usize,
    target: Target,
    seed: Seed,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<bool> {
    let transcript = match &target {
        Target::Corner(s) => {
            round_profile(p, *s)?;
            protocol::retrieve_corner(p, *s, theta, seed)
        }
        Target::Ratio(r) => {
            PlanBuilder::for_ratio(p, r, theta)?;
            protocol::retrieve(p, theta, r, seed)
        }
    };
    let t = match transcript {
        Ok(t) => t,
        Err(Error::Decode(e)) => {
            writeln!(out, "decode failed: {e:?}").map_err(io)?;
            return Ok(false);
        }
        Err(e) => return Err(e),
    };
    let decodable = audit::verify_decodability(&t)?;
    let cost_ok = audit::verify_cost(&t);
    let symmetric = audit::structural_symmetry(&t.plan).passed;
    writeln!(out, "{p}, desired message {theta}, seed {seed}").map_err(io)?;
    writeln!(out, "caching ratio {}", both(&t.ratio, 12)).map_err(io)?;
    writeln!(out, "message length {}", t.msg_len).map_err(io)?;
    writeln!(out, "downloads per database {:?}, total {}", t.per_db_downloads, t.total_downloads).map_err(io)?;
    writeln!(out, "cost {}", both(&t.cost, 12)).map_err(io)?;
    writeln!(out, "decode {}", if decodable { "OK" } else { "FAILED" }).map_err(io)?;
    writeln!(out, "cost matches bound {}", if cost_ok { "OK" } else { "FAILED" }).map_err(io)?;
    writeln!(out, "message symmetry {}", if symmetric { "OK" } else { "FAILED" }).map_err(io)?;
    if let Some(path) = path {
        t.save(path)?;
        writeln!(out, "wrote transcript to {}", path.display()).map_err(io)?;
    }
    Ok(decodable && cost_ok && symmetric)
}

pub fn cmd_audit(
    p: Params,
    s: usize,
    mode: Mode,
    trials: u64,
    seed: Seed,
    format: Format,
    out: &mut dyn Write,
) -> Result<bool> {
    let report = match mode {
        Mode::Structural => {
            let mut report: Option<PrivacyReport> = None;
            for theta in 0..p.k {
                let builder = PlanBuilder::corner(p, s, theta)?;
                let store = protocol::MessageStore::random(p.k, builder.msg_len(), seed);
                let cache = protocol::prefetch(&store, builder.cached_per_message(), seed)?;
                let r = audit::structural_symmetry(&builder.build(&cache, seed)?);
                if report.as_ref().is_none_or(|best| r.distance > best.distance) {
                    report = Some(r);
                }
            }
            let mut report = report.expect("at least two messages");
            report.seed = Some(seed);
            report
        }
        Mode::Exact => audit::enumerate_privacy(p, s)?,
        Mode::Montecarlo => audit::montecarlo_privacy(p, s, trials, seed)?,
    };
    write_report(&report, p, s, format, out)?;
    Ok(report.passed)
}

fn write_report(report: &PrivacyReport, p: Params, s: usize, format: Format, out: &mut dyn Write) -> Result<()> {
    if format == Format::Json {
        let text = serde_json::to_string_pretty(report).map_err(|e| Error::contract(e.to_string()))?;
        return writeln!(out, "{text}").map_err(io);
    }
    writeln!(out, "{} privacy audit, {p}, s={s}", report.mode).map_err(io)?;
    for (db, d) in report.per_db.iter().enumerate() {
        writeln!(out, "database {db}: distance {}", both(d, 6)).map_err(io)?;
    }
    if let Some(raw) = &report.raw_distance {
        writeln!(out, "raw query distance {}", both(raw, 6)).map_err(io)?;
    }
    if let Some(trials) = report.trials {
        writeln!(out, "trials {trials}").map_err(io)?;
    }
    if let Some(n) = report.outcomes {
        writeln!(out, "outcomes {n}").map_err(io)?;
    }
    if let Some(seed) = report.seed {
        writeln!(out, "seed {seed}").map_err(io)?;
    }
    writeln!(
        out,
        "distance {} threshold {} -> {}",
        both(&report.distance, 6),
        exact(&report.threshold),
        if report.passed { "PASS" } else { "FAIL" }
    )
    .map_err(io)
}

pub fn cmd_gap(n: usize, kmax: usize, asymptotic: bool, precision: usize, out: &mut dyn Write) -> Result<bool> {
    let p = Params::new(kmax, n)?;
    if asymptotic && kmax < MIN_K_PROXY {
        return Err(Error::arg(format!("--asymptotic needs --kmax of at least {MIN_K_PROXY}")));
    }
    let curves = TradeoffCurves::new(p);
    writeln!(out, "gap at the converse corners, {p}").map_err(io)?;
    writeln!(out, "i\tr\touter\tinner\tgap").map_err(io)?;
    for i in 1..p.k {
        let r = bounds::inner_corner(p, i)?;
        let pt = curves.point(&r)?;
        writeln!(
            out,
            "{i}\t{}\t{}\t{}\t{}",
            both(&r, precision),
            both(&pt.outer, precision),
            both(&pt.inner, precision),
            both(&pt.gap, precision)
        )
        .map_err(io)?;
    }
    if asymptotic {
        let (r, delta) = bounds::worst_case_gap(n, kmax)?;
        writeln!(out, "worst case against the large-K achievable curve").map_err(io)?;
        writeln!(out, "argmax r {}", both(&r, precision)).map_err(io)?;
        writeln!(out, "max gap {}", both(&delta, precision)).map_err(io)?;
    }
    Ok(true)
}

/// Transcript on disk, as written by `cachepir simulate --out`.
pub type TranscriptFile = Transcript;

/// Summary line pair used by the transcript replay example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplaySummary {
    pub decoded_matches: bool,
    pub cost_ok: bool,
    #[serde(with = "serde_exact")]
    pub cost: Rational,
}

/// Loads a transcript, re-runs the decoder and the cost check.
pub fn replay(path: &Path) -> Result<ReplaySummary> {
    let t = Transcript::load(path)?;
    let decoded = protocol::decode(&t.plan, &t.answers, &t.cache)?;
    Ok(ReplaySummary {
        decoded_matches: decoded == t.decoded,
        cost_ok: audit::verify_cost(&t),
        cost: t.cost,
    })
}
