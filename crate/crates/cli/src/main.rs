use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use linweb::cartan::{collinearity_residual, flatness_csv, flatness_grid, linearize, n_from_expr, DevelopOptions, HEX_TOL};
use linweb::coframe::{admissible_samples, hexagonality, signature_at, signature_csv, signature_dimension, Region, MIN_DIMENSION_SAMPLES};
use linweb::expr::{parse, parse_numeric, parse_poly};
use linweb::forms::FormalFrame;
use linweb::ideals::Limits;
use linweb::jets::{lemma1_pipeline, transcript_json};
use linweb::polymorph::{gronwall_chain, theorem5_scheme, two_pencils_pipeline, ChainOptions, ChainVerdict, PipelineOptions, Transcript};
use linweb::web::{invariant_record, WebDef, WebError};
use linweb::Q;
use linweb_cli::selftest;
use serde_json::json;

#[derive(Parser)]
#[command(name = "linweb", version, about = "Projective differential invariants of planar linear 3-webs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Machine-readable output, errors included
    #[arg(long, global = true)]
    json: bool,
    /// Wall-clock ceiling for expensive steps
    #[arg(long = "ceiling-seconds", global = true, default_value_t = 120)]
    ceiling_seconds: u64,
    /// Largest polynomial (in terms) an expensive step may start from
    #[arg(long = "ceiling-terms", global = true, default_value_t = 20_000)]
    ceiling_terms: usize,
    /// Worker threads for per-sample work
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Clone)]
struct WebArgs {
    /// Slope of the first foliation
    #[arg(long = "P", allow_hyphen_values = true, requires_all = ["q", "r"])]
    p: Option<String>,
    /// Slope of the second foliation
    #[arg(long = "Q", allow_hyphen_values = true)]
    q: Option<String>,
    /// Slope of the third foliation
    #[arg(long = "R", allow_hyphen_values = true)]
    r: Option<String>,
    /// Web definition as JSON {"mode", "P", "Q", "R"}
    #[arg(long, conflicts_with = "p")]
    web: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Sampling {
    /// Sampling rectangle x0,y0,x1,y1
    #[arg(long, default_value = "1,1,2,2")]
    region: String,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Invariants a, b, c, k and the coframe at a point
    Invariants {
        #[command(flatten)]
        web: WebArgs,
        /// Point x,y (decimals or fractions)
        #[arg(long)]
        at: String,
    },
    /// Signature samples as CSV plus the dimension of the signature set
    Signature {
        #[command(flatten)]
        web: WebArgs,
        #[command(flatten)]
        sampling: Sampling,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Whether the web is hexagonal (k = 0)
    Hexagonal {
        #[command(flatten)]
        web: WebArgs,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = HEX_TOL)]
        tol: f64,
    },
    /// Flatness residuals K11, K22 of the gauge for a given N over a grid
    Curvature {
        #[command(flatten)]
        web: WebArgs,
        /// N as an expression in x, y and parameters
        #[arg(long = "N", allow_hyphen_values = true)]
        n: String,
        /// Parameter value name=value, repeatable
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, default_value = "1,1,2,2")]
        region: String,
        /// Grid nodes nx,ny
        #[arg(long, default_value = "5,5")]
        grid: String,
        /// Agreement required between closed-form and direct curvature
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Images of points along leaves under the linearizing map
    Linearize {
        #[command(flatten)]
        web: WebArgs,
        #[command(flatten)]
        sampling: Sampling,
        /// Points per leaf
        #[arg(long, default_value_t = 5)]
        per_leaf: usize,
        /// Length of the leaf segment
        #[arg(long, default_value_t = 0.3)]
        length: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compatibility pipeline for a web with two foliations by pencils of lines
    Lemma1,
    /// Staged derivation for webs containing two pencils
    TwoPencils {
        #[arg(long = "through-stage", default_value_t = 10)]
        through_stage: u8,
    },
    /// Reduction of polymorphs to relations among twelve invariants
    Theorem5 {
        #[arg(long = "through-stage", default_value_t = 9)]
        through_stage: u8,
    },
    /// Ideal chain from a seed system and derivation rules
    Chain {
        /// JSON {"structure": [s1, s2], "rules": {name: [e1, e2]}, "seed": [...], "invert": [...]};
        /// defaults to the two relations of the twelve-invariant scheme
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "max-steps", default_value_t = 6)]
        max_steps: usize,
    },
    /// The acceptance suite
    Selftest {
        /// Run only these criteria (1 to 10)
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(m: impl Into<String>) -> Self {
        Failure { code: 2, kind: "usage", message: m.into() }
    }
    fn degenerate(m: impl Into<String>) -> Self {
        Failure { code: 1, kind: "degenerate", message: m.into() }
    }
    fn ceiling(m: impl Into<String>) -> Self {
        Failure { code: 3, kind: "ceiling", message: m.into() }
    }
}

fn web_failure(e: WebError) -> Failure {
    match e {
        WebError::Expr(_) | WebError::Definition(_) => Failure::usage(e.to_string()),
        _ => Failure::degenerate(e.to_string()),
    }
}

/// Library errors: bad expressions are usage errors, anything else a
/// computational verdict on the input.
fn lib_failure<E: std::fmt::Display>(e: E) -> Failure {
    let m = e.to_string();
    if m.contains("ceiling") {
        Failure::ceiling(m)
    } else if m.starts_with("parse") || m.contains("unexpected") {
        Failure::usage(m)
    } else {
        Failure::degenerate(m)
    }
}

fn load_web(w: &WebArgs) -> Result<WebDef, Failure> {
    if let Some(path) = &w.web {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        return WebDef::from_json(&text).map_err(web_failure);
    }
    match (&w.p, &w.q, &w.r) {
        (Some(p), Some(q), Some(r)) => WebDef::auto(p, q, r).map_err(web_failure),
        _ => Err(Failure::usage("give --P, --Q and --R, or --web FILE")),
    }
}

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| Failure::usage(format!("{what}: {e}")))?;
    if v.len() != n {
        return Err(Failure::usage(format!("{what}: expected {n} comma-separated numbers")));
    }
    Ok(v)
}

fn parse_region(s: &str) -> Result<Region, Failure> {
    let v = parse_list(s, 4, "--region")?;
    if !(v[0] < v[2] && v[1] < v[3]) {
        return Err(Failure::usage("--region: need x0 < x1 and y0 < y1"));
    }
    Ok(Region { x0: v[0], y0: v[1], x1: v[2], y1: v[3] })
}

/// A rational from `3`, `-1/2` or `0.25`.
fn parse_rational(s: &str) -> Result<Q, Failure> {
    let s = s.trim();
    if let Ok(q) = s.parse::<Q>() {
        return Ok(q);
    }
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    let (int, frac) = body.split_once('.').ok_or_else(|| Failure::usage(format!("not a number: {s}")))?;
    let digits = format!("{int}{frac}");
    let num: num_bigint::BigInt = digits.parse().map_err(|_| Failure::usage(format!("not a number: {s}")))?;
    let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
    let q = Q::new(num, den);
    Ok(if neg { -q } else { q })
}

fn check_sampling(s: &Sampling) -> Result<Region, Failure> {
    if s.samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    parse_region(&s.region)
}

fn check_tol(t: f64) -> Result<(), Failure> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage("--tol must be positive"))
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

/// Transcript as text: one line per output, stage headers with status.
fn transcript_text(tr: &Transcript) -> String {
    let mut out = String::new();
    for s in &tr.stages {
        let _ = writeln!(out, "stage {} {}: {:?} ({} ms)", s.index, s.name, s.status, s.millis);
        for (n, v) in &s.outputs {
            let _ = writeln!(out, "  {n} = {v}");
        }
        for n in &s.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    out
}

fn stopped_at_ceiling(tr: &Transcript) -> bool {
    tr.stages.iter().any(|s| s.notes.iter().any(|n| n.contains("ceiling")))
}

fn pipeline_options(c: &Common, through_stage: u8) -> PipelineOptions {
    PipelineOptions { through_stage, ceiling: Duration::from_secs(c.ceiling_seconds), max_terms: c.ceiling_terms }
}

#[derive(serde::Deserialize)]
struct ChainInput {
    structure: [String; 2],
    rules: BTreeMap<String, [String; 2]>,
    seed: Vec<String>,
    #[serde(default)]
    invert: Vec<String>,
}

/// Standard output plus the exit code for an otherwise successful run.
type Output = (String, u8);

fn run(cli: Cli) -> Result<Output, Failure> {
    let c = &cli.common;
    if c.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    match &cli.command {
        Command::Invariants { web, at } => {
            let w = load_web(web)?;
            let xy: Vec<&str> = at.split(',').collect();
            if xy.len() != 2 {
                return Err(Failure::usage("--at: expected x,y"));
            }
            let at = [parse_rational(xy[0])?, parse_rational(xy[1])?];
            let rec = invariant_record(&w, at).map_err(web_failure)?;
            if c.json {
                return Ok((serde_json::to_string_pretty(&rec).expect("record serializes") + "\n", 0));
            }
            let tol = rec.tolerance.map_or("exact".to_string(), |t| format!("tol {t:e}"));
            let mut out = format!("point = ({}, {})\n", rec.point[0], rec.point[1]);
            for (n, v) in [("a", &rec.a), ("b", &rec.b), ("c", &rec.c), ("k", &rec.k)] {
                let _ = writeln!(out, "{n} = {v} ({tol})");
            }
            for (i, u) in rec.u.iter().enumerate() {
                let _ = writeln!(out, "U{} = ({}) dx + ({}) dy ({tol})", i + 1, u[0], u[1]);
            }
            Ok((out, 0))
        }
        Command::Signature { web, sampling, csv } => {
            let w = load_web(web)?;
            let region = check_sampling(sampling)?;
            let pts = admissible_samples(&w, region, sampling.samples, sampling.seed).map_err(lib_failure)?;
            let rows: Vec<_> = linweb::coframe::par_map(&pts, c.jobs, |&p| signature_at(&w, p));
            let rows: Vec<_> = rows.into_iter().filter_map(Result::ok).collect();
            let table = signature_csv(&rows);
            let rep = if pts.len() >= MIN_DIMENSION_SAMPLES { Some(signature_dimension(&w, &pts, c.jobs).map_err(lib_failure)?) } else { None };
            let mut out = String::new();
            match csv {
                Some(path) => std::fs::write(path, &table).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
                None if !c.json => out.push_str(&table),
                None => {}
            }
            if c.json {
                let mut v = json!({ "dimension": rep });
                if csv.is_none() {
                    v["csv"] = json!(table);
                }
                out.push_str(&pretty(&v));
                out.push('\n');
            } else {
                let summary = match &rep {
                    Some(rep) => format!(
                        "dimension {} (rank counts {:?}, rejected {}, rank tol rel {:e} abs {:e})",
                        rep.dimension, rep.rank_counts, rep.rejected, rep.rel_threshold, rep.abs_threshold
                    ),
                    None => format!("dimension not assessed: needs at least {MIN_DIMENSION_SAMPLES} samples"),
                };
                if csv.is_some() {
                    out.push_str(&summary);
                    out.push('\n');
                } else {
                    eprintln!("{summary}");
                }
            }
            Ok((out, 0))
        }
        Command::Hexagonal { web, sampling, tol } => {
            check_tol(*tol)?;
            let w = load_web(web)?;
            let region = check_sampling(sampling)?;
            let pts = if w.is_symbolic() { Vec::new() } else { admissible_samples(&w, region, sampling.samples, sampling.seed).map_err(lib_failure)? };
            let v = hexagonality(&w, &pts, *tol).map_err(lib_failure)?;
            if c.json {
                return Ok((pretty(&serde_json::to_value(&v).expect("verdict serializes")) + "\n", 0));
            }
            let out = match (&v.k, v.max_abs_k) {
                (Some(k), _) => format!("hexagonal = {} (exact: k = {k})\n", v.hexagonal),
                (None, Some(m)) => format!("hexagonal = {} (max |k| = {m:.3e} over {} samples, tol {:e})\n", v.hexagonal, v.samples, tol),
                _ => format!("hexagonal = {}\n", v.hexagonal),
            };
            Ok((out, 0))
        }
        Command::Curvature { web, n, params, region, grid, tol } => {
            check_tol(*tol)?;
            let w = load_web(web)?;
            let r = parse_region(region)?;
            let g = parse_list(grid, 2, "--grid")?;
            if g.iter().any(|&k| k < 1.0 || k.fract() != 0.0) {
                return Err(Failure::usage("--grid: positive integers nx,ny"));
            }
            let ne = parse_numeric(n).map_err(|e| Failure::usage(format!("--N: {e}")))?;
            let mut pv = HashMap::new();
            for p in params {
                let (k, v) = p.split_once('=').ok_or_else(|| Failure::usage(format!("--param {p}: expected name=value")))?;
                let v: f64 = v.parse().map_err(|e| Failure::usage(format!("--param {p}: {e}")))?;
                pv.insert(k.trim().to_string(), v);
            }
            let nf = n_from_expr(&ne, &pv);
            let samples = flatness_grid(&w, &nf, [r.x0, r.y0, r.x1, r.y1], g[0] as usize, g[1] as usize);
            if samples.is_empty() {
                return Err(Failure::degenerate("no grid node admits the gauge"));
            }
            let worst = samples.iter().map(|s| s.closed_vs_direct).fold(0.0, f64::max);
            let summary = format!(
                "{} nodes, closed form vs direct max {worst:.3e} (tol {tol:e}): {}",
                samples.len(),
                if worst <= *tol { "agree" } else { "DISAGREE" }
            );
            if c.json {
                let v = json!({ "samples": samples, "closed_vs_direct_max": worst, "tolerance": tol });
                return Ok((pretty(&v) + "\n", 0));
            }
            eprintln!("{summary}");
            Ok((flatness_csv(&samples), 0))
        }
        Command::Linearize { web, sampling, per_leaf, length, tol } => {
            check_tol(*tol)?;
            if *per_leaf < 3 {
                return Err(Failure::usage("--per-leaf must be at least 3"));
            }
            let w = load_web(web)?;
            let region = check_sampling(sampling)?;
            let pts = admissible_samples(&w, region, sampling.samples, sampling.seed).map_err(lib_failure)?;
            let opt = DevelopOptions::default();
            let jobs: Vec<([f64; 2], usize)> = pts.iter().flat_map(|&p| (0..3).map(move |i| (p, i))).collect();
            let results = linweb::coframe::par_map(&jobs, c.jobs, |&(p, i)| {
                let leaf = selftest::leaf_points(&w, i, p, *per_leaf, *length)?;
                let img = linearize(&w, p, &leaf, opt).map_err(|e| e.to_string())?;
                Ok::<_, String>((leaf, img))
            });
            let mut table = String::from("sample,foliation,x,y,z0,z1,z2,residual\r\n");
            let (mut worst, mut skipped, mut leaves) = (0.0f64, 0, Vec::new());
            for (k, r) in results.into_iter().enumerate() {
                let (sample, i) = (k / 3, k % 3);
                let Ok((leaf, img)) = r else {
                    skipped += 1;
                    continue;
                };
                let res = collinearity_residual(&img);
                worst = worst.max(res);
                for (p, z) in leaf.iter().zip(&img) {
                    let _ = write!(table, "{sample},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{res:.3e}\r\n", i + 1, p[0], p[1], z[0], z[1], z[2]);
                }
                leaves.push(json!({ "sample": sample, "foliation": i + 1, "points": leaf, "images": img, "residual": res }));
            }
            if leaves.is_empty() {
                return Err(Failure::degenerate("no leaf could be developed"));
            }
            let verdict = if worst < *tol { "collinear" } else { "NOT collinear" };
            if c.json {
                let v = json!({ "leaves": leaves, "skipped": skipped, "max_residual": worst, "tolerance": tol, "collinear": worst < *tol });
                return Ok((pretty(&v) + "\n", 0));
            }
            eprintln!("{} leaves, {skipped} skipped, max collinearity residual {worst:.3e} (tol {tol:e}): {verdict}", leaves.len());
            Ok((table, 0))
        }
        Command::Lemma1 => {
            let ids = lemma1_pipeline().map_err(lib_failure)?;
            if c.json {
                return Ok((transcript_json(&ids) + "\n", 0));
            }
            let mut out = String::new();
            for (i, d) in ids.iter().enumerate() {
                let _ = writeln!(out, "({}) {} = {}", i + 1, d.lhs, d.rhs);
            }
            Ok((out, 0))
        }
        Command::TwoPencils { through_stage } => {
            if !(1..=10).contains(through_stage) {
                return Err(Failure::usage("--through-stage must be 1 to 10"));
            }
            let (tr, _) = two_pencils_pipeline(&pipeline_options(c, *through_stage)).map_err(lib_failure)?;
            let code = if stopped_at_ceiling(&tr) { 3 } else { 0 };
            Ok((if c.json { tr.to_json() + "\n" } else { transcript_text(&tr) }, code))
        }
        Command::Theorem5 { through_stage } => {
            if !(1..=9).contains(through_stage) {
                return Err(Failure::usage("--through-stage must be 1 to 9"));
            }
            let (tr, _) = theorem5_scheme(&pipeline_options(c, *through_stage)).map_err(lib_failure)?;
            let code = if stopped_at_ceiling(&tr) { 3 } else { 0 };
            Ok((if c.json { tr.to_json() + "\n" } else { transcript_text(&tr) }, code))
        }
        Command::Chain { input, max_steps } => {
            let limits = Limits { time: Some(Duration::from_secs(c.ceiling_seconds)), ..Limits::default() };
            let opts = ChainOptions { max_steps: *max_steps, limits };
            let (seed, frame, invert) = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    let inp: ChainInput = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("chain input: {e}")))?;
                    let ex = |s: &str| parse(s).map_err(|e| Failure::usage(format!("{s}: {e}")));
                    let mut fr = FormalFrame::new(ex(&inp.structure[0])?, ex(&inp.structure[1])?);
                    for (name, [e1, e2]) in &inp.rules {
                        fr.set(name, ex(e1)?, ex(e2)?);
                    }
                    let seed = inp.seed.iter().map(|s| parse_poly(s).map_err(|e| Failure::usage(format!("{s}: {e}")))).collect::<Result<Vec<_>, _>>()?;
                    (seed, fr, inp.invert)
                }
                None => {
                    let (tr, st) = theorem5_scheme(&pipeline_options(c, 9)).map_err(lib_failure)?;
                    if st.constraints.is_empty() || stopped_at_ceiling(&tr) {
                        return Err(Failure::ceiling("the twelve-invariant relations were not reached"));
                    }
                    (st.constraints.clone(), st.frame.clone(), vec!["k".to_string(), "f".to_string()])
                }
            };
            let inv: Vec<&str> = invert.iter().map(String::as_str).collect();
            let chain = gronwall_chain(&seed, &frame, &inv, &opts).map_err(lib_failure)?;
            let code = match &chain.verdict {
                ChainVerdict::Undecided { reason } if reason.contains("ceiling") => 3,
                _ => 0,
            };
            if c.json {
                return Ok((chain.report_json() + "\n", code));
            }
            let mut out = String::new();
            for (s, st) in chain.steps.iter().enumerate() {
                let _ = writeln!(out, "J{s}: {} generators, dimension {}", st.generators, st.dimension);
            }
            for (s, t) in &chain.inverses {
                let _ = writeln!(out, "inverse: {s}*{t} - 1 (never differentiated)");
            }
            let _ = writeln!(out, "verdict: {}", serde_json::to_string(&chain.verdict).expect("verdict serializes"));
            Ok((out, code))
        }
        Command::Selftest { only, seed } => {
            let opts = selftest::Options { seed: *seed, jobs: c.jobs, ceiling: Duration::from_secs(c.ceiling_seconds) };
            let ids: Vec<u8> = if only.is_empty() { (1..=10).collect() } else { only.clone() };
            if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
                return Err(Failure::usage(format!("no criterion {bad}")));
            }
            let mut out = String::new();
            let mut all = true;
            let mut recs = Vec::new();
            for id in ids {
                let o = selftest::run_one(id, &opts);
                all &= o.pass;
                if c.json {
                    recs.push(json!({ "criterion": o.id, "title": o.title, "pass": o.pass, "tolerance": o.tolerance, "detail": o.detail, "millis": o.millis }));
                } else {
                    let _ = writeln!(out, "{o}");
                }
            }
            if c.json {
                out = pretty(&json!(recs)) + "\n";
            }
            Ok((out, if all { 0 } else { 1 }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if std::env::args().any(|a| a == "--json") {
                eprintln!("{}", json!({ "error": "usage", "message": e.kind().to_string(), "detail": e.to_string() }));
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    let json_errors = cli.common.json;
    match run(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            if json_errors {
                eprintln!("{}", json!({ "error": f.kind, "code": f.code, "message": f.message }));
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
