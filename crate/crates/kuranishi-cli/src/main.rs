//! Command line front end for the chart, atlas, and counting toolkit.
//!
//! Every subcommand wraps one library entry point: atlas validation,
//! perturbed zero counts, deformation sweeps, fiber products, tangent cone
//! ranks, representation solves, and the signed orbit count. Output is JSON
//! with sorted keys by default so identical invocations produce identical
//! bytes; `--format human` prints the same facts as plain lines.
//!
//! Exit codes: 0 when the command succeeds and every checked condition
//! holds, 1 when a checked condition fails, 2 on usage or parse errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kuranishi::atlas::check_strict_morphism;
use kuranishi::tangent::{check_embedding, cone};
use kuranishi::vfc::{
    deformation_sweep, fiber_product, intersection_number, perturb_and_count, virtual_count,
    CountOpts, FamilyChart, SignedCount,
};
use kuranishi::{Error, KuranishiAtlas, KuranishiChart, PolyMap, StrictMorphism};
use su2rep::{casson_count, solve_reps, CassonOpts, GroupPresentation, SolveOpts};

#[derive(Parser)]
#[command(name = "kuranishi", version, about = "Chart, atlas, and counting toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Human,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every atlas condition and report one line per check.
    CheckAtlas {
        /// Atlas file.
        atlas: PathBuf,
    },
    /// Count perturbed section zeros with signs for a chart or an atlas.
    Count {
        /// Chart or atlas file; the schema is sniffed.
        input: PathBuf,
        /// Perturbation scale.
        #[arg(long, value_parser = parse_eps, default_value = "1e-3")]
        eps: f64,
        /// Perturbation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Boundary margin zeros must keep from the domain walls.
        #[arg(long, value_parser = parse_margin, default_value = "0.1")]
        margin: f64,
    },
    /// Count across a one-parameter family and test deformation invariance.
    Deform {
        /// Family chart file.
        family: PathBuf,
        /// Number of evenly spaced parameter values on [0, 1].
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..), default_value_t = 11)]
        grid: u64,
        #[arg(long, value_parser = parse_eps, default_value = "1e-3")]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_margin, default_value = "0.1")]
        margin: f64,
    },
    /// Build the fiber product of two charts over a shared base.
    Fiber {
        /// First fixture holding a chart and its base map.
        left: PathBuf,
        /// Second fixture holding a chart and its base map.
        right: PathBuf,
        /// Expected base dimension; checked against both maps when given.
        #[arg(long)]
        base_dim: Option<usize>,
        /// Also compute the signed intersection number.
        #[arg(long)]
        count: bool,
        #[arg(long, value_parser = parse_eps, default_value = "1e-3")]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_margin, default_value = "0.1")]
        margin: f64,
    },
    /// Print tangent complex ranks at every footprint point of a morphism.
    Tangent {
        /// Source atlas file.
        source: PathBuf,
        /// Target atlas file; requires --morphism.
        target: Option<PathBuf>,
        /// Strict morphism file; defaults to the ambient inclusion of a
        /// single-chart atlas.
        #[arg(long)]
        morphism: Option<PathBuf>,
    },
    /// Solve for irreducible orbits of a presentation in the unit quaternions.
    Reps {
        /// Presentation file.
        presentation: PathBuf,
        /// Number of multistart seeds.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 100_000)]
        starts: u64,
        /// Start sequence seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Permit non-balanced presentations with positive-dimensional strata.
        #[arg(long)]
        allow_positive_dim: bool,
    },
    /// Signed count of irreducible orbits for a homology sphere presentation.
    Casson {
        /// Presentation file.
        presentation: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 100_000)]
        starts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated orientation bits, one per orbit, e.g. "+,-".
        #[arg(long, value_parser = parse_bits)]
        bits: Option<Bits>,
        /// Global sign, +1 or -1.
        #[arg(long, value_parser = parse_sigma, default_value = "1")]
        sigma: i8,
    },
    /// Test whether a presentation gives an integral homology sphere.
    CheckHomology {
        /// Presentation file.
        presentation: PathBuf,
    },
}

#[derive(Clone)]
struct Bits(Vec<i8>);

fn parse_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v <= 1e-1 {
        Ok(v)
    } else {
        Err(format!("eps must lie in (0, 1e-1], got {v}"))
    }
}

fn parse_margin(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("margin must lie in (0, 1), got {v}"))
    }
}

fn parse_sigma(s: &str) -> Result<i8, String> {
    match s {
        "1" | "+1" | "+" => Ok(1),
        "-1" | "-" => Ok(-1),
        _ => Err(format!("sigma must be +1 or -1, got '{s}'")),
    }
}

fn parse_bits(s: &str) -> Result<Bits, String> {
    let mut bits = Vec::new();
    for token in s.split(',') {
        match token.trim() {
            "+" | "+1" | "1" => bits.push(1),
            "-" | "-1" => bits.push(-1),
            other => return Err(format!("orientation bit must be +1 or -1, got '{other}'")),
        }
    }
    Ok(Bits(bits))
}

/// Terminal failure: `code` is the process exit code, 1 for violated
/// conditions and 2 for usage or parse problems.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

/// Library errors wrapping a serde parse keep usage semantics; everything
/// else reports a violated condition.
fn lib_err(file: &Path, e: Error) -> Failure {
    let code = match &e {
        Error::Invalid { message, .. } if message.contains("parse:") => 2,
        _ => 1,
    };
    Failure { code, message: format!("{}: {e}", file.display()) }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Successful command output: one JSON value, the same facts as human lines,
/// and whether every checked condition held.
struct Outcome {
    value: Value,
    lines: Vec<String>,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    match dispatch(cli.command) {
        Ok(out) => {
            match cli.format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&out.value).expect("report serialization")
                ),
                Format::Human => {
                    for line in &out.lines {
                        println!("{line}");
                    }
                }
            }
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// KURANISHI_THREADS caps the worker pool; 0 or unset leaves the default.
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("KURANISHI_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("KURANISHI_THREADS must be a non-negative integer, got '{raw}'")))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::CheckAtlas { atlas } => check_atlas(&atlas),
        Command::Count { input, eps, seed, margin } => count(&input, CountOpts { eps, seed, margin }),
        Command::Deform { family, grid, eps, seed, margin } => {
            deform(&family, grid as usize, CountOpts { eps, seed, margin })
        }
        Command::Fiber { left, right, base_dim, count, eps, seed, margin } => {
            fiber(&left, &right, base_dim, count, CountOpts { eps, seed, margin })
        }
        Command::Tangent { source, target, morphism } => tangent(&source, target.as_deref(), morphism.as_deref()),
        Command::Reps { presentation, starts, seed, allow_positive_dim } => reps(
            &presentation,
            SolveOpts { starts: starts as usize, seed, allow_positive_dim },
        ),
        Command::Casson { presentation, starts, seed, bits, sigma } => casson(
            &presentation,
            CassonOpts { starts: starts as usize, seed, bits: bits.map(|b| b.0), sigma },
        ),
        Command::CheckHomology { presentation } => check_homology(&presentation),
    }
}

fn report_value(report: &kuranishi::CheckReport) -> Value {
    let items: Vec<Value> = report
        .items
        .iter()
        .map(|item| {
            json!({
                "condition": item.condition,
                "passed": item.passed,
                "residual": item.residual,
                "detail": item.detail,
            })
        })
        .collect();
    json!({ "passed": report.passed(), "items": items })
}

fn report_lines(report: &kuranishi::CheckReport, lines: &mut Vec<String>) {
    for item in &report.items {
        if item.passed {
            lines.push(format!("[ok]   {} (residual {:.3e})", item.condition, item.residual));
        } else {
            lines.push(format!(
                "[FAIL] {} (residual {:.3e}): {}",
                item.condition, item.residual, item.detail
            ));
        }
    }
}

fn check_atlas(path: &Path) -> Result<Outcome, Failure> {
    let atlas = KuranishiAtlas::from_json(&read(path)?).map_err(|e| lib_err(path, e))?;
    let report = atlas.check();
    let ok = report.passed();
    let mut value = report_value(&report);
    value["vdim"] = json!(atlas.vdim);
    value["charts"] = json!(atlas.charts.len());
    let mut lines = Vec::new();
    report_lines(&report, &mut lines);
    lines.push(format!(
        "atlas check: {} ({} conditions, {} charts, vdim {})",
        if ok { "PASS" } else { "FAIL" },
        report.items.len(),
        atlas.charts.len(),
        atlas.vdim
    ));
    Ok(Outcome { value, lines, ok })
}

fn count_value(count: &SignedCount, opts: CountOpts) -> Value {
    json!({
        "value": count.value,
        "certified": count.certified(),
        "plus": count.plus,
        "minus": count.minus,
        "degenerate_zeros": count.degenerate_zeros,
        "eps": opts.eps,
        "seed": opts.seed,
    })
}

fn count_line(count: &SignedCount) -> String {
    format!(
        "count = {} ({}, +{}/-{}, {} degenerate)",
        count.value,
        if count.certified() { "certified" } else { "not certified" },
        count.plus,
        count.minus,
        count.degenerate_zeros
    )
}

fn count(path: &Path, opts: CountOpts) -> Result<Outcome, Failure> {
    let text = read(path)?;
    let sniff: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: parse: {e}", path.display())))?;
    let counted = if sniff.get("charts").is_some() {
        let atlas = KuranishiAtlas::from_json(&text).map_err(|e| lib_err(path, e))?;
        virtual_count(&atlas, opts).map_err(|e| lib_err(path, e))?
    } else if sniff.get("domain").is_some() {
        let chart = KuranishiChart::from_json(&text).map_err(|e| lib_err(path, e))?;
        perturb_and_count(&chart, opts.eps, opts.seed, opts.margin).map_err(|e| lib_err(path, e))?
    } else {
        return Err(Failure::usage(format!(
            "{}: neither a chart ($.domain) nor an atlas ($.charts)",
            path.display()
        )));
    };
    Ok(Outcome {
        value: count_value(&counted, opts),
        lines: vec![count_line(&counted)],
        ok: true,
    })
}

fn deform(path: &Path, grid: usize, opts: CountOpts) -> Result<Outcome, Failure> {
    let family = FamilyChart::from_json(&read(path)?).map_err(|e| lib_err(path, e))?;
    let sweep = deformation_sweep(&family, grid, opts).map_err(|e| lib_err(path, e))?;
    let slices: Vec<Value> = sweep
        .slices
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "value": s.count.as_ref().map(|c| c.value),
                "certified": s.count.as_ref().map(|c| c.certified()),
                "error": s.error,
            })
        })
        .collect();
    let mut lines: Vec<String> = sweep
        .slices
        .iter()
        .map(|s| match (&s.count, &s.error) {
            (Some(c), _) => format!("t = {:.3}: {}", s.t, count_line(c)),
            (None, Some(e)) => format!("t = {:.3}: error: {e}", s.t),
            (None, None) => format!("t = {:.3}: no count", s.t),
        })
        .collect();
    lines.push(format!(
        "sweep: {}",
        if sweep.invariant { "count is constant across the family" } else { "count varies across the family" }
    ));
    Ok(Outcome {
        value: json!({ "grid": grid, "invariant": sweep.invariant, "slices": slices }),
        lines,
        ok: sweep.invariant,
    })
}

/// Fixture holding a chart and its evaluation map to the shared base.
fn fiber_input(path: &Path) -> Result<(KuranishiChart, PolyMap), Failure> {
    let text = read(path)?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: parse: {e}", path.display())))?;
    let chart_value = v
        .get("chart")
        .ok_or_else(|| Failure::usage(format!("{}: missing $.chart", path.display())))?;
    let map_value = v
        .get("map")
        .ok_or_else(|| Failure::usage(format!("{}: missing $.map", path.display())))?;
    let chart = KuranishiChart::from_json(&chart_value.to_string()).map_err(|e| lib_err(path, e))?;
    let map: PolyMap = serde_json::from_value(map_value.clone())
        .map_err(|e| Failure::usage(format!("{}: $.map parse: {e}", path.display())))?;
    let map = map.validated().map_err(|e| lib_err(path, e))?;
    Ok((chart, map))
}

fn fiber(
    left: &Path,
    right: &Path,
    base_dim: Option<usize>,
    with_count: bool,
    opts: CountOpts,
) -> Result<Outcome, Failure> {
    let (x, g_x) = fiber_input(left)?;
    let (y, g_y) = fiber_input(right)?;
    if let Some(k) = base_dim {
        for (path, map) in [(left, &g_x), (right, &g_y)] {
            if map.n_out != k {
                return Err(lib_err(
                    path,
                    Error::dim("fiber base dimension at $.map.n_out", k, map.n_out),
                ));
            }
        }
    }
    let product = fiber_product(&x, &g_x, &y, &g_y).map_err(|e| lib_err(left, e))?;
    let counted = if with_count {
        Some(intersection_number(&x, &g_x, &y, &g_y, opts).map_err(|e| lib_err(left, e))?)
    } else {
        None
    };
    let mut lines = vec![format!(
        "fiber product '{}': n = {}, m = {}, vdim = {}, {} footprint points",
        product.id,
        product.n(),
        product.m,
        product.vdim(),
        product.footprint.len()
    )];
    if let Some(v) = counted {
        lines.push(format!("intersection number = {v}"));
    }
    Ok(Outcome {
        value: json!({
            "chart": {
                "id": product.id,
                "n": product.n(),
                "m": product.m,
                "vdim": product.vdim(),
                "footprint": product.footprint.len(),
            },
            "count": counted,
        }),
        lines,
        ok: true,
    })
}

fn tangent(source: &Path, target: Option<&Path>, morphism: Option<&Path>) -> Result<Outcome, Failure> {
    let x = KuranishiAtlas::from_json(&read(source)?).map_err(|e| lib_err(source, e))?;
    let (x, y, h, morphism_name) = match (target, morphism) {
        (Some(t), Some(m)) => {
            let y = KuranishiAtlas::from_json(&read(t)?).map_err(|e| lib_err(t, e))?;
            let h = StrictMorphism::from_json(&read(m)?, &x, &y).map_err(|e| lib_err(m, e))?;
            (x, y, h, m.display().to_string())
        }
        (None, None) => {
            if x.charts.len() != 1 {
                return Err(Failure::usage(format!(
                    "{}: tangent without --morphism needs a single-chart atlas, got {} charts",
                    source.display(),
                    x.charts.len()
                )));
            }
            let (x, y, h) = StrictMorphism::inclusion(&x.charts[0], "ambient").map_err(|e| lib_err(source, e))?;
            (x, y, h, "ambient inclusion".to_string())
        }
        (Some(_), None) => {
            return Err(Failure::usage("tangent with a target atlas needs --morphism"));
        }
        (None, Some(_)) => {
            return Err(Failure::usage("--morphism needs a target atlas argument"));
        }
    };
    let morphism_passed = check_strict_morphism(&h, &x, &y).passed();
    let embedding_passed = check_embedding(&h, &x, &y).passed();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for chart in &x.charts {
        let map = h
            .maps
            .get(&chart.id)
            .ok_or_else(|| lib_err(source, Error::invalid("$.maps", format!("no map for chart '{}'", chart.id))))?;
        let b = y.chart(h.tau_of(&chart.id).map_err(|e| lib_err(source, e))?).map_err(|e| lib_err(source, e))?;
        let complex = cone(chart, b, map).map_err(|e| lib_err(source, e))?;
        for point in &chart.footprint {
            let ranks = complex.ranks_at(&point.x).map_err(|e| lib_err(source, e))?;
            rows.push(json!({
                "chart": chart.id,
                "label": point.label,
                "t0": ranks.t0,
                "t1": ranks.t1,
                "t2": ranks.t2,
                "euler": ranks.t0 as i64 - ranks.t1 as i64 + ranks.t2 as i64,
            }));
            lines.push(format!(
                "chart '{}' point '{}': t = ({}, {}, {}), euler {}",
                chart.id,
                point.label,
                ranks.t0,
                ranks.t1,
                ranks.t2,
                ranks.t0 as i64 - ranks.t1 as i64 + ranks.t2 as i64
            ));
        }
    }
    lines.push(format!(
        "morphism: {morphism_name} (conditions {}, embedding {})",
        if morphism_passed { "pass" } else { "fail" },
        if embedding_passed { "pass" } else { "fail" }
    ));
    Ok(Outcome {
        value: json!({
            "morphism": morphism_name,
            "morphism_passed": morphism_passed,
            "embedding_passed": embedding_passed,
            "rows": rows,
        }),
        lines,
        ok: true,
    })
}

fn reps(path: &Path, opts: SolveOpts) -> Result<Outcome, Failure> {
    let p = GroupPresentation::from_json(&read(path)?).map_err(|e| lib_err(path, e))?;
    let report = solve_reps(&p, opts).map_err(|e| lib_err(path, e))?;
    let mut lines = Vec::new();
    for (i, orbit) in report.orbits.iter().enumerate() {
        lines.push(format!(
            "orbit {i}: traces {:?}, h = ({}, {}, {}), {}, hits {}",
            orbit.fingerprint,
            orbit.h.h0,
            orbit.h.h1,
            orbit.h.h2,
            if orbit.irreducible { "irreducible" } else { "reducible" },
            orbit.hits
        ));
    }
    for w in &report.warnings {
        lines.push(format!("warning: {w}"));
    }
    lines.push(format!(
        "{} orbits from {} converged of {} starts",
        report.orbits.len(),
        report.converged,
        report.attempted
    ));
    let value = serde_json::to_value(&report)
        .map_err(|e| Failure { code: 1, message: format!("report serialization: {e}") })?;
    Ok(Outcome { value, lines, ok: true })
}

/// Halves an even value exactly, keeping the JSON number an integer.
fn half(lambda2: i64) -> Value {
    if lambda2 % 2 == 0 {
        json!(lambda2 / 2)
    } else {
        json!(lambda2 as f64 / 2.0)
    }
}

fn casson(path: &Path, opts: CassonOpts) -> Result<Outcome, Failure> {
    let p = GroupPresentation::from_json(&read(path)?).map_err(|e| lib_err(path, e))?;
    let starts = opts.starts;
    let seed = opts.seed;
    let sigma = opts.sigma;
    let report = casson_count(&p, &opts).map_err(|e| lib_err(path, e))?;
    let fingerprints: Vec<Vec<f64>> = report.orbits.iter().map(|o| o.fingerprint.clone()).collect();
    let value = json!({
        "N": report.n(),
        "counts": report.counts,
        "fingerprints": fingerprints,
        "lambda": half(report.lambda2),
        "lambda2": report.lambda2,
        "lambda_abs": half(report.lambda2.abs()),
        "sigma": sigma,
        "starts": starts,
        "seed": seed,
        "warnings": report.warnings,
    });
    let mut lines = Vec::new();
    for (orbit, count) in report.orbits.iter().zip(&report.counts) {
        lines.push(format!(
            "orbit {:?}: count {}{}",
            orbit.fingerprint,
            count,
            if orbit.orientation_bit < 0 { " (orientation -1)" } else { "" }
        ));
    }
    for w in &report.warnings {
        lines.push(format!("warning: {w}"));
    }
    let lambda_line = if report.lambda2 % 2 == 0 {
        format!("{}", report.lambda2 / 2)
    } else {
        format!("{}/2", report.lambda2)
    };
    lines.push(format!("N = {}, lambda = {}", report.n(), lambda_line));
    Ok(Outcome { value, lines, ok: true })
}

fn check_homology(path: &Path) -> Result<Outcome, Failure> {
    let p = GroupPresentation::from_json(&read(path)?).map_err(|e| lib_err(path, e))?;
    let report = p.homology_sphere_check().map_err(|e| lib_err(path, e))?;
    let lines = vec![format!(
        "abelianization determinant {}: {}",
        report.det,
        if report.homology_sphere { "integral homology sphere" } else { "not an integral homology sphere" }
    )];
    Ok(Outcome {
        value: json!({
            "det": report.det,
            "homology_sphere": report.homology_sphere,
            "matrix": report.matrix,
            "trivial_rep_isolated": report.trivial_rep_isolated,
        }),
        lines,
        ok: report.homology_sphere,
    })
}
