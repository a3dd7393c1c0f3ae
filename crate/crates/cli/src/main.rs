#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circledyn::algebra::{parse_map, CoefficientFile};
use circledyn::classifier::{theorem1_verdict_with, ClassifierError, ClassifierOptions};
use circledyn::dynamics::{julia_cloud, write_cloud_csv, DynamicsError};
use circledyn::geometry::{containment_residual, GeneralizedCircle};
use circledyn::linearizer::{poincare_coeffs, valiron_order, LinearizerError, DEFAULT_ORDER};
use circledyn::realjulia::{
    build_example, construct_polynomial, ex1_blaschke_threshold, ex3_convergence, verify_example_claims, CriticalValueSpec,
    ExampleSpec, RealJuliaError,
};
use circledyn::{RationalMap, SpherePoint};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

const DEGREE_CAP: usize = 4096;
const MAX_PIXELS: usize = 4096 * 4096;

#[derive(Parser)]
#[command(name = "circledyn", version, about = "Rational maps with real multipliers and Julia sets in circles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Real-multiplier test, then circle / Lattès verdict and case analysis.
    Classify {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 20_240_517)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Julia-set point cloud as CSV, optionally rendered to a PGM image.
    Julia {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 20_240_517)]
        seed: u64,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pgm: Option<PathBuf>,
        /// x0,y0,x1,y1
        #[arg(long, default_value = "-2,-2,2,2", allow_hyphen_values = true)]
        window: String,
        /// W,H
        #[arg(long, default_value = "512,512")]
        res: String,
    },
    /// Poincaré function coefficients at a repelling fixed point and its order.
    Poincare {
        #[command(flatten)]
        map: MapArgs,
        /// Fixed point: `x`, `x,y` or `inf`.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Polynomial with prescribed critical values (left to right).
    Construct {
        /// Comma-separated critical values.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "spec")]
        values: Option<String>,
        /// JSON file `{"critical_values": [...]}`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build one of the example families and check its stated properties.
    Examples {
        #[command(flatten)]
        example: ExampleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MapArgs {
    /// Map expression in z, e.g. "(z^2-4)/(1+0.25*z)".
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["coeffs", "example", "example_file"])]
    map: Option<String>,
    /// JSON coefficient file `{"num": [[re, im], ...], "den": [...]}`.
    #[arg(long, conflicts_with_all = ["example", "example_file"])]
    coeffs: Option<PathBuf>,
    #[command(flatten)]
    example: ExampleArgs,
}

#[derive(Args)]
struct ExampleArgs {
    /// EX1, EX2 or EX3.
    #[arg(long, conflicts_with = "example_file")]
    example: Option<String>,
    /// JSON file such as `{"family":"EX1","c":0.25}`.
    #[arg(long)]
    example_file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

enum Failure {
    Usage(String),
    Inconclusive(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Inconclusive(_) => 3,
            Failure::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Inconclusive(m) | Failure::Io(m) => m,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn io_error(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn realjulia_failure(e: RealJuliaError) -> Failure {
    match e {
        RealJuliaError::SpecViolation(_) | RealJuliaError::ParamOutOfRange(_) | RealJuliaError::Ex3ConstructionFailed(_) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Inconclusive(e.to_string()),
    }
}

fn example_spec(args: &ExampleArgs) -> Result<Option<ExampleSpec>, Failure> {
    if let Some(path) = &args.example_file {
        return read_json(path).map(Some);
    }
    let Some(id) = &args.example else { return Ok(None) };
    let spec = match id.to_ascii_uppercase().as_str() {
        "EX1" => ExampleSpec::Ex1 { c: args.c.unwrap_or(0.25) },
        "EX2" => ExampleSpec::Ex2 { c: args.c.unwrap_or(0.9) },
        "EX3" => ExampleSpec::Ex3 { p: args.p.unwrap_or(0.2), a: args.a.unwrap_or(0.5), eps: args.eps.unwrap_or(1e-3) },
        other => return Err(Failure::Usage(format!("unknown example {other:?}; expected EX1, EX2 or EX3"))),
    };
    Ok(Some(spec))
}

fn load_map(args: &MapArgs) -> Result<RationalMap, Failure> {
    if let Some(expr) = &args.map {
        return parse_map(expr).map_err(|e| Failure::Usage(format!("--map: {e}")));
    }
    if let Some(path) = &args.coeffs {
        let file: CoefficientFile = read_json(path)?;
        return RationalMap::from_coefficients(&file).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    match example_spec(&args.example)? {
        Some(spec) => build_example(spec).map(|inst| inst.map).map_err(realjulia_failure),
        None => Err(Failure::Usage("one of --map, --coeffs, --example or --example-file is required".into())),
    }
}

fn parse_list<const N: usize>(text: &str, what: &str) -> Result<[f64; N], Failure> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == N && v.iter().all(|x| x.is_finite()) => Ok(v.try_into().expect("length checked")),
        _ => Err(Failure::Usage(format!("{what}: expected {N} comma-separated numbers, got {text:?}"))),
    }
}

fn parse_point(text: &str) -> Result<SpherePoint, Failure> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(SpherePoint::Infinity);
    }
    if t.contains(',') {
        let [re, im] = parse_list::<2>(t, "--at")?;
        return Ok(SpherePoint::new(re, im));
    }
    t.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(SpherePoint::real)
        .ok_or_else(|| Failure::Usage(format!("--at: cannot read {t:?}")))
}

fn classify(map: &MapArgs, nmax: usize, tol: f64, seed: u64, out: Option<&Path>) -> Outcome {
    let f = load_map(map)?;
    if nmax == 0 {
        return Err(Failure::Usage("--nmax must be at least 1".into()));
    }
    let degree = (f.degree() as f64).powi(nmax as i32);
    if !(degree <= DEGREE_CAP as f64) {
        return Err(Failure::Usage(format!("degree {}^{nmax} exceeds the cap {DEGREE_CAP}", f.degree())));
    }
    if !(tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let opts = ClassifierOptions { n_max: nmax, tol, seed, ..ClassifierOptions::default() };
    let report = theorem1_verdict_with(&f, &opts).map_err(|e| match e {
        ClassifierError::Dynamics(DynamicsError::DegreeCapExceeded { .. } | DynamicsError::DegreeTooLow(_)) => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Inconclusive(other.to_string()),
    })?;
    emit(&report, out)?;
    eprintln!("verdict: {:?}", report.verdict);
    Ok(report.exit_code() as u8)
}

#[allow(clippy::too_many_arguments)]
fn julia(map: &MapArgs, size: usize, seed: u64, out: Option<&Path>, pgm: Option<&Path>, window: &str, res: &str) -> Outcome {
    let f = load_map(map)?;
    let [x0, y0, x1, y1] = parse_list::<4>(window, "--window")?;
    if !(x1 > x0 && y1 > y0) {
        return Err(Failure::Usage("--window needs x0 < x1 and y0 < y1".into()));
    }
    let [w, h] = parse_list::<2>(res, "--res")?;
    if !(w >= 1.0 && h >= 1.0 && w.fract() == 0.0 && h.fract() == 0.0 && w * h <= MAX_PIXELS as f64) {
        return Err(Failure::Usage(format!("--res must be positive integers with at most {MAX_PIXELS} pixels")));
    }
    let (w, h) = (w as usize, h as usize);
    let cloud = julia_cloud(&f, size, seed).map_err(|e| Failure::Inconclusive(e.to_string()))?;

    let mut csv = Vec::new();
    write_cloud_csv(&cloud, &mut csv).map_err(|e| Failure::Io(e.to_string()))?;
    if let Some(path) = pgm {
        let mut pixels = vec![0u8; w * h];
        for z in cloud.iter().filter_map(|p| p.finite()) {
            let col = ((z.re - x0) / (x1 - x0) * w as f64).floor();
            let row = ((y1 - z.im) / (y1 - y0) * h as f64).floor();
            if col >= 0.0 && row >= 0.0 && (col as usize) < w && (row as usize) < h {
                pixels[row as usize * w + col as usize] = 255;
            }
        }
        let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
        bytes.extend_from_slice(&pixels);
        fs::write(path, bytes).map_err(|e| io_error(path, e))?;
    }
    match out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| io_error(path, e))?;
            let summary = json!({
                "points": cloud.len(),
                "requested": size,
                "seed": seed,
                "csv": path.display().to_string(),
                "pgm": pgm.map(|p| p.display().to_string()),
                "real_line_residual": containment_residual(&GeneralizedCircle::real_line(), &cloud),
            });
            emit(&summary, None)?;
        }
        None => io::stdout().write_all(&csv).map_err(|e| Failure::Io(e.to_string()))?,
    }
    eprintln!("{} points", cloud.len());
    Ok(0)
}

fn poincare(map: &MapArgs, at: &str, order: usize, out: Option<&Path>) -> Outcome {
    let f = load_map(map)?;
    let p = parse_point(at)?;
    if order == 0 {
        return Err(Failure::Usage("--order must be positive".into()));
    }
    let series = poincare_coeffs(&f, p, order).map_err(|e| match e {
        LinearizerError::Dynamics(_) => Failure::Inconclusive(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    })?;
    let (valiron, note) = match valiron_order(&series, &f) {
        Ok(r) => (serde_json::to_value(r).map_err(|e| Failure::Io(e.to_string()))?, Value::Null),
        Err(e) => (Value::Null, Value::String(e.to_string())),
    };
    let report = json!({
        "series": series.dump(),
        "convergence_radius": series.conv_radius_estimate,
        "valiron": valiron,
        "note": note,
    });
    emit(&report, out)?;
    Ok(0)
}

fn construct(values: Option<&str>, spec: Option<&Path>, out: Option<&Path>) -> Outcome {
    let spec = match (values, spec) {
        (Some(v), None) => {
            let parsed: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
            CriticalValueSpec::new(parsed.map_err(|_| Failure::Usage(format!("--values: cannot read {v:?}")))?)
        }
        (None, Some(path)) => read_json(path)?,
        _ => return Err(Failure::Usage("one of --values or --spec is required".into())),
    };
    let built = construct_polynomial(&spec).map_err(realjulia_failure)?;
    emit(&built, out)?;
    Ok(0)
}

fn examples(args: &ExampleArgs, out: Option<&Path>) -> Outcome {
    let Some(spec) = example_spec(args)? else {
        return Err(Failure::Usage("one of --example or --example-file is required".into()));
    };
    let inst = build_example(spec).map_err(realjulia_failure)?;
    let claims = verify_example_claims(&inst).map_err(realjulia_failure)?;
    let mut pass = claims.pass;
    let mut report = json!({ "instance": inst, "claims": claims });
    match spec {
        ExampleSpec::Ex1 { .. } => {
            let t = ex1_blaschke_threshold(1e-2).map_err(realjulia_failure)?;
            pass &= t.agrees;
            report["ex1_threshold"] = serde_json::to_value(t).map_err(|e| Failure::Io(e.to_string()))?;
        }
        ExampleSpec::Ex3 { p, a, .. } => {
            let (rows, decreasing) = ex3_convergence(p, a, &[1e-2, 1e-3, 1e-4]).map_err(realjulia_failure)?;
            pass &= decreasing;
            report["ex3_convergence"] = json!({ "rows": rows, "decreasing": decreasing });
        }
        ExampleSpec::Ex2 { .. } => {}
    }
    report["pass"] = Value::Bool(pass);
    emit(&report, out)?;
    Ok(if pass { 0 } else { 3 })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CIRCLEDYN_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("CIRCLEDYN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match &cli.command {
        Command::Classify { map, nmax, tol, seed, out } => classify(map, *nmax, *tol, *seed, out.as_deref()),
        Command::Julia { map, size, seed, out, pgm, window, res } => {
            julia(map, *size, *seed, out.as_deref(), pgm.as_deref(), window, res)
        }
        Command::Poincare { map, at, order, out } => poincare(map, at, *order, out.as_deref()),
        Command::Construct { values, spec, out } => construct(values.as_deref(), spec.as_deref(), out.as_deref()),
        Command::Examples { example, out } => examples(example, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use circledyn::Complex64;

    #[test]
    fn points() {
        assert_eq!(parse_point("inf").ok(), Some(SpherePoint::Infinity));
        assert_eq!(parse_point("1").ok(), Some(SpherePoint::real(1.0)));
        assert_eq!(parse_point("-0.5,2").ok(), Some(SpherePoint::new(-0.5, 2.0)));
        assert!(parse_point("x").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<2>("3,4", "r").ok(), Some([3.0, 4.0]));
        assert!(parse_list::<2>("3", "r").is_err());
    }

    #[test]
    fn complex_reexport_is_usable() {
        let z = Complex64::new(1.0, 0.0);
        assert_eq!(SpherePoint::from_complex(z), SpherePoint::real(1.0));
    }
}
