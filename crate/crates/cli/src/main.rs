//! `wormk`: kernel values, grids and verification reports from the command line.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use worm_bergman::acceptance::{run_all, run_criterion, sobolev_ladder, CRITERIA};
use worm_bergman::geometry::{UPoint, WormPoint};
use worm_bergman::halfplane::{
    kernel_j, kernel_j_asymptotic_lambda, kernel_j_fourier_lambda, kernel_j_integral_lambda, KernelDiagnostics,
    KernelResult, Separation, ASYMPTOTIC_SAFETY,
};
use worm_bergman::quadrature::Mode2d;
use worm_bergman::verification::{
    decade_ladder, decay_estimate, divergence_probe, reproducing_error_with, sample_norm, LadderEntry, NormOutcome,
    ProbeConfig, ProbeKind, SampleFunction,
};
use worm_bergman::weights::{alpha, omega};
use worm_bergman::worm_kernel::{
    g_boundary, g_boundary_split, kernel_u, kernel_w, normalized_kernel_u, normalized_kernel_w, SeriesResult,
};
use worm_bergman::WormError;

#[derive(Parser, Debug)]
#[command(name = "wormk", version, about = "Bergman kernels of the worm domain and its unwound model")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Relative tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Evaluation budget for 2D integrations.
    #[arg(long, global = true, default_value_t = 4_000_000)]
    budget: usize,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo integration.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Rep {
    Auto,
    Integral,
    Fourier,
    Asymptotic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Series,
    Split,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GridKernel {
    J,
    U,
    W,
    NormalizedU,
    NormalizedW,
    Gfun,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum IntegrationMode {
    Tensor,
    MonteCarlo,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Half-plane kernel K_j(z, w).
    EvalJ {
        #[arg(long, allow_hyphen_values = true)]
        j: i64,
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        z: Complex64,
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        w: Complex64,
        #[arg(long, value_enum, default_value_t = Rep::Auto)]
        rep: Rep,
        /// Expansion order for the asymptotic representation.
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Kernel of the unwound domain.
    EvalU {
        #[arg(long, value_parser = parse_c2, allow_hyphen_values = true)]
        z: [Complex64; 2],
        #[arg(long, value_parser = parse_c2, allow_hyphen_values = true)]
        w: [Complex64; 2],
        /// Report G = z2 w̄2 (z1 − w̄1)² K instead of K.
        #[arg(long)]
        normalized: bool,
    },
    /// Kernel of the worm domain.
    EvalW {
        #[arg(long, value_parser = parse_c2, allow_hyphen_values = true)]
        z: [Complex64; 2],
        #[arg(long, value_parser = parse_c2, allow_hyphen_values = true)]
        w: [Complex64; 2],
        /// Report H = z1 w̄1 z2 w̄2 (ℓ(z) − conj ℓ(w))² K instead of K.
        #[arg(long)]
        normalized: bool,
    },
    /// Weight α_j(v), or ω_j(w1) when --w1 is given.
    Weight {
        #[arg(long, allow_hyphen_values = true)]
        j: i64,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<f64>,
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        w1: Option<Complex64>,
    },
    /// Boundary profile g(ζ).
    Gfun {
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        zeta: Complex64,
        #[arg(long, value_enum, default_value_t = Route::Series)]
        route: Route,
    },
    /// Evaluate a kernel over a one- or two-axis grid.
    Grid(GridArgs),
    /// Verification probes.
    #[command(subcommand)]
    Probe(Probe),
    /// Run acceptance criteria; exits 1 if any fails.
    Verify {
        /// `all` or a comma-separated list of criterion numbers.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_enum)]
    kernel: GridKernel,
    /// Axis `VAR:START:STOP:COUNT[:log]`; give once or twice.
    #[arg(long = "axis", required = true, allow_hyphen_values = true)]
    axes: Vec<String>,
    /// Base first point (`re,im` for j, `re1,im1,re2,im2` for u and w).
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Base second point.
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    /// Index for the j kernel.
    #[arg(long, allow_hyphen_values = true, default_value_t = -1)]
    j: i64,
    /// Base ζ for gfun.
    #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
    zeta: Option<Complex64>,
}

#[derive(Args, Debug, Clone)]
struct ProbeGeometry {
    #[arg(long, value_parser = parse_c2, allow_hyphen_values = true)]
    w: [Complex64; 2],
    /// Ladder `HI:LO` of decades.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

#[derive(Subcommand, Debug)]
enum Probe {
    /// L^p lower-bound integral, p > 2.
    Lp {
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        geo: ProbeGeometry,
    },
    /// The same integral at p = 2.
    L2 {
        #[command(flatten)]
        geo: ProbeGeometry,
    },
    /// Sobolev lower-bound integral, 0 < s < 1/2.
    Sobolev {
        #[arg(long)]
        s: f64,
        #[command(flatten)]
        geo: ProbeGeometry,
    },
    /// Norm classification of F_{η,c,j,m} on the worm truncated at μ.
    Norm {
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        eta: Complex64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        j: i64,
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        /// Truncation parameter; `inf` for the full worm.
        #[arg(long, default_value = "1")]
        mu: f64,
    },
    /// Fitted decay of |K_j| in |j+1|.
    Decay {
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        z: Complex64,
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        w: Complex64,
        #[arg(long, default_value_t = 60)]
        j_max: u32,
    },
    /// Reproducing property of K_j against (ζ + ia)^{−b}.
    Reproduce {
        #[arg(long, allow_hyphen_values = true)]
        j: i64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: u32,
        #[arg(long, value_parser = parse_c1, allow_hyphen_values = true)]
        w: Complex64,
        #[arg(long, value_enum, default_value_t = IntegrationMode::Tensor)]
        mode: IntegrationMode,
    },
}

fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {s:?}"));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_c1(s: &str) -> Result<Complex64, String> {
    let v = parse_reals(s, 2)?;
    Ok(Complex64::new(v[0], v[1]))
}

fn parse_c2(s: &str) -> Result<[Complex64; 2], String> {
    let v = parse_reals(s, 4)?;
    Ok([Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])])
}

/// Failure of a command, carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<WormError> for Failure {
    fn from(e: WormError) -> Self {
        Failure {
            code: if e.is_convergence() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: msg.into(),
    }
}

/// Text of a command's output plus the exit code to use after writing it.
struct Output {
    text: String,
    code: u8,
}

fn ok(text: String) -> Result<Output, Failure> {
    Ok(Output { text, code: 0 })
}

/// Full-precision, locale-independent number; non-finite values become `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format!("{x:.16e}").parse().expect("formatted float parses"))
    } else {
        Value::Null
    }
}

fn cnum(z: Complex64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

fn cell(x: f64) -> String {
    match num(x) {
        Value::Null => "NaN".to_string(),
        v => v.to_string(),
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serializes");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| usage(format!("csv: {e}"));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn record(op: &str, inputs: Value, value: Complex64, err_est: f64, diagnostics: Value) -> Value {
    json!({
        "op": op,
        "inputs": inputs,
        "value": cnum(value),
        "err_est": num(err_est),
        "diagnostics": diagnostics,
    })
}

fn kernel_diagnostics(r: &KernelResult) -> Value {
    let mut d = Map::new();
    d.insert("representation".into(), json!(r.representation.name()));
    match r.diagnostics {
        KernelDiagnostics::Quadrature { nodes, cutoff } => {
            d.insert("nodes".into(), json!(nodes));
            d.insert("cutoff".into(), num(cutoff));
        }
        KernelDiagnostics::Expansion { order } => {
            d.insert("order".into(), json!(order));
        }
    }
    Value::Object(d)
}

fn series_diagnostics(r: &SeriesResult) -> Value {
    json!({
        "j_window": [r.diagnostics.j_min, r.diagnostics.j_max],
        "tail_bound": num(r.diagnostics.tail_bound),
        "terms": r.diagnostics.terms,
    })
}

fn eval_j(j: i64, z: Complex64, w: Complex64, rep: Rep, order: usize, tol: f64) -> Result<KernelResult, WormError> {
    let sep = Separation::from_points(z, w)?;
    match rep {
        Rep::Auto => kernel_j(j, z, w, tol),
        Rep::Integral => kernel_j_integral_lambda(j, &sep, tol),
        Rep::Fourier => kernel_j_fourier_lambda(j, &sep, tol),
        Rep::Asymptotic => kernel_j_asymptotic_lambda(j, &sep, order, ASYMPTOTIC_SAFETY),
    }
}

fn upoint(p: [Complex64; 2]) -> UPoint {
    UPoint::new(p[0], p[1])
}

fn wpoint(p: [Complex64; 2]) -> WormPoint {
    WormPoint::new(p[0], p[1])
}

fn c2_json(p: [Complex64; 2]) -> Value {
    json!([cnum(p[0]), cnum(p[1])])
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let g = &cli.global;
    if !(g.tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {}", g.tol)));
    }
    let fmt = |default: Format| g.format.unwrap_or(default);
    match &cli.command {
        Command::EvalJ { j, z, w, rep, order } => {
            let r = eval_j(*j, *z, *w, *rep, *order, g.tol)?;
            let inputs = json!({ "j": j, "z": cnum(*z), "w": cnum(*w), "tol": num(g.tol) });
            single(fmt(Format::Json), record("eval-j", inputs, r.value, r.err_est, kernel_diagnostics(&r)))
        }
        Command::EvalU { z, w, normalized } => {
            let (a, b) = (upoint(*z), upoint(*w));
            let r = if *normalized {
                normalized_kernel_u(&a, &b, g.tol)?
            } else {
                kernel_u(&a, &b, g.tol)?
            };
            let inputs = json!({ "z": c2_json(*z), "w": c2_json(*w), "normalized": normalized, "tol": num(g.tol) });
            single(fmt(Format::Json), record("eval-u", inputs, r.value, r.err_est, series_diagnostics(&r)))
        }
        Command::EvalW { z, w, normalized } => {
            let (a, b) = (wpoint(*z), wpoint(*w));
            let r = if *normalized {
                normalized_kernel_w(&a, &b, g.tol)?
            } else {
                kernel_w(&a, &b, g.tol)?
            };
            let inputs = json!({ "z": c2_json(*z), "w": c2_json(*w), "normalized": normalized, "tol": num(g.tol) });
            single(fmt(Format::Json), record("eval-w", inputs, r.value, r.err_est, series_diagnostics(&r)))
        }
        Command::Weight { j, v, w1 } => {
            let (value, inputs) = match (v, w1) {
                (Some(v), None) => (alpha(*j, *v)?, json!({ "j": j, "v": num(*v) })),
                (None, Some(w1)) => (omega(*j, *w1)?, json!({ "j": j, "w1": cnum(*w1) })),
                _ => return Err(usage("weight needs exactly one of --v and --w1")),
            };
            single(
                fmt(Format::Json),
                record("weight", inputs, Complex64::new(value, 0.0), 0.0, json!({})),
            )
        }
        Command::Gfun { zeta, route } => {
            let r = match route {
                Route::Series => g_boundary(*zeta, g.tol)?,
                Route::Split => g_boundary_split(*zeta, g.tol)?,
            };
            let name = if *route == Route::Series { "series" } else { "split" };
            let inputs = json!({ "zeta": cnum(*zeta), "route": name, "tol": num(g.tol) });
            single(fmt(Format::Json), record("gfun", inputs, r.value, r.err_est, json!({ "terms": r.terms })))
        }
        Command::Grid(args) => grid(args, g, fmt(Format::Csv)),
        Command::Probe(p) => probe(p, g, &fmt),
        Command::Verify { suite } => verify(suite, fmt(Format::Csv)),
    }
}

/// One record: JSON as is, CSV as a single row of value and error.
fn single(format: Format, rec: Value) -> Result<Output, Failure> {
    match format {
        Format::Json => ok(to_json(&rec)),
        Format::Csv => {
            let v = &rec["value"];
            let field = |x: &Value| x.as_number().map(|n| n.to_string()).unwrap_or_else(|| "NaN".into());
            let row = vec![
                rec["op"].as_str().unwrap_or_default().to_string(),
                field(&v["re"]),
                field(&v["im"]),
                field(&rec["err_est"]),
            ];
            ok(csv_text(&["op", "value_re", "value_im", "err_est"], &[row])?)
        }
    }
}

#[derive(Debug, Clone)]
struct Axis {
    var: String,
    values: Vec<f64>,
}

fn parse_axis(s: &str) -> Result<Axis, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 && parts.len() != 5 {
        return Err(usage(format!("axis must be VAR:START:STOP:COUNT[:log], got {s:?}")));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|e| usage(format!("axis {s:?}: {e}")));
    let (start, stop) = (num(parts[1])?, num(parts[2])?);
    let count: usize = parts[3].parse().map_err(|e| usage(format!("axis {s:?}: {e}")))?;
    let log = match parts.get(4) {
        None | Some(&"linear") => false,
        Some(&"log") => true,
        Some(other) => return Err(usage(format!("axis scale must be linear or log, got {other:?}"))),
    };
    if count < 2 {
        return Err(usage("axis count must be at least 2"));
    }
    if start == stop || !start.is_finite() || !stop.is_finite() {
        return Err(usage("axis endpoints must be finite and distinct"));
    }
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(usage("log axis needs positive endpoints"));
    }
    let values = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if log {
                (start.ln() + t * (stop.ln() - start.ln())).exp()
            } else {
                start + t * (stop - start)
            }
        })
        .collect();
    Ok(Axis {
        var: parts[0].to_string(),
        values,
    })
}

/// Grid base point: up to four complex coordinates addressed by name.
#[derive(Debug, Clone, Copy)]
struct GridPoint {
    z: [Complex64; 2],
    w: [Complex64; 2],
    zeta: Complex64,
}

impl GridPoint {
    fn set(&mut self, kernel: GridKernel, var: &str, x: f64) -> Result<(), Failure> {
        let bad = || usage(format!("unknown grid variable {var:?} for this kernel"));
        let (name, part) = var.split_once('.').ok_or_else(bad)?;
        let target: &mut Complex64 = match (kernel, name) {
            (GridKernel::Gfun, "zeta") => &mut self.zeta,
            (GridKernel::J, "z") => &mut self.z[0],
            (GridKernel::J, "w") => &mut self.w[0],
            (GridKernel::Gfun | GridKernel::J, _) => return Err(bad()),
            (_, "z1") => &mut self.z[0],
            (_, "z2") => &mut self.z[1],
            (_, "w1") => &mut self.w[0],
            (_, "w2") => &mut self.w[1],
            _ => return Err(bad()),
        };
        match part {
            "re" => target.re = x,
            "im" => target.im = x,
            "mod" => *target = Complex64::from_polar(x, target.arg()),
            "arg" => *target = Complex64::from_polar(target.norm(), x),
            _ => return Err(bad()),
        }
        Ok(())
    }
}

fn grid(args: &GridArgs, g: &Global, format: Format) -> Result<Output, Failure> {
    if args.axes.len() > 2 {
        return Err(usage("at most two axes"));
    }
    let axes: Vec<Axis> = args.axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?;
    let parse_base = |s: &Option<String>| -> Result<[Complex64; 2], Failure> {
        let zero = Complex64::new(0.0, 0.0);
        match (s, args.kernel) {
            (None, _) => Ok([zero, Complex64::new(1.0, 0.0)]),
            (Some(s), GridKernel::J) => parse_c1(s).map(|c| [c, zero]).map_err(usage),
            (Some(s), _) => parse_c2(s).map_err(usage),
        }
    };
    let base = GridPoint {
        z: parse_base(&args.z)?,
        w: parse_base(&args.w)?,
        zeta: args.zeta.unwrap_or(Complex64::new(1.0, 0.0)),
    };
    let mut coords: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        coords = coords
            .into_iter()
            .flat_map(|c| {
                axis.values.iter().map(move |&x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    let mut points = Vec::with_capacity(coords.len());
    for c in &coords {
        let mut p = base;
        for (axis, &x) in axes.iter().zip(c) {
            p.set(args.kernel, &axis.var, x)?;
        }
        points.push(p);
    }
    let tol = g.tol;
    let kernel = args.kernel;
    let j = args.j;
    let results: Vec<Result<(Complex64, f64), WormError>> = points
        .par_iter()
        .map(|p| match kernel {
            GridKernel::J => kernel_j(j, p.z[0], p.w[0], tol).map(|r| (r.value, r.err_est)),
            GridKernel::U => kernel_u(&upoint(p.z), &upoint(p.w), tol).map(|r| (r.value, r.err_est)),
            GridKernel::W => kernel_w(&wpoint(p.z), &wpoint(p.w), tol).map(|r| (r.value, r.err_est)),
            GridKernel::NormalizedU => {
                normalized_kernel_u(&upoint(p.z), &upoint(p.w), tol).map(|r| (r.value, r.err_est))
            }
            GridKernel::NormalizedW => {
                normalized_kernel_w(&wpoint(p.z), &wpoint(p.w), tol).map(|r| (r.value, r.err_est))
            }
            GridKernel::Gfun => g_boundary_split(p.zeta, tol).map(|r| (r.value, r.err_est)),
        })
        .collect();

    let status = |r: &Result<(Complex64, f64), WormError>| match r {
        Ok(_) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    let nan = (Complex64::new(f64::NAN, f64::NAN), f64::NAN);
    match format {
        Format::Csv => {
            let mut header: Vec<&str> = axes.iter().map(|a| a.var.as_str()).collect();
            header.extend(["value_re", "value_im", "err_est", "status"]);
            let rows: Vec<Vec<String>> = coords
                .iter()
                .zip(&results)
                .map(|(c, r)| {
                    let (v, e) = *r.as_ref().unwrap_or(&nan);
                    let mut row: Vec<String> = c.iter().map(|&x| cell(x)).collect();
                    row.extend([cell(v.re), cell(v.im), cell(e), status(r)]);
                    row
                })
                .collect();
            ok(csv_text(&header, &rows)?)
        }
        Format::Json => {
            let rows: Vec<Value> = coords
                .iter()
                .zip(&results)
                .map(|(c, r)| {
                    let (v, e) = *r.as_ref().unwrap_or(&nan);
                    let mut m = Map::new();
                    for (axis, &x) in axes.iter().zip(c) {
                        m.insert(axis.var.clone(), num(x));
                    }
                    m.insert("value".into(), cnum(v));
                    m.insert("err_est".into(), num(e));
                    m.insert("status".into(), json!(status(r)));
                    Value::Object(m)
                })
                .collect();
            let kernel_name = format!("{kernel:?}").to_lowercase();
            ok(to_json(&json!({
                "op": "grid",
                "inputs": { "kernel": kernel_name, "axes": args.axes, "j": j, "tol": num(tol) },
                "rows": rows,
            })))
        }
    }
}

fn ladder_output(op: &str, inputs: Value, entries: &[LadderEntry], key: &str, format: Format) -> Result<Output, Failure> {
    match format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries.iter().map(|e| vec![cell(e.cutoff), cell(e.value)]).collect();
            ok(csv_text(&[key, "value"], &rows)?)
        }
        Format::Json => {
            let partials: Vec<Value> = entries
                .iter()
                .map(|e| {
                    let mut m = Map::new();
                    m.insert(key.into(), num(e.cutoff));
                    m.insert("value".into(), num(e.value));
                    Value::Object(m)
                })
                .collect();
            ok(to_json(&json!({ "op": op, "inputs": inputs, "partials": partials })))
        }
    }
}

fn parse_ladder(s: &Option<String>, default: Vec<f64>) -> Result<Vec<f64>, Failure> {
    let Some(s) = s else { return Ok(default) };
    let (hi, lo) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("ladder must be HI:LO, got {s:?}")))?;
    let parse = |x: &str| x.parse::<f64>().map_err(|e| usage(format!("ladder {s:?}: {e}")));
    Ok(decade_ladder(parse(hi)?, parse(lo)?)?)
}

fn probe(p: &Probe, g: &Global, fmt: &dyn Fn(Format) -> Format) -> Result<Output, Failure> {
    let run_ladder = |op: &str, kind: ProbeKind, geo: &ProbeGeometry, default: Vec<f64>| {
        let ladder = parse_ladder(&geo.ladder, default)?;
        let cfg = ProbeConfig {
            mu: geo.mu,
            epsilon: geo.epsilon,
            ..ProbeConfig::default()
        };
        let entries = divergence_probe(kind, &wpoint(geo.w), &ladder, &cfg)?;
        let inputs = json!({ "w": c2_json(geo.w), "mu": num(geo.mu), "epsilon": num(geo.epsilon) });
        ladder_output(op, inputs, &entries, "delta", fmt(Format::Csv))
    };
    let default_ladder = || decade_ladder(1e-2, 1e-8).expect("valid default ladder");
    match p {
        Probe::Lp { p, geo } => run_ladder("probe-lp", ProbeKind::Lp(*p), geo, default_ladder()),
        Probe::L2 { geo } => run_ladder("probe-l2", ProbeKind::L2, geo, default_ladder()),
        Probe::Sobolev { s, geo } => run_ladder("probe-sobolev", ProbeKind::Sobolev(*s), geo, sobolev_ladder()),
        Probe::Norm { eta, c, j, m, mu } => {
            let outcome = sample_norm(*eta, *c, *j, *m, *mu, g.tol.max(1e-12))?;
            let inputs = json!({ "eta": cnum(*eta), "c": num(*c), "j": j, "m": num(*m), "mu": num(*mu) });
            match fmt(Format::Json) {
                Format::Csv => ladder_output("probe-norm", inputs, outcome.partials(), "cutoff", Format::Csv),
                Format::Json => {
                    let partials: Vec<Value> = outcome
                        .partials()
                        .iter()
                        .map(|e| json!({ "cutoff": num(e.cutoff), "value": num(e.value) }))
                        .collect();
                    let (class, value, err) = match &outcome {
                        NormOutcome::Finite { value, err_est, .. } => ("finite", num(*value), num(*err_est)),
                        NormOutcome::Divergent { .. } => ("divergent", Value::Null, Value::Null),
                    };
                    ok(to_json(&json!({
                        "op": "probe-norm",
                        "inputs": inputs,
                        "classification": class,
                        "value": value,
                        "err_est": err,
                        "partials": partials,
                    })))
                }
            }
        }
        Probe::Decay { z, w, j_max } => {
            let fit = decay_estimate(*z, *w, *j_max)?;
            match fmt(Format::Json) {
                Format::Csv => {
                    let rows: Vec<Vec<String>> = fit.samples.iter().map(|&(k, l)| vec![cell(k), cell(l)]).collect();
                    ok(csv_text(&["k", "log_abs"], &rows)?)
                }
                Format::Json => ok(to_json(&json!({
                    "op": "probe-decay",
                    "inputs": { "z": cnum(*z), "w": cnum(*w), "j_max": j_max },
                    "b_lambda": num(fit.b_lambda),
                    "rate_plus": num(fit.rate_plus),
                    "rate_minus": num(fit.rate_minus),
                    "root_at_max": num(fit.root_at_max),
                }))),
            }
        }
        Probe::Reproduce { j, a, b, w, mode } => {
            let f = SampleFunction::rational(*a, *b)?;
            let (m, seed) = match mode {
                IntegrationMode::Tensor => (Mode2d::Tensor { tol: g.tol.max(1e-8) }, None),
                IntegrationMode::MonteCarlo => (Mode2d::MonteCarlo { seed: g.seed }, Some(g.seed)),
            };
            let r = reproducing_error_with(*j, &f, *w, g.budget, m)?;
            let mut rec = json!({
                "op": "probe-reproduce",
                "inputs": { "j": j, "a": num(*a), "b": b, "w": cnum(*w), "budget": g.budget },
                "value": cnum(r.integral),
                "expected": cnum(r.expected),
                "error": num(r.error),
                "err_est": num(r.err_est),
                "diagnostics": { "nodes": r.nodes },
            });
            if let Some(s) = seed {
                rec["seed"] = json!(s);
            }
            match fmt(Format::Json) {
                Format::Json => ok(to_json(&rec)),
                Format::Csv => {
                    let mut header = vec!["value_re", "value_im", "error", "err_est"];
                    let mut row = vec![cell(r.integral.re), cell(r.integral.im), cell(r.error), cell(r.err_est)];
                    if let Some(s) = seed {
                        header.push("seed");
                        row.push(s.to_string());
                    }
                    ok(csv_text(&header, &[row])?)
                }
            }
        }
    }
}

fn verify(suite: &str, format: Format) -> Result<Output, Failure> {
    let reports = if suite == "all" {
        run_all()
    } else {
        let mut ids = Vec::new();
        for part in suite.split(',') {
            let id: u8 = part
                .trim()
                .parse()
                .map_err(|_| usage(format!("suite must be `all` or criterion numbers, got {suite:?}")))?;
            if !(1..=CRITERIA).contains(&id) {
                return Err(usage(format!("criterion {id} does not exist (1..={CRITERIA})")));
            }
            ids.push(id);
        }
        ids.into_iter().map(run_criterion).collect()
    };
    let code = if reports.iter().all(|r| r.passed) { 0 } else { 1 };
    let text = match format {
        Format::Csv => reports.iter().map(|r| format!("{r}\n")).collect(),
        Format::Json => to_json(&json!({
            "op": "verify",
            "criteria": reports
                .iter()
                .map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail }))
                .collect::<Vec<_>>(),
        })),
    };
    Ok(Output { text, code })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.global.out {
                Some(path) => File::create(path).and_then(|mut f| f.write_all(out.text.as_bytes())),
                None => io::stdout().lock().write_all(out.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
