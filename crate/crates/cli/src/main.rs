use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pascal_core::compact::{invariant_charpoly, tau_model_build, CZeroVec, Symmetry};
use pascal_core::field::{QuadraticScalar, Q};
use pascal_core::graph::{gamma_graph, line_graph, pascal_ball, triangle_graph};
use pascal_core::julia::{code_to_point, julia_membership, preimage_tree, JuliaCode, DEFAULT_ESCAPE};
use pascal_core::moments::{compare_e1, compare_phi0, pushforward_moment_check, MomentTable};
use pascal_core::plane::parity_patch;
use pascal_core::sierpinski::theta0_moment_check;
use pascal_core::spectra::{char_poly_of_graph, eigenspace_exact, closed_form_factored, closed_form_charpoly, Eigenbasis, Scalar};
use pascal_core::suite::{overall, random_probe_checks, run_suite, Check, Status, Suite, SuiteOptions};
use pascal_core::transfer::{equilibrium_moments, WeightFn};
use pascal_core::SubstGraph;

#[derive(Parser)]
#[command(name = "pascal", version, about = "Spectra of the Pascal graph family, checked on finite models")]
struct Cli {
    /// Output format. Each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Either a format (json, csv, dot) or a file to write the output to.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Tolerance for floating-point comparisons.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for random probe vectors (logged in the report).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Include wall-clock timings in reports (output is then not byte-stable).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Build graphs of the family.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Exact characteristic polynomials and eigenspaces.
    #[command(subcommand)]
    Spectra(SpectraCmd),
    /// Dynamics of f(x) = x^2 - x - 3.
    #[command(subcommand)]
    Julia(JuliaCmd),
    /// Transfer-operator integrals and moment comparisons.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// The compactified graph and its finite models.
    #[command(subcommand)]
    Compact(CompactCmd),
    /// The line graph of the Pascal graph.
    #[command(subcommand)]
    Sierpinski(SierpinskiCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Triangle,
    PascalBall,
    Gamma,
    Theta,
    ParityPatch,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    level: usize,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Emit a graph as JSON (or DOT with --format dot).
    Build(FamilyArgs),
    /// Emit a graph as DOT.
    ExportDot(FamilyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or "all".
    #[arg(long)]
    suite: String,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    max_level: Option<usize>,
}

#[derive(Subcommand)]
enum SpectraCmd {
    /// Exact characteristic polynomial of the adjacency matrix.
    Charpoly(FamilyArgs),
    /// Exact eigenbasis at x: a rational "p/q" or "a,b,den,d" for (a + b sqrt d)/den.
    Eigenspace {
        #[command(flatten)]
        graph: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
}

#[derive(Subcommand)]
enum JuliaCmd {
    /// The point of the Julia set with the given code, continued by 3, 3, ...
    Point {
        #[arg(long, allow_hyphen_values = true)]
        code: String,
    },
    /// Sorted preimages f^-depth(y).
    Preimages {
        #[arg(long, allow_hyphen_values = true)]
        of: f64,
        #[arg(long)]
        depth: usize,
    },
    /// Membership test by nested cylinders.
    Member {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 40)]
        max_iter: usize,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Integrals of (x + shift)^n times a density against an equilibrium measure, n = 0..=count.
    Moments {
        #[arg(long, default_value = "rho")]
        weight: String,
        #[arg(long, default_value = "h")]
        density: String,
        #[arg(long, default_value_t = 12)]
        count: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        shift: f64,
    },
    /// Graph moments of phi0 against the transfer side, n = 0..=max.
    ComparePhi0 {
        #[arg(long, default_value_t = 12)]
        max: usize,
    },
    /// Graph moments of (D + 2) phi0 against the pushed-forward side, n = 0..=max.
    Pushforward {
        #[arg(long, default_value_t = 12)]
        max: usize,
    },
}

#[derive(Subcommand)]
enum CompactCmd {
    /// Dump the tau-model of level n.
    Model {
        #[arg(long)]
        level: usize,
    },
    /// Char poly of the boundary-rule Laplacian on symmetric triangular functions.
    Charpoly {
        #[arg(long, default_value = "invariant")]
        symmetry: String,
        #[arg(long)]
        level: usize,
    },
    /// Moments of E1 functions, N = 0..=count.
    MomentsE1 {
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value = "1,-1,0", allow_hyphen_values = true)]
        v: String,
    },
}

#[derive(Subcommand)]
enum SierpinskiCmd {
    /// Moments of theta0 on the line graph, n = 0..=count.
    MomentsTheta0 {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// The line-graph identities and the conjugated dynamics.
    Verify {
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
}

/// A usage error: exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

struct Output {
    format: Option<Format>,
    path: Option<PathBuf>,
}

impl Output {
    fn new(cli: &Cli) -> Result<Output> {
        let mut format = cli.format;
        let mut path = None;
        match cli.out.as_deref() {
            Some("json") => format = format.or(Some(Format::Json)),
            Some("csv") => format = format.or(Some(Format::Csv)),
            Some("dot") => format = format.or(Some(Format::Dot)),
            Some(p) => path = Some(PathBuf::from(p)),
            None => {}
        }
        Ok(Output { format, path })
    }

    fn format_or(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if !allowed.contains(&f) {
            return Err(usage(format!("format {f:?} is not available for this command")));
        }
        Ok(f)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn build_family(f: &FamilyArgs) -> Result<SubstGraph> {
    let cap = match f.family {
        Family::Triangle => 8,
        Family::Gamma | Family::Theta => 5,
        Family::PascalBall | Family::ParityPatch => 7,
    };
    if f.level > cap {
        return Err(usage(format!("level {} exceeds the budget {cap} for {:?}", f.level, f.family)));
    }
    Ok(match f.family {
        Family::Triangle => {
            if f.level == 0 {
                return Err(usage("triangle level must be >= 1"));
            }
            triangle_graph(f.level)?
        }
        Family::PascalBall => {
            if f.level == 0 {
                return Err(usage("pascal-ball level must be >= 1"));
            }
            pascal_ball(f.level)?
        }
        Family::Gamma => gamma_graph(f.level),
        Family::Theta => line_graph(&gamma_graph(f.level)),
        Family::ParityPatch => {
            if f.level == 0 {
                return Err(usage("parity-patch level must be >= 1"));
            }
            parity_patch(f.level as u32)?.0
        }
    })
}

fn report(command: &str, options: Value, checks: &[Check], timings: bool, start: Instant) -> Value {
    let checks: Vec<Value> = checks
        .iter()
        .map(|c| {
            let mut v = json!({ "name": c.name, "status": c.status, "values": c.values });
            if timings {
                v["seconds"] = json!(c.seconds);
            }
            v
        })
        .collect();
    let mut v = json!({
        "command": command,
        "options": options,
        "status": overall_of(&checks),
        "checks": checks,
    });
    if timings {
        v["seconds"] = json!(start.elapsed().as_secs_f64());
    }
    v
}

fn overall_of(checks: &[Value]) -> &'static str {
    let mut worst = Status::Pass;
    for c in checks {
        let s = Status::from_label(c["status"].as_str().unwrap_or("fail"));
        worst = worst.max(s);
    }
    worst.as_str()
}

fn checks_csv(checks: &[Check], timings: bool) -> String {
    let mut s = String::from(if timings { "name,status,seconds\n" } else { "name,status\n" });
    for c in checks {
        let name = c.name.replace('"', "'");
        if timings {
            s.push_str(&format!("\"{name}\",{},{:.3}\n", c.status, c.seconds));
        } else {
            s.push_str(&format!("\"{name}\",{}\n", c.status));
        }
    }
    s
}

fn emit_checks(out: &Output, cli: &Cli, command: &str, options: Value, checks: &[Check], start: Instant) -> Result<bool> {
    match out.format_or(Format::Json, &[Format::Json, Format::Csv])? {
        Format::Csv => out.emit(&checks_csv(checks, cli.timings))?,
        _ => out.emit(&to_json(&report(command, options, checks, cli.timings, start)))?,
    }
    Ok(overall(checks) != Status::Fail)
}

fn emit_table(out: &Output, table: &MomentTable) -> Result<bool> {
    match out.format_or(Format::Csv, &[Format::Json, Format::Csv])? {
        Format::Json => out.emit(&to_json(&serde_json::to_value(table)?))?,
        _ => out.emit(&table.to_csv())?,
    }
    Ok(table.passed())
}

fn parse_scalar(s: &str) -> Result<Scalar> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [r] => Ok(Scalar::Rational(r.parse::<Q>().map_err(|_| usage(format!("bad rational {r:?}")))?)),
        [a, b, den, d] => {
            let p = |t: &str| t.parse::<i64>().map_err(|_| usage(format!("bad integer {t:?}")));
            let (a, b, den, d) = (p(a)?, p(b)?, p(den)?, p(d)?);
            if den == 0 {
                return Err(usage("denominator must be nonzero"));
            }
            Ok(Scalar::Quadratic(QuadraticScalar::from_ints(a, b, den, d)))
        }
        _ => Err(usage("x must be p/q or a,b,den,d")),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let out = Output::new(cli)?;
    let start = Instant::now();
    match &cli.command {
        Command::Graph(GraphCmd::Build(f)) => {
            let g = build_family(f)?;
            match out.format_or(Format::Json, &[Format::Json, Format::Dot])? {
                Format::Dot => out.emit(&g.to_dot())?,
                _ => out.emit(&to_json(&g.to_json()))?,
            }
            Ok(true)
        }
        Command::Graph(GraphCmd::ExportDot(f)) => {
            let g = build_family(f)?;
            out.format_or(Format::Dot, &[Format::Dot])?;
            out.emit(&g.to_dot())?;
            Ok(true)
        }
        Command::Verify(args) => {
            let defaults = SuiteOptions::default();
            let opts = SuiteOptions {
                level: args.level.unwrap_or(defaults.level),
                max_level: args.max_level.unwrap_or(defaults.max_level),
                tol: cli.tol.unwrap_or(defaults.tol),
            };
            if opts.max_level > 5 || opts.level > 6 {
                return Err(usage("verify levels are capped at --level 6 and --max-level 5"));
            }
            let suites: Vec<Suite> = if args.suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::parse(&args.suite).map_err(|e| usage(e.to_string()))?]
            };
            let mut checks = Vec::new();
            for s in &suites {
                for mut c in run_suite(*s, &opts)? {
                    c.name = format!("{}: {}", s.name(), c.name);
                    checks.push(c);
                }
            }
            if let Some(seed) = cli.seed {
                checks.extend(random_probe_checks(opts.level.min(4), seed, 3)?);
            }
            let options = json!({ "suite": args.suite, "level": opts.level, "max_level": opts.max_level, "tol": opts.tol, "seed": cli.seed });
            emit_checks(&out, cli, "verify", options, &checks, start)
        }
        Command::Spectra(SpectraCmd::Charpoly(f)) => {
            let g = build_family(f)?;
            if g.len() > 400 {
                return Err(usage(format!("{} vertices exceeds the char poly budget of 400", g.len())));
            }
            let p = char_poly_of_graph(&g);
            let mut v = json!({
                "vertices": g.len(),
                "coeffs": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "polynomial": p.to_string(),
            });
            let mut ok = true;
            if matches!(f.family, Family::Gamma) {
                let closed = closed_form_charpoly(f.level as u32);
                v["factored"] = json!(closed_form_factored(f.level as u32).to_string());
                v["matches_closed_form"] = json!(closed == p);
                ok = closed == p;
            }
            out.format_or(Format::Json, &[Format::Json])?;
            out.emit(&to_json(&v))?;
            Ok(ok)
        }
        Command::Spectra(SpectraCmd::Eigenspace { graph, x }) => {
            let g = build_family(graph)?;
            if g.len() > 400 {
                return Err(usage(format!("{} vertices exceeds the eigenspace budget of 400", g.len())));
            }
            let x = parse_scalar(x)?;
            let basis = eigenspace_exact(&g, &x);
            let address = |v: usize| g.address(v).to_string();
            let csv = match &basis {
                Eigenbasis::Rational(b) => {
                    let mut s = String::from("vector,vertex,address,num,den\n");
                    for (k, vec) in b.iter().enumerate() {
                        for (v, val) in vec.iter().enumerate() {
                            s.push_str(&format!("{k},{v},{},{},{}\n", address(v), val.numer(), val.denom()));
                        }
                    }
                    s
                }
                Eigenbasis::Quadratic(b) => {
                    let mut s = String::from("vector,vertex,address,rational_part,surd_part,d\n");
                    for (k, vec) in b.iter().enumerate() {
                        for (v, val) in vec.iter().enumerate() {
                            s.push_str(&format!("{k},{v},{},{},{},{}\n", address(v), val.a, val.b, val.d));
                        }
                    }
                    s
                }
            };
            match out.format_or(Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => {
                    let vectors: Vec<Vec<String>> = match &basis {
                        Eigenbasis::Rational(b) => b.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect(),
                        Eigenbasis::Quadratic(b) => b.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect(),
                    };
                    let addresses: Vec<String> = (0..g.len()).map(address).collect();
                    out.emit(&to_json(&json!({ "dimension": basis.len(), "addresses": addresses, "vectors": vectors })))?
                }
                _ => out.emit(&csv)?,
            }
            Ok(true)
        }
        Command::Julia(JuliaCmd::Point { code }) => {
            let code = JuliaCode::parse(code).map_err(|e| usage(e.to_string()))?;
            let p = code_to_point(&code, cli.tol.unwrap_or(1e-12))?;
            out.format_or(Format::Json, &[Format::Json])?;
            out.emit(&to_json(&serde_json::to_value(&p)?))?;
            Ok(true)
        }
        Command::Julia(JuliaCmd::Preimages { of, depth }) => {
            if *depth > 20 {
                return Err(usage("depth is capped at 20"));
            }
            let v = preimage_tree(*of, *depth)?;
            match out.format_or(Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => out.emit(&to_json(&json!({ "of": of, "depth": depth, "preimages": v })))?,
                _ => {
                    let mut s = String::from("index,value\n");
                    for (i, x) in v.iter().enumerate() {
                        s.push_str(&format!("{i},{x:?}\n"));
                    }
                    out.emit(&s)?;
                }
            }
            Ok(true)
        }
        Command::Julia(JuliaCmd::Member { x, max_iter }) => {
            let member = julia_membership(*x, *max_iter, DEFAULT_ESCAPE);
            out.format_or(Format::Json, &[Format::Json])?;
            out.emit(&to_json(&json!({ "x": x, "max_iter": max_iter, "member": member })))?;
            Ok(true)
        }
        Command::Measure(MeasureCmd::Moments { weight, density, count, shift }) => {
            let w = WeightFn::parse(weight).map_err(|e| usage(e.to_string()))?;
            let d = WeightFn::parse(density).map_err(|e| usage(e.to_string()))?;
            let r = equilibrium_moments(w, d, *shift, count + 1, cli.tol.unwrap_or(1e-10))?;
            match out.format_or(Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => out.emit(&to_json(&serde_json::to_value(&r)?))?,
                _ => {
                    let mut s = String::from("n,transfer,depth\n");
                    for (n, x) in r.values.iter().enumerate() {
                        s.push_str(&format!("{n},{x:.12e},{}\n", r.depth));
                    }
                    out.emit(&s)?;
                }
            }
            Ok(true)
        }
        Command::Measure(MeasureCmd::ComparePhi0 { max }) => {
            cap_moments(*max, 16)?;
            emit_table(&out, &compare_phi0(*max, cli.tol.unwrap_or(1e-6))?)
        }
        Command::Measure(MeasureCmd::Pushforward { max }) => {
            cap_moments(*max, 12)?;
            emit_table(&out, &pushforward_moment_check(*max, cli.tol.unwrap_or(1e-6))?)
        }
        Command::Compact(CompactCmd::Model { level }) => {
            if *level == 0 || *level > 6 {
                return Err(usage("compact model level must be in 1..=6"));
            }
            out.format_or(Format::Json, &[Format::Json])?;
            out.emit(&to_json(&tau_model_build(*level)?.to_json()))?;
            Ok(true)
        }
        Command::Compact(CompactCmd::Charpoly { symmetry, level }) => {
            let sym = Symmetry::parse(symmetry).map_err(|e| usage(e.to_string()))?;
            if *level > 6 {
                return Err(usage("charpoly level is capped at 6"));
            }
            let r = invariant_charpoly(*level, sym).map_err(|e| usage(e.to_string()))?;
            out.format_or(Format::Json, &[Format::Json])?;
            out.emit(&to_json(&json!({ "report": r, "status": r.status() })))?;
            Ok(r.status() != "fail")
        }
        Command::Compact(CompactCmd::MomentsE1 { count, v }) => {
            cap_moments(*count, 16)?;
            let v = CZeroVec::parse(v).map_err(|e| usage(e.to_string()))?;
            emit_table(&out, &compare_e1(&v, *count, cli.tol.unwrap_or(1e-6))?)
        }
        Command::Sierpinski(SierpinskiCmd::MomentsTheta0 { count }) => {
            cap_moments(*count, 12)?;
            emit_table(&out, &theta0_moment_check(*count, cli.tol.unwrap_or(1e-6))?)
        }
        Command::Sierpinski(SierpinskiCmd::Verify { level }) => {
            let opts = SuiteOptions { level: *level, tol: cli.tol.unwrap_or(1e-10), ..SuiteOptions::default() };
            let checks = run_suite(Suite::Sierpinski, &opts)?;
            emit_checks(&out, cli, "sierpinski verify", json!({ "level": level, "tol": opts.tol }), &checks, start)
        }
    }
}

fn cap_moments(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(usage(format!("moment order {n} exceeds the budget {cap}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
