use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use plateau_core::coeff::CoeffGroup;
use plateau_core::complex::{CellComplex, GridSpec};
use plateau_core::deform::{deform_chain_with, DeformOptions, PLChain};
use plateau_core::exec::{self, Exec};
use plateau_core::flatnorm::{flat_norm, FlatNormMethod, FlatNormOptions};
use plateau_core::functional::{density_ratio, phi_with, Integrand, SetFunction};
use plateau_core::homology::{homology_of, HomologyGroup};
use plateau_core::io::{self as pio, ChainFile, ComplexFile, PLChainFile, ProblemFile, SetFile, SubcomplexSpec};
use plateau_core::plateau::{compare_infima, min_size_chain, min_size_relative, min_spanning_set, SolveReport};
use plateau_core::svg;
use plateau_core::verify::{run_suite, Suite, SuiteReport, VerifyOptions};
use plateau_core::Error;

const EXIT_SCHEMA: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_ASSERTION: u8 = 4;

#[derive(Parser)]
#[command(name = "plateau", version, about = "Discrete Plateau problems on cell complexes")]
struct Cli {
    /// Caps worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Runs every batch loop sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    /// Writes the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Builds a dyadic grid complex.
    Grid(GridArgs),
    /// Absolute or relative homology of a complex.
    Homology(HomologyArgs),
    /// Flat norm of a chain.
    Flatnorm(FlatArgs),
    /// Minimal size of a chain meeting the problem condition.
    Minsize(ProblemArgs),
    /// Minimal spanning set for the problem condition.
    Minspan(ProblemArgs),
    /// Minimal relative size for the problem condition.
    Minrel(ProblemArgs),
    /// Solves both sides and compares the optima.
    Compare(ProblemArgs),
    /// Deforms a PL chain onto a grid skeleton.
    Deform(DeformArgs),
    /// Runs verification suites.
    Verify(VerifyArgs),
    /// Evaluates the anisotropic functional on a polyhedral set.
    Phi(PhiArgs),
}

#[derive(Args)]
struct ComplexArgs {
    /// Complex JSON file.
    #[arg(long, conflicts_with_all = ["bbox", "level"])]
    complex: Option<PathBuf>,
    /// Grid box as lo..,hi.. (e.g. 0,0,1,1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bbox: Option<Vec<f64>>,
    #[arg(long)]
    level: Option<u32>,
}

impl ComplexArgs {
    fn build(&self) -> Result<CellComplex, Error> {
        if let Some(path) = &self.complex {
            let f: ComplexFile = pio::read_json(path)?;
            return f.build(path.parent());
        }
        CellComplex::dyadic_grid(&self.grid()?)
    }

    fn grid(&self) -> Result<GridSpec, Error> {
        let (Some(b), Some(level)) = (&self.bbox, self.level) else {
            return Err(Error::Parse("give --complex, or --bbox with --level".into()));
        };
        if b.is_empty() || b.len() % 2 != 0 {
            return Err(Error::Parse(format!("--bbox needs 2n numbers, got {}", b.len())));
        }
        let n = b.len() / 2;
        Ok(GridSpec::new(b[..n].to_vec(), b[n..].to_vec(), level))
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    bbox: Vec<f64>,
    #[arg(long)]
    level: u32,
    /// Exports every cell, not only the grid spec.
    #[arg(long)]
    cells: bool,
}

#[derive(Args)]
struct HomologyArgs {
    #[command(flatten)]
    complex: ComplexArgs,
    /// Degree.
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value = "Z")]
    group: String,
    /// Subcomplex JSON for relative homology.
    #[arg(long)]
    rel: Option<PathBuf>,
    #[arg(long)]
    reduced: bool,
}

#[derive(Args)]
struct FlatArgs {
    #[command(flatten)]
    complex: ComplexArgs,
    /// Chain JSON file.
    #[arg(long)]
    chain: PathBuf,
    #[arg(long, default_value = "Z")]
    group: String,
    /// lp, branch-bound or exhaustive.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem JSON file.
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Args)]
struct DeformArgs {
    #[command(flatten)]
    complex: ComplexArgs,
    /// PL chain JSON file.
    #[arg(long, conflicts_with = "off")]
    input: Option<PathBuf>,
    /// OFF file; faces are read as closed curves (or triangles with --surface).
    #[arg(long)]
    off: Option<PathBuf>,
    #[arg(long)]
    surface: bool,
    #[arg(long, default_value = "Z")]
    group: String,
    #[arg(long, default_value_t = 0.75)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skips squash-map sampling.
    #[arg(long)]
    no_squash: bool,
    /// Overlay SVG (n = 2); the underlying CSV is written next to it.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Output chain CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite names (le-MS, projrec, squash, coarea, scequ, hequ, sizediff).
    suites: Vec<String>,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for per-suite CSV files.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Bar chart of the worst ratio per suite; its CSV is written next to it.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PhiArgs {
    /// Polyhedral set JSON file.
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value = "const:1")]
    integrand: String,
    #[arg(long, default_value = "const:1")]
    lambda: String,
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Also reports the density ratio at this point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0 / 256.0)]
    radius: f64,
}

/// A finished command: JSON report, human lines, and the exit status.
struct Outcome {
    report: Value,
    text: Vec<String>,
    code: u8,
}

impl Outcome {
    fn ok(report: Value, text: Vec<String>) -> Self {
        Outcome { report, text, code: 0 }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_SCHEMA } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        exec::set_threads(n);
    }
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let start = Instant::now();
    match run(&cli.cmd, exec) {
        Ok(mut o) => {
            if let Value::Object(m) = &mut o.report {
                m.insert("elapsed_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
            }
            let text = match pio::to_json_pretty(&o.report) {
                Ok(t) => t,
                Err(e) => return fail(&e),
            };
            match &cli.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, text + "\n") {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                }
                None => println!("{text}"),
            }
            for line in &o.text {
                eprintln!("{line}");
            }
            ExitCode::from(o.code)
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        Error::Parse(_) | Error::InvalidGroup(_) | Error::InvalidCell(_) => EXIT_SCHEMA,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => 1,
    })
}

fn run(cmd: &Cmd, exec: Exec) -> Result<Outcome, Error> {
    match cmd {
        Cmd::Grid(a) => grid(a),
        Cmd::Homology(a) => homology(a),
        Cmd::Flatnorm(a) => flatnorm(a),
        Cmd::Minsize(a) => solve(a, "minsize"),
        Cmd::Minspan(a) => solve(a, "minspan"),
        Cmd::Minrel(a) => solve(a, "minrel"),
        Cmd::Compare(a) => compare(a),
        Cmd::Deform(a) => deform(a, exec),
        Cmd::Verify(a) => verify(a, exec),
        Cmd::Phi(a) => phi(a, exec),
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn grid(a: &GridArgs) -> Result<Outcome, Error> {
    let spec = ComplexArgs { complex: None, bbox: Some(a.bbox.clone()), level: Some(a.level) }.grid()?;
    let k = CellComplex::dyadic_grid(&spec)?;
    let counts = k.counts();
    let file = if a.cells { ComplexFile::export(&k) } else { ComplexFile::grid(spec) };
    let mut report = serde_json::to_value(&file).map_err(|e| Error::Parse(e.to_string()))?;
    if let Value::Object(m) = &mut report {
        m.insert("counts".into(), json!(counts));
        m.insert("fingerprint".into(), json!(k.fingerprint()));
    }
    let text = vec![format!("cells by dimension: {counts:?}")];
    Ok(Outcome::ok(report, text))
}

fn homology(a: &HomologyArgs) -> Result<Outcome, Error> {
    let k = a.complex.build()?;
    let g = CoeffGroup::parse_short(&a.group)?;
    let b = match &a.rel {
        Some(p) => pio::read_json::<SubcomplexSpec>(p)?.build(&k, g)?,
        None => k.empty_subcomplex(),
    };
    let h: HomologyGroup = homology_of(&k, &k.full_subcomplex(), &b, a.dim, g, a.reduced)?;
    let text = vec![format!(
        "H_{}{}: free rank {}, torsion {:?}",
        a.dim,
        if a.rel.is_some() { " (relative)" } else { "" },
        h.free_rank,
        h.torsion
    )];
    Ok(Outcome::ok(pio::homology_json(&h, &k), text))
}

fn flatnorm(a: &FlatArgs) -> Result<Outcome, Error> {
    let k = a.complex.build()?;
    let g = CoeffGroup::parse_short(&a.group)?;
    let t = pio::read_json::<ChainFile>(&a.chain)?.build(&k, g)?;
    let mut opts = FlatNormOptions::default();
    if let Some(m) = &a.method {
        opts.method = serde_json::from_value::<FlatNormMethod>(json!(m)).map_err(|e| Error::Parse(format!("at `--method`: {e}")))?;
    }
    let r = flat_norm(&k, &t, &opts)?;
    let text = vec![format!("flat norm {} ({})", pio::fmt_f64(r.value), json!(r.method))];
    Ok(Outcome::ok(pio::flat_norm_json(&r, &k), text))
}

fn report_line(name: &str, r: &SolveReport) -> String {
    format!(
        "{name:<8} {:>20}  {}{}",
        pio::fmt_f64(r.value),
        r.method,
        if r.proven_optimal { ", optimal" } else { ", not proven optimal" }
    )
}

fn solve(a: &ProblemArgs, which: &str) -> Result<Outcome, Error> {
    let (file, base) = ProblemFile::read(&a.problem)?;
    let lp = file.load(base.as_deref())?;
    let r = match which {
        "minsize" => min_size_chain(&lp.complex, &lp.problem, &lp.options)?,
        "minspan" => min_spanning_set(&lp.complex, &lp.problem, &lp.options)?,
        _ => min_size_relative(&lp.complex, &lp.problem, &lp.options)?,
    };
    let report = json!({ "command": which, "seed": lp.seed, "result": pio::solve_report_json(&r, &lp.complex) });
    Ok(Outcome::ok(report, vec![report_line(which, &r)]))
}

fn compare(a: &ProblemArgs) -> Result<Outcome, Error> {
    let (file, base) = ProblemFile::read(&a.problem)?;
    let lp = file.load(base.as_deref())?;
    let c = compare_infima(&lp.complex, &lp.problem, &lp.options)?;
    let text = vec![
        report_line("size", &c.size_side),
        report_line("set", &c.set_side),
        format!("equal: {}", c.equal),
    ];
    let code = if c.both_optimal && !c.equal { EXIT_ASSERTION } else { 0 };
    let report = json!({ "command": "compare", "seed": lp.seed, "result": pio::comparison_json(&c, &lp.complex) });
    Ok(Outcome { report, text, code })
}

fn deform(a: &DeformArgs, exec: Exec) -> Result<Outcome, Error> {
    let k = a.complex.build()?;
    let g = CoeffGroup::parse_short(&a.group)?;
    let s: PLChain = match (&a.input, &a.off) {
        (Some(p), None) => pio::read_json::<PLChainFile>(p)?.build(g)?,
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            let mesh = pio::read_off(&text)?;
            if a.surface {
                mesh.surface(g, k.ambient())?
            } else {
                mesh.curves(g, k.ambient())?
            }
        }
        _ => return Err(Error::Parse("give exactly one of --input and --off".into())),
    };
    let mut opts = DeformOptions::new(a.beta, a.seed);
    opts.exec = exec;
    opts.squash = !a.no_squash;
    let (out, cert) = deform_chain_with(&s, &k, &opts)?;
    let mut svgs = Vec::new();
    let csv = chain_csv(&out, &k);
    if let Some(path) = &a.csv {
        write(path, &csv)?;
    }
    if let Some(path) = &a.svg {
        write(path, &svg::deform_overlay(&k, &s, &out)?)?;
        let data = path.with_extension("csv");
        write(&data, &csv)?;
        svgs.push(path.display().to_string());
    }
    let text = vec![
        format!("mass  {} -> {}", pio::fmt_f64(cert.mass_in), pio::fmt_f64(cert.mass_out)),
        format!("size  {} -> {}", pio::fmt_f64(cert.size_in), pio::fmt_f64(cert.size_out)),
        format!("identity {} (residual {:.3e})", if cert.identity_holds { "holds" } else { "FAILS" }, cert.identity_residual),
    ];
    let code = if cert.identity_holds { 0 } else { EXIT_ASSERTION };
    let report = json!({
        "command": "deform",
        "seed": a.seed,
        "output": pio::chain_json(&out, &k),
        "certificate": cert,
        "svg": svgs,
    });
    Ok(Outcome { report, text, code })
}

fn chain_csv(c: &plateau_core::chain::Chain, k: &CellComplex) -> String {
    let mut s = String::from("cell,coef,measure,centroid\n");
    for (id, v) in c.iter() {
        let m = k.measure(c.dim(), id);
        let cen: Vec<String> = k.centroid(c.dim(), id).iter().map(|x| pio::fmt_f64(*x)).collect();
        s.push_str(&format!("{id},{v},{},{}\n", pio::fmt_f64(m), cen.join(" ")));
    }
    s
}

fn worst_ratio(r: &SuiteReport) -> f64 {
    r.rows
        .iter()
        .map(|row| if row.bound != 0.0 { row.value / row.bound } else if row.ok { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

fn verify(a: &VerifyArgs, exec: Exec) -> Result<Outcome, Error> {
    let suites: Vec<Suite> = if a.all {
        Suite::ALL.to_vec()
    } else if a.suites.is_empty() {
        return Err(Error::Parse("name at least one suite, or pass --all".into()));
    } else {
        a.suites.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    let opts = VerifyOptions { trials: a.trials, seed: a.seed, exec };
    let mut reports = Vec::new();
    for s in suites {
        reports.push(run_suite(s, &opts)?);
    }
    if let Some(dir) = &a.csv_dir {
        for r in &reports {
            write(&dir.join(format!("{}.csv", r.suite.name())), &r.csv())?;
        }
    }
    let mut svgs = Vec::new();
    if let Some(path) = &a.svg {
        let bars: Vec<(String, f64)> = reports.iter().map(|r| (r.suite.name().to_string(), worst_ratio(r))).collect();
        write(path, &svg::bar_chart("worst value / bound per suite", &bars, Some(1.0 + 1e-9)))?;
        let mut csv = String::from("suite,worst_ratio,checks,violations\n");
        for (r, (_, w)) in reports.iter().zip(&bars) {
            csv.push_str(&format!("{},{},{},{}\n", r.suite.name(), pio::fmt_f64(*w), r.checks, r.violations));
        }
        write(&path.with_extension("csv"), &csv)?;
        svgs.push(path.display().to_string());
    }
    let text: Vec<String> = reports.iter().map(SuiteReport::line).collect();
    let code = if reports.iter().all(|r| r.passed) { 0 } else { EXIT_ASSERTION };
    let report = json!({ "command": "verify", "seed": a.seed, "suites": reports, "svg": svgs });
    Ok(Outcome { report, text, code })
}

fn phi(a: &PhiArgs, exec: Exec) -> Result<Outcome, Error> {
    let e = pio::read_json::<SetFile>(&a.set)?.build()?;
    let f = Integrand::parse(&a.integrand)?;
    let lambda = SetFunction::parse(&a.lambda)?;
    let value = phi_with(&e, &f, &lambda, a.order, exec)?;
    let density = match &a.at {
        Some(x) => Some(density_ratio(&e, &f, &lambda, x, a.radius)?),
        None => None,
    };
    let mut text = vec![format!("phi {}  (measure {})", pio::fmt_f64(value), pio::fmt_f64(e.measure()))];
    if let Some(d) = density {
        text.push(format!("density ratio {}", pio::fmt_f64(d)));
    }
    let report = json!({
        "command": "phi",
        "integrand": a.integrand,
        "lambda": a.lambda,
        "order": a.order,
        "value": value,
        "measure": e.measure(),
        "density_ratio": density,
    });
    Ok(Outcome::ok(report, text))
}
