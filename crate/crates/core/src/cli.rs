//! Command-line front end.
//!
//! Each subcommand resolves a [`RunConfig`] from built-in defaults, an
//! optional JSON config file and command-line flags, in that order of
//! precedence, and writes one output document. JSON outputs have the shape
//! `{"command": .., "config": .., "result": ..}`. CSV outputs start with a
//! `#`-prefixed line holding the command and config as compact JSON.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::basis::{IndexWindow, Interval};
use crate::bell::{make_meyer, make_shannon, BellKind, BellProfile};
use crate::bounds::{verify_duality, verify_iso_xy_a, verify_iso_xy_b, verify_lemma1, verify_lemma2, BoundReport, BoundStatus};
use crate::classify::{classify_coeffs, classify_function, coherence_check, ClassifyOptions};
use crate::corpus;
use crate::designer::{design, DesignConfig, DesignStatus};
use crate::error::Error;
use crate::function::SampledFunction;
use crate::quadrature::QuadSpec;
use crate::seminorm::LogGrid;
use crate::transform::{analyze, gram, reconstruction_error, synthesize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_VIOLATED: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_REFUSED: i32 = 6;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  numeric warning: nonconvergent quadrature, window-limited or incoherent
     verdict, designer stopped before converging (output is still written)
  3  usage or configuration error: unknown corpus id, empty window, invalid field
  4  a verified bound is violated
  5  I/O or serialization failure
  6  refused: bell without an orthonormal basis, infeasible design support

Threads: --threads N, else the `threads` config field, else PSI_LAB_THREADS.";

#[derive(Debug, Parser)]
#[command(name = "psi-lab", version, about = "Wavelet coefficients on the half-line: transform, classify, verify, design", after_help = EXIT_HELP)]
pub struct Cli {
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub bell: Option<BellArg>,
    /// Profile JSON for `--bell spline-file`.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub jmin: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub jmax: Option<i32>,
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated weight exponents.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambdas: Option<Vec<f64>>,
    /// Comma-separated derivative orders.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Log grid half-width T in octaves.
    #[arg(long)]
    pub octaves: Option<f64>,
    #[arg(long)]
    pub per_octave: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BellArg {
    Shannon,
    Meyer,
    SplineFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Lemma {
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "isoXY", alias = "iso-xy")]
    #[serde(rename = "isoXY")]
    IsoXy,
    #[value(name = "duality")]
    #[serde(rename = "duality")]
    Duality,
}

/// Test rows for the inverse estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowArg {
    /// Unit vector at `k = 0`.
    E0,
    /// `(1+|k|)^{-4}`.
    Poly4,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficient array of an input.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Corpus id, `point-mass:A:P`, or a samples CSV (`x,re[,im]`).
        #[arg(long)]
        input: String,
    },
    /// Function-side and coefficient-side table verdicts with a coherence check.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: String,
    },
    /// Check an explicit bound.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Function (lemma 1, isoXY) or distribution (duality).
        #[arg(long)]
        input: Option<String>,
        /// Test function for duality.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, value_enum, default_value = "e0")]
        row: RowArg,
    },
    /// Gram matrix of the basis over the window.
    Gram {
        #[command(flatten)]
        common: Common,
        /// Include all entries in JSON output.
        #[arg(long)]
        entries: bool,
    },
    /// Optimize a spline bell against the orthonormality residuals, starting from `--bell`.
    Design {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        design: DesignArgs,
    },
    /// L² reconstruction error on a compact plus sampled curves.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: String,
        #[arg(long)]
        k_lo: Option<f64>,
        #[arg(long)]
        k_hi: Option<f64>,
        #[arg(long, default_value_t = 513)]
        samples: usize,
    },
    /// Corpus manifest.
    Corpus {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub support_lo: Option<f64>,
    #[arg(long)]
    pub support_hi: Option<f64>,
    #[arg(long)]
    pub n_coeffs: Option<usize>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub samples_per_unit: Option<usize>,
    /// Also write the designed profile here.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BellChoice {
    Shannon,
    Meyer,
    SplineFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub octaves: f64,
    pub per_octave: usize,
}

/// Fully resolved settings, embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub bell: BellChoice,
    pub window: IndexWindow,
    pub tol: f64,
    pub grids: Grids,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileWindow {
    jmin: Option<i32>,
    jmax: Option<i32>,
    kmax: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGrids {
    lambdas: Option<Vec<f64>>,
    ns: Option<Vec<usize>>,
    octaves: Option<f64>,
    per_octave: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    bell: Option<BellChoice>,
    window: Option<FileWindow>,
    tol: Option<f64>,
    grids: Option<FileGrids>,
    format: Option<Format>,
    output: Option<PathBuf>,
    threads: Option<usize>,
    design: Option<DesignFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    support: Option<(f64, f64)>,
    n_coeffs: Option<usize>,
    degree: Option<usize>,
    mu: Option<f64>,
    max_iters: Option<usize>,
    samples_per_unit: Option<usize>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::UnknownCorpusId(_) | Error::InsufficientSmoothness { .. } | Error::NotRegular(_) => EXIT_USAGE,
            Error::NotOrthonormal(_) => EXIT_REFUSED,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_IO,
        };
        CliError { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: EXIT_IO, msg: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Per-command fallbacks applied before the config file and flags.
struct Defaults {
    bell: BellChoice,
    window: IndexWindow,
}

fn load_file(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError { code: EXIT_IO, msg: format!("config {}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

fn resolve(common: &Common, file: &FileConfig, d: Defaults) -> CliResult<RunConfig> {
    let bell = match common.bell {
        Some(BellArg::Shannon) => BellChoice::Shannon,
        Some(BellArg::Meyer) => BellChoice::Meyer,
        Some(BellArg::SplineFile) => match (&common.profile, &file.bell) {
            (Some(p), _) => BellChoice::SplineFile { path: p.clone() },
            (None, Some(BellChoice::SplineFile { path })) => BellChoice::SplineFile { path: path.clone() },
            _ => return Err(CliError::usage("bell: spline-file needs --profile PATH")),
        },
        None => file.bell.clone().unwrap_or(d.bell),
    };
    let fw = file.window.as_ref();
    let jmin = common.jmin.or(fw.and_then(|w| w.jmin)).unwrap_or(d.window.j_min);
    let jmax = common.jmax.or(fw.and_then(|w| w.jmax)).unwrap_or(d.window.j_max);
    let kmax = common.kmax.or(fw.and_then(|w| w.kmax)).unwrap_or(d.window.k_max);
    let window = IndexWindow::new(jmin, jmax, kmax).map_err(|e| CliError::usage(format!("window: {e}")))?;
    let tol = common.tol.or(file.tol).unwrap_or(QuadSpec::default().tol);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::usage(format!("tol: must be a positive number, got {tol}")));
    }
    let base = ClassifyOptions::default();
    let fg = file.grids.as_ref();
    let grids = Grids {
        lambdas: common.lambdas.clone().or(fg.and_then(|g| g.lambdas.clone())).unwrap_or(base.lambdas),
        ns: common.ns.clone().or(fg.and_then(|g| g.ns.clone())).unwrap_or(base.ns),
        octaves: common.octaves.or(fg.and_then(|g| g.octaves)).unwrap_or(base.grid.t_max),
        per_octave: common.per_octave.or(fg.and_then(|g| g.per_octave)).unwrap_or(base.grid.per_octave),
    };
    if grids.lambdas.is_empty() || grids.lambdas.iter().any(|l| !l.is_finite()) {
        return Err(CliError::usage("grids.lambdas: need at least one finite value"));
    }
    if grids.ns.is_empty() {
        return Err(CliError::usage("grids.ns: need at least one order"));
    }
    LogGrid {
        t_max: grids.octaves,
        per_octave: grids.per_octave,
    }
    .validate()
    .map_err(|e| CliError::usage(format!("grids: {e}")))?;
    Ok(RunConfig {
        bell,
        window,
        tol,
        grids,
        format: common.format.or(file.format).unwrap_or_default(),
        output: common.output.clone().or(file.output.clone()),
    })
}

fn load_bell(choice: &BellChoice) -> CliResult<BellProfile> {
    match choice {
        BellChoice::Shannon => Ok(make_shannon()),
        BellChoice::Meyer => Ok(make_meyer()),
        BellChoice::SplineFile { path } => {
            let text = fs::read_to_string(path).map_err(|e| CliError { code: EXIT_IO, msg: format!("profile {}: {e}", path.display()) })?;
            BellProfile::from_json(&text).map_err(|e| CliError::usage(format!("bell.path: {e}")))
        }
    }
}

impl RunConfig {
    fn quad(&self) -> QuadSpec {
        QuadSpec::with_tol(self.tol)
    }

    fn grid(&self) -> LogGrid {
        LogGrid {
            t_max: self.grids.octaves,
            per_octave: self.grids.per_octave,
        }
    }

    fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            lambdas: self.grids.lambdas.clone(),
            ns: self.grids.ns.clone(),
            grid: self.grid(),
            ..ClassifyOptions::default()
        }
    }
}

struct Input {
    function: SampledFunction,
    probe: Option<IndexWindow>,
}

fn resolve_input(arg: &str) -> CliResult<Input> {
    if let Some(rest) = arg.strip_prefix("point-mass:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let parsed = match parts.as_slice() {
            [a, p] => a.parse::<f64>().ok().zip(p.parse::<u32>().ok()),
            [a] => a.parse::<f64>().ok().map(|a| (a, 0)),
            _ => None,
        };
        let (a, p) = parsed.ok_or_else(|| CliError::usage(format!("input: expected point-mass:A:P, got '{arg}'")))?;
        return Ok(Input {
            function: SampledFunction::point_mass(a, p)?,
            probe: None,
        });
    }
    match corpus::lookup(arg) {
        Ok(e) => Ok(Input {
            function: e.function,
            probe: Some(e.probe_window),
        }),
        Err(err) => {
            let path = Path::new(arg);
            if path.is_file() {
                Ok(Input {
                    function: samples_function(path)?,
                    probe: None,
                })
            } else {
                Err(err.into())
            }
        }
    }
}

/// Piecewise-linear function through the rows of a `x,re[,im]` CSV, zero outside the sampled range.
fn samples_function(path: &Path) -> CliResult<SampledFunction> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError { code: EXIT_IO, msg: format!("{}: {e}", path.display()) })?;
    let headers = rd.headers().map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (ix, ire) = col("x")
        .zip(col("re"))
        .ok_or_else(|| CliError::usage(format!("{}: header must contain x and re", path.display())))?;
    let iim = col("im");
    let mut xs = vec![];
    let mut vs = vec![];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let num = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::usage(format!("{}: row {}: bad number", path.display(), line + 2)))
        };
        xs.push(num(ix)?);
        vs.push(Complex64::new(num(ire)?, iim.map(num).transpose()?.unwrap_or(0.0)));
    }
    if xs.len() < 2 || !(xs[0] > 0.0) || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::usage(format!("{}: need at least two strictly increasing positive x values", path.display())));
    }
    let support = Interval::new(xs[0], xs[xs.len() - 1]);
    let real = vs.iter().all(|v| v.im == 0.0);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "samples".into());
    let bps = xs.clone();
    let f = SampledFunction::piecewise(
        name,
        move |x| {
            if x < xs[0] || x > xs[xs.len() - 1] {
                return Complex64::new(0.0, 0.0);
            }
            let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            vs[i - 1] * (1.0 - t) + vs[i] * t
        },
        bps,
    )
    .with_support(support);
    Ok(if real { f } else { f.complex_valued() })
}

fn init_threads(n: Option<usize>) -> CliResult<()> {
    let n = match n {
        Some(n) => Some(n),
        None => match std::env::var("PSI_LAB_THREADS") {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| CliError::usage(format!("PSI_LAB_THREADS: not a thread count: '{s}'")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::usage("threads: must be at least 1"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// `path,value` rows for results without a native table layout.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn flat_csv(result: &Value) -> CliResult<Vec<u8>> {
    let mut rows = vec![];
    flatten("", result, &mut rows);
    let mut wr = csv::Writer::from_writer(vec![]);
    let io = |e: csv::Error| CliError { code: EXIT_IO, msg: e.to_string() };
    wr.write_record(["path", "value"]).map_err(io)?;
    for (p, v) in rows {
        wr.write_record([p, v]).map_err(io)?;
    }
    wr.into_inner().map_err(|e| CliError { code: EXIT_IO, msg: e.to_string() })
}

struct Output {
    result: Value,
    csv: Option<Vec<u8>>,
    code: i32,
}

fn emit(cfg: &RunConfig, command: Value, out: Output) -> CliResult<i32> {
    let doc = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({"command": command, "config": cfg, "result": out.result}))
                .map_err(|e| CliError { code: EXIT_IO, msg: e.to_string() })?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let header = serde_json::to_string(&json!({"command": command, "config": cfg})).map_err(|e| CliError { code: EXIT_IO, msg: e.to_string() })?;
            let mut buf = format!("# {header}\n").into_bytes();
            match out.csv {
                Some(body) => buf.extend(body),
                None => buf.extend(flat_csv(&out.result)?),
            }
            buf
        }
    };
    match &cfg.output {
        Some(p) => fs::write(p, doc).map_err(|e| CliError { code: EXIT_IO, msg: format!("{}: {e}", p.display()) })?,
        None => std::io::stdout().write_all(&doc)?,
    }
    Ok(out.code)
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError { code: EXIT_IO, msg: e.to_string() })
}

fn window(jmin: i32, jmax: i32, kmax: u32) -> IndexWindow {
    IndexWindow::new(jmin, jmax, kmax).expect("static window")
}

const DEFAULT_WINDOW: (i32, i32, u32) = (-6, 6, 64);

fn probe_or_default(input: &Input) -> IndexWindow {
    input.probe.unwrap_or_else(|| window(DEFAULT_WINDOW.0, DEFAULT_WINDOW.1, DEFAULT_WINDOW.2))
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    }
}

fn execute(cli: Cli) -> CliResult<i32> {
    let common = match &cli.command {
        Command::Transform { common, .. }
        | Command::Classify { common, .. }
        | Command::Verify { common, .. }
        | Command::Gram { common, .. }
        | Command::Design { common, .. }
        | Command::Reconstruct { common, .. }
        | Command::Corpus { common } => common,
    };
    let file = load_file(common.config.as_deref())?;
    init_threads(cli.threads.or(file.threads))?;
    match &cli.command {
        Command::Transform { common, input } => cmd_transform(common, &file, input),
        Command::Classify { common, input } => cmd_classify(common, &file, input),
        Command::Verify {
            common,
            lemma,
            n,
            lambda,
            input,
            phi,
            row,
        } => cmd_verify(common, &file, *lemma, *n, *lambda, input.as_deref(), phi.as_deref(), *row),
        Command::Gram { common, entries } => cmd_gram(common, &file, *entries),
        Command::Design { common, design } => cmd_design(common, &file, design),
        Command::Reconstruct {
            common,
            input,
            k_lo,
            k_hi,
            samples,
        } => cmd_reconstruct(common, &file, input, *k_lo, *k_hi, *samples),
        Command::Corpus { common } => cmd_corpus(common, &file),
    }
}

fn cmd_transform(common: &Common, file: &FileConfig, input: &str) -> CliResult<i32> {
    let inp = resolve_input(input)?;
    let cfg = resolve(
        common,
        file,
        Defaults {
            bell: BellChoice::Meyer,
            window: probe_or_default(&inp),
        },
    )?;
    let b = load_bell(&cfg.bell)?;
    let c = analyze(&inp.function, &b, cfg.window, &cfg.quad())?;
    let mut csv_body = vec![];
    c.write_csv(&mut csv_body)?;
    let code = if c.is_converged() { EXIT_OK } else { EXIT_NUMERIC };
    emit(
        &cfg,
        json!({"name": "transform", "input": input}),
        Output {
            result: c.to_json_value()?,
            csv: Some(csv_body),
            code,
        },
    )
}

fn cmd_classify(common: &Common, file: &FileConfig, input: &str) -> CliResult<i32> {
    let inp = resolve_input(input)?;
    let cfg = resolve(
        common,
        file,
        Defaults {
            bell: BellChoice::Meyer,
            window: probe_or_default(&inp),
        },
    )?;
    let b = load_bell(&cfg.bell)?;
    let opts = cfg.classify_options();
    let fv = classify_function(&inp.function, &opts)?;
    let c = analyze(&inp.function, &b, cfg.window, &cfg.quad())?;
    let cv = classify_coeffs(&c, &opts);
    let coh = coherence_check(&fv, &cv);
    let mut code = EXIT_OK;
    if !coh.consistent || !c.is_converged() {
        code = EXIT_NUMERIC;
    }
    let mut csv_body = vec![];
    {
        let mut wr = csv::Writer::from_writer(&mut csv_body);
        let io = |e: csv::Error| CliError { code: EXIT_IO, msg: e.to_string() };
        let mut head = vec!["side"];
        head.extend(crate::classify::Flags::NAMES);
        wr.write_record(&head).map_err(io)?;
        for (side, v) in [("function", &fv), ("coefficients", &cv)] {
            let mut rec = vec![side.to_string()];
            rec.extend(v.flags.as_array().iter().map(|b| b.to_string()));
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush()?;
    }
    emit(
        &cfg,
        json!({"name": "classify", "input": input}),
        Output {
            result: json!({
                "flags": fv.flags.set_names(),
                "function": to_value(&fv)?,
                "coefficients": to_value(&cv)?,
                "coherent": coh.consistent,
                "violations": coh.violations,
                "nonconvergent": c.nonconvergent.len(),
            }),
            csv: Some(csv_body),
            code,
        },
    )
}

fn bound_code(reports: &[&BoundReport]) -> i32 {
    if reports.iter().any(|r| r.status == BoundStatus::Violated) {
        EXIT_VIOLATED
    } else {
        EXIT_OK
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    common: &Common,
    file: &FileConfig,
    lemma: Lemma,
    n: usize,
    lambda: Option<f64>,
    input: Option<&str>,
    phi: Option<&str>,
    row: RowArg,
) -> CliResult<i32> {
    let mut command = json!({"name": "verify", "lemma": lemma, "n": n});
    match lemma {
        Lemma::One => {
            let input = input.unwrap_or("bump12");
            let inp = resolve_input(input)?;
            let cfg = resolve(
                common,
                file,
                Defaults {
                    bell: BellChoice::Meyer,
                    window: window(-4, 4, 128),
                },
            )?;
            let b = load_bell(&cfg.bell)?;
            let r = verify_lemma1(&inp.function, &b, cfg.window, n, &cfg.quad())?;
            command["input"] = json!(input);
            let code = bound_code(&[&r]);
            emit(&cfg, command, Output { result: to_value(&r)?, csv: None, code })
        }
        Lemma::Two => {
            let cfg = resolve(
                common,
                file,
                Defaults {
                    bell: BellChoice::Meyer,
                    window: window(-3, 3, 64),
                },
            )?;
            let b = load_bell(&cfg.bell)?;
            let km = cfg.window.k_max as i64;
            let values: Vec<Complex64> = (-km..=km)
                .map(|k| match row {
                    RowArg::E0 => Complex64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0),
                    RowArg::Poly4 => Complex64::new((1.0 + k.abs() as f64).powi(-4), 0.0),
                })
                .collect();
            let r = verify_lemma2(&values, &b, (cfg.window.j_min, cfg.window.j_max), n)?;
            command["row"] = json!(row);
            let code = bound_code(&[&r]);
            emit(&cfg, command, Output { result: to_value(&r)?, csv: None, code })
        }
        Lemma::IsoXy => {
            let lambda = lambda.ok_or_else(|| CliError::usage("lambda: required for --lemma isoXY"))?;
            let input = input.unwrap_or("bump12");
            let inp = resolve_input(input)?;
            let cfg = resolve(
                common,
                file,
                Defaults {
                    bell: BellChoice::Meyer,
                    window: probe_or_default(&inp),
                },
            )?;
            let b = load_bell(&cfg.bell)?;
            let a = verify_iso_xy_a(&inp.function, &b, cfg.window, lambda, n, cfg.grid(), &cfg.quad())?;
            let c = analyze(&inp.function, &b, cfg.window, &cfg.quad())?;
            let bb = verify_iso_xy_b(&c, &b, lambda, n, cfg.grid())?;
            command["input"] = json!(input);
            command["lambda"] = json!(lambda);
            let mut code = bound_code(&[&a, &bb]);
            if code == EXIT_OK && !c.is_converged() {
                code = EXIT_NUMERIC;
            }
            emit(
                &cfg,
                command,
                Output {
                    result: json!({"function_to_coefficients": to_value(&a)?, "coefficients_to_function": to_value(&bb)?}),
                    csv: None,
                    code,
                },
            )
        }
        Lemma::Duality => {
            let input = input.unwrap_or("point-mass:1.5:0");
            let phi_id = phi.unwrap_or("indicator12");
            let f = resolve_input(input)?;
            let p = resolve_input(phi_id)?;
            let cfg = resolve(
                common,
                file,
                Defaults {
                    bell: BellChoice::Shannon,
                    window: window(-2, 2, 256),
                },
            )?;
            let b = load_bell(&cfg.bell)?;
            let r = verify_duality(&f.function, &p.function, &b, cfg.window, &cfg.quad())?;
            command["input"] = json!(input);
            command["phi"] = json!(phi_id);
            let code = if r.status == "refused" { EXIT_REFUSED } else { EXIT_OK };
            emit(&cfg, command, Output { result: to_value(&r)?, csv: None, code })
        }
    }
}

fn cmd_gram(common: &Common, file: &FileConfig, entries: bool) -> CliResult<i32> {
    let cfg = resolve(
        common,
        file,
        Defaults {
            bell: BellChoice::Shannon,
            window: window(-4, 4, 16),
        },
    )?;
    let b = load_bell(&cfg.bell)?;
    let g = gram(&b, cfg.window, &cfg.quad())?;
    let idx: Vec<_> = cfg.window.indices().collect();
    let mut csv_body = vec![];
    {
        let mut wr = csv::Writer::from_writer(&mut csv_body);
        let io = |e: csv::Error| CliError { code: EXIT_IO, msg: e.to_string() };
        wr.write_record(["j", "k", "j2", "k2", "re", "im"]).map_err(io)?;
        for &p in &idx {
            for &q in &idx {
                let z = g.get(p, q);
                wr.write_record(&[p.j.to_string(), p.k.to_string(), q.j.to_string(), q.k.to_string(), format!("{:e}", z.re), format!("{:e}", z.im)])
                    .map_err(io)?;
            }
        }
        wr.flush()?;
    }
    let mut result = json!({
        "dim": g.dim(),
        "max_off_diagonal": g.max_off_diagonal(),
        "max_diagonal_defect": g.max_diagonal_defect(),
        "max_identity_defect": g.max_identity_defect(),
        "nonconvergent": g.nonconvergent,
    });
    if entries {
        result["entries"] = json!(g.entries.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>());
    }
    let code = if g.nonconvergent > 0 { EXIT_NUMERIC } else { EXIT_OK };
    emit(
        &cfg,
        json!({"name": "gram", "entries": entries}),
        Output {
            result,
            csv: Some(csv_body),
            code,
        },
    )
}

fn cmd_design(common: &Common, file: &FileConfig, args: &DesignArgs) -> CliResult<i32> {
    let cfg = resolve(
        common,
        file,
        Defaults {
            bell: BellChoice::Shannon,
            window: window(DEFAULT_WINDOW.0, DEFAULT_WINDOW.1, DEFAULT_WINDOW.2),
        },
    )?;
    let init = load_bell(&cfg.bell)?;
    let mut dc = match init.kind() {
        BellKind::Spline(_) => DesignConfig::for_init(&init),
        _ => DesignConfig::default(),
    };
    let fd = file.design.as_ref();
    if let Some(s) = fd.and_then(|d| d.support) {
        dc.support = s;
    }
    dc.support.0 = args.support_lo.unwrap_or(dc.support.0);
    dc.support.1 = args.support_hi.unwrap_or(dc.support.1);
    dc.n_coeffs = args.n_coeffs.or(fd.and_then(|d| d.n_coeffs)).unwrap_or(dc.n_coeffs);
    dc.degree = args.degree.or(fd.and_then(|d| d.degree)).unwrap_or(dc.degree);
    dc.mu = args.mu.or(fd.and_then(|d| d.mu)).unwrap_or(dc.mu);
    dc.max_iters = args.max_iters.or(fd.and_then(|d| d.max_iters)).unwrap_or(dc.max_iters);
    dc.samples_per_unit = args.samples_per_unit.or(fd.and_then(|d| d.samples_per_unit)).unwrap_or(dc.samples_per_unit);
    dc.validate().map_err(|e| CliError::usage(format!("design: {e}")))?;
    let res = design(&init, &dc)?;
    if let Some(p) = &args.profile_out {
        if res.status != DesignStatus::InfeasibleSupport {
            fs::write(p, res.profile.to_json()?).map_err(|e| CliError { code: EXIT_IO, msg: format!("{}: {e}", p.display()) })?;
        }
    }
    let code = match res.status {
        DesignStatus::Converged => EXIT_OK,
        DesignStatus::Stalled | DesignStatus::MaxIterations => EXIT_NUMERIC,
        DesignStatus::InfeasibleSupport => EXIT_REFUSED,
    };
    let rv = &res.residuals;
    let mut csv_body = vec![];
    res.write_trace_csv(&mut csv_body)?;
    let result = json!({
        "status": res.status,
        "explanation": res.explanation,
        "initial_objective": res.initial_objective(),
        "final_objective": res.final_objective(),
        "residuals": {
            "a_inf": rv.a_inf(),
            "b_inf": (1..=rv.b.len()).map(|r| rv.b_inf(r)).collect::<Vec<_>>(),
            "c_inf": rv.c_inf(),
        },
        "profile": to_value(&res.profile.to_file())?,
        "trace": to_value(&res.trace)?,
    });
    emit(
        &cfg,
        json!({"name": "design", "design": to_value(&dc)?, "profile_out": args.profile_out}),
        Output {
            result,
            csv: Some(csv_body),
            code,
        },
    )
}

fn cmd_reconstruct(common: &Common, file: &FileConfig, input: &str, k_lo: Option<f64>, k_hi: Option<f64>, samples: usize) -> CliResult<i32> {
    let inp = resolve_input(input)?;
    let cfg = resolve(
        common,
        file,
        Defaults {
            bell: BellChoice::Meyer,
            window: probe_or_default(&inp),
        },
    )?;
    if samples < 2 {
        return Err(CliError::usage("samples: need at least 2"));
    }
    let b = load_bell(&cfg.bell)?;
    let f = &inp.function;
    let sup = f.support().unwrap_or(Interval::new(1.0, 2.0));
    let k = Interval::new(k_lo.unwrap_or(sup.lo), k_hi.unwrap_or(sup.hi));
    k.check_compact_positive().map_err(|e| CliError::usage(format!("compact: {e}")))?;
    let err = reconstruction_error(f, &b, cfg.window, k, &cfg.quad())?;
    let c = analyze(f, &b, cfg.window, &cfg.quad())?;
    let xs: Vec<f64> = (0..samples).map(|i| k.lo + (k.hi - k.lo) * i as f64 / (samples - 1) as f64).collect();
    let fx: Vec<Complex64> = xs.iter().map(|&x| f.value(x)).collect::<crate::Result<_>>()?;
    let sx: Vec<Complex64> = xs.iter().map(|&x| synthesize(&c, &b, x)).collect();
    let mut csv_body = vec![];
    {
        let mut wr = csv::Writer::from_writer(&mut csv_body);
        let io = |e: csv::Error| CliError { code: EXIT_IO, msg: e.to_string() };
        wr.write_record(["x", "f_re", "f_im", "synth_re", "synth_im"]).map_err(io)?;
        for i in 0..samples {
            wr.write_record(&[
                format!("{:e}", xs[i]),
                format!("{:e}", fx[i].re),
                format!("{:e}", fx[i].im),
                format!("{:e}", sx[i].re),
                format!("{:e}", sx[i].im),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
    }
    let code = if err.converged && c.is_converged() { EXIT_OK } else { EXIT_NUMERIC };
    emit(
        &cfg,
        json!({"name": "reconstruct", "input": input, "compact": [k.lo, k.hi], "samples": samples}),
        Output {
            result: json!({
                "l2_error": to_value(&err)?,
                "curves": {
                    "x": xs,
                    "f": fx.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
                    "synthesized": sx.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
                },
            }),
            csv: Some(csv_body),
            code,
        },
    )
}

fn cmd_corpus(common: &Common, file: &FileConfig) -> CliResult<i32> {
    let cfg = resolve(
        common,
        file,
        Defaults {
            bell: BellChoice::Meyer,
            window: window(DEFAULT_WINDOW.0, DEFAULT_WINDOW.1, DEFAULT_WINDOW.2),
        },
    )?;
    let m = corpus::manifest();
    let mut csv_body = vec![];
    {
        let mut wr = csv::Writer::from_writer(&mut csv_body);
        let io = |e: csv::Error| CliError { code: EXIT_IO, msg: e.to_string() };
        wr.write_record(["id", "description", "expected", "jmin", "jmax", "kmax"]).map_err(io)?;
        for e in &m {
            wr.write_record(&[
                e.id.clone(),
                e.description.clone(),
                e.expected.join(" "),
                e.probe_window.j_min.to_string(),
                e.probe_window.j_max.to_string(),
                e.probe_window.k_max.to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
    }
    emit(
        &cfg,
        json!({"name": "corpus"}),
        Output {
            result: to_value(&m)?,
            csv: Some(csv_body),
            code: EXIT_OK,
        },
    )
}
