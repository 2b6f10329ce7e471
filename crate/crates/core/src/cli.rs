//! Command-line front end. Exit codes: 0 success, 1 usage/I-O/parse
//! failure, 2 assumption violation, 3 singular solve.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{relative_error_curve, ErrorPoint};
use crate::barycentric::Method;
use crate::error::Error;
use crate::heuristics::{self, FrequencySample, SupportStrategy, DEFAULT_MULTIPLIER};
use crate::io::{self, ModelFile, Provenance};
use crate::linalg::C64;
use crate::loewner::{self, FitOptions, InterpolationData};
use crate::model::Model;
use crate::synth::{self, DampingKind, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "sobary", version, about = "Second-order barycentric fitting of frequency-response data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a sample table.
    Fit(FitArgs),
    /// Evaluate a model file on a frequency grid.
    Eval(EvalArgs),
    /// Run the assumption checker on the data a fit would use.
    Check(DataArgs),
    /// Generate a synthetic system and its samples.
    Synth(SynthArgs),
    /// Fit several methods on the same data and tabulate their error curves.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, default_value = "so-k")]
    pub method: Method,
    #[arg(long)]
    pub input: PathBuf,
    /// Model order r.
    #[arg(long, conflicts_with = "auto_order")]
    pub order: Option<usize>,
    /// Pick r from the local extrema of |H| (the default).
    #[arg(long)]
    pub auto_order: bool,
    /// const:<re>,<im> | mult:<re>,<im> | reflect:<rho> | file:<path>
    #[arg(long)]
    pub support: Option<String>,
    /// Close the data under conjugation and return a real model.
    #[arg(long)]
    pub realify: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub error_curve: Option<PathBuf>,
    /// Fit even if the assumption checker reports hard findings.
    #[arg(long)]
    pub skip_checks: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluate at the points of this sample table.
    #[arg(long, conflicts_with = "grid")]
    pub input: Option<PathBuf>,
    /// <omega_min>:<omega_max>:<count>, log-spaced.
    #[arg(long)]
    pub grid: Option<String>,
    /// Output sample table (stdout if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub order: usize,
    /// none | proportional:<alpha>,<beta> | spd:<scale>
    #[arg(long, default_value = "none")]
    pub damping: String,
    #[arg(long, default_value_t = 1.0)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative Gaussian noise added to the samples.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the ground-truth model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated method list.
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    pub methods: Vec<Method>,
    #[arg(long, conflicts_with = "auto_order")]
    pub order: Option<usize>,
    #[arg(long)]
    pub auto_order: bool,
    #[arg(long)]
    pub support: Option<String>,
    #[arg(long)]
    pub realify: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn pair(text: &str, what: &str) -> CliResult<(f64, f64)> {
    let bad = || Failure::Usage(format!("{what} expects <a>,<b>, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn read_points(path: &str) -> CliResult<Vec<C64>> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parse = |f: &str| {
            f.parse::<f64>().map_err(|_| Error::Parse { line: k + 1, message: format!("cannot parse {f:?}") })
        };
        match fields.as_slice() {
            [re] => out.push(C64::new(parse(re)?, 0.0)),
            [re, im] => out.push(C64::new(parse(re)?, parse(im)?)),
            _ => return Err(Error::Parse { line: k + 1, message: "expected <re> [<im>]".into() }.into()),
        }
    }
    Ok(out)
}

/// Support points for `method` from the `--support` flag.
fn support_points(spec: Option<&str>, method: Method, data: &InterpolationData, realify: bool) -> CliResult<Option<Vec<C64>>> {
    if !method.needs_support() {
        return match spec {
            Some(_) => Err(Failure::Usage(format!("{method} takes no support points"))),
            None => Ok(None),
        };
    }
    let conj = |base: C64| -> Vec<C64> {
        data.left_points().iter().map(|l| if realify && l.im < 0.0 { base.conj() } else { base }).collect()
    };
    let points = match spec.map(|s| s.split_once(':').unwrap_or((s, ""))) {
        None => heuristics::make_support_points(
            &SupportStrategy::ConstantMultiple { alpha: DEFAULT_MULTIPLIER, conjugate_pairs: realify },
            data,
        )?,
        Some(("const", rest)) => {
            let (re, im) = pair(rest, "const")?;
            conj(C64::new(re, im))
        }
        Some(("mult", rest)) => {
            let (re, im) = pair(rest, "mult")?;
            heuristics::make_support_points(
                &SupportStrategy::ConstantMultiple { alpha: C64::new(re, im), conjugate_pairs: realify },
                data,
            )?
        }
        Some(("reflect", rest)) => {
            let rho = rest.trim().parse().map_err(|_| Failure::Usage(format!("reflect expects a number, got {rest:?}")))?;
            heuristics::make_support_points(&SupportStrategy::ConjugateReflected { rho }, data)?
        }
        Some(("file", rest)) => {
            heuristics::make_support_points(&SupportStrategy::UserSupplied(read_points(rest)?), data)?
        }
        Some((tag, _)) => return Err(Failure::Usage(format!("unknown support strategy {tag:?}"))),
    };
    Ok(Some(points))
}

/// Interpolation data exactly as the fit sees it.
pub fn build_data(
    samples: &[FrequencySample],
    method: Method,
    order: Option<usize>,
    realify: bool,
) -> crate::error::Result<InterpolationData> {
    let on_axis = samples.iter().all(|s| s.is_on_axis() && s.omega() >= 0.0);
    if !on_axis {
        // General points: alternate in file order.
        let take = order.map_or(samples.len() / 2 * 2, |r| 2 * r);
        if take == 0 || take > samples.len() {
            return Err(Error::InsufficientData(format!("{} samples cannot provide {take} points", samples.len())));
        }
        let (mut lp, mut lv, mut rp, mut rv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (k, s) in samples[..take].iter().enumerate() {
            if k % 2 == 0 {
                lp.push(s.s);
                lv.push(s.value);
            } else {
                rp.push(s.s);
                rv.push(s.value);
            }
        }
        return InterpolationData::new(lp, lv, rp, rv);
    }
    if realify && method != Method::ZeroDamping {
        let half = match order {
            Some(r) if r % 2 == 1 => {
                return Err(Error::InvalidData(format!("--realify needs an even order (conjugate pairs), got {r}")))
            }
            Some(r) => Some(r / 2),
            None => None,
        };
        let data = heuristics::select_interpolation_points(samples, half)?;
        return heuristics::close_under_conjugation(&data);
    }
    heuristics::select_interpolation_points(samples, order)
}

fn prepare(args: &DataArgs) -> CliResult<(Vec<FrequencySample>, InterpolationData, Option<Vec<C64>>)> {
    let samples = io::read_samples(&args.input)?;
    let data = build_data(&samples, args.method, args.order, args.realify)?;
    let support = support_points(args.support.as_deref(), args.method, &data, args.realify)?;
    Ok((samples, data, support))
}

fn usable_for_curve(samples: &[FrequencySample]) -> Vec<FrequencySample> {
    samples.iter().filter(|s| s.value.norm() > 0.0).copied().collect()
}

fn cmd_fit(args: &FitArgs) -> CliResult<i32> {
    let (samples, data, support) = prepare(&args.data)?;
    let options = FitOptions { realify: args.data.realify, check_assumptions: !args.skip_checks, ..FitOptions::default() };
    let fit = loewner::fit(args.data.method, &data, support.as_deref(), &options)?;
    let curve_samples = usable_for_curve(&samples);
    let report = fit.report.clone().with_error_curve(&fit.model, &curve_samples)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.output {
        let file = ModelFile {
            method: Some(args.data.method),
            model: fit.model.clone(),
            provenance: Provenance {
                lambda: fit.data.left_points().to_vec(),
                mu: fit.data.right_points().to_vec(),
                support: fit.support.clone(),
                cond_estimate: Some(report.cond_estimate),
            },
        };
        io::write_model(path, &file)?;
    }
    if let Some(path) = &args.report {
        io::write_report(path, &report)?;
    }
    if let Some(path) = &args.error_curve {
        io::write_error_curve(path, &report.error_curve)?;
    }
    println!(
        "{} order {}: max residual {:.3e}, condition {:.3e}, max rel. error {:.3e}, {} of {} poles stable",
        args.data.method,
        report.order,
        report.residual_max(),
        report.cond_estimate,
        report.errors.max,
        report.stable_count(),
        report.poles.len()
    );
    Ok(0)
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::Usage(format!("--grid expects <min>:<max>:<count>, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && n >= 1) {
        return Err(bad());
    }
    Ok(synth::log_grid(lo, hi, n))
}

fn cmd_eval(args: &EvalArgs) -> CliResult<i32> {
    let file = io::read_model(&args.model)?;
    let points: Vec<C64> = match (&args.input, &args.grid) {
        (Some(path), _) => io::read_samples(path)?.iter().map(|s| s.s).collect(),
        (None, Some(g)) => parse_grid(g)?.into_iter().map(|w| C64::new(0.0, w)).collect(),
        (None, None) => return Err(Failure::Usage("eval needs --input or --grid".into())),
    };
    let values = points
        .iter()
        .map(|&s| Ok(FrequencySample::new(s, file.model.eval(s)?)))
        .collect::<crate::error::Result<Vec<_>>>()?;
    match &args.output {
        Some(path) => io::write_samples(path, &values)?,
        None => print!("{}", io::samples_to_string(&values)),
    }
    Ok(0)
}

fn cmd_check(args: &DataArgs) -> CliResult<i32> {
    let (_, data, support) = prepare(args)?;
    let report = heuristics::check_assumptions(args.method, &data, support.as_deref());
    print!("{report}");
    Ok(if report.has_hard() { 2 } else { 0 })
}

fn parse_damping(text: &str) -> CliResult<DampingKind> {
    match text.split_once(':').unwrap_or((text, "")) {
        ("none", _) => Ok(DampingKind::None),
        ("proportional", rest) => {
            let (alpha, beta) = pair(rest, "proportional")?;
            Ok(DampingKind::Proportional { alpha, beta })
        }
        ("spd", rest) => {
            let scale = rest.parse().map_err(|_| Failure::Usage(format!("spd expects a scale, got {rest:?}")))?;
            Ok(DampingKind::RandomSpd { scale })
        }
        _ => Err(Failure::Usage(format!("unknown damping kind {text:?}"))),
    }
}

fn cmd_synth(args: &SynthArgs) -> CliResult<i32> {
    let spec = SynthSpec {
        order: args.order,
        damping: parse_damping(&args.damping)?,
        omega_min: args.omega_min,
        omega_max: args.omega_max,
        samples: args.samples,
        seed: args.seed,
    };
    let model = synth::random_so_system(&spec)?;
    let mut samples = synth::sample_tf(&model, &spec.grid())?;
    if let Some(sigma) = args.noise {
        samples = synth::perturb(&samples, sigma, args.seed.wrapping_add(1));
    }
    io::write_samples(&args.output, &samples)?;
    if let Some(path) = &args.model {
        io::write_model(path, &ModelFile { method: None, model: Model::from(model), provenance: Provenance::default() })?;
    }
    Ok(0)
}

/// Error curve of one method on the shared samples.
pub fn compare_one(
    samples: &[FrequencySample],
    method: Method,
    order: Option<usize>,
    support: Option<&str>,
    realify: bool,
) -> std::result::Result<Vec<ErrorPoint>, String> {
    let data = build_data(samples, method, order, realify).map_err(|e| e.to_string())?;
    let support = support_points(support, method, &data, realify).map_err(|f| match f {
        Failure::Usage(m) => m,
        Failure::Lib(e) => e.to_string(),
    })?;
    let options = FitOptions { realify, ..FitOptions::default() };
    let fit = loewner::fit(method, &data, support.as_deref(), &options).map_err(|e| e.to_string())?;
    relative_error_curve(&fit.model, samples).map_err(|e| e.to_string())
}

fn cmd_compare(args: &CompareArgs) -> CliResult<i32> {
    let samples = usable_for_curve(&io::read_samples(&args.input)?);
    let mut curves = Vec::new();
    let mut ok = 0;
    for &method in &args.methods {
        // Support flags only make sense for the methods that take support points.
        let support = if method.needs_support() { args.support.as_deref() } else { None };
        match compare_one(&samples, method, args.order, support, args.realify) {
            Ok(curve) => {
                ok += 1;
                curves.push(curve);
            }
            Err(msg) => {
                eprintln!("warning: {method} failed: {msg}");
                curves.push(samples.iter().map(|s| ErrorPoint { omega: s.omega(), eps_rel: f64::NAN }).collect());
            }
        }
    }
    let table = io::comparison_to_string(&args.methods, &curves);
    match &args.output {
        Some(path) => std::fs::write(path, table).map_err(Error::from)?,
        None => print!("{table}"),
    }
    Ok(if ok > 0 { 0 } else { 1 })
}
