//! `torussym` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use torussym::analyzer::{AnalysisOptions, TOOL_VERSION};
use torussym::condition_d::{condition_d_verdict, CoordinateConditionD, Thresholds};
use torussym::{
    analyze, check_complete_reinhardt, gram, norm_sequence, parse_domain_config, verify_invariance, DomainSpec,
    MethodRequest, MomentOptions, NormSequence, Shape, TorusAction,
};

#[derive(Parser)]
#[command(name = "torussym", version, about = "Detect torus symmetries of domains from Bergman-space moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: Gram data, detected action, classification, Condition D.
    Analyze(AnalyzeArgs),
    /// Truncated Gram data of monomial moments.
    Moments(MomentsArgs),
    /// Norm sequence and Condition D verdict for one coordinate.
    #[command(name = "condition-d")]
    ConditionD(ConditionDArgs),
    /// Sampled check that a torus action maps the domain into itself.
    #[command(name = "verify-invariance")]
    VerifyInvariance(InvarianceArgs),
    /// Sampled check of star-shapedness under polydisk multipliers.
    #[command(name = "check-complete-reinhardt")]
    CheckCompleteReinhardt(StarArgs),
}

#[derive(Args)]
struct Common {
    /// Domain configuration file.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct MomentArgs {
    /// auto, mc or quad.
    #[arg(long, default_value = "auto")]
    method: String,
    /// Monte Carlo proposals.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    /// Cut-off radius for unbounded coordinates under Monte Carlo.
    #[arg(long)]
    truncation: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    moments: MomentArgs,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long = "policy-abstol")]
    policy_abstol: Option<f64>,
    #[arg(long = "policy-sigma")]
    policy_sigma: Option<f64>,
    #[arg(long, default_value_t = 40)]
    terms: usize,
    /// Samples for the star-shapedness check.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    moments: MomentArgs,
    #[arg(long, default_value_t = 3)]
    degree: u32,
}

#[derive(Args)]
struct ConditionDArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    moments: MomentArgs,
    /// Index of the exp(-|z1|^(1/2^k)) family; replaces `--domain` or overrides its k.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 40)]
    terms: usize,
    #[arg(long, default_value_t = 1)]
    coordinate: usize,
}

#[derive(Args)]
struct InvarianceArgs {
    #[command(flatten)]
    common: Common,
    /// Columns of A, e.g. "1,0;0,1".
    #[arg(long)]
    action: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Args)]
struct StarArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Bad configuration or flag values: exit 2, message only.
    Config(String),
    /// Analysis failure after the output was written: exit 1.
    Analysis,
    /// I/O failure while writing results: exit 1.
    Io(String),
}

/// Metadata wrapped around every JSON result.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    tool_version: &'static str,
    command: &'a str,
    config_sha256: &'a str,
    seed: u64,
    budget: Option<u64>,
    samples: Option<usize>,
    result: Option<T>,
    error: Option<String>,
}

struct Loaded {
    spec: DomainSpec,
    sha256: String,
}

fn load_domain(path: Option<&Path>) -> Result<Loaded, Failure> {
    let path = path.ok_or_else(|| Failure::Config("--domain is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    from_text(&text, &path.display().to_string())
}

fn from_text(text: &str, origin: &str) -> Result<Loaded, Failure> {
    let spec = parse_domain_config(text).map_err(|e| Failure::Config(format!("{origin}: {e}")))?;
    Ok(Loaded {
        spec,
        sha256: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

fn moment_options(args: &MomentArgs, seed: u64) -> Result<MomentOptions, Failure> {
    let method: MethodRequest = args.method.parse().map_err(|e| Failure::Config(format!("--method: {e}")))?;
    if let Some(t) = args.truncation {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Config(format!("--truncation must be positive, got {t}")));
        }
    }
    Ok(MomentOptions {
        method,
        budget: args.budget,
        seed,
        truncation: args.truncation,
    })
}

/// Writes to a temporary sibling and renames it into place.
fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, content).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Emits an envelope; an error inside it yields exit code 1 after writing.
fn emit_envelope<T: Serialize>(common: &Common, env: &Envelope<'_, T>) -> Result<(), Failure> {
    if common.csv {
        return Err(Failure::Config(format!("'{}' has no CSV output", env.command)));
    }
    emit(common.out.as_deref(), &to_json(env)?)?;
    if let Some(e) = &env.error {
        eprintln!("error: {e}");
        Err(Failure::Analysis)
    } else {
        Ok(())
    }
}

fn run_analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let loaded = load_domain(args.common.domain.as_deref())?;
    let opts = AnalysisOptions {
        degree_bound: args.degree,
        moments: moment_options(&args.moments, args.common.seed)?,
        policy_abs_tol: args.policy_abstol,
        policy_sigma: args.policy_sigma,
        terms: args.terms,
        thresholds: Thresholds::default(),
        star_samples: args.samples,
    };
    let report = analyze(&loaded.spec, &opts);
    let error = report.error.clone();
    emit_envelope(
        &args.common,
        &Envelope {
            tool: "torussym",
            tool_version: TOOL_VERSION,
            command: "analyze",
            config_sha256: &loaded.sha256,
            seed: args.common.seed,
            budget: Some(args.moments.budget),
            samples: Some(args.samples),
            result: Some(report),
            error,
        },
    )
}

fn run_moments(args: &MomentsArgs) -> Result<(), Failure> {
    let loaded = load_domain(args.common.domain.as_deref())?;
    let opts = moment_options(&args.moments, args.common.seed)?;
    let result = gram(&loaded.spec, args.degree, &opts);
    if args.common.csv {
        let g = result.map_err(|e| {
            eprintln!("error: {e}");
            Failure::Analysis
        })?;
        let mut out = csv_preamble(&loaded.sha256, args.common.seed, args.moments.budget);
        out.push_str("alpha,beta,re,im,se,method,effort,tol\n");
        for i in 0..g.indices().len() {
            for j in 0..g.indices().len() {
                let e = g.get(i, j);
                let method = serde_json::to_value(e.method).map_err(|e| Failure::Io(e.to_string()))?;
                writeln!(
                    out,
                    "\"{}\",\"{}\",{:e},{:e},{:e},{},{},{:e}",
                    g.indices()[i],
                    g.indices()[j],
                    e.value.re,
                    e.value.im,
                    e.std_error,
                    method.as_str().unwrap_or_default(),
                    e.effort,
                    e.abs_tolerance
                )
                .expect("string write");
            }
        }
        return emit(args.common.out.as_deref(), &out);
    }
    let (result, error) = match result {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    emit_envelope(
        &args.common,
        &Envelope {
            tool: "torussym",
            tool_version: TOOL_VERSION,
            command: "moments",
            config_sha256: &loaded.sha256,
            seed: args.common.seed,
            budget: Some(args.moments.budget),
            samples: None,
            result,
            error,
        },
    )
}

fn csv_preamble(sha: &str, seed: u64, budget: u64) -> String {
    format!("# tool=torussym {TOOL_VERSION}\n# config_sha256={sha}\n# seed={seed}\n# budget={budget}\n")
}

#[derive(Serialize)]
struct ConditionDResult {
    sequence: NormSequence,
    verdict: CoordinateConditionD,
}

fn run_condition_d(args: &ConditionDArgs) -> Result<(), Failure> {
    let loaded = match (args.common.domain.as_deref(), args.k) {
        (None, Some(k)) => from_text(&format!("type = exp_profile\nk = {k}\n"), "--k")?,
        (path, k) => {
            let mut loaded = load_domain(path)?;
            if let Some(k) = k {
                if !matches!(loaded.spec.shape(), Shape::ExpProfileFamily { .. }) {
                    return Err(Failure::Config("--k applies only to exp_profile domains".into()));
                }
                loaded.spec = DomainSpec::exp_profile(k).map_err(|e| Failure::Config(format!("--k: {e}")))?;
                loaded.sha256 = hex::encode(Sha256::digest(format!("{}\nk = {k}\n", loaded.sha256).as_bytes()));
            }
            loaded
        }
    };
    if args.coordinate == 0 || args.coordinate > loaded.spec.dim() {
        return Err(Failure::Config(format!(
            "--coordinate must lie in 1..={}, got {}",
            loaded.spec.dim(),
            args.coordinate
        )));
    }
    let opts = moment_options(&args.moments, args.common.seed)?;
    let bounded = loaded.spec.bounded_coords()[args.coordinate - 1];
    let result = norm_sequence(&loaded.spec, args.coordinate, args.terms, &opts).map(|sequence| {
        let verdict = condition_d_verdict(&sequence, bounded, &Thresholds::default());
        ConditionDResult { sequence, verdict }
    });
    if args.common.json {
        let (result, error) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        return emit_envelope(
            &args.common,
            &Envelope {
                tool: "torussym",
                tool_version: TOOL_VERSION,
                command: "condition-d",
                config_sha256: &loaded.sha256,
                seed: args.common.seed,
                budget: Some(args.moments.budget),
                samples: None,
                result,
                error,
            },
        );
    }
    let mut out = csv_preamble(&loaded.sha256, args.common.seed, args.moments.budget);
    match result {
        Ok(r) => {
            let verdict = serde_json::to_value(r.verdict.verdict).map_err(|e| Failure::Io(e.to_string()))?;
            writeln!(out, "# coordinate={}", args.coordinate).expect("string write");
            writeln!(out, "# source={}", serde_json::to_value(r.sequence.source).map_err(|e| Failure::Io(e.to_string()))?.as_str().unwrap_or_default()).expect("string write");
            writeln!(out, "# verdict={}", verdict.as_str().unwrap_or_default()).expect("string write");
            writeln!(out, "# heuristic={}", r.verdict.heuristic).expect("string write");
            if let Some(fit) = r.verdict.fit {
                writeln!(out, "# fitted_p={}", fit.p).expect("string write");
                writeln!(out, "# fitted_p_std_error={}", fit.std_error).expect("string write");
                writeln!(out, "# fit_window={}..={}", fit.window_start, fit.window_end).expect("string write");
            }
            out.push_str(&r.sequence.to_csv());
            emit(args.common.out.as_deref(), &out)
        }
        Err(e) => {
            writeln!(out, "# error={e}").expect("string write");
            out.push_str("k,norm,a_k,partial_sum\n");
            emit(args.common.out.as_deref(), &out)?;
            eprintln!("error: {e}");
            Err(Failure::Analysis)
        }
    }
}

fn run_invariance(args: &InvarianceArgs) -> Result<(), Failure> {
    let loaded = load_domain(args.common.domain.as_deref())?;
    let action = TorusAction::parse_columns(&args.action).map_err(|e| Failure::Config(format!("--action: {e}")))?;
    if action.n() != loaded.spec.dim() {
        return Err(Failure::Config(format!(
            "--action has {} rows but the domain has dimension {}",
            action.n(),
            loaded.spec.dim()
        )));
    }
    let (result, error) = match verify_invariance(&loaded.spec, &action, args.samples, args.common.seed) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    emit_envelope(
        &args.common,
        &Envelope {
            tool: "torussym",
            tool_version: TOOL_VERSION,
            command: "verify-invariance",
            config_sha256: &loaded.sha256,
            seed: args.common.seed,
            budget: None,
            samples: Some(args.samples),
            result,
            error,
        },
    )
}

fn run_star(args: &StarArgs) -> Result<(), Failure> {
    let loaded = load_domain(args.common.domain.as_deref())?;
    let (result, error) = match check_complete_reinhardt(&loaded.spec, args.samples, args.common.seed) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    emit_envelope(
        &args.common,
        &Envelope {
            tool: "torussym",
            tool_version: TOOL_VERSION,
            command: "check-complete-reinhardt",
            config_sha256: &loaded.sha256,
            seed: args.common.seed,
            budget: None,
            samples: Some(args.samples),
            result,
            error,
        },
    )
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("TORUSSYM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Config(format!("TORUSSYM_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Moments(a) => run_moments(a),
        Command::ConditionD(a) => run_condition_d(a),
        Command::VerifyInvariance(a) => run_invariance(a),
        Command::CheckCompleteReinhardt(a) => run_star(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Analysis) => ExitCode::from(1),
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
