use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use acr_scope::dynamics::ssa::{simulate_network, SsaOptions};
use acr_scope::equilibria::{detect_acr, AcrOptions};
use acr_scope::model::{parse_network, print_network, ReactionNetwork};
use acr_scope::multiscale::{
    audit_assumptions, build_scaled_system, render_discrete, render_reductions, AuditOptions, Averaging,
    ContinuousReduction, DiscreteReduction, ScalingError, ScalingSpec, Verdict,
};
use acr_scope::statistics::{StationaryOptions, StatisticsError};
use acr_scope::structural::analyze_structure;
use acr_scope::study::{render_summary, run_study_file, StudyError, StudyOverrides, StudyReport};

const DEFAULT_SEED: u64 = 20161101;

#[derive(Parser)]
#[command(name = "acr-scope", version, about = "Multiscale analysis of stochastic reaction networks with ACR")]
struct Cli {
    /// Master seed for sampling and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file, or directory for `study`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Average continuous rates against the stationary distribution of the
    /// discrete system instead of its complex-balanced equilibrium.
    #[arg(long = "remark-3-7", global = true)]
    stationary: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural report and ACR detection for a network file.
    Analyze { network: PathBuf },
    /// Reduced discrete and continuous systems with an assumption audit.
    Reduce {
        network: PathBuf,
        #[command(flatten)]
        scaling: ScalingArgs,
        /// Horizon for the positivity check of the continuous limit.
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Simulates one path of the scaled system and writes it as CSV.
    Simulate {
        network: PathBuf,
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long)]
        t_end: f64,
        /// Keep every k-th event.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Runs an ensemble study from a JSON config.
    Study { config: PathBuf },
    /// Re-renders the summary of a study directory from its report.json.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct ScalingArgs {
    /// Comma-separated discrete species.
    #[arg(long, value_delimiter = ',')]
    discrete: Vec<String>,
    /// Initial point as `Name=value` pairs; unnamed species default to 1.
    #[arg(long, value_delimiter = ',')]
    x0: Vec<String>,
}

/// Process exit status.
#[derive(Debug)]
enum Failure {
    Input(String),
    Assumption(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Assumption(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Assumption(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ScalingError> for Failure {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::NotFactorable { .. } | ScalingError::NotComplexBalanced { .. } => {
                Failure::Assumption(format!("{e}; for non-complex-balanced discrete systems try --remark-3-7"))
            }
            ScalingError::AveragingDimension(_) => Failure::Assumption(e.to_string()),
            ScalingError::Rate(_) | ScalingError::Statistics(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Scaling(s) => s.into(),
            StudyError::Config(_) | StudyError::Parse(..) | StudyError::Input(_) => Failure::Input(e.to_string()),
            StudyError::Statistics(StatisticsError::TooFewReplicas { .. }) => Failure::Input(e.to_string()),
            StudyError::Statistics(_) | StudyError::Ode(_) | StudyError::Io(_) => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", path.display()))
}

fn read_network(path: &Path) -> Result<ReactionNetwork, Failure> {
    let src = fs::read_to_string(path).map_err(io_err(path))?;
    parse_network(&src).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn scaling_spec(net: ReactionNetwork, args: &ScalingArgs) -> Result<ScalingSpec, Failure> {
    let mut x0: Vec<(String, f64)> = net.species_names().into_iter().map(|s| (s, 1.0)).collect();
    for pair in &args.x0 {
        let (name, value) =
            pair.split_once('=').ok_or_else(|| Failure::Input(format!("--x0 expects Name=value, got `{pair}`")))?;
        let value: f64 = value.trim().parse().map_err(|_| Failure::Input(format!("bad number in `{pair}`")))?;
        let slot = x0
            .iter_mut()
            .find(|(s, _)| s == name.trim())
            .ok_or_else(|| Failure::Input(format!("unknown species `{}` in --x0", name.trim())))?;
        slot.1 = value;
    }
    let discrete: Vec<&str> = args.discrete.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    let x0: Vec<(&str, f64)> = x0.iter().map(|(s, v)| (s.as_str(), *v)).collect();
    Ok(ScalingSpec::with_discrete(net, &discrete, &x0, Vec::new())?)
}

fn analyze(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let net = read_network(path)?;
    let structural = analyze_structure(&net);
    let acr = detect_acr(&net, &AcrOptions { seed: cli.seed.unwrap_or(DEFAULT_SEED), ..AcrOptions::default() });
    let report = json!({
        "network": print_network(&net),
        "species": net.species_names(),
        "structural": structural,
        "acr": acr,
    });
    emit(cli.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))
}

fn reduce(cli: &Cli, path: &Path, scaling: &ScalingArgs, t_end: f64, as_json: bool) -> Result<(), Failure> {
    let spec = scaling_spec(read_network(path)?, scaling)?;
    let averaging =
        if cli.stationary { Averaging::Stationary(StationaryOptions::default()) } else { Averaging::ComplexBalanced };
    let discrete = DiscreteReduction::build(&spec)?;
    let audit = audit_assumptions(
        &spec,
        &AuditOptions { t_end, seed: cli.seed.unwrap_or(DEFAULT_SEED), ..AuditOptions::default() },
        &averaging,
    )?;
    let (rendered, continuous_error) = match ContinuousReduction::build(&discrete, averaging) {
        Ok(c) => (render_reductions(&c), None),
        Err(e) => (render_discrete(&discrete), Some(e.to_string())),
    };
    let text = if as_json {
        let v = json!({ "reductions": rendered, "continuous_error": continuous_error, "audit": audit });
        format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable"))
    } else {
        let mut s = rendered.to_text();
        if let Some(e) = &continuous_error {
            s.push_str(&format!("continuous system: unavailable ({e})\n"));
        }
        s.push_str("audit:\n");
        s.push_str(&format!("  discrete species fast: {:?}\n", audit.discrete_fast.verdict));
        s.push_str(&format!(
            "  complex balanced: {:?} ({})\n",
            audit.complex_balanced.verdict, audit.complex_balanced.detail
        ));
        s.push_str(&format!("  limit exists: {:?} ({})\n", audit.limit_exists.verdict, audit.limit_exists.detail));
        s.push_str(&format!(
            "  unary discrete complexes and rate envelopes: {:?} ({})\n",
            audit.poisson_structural.verdict, audit.poisson_structural.detail
        ));
        for n in &audit.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    };
    emit(cli.out.as_deref(), &text)?;
    let required = if cli.stationary {
        audit.discrete_fast.verdict.and(audit.limit_exists.verdict)
    } else {
        audit.reduction_verdict()
    };
    match required {
        Verdict::Fail => Err(Failure::Assumption("assumption audit failed".into())),
        _ => Ok(()),
    }
}

fn simulate(cli: &Cli, path: &Path, scaling: &ScalingArgs, n: u64, t_end: f64, stride: usize) -> Result<(), Failure> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Failure::Input(format!("--t-end must be positive, got {t_end}")));
    }
    let spec = scaling_spec(read_network(path)?, scaling)?;
    let scaled = build_scaled_system(&spec, n)?;
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let traj = simulate_network(
        &scaled.network,
        &scaled.initial_state,
        t_end,
        seed,
        &SsaOptions { scale: Some(n), ..SsaOptions::default() },
    )
    .map_err(|e| Failure::Runtime(e.to_string()))?;
    let names = scaled.network.species_names();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, &names, stride.max(1)).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(cli.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    log::info!("{} events, absorbed: {}", traj.len().saturating_sub(1), traj.absorbed);
    Ok(())
}

fn study(cli: &Cli, config: &Path) -> Result<(), Failure> {
    let out = cli.out.clone().unwrap_or_else(|| {
        let stem = config.file_stem().map_or_else(|| "study".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{stem}-out"))
    });
    let overrides = StudyOverrides { seed: cli.seed, stationary_averaging: cli.stationary };
    let run = run_study_file(config, &out, &overrides)?;
    let report = &run.report;
    println!("{}: {:?} (outputs in {})", report.name, report.verdict, out.display());
    for c in &report.checks {
        println!("  [{}] {} = {:.5}", if c.pass { "pass" } else { "FAIL" }, c.name, c.value);
    }
    if report.fully_failed() {
        return Err(Failure::Runtime("every replica failed at some N".into()));
    }
    Ok(())
}

fn report(cli: &Cli, dir: &Path) -> Result<(), Failure> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let report: StudyReport =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let summary = render_summary(&report);
    match &cli.out {
        Some(p) => emit(Some(p), &summary),
        None => {
            let target = dir.join("summary.md");
            fs::write(&target, &summary).map_err(|e| Failure::Runtime(format!("{}: {e}", target.display())))?;
            emit(None, &summary)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Analyze { network } => analyze(cli, network),
        Command::Reduce { network, scaling, t_end, json } => reduce(cli, network, scaling, *t_end, *json),
        Command::Simulate { network, scaling, n, t_end, stride } => {
            simulate(cli, network, scaling, *n, *t_end, *stride)
        }
        Command::Study { config } => study(cli, config),
        Command::Report { dir } => report(cli, dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACR_SCOPE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
