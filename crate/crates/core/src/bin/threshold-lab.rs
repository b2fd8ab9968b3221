use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use threshold_lab::domain::{order_type, EquivalenceType, Label, Sample};
use threshold_lab::harness::{
    kl_growth_experiment, run_tradeoff_experiment, spacing_event_probability, write_csv_with_sidecar,
    ExperimentConfig, KlGrowthConfig, PriorSpec,
};
use threshold_lab::homogeneity::{
    check_approx_homogeneity, p_profile, phi, phi_threshold, ramsey_homogeneous_size, CheckOptions, PointSet,
    TowerInt, DEFAULT_EXHAUSTIVE_CAP,
};
use threshold_lab::learners::LearnerSpec;
use threshold_lab::pacbayes::ExtendedReal;
use threshold_lab::sensitivity::{
    average_prior, default_r, kl_certificate, step_family, MonteCarloOptions, Z_99,
};
use threshold_lab::LabError;

#[derive(Debug, Parser)]
#[command(name = "threshold-lab", version, about = "PAC-Bayes experiments for thresholds on a finite line")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent). CSV output also writes <out>.config.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// JSON object whose keys override the command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize, Deserialize)]
struct Globals {
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// KL versus loss on the hard distribution.
    Tradeoff(TradeoffArgs),
    /// Frequency of the spacing event.
    Spacing(SpacingArgs),
    /// Median KL against the prior across domain sizes.
    KlGrowth(KlGrowthArgs),
    /// p-profile of one equivalence-type.
    Profile(ProfileArgs),
    /// Approximate homogeneity of a learner on {1..n}.
    CheckHomogeneity(CheckArgs),
    /// KL certificates for the step family on 2^b points.
    SensitivityCert(CertArgs),
    /// Phi and Ramsey-size numerics for tower-sized domains.
    Ramsey(RamseyArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct TradeoffArgs {
    #[arg(long)]
    learner: LearnerSpec,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value = "optimal")]
    prior: PriorSpec,
    #[arg(long, default_value_t = 100_000)]
    prior_trials: usize,
    #[arg(long, default_value_t = 16)]
    profile_reps: usize,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    kl_constant: f64,
    #[arg(long, default_value_t = 500)]
    subset_budget: u64,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct SpacingArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct KlGrowthArgs {
    #[arg(long)]
    learner: LearnerSpec,
    #[arg(long)]
    m: usize,
    /// Comma-separated, strictly increasing even domain sizes.
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value = "optimal")]
    prior: PriorSpec,
    #[arg(long, default_value_t = 100_000)]
    prior_trials: usize,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct ProfileArgs {
    #[arg(long)]
    learner: LearnerSpec,
    #[arg(long)]
    n: usize,
    /// A sample such as "(1,-);(5,+);(8,+)" whose type is profiled.
    #[arg(long, conflicts_with_all = ["pi", "labels"])]
    sample: Option<String>,
    /// Order-type as comma-separated ranks, e.g. 2,1,3.
    #[arg(long, value_delimiter = ',', requires = "labels")]
    pi: Option<Vec<usize>>,
    /// Labels as a string of + and -, e.g. -++.
    #[arg(long, requires = "pi", allow_hyphen_values = true)]
    labels: Option<String>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct CheckArgs {
    #[arg(long)]
    learner: LearnerSpec,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
    exhaustive_cap: u128,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct CertArgs {
    #[arg(long)]
    b: u32,
    #[arg(long, default_value_t = 0.25)]
    q1: f64,
    #[arg(long, default_value_t = 0.75)]
    q2: f64,
    /// Number of draws, or "auto".
    #[arg(long, default_value = "auto")]
    r: String,
    /// Monte-Carlo trials for event masses that cannot be computed exactly.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// `optimal` is the average of the family; also uniform, point:<k>, cover:<eps>.
    #[arg(long, default_value = "optimal")]
    prior: PriorSpec,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct RamseyArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    gamma: f64,
    /// Domain size: a number d or 2^^h(t) for twr_h(t).
    #[arg(long)]
    n: String,
    /// Target homogeneous-set size for the threshold check.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Budget(String),
    Io(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Io(_) | LabError::Csv(_) => Failure::Io(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(format!("config: {e}"))
    }
}

/// Serializes `args` next to the globals, overlays the config file, and
/// reads both back.
fn merged<A: Serialize + for<'de> Deserialize<'de>>(
    cli: &Cli,
    args: &A,
) -> Result<(Globals, A, Value), Failure> {
    let mut value = serde_json::to_value(args)?;
    let obj = value.as_object_mut().expect("argument structs are objects");
    obj.insert("seed".into(), json!(cli.seed));
    obj.insert("out".into(), json!(cli.out));
    obj.insert("format".into(), json!(cli.format));
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        let overrides: Value = serde_json::from_str(&text)?;
        let Value::Object(map) = overrides else {
            return Err(Failure::Validation("config file must hold a JSON object".into()));
        };
        obj.extend(map);
    }
    let globals: Globals = serde_json::from_value(value.clone())?;
    let args: A = serde_json::from_value(value.clone())?;
    Ok((globals, args, value))
}

fn emit<T: Serialize, R: Serialize>(g: &Globals, report: &T, rows: &[R], config: &Value) -> Result<(), Failure> {
    match (g.format, &g.out) {
        (Format::Json, Some(path)) => std::fs::write(path, serde_json::to_string_pretty(report)? + "\n")?,
        (Format::Json, None) => println!("{}", serde_json::to_string_pretty(report)?),
        (Format::Csv, Some(path)) => write_csv_with_sidecar(path, rows, config)?,
        (Format::Csv, None) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for row in rows {
                w.serialize(row).map_err(|e| Failure::Io(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn tradeoff(cli: &Cli, a: &TradeoffArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let cfg = ExperimentConfig {
        learner: a.learner,
        n: a.n,
        m: a.m,
        gamma: a.gamma,
        delta: a.delta,
        trials: a.trials,
        seed: g.seed,
        prior: a.prior,
        prior_trials: a.prior_trials,
        profile_reps: a.profile_reps,
        kl_constant: a.kl_constant,
        subset_budget: a.subset_budget,
    };
    let report = run_tradeoff_experiment(&cfg)?;
    emit(&g, &report, &report.records, &config)
}

fn spacing(cli: &Cli, a: &SpacingArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let frequency = spacing_event_probability(a.k, a.m, a.trials, g.seed)?;
    #[derive(Serialize)]
    struct Row {
        k: usize,
        m: usize,
        trials: usize,
        seed: u64,
        frequency: f64,
    }
    let row = Row {
        k: a.k,
        m: a.m,
        trials: a.trials,
        seed: g.seed,
        frequency,
    };
    emit(&g, &row, std::slice::from_ref(&row), &config)
}

fn kl_growth(cli: &Cli, a: &KlGrowthArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let cfg = KlGrowthConfig {
        learner: a.learner,
        m: a.m,
        n_grid: a.n_grid,
        trials: a.trials,
        prior: a.prior,
        prior_trials: a.prior_trials,
        seed: g.seed,
    };
    let rows = kl_growth_experiment(&cfg)?;
    emit(&g, &json!({ "config": cfg, "rows": rows }), &rows, &config)
}

fn profile_type(a: &ProfileArgs) -> Result<EquivalenceType, Failure> {
    match (&a.sample, &a.pi, &a.labels) {
        (Some(text), _, _) => Ok(order_type(&Sample::parse(text, a.n)?)),
        (None, Some(pi), Some(labels)) => {
            let ybar = labels.chars().map(Label::from_symbol).collect::<Result<Vec<_>, _>>()?;
            Ok(EquivalenceType::new(pi.clone(), ybar)?)
        }
        _ => Err(Failure::Validation("give --sample or both --pi and --labels".into())),
    }
}

fn profile(cli: &Cli, a: &ProfileArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let ty = profile_type(&a)?;
    let learner = a.learner.build()?;
    let prof = p_profile(&*learner, &ty, &PointSet::full(a.n)?, a.reps)?;
    #[derive(Serialize)]
    struct Row {
        position: usize,
        p: Option<f64>,
        max_deviation: f64,
    }
    let rows: Vec<Row> = prof
        .p
        .iter()
        .enumerate()
        .map(|(position, &p)| Row {
            position,
            p,
            max_deviation: prof.max_deviation,
        })
        .collect();
    emit(&g, &prof, &rows, &config)
}

fn check_homogeneity(cli: &Cli, a: &CheckArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let learner = a.learner.build()?;
    let opts = CheckOptions {
        exhaustive_cap: a.exhaustive_cap,
        seed: g.seed,
    };
    let verdict = check_approx_homogeneity(&*learner, &PointSet::full(a.n)?, a.m, a.gamma, opts)?;
    #[derive(Serialize)]
    struct Row {
        passed: bool,
        worst_violation: f64,
        tolerance: f64,
        exhaustive: bool,
        coverage: f64,
        evaluations: u128,
    }
    let row = Row {
        passed: verdict.passed,
        worst_violation: verdict.worst_violation,
        tolerance: verdict.tolerance,
        exhaustive: verdict.exhaustive,
        coverage: verdict.coverage,
        evaluations: verdict.evaluations,
    };
    emit(&g, &verdict, std::slice::from_ref(&row), &config)?;
    if !verdict.passed {
        return Err(Failure::Validation(format!(
            "not approximately homogeneous: worst violation {} > {}",
            verdict.worst_violation, verdict.tolerance
        )));
    }
    if !verdict.exhaustive {
        return Err(Failure::Budget(format!(
            "passed on a sample of {:.3} of all evaluations; raise --exhaustive-cap for a full check",
            verdict.coverage
        )));
    }
    Ok(())
}

fn sensitivity_cert(cli: &Cli, a: &CertArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let r = match a.r.as_str() {
        "auto" => default_r(a.b, a.q1, a.q2)?,
        text => text
            .parse()
            .map_err(|_| Failure::Validation(format!("--r must be an integer or auto, got {text:?}")))?,
    };
    let family = step_family(a.b, a.q1, a.q2)?;
    let prior = match a.prior {
        PriorSpec::Optimal => average_prior(&family)?,
        other => {
            let n = 1usize << a.b;
            let dist = threshold_lab::harness::hard_distribution(n)?;
            let constant = threshold_lab::learners::ConstantLearner::new(0);
            other.build(&constant, &dist, 1, 1, g.seed)?
        }
    };
    let mc = MonteCarloOptions {
        trials: a.trials,
        seed: g.seed,
        z: Z_99,
    };
    let report = kl_certificate(&family, &prior, a.q1, a.q2, r, mc)?;
    #[derive(Serialize)]
    struct Row {
        xhat: usize,
        #[serde(rename = "Q_mass")]
        q_mass: f64,
        #[serde(rename = "P_mass")]
        p_mass: f64,
        certificate: f64,
        direct_kl: ExtendedReal,
    }
    let rows: Vec<Row> = report
        .rows
        .iter()
        .map(|row| Row {
            xhat: row.xhat,
            q_mass: row.q_mass.value,
            p_mass: row.p_mass.value,
            certificate: row.certificate,
            direct_kl: row.direct_kl,
        })
        .collect();
    emit(&g, &report, &rows, &config)?;
    if let Some(v) = report.premise_violation {
        return Err(Failure::Validation(format!(
            "family leaves its band at xhat={}, x={} (Pr = {})",
            v.xhat, v.x, v.prob
        )));
    }
    Ok(())
}

fn ramsey(cli: &Cli, a: &RamseyArgs) -> Result<(), Failure> {
    let (g, a, config) = merged(cli, a)?;
    let n: TowerInt = a.n.parse()?;
    let phi_value = phi(a.m, a.gamma, n)?;
    let q = (10.0 * a.m as f64 / a.gamma).powi(2 * a.m as i32);
    let ramsey_size = ramsey_homogeneous_size(q, a.m + 1, n)?;
    let threshold = phi_threshold(a.m, a.gamma, a.s)?;
    #[derive(Serialize)]
    struct Row {
        m: u32,
        gamma: f64,
        n: String,
        phi: ExtendedReal,
        colors: f64,
        ramsey_size: ExtendedReal,
        target: f64,
        threshold: String,
        meets_target: bool,
    }
    let row = Row {
        m: a.m,
        gamma: a.gamma,
        n: n.to_string(),
        phi: ExtendedReal::from_f64(phi_value),
        colors: q,
        ramsey_size: ExtendedReal::from_f64(ramsey_size),
        target: a.s,
        threshold: threshold.to_string(),
        meets_target: n >= threshold,
    };
    emit(&g, &row, std::slice::from_ref(&row), &config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Tradeoff(a) => tradeoff(cli, a),
        Command::Spacing(a) => spacing(cli, a),
        Command::KlGrowth(a) => kl_growth(cli, a),
        Command::Profile(a) => profile(cli, a),
        Command::CheckHomogeneity(a) => check_homogeneity(cli, a),
        Command::SensitivityCert(a) => sensitivity_cert(cli, a),
        Command::Ramsey(a) => ramsey(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli);
    let _ = std::io::stdout().flush();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("budget: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
