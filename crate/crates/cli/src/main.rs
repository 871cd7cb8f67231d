//! Command-line interface for constrained lasso fitting.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 infeasible constraints,
//! 5 solver failure. Errors print one machine-parsable JSON line to
//! stderr. All stochastic commands take explicit seeds; reports are
//! byte-reproducible given identical inputs, flags, and seeds (up to the
//! `wall_clock_ms` provenance field).

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use classo_core::constraints::{parse_constraints, ConstraintSet};
use classo_core::data::{read_csv, write_csv, Dataset};
use classo_core::error::Error;
use classo_core::estimator::{fit_constrained, FitSpec};
use classo_core::inference::{
    bootstrap_se, BootstrapConfig, BootstrapFamily, BootstrapMode,
};
use classo_core::lsa;
use classo_core::oracle::{brute_force_fit, GridSpec};
use classo_core::report::{self, json_f64};
use classo_core::simulate::{generate, Scenario};
use classo_core::tuning::{self, Criterion};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "classo",
    version,
    about = "Variable selection and estimation by lasso under prior constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the constrained lasso at a fixed L1 budget.
    Fit(FitArgs),
    /// Select the budget by cross-validation, GCV, or BIC, then refit.
    Tune(TuneArgs),
    /// Bootstrap standard errors by case resampling.
    Bootstrap(BootstrapArgs),
    /// Fit a quadratic surrogate (logistic/gaussian/external) under
    /// constraints.
    LsaFit(LsaFitArgs),
    /// Generate a named demo scenario: data, constraint file, and truth.
    Simulate(SimulateArgs),
    /// Brute-force grid verifier (fixture regeneration).
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Constraint file (omit for an unconstrained fit).
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Treat the named all-ones column as the intercept (unpenalized).
    #[arg(long)]
    intercept_column: Option<String>,
}

#[derive(Args)]
struct FitFlags {
    /// Per-coefficient budget weights, comma separated (default all ones).
    #[arg(long)]
    weights: Option<String>,
    /// Do not estimate an intercept.
    #[arg(long)]
    no_intercept: bool,
    /// Do not standardize columns.
    #[arg(long)]
    no_standardize: bool,
    /// Coefficients at or below this magnitude are reported as exact zeros.
    #[arg(long, default_value_t = 1e-6)]
    sparsity_tol: f64,
    /// Feasibility tolerance on constraint values.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Monte Carlo initializer as `draws,seed` (nonlinear constraints).
    #[arg(long)]
    mc_init: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// L1 budget (accepts `inf`).
    #[arg(long)]
    s: f64,
    #[command(flatten)]
    flags: FitFlags,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    flags: FitFlags,
    /// Number of grid points on [0, S_max].
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// CV folds; `n` means leave-one-out.
    #[arg(long, default_value = "n")]
    folds: String,
    #[arg(long, value_enum, default_value_t = CriterionArg::Cv)]
    criterion: CriterionArg,
    /// Loss family (logistic tunes on the surrogate scale with gcv/bic).
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    #[arg(long)]
    seed: u64,
    /// Also write the tuning curve as CSV.
    #[arg(long)]
    curve_csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    flags: FitFlags,
    /// Budget for fixed-mode replicates (accepts `inf`).
    #[arg(long)]
    s: Option<f64>,
    #[arg(long = "B", short = 'B')]
    b: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    /// Grid size for retuned replicates.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// CV folds for retuned replicates; `n` means leave-one-out.
    #[arg(long, default_value = "n")]
    folds: String,
    #[arg(long, value_enum, default_value_t = CriterionArg::Cv)]
    criterion: CriterionArg,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LsaFitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// L1 budget (accepts `inf`).
    #[arg(long)]
    s: f64,
    #[command(flatten)]
    flags: FitFlags,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    /// Externally built surrogate JSON
    /// (`{"beta_tilde": [...], "precision": [[...]], "n": int}`).
    #[arg(long, conflicts_with = "family")]
    surrogate: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// One of: demand, concavity, synergy, theorem2.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    seed: u64,
    /// Override the scenario's default sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Directory for data.csv, constraints.txt, truth.json.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 1e-3)]
    resolution: f64,
    #[arg(long, default_value_t = 3.0)]
    half_width: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Cv,
    Gcv,
    Bic,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Cv => Criterion::Cv,
            CriterionArg::Gcv => Criterion::Gcv,
            CriterionArg::Bic => Criterion::Bic,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Logistic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fixed,
    Retune,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match cli.command {
        Command::Fit(args) => run_fit(args, started),
        Command::Tune(args) => run_tune(args, started),
        Command::Bootstrap(args) => run_bootstrap(args, started),
        Command::LsaFit(args) => run_lsa_fit(args, started),
        Command::Simulate(args) => run_simulate(args, started),
        Command::Oracle(args) => run_oracle(args, started),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            let mut m = Map::new();
            m.insert("error".into(), Value::String(err.to_string()));
            m.insert("kind".into(), Value::String(error_kind(&err).into()));
            m.insert("exit".into(), Value::from(code));
            eprintln!("{}", serde_json::to_string(&Value::Object(m)).unwrap());
            ExitCode::from(code)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Dimension(_) | Error::Parse { .. } | Error::Data(_) | Error::Io(_) => 3,
        Error::InfeasibleConstraints(_) => 4,
        _ => 5,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Dimension(_) => "dimension",
        Error::Parse { .. } => "parse",
        Error::Data(_) => "data",
        Error::Io(_) => "io",
        Error::InfeasibleConstraints(_) => "infeasible",
        Error::LinearizationStalled { .. } => "linearization_stalled",
        Error::IterationLimit(_) => "iteration_limit",
        Error::SeparationDetected(_) => "separation",
        Error::NonConvergence(_) => "non_convergence",
        Error::TuningFailed => "tuning_failed",
        Error::Oracle(_) => "oracle",
    }
}

/// Loads the dataset and constraints; an absent constraint file means the
/// empty system over p (reports still echo it).
fn load_inputs(args: &DataArgs) -> Result<(Dataset, ConstraintSet), Error> {
    let mut data = read_csv(&args.data, &args.response)?;
    if let Some(name) = &args.intercept_column {
        data.mark_intercept_column(name)?;
    }
    let cs = match &args.constraints {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            // Try the feature dimension first, then p + 1 (intercept as
            // coordinate 1).
            match parse_constraints(&text, data.p()) {
                Ok(cs) => cs,
                Err(first_err) => match parse_constraints(&text, data.p() + 1) {
                    Ok(cs) => cs,
                    Err(_) => return Err(first_err),
                },
            }
        }
        None => ConstraintSet::empty(data.p()),
    };
    Ok((data, cs))
}

fn build_spec(flags: &FitFlags, s: f64, p: usize) -> Result<FitSpec, Error> {
    let mut spec = FitSpec::with_budget(s);
    spec.sparsity_tol = flags.sparsity_tol;
    spec.qp.feasibility_tol = flags.tol;
    spec.intercept = !flags.no_intercept;
    spec.standardize = !flags.no_standardize;
    if let Some(w) = &flags.weights {
        let parsed: Result<Vec<f64>, _> = w.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let parsed =
            parsed.map_err(|_| Error::Data(format!("cannot parse weights '{w}'")))?;
        if parsed.len() != p {
            return Err(Error::Data(format!(
                "{} weights for {p} feature columns",
                parsed.len()
            )));
        }
        spec.weights = Some(DVector::from_vec(parsed));
    }
    if let Some(mc) = &flags.mc_init {
        let parts: Vec<&str> = mc.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Data(format!(
                "--mc-init expects 'draws,seed', got '{mc}'"
            )));
        }
        spec.mc_draws = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("invalid draw count '{}'", parts[0])))?;
        spec.mc_seed = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("invalid seed '{}'", parts[1])))?;
    }
    Ok(spec)
}

/// Default budget weights exclude an explicit intercept column.
fn apply_intercept_column_weights(spec: &mut FitSpec, data: &Dataset) {
    if spec.weights.is_none() {
        if let Some(j) = data.intercept_column() {
            let mut w = DVector::from_element(data.p(), 1.0);
            w[j] = 0.0;
            spec.weights = Some(w);
        }
    }
}

fn parse_folds(folds: &str, n: usize) -> Result<usize, Error> {
    if folds == "n" {
        Ok(n)
    } else {
        folds
            .parse()
            .map_err(|_| Error::Data(format!("invalid fold count '{folds}'")))
    }
}

fn spec_config_value(spec: &FitSpec) -> Value {
    let mut m = Map::new();
    m.insert("s".into(), json_f64(spec.s));
    m.insert(
        "weights".into(),
        match &spec.weights {
            Some(w) => Value::Array(w.iter().map(|&v| json_f64(v)).collect()),
            None => Value::Null,
        },
    );
    m.insert("sparsity_tol".into(), json_f64(spec.sparsity_tol));
    m.insert("feasibility_tol".into(), json_f64(spec.qp.feasibility_tol));
    m.insert("intercept".into(), Value::Bool(spec.intercept));
    m.insert("standardize".into(), Value::Bool(spec.standardize));
    m.insert("mc_draws".into(), Value::from(spec.mc_draws as u64));
    m.insert("mc_seed".into(), Value::from(spec.mc_seed));
    Value::Object(m)
}

fn input_paths(args: &DataArgs) -> Vec<(&'static str, &Path)> {
    let mut v: Vec<(&'static str, &Path)> = vec![("data", args.data.as_path())];
    if let Some(c) = &args.constraints {
        v.push(("constraints", c.as_path()));
    }
    v
}

fn emit(report: Value, out: Option<&PathBuf>) -> Result<(), Error> {
    let text = report::render(&report);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_fit(args: FitArgs, started: Instant) -> Result<(), Error> {
    let (data, cs) = load_inputs(&args.data)?;
    let spec = build_spec(&args.flags, args.s, data.p())?;
    let fit = fit_constrained(&data, &cs, &spec)?;

    let mut root = Map::new();
    root.insert("command".into(), Value::String("fit".into()));
    root.insert("config".into(), spec_config_value(&spec));
    root.insert("fit".into(), report::fit_value(&fit));
    root.insert(
        "provenance".into(),
        report::provenance(
            &input_paths(&args.data),
            None,
            VERSION,
            started.elapsed().as_millis() as u64,
        )?,
    );
    emit(Value::Object(root), args.out.as_ref())
}

fn run_tune(args: TuneArgs, started: Instant) -> Result<(), Error> {
    let (data, cs) = load_inputs(&args.data)?;
    let mut spec = build_spec(&args.flags, f64::INFINITY, data.p())?;
    apply_intercept_column_weights(&mut spec, &data);
    let folds = parse_folds(&args.folds, data.n())?;
    let criterion: Criterion = args.criterion.into();

    let grid = tuning::make_s_grid(&data, &cs, args.grid, &spec)?;
    let (curve, fit) = match args.family {
        FamilyArg::Gaussian => {
            let curve = match criterion {
                Criterion::Cv => {
                    tuning::cross_validate(&data, &cs, &grid, folds, &spec, args.seed)?
                }
                Criterion::Gcv => tuning::gcv_curve(&data, &cs, &grid, &spec)?,
                Criterion::Bic => tuning::bic_curve(&data, &cs, &grid, &spec)?,
            };
            let mut final_spec = spec.clone();
            final_spec.s = curve.selected_s;
            let fit = fit_constrained(&data, &cs, &final_spec)?;
            (curve, fit)
        }
        FamilyArg::Logistic => {
            let surrogate =
                lsa::fit_unpenalized(lsa::Family::Logistic, &data, &lsa::LsaOptions::default())?;
            let curve = tuning::surrogate_curve(&surrogate, &cs, &grid, &spec, criterion)?;
            let mut final_spec = spec.clone();
            final_spec.s = curve.selected_s;
            let fit = lsa::fit_lsa_constrained(&surrogate, &cs, &final_spec)?;
            (curve, fit)
        }
    };

    if let Some(path) = &args.curve_csv {
        std::fs::write(path, report::curve_csv(&curve))?;
    }

    let mut root = Map::new();
    root.insert("command".into(), Value::String("tune".into()));
    let mut config = spec_config_value(&spec);
    if let Value::Object(m) = &mut config {
        m.insert("grid".into(), Value::from(args.grid as u64));
        m.insert("folds".into(), Value::from(folds as u64));
        m.insert(
            "criterion".into(),
            Value::String(criterion.name().into()),
        );
        m.insert(
            "family".into(),
            Value::String(
                match args.family {
                    FamilyArg::Gaussian => "gaussian",
                    FamilyArg::Logistic => "logistic",
                }
                .into(),
            ),
        );
    }
    root.insert("config".into(), config);
    root.insert("tuning".into(), report::curve_value(&curve));
    root.insert("fit".into(), report::fit_value(&fit));
    root.insert(
        "provenance".into(),
        report::provenance(
            &input_paths(&args.data),
            Some(args.seed),
            VERSION,
            started.elapsed().as_millis() as u64,
        )?,
    );
    emit(Value::Object(root), args.out.as_ref())
}

fn run_bootstrap(args: BootstrapArgs, started: Instant) -> Result<(), Error> {
    let (data, cs) = load_inputs(&args.data)?;
    let mode = match args.mode {
        ModeArg::Fixed => BootstrapMode::FixedS,
        ModeArg::Retune => BootstrapMode::ReTuned,
    };
    let s = match (mode, args.s) {
        (BootstrapMode::FixedS, Some(s)) => s,
        (BootstrapMode::FixedS, None) => {
            return Err(Error::Data("--s is required with --mode fixed".into()))
        }
        (BootstrapMode::ReTuned, _) => f64::INFINITY,
    };
    let mut spec = build_spec(&args.flags, s, data.p())?;
    apply_intercept_column_weights(&mut spec, &data);
    let family = match args.family {
        FamilyArg::Gaussian => BootstrapFamily::Gaussian,
        FamilyArg::Logistic => BootstrapFamily::Logistic,
    };
    let config = BootstrapConfig {
        spec: spec.clone(),
        mode,
        family,
        grid_count: args.grid,
        folds: if args.folds == "n" {
            None
        } else {
            Some(parse_folds(&args.folds, data.n())?)
        },
        criterion: args.criterion.into(),
    };
    let report_data = bootstrap_se(&data, &cs, &config, args.b, args.seed)?;

    let mut root = Map::new();
    root.insert("command".into(), Value::String("bootstrap".into()));
    let mut cfg = spec_config_value(&spec);
    if let Value::Object(m) = &mut cfg {
        m.insert("B".into(), Value::from(args.b as u64));
        m.insert(
            "mode".into(),
            Value::String(
                match mode {
                    BootstrapMode::FixedS => "fixed",
                    BootstrapMode::ReTuned => "retune",
                }
                .into(),
            ),
        );
        m.insert(
            "family".into(),
            Value::String(
                match args.family {
                    FamilyArg::Gaussian => "gaussian",
                    FamilyArg::Logistic => "logistic",
                }
                .into(),
            ),
        );
    }
    root.insert("config".into(), cfg);
    if mode == BootstrapMode::FixedS && family == BootstrapFamily::Gaussian {
        let fit = fit_constrained(&data, &cs, &spec)?;
        root.insert("fit".into(), report::fit_value(&fit));
    }
    root.insert("bootstrap".into(), report::bootstrap_value(&report_data));
    root.insert(
        "provenance".into(),
        report::provenance(
            &input_paths(&args.data),
            Some(args.seed),
            VERSION,
            started.elapsed().as_millis() as u64,
        )?,
    );
    emit(Value::Object(root), args.out.as_ref())
}

fn run_lsa_fit(args: LsaFitArgs, started: Instant) -> Result<(), Error> {
    let (data, cs) = load_inputs(&args.data)?;
    let spec = build_spec(&args.flags, args.s, data.p())?;

    let surrogate = match &args.surrogate {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            lsa::surrogate_from_json(&text)?
        }
        None => {
            let family = match args.family {
                FamilyArg::Gaussian => lsa::Family::Gaussian,
                FamilyArg::Logistic => lsa::Family::Logistic,
            };
            lsa::fit_unpenalized(family, &data, &lsa::LsaOptions::default())?
        }
    };

    let mut spec = spec;
    apply_intercept_column_weights(&mut spec, &data);

    let fit = lsa::fit_lsa_constrained(&surrogate, &cs, &spec)?;

    let mut root = Map::new();
    root.insert("command".into(), Value::String("lsa-fit".into()));
    let mut cfg = spec_config_value(&spec);
    if let Value::Object(m) = &mut cfg {
        m.insert(
            "family".into(),
            Value::String(surrogate.family.name().into()),
        );
    }
    root.insert("config".into(), cfg);
    let mut sur = Map::new();
    sur.insert(
        "beta_tilde".into(),
        Value::Array(surrogate.beta_tilde.iter().map(|&v| json_f64(v)).collect()),
    );
    sur.insert("n".into(), Value::from(surrogate.n as u64));
    sur.insert(
        "loss_value".into(),
        surrogate.loss_value.map(json_f64).unwrap_or(Value::Null),
    );
    sur.insert("family".into(), Value::String(surrogate.family.name().into()));
    root.insert("surrogate".into(), Value::Object(sur));
    root.insert("fit".into(), report::fit_value(&fit));
    let mut inputs = input_paths(&args.data);
    if let Some(path) = &args.surrogate {
        inputs.push(("surrogate", path.as_path()));
    }
    root.insert(
        "provenance".into(),
        report::provenance(
            &inputs,
            None,
            VERSION,
            started.elapsed().as_millis() as u64,
        )?,
    );
    emit(Value::Object(root), args.out.as_ref())
}

fn run_simulate(args: SimulateArgs, started: Instant) -> Result<(), Error> {
    let scenario: Scenario = args.scenario.parse()?;
    let instance = generate(scenario, args.seed, args.n)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let data_path = args.out_dir.join("data.csv");
    let constraints_path = args.out_dir.join("constraints.txt");
    let truth_path = args.out_dir.join("truth.json");
    write_csv(&data_path, &instance.data, &instance.response_name)?;
    std::fs::write(&constraints_path, &instance.constraints_text)?;
    std::fs::write(&truth_path, report::render(&instance.truth))?;

    let mut root = Map::new();
    root.insert("command".into(), Value::String("simulate".into()));
    let mut cfg = Map::new();
    cfg.insert("scenario".into(), Value::String(scenario.name().into()));
    cfg.insert("seed".into(), Value::from(args.seed));
    cfg.insert("n".into(), Value::from(instance.data.n() as u64));
    cfg.insert(
        "family".into(),
        Value::String(instance.family.to_string()),
    );
    if let Some(col) = &instance.intercept_column {
        cfg.insert("intercept_column".into(), Value::String(col.clone()));
    }
    cfg.insert(
        "response".into(),
        Value::String(instance.response_name.clone()),
    );
    root.insert("config".into(), Value::Object(cfg));
    let mut files = Map::new();
    for (name, path) in [
        ("data", &data_path),
        ("constraints", &constraints_path),
        ("truth", &truth_path),
    ] {
        let mut f = Map::new();
        f.insert(
            "path".into(),
            Value::String(path.to_string_lossy().into_owned()),
        );
        f.insert("sha256".into(), Value::String(report::file_digest(path)?));
        files.insert(name.into(), Value::Object(f));
    }
    root.insert("files".into(), Value::Object(files));
    root.insert(
        "provenance".into(),
        report::provenance(
            &[],
            Some(args.seed),
            VERSION,
            started.elapsed().as_millis() as u64,
        )?,
    );
    emit(Value::Object(root), args.out.as_ref())
}

fn run_oracle(args: OracleArgs, started: Instant) -> Result<(), Error> {
    let (data, cs) = load_inputs(&args.data)?;
    let grid = GridSpec::symmetric(data.p(), args.half_width, args.resolution);
    let (beta, objective) = brute_force_fit(&data, &cs, args.s, &grid)?;

    let mut root = Map::new();
    root.insert("command".into(), Value::String("oracle".into()));
    let mut cfg = Map::new();
    cfg.insert("s".into(), json_f64(args.s));
    cfg.insert("resolution".into(), json_f64(args.resolution));
    cfg.insert("half_width".into(), json_f64(args.half_width));
    root.insert("config".into(), Value::Object(cfg));
    let mut res = Map::new();
    res.insert(
        "beta".into(),
        Value::Array(beta.iter().map(|&v| json_f64(v)).collect()),
    );
    res.insert("objective".into(), json_f64(objective));
    root.insert("oracle".into(), Value::Object(res));
    root.insert(
        "provenance".into(),
        report::provenance(
            &input_paths(&args.data),
            None,
            VERSION,
            started.elapsed().as_millis() as u64,
        )?,
    );
    emit(Value::Object(root), args.out.as_ref())
}
