use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use octsvm::harness::{
    aggregate_table, grid_search, load_csv, parse_unlabeled, run_experiment, write_report,
    CsvOptions, ExperimentSpec, Grids, Hyper, Method, ModelFile, TrainSettings,
};
use octsvm::{
    branch_and_bound, brute_force_solve, build_octsvm_model, build_resvm_model, normalize_features,
    write_lp, Budget, Dataset, Exec, MinlpModel, ModelConfig, TreeTopology,
};

#[derive(Parser)]
#[command(
    name = "octsvm",
    version,
    about = "SVM-split classification trees with relabeling"
)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and save it as JSON.
    Train(TrainArgs),
    /// Predict labels for a CSV file with a saved model.
    Predict(PredictArgs),
    /// Run a label-noise experiment described by a TOML spec.
    Experiment(ExperimentArgs),
    /// Print the mixed-integer model in LP format.
    ExportModel(ExportArgs),
    /// Compare enumeration against branch-and-bound on a tiny dataset.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with features and a ±1 (or 0/1) label column.
    #[arg(long)]
    data: PathBuf,
    /// Zero-based label column; defaults to the last one.
    #[arg(long)]
    label_column: Option<usize>,
    /// The first CSV line is a header.
    #[arg(long)]
    header: bool,
}

impl DataArgs {
    fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_column,
            has_header: self.header,
            ..CsvOptions::default()
        }
    }

    fn load(&self) -> Result<Dataset> {
        let raw = load_csv(&self.data, &self.csv_options())
            .with_context(|| format!("reading {}", self.data.display()))?;
        info!(
            "{}: {} rows, {} features",
            self.data.display(),
            raw.len(),
            raw.num_features()
        );
        Ok(normalize_features(&raw.features, raw.labels)?)
    }
}

#[derive(Args)]
struct CostArgs {
    /// Tree depth (OCTSVM) or maximum depth (CART).
    #[arg(long)]
    depth: Option<usize>,
    /// Hinge-loss cost; a comma-separated list makes a grid.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    c1: Vec<f64>,
    /// Relabeling cost.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    c2: Vec<f64>,
    /// Cost per active split.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    c3: Vec<f64>,
    /// CART cost-complexity parameter.
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    alpha: Vec<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "octsvm")]
    method: Method,
    #[command(flatten)]
    costs: CostArgs,
    #[arg(long, default_value_t = 30.0)]
    time_limit: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Relative optimality gap at which the search stops.
    #[arg(long, default_value_t = 0.05)]
    gap: f64,
    /// Seed for the validation split when a grid is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long)]
    header: bool,
    /// The data has no label column.
    #[arg(long)]
    unlabeled: bool,
    /// Where to write one predicted label per line; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Report CSV; the summary goes next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Experiment spec; the model is built on its full dataset.
    #[arg(long, conflicts_with = "data")]
    spec: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long)]
    header: bool,
    #[arg(long, default_value = "octsvm")]
    method: Method,
    #[command(flatten)]
    costs: CostArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 0.1)]
    c3: f64,
    /// Relative difference above which the objectives count as different.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn single(values: &[f64], name: &str) -> Result<f64> {
    match values {
        [v] => Ok(*v),
        _ => bail!("--{name} takes a single value here"),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn train(args: TrainArgs, exec: Exec) -> Result<()> {
    let data = args.data.load()?;
    let defaults = TrainSettings::default();
    let mut budget = Budget::default()
        .with_time_limit(args.time_limit)
        .with_gap(args.gap);
    budget.node_limit = args.node_limit;
    let settings = TrainSettings {
        octsvm_depth: args.costs.depth.unwrap_or(defaults.octsvm_depth),
        cart_depth: args.costs.depth.unwrap_or(defaults.cart_depth),
        budget,
        exec,
        ..defaults
    };
    let grids = Grids {
        c1: args.costs.c1,
        c2: args.costs.c2,
        c3: args.costs.c3,
        alpha: args.costs.alpha,
    };
    let points = grids.points(args.method);
    info!("{} with {} grid point(s)", args.method, points.len());
    let outcome = grid_search(&data, &points, &settings, args.seed)?;
    let trained = outcome.trained;
    info!(
        "selected {}; status {:?}, gap {:?}, objective {:?}",
        outcome.hyper, trained.status, trained.gap, trained.objective
    );
    let train_acc = trained.model.accuracy(&data)?;
    let file = ModelFile::new(outcome.hyper, data.scaling.clone(), trained);
    fs::write(&args.out, file.to_json()?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("training accuracy {train_acc:.2}%");
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model)
        .with_context(|| format!("reading {}", args.model.display()))?;
    let file = ModelFile::from_json(&text)?;
    let (rows, labels) = if args.unlabeled {
        let text = fs::read_to_string(&args.data)
            .with_context(|| format!("reading {}", args.data.display()))?;
        (parse_unlabeled(&text, args.header, b',')?, None)
    } else {
        let options = CsvOptions {
            label_column: args.label_column,
            has_header: args.header,
            ..CsvOptions::default()
        };
        let raw = load_csv(&args.data, &options)
            .with_context(|| format!("reading {}", args.data.display()))?;
        (raw.features, Some(raw.labels))
    };
    let predicted = rows
        .iter()
        .map(|x| file.predict_raw(x))
        .collect::<Result<Vec<i8>, _>>()?;
    let mut text = String::new();
    for y in &predicted {
        text.push_str(&format!("{y}\n"));
    }
    write_or_print(args.out.as_deref(), &text)?;
    if let Some(labels) = labels {
        let correct = predicted
            .iter()
            .zip(&labels)
            .filter(|(a, b)| a == b)
            .count();
        let acc = 100.0 * correct as f64 / labels.len().max(1) as f64;
        eprintln!("accuracy {acc:.2}% ({correct}/{})", labels.len());
    }
    Ok(())
}

fn experiment(args: ExperimentArgs, exec: Exec) -> Result<()> {
    let mut spec = ExperimentSpec::load(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    if exec == Exec::Sequential {
        spec.exec = Exec::Sequential;
    }
    spec.validate()?;
    let report = run_experiment(&spec)?;
    let written = write_report(&report, &args.out, b',')?;
    for path in &written {
        info!("wrote {}", path.display());
    }
    print!("{}", aggregate_table(&report));
    Ok(())
}

fn build(data: &Dataset, method: Method, hyper: &Hyper, depth: usize) -> Result<MinlpModel> {
    Ok(match (method, hyper) {
        (Method::Octsvm, Hyper::Octsvm { c1, c2, c3 }) => build_octsvm_model(
            data,
            &TreeTopology::new(depth),
            &ModelConfig::with_costs(*c1, *c2, *c3, depth),
        )?,
        (Method::Resvm, Hyper::Resvm { c1, c2 }) => {
            build_resvm_model(data, *c1, *c2, TrainSettings::default().coef_bound)?
        }
        _ => bail!("{method} has no mixed-integer model"),
    })
}

fn export_model(args: ExportArgs) -> Result<()> {
    let costs = &args.costs;
    let (data, depth) = match (&args.spec, &args.data) {
        (Some(path), _) => {
            let spec = ExperimentSpec::load(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let raw = load_csv(&spec.dataset, &spec.csv_options())
                .with_context(|| format!("reading {}", spec.dataset.display()))?;
            let depth = costs.depth.unwrap_or(spec.octsvm_depth);
            (normalize_features(&raw.features, raw.labels)?, depth)
        }
        (None, Some(path)) => {
            let data = DataArgs {
                data: path.clone(),
                label_column: args.label_column,
                header: args.header,
            };
            (data.load()?, costs.depth.unwrap_or(2))
        }
        (None, None) => bail!("give either --spec or --data"),
    };
    let hyper = match args.method {
        Method::Octsvm => Hyper::Octsvm {
            c1: single(&costs.c1, "c1")?,
            c2: single(&costs.c2, "c2")?,
            c3: single(&costs.c3, "c3")?,
        },
        Method::Resvm => Hyper::Resvm {
            c1: single(&costs.c1, "c1")?,
            c2: single(&costs.c2, "c2")?,
        },
        Method::Cart => bail!("CART has no mixed-integer model"),
    };
    let model = build(&data, args.method, &hyper, depth)?;
    write_or_print(args.out.as_deref(), &write_lp(&model))
}

fn oracle(args: OracleArgs, exec: Exec) -> Result<()> {
    let data = args.data.load()?;
    let hyper = Hyper::Octsvm {
        c1: args.c1,
        c2: args.c2,
        c3: args.c3,
    };
    let model = build(&data, Method::Octsvm, &hyper, args.depth)?;
    let brute = brute_force_solve(&model, exec)?;
    let bnb = branch_and_bound(&model, &Budget::exact());
    let (Some(a), Some(b)) = (brute.objective(), bnb.objective()) else {
        bail!(
            "no feasible solution found (enumeration {:?}, branch-and-bound {:?})",
            brute.status,
            bnb.status
        );
    };
    let diff = (a - b).abs() / a.abs().max(1.0);
    println!("enumeration      {a:.9} ({:.2} s)", brute.wall_time_secs);
    println!(
        "branch-and-bound {b:.9} ({:.2} s, {} nodes)",
        bnb.wall_time_secs, bnb.nodes_explored
    );
    println!("relative difference {diff:.3e}");
    if diff > args.tol {
        bail!(
            "objectives differ by {diff:.3e} (tolerance {:.1e})",
            args.tol
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let result = match cli.command {
        Command::Train(a) => train(a, exec),
        Command::Predict(a) => predict(a),
        Command::Experiment(a) => experiment(a, exec),
        Command::ExportModel(a) => export_model(a),
        Command::Oracle(a) => oracle(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
