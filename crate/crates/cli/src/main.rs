use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fairwrap::boosting::{InductionConfig, Scoring};
use fairwrap::data::{Dataset, Grouping};
use fairwrap::estimators::{init_stump, label_plugin, GaussianPlugin, ProxyConfig, ProxyGroups};
use fairwrap::fairness::{
    run_cvar, run_eoo, run_sp, CvarSpec, DriverOutcome, EooSpec, SpDirection, SpSpec, StrategySpec,
};
use fairwrap::io::{load_dataset, split_plan, ModelFile, Provenance, SchemaConfig};
use fairwrap::measures::TargetPosterior;
use fairwrap::metrics::{evaluate, wrap_dataset};
use fairwrap::model::{AlphaTree, ClipBound, NodeId, NodeRef};

#[derive(Parser)]
#[command(
    name = "fairwrap",
    version,
    about = "Fairness post-processing by alpha-tree wrapping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a wrapping tree and save it as a model file.
    Train {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-iteration trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score a dataset with a saved model; appends a `q_fair` column.
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare black-box and wrapped scores on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a model's tree with each leaf's effect.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
    /// Run training and emit only the per-iteration metric rows.
    Trace {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign rows to folds and roles for cross-validation.
    Split {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        test_fold: usize,
        #[arg(long, env = "FAIRWRAP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyName {
    Cvar,
    Eoo,
    Sp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// One leaf per sensitive group.
    Stump,
    /// Leaves of a tree predicting the group from the other features.
    Proxy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    /// Use the schema's target column.
    Target,
    /// Gaussian class-conditional plug-in fitted on the data.
    Gaussian,
    /// The observed labels.
    Labels,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    strategy: StrategyName,
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "K", default_value_t = 2)]
    k: usize,
    #[arg(long, default_value = "up")]
    direction: SpDirection,
    #[arg(long, default_value = "conservative")]
    scoring: Scoring,
    #[arg(long, default_value_t = 32)]
    iterations: usize,
    #[arg(long, value_enum, default_value_t = Init::Stump)]
    init: Init,
    #[arg(long, default_value_t = 8)]
    proxy_depth: usize,
    /// Posterior estimate used by the EOO strategy.
    #[arg(long, value_enum, default_value_t = Estimator::Gaussian)]
    estimator: Estimator,
}

impl TrainArgs {
    fn strategy(&self) -> StrategySpec {
        match self.strategy {
            StrategyName::Cvar => StrategySpec::Cvar(CvarSpec {
                beta: self.beta,
                ..CvarSpec::default()
            }),
            StrategyName::Eoo => StrategySpec::Eoo(EooSpec {
                epsilon: self.epsilon.unwrap_or(EooSpec::default().epsilon),
                k: self.k,
            }),
            StrategyName::Sp => StrategySpec::Sp(SpSpec {
                epsilon: self.epsilon.unwrap_or(SpSpec::default().epsilon),
                direction: self.direction,
            }),
        }
    }

    fn induction(&self) -> InductionConfig {
        InductionConfig {
            max_iterations: self.iterations,
            scoring: self.scoring,
            ..InductionConfig::default()
        }
    }
}

fn load(input: &Input, clip: Option<ClipBound>) -> Result<Dataset> {
    let mut schema = SchemaConfig::load(&input.schema)
        .with_context(|| format!("reading schema {}", input.schema.display()))?;
    if let Some(b) = clip {
        schema.clip_b = b.get();
    }
    load_dataset(&input.data, &schema)
        .with_context(|| format!("reading data {}", input.data.display()))
}

fn write_new(path: &Path, text: &str) -> Result<()> {
    let mut f = OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_new(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_training(
    args: &TrainArgs,
) -> Result<(DriverOutcome, StrategySpec, InductionConfig, ClipBound)> {
    let ds = load(&args.input, None)?;
    let spec = args.strategy();
    spec.validate()?;
    let cfg = args.induction();
    cfg.validate()?;
    let (grouping, tree0): (Grouping, AlphaTree) = match args.init {
        Init::Stump => (ds.grouping().clone(), init_stump(&ds)),
        Init::Proxy => {
            let proxy = ProxyGroups::fit(
                &ds,
                &ProxyConfig {
                    max_depth: args.proxy_depth,
                    ..ProxyConfig::default()
                },
            )?;
            (proxy.grouping(&ds)?, proxy.init_tree())
        }
    };
    let outcome = match &spec {
        StrategySpec::Cvar(c) => run_cvar(&ds, &grouping, &tree0, c, &cfg)?,
        StrategySpec::Sp(s) => run_sp(&ds, &grouping, &tree0, s, &cfg)?,
        StrategySpec::Eoo(e) => {
            let eta = match args.estimator {
                Estimator::Target => match ds.target() {
                    Some(t) => TargetPosterior::new(t.to_vec())?,
                    None => bail!("--estimator target needs a target_column in the schema"),
                },
                Estimator::Gaussian => GaussianPlugin::fit(&ds, &[])?.predict_dataset(&ds)?,
                Estimator::Labels => label_plugin(&ds),
            };
            run_eoo(&ds, &grouping, &tree0, &eta, e, &cfg)?
        }
    };
    Ok((outcome, spec, cfg, ds.clip()))
}

fn apply(model: &Path, input: &Input, out: &Path) -> Result<()> {
    let m = ModelFile::load(model).with_context(|| format!("reading model {}", model.display()))?;
    let ds = load(input, Some(m.clip))?;
    let q = wrap_dataset(&m.tree, &ds)?;
    let mut rdr = csv::Reader::from_path(&input.data)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = rdr.headers()?.clone();
    header.push_field("q_fair");
    wtr.write_record(&header)?;
    for (rec, s) in rdr.records().zip(&q) {
        let mut rec = rec?;
        rec.push_field(&s.value().to_string());
        wtr.write_record(&rec)?;
    }
    write_new(out, &String::from_utf8(wtr.into_inner()?)?)
}

fn describe(tree: &AlphaTree, node: NodeId, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match tree.node(node) {
        NodeRef::Split { test, left, right } => {
            out.push_str(&format!("{pad}if {test}\n"));
            describe(tree, left, depth + 1, out);
            out.push_str(&format!("{pad}else\n"));
            describe(tree, right, depth + 1, out);
        }
        NodeRef::Leaf(l) => out.push_str(&format!(
            "{pad}leaf {} alpha={} {} (edge={}, mass={})\n",
            l.id,
            l.alpha.get(),
            l.effect().as_str(),
            l.edge,
            l.mass
        )),
    }
}

fn inspect(model: &Path) -> Result<String> {
    let m = ModelFile::load(model).with_context(|| format!("reading model {}", model.display()))?;
    let mut out = format!(
        "strategy={} scoring={:?} clip_b={} iterations={} digest={}\nleaves={} depth={}\n",
        m.provenance.strategy,
        m.scoring,
        m.clip.get(),
        m.provenance.iterations,
        m.provenance.config_digest,
        m.tree.n_leaves(),
        m.tree.depth()
    );
    describe(&m.tree, m.tree.root(), 0, &mut out);
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { train, out, trace } => {
            let (outcome, spec, cfg, clip) = run_training(&train)?;
            let model = ModelFile {
                clip,
                scoring: cfg.scoring,
                provenance: Provenance::new(&spec, &cfg, outcome.iterations),
                tree: outcome.tree,
            };
            write_new(&out, &model.to_json()?)?;
            if let Some(t) = trace {
                write_new(&t, &outcome.trace.to_csv())?;
            }
            eprintln!(
                "{} steps, stopped: {:?}, {} leaves",
                outcome.iterations,
                outcome.stop,
                model.tree.n_leaves()
            );
        }
        Command::Trace { train, out } => {
            let (outcome, ..) = run_training(&train)?;
            emit(out.as_deref(), &outcome.trace.to_csv())?;
        }
        Command::Apply { model, input, out } => apply(&model, &input, &out)?,
        Command::Eval {
            model,
            input,
            beta,
            out,
        } => {
            let m = ModelFile::load(&model)
                .with_context(|| format!("reading model {}", model.display()))?;
            let ds = load(&input, Some(m.clip))?;
            let report = evaluate(&ds, &m.tree, ds.grouping(), beta)?;
            emit(out.as_deref(), &report.to_csv())?;
        }
        Command::Inspect { model } => print!("{}", inspect(&model)?),
        Command::Split {
            input,
            folds,
            test_fold,
            seed,
            out,
        } => {
            if test_fold >= folds {
                bail!("--test-fold must be below --folds");
            }
            let ds = load(&input, None)?;
            let plan = split_plan(ds.grouping(), folds, seed)?;
            for g in &plan.small_groups {
                eprintln!("warning: group `{g}` has fewer rows than folds");
            }
            let roles = plan.roles(test_fold);
            let mut text = String::from("row,fold,role\n");
            for (r, (f, role)) in plan.fold.iter().zip(&roles).enumerate() {
                text.push_str(&format!("{r},{f},{}\n", role.as_str()));
            }
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
